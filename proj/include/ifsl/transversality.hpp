#pragma once

#include "ifsl/maps.hpp"
#include "ifsl/symbolic.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace ifsl {

// S_i^lambda(x) = S_i(x) + lambda_i, lambda in the sup-norm ball around center.
class TranslationFamily {
public:
    Ifs base;
    std::vector<Q> center;
    Q radius;
    std::vector<Q> lambda;

    TranslationFamily() = default;
    TranslationFamily(Ifs b, std::vector<Q> c, Q r) : base(std::move(b)), center(std::move(c)), radius(std::move(r)) {
        if (static_cast<int>(center.size()) != base.m()) throw InputError("family center needs one entry per map");
        if (radius < 0) throw InputError("family radius must be non-negative");
        for (int i = 1; i <= base.m(); ++i) {
            // image of X under every member of the family
            Interval img = base[i].image(base.X) + Interval(center[i - 1] - radius, center[i - 1] + radius);
            if (!img.subset_of(base.X)) throw ConstructionError("translated images leave X for some lambda in the ball");
        }
        lambda = center;
    }

    int m() const { return base.m(); }

    bool in_ball(const std::vector<Q>& l) const {
        if (l.size() != center.size()) return false;
        for (std::size_t i = 0; i < l.size(); ++i)
            if (qabs(l[i] - center[i]) > radius) return false;
        return true;
    }

    void set_lambda(std::vector<Q> l) {
        if (!in_ball(l)) throw PreconditionError("lambda outside the parameter ball");
        lambda = std::move(l);
    }

    // the member system at lambda
    Ifs at(const std::vector<Q>& l) const {
        if (!in_ball(l)) throw PreconditionError("lambda outside the parameter ball");
        std::vector<IfsMap> maps = base.maps;
        for (std::size_t i = 0; i < maps.size(); ++i) {
            maps[i].t += l[i];
            maps[i].canon();
        }
        return Ifs(maps, base.X, base.beta, base.rho);
    }
    Ifs current() const { return at(lambda); }

    // rho_i* = sup_X |S_i'|, certified for non-affine maps
    const std::vector<Q>& rho_star() const { return base.sup_ratios(); }
};

// ---------------------------------------------------------------- pairwise gradient bound

struct PairBound {
    int i = 0, j = 0;
    Q bound;  // 1 - rho_i* - rho_j*
};

struct TransversalityCertificate {
    std::vector<PairBound> pair_bounds;
    Q global;
    Q zeta_candidate;  // global / 2
    std::string scope = "gradient clause only; closeness clause over all word pairs not verified";
};

inline std::optional<TransversalityCertificate> lemma1_check(const TranslationFamily& fam) {
    const auto& rs = fam.rho_star();
    TransversalityCertificate c;
    for (int i = 1; i <= fam.m(); ++i)
        for (int j = i + 1; j <= fam.m(); ++j) {
            Q b = 1 - rs[i - 1] - rs[j - 1];
            if (b <= 0) return std::nullopt;
            c.pair_bounds.push_back({i, j, b});
            if (c.pair_bounds.size() == 1 || b < c.global) c.global = b;
        }
    c.zeta_candidate = c.global / 2;
    return c;
}

// ---------------------------------------------------------------- gradients

struct Gradient {
    std::vector<double> value;            // d Pi / d lambda_z, z = 1..m
    std::optional<std::vector<Q>> exact;  // closed form for affine maps
    double tail = 0;                      // per-coordinate truncation bound
};

namespace detail {

// x_k ~ Pi(sigma^k w) for k = 0..n, from a backward pass of length 2n
inline std::vector<double> shifted_points(const Ifs& ifs, const std::vector<double>& lam, const InfiniteWordSpec& w,
                                          std::size_t n) {
    std::size_t N = 2 * n + 8;
    std::vector<double> x(N + 1);
    x[N] = ifs.hull().mid().get_d();
    for (std::size_t k = N; k-- > 0;) {
        int s = w.at(k);
        x[k] = ifs[s](x[k + 1]) + lam[static_cast<std::size_t>(s - 1)];
    }
    x.resize(n + 1);
    return x;
}

// rho_{w|l-1} for l = 1..n (entry l-1), product of S'_{w_k}(Pi(sigma^k w)) over k < l
inline std::vector<double> prefix_derivatives(const Ifs& ifs, const std::vector<double>& lam, const InfiniteWordSpec& w,
                                              std::size_t n) {
    auto x = shifted_points(ifs, lam, w, n);
    std::vector<double> out(n);
    double p = 1;
    for (std::size_t l = 1; l <= n; ++l) {
        out[l - 1] = p;
        if (l < n) p *= ifs[w.at(l - 1)].jet(x[l]).d;
    }
    return out;
}

inline std::vector<double> to_doubles(const std::vector<Q>& v) {
    std::vector<double> out;
    for (const auto& q : v) out.push_back(q.get_d());
    return out;
}

// sum over positions l with w_l = z of prod_{k<l} r_{w_k}, summed as a geometric series
inline std::vector<Q> affine_gradient(const Ifs& ifs, const InfiniteWordSpec& w) {
    const int m = ifs.m();
    std::vector<Q> pre(static_cast<std::size_t>(m), Q(0)), per(static_cast<std::size_t>(m), Q(0));
    Q p = 1;
    for (int s : w.preperiod) {
        pre[static_cast<std::size_t>(s - 1)] += p;
        p *= ifs[s].r;
    }
    Q q = 1;
    for (int s : w.period) {
        per[static_cast<std::size_t>(s - 1)] += q;
        q *= ifs[s].r;
    }
    std::vector<Q> out(static_cast<std::size_t>(m));
    for (int z = 0; z < m; ++z) out[static_cast<std::size_t>(z)] = pre[static_cast<std::size_t>(z)] + p * per[static_cast<std::size_t>(z)] / (1 - q);
    return out;
}

inline double truncation_tail(const Ifs& ifs, std::size_t n) {
    double r = ifs.rho.get_d();
    return std::pow(r, static_cast<double>(n)) / (1 - r);
}

}  // namespace detail

inline Gradient projection_gradient(const TranslationFamily& fam, const InfiniteWordSpec& w, std::size_t n = 64) {
    if (n < 1) throw PreconditionError("projection_gradient needs n >= 1");
    const Ifs& ifs = fam.base;
    for (int s : w.preperiod) check_word({s}, ifs.m());
    for (int s : w.period) check_word({s}, ifs.m());
    Gradient g;
    if (ifs.affine()) {
        g.exact = detail::affine_gradient(ifs, w);
        g.value = detail::to_doubles(*g.exact);
        g.tail = 0;
        return g;
    }
    auto lam = detail::to_doubles(fam.lambda);
    auto rho = detail::prefix_derivatives(ifs, lam, w, n);
    g.value.assign(static_cast<std::size_t>(ifs.m()), 0.0);
    for (std::size_t l = 1; l <= n; ++l) g.value[static_cast<std::size_t>(w.at(l - 1) - 1)] += rho[l - 1];
    g.tail = detail::truncation_tail(ifs, n);
    return g;
}

// ---------------------------------------------------------------- E_z

struct EzResult {
    int first_i = 0, first_j = 0;  // i_1, j_1 (relabelled 1, 2 in the proof)
    double e1 = 0, e2 = 0;
    double tail = 0;  // |E_z - e_z| <= tail
    int p = 0;        // symbol minimising |E_z|
    double abs_ep = 0;
    double convex = 0;      // convex combination of |E_1|, |E_2|
    double telescoped = 0;  // (1 - rho_1*)|E_1| + (1 - rho_2*)|E_2|
    double rho_sum = 0;     // rho_1* + rho_2*
    bool chain_holds = false;
};

inline EzResult ez_values(const TranslationFamily& fam, const InfiniteWordSpec& i, const InfiniteWordSpec& j,
                          std::size_t n = 64) {
    if (i.first() == j.first()) throw PreconditionError("E_z needs words with different first symbols");
    EzResult r;
    r.first_i = i.first();
    r.first_j = j.first();
    auto gi = projection_gradient(fam, i, n), gj = projection_gradient(fam, j, n);
    const auto a = static_cast<std::size_t>(r.first_i - 1), b = static_cast<std::size_t>(r.first_j - 1);
    if (gi.exact) {
        r.e1 = Q((*gi.exact)[a] - (*gj.exact)[a] - 1).get_d();
        r.e2 = Q((*gi.exact)[b] - (*gj.exact)[b] + 1).get_d();
    } else {
        r.e1 = gi.value[a] - gj.value[a] - 1;
        r.e2 = gi.value[b] - gj.value[b] + 1;
    }
    r.tail = gi.tail + gj.tail;
    const auto& rs = fam.rho_star();
    double p1 = rs[a].get_d(), p2 = rs[b].get_d();
    r.p = std::abs(r.e1) <= std::abs(r.e2) ? r.first_i : r.first_j;
    r.abs_ep = std::min(std::abs(r.e1), std::abs(r.e2));
    r.telescoped = (1 - p1) * std::abs(r.e1) + (1 - p2) * std::abs(r.e2);
    r.convex = r.telescoped / (2 - p1 - p2);
    r.rho_sum = p1 + p2;
    const double slack = 2 * r.tail + 1e-12;
    r.chain_holds = r.convex < 1 && r.telescoped <= r.rho_sum + slack && r.abs_ep <= r.rho_sum + slack;
    return r;
}

// ---------------------------------------------------------------- finite differences

// Pi_lambda(w) in double by backward composition of depth n
inline double family_projection(const TranslationFamily& fam, const std::vector<double>& lam, const InfiniteWordSpec& w,
                                std::size_t n = 64) {
    double x = fam.base.hull().mid().get_d();
    for (std::size_t k = n; k-- > 0;) {
        int s = w.at(k);
        x = fam.base[s](x) + lam[static_cast<std::size_t>(s - 1)];
    }
    return x;
}

inline double gradient_fd_check(const TranslationFamily& fam, const InfiniteWordSpec& i, const InfiniteWordSpec& j,
                                double h, std::size_t n = 64) {
    if (!(h > 0 && h < fam.radius.get_d() / 10)) throw PreconditionError("step must lie in (0, radius/10)");
    auto gi = projection_gradient(fam, i, n), gj = projection_gradient(fam, j, n);
    auto lam = detail::to_doubles(fam.lambda);
    double worst = 0;
    for (int z = 0; z < fam.m(); ++z) {
        auto up = lam, dn = lam;
        up[static_cast<std::size_t>(z)] += h;
        dn[static_cast<std::size_t>(z)] -= h;
        double fu = family_projection(fam, up, i, n) - family_projection(fam, up, j, n);
        double fd = family_projection(fam, dn, i, n) - family_projection(fam, dn, j, n);
        double numeric = (fu - fd) / (2 * h);
        double exact = gi.value[static_cast<std::size_t>(z)] - gj.value[static_cast<std::size_t>(z)];
        worst = std::max(worst, std::abs(numeric - exact));
    }
    return worst;
}

}  // namespace ifsl
