#pragma once

#include "ifsl/maps.hpp"
#include "ifsl/separation.hpp"
#include "ifsl/symbolic.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <tuple>
#include <optional>
#include <string>
#include <vector>

namespace ifsl {

// ---------------------------------------------------------------- bump

// eps (x-(y-delta))^4 (x-(y+delta))^4 on [y-delta, y+delta], zero outside.
inline PolyPiece bump(const Q& delta, const Q& y, const Q& eps) { return PolyPiece::bump(delta, y, eps); }

// ---------------------------------------------------------------- multiplicative independence

enum class IndependenceKind { RationalRatio, IrrationalCertified, Unknown };

inline std::string to_string(IndependenceKind k) {
    switch (k) {
        case IndependenceKind::RationalRatio: return "RATIONAL_RATIO";
        case IndependenceKind::IrrationalCertified: return "IRRATIONAL_CERTIFIED";
        default: return "UNKNOWN";
    }
}

// log a / log b = p / q when RationalRatio, so a^q = b^p.
struct Independence {
    IndependenceKind kind = IndependenceKind::Unknown;
    long p = 0, q = 0;
};

namespace detail {

// Pairwise coprime base generating every input (gcd refinement, no factoring).
inline std::vector<mpz_class> coprime_base(const std::vector<mpz_class>& xs) {
    std::vector<mpz_class> b;
    for (const auto& x : xs)
        if (x > 1) b.push_back(x);
    for (bool changed = true; changed;) {
        changed = false;
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        for (std::size_t i = 0; i < b.size() && !changed; ++i)
            for (std::size_t j = i + 1; j < b.size() && !changed; ++j) {
                mpz_class g = gcd(b[i], b[j]);
                if (g == 1) continue;
                mpz_class x = b[i] / g, y = b[j] / g;
                b.erase(b.begin() + static_cast<long>(j));
                b.erase(b.begin() + static_cast<long>(i));
                for (const auto& v : {x, y, g})
                    if (v > 1) b.push_back(v);
                changed = true;
            }
    }
    return b;
}

inline std::vector<long> base_exponents(mpz_class n, const std::vector<mpz_class>& base) {
    std::vector<long> e(base.size(), 0);
    for (std::size_t k = 0; k < base.size(); ++k)
        while (mpz_divisible_p(n.get_mpz_t(), base[k].get_mpz_t())) {
            n /= base[k];
            ++e[k];
        }
    if (n != 1) throw ConstructionError("coprime base does not generate input");
    return e;
}

}  // namespace detail

// log a / log b is rational iff the exponent vectors of a and b over a common
// coprime base are parallel. Exact for rationals of any size.
inline Independence log_ratio_rationality(const Q& a_in, const Q& b_in) {
    Q a = a_in, b = b_in;
    a.canonicalize();
    b.canonicalize();
    if (!(0 < a && a < 1 && 0 < b && b < 1)) throw PreconditionError("log_ratio_rationality needs a, b in (0,1)");
    auto base = detail::coprime_base({a.get_num(), a.get_den(), b.get_num(), b.get_den()});
    auto an = detail::base_exponents(a.get_num(), base), ad = detail::base_exponents(a.get_den(), base);
    auto bn = detail::base_exponents(b.get_num(), base), bd = detail::base_exponents(b.get_den(), base);
    std::vector<long> ea(base.size()), eb(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        ea[k] = an[k] - ad[k];
        eb[k] = bn[k] - bd[k];
    }
    long p = 0, q = 0;
    for (std::size_t k = 0; k < base.size(); ++k) {
        if (ea[k] == 0 && eb[k] == 0) continue;
        if (ea[k] == 0 || eb[k] == 0) return {IndependenceKind::IrrationalCertified, 0, 0};
        long g = std::gcd(ea[k], eb[k]);
        p = ea[k] / g;
        q = eb[k] / g;
        if (q < 0) {
            p = -p;
            q = -q;
        }
        break;
    }
    if (p <= 0 || q <= 0) return {IndependenceKind::IrrationalCertified, 0, 0};
    for (std::size_t k = 0; k < base.size(); ++k)
        if (q * ea[k] != p * eb[k]) return {IndependenceKind::IrrationalCertified, 0, 0};
    return {IndependenceKind::RationalRatio, p, q};
}

// ---------------------------------------------------------------- Dirichlet pairs

struct DirichletPair {
    long i = 0, j = 0;
    Q ratio;  // a^j / b^i
    bool verified_200 = false, verified_400 = false;
};

// b^{1/j} < a^j b^{-i} < b^{-1/j}, i.e. j^2 log a - (ij+1) log b > 0 and j^2 log a - (ij-1) log b < 0.
inline bool dirichlet_inequality_holds(const Q& a, const Q& b, long i, long j, mpfr_prec_t prec) {
    Q jj = Q(j) * j, ij = Q(i) * j;
    int lower = log_combination_sign({{jj, a}, {-(ij + 1), b}}, prec);
    int upper = log_combination_sign({{jj, a}, {-(ij - 1), b}}, prec);
    return lower > 0 && upper < 0;
}

// First continued-fraction convergent i/j of log a / log b with j >= j_min and
// |log a/log b - i/j| < 1/j^2.
inline DirichletPair dirichlet_pair(const Q& a, const Q& b, long j_min) {
    if (j_min < 1) throw PreconditionError("dirichlet_pair needs j_min >= 1");
    if (log_ratio_rationality(a, b).kind != IndependenceKind::IrrationalCertified)
        throw PreconditionError("dirichlet_pair needs log a / log b certified irrational");
    const mpfr_prec_t prec = 1024;
    Mpfr theta(prec), la(prec), lb(prec), x(prec), fl(prec), tmp(prec), err(prec), lim(prec);
    mpfr_log_q(la.get(), a, MPFR_RNDN);
    mpfr_log_q(lb.get(), b, MPFR_RNDN);
    mpfr_div(theta.get(), la.get(), lb.get(), MPFR_RNDN);
    mpfr_set(x.get(), theta.get(), MPFR_RNDN);
    // convergents h/k with h_{-1} = 1, k_{-1} = 0, h_{-2} = 0, k_{-2} = 1
    mpz_class h1 = 1, k1 = 0, h2 = 0, k2 = 1;
    for (int step = 0; step < 400; ++step) {
        mpfr_floor(fl.get(), x.get());
        mpz_class c;
        mpfr_get_z(c.get_mpz_t(), fl.get(), MPFR_RNDN);
        mpz_class h = c * h1 + h2, k = c * k1 + k2;
        h2 = h1;
        k2 = k1;
        h1 = h;
        k1 = k;
        if (!k.fits_slong_p() || !h.fits_slong_p()) throw ResourceLimit("Dirichlet denominator exceeds machine integers");
        if (k >= j_min) {
            // |theta - h/k| < 1/k^2
            Q hk(h, k);
            mpfr_set_q(tmp.get(), hk.get_mpq_t(), MPFR_RNDN);
            mpfr_sub(err.get(), theta.get(), tmp.get(), MPFR_RNDN);
            mpfr_abs(err.get(), err.get(), MPFR_RNDN);
            Q inv(1, k * k);
            mpfr_set_q(lim.get(), inv.get_mpq_t(), MPFR_RNDN);
            if (mpfr_cmp(err.get(), lim.get()) < 0) {
                DirichletPair d;
                d.i = h.get_si();
                d.j = k.get_si();
                d.ratio = qpow(a, d.j) / qpow(b, d.i);
                d.verified_200 = dirichlet_inequality_holds(a, b, d.i, d.j, 200);
                d.verified_400 = dirichlet_inequality_holds(a, b, d.i, d.j, 400);
                if (!d.verified_200 && !d.verified_400) {
                    bool deeper = false;
                    for (mpfr_prec_t p = 800; p <= (1 << 15) && !deeper; p *= 2) deeper = dirichlet_inequality_holds(a, b, d.i, d.j, p);
                    if (!deeper) throw ConstructionError("Dirichlet inequality bracket could not be separated");
                }
                return d;
            }
        }
        mpfr_sub(tmp.get(), x.get(), fl.get(), MPFR_RNDN);
        if (mpfr_zero_p(tmp.get())) break;
        mpfr_ui_div(x.get(), 1, tmp.get(), MPFR_RNDN);
    }
    throw ResourceLimit("continued fraction exhausted working precision");
}

// ---------------------------------------------------------------- common fixed points

struct CommonFixedPointWitness {
    Word omega, tau;
    Q x_tilde;
    bool x_exact = true;
    Q a, b;  // |S_omega'(x~)|, |S_tau'(x~)|
    Independence independence;
};

// Validates the invariants and fills a, b and the independence test.
inline CommonFixedPointWitness make_witness(const Ifs& ifs, Word omega, Word tau, const Q& x) {
    check_word(omega, ifs.m());
    check_word(tau, ifs.m());
    if (omega.empty() || tau.empty()) throw PreconditionError("witness words must be non-empty");
    if (omega.front() == tau.front()) throw PreconditionError("witness words need distinct first symbols");
    if (omega.back() == tau.back()) throw PreconditionError("witness words need distinct last symbols");
    CommonFixedPointWitness w;
    w.omega = std::move(omega);
    w.tau = std::move(tau);
    w.x_tilde = x;
    auto [vo, dov] = eval_word<Q>(ifs, w.omega, x);
    auto [vt, dtv] = eval_word<Q>(ifs, w.tau, x);
    w.x_exact = vo == x && vt == x;
    if (!w.x_exact) {
        Q tol = ifs.hull().diam() / qpow(Q(10), 13);
        if (qabs(vo - x) > tol || qabs(vt - x) > tol) throw PreconditionError("x~ is not a common fixed point");
    }
    w.a = qabs(dov);
    w.b = qabs(dtv);
    if (!(0 < w.a && w.a < 1 && 0 < w.b && w.b < 1)) throw PreconditionError("witness derivatives must lie in (0,1)");
    if (w.x_exact) w.independence = log_ratio_rationality(w.a, w.b);
    return w;
}

inline void check_witness(const Ifs& ifs, const CommonFixedPointWitness& w) {
    auto fresh = make_witness(ifs, w.omega, w.tau, w.x_tilde);
    if (fresh.a != w.a || fresh.b != w.b) throw PreconditionError("witness derivatives do not match the system");
}

// Smallest (|omega|+|tau|, omega, tau) with omega_1 < tau_1, distinct last symbols
// and equal exact fixed points; affine systems only.
inline std::optional<CommonFixedPointWitness> find_common_fixed_point(const Ifs& ifs, int max_len,
                                                                      std::size_t budget = kDefaultWordBudget) {
    if (!ifs.affine()) throw InputError("unsupported input: common fixed point search needs an affine system");
    if (max_len < 1) throw PreconditionError("max_len must be >= 1");
    std::map<Q, std::vector<Word>> by_point;
    std::size_t nodes = 0;
    std::vector<Word> words;
    detail::all_words(ifs.m(), max_len, budget, words);
    for (const auto& w : words) {
        if (++nodes > budget) throw ResourceLimit("common fixed point search exceeded word budget");
        by_point[compose_affine(ifs, w).fixed_point()].push_back(w);
    }
    std::optional<std::pair<Word, Word>> best;
    auto key = [](const Word& u, const Word& v) { return std::make_tuple(u.size() + v.size(), u, v); };
    for (const auto& [x, ws] : by_point)
        for (const auto& u : ws)
            for (const auto& v : ws) {
                if (u.front() >= v.front() || u.back() == v.back()) continue;
                if (!best || key(u, v) < key(best->first, best->second)) best = {u, v};
            }
    if (!best) return std::nullopt;
    return make_witness(ifs, best->first, best->second, compose_affine(ifs, best->first).fixed_point());
}

// ---------------------------------------------------------------- h_r family

struct HrFamily {
    long i = 0, j = 0, root = 0;                       // root = floor(sqrt j)
    std::vector<std::pair<long, long>> multiplicities;  // (j (root - r), i r)
    std::vector<Word> words;
    std::vector<Q> derivatives;  // a^{j(root-r)} b^{ir}
    Q step_ratio;                // h_r' / h_{r+1}' = a^j / b^i
    bool ratio_bound = false;    // b^{1/sqrt j} < step_ratio < b^{-1/sqrt j}
};

namespace detail {

// |j log a - i log b| * sqrt(j) < -log b with directed rounding
inline bool sqrt_ratio_bound(const Q& a, const Q& b, long i, long j, mpfr_prec_t prec = 256) {
    Mpfr la_lo(prec), la_hi(prec), lb_lo(prec), lb_hi(prec), x_lo(prec), x_hi(prec), t(prec), s(prec);
    mpfr_log_q(la_lo.get(), a, MPFR_RNDD);
    mpfr_log_q(la_hi.get(), a, MPFR_RNDU);
    mpfr_log_q(lb_lo.get(), b, MPFR_RNDD);
    mpfr_log_q(lb_hi.get(), b, MPFR_RNDU);
    // x = j log a - i log b, i >= 0
    mpfr_mul_si(x_lo.get(), la_lo.get(), j, MPFR_RNDD);
    mpfr_mul_si(t.get(), lb_hi.get(), i, MPFR_RNDU);
    mpfr_sub(x_lo.get(), x_lo.get(), t.get(), MPFR_RNDD);
    mpfr_mul_si(x_hi.get(), la_hi.get(), j, MPFR_RNDU);
    mpfr_mul_si(t.get(), lb_lo.get(), i, MPFR_RNDD);
    mpfr_sub(x_hi.get(), x_hi.get(), t.get(), MPFR_RNDU);
    mpfr_abs(x_lo.get(), x_lo.get(), MPFR_RNDU);
    mpfr_abs(x_hi.get(), x_hi.get(), MPFR_RNDU);
    mpfr_max(x_hi.get(), x_hi.get(), x_lo.get(), MPFR_RNDU);
    mpfr_sqrt_ui(s.get(), static_cast<unsigned long>(j), MPFR_RNDU);
    mpfr_mul(x_hi.get(), x_hi.get(), s.get(), MPFR_RNDU);
    mpfr_neg(t.get(), lb_hi.get(), MPFR_RNDD);  // -log b, rounded down
    return mpfr_cmp(x_hi.get(), t.get()) < 0;
}

inline long isqrt(long j) {
    long r = static_cast<long>(std::sqrt(static_cast<double>(j)));
    while (r * r > j) --r;
    while ((r + 1) * (r + 1) <= j) ++r;
    return r;
}

}  // namespace detail

// h_r = omega^{j(root - r)} tau^{i r}, r = 0..root-1.
inline HrFamily build_hr_family(const CommonFixedPointWitness& w, long i, long j,
                                std::size_t max_word_length = std::size_t{1} << 22) {
    if (j < 1 || i < 0) throw PreconditionError("build_hr_family needs j >= 1 and i >= 0");
    HrFamily f;
    f.i = i;
    f.j = j;
    f.root = detail::isqrt(j);
    for (long r = 0; r < f.root; ++r) {
        long mo = j * (f.root - r), mt = i * r;
        std::size_t len = static_cast<std::size_t>(mo) * w.omega.size() + static_cast<std::size_t>(mt) * w.tau.size();
        if (len > max_word_length) throw ResourceLimit("h_r word exceeds the length budget");
        f.multiplicities.emplace_back(mo, mt);
        f.words.push_back(concat(repeat(w.omega, static_cast<std::size_t>(mo)), repeat(w.tau, static_cast<std::size_t>(mt))));
        f.derivatives.push_back(qpow(w.a, mo) * qpow(w.b, mt));
    }
    f.step_ratio = qpow(w.a, j) / qpow(w.b, i);
    f.ratio_bound = detail::sqrt_ratio_bound(w.a, w.b, i, j);
    return f;
}

// ---------------------------------------------------------------- bump perturbation separating two codings

struct PerturbResult {
    Ifs perturbed;
    int case_id = 0;  // 1..4
    long L = 0, N = 0;
    Q delta, eps, y;
    InfiniteWordSpec i, j;  // after the normalisations of the case analysis
    Q factor;               // separation >= factor * eps * delta^8
    Q lower_bound;
    Interval separation;  // enclosure of Pi(i) - Pi(j) under the perturbed system
    int sign = 0;
    Q distance;
};

namespace detail {

inline Q floor_q(const Q& x) {
    mpz_class z;
    mpz_fdiv_q(z.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return Q(z);
}

inline Interval round_out(const Interval& J, long bits) {
    Q s = qpow(Q(2), bits);
    Q lo = floor_q(J.lo * s) / s;
    Q hi = -floor_q(-J.hi * s) / s;
    return {lo, hi};
}

// S_{w|n}(X), rounded outward to dyadics at each step; contains Pi(w).
inline Interval project_enclosure(const Ifs& ifs, const InfiniteWordSpec& w, std::size_t n, long bits) {
    Interval J = ifs.X;
    for (std::size_t k = n; k-- > 0;) J = round_out(ifs[w.at(k)].image(J), bits);
    return J;
}

// smallest l >= from with Pi(sigma^l w) == y; checks every distinct shift
inline std::optional<std::size_t> first_return(const Ifs& g, const InfiniteWordSpec& w, const Q& y, std::size_t from) {
    std::size_t limit = std::max(from, w.preperiod.size()) + w.period.size();
    for (std::size_t l = from; l < limit; ++l)
        if (project(g, shift(w, l), 0).value == y) return l;
    return std::nullopt;
}

inline Q shifted(const Ifs& g, const InfiniteWordSpec& w, std::size_t l) { return project(g, shift(w, l), 0).value; }

}  // namespace detail

// Bump on map i_1 centred at Pi(sigma i), with delta chosen by the four-case analysis.
inline PerturbResult perturb_separate(const Ifs& G, InfiniteWordSpec i, InfiniteWordSpec j, const Q& eps_budget) {
    if (!G.affine()) throw InputError("unsupported input: perturb_separate needs an affine base system");
    check_word(i, G.m());
    check_word(j, G.m());
    if (eps_budget <= 0) throw PreconditionError("perturbation budget must be positive");
    if (i.first() == j.first()) throw PreconditionError("words need distinct first symbols");
    if (project(G, i, 0).value != project(G, j, 0).value) throw PreconditionError("Pi(i) != Pi(j)");
    const int i1 = i.first();
    const Q& rho = G.rho;
    PerturbResult res;
    const Q y = detail::shifted(G, i, 1);

    // j returning to y through symbol i_1 closes a loop: replace j by its periodic part
    for (int guard = 0; guard < 64; ++guard) {
        std::optional<std::size_t> M;
        std::size_t limit = std::max<std::size_t>(2, j.preperiod.size()) + j.period.size();
        for (std::size_t n = 2; n < limit && !M; ++n)
            if (j.at(n - 1) == i1 && detail::shifted(G, j, n) == y) M = n;
        if (!M) break;
        j = InfiniteWordSpec::periodic(j.prefix(*M - 1));
    }

    auto Li = detail::first_return(G, i, y, 2);
    bool j_returns = detail::first_return(G, j, y, 2).has_value();
    if (Li) {
        Word per(i.prefix(*Li));
        per.erase(per.begin());
        i = InfiniteWordSpec({i1}, per);
    }
    res.case_id = Li ? (j_returns ? 3 : 2) : (j_returns ? 4 : 1);

    std::vector<Q> dists;
    auto add = [&](const Q& v) {
        if (v != y) dists.push_back(qabs(v - y));
    };
    if (res.case_id == 1 || res.case_id == 4) {
        long L = 2;
        while (!(1 - rho - 2 * qpow(rho, L) > 0)) ++L;
        res.L = L;
        res.factor = (1 - rho - 2 * qpow(rho, L)) / (1 - rho);
        for (long l = 2; l <= L; ++l) {
            add(detail::shifted(G, i, static_cast<std::size_t>(l)));
            add(detail::shifted(G, j, static_cast<std::size_t>(l)));
        }
    } else {
        res.L = static_cast<long>(*Li);
        Q head = 1 / (1 + qpow(rho, res.L - 1));
        long N = 2;
        while (!(head - qpow(rho, N) / (1 - rho) > 0)) ++N;
        res.N = N;
        res.factor = head - qpow(rho, N) / (1 - rho);
        for (long l = 2; l <= res.L - 1; ++l) add(detail::shifted(G, i, static_cast<std::size_t>(l)));
        for (long n = res.case_id == 3 ? 1 : 2; n <= N; ++n) add(detail::shifted(G, j, static_cast<std::size_t>(n)));
    }
    res.delta = dists.empty() ? G.X.width() / 4 : *std::min_element(dists.begin(), dists.end()) / 2;
    res.y = y;
    res.i = i;
    res.j = j;

    const Q ri = qabs(G[i1].r);
    const Q margin = qmin(ri - G.beta, rho - ri);
    if (margin <= 0) throw ConstructionError("perturb_separate needs strict bounds beta < |G'| < rho on the bumped map");
    const Q& d = res.delta;
    Q eps_deriv = margin / (16 * qpow(d, 7));
    Q eps_dist = eps_budget / (2 * (qpow(d, 8) + 8 * qpow(d, 7) + 54 * qpow(d, 6)));
    Q eps = qmin(eps_deriv, eps_dist);
    for (int attempt = 0;; ++attempt) {
        if (attempt > 60) throw ConstructionError("no admissible bump amplitude found");
        std::vector<IfsMap> maps = G.maps;
        maps[static_cast<std::size_t>(i1 - 1)].pieces.push_back(bump(d, y, eps));
        try {
            Ifs g(maps, G.X, G.beta, G.rho);
            Q dist = ifs_distance(G, g);
            if (dist < eps_budget) {
                res.perturbed = std::move(g);
                res.distance = dist;
                break;
            }
        } catch (const ConstructionError&) {
        }
        eps /= 2;
    }
    res.eps = eps;
    res.lower_bound = res.factor * eps * qpow(d, 8);

    // certified enclosure, width well below the lower bound
    double lb = log_q(res.lower_bound), lr = log_q(rho), lw = log_q(G.X.width());
    std::size_t n = static_cast<std::size_t>(std::ceil((lb - 20 * std::log(10.0) - lw) / lr)) + 2;
    long bits = static_cast<long>(std::ceil(-lb / std::log(2.0))) + 100 + static_cast<long>(std::log2(n + 1));
    Interval ei = detail::project_enclosure(res.perturbed, i, n + i.preperiod.size(), bits);
    Interval ej = detail::project_enclosure(res.perturbed, j, n + j.preperiod.size(), bits);
    res.separation = ei - ej;
    if (res.separation.lo > 0)
        res.sign = 1;
    else if (res.separation.hi < 0)
        res.sign = -1;
    else
        throw ConstructionError("separation sign could not be certified");
    return res;
}

// ---------------------------------------------------------------- interpolation to a common fixed point

struct InterpolationResult {
    double alpha = 0;
    double x_tilde = 0;
    double residual = 0;  // max |S^alpha_w(x~) - x~| over omega, tau
    bool exact = false;   // rational crossing found for affine inputs
    Q alpha_q, x_q;
    int iterations = 0;
};

namespace detail {

inline double mixed_word(const Ifs& G, const Ifs& Gt, double alpha, const Word& w, double x) {
    for (auto it = w.rbegin(); it != w.rend(); ++it) x = alpha * G[*it](x) + (1 - alpha) * Gt[*it](x);
    return x;
}

inline double mixed_fixed_point(const Ifs& G, const Ifs& Gt, double alpha, const Word& w) {
    double x = G.hull().mid().get_d();
    for (int it = 0; it < 5000; ++it) {
        double nx = mixed_word(G, Gt, alpha, w, x);
        if (nx == x) break;
        x = nx;
    }
    return x;
}

inline AffineQ mixed_affine(const Ifs& G, const Ifs& Gt, const Q& alpha, const Word& w) {
    AffineQ a;
    for (int s : w) {
        IfsMap f(alpha * G[s].r + (1 - alpha) * Gt[s].r, alpha * G[s].t + (1 - alpha) * Gt[s].t);
        a = append(a, f);
    }
    return a;
}

// continued-fraction convergents of x with denominators up to cap
inline std::vector<Q> convergents(double x, long cap) {
    std::vector<Q> out;
    mpz_class h1 = 1, k1 = 0, h2 = 0, k2 = 1;
    double v = x;
    for (int step = 0; step < 40; ++step) {
        double c = std::floor(v);
        mpz_class ci(static_cast<long>(c));
        mpz_class h = ci * h1 + h2, k = ci * k1 + k2;
        if (k > cap) break;
        out.emplace_back(h, k);
        out.back().canonicalize();
        h2 = h1;
        k2 = k1;
        h1 = h;
        k1 = k;
        double frac = v - c;
        if (frac < 1e-15) break;
        v = 1 / frac;
    }
    return out;
}

}  // namespace detail

// Bisection on alpha -> i(alpha) - j(alpha) for S^alpha = alpha G + (1 - alpha) Gt.
inline InterpolationResult interpolate_to_common_fixed_point(const Ifs& G, const Ifs& Gt, const Word& omega,
                                                             const Word& tau) {
    if (G.m() != Gt.m()) throw PreconditionError("interpolation needs equal map counts");
    check_word(omega, G.m());
    check_word(tau, G.m());
    if (omega.empty() || tau.empty()) throw PreconditionError("interpolation words must be non-empty");
    const double tol = 1e-13 * G.hull().diam().get_d();
    auto f = [&](double al) {
        return detail::mixed_fixed_point(G, Gt, al, omega) - detail::mixed_fixed_point(G, Gt, al, tau);
    };
    InterpolationResult res;
    auto finish = [&](double al) {
        res.alpha = al;
        double xo = detail::mixed_fixed_point(G, Gt, al, omega), xt = detail::mixed_fixed_point(G, Gt, al, tau);
        res.x_tilde = (xo + xt) / 2;
        res.residual = std::max(std::abs(detail::mixed_word(G, Gt, al, omega, res.x_tilde) - res.x_tilde),
                                std::abs(detail::mixed_word(G, Gt, al, tau, res.x_tilde) - res.x_tilde));
        if (G.affine() && Gt.affine()) {
            for (const Q& c : detail::convergents(al, 1'000'000)) {
                if (c < 0 || c > 1) continue;
                Q xo_q = detail::mixed_affine(G, Gt, c, omega).fixed_point();
                if (xo_q == detail::mixed_affine(G, Gt, c, tau).fixed_point()) {
                    res.exact = true;
                    res.alpha_q = c;
                    res.x_q = xo_q;
                    res.alpha = c.get_d();
                    res.x_tilde = xo_q.get_d();
                    res.residual = 0;
                    break;
                }
            }
        }
        return res;
    };
    double f0 = f(0.0);
    if (std::abs(f0) <= tol) return finish(0.0);
    double f1 = f(1.0);
    if (std::abs(f1) <= tol) return finish(1.0);
    if ((f0 < 0) == (f1 < 0)) throw ConstructionError("bracket: fixed points do not change order between alpha = 0 and 1");
    double lo = 0, hi = 1, flo = f0;
    for (res.iterations = 0; res.iterations < 200; ++res.iterations) {
        double mid = (lo + hi) / 2;
        if (mid == lo || mid == hi) break;
        double fm = f(mid);
        if (std::abs(fm) <= tol / 16) {
            lo = hi = mid;
            break;
        }
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return finish((lo + hi) / 2);
}

// Words omega = i|k u and tau = j|k v with distinct last symbols whose fixed
// points swap order between Gt (alpha = 0) and G (alpha = 1).
inline std::pair<Word, Word> select_interpolation_words(const Ifs& G, const Ifs& Gt, const InfiniteWordSpec& i,
                                                        const InfiniteWordSpec& j, int max_k = 40, int max_ext = 3) {
    if (i.first() == j.first()) throw PreconditionError("words need distinct first symbols");
    auto side = [&](double al, const Word& u, const Word& v) {
        double d = detail::mixed_fixed_point(G, Gt, al, u) - detail::mixed_fixed_point(G, Gt, al, v);
        return d > 0 ? 1 : (d < 0 ? -1 : 0);
    };
    std::vector<std::vector<Word>> ext(static_cast<std::size_t>(max_ext + 1));
    ext[0].push_back({});
    for (int d = 1; d <= max_ext; ++d)
        for (const auto& w : ext[static_cast<std::size_t>(d - 1)])
            for (int s = 1; s <= G.m(); ++s) ext[static_cast<std::size_t>(d)].push_back(concat(w, {s}));
    for (int k = 1; k <= max_k; ++k) {
        Word pi = i.prefix(static_cast<std::size_t>(k)), pj = j.prefix(static_cast<std::size_t>(k));
        for (int total = 0; total <= 2 * max_ext; ++total)
            for (int du = std::max(0, total - max_ext); du <= std::min(total, max_ext); ++du)
                for (const auto& u : ext[static_cast<std::size_t>(du)])
                    for (const auto& v : ext[static_cast<std::size_t>(total - du)]) {
                        Word om = concat(pi, u), ta = concat(pj, v);
                        if (om.back() == ta.back()) continue;
                        int s0 = side(0.0, om, ta), s1 = side(1.0, om, ta);
                        if (s0 != 0 && s1 != 0 && s0 != s1) return {om, ta};
                    }
    }
    throw ConstructionError("no word pair with swapped fixed points found");
}

// ---------------------------------------------------------------- irrationalisation

struct IrrationalizeResult {
    Ifs ifs;
    Q eps;
    std::vector<Q> y, z;  // y_p, p = 2..k and z_q, q = 2..l
    Q L_at_x;
    Q a_before, a_after, b;
    CommonFixedPointWitness witness;
    bool fixed_point_ok = false, tau_derivative_ok = false, omega_derivative_ok = false;
    Q distance;
};

inline IrrationalizeResult irrationalize(const Ifs& ifs, const CommonFixedPointWitness& w, const Q& eps_in) {
    if (eps_in <= 0) throw PreconditionError("irrationalize needs eps > 0");
    check_witness(ifs, w);
    if (!w.x_exact) throw PreconditionError("irrationalize needs an exact rational common fixed point");
    const Q& x = w.x_tilde;
    IrrationalizeResult res;
    auto tail_image = [&](const Word& u, std::size_t p) {
        return eval_word<Q>(ifs, Word(u.begin() + static_cast<long>(p - 1), u.end()), x).first;
    };
    for (std::size_t p = 2; p <= w.omega.size(); ++p) res.y.push_back(tail_image(w.omega, p));
    for (std::size_t q = 2; q <= w.tau.size(); ++q) res.z.push_back(tail_image(w.tau, q));
    std::map<Q, int> roots;
    res.L_at_x = 1;
    for (const auto* v : {&res.y, &res.z})
        for (const Q& r : *v) {
            if (r == x) throw ConstructionError("degenerate: L(x~) = 0");
            roots[r] += 2;
            res.L_at_x *= (x - r) * (x - r);
        }
    const int last = w.omega.back();
    Word omega_minus = drop_last(w.omega);
    Q yk = ifs[last](x);
    Q outer = eval_word<Q>(ifs, omega_minus, yk).second;
    Q d_omega = eval_word<Q>(ifs, w.omega, x).second, d_tau = eval_word<Q>(ifs, w.tau, x).second;
    res.a_before = w.a;

    Q eps = eps_in;
    for (int attempt = 0;; ++attempt) {
        if (attempt > 80) throw ConstructionError("no admissible eps found");
        std::vector<IfsMap> maps = ifs.maps;
        for (int s = 1; s <= ifs.m(); ++s) {
            std::vector<std::pair<Q, int>> rs(roots.begin(), roots.end());
            rs.emplace_back(x, s == last ? 1 : 2);
            maps[static_cast<std::size_t>(s - 1)].pieces.push_back(PolyPiece::factored(eps, rs));
        }
        std::optional<Ifs> g;
        try {
            g.emplace(maps, ifs.X, ifs.beta, ifs.rho);
        } catch (const ConstructionError&) {
            eps /= 2;
            continue;
        }
        auto nw = make_witness(*g, w.omega, w.tau, x);
        // a rational ratio can survive only for isolated eps; step off it
        if (nw.independence.kind == IndependenceKind::RationalRatio && attempt < 8) {
            eps = eps * 2 / 3;
            continue;
        }
        res.ifs = std::move(*g);
        res.witness = nw;
        break;
    }
    res.eps = eps;
    auto [vo, dno] = eval_word<Q>(res.ifs, w.omega, x);
    auto [vt, dnt] = eval_word<Q>(res.ifs, w.tau, x);
    res.fixed_point_ok = vo == x && vt == x;
    res.tau_derivative_ok = dnt == d_tau;
    res.omega_derivative_ok = dno == d_omega + eps * res.L_at_x * outer;
    res.a_after = qabs(dno);
    res.b = qabs(dnt);
    res.distance = ifs_distance(ifs, res.ifs);
    return res;
}

// ---------------------------------------------------------------- WSP failure demonstration

struct DemoAttempt {
    long i = 0, j = 0;
    long count = 0;
    Q eta;
};

struct WspFailureWitness {
    CommonFixedPointWitness base;
    long i = 0, j = 0;
    HrFamily hr;
    Q eta;
    long count = 0;
    int K = 0;
    Q C, tau;
    int N = 0;
    int ell = 0;                               // chosen interval (1-based)
    std::vector<std::pair<long, long>> pairs;  // I: (r1, r2) with ratio in interval ell
    long r_star = 0, r_hat = 0;
    std::vector<long> i_rstar;
    long theoretical_min = 0;  // ceil(sqrt j / (4K))
    std::vector<Word> representatives;
    std::vector<DemoAttempt> attempts;
};

inline WspFailureWitness demonstrate_wsp_failure(const Ifs& ifs, const CommonFixedPointWitness& w, long target,
                                                 std::size_t budget = kDefaultWordBudget, long j_max = 100000) {
    if (!ifs.affine()) throw InputError("unsupported input: demonstrate_wsp_failure needs an affine system");
    if (target < 1) throw PreconditionError("target count must be >= 1");
    check_witness(ifs, w);
    if (!w.x_exact || log_ratio_rationality(w.a, w.b).kind != IndependenceKind::IrrationalCertified)
        throw PreconditionError("demonstrate_wsp_failure needs an IRRATIONAL_CERTIFIED witness");
    WspFailureWitness out;
    out.base = w;
    out.base.independence = {IndependenceKind::IrrationalCertified, 0, 0};
    const Q diam = ifs.hull().diam();
    out.C = qmax(diam, 1 / diam);
    out.tau = tau_bound_exact(ifs);
    const double lC = log_q(out.C), lt = log_q(out.tau);
    out.K = static_cast<int>(std::floor((std::log(4.0) + 2 * lC) / lt)) + 1;
    // interval ell = 1..K in log scale: (lw, lz)
    const double lq = (std::log(4.0) + 2 * lC) / out.K, lmu = (lt - lq) / 4, l0 = -std::log(2.0) - lC;
    auto lw = [&](int k) { return l0 + (k - 1) * lq - lmu; };
    auto lz = [&](int k) { return l0 + k * lq + lmu; };
    out.N = static_cast<int>(std::max(w.omega.size(), w.tau.size()));
    const double la = log_q(w.a), lb = log_q(w.b);
    long best = 0;

    for (long jm = 1; jm <= j_max;) {
        DirichletPair dp = dirichlet_pair(w.a, w.b, jm);
        jm = dp.j + 1;
        HrFamily hr = build_hr_family(w, dp.i, dp.j);
        const long R = hr.root;
        const double step = dp.j * la - dp.i * lb;  // log(d_r / d_{r+1})
        int ell = 0;
        std::vector<std::pair<long, long>> pairs;
        for (int k = 1; k <= out.K; ++k) {
            std::vector<std::pair<long, long>> cur;
            for (long r1 = 0; r1 < R; ++r1)
                for (long r2 = 0; r2 < R; ++r2) {
                    double lr = (r2 - r1) * step;
                    if (lw(k) < lr && lr < lz(k)) cur.emplace_back(r1, r2);
                }
            if (cur.size() > pairs.size()) {
                pairs = cur;
                ell = k;
            }
        }
        if (pairs.empty()) continue;
        long r_star = 0;
        std::vector<long> members;
        for (long r = 0; r < R; ++r) {
            std::vector<long> m;
            for (const auto& [r1, r2] : pairs)
                if (r2 == r) m.push_back(r1);
            if (m.size() > members.size()) {
                members = m;
                r_star = r;
            }
        }
        long r_hat = members.front();
        for (long r : members)
            if (hr.derivatives[static_cast<std::size_t>(r)] > hr.derivatives[static_cast<std::size_t>(r_hat)]) r_hat = r;
        Q eta = hr.derivatives[static_cast<std::size_t>(r_hat)] * diam;
        PhiResult ph;
        try {
            ph = phi_count(ifs, w.x_tilde, eta, out.N, budget);
        } catch (const ResourceLimit&) {
            throw ResourceLimit("demonstrate_wsp_failure: budget exhausted at j = " + std::to_string(dp.j) +
                                "; best count " + std::to_string(best));
        }
        best = std::max(best, ph.count);
        out.attempts.push_back({dp.i, dp.j, ph.count, eta});
        if (ph.count >= target) {
            out.i = dp.i;
            out.j = dp.j;
            out.hr = std::move(hr);
            out.eta = eta;
            out.count = ph.count;
            out.ell = ell;
            out.pairs = pairs;
            out.r_star = r_star;
            out.r_hat = r_hat;
            out.i_rstar = members;
            out.theoretical_min =
                static_cast<long>(std::ceil(std::sqrt(static_cast<double>(dp.j)) / (4.0 * out.K)));
            out.representatives = ph.representatives;
            return out;
        }
    }
    throw ResourceLimit("demonstrate_wsp_failure: target not reached up to j = " + std::to_string(j_max) +
                        "; best count " + std::to_string(best));
}

}  // namespace ifsl
