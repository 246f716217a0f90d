#pragma once

#include "ifsl/core.hpp"
#include "ifsl/poly.hpp"
#include "ifsl/symbolic.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ifsl {

// S(x) = r x + t + sum of pieces.
struct IfsMap {
    Q r = 0, t = 0;
    std::vector<PolyPiece> pieces;

    IfsMap() = default;
    IfsMap(Q r_, Q t_) : r(std::move(r_)), t(std::move(t_)) { canon(); }
    IfsMap(Q r_, Q t_, std::vector<PolyPiece> p) : r(std::move(r_)), t(std::move(t_)), pieces(std::move(p)) { canon(); }
    void canon() {
        r.canonicalize();
        t.canonicalize();
    }

    bool affine() const {
        for (const auto& p : pieces)
            if (!p.is_zero()) return false;
        return true;
    }

    template <class T>
    Jet<T> jet(const T& x) const {
        Jet<T> out{PolyPiece::lift<T>(r) * x + PolyPiece::lift<T>(t), PolyPiece::lift<T>(r), PolyPiece::lift<T>(Q(0))};
        for (const auto& p : pieces) {
            Jet<T> j = p.jet(x);
            out.v = out.v + j.v;
            out.d = out.d + j.d;
            out.s = out.s + j.s;
        }
        return out;
    }

    template <class T>
    T operator()(const T& x) const { return jet(x).v; }

    // Image of [lo, hi] for a monotone map.
    Interval image(const Interval& J) const {
        Q a = jet(J.lo).v, b = jet(J.hi).v;
        return {qmin(a, b), qmax(a, b)};
    }
};

// this - other, as a map with merged pieces
inline IfsMap difference(const IfsMap& a, const IfsMap& b) {
    IfsMap h(a.r - b.r, a.t - b.t, a.pieces);
    for (const auto& p : b.pieces) h.pieces.push_back(p.scaled(Q(-1)));
    return h;
}

// Enclosure of the value/derivative/second derivative of `f` over X using `pieces` subintervals.
inline Jet<Interval> jet_enclosure(const IfsMap& f, const Interval& X, int pieces = 128) {
    Jet<Interval> acc;
    Q step = X.width() / pieces;
    for (int k = 0; k < pieces; ++k) {
        Interval sub(X.lo + step * k, k + 1 == pieces ? X.hi : X.lo + step * (k + 1));
        Jet<Interval> j = f.jet(sub);
        if (k == 0)
            acc = j;
        else
            acc = {hull_of(acc.v, j.v), hull_of(acc.d, j.d), hull_of(acc.s, j.s)};
    }
    return acc;
}

// |||h||| with alpha = 1: sup|h| + sup|h'| + sup|h''| (upper bound).
inline Q map_norm(const IfsMap& h, const Interval& X, int pieces = 128) {
    if (h.affine()) {
        Q a = qabs(h.r * X.lo + h.t), b = qabs(h.r * X.hi + h.t);
        return qmax(a, b) + qabs(h.r);
    }
    Jet<Interval> e = jet_enclosure(h, X, pieces);
    return e.v.mag() + e.d.mag() + e.s.mag();
}

struct Hull {
    Q lo, hi;
    bool exact = true;
    Q diam() const { return hi - lo; }
    Q mid() const { return (lo + hi) / 2; }
    Interval interval() const { return {lo, hi}; }
};

class Ifs {
public:
    std::vector<IfsMap> maps;
    Interval X;
    Q beta, rho;

    Ifs() = default;
    Ifs(std::vector<IfsMap> ms, Interval x, Q b, Q r, bool validate_now = true)
        : maps(std::move(ms)), X(std::move(x)), beta(std::move(b)), rho(std::move(r)) {
        if (validate_now) validate();
    }

    int m() const { return static_cast<int>(maps.size()); }
    bool affine() const {
        for (const auto& f : maps)
            if (!f.affine()) return false;
        return true;
    }
    const IfsMap& operator[](int symbol) const { return maps.at(static_cast<std::size_t>(symbol - 1)); }

    // Certified sup |S_i'| on X (exact for affine maps).
    const std::vector<Q>& sup_ratios() const { return sup_ratio_; }
    const std::vector<Q>& inf_ratios() const { return inf_ratio_; }
    const Hull& hull() const { return hull_; }
    // Certified sup |S_i''| on X.
    const std::vector<Q>& sup_second() const { return sup_second_; }
    Q max_ratio() const {
        Q best = 0;
        for (const auto& r : sup_ratio_) best = qmax(best, r);
        return best;
    }

    void validate();

private:
    std::vector<Q> sup_ratio_, inf_ratio_, sup_second_;
    Hull hull_;
};

namespace detail {

// Certifies beta <= |f'| <= rho on J by bisection; returns an enclosure of |f'| on J.
inline Interval certify_derivative(const IfsMap& f, const Interval& J, const Q& beta, const Q& rho, int depth,
                                   int sign) {
    Jet<Interval> j = f.jet(J);
    const Interval& d = j.d;
    bool sign_ok = sign > 0 ? d.lo > 0 : d.hi < 0;
    if (sign_ok && d.mig() >= beta && d.mag() <= rho) return {d.mig(), d.mag()};
    Q mid = J.mid();
    Q dm = f.jet(mid).d;
    if ((sign > 0 ? dm <= 0 : dm >= 0) || qabs(dm) < beta || qabs(dm) > rho)
        throw ConstructionError("derivative bound violated at x = " + qstr(mid) + " (|S'| = " +
                                std::to_string(to_d(qabs(dm))) + ")");
    if (depth >= 40) throw ConstructionError("could not certify derivative bounds near x = " + qstr(mid));
    Interval a = certify_derivative(f, {J.lo, mid}, beta, rho, depth + 1, sign);
    Interval b = certify_derivative(f, {mid, J.hi}, beta, rho, depth + 1, sign);
    return hull_of(a, b);
}

inline Hull affine_hull(const std::vector<IfsMap>& maps) {
    const std::size_t m = maps.size();
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            const Q &ra = maps[a].r, &ta = maps[a].t, &rb = maps[b].r, &tb = maps[b].t;
            Q lo, hi;
            if (ra > 0 && rb > 0) {
                lo = ta / (1 - ra);
                hi = tb / (1 - rb);
            } else if (ra > 0) {
                lo = ta / (1 - ra);
                hi = rb * lo + tb;
            } else if (rb > 0) {
                hi = tb / (1 - rb);
                lo = ra * hi + ta;
            } else {
                lo = (ra * tb + ta) / (1 - ra * rb);
                hi = rb * lo + tb;
            }
            if (hi < lo) continue;
            Interval J(lo, hi);
            bool ok = true;
            for (const auto& f : maps)
                if (!f.image(J).subset_of(J)) {
                    ok = false;
                    break;
                }
            if (ok) return {lo, hi, true};
        }
    }
    throw ConstructionError("no invariant affine hull found");
}

inline Hull iterated_hull(const std::vector<IfsMap>& maps, const Interval& X, int cap = 100000) {
    double lo = X.lo.get_d(), hi = X.hi.get_d();
    const double tol = 1e-15 * (hi - lo);
    for (int it = 0; it < cap; ++it) {
        double nlo = std::numeric_limits<double>::infinity(), nhi = -nlo;
        for (const auto& f : maps) {
            double a = f(lo), b = f(hi);
            nlo = std::min({nlo, a, b});
            nhi = std::max({nhi, a, b});
        }
        bool done = std::abs(nlo - lo) <= tol && std::abs(nhi - hi) <= tol;
        lo = nlo;
        hi = nhi;
        if (done) return {Q(lo), Q(hi), false};
    }
    throw ConstructionError("hull iteration did not converge");
}

}  // namespace detail

inline void Ifs::validate() {
    if (maps.size() < 2) throw ConstructionError("an IFS needs at least two maps");
    if (!(0 < beta && beta < rho && rho < 1)) throw ConstructionError("need 0 < beta < rho < 1");
    if (!(X.lo < X.hi)) throw ConstructionError("ambient interval must have positive length");
    sup_ratio_.clear();
    inf_ratio_.clear();
    sup_second_.clear();
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const IfsMap& f = maps[i];
        std::string tag = "map " + std::to_string(i + 1) + ": ";
        if (f.r == 0) throw ConstructionError(tag + "zero base ratio");
        if (f.affine()) {
            Q a = qabs(f.r);
            if (a < beta || a > rho) throw ConstructionError(tag + "|r| outside [beta, rho]");
            sup_ratio_.push_back(a);
            inf_ratio_.push_back(a);
            sup_second_.push_back(0);
        } else {
            int sign = f.jet(X.mid()).d > 0 ? 1 : -1;
            Interval d;
            try {
                d = detail::certify_derivative(f, X, beta, rho, 0, sign);
            } catch (const ConstructionError& e) {
                throw ConstructionError(tag + e.what());
            }
            sup_ratio_.push_back(d.hi);
            inf_ratio_.push_back(d.lo);
            sup_second_.push_back(jet_enclosure(f, X).s.mag());
        }
        if (!f.image(X).subset_of(X)) throw ConstructionError(tag + "S(X) is not contained in X");
    }
    hull_ = affine() ? detail::affine_hull(maps) : detail::iterated_hull(maps, X);
}

// Exact (r_w, t_w) of an affine composition.
struct AffineQ {
    Q r = 1, t = 0;
    Q operator()(const Q& x) const { return r * x + t; }
    Q fixed_point() const { return t / (1 - r); }
    bool operator==(const AffineQ& o) const { return r == o.r && t == o.t; }
    bool operator<(const AffineQ& o) const { return r < o.r || (r == o.r && t < o.t); }
};

// S_w = S_{w1} o ... o S_{wn}; prefix update (R, T) <- (R r_s, R t_s + T).
inline AffineQ compose_affine(const Ifs& ifs, const Word& w) {
    AffineQ a;
    for (int s : w) {
        const IfsMap& f = ifs[s];
        a.t += a.r * f.t;
        a.r *= f.r;
    }
    return a;
}

inline AffineQ append(const AffineQ& a, const IfsMap& f) { return {a.r * f.r, a.r * f.t + a.t}; }

// Value and derivative of S_w at x, innermost map first.
template <class T>
std::pair<T, T> eval_word(const Ifs& ifs, const Word& w, T x) {
    T d = PolyPiece::lift<T>(Q(1));
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
        Jet<T> j = ifs[*it].jet(x);
        d = d * j.d;
        x = j.v;
    }
    return {x, d};
}

// Composed map S_w.
struct Composed {
    const Ifs* ifs = nullptr;
    Word word;
    bool affine = true;
    AffineQ coeffs;

    Q value(const Q& x) const { return affine ? coeffs(x) : eval_word<Q>(*ifs, word, x).first; }
    Q derivative(const Q& x) const { return affine ? coeffs.r : eval_word<Q>(*ifs, word, x).second; }
    double value(double x) const { return eval_word<double>(*ifs, word, x).first; }
    double derivative(double x) const { return eval_word<double>(*ifs, word, x).second; }
};

inline Composed compose(const Ifs& ifs, const Word& w) {
    check_word(w, ifs.m());
    Composed c{&ifs, w, ifs.affine(), {}};
    if (c.affine) c.coeffs = compose_affine(ifs, w);
    return c;
}

struct Projection {
    Q value;
    Q error;
    bool exact = false;
};

// Pi(w) of an eventually periodic word.
inline Projection project(const Ifs& ifs, const InfiniteWordSpec& w, std::size_t n) {
    check_word(w, ifs.m());
    if (ifs.affine()) {
        Q x = compose_affine(ifs, w.period).fixed_point();
        return {compose_affine(ifs, w.preperiod)(x), Q(0), true};
    }
    const Hull& h = ifs.hull();
    double x = eval_word<double>(ifs, w.prefix(n), h.mid().get_d()).first;
    return {Q(x), qpow(ifs.rho, static_cast<long>(n)) * h.diam(), false};
}

inline double project_double(const Ifs& ifs, const InfiniteWordSpec& w, std::size_t n = 64) {
    return project(ifs, w, n).value.get_d();
}

// Bounded distortion constant exp(L diam(X)/(1-rho)), L >= sup|S''|/beta.
inline double distortion_constant(const Ifs& ifs) {
    if (ifs.affine()) return 1.0;
    Q L = 0;
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) L = qmax(L, ifs.sup_second()[i] / ifs.inf_ratios()[i]);
    if (L == 0) return 1.0;
    double e = Q(L * ifs.X.width() / (1 - ifs.rho)).get_d();
    return std::nextafter(std::exp(e) * (1 + 1e-12), std::numeric_limits<double>::infinity());
}

// tau = 1 + C0^{-1} (1 - rho) / (2 rho)
inline double tau_bound(const Ifs& ifs) {
    double c0 = distortion_constant(ifs);
    double rho = ifs.rho.get_d();
    return 1.0 + (1.0 - rho) / (2.0 * rho * c0);
}

inline Q tau_bound_exact(const Ifs& ifs) {
    if (!ifs.affine()) throw PreconditionError("exact tau only for affine systems");
    return 1 + (1 - ifs.rho) / (2 * ifs.rho);
}

// max_i |||T_i - G_i||| on X.
inline Q ifs_distance(const Ifs& a, const Ifs& b, int pieces = 128) {
    if (a.m() != b.m()) throw PreconditionError("IFS distance needs equal map counts");
    Q best = 0;
    for (int i = 0; i < a.m(); ++i) best = qmax(best, map_norm(difference(a.maps[i], b.maps[i]), a.X, pieces));
    return best;
}

// Convenience: affine IFS with X = hull and bounds taken from the ratios.
inline Ifs affine_ifs(const std::vector<std::pair<Q, Q>>& rt) {
    std::vector<IfsMap> maps;
    Q lo = 1, hi = 0;
    for (const auto& [r, t] : rt) {
        maps.emplace_back(r, t);
        lo = qmin(lo, qabs(r));
        hi = qmax(hi, qabs(r));
    }
    Hull h = detail::affine_hull(maps);
    Interval X = h.diam() > 0 ? h.interval() : Interval(h.lo - 1, h.hi + 1);
    Q beta = lo == hi ? lo / 2 : lo;
    return Ifs(std::move(maps), X, beta, hi);
}

}  // namespace ifsl
