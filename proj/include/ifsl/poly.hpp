#pragma once

#include "ifsl/core.hpp"

#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace ifsl {

// One additive term of a conformal map: a polynomial, optionally restricted to a
// closed support outside of which it vanishes.
struct PolyPiece {
    enum class Kind { Bump, Poly, Factored };

    Kind kind = Kind::Poly;
    Q scale = 1;                              // eps for bumps
    std::vector<Q> coeffs;                    // Poly: a0 + a1 x + ...
    std::vector<std::pair<Q, int>> roots;     // Bump/Factored: scale * prod (x - root)^mult
    bool has_support = false;
    Q sup_lo, sup_hi;
    Q delta, y;                               // bump metadata

    static PolyPiece bump(const Q& delta, const Q& y, const Q& eps) {
        if (delta <= 0 || eps <= 0) throw PreconditionError("bump needs delta > 0 and eps > 0");
        PolyPiece p;
        p.kind = Kind::Bump;
        p.scale = eps;
        p.delta = delta;
        p.y = y;
        p.roots = {{y - delta, 4}, {y + delta, 4}};
        p.has_support = true;
        p.sup_lo = y - delta;
        p.sup_hi = y + delta;
        return p;
    }
    static PolyPiece poly(std::vector<Q> c) {
        PolyPiece p;
        p.kind = Kind::Poly;
        p.coeffs = std::move(c);
        return p;
    }
    static PolyPiece factored(const Q& scale, std::vector<std::pair<Q, int>> roots) {
        PolyPiece p;
        p.kind = Kind::Factored;
        p.scale = scale;
        p.roots = std::move(roots);
        return p;
    }

    PolyPiece scaled(const Q& w) const {
        PolyPiece p = *this;
        if (kind == Kind::Poly)
            for (auto& c : p.coeffs) c *= w;
        else
            p.scale *= w;
        return p;
    }

    bool is_zero() const {
        if (kind == Kind::Poly) {
            for (const auto& c : coeffs)
                if (c != 0) return false;
            return true;
        }
        return scale == 0;
    }

    // Jet on the unrestricted polynomial; T is double, Q or Interval.
    template <class T>
    Jet<T> raw_jet(const T& x) const {
        if (kind == Kind::Poly) {
            T v = lift<T>(Q(0)), d = lift<T>(Q(0)), s = lift<T>(Q(0));
            for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
                s = s * x + lift<T>(Q(2)) * d;
                d = d * x + v;
                v = v * x + lift<T>(*it);
            }
            return {v, d, s};
        }
        T v = lift<T>(scale), d = lift<T>(Q(0)), s = lift<T>(Q(0));
        for (const auto& [r, mult] : roots) {
            T u = x - lift<T>(r);
            for (int k = 0; k < mult; ++k) {
                s = s * u + lift<T>(Q(2)) * d;
                d = d * u + v;
                v = v * u;
            }
        }
        return {v, d, s};
    }

    Jet<double> jet(double x) const {
        if (has_support && (x < sup_lo.get_d() || x > sup_hi.get_d())) return {0.0, 0.0, 0.0};
        return raw_jet<double>(x);
    }
    Jet<Q> jet(const Q& x) const {
        if (has_support && (x < sup_lo || x > sup_hi)) return {Q(0), Q(0), Q(0)};
        return raw_jet<Q>(x);
    }
    Jet<Interval> jet(const Interval& x) const {
        Interval zero(Q(0));
        if (!has_support) return raw_jet<Interval>(x);
        Interval sup(sup_lo, sup_hi);
        if (!intersects(x, sup)) return {zero, zero, zero};
        Interval inner(qmax(x.lo, sup_lo), qmin(x.hi, sup_hi));
        Jet<Interval> j = raw_jet<Interval>(inner);
        if (x.subset_of(sup)) return j;
        return {hull_of(j.v, zero), hull_of(j.d, zero), hull_of(j.s, zero)};
    }

    template <class T>
    static T lift(const Q& q) {
        if constexpr (std::is_same_v<T, double>)
            return q.get_d();
        else
            return T(q);
    }
};

// Upper bound of sup |f^(order)| over [a, b] using interval jets on `pieces` subintervals.
inline Q piece_sup_bound(const PolyPiece& p, int order, const Interval& X, int pieces = 64) {
    Q best = 0;
    Q step = X.width() / pieces;
    for (int k = 0; k < pieces; ++k) {
        Interval sub(X.lo + step * k, k + 1 == pieces ? X.hi : X.lo + step * (k + 1));
        Jet<Interval> j = p.jet(sub);
        const Interval& iv = order == 0 ? j.v : (order == 1 ? j.d : j.s);
        best = qmax(best, iv.mag());
    }
    return best;
}

// Certified norms of the bump: sup T = eps delta^8, sup |T'| <= 8 eps delta^7,
// sup |T''| <= 54 eps delta^6.
struct BumpNorms {
    Q sup, sup_d1, sup_d2;
};
inline BumpNorms bump_norms(const PolyPiece& b) {
    if (b.kind != PolyPiece::Kind::Bump) throw PreconditionError("bump_norms on non-bump piece");
    return {b.scale * qpow(b.delta, 8), 8 * b.scale * qpow(b.delta, 7), 54 * b.scale * qpow(b.delta, 6)};
}

}  // namespace ifsl
