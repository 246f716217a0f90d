#pragma once

#include "ifsl/maps.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace ifsl {

enum class DimMethod { SimilarityRoot, BowenRoot, AssouadCovering };

inline const char* to_string(DimMethod m) {
    switch (m) {
        case DimMethod::SimilarityRoot: return "SIMILARITY_ROOT";
        case DimMethod::BowenRoot: return "BOWEN_ROOT";
        case DimMethod::AssouadCovering: return "ASSOUAD_COVERING";
    }
    return "?";
}

struct DimensionEstimate {
    double value = 0, lower = 0, upper = 0;
    DimMethod method = DimMethod::SimilarityRoot;
    int depth = 0;
    bool certified = false;
};

// Root of sum |r_i|^s = 1 by bisection in long double.
inline DimensionEstimate similarity_dimension(const std::vector<Q>& ratios) {
    if (ratios.size() < 2) throw PreconditionError("similarity dimension needs at least two ratios");
    std::vector<long double> lr;
    for (const auto& r : ratios) {
        Q a = qabs(r);
        if (a <= 0 || a >= 1) throw PreconditionError("ratios must lie in (0,1)");
        lr.push_back(static_cast<long double>(log_q(a)));
    }
    auto f = [&](long double s) {
        long double t = 0;
        for (long double l : lr) t += std::exp(s * l);
        return t - 1;
    };
    long double lo = 0, hi = 1;
    while (f(hi) > 0) hi *= 2;
    int it = 0;
    for (; it < 200; ++it) {
        long double mid = (lo + hi) / 2;
        if (mid == lo || mid == hi) break;
        (f(mid) > 0 ? lo : hi) = mid;
    }
    DimensionEstimate d;
    d.value = static_cast<double>((lo + hi) / 2);
    d.lower = static_cast<double>(lo);
    d.upper = static_cast<double>(hi);
    d.lower = std::min(d.lower, d.value);
    d.upper = std::max(d.upper, d.value);
    d.method = DimMethod::SimilarityRoot;
    d.depth = it;
    d.certified = true;
    return d;
}

inline double similarity_residual(const std::vector<Q>& ratios, double s) {
    long double t = 0;
    for (const auto& r : ratios) t += std::exp(static_cast<long double>(s) * static_cast<long double>(log_q(qabs(r))));
    return static_cast<double>(t - 1);
}

namespace detail {

// log|S_w'(x0)| over all words of length n, by prepending symbols.
inline std::vector<double> level_log_derivatives(const Ifs& ifs, int n, std::size_t budget) {
    double total = std::pow(static_cast<double>(ifs.m()), n);
    if (total > static_cast<double>(budget)) throw ResourceLimit("level-" + std::to_string(n) + " sum exceeds word budget");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total));
    const double x0 = ifs.hull().mid().get_d();
    auto rec = [&](auto&& self, double y, double logd, int level) -> void {
        if (level == n) {
            out.push_back(logd);
            return;
        }
        for (const auto& f : ifs.maps) {
            Jet<double> j = f.jet(y);
            self(self, j.v, logd + std::log(std::abs(j.d)), level + 1);
        }
    };
    rec(rec, x0, 0.0, 0);
    return out;
}

// (1/n) log sum exp(s * (l + shift)), stable against overflow.
inline double log_mean_sum(const std::vector<double>& logs, double s, double shift, int n) {
    long double mx = -INFINITY;
    for (double l : logs) mx = std::max(mx, static_cast<long double>(s) * (l + shift));
    long double acc = 0;
    for (double l : logs) acc += std::exp(static_cast<long double>(s) * (l + shift) - mx);
    return static_cast<double>((mx + std::log(acc)) / n);
}

template <class F>
double bisect_decreasing(F f, double lo, double hi, double tol) {
    while (f(hi) > 0) hi *= 2;
    while (hi - lo > tol) {
        double mid = (lo + hi) / 2;
        (f(mid) > 0 ? lo : hi) = mid;
    }
    return (lo + hi) / 2;
}

}  // namespace detail

struct PressureBracket {
    double lower = 0, upper = 0;
};

inline PressureBracket pressure(const Ifs& ifs, double s, int n, std::size_t budget = kDefaultWordBudget) {
    if (s < 0 || n < 1) throw PreconditionError("pressure needs s >= 0 and n >= 1");
    if (ifs.affine()) {
        long double t = 0;
        for (const auto& f : ifs.maps) t += std::exp(static_cast<long double>(s) * static_cast<long double>(log_q(qabs(f.r))));
        double v = static_cast<double>(std::log(t));
        if (s == 0) v = std::log(static_cast<double>(ifs.m()));
        return {v, v};
    }
    auto logs = detail::level_log_derivatives(ifs, n, budget);
    double lc = std::log(distortion_constant(ifs));
    return {detail::log_mean_sum(logs, s, -lc, n), detail::log_mean_sum(logs, s, lc, n)};
}

inline DimensionEstimate bowen_dimension(const Ifs& ifs, int n, std::size_t budget = kDefaultWordBudget) {
    if (n < 1) throw PreconditionError("bowen_dimension needs n >= 1");
    const double tol = 1e-11;
    DimensionEstimate d;
    d.method = DimMethod::BowenRoot;
    d.depth = n;
    d.certified = true;
    if (ifs.affine()) {
        auto P = [&](double s) { return pressure(ifs, s, 1).lower; };
        double s = detail::bisect_decreasing(P, 0.0, 1.0, tol);
        d.value = s;
        d.lower = s - tol;
        d.upper = s + tol;
        return d;
    }
    auto logs = detail::level_log_derivatives(ifs, n, budget);
    double lc = std::log(distortion_constant(ifs));
    auto Plo = [&](double s) { return detail::log_mean_sum(logs, s, -lc, n); };
    auto Phi = [&](double s) { return detail::log_mean_sum(logs, s, lc, n); };
    d.lower = detail::bisect_decreasing(Plo, 0.0, 1.0, tol) - tol;
    d.upper = detail::bisect_decreasing(Phi, 0.0, 1.0, tol) + tol;
    d.value = (d.lower + d.upper) / 2;
    return d;
}

namespace detail {

// Cylinder intervals S_w(hull) meeting (a, b), as exact rationals. A word is kept at length n,
// or earlier once its cylinder is shorter than cut (cut = 0: fixed length n).
inline void cylinders_meeting(const Ifs& ifs, const Q& a, const Q& b, int n, std::vector<Interval>& out,
                              std::size_t budget, const Q& cut = 0, int min_level = 0) {
    const Hull& h = ifs.hull();
    std::size_t nodes = 0;
    auto meets = [&](const Interval& J) { return J.hi > a && J.lo < b; };
    if (ifs.affine()) {
        auto rec = [&](auto&& self, const AffineQ& w, int level) -> void {
            if (++nodes > budget) throw ResourceLimit("covering enumeration exceeded word budget");
            Interval J(w(h.lo), w(h.hi));
            if (!meets(J)) return;
            if (level == n || (level >= min_level && J.width() < cut)) {
                out.push_back(J);
                return;
            }
            for (const auto& f : ifs.maps) self(self, append(w, f), level + 1);
        };
        rec(rec, AffineQ{}, 0);
        return;
    }
    Word w;
    double lo = h.lo.get_d(), hi = h.hi.get_d();
    auto rec = [&](auto&& self, int level) -> void {
        if (++nodes > budget) throw ResourceLimit("covering enumeration exceeded word budget");
        double u = eval_word<double>(ifs, w, lo).first, v = eval_word<double>(ifs, w, hi).first;
        Interval J{Q(u), Q(v)};
        if (!meets(J)) return;
        if (level == n || (level >= min_level && J.width() < cut)) {
            out.push_back(J);
            return;
        }
        for (int s = 1; s <= ifs.m(); ++s) {
            w.push_back(s);
            self(self, level + 1);
            w.pop_back();
        }
    };
    rec(rec, 0);
}

inline std::vector<Interval> merge_intervals(std::vector<Interval> v) {
    std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    std::vector<Interval> out;
    for (auto& J : v) {
        if (!out.empty() && J.lo <= out.back().hi)
            out.back().hi = qmax(out.back().hi, J.hi);
        else
            out.push_back(J);
    }
    return out;
}

// Greedy sweep with balls [c - r, c + r), centres in the set.
inline long greedy_cover(const std::vector<Interval>& E, const Q& r) {
    if (E.empty()) return 0;
    long count = 0;
    std::size_t k = 0;
    Q a = E[0].lo;  // leftmost uncovered point
    while (true) {
        ++count;
        Q reach = a + r;
        while (k + 1 < E.size() && E[k + 1].lo <= reach) ++k;
        Q c = qmin(E[k].hi, reach);
        Q end = c + r;
        // next uncovered point
        while (k < E.size() && E[k].hi < end) ++k;
        if (k == E.size()) break;
        a = qmax(E[k].lo, end);
    }
    return count;
}

}  // namespace detail

// Smallest n with rho^n diam(hull) < r/10.
inline int covering_level(const Ifs& ifs, const Q& r) {
    Q d = ifs.hull().diam();
    int n = 0;
    Q p = d;
    while (!(p < r / 10)) {
        p *= ifs.rho;
        ++n;
    }
    return n;
}

// N_r(B(x,R) cap Lambda_r): cylinders are refined until shorter than r/10 (and of length
// at least min_depth), never beyond covering_level.
inline long covering_count(const Ifs& ifs, const Q& x, const Q& R, const Q& r, int min_depth = 0,
                           std::size_t budget = kDefaultWordBudget) {
    if (!(0 < r && 0 < R)) throw PreconditionError("covering_count needs r > 0 and R > 0");
    int n = std::max(min_depth, covering_level(ifs, r));
    std::vector<Interval> cyl;
    Q a = x - R, b = x + R;
    detail::cylinders_meeting(ifs, a, b, n, cyl, budget, r / 10, min_depth);
    for (auto& J : cyl) J = Interval(qmax(J.lo, a), qmin(J.hi, b));
    return detail::greedy_cover(detail::merge_intervals(std::move(cyl)), r);
}

struct AssouadConfig {
    int depth = 3;                 // centres: endpoints of depth-d cylinders
    std::vector<int> scale_levels;  // R = diam * rho^k; default {1, 2}
    std::vector<int> ratio_powers;  // R/r = rho^-p; default two smallest with R/r >= 81
};

struct AssouadSample {
    Q x, R, r;
    long count = 0;
    double estimate = 0;
};

inline DimensionEstimate assouad_estimate(const Ifs& ifs, AssouadConfig cfg, std::vector<AssouadSample>* samples = nullptr,
                                          std::size_t budget = kDefaultWordBudget) {
    if (cfg.scale_levels.empty()) cfg.scale_levels = {1, 2};
    if (cfg.ratio_powers.empty()) {
        int p = 1;
        while (qpow(1 / ifs.rho, p) < 81) ++p;
        cfg.ratio_powers = {p, p + 1};
    }
    for (int p : cfg.ratio_powers)
        if (qpow(1 / ifs.rho, p) < 81) throw PreconditionError("scale grid needs R/r >= 81");
    const Hull& h = ifs.hull();
    std::vector<Q> centres;
    {
        std::vector<Interval> cyl;
        detail::cylinders_meeting(ifs, h.lo - 1, h.hi + 1, cfg.depth, cyl, budget);
        for (const auto& J : cyl) {
            centres.push_back(J.lo);
            centres.push_back(J.hi);
        }
        std::sort(centres.begin(), centres.end());
        centres.erase(std::unique(centres.begin(), centres.end()), centres.end());
    }
    DimensionEstimate d;
    d.method = DimMethod::AssouadCovering;
    d.certified = false;
    d.depth = cfg.depth;
    d.lower = INFINITY;
    d.value = 0;
    for (int k : cfg.scale_levels) {
        Q R = h.diam() * qpow(ifs.rho, k);
        for (int p : cfg.ratio_powers) {
            Q ratio = qpow(1 / ifs.rho, p);
            Q r = R / ratio;
            double lr = log_q(ratio);
            for (const auto& x : centres) {
                long N = covering_count(ifs, x, R, r, 0, budget);
                double est = std::log(static_cast<double>(N)) / lr;
                if (samples) samples->push_back({x, R, r, N, est});
                d.value = std::max(d.value, est);
                d.lower = std::min(d.lower, est);
            }
        }
    }
    d.upper = d.value;
    return d;
}

enum class WspStatus { CertifiedHolds, WitnessedFails, NoFailureFound };

inline const char* to_string(WspStatus s) {
    switch (s) {
        case WspStatus::CertifiedHolds: return "CERTIFIED_HOLDS";
        case WspStatus::WitnessedFails: return "WITNESSED_FAILS";
        case WspStatus::NoFailureFound: return "NO_FAILURE_FOUND";
    }
    return "?";
}

enum class CertificateKind { None, Ssp, Lattice };

struct ClassificationReport {
    bool refused = false;
    std::string dim_assouad;       // "1", "dim_H", "inconclusive"
    std::optional<double> dim_assouad_value;
    std::string hausdorff_measure;  // "zero", "positive finite", "undetermined"
    std::vector<std::string> notes;
};

inline ClassificationReport synthesize_verdict(const DimensionEstimate& s0, WspStatus wsp, bool singleton,
                                               int depth = 0, CertificateKind cert = CertificateKind::None,
                                               bool exact_overlap_recorded = false) {
    ClassificationReport out;
    if (singleton) {
        out.refused = true;
        out.dim_assouad = "inconclusive";
        out.hausdorff_measure = "undetermined";
        out.notes.push_back("not a singleton: the dimension theorems exclude singleton attractors");
        return out;
    }
    if (wsp == WspStatus::CertifiedHolds && cert == CertificateKind::Ssp && exact_overlap_recorded)
        throw InputError("inconsistent input: SSP certificate together with a recorded exact overlap");
    switch (wsp) {
        case WspStatus::WitnessedFails:
            out.dim_assouad = "1";
            out.dim_assouad_value = 1.0;
            out.hausdorff_measure = s0.upper < 1 ? "zero" : "undetermined";
            if (s0.upper >= 1) out.notes.push_back("dim_H bracket reaches 1; no Hausdorff measure claim");
            break;
        case WspStatus::CertifiedHolds:
            out.dim_assouad = "dim_H";
            out.dim_assouad_value = s0.value;
            out.hausdorff_measure = s0.upper < 1 ? "positive finite" : "undetermined";
            if (s0.upper >= 1) out.notes.push_back("dim_H bracket reaches 1; no Hausdorff measure claim");
            break;
        case WspStatus::NoFailureFound:
            out.dim_assouad = "inconclusive";
            out.hausdorff_measure = "undetermined";
            out.notes.push_back("inconclusive up to depth " + std::to_string(depth));
            out.notes.push_back("if WSP holds: dim_A = dim_H" +
                                std::string(s0.upper < 1 ? " and 0 < H^s(Lambda) < infinity" : ""));
            out.notes.push_back("if WSP fails: dim_A = 1" + std::string(s0.upper < 1 ? " and H^s(Lambda) = 0" : ""));
            break;
    }
    return out;
}

}  // namespace ifsl
