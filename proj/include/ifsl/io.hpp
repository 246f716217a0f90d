#pragma once

// JSON input (IFS and family files) and report serialisation.

#include "ifsl/dimension.hpp"
#include "ifsl/maps.hpp"
#include "ifsl/separation.hpp"
#include "ifsl/transversality.hpp"
#include "ifsl/witness.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace ifsl {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------- parsing

namespace detail {

inline Q q_field(const Json& j, const std::string& path) {
    if (j.is_string()) {
        try {
            return parse_rational(j.get<std::string>());
        } catch (const InputError& e) {
            throw InputError(path + ": " + e.what());
        }
    }
    if (j.is_number_integer()) return Q(mpz_class(j.dump()));
    if (j.is_number()) return parse_rational(j.dump());
    throw InputError(path + ": expected a number or a rational string");
}

inline const Json& need(const Json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw InputError(path + "." + key + ": missing field");
    return j.at(key);
}

inline std::vector<Q> q_array(const Json& j, const std::string& path) {
    if (!j.is_array()) throw InputError(path + ": expected an array");
    std::vector<Q> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(q_field(j[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

inline PolyPiece piece_from_json(const Json& j, const std::string& path) {
    std::string kind = need(j, "kind", path).is_string() ? j.at("kind").get<std::string>() : "";
    PolyPiece p;
    if (kind == "bump") {
        Q delta = q_field(need(j, "delta", path), path + ".delta");
        Q y = q_field(need(j, "y", path), path + ".y");
        Q eps = q_field(need(j, "eps", path), path + ".eps");
        if (delta <= 0 || eps <= 0) throw InputError(path + ": bump needs delta > 0 and eps > 0");
        return PolyPiece::bump(delta, y, eps);
    }
    if (kind == "poly") {
        p = PolyPiece::poly(q_array(need(j, "coeffs", path), path + ".coeffs"));
    } else if (kind == "factored") {
        const Json& roots = need(j, "roots", path);
        if (!roots.is_array()) throw InputError(path + ".roots: expected an array");
        std::vector<std::pair<Q, int>> rs;
        for (std::size_t k = 0; k < roots.size(); ++k) {
            std::string rp = path + ".roots[" + std::to_string(k) + "]";
            const Json& mult = need(roots[k], "mult", rp);
            if (!mult.is_number_integer() || mult.get<int>() < 1) throw InputError(rp + ".mult: expected a positive integer");
            rs.emplace_back(q_field(need(roots[k], "root", rp), rp + ".root"), mult.get<int>());
        }
        p = PolyPiece::factored(q_field(need(j, "scale", path), path + ".scale"), rs);
    } else {
        throw InputError(path + ".kind: expected \"bump\", \"poly\" or \"factored\"");
    }
    if (j.contains("support")) {
        auto s = q_array(j.at("support"), path + ".support");
        if (s.size() != 2 || !(s[0] <= s[1])) throw InputError(path + ".support: expected [lo, hi]");
        p.has_support = true;
        p.sup_lo = s[0];
        p.sup_hi = s[1];
    }
    return p;
}

}  // namespace detail

// {"ambient": [lo, hi], "beta": .., "rho": .., "maps": [{"r", "t", "perturbations"}]}.
// ambient, beta and rho may be omitted for affine systems.
inline Ifs ifs_from_json(const Json& j) {
    if (!j.is_object()) throw InputError("ifs: expected an object");
    const Json& jm = detail::need(j, "maps", "ifs");
    if (!jm.is_array()) throw InputError("ifs.maps: expected an array");
    std::vector<IfsMap> maps;
    for (std::size_t k = 0; k < jm.size(); ++k) {
        std::string path = "maps[" + std::to_string(k) + "]";
        IfsMap f(detail::q_field(detail::need(jm[k], "r", path), path + ".r"),
                 detail::q_field(detail::need(jm[k], "t", path), path + ".t"));
        if (jm[k].contains("perturbations")) {
            const Json& ps = jm[k].at("perturbations");
            if (!ps.is_array()) throw InputError(path + ".perturbations: expected an array");
            for (std::size_t p = 0; p < ps.size(); ++p)
                f.pieces.push_back(detail::piece_from_json(ps[p], path + ".perturbations[" + std::to_string(p) + "]"));
        }
        maps.push_back(std::move(f));
    }
    if (maps.size() < 2) throw InputError("ifs.maps: need at least two maps");
    bool affine = true;
    Q lo = 1, hi = 0;
    for (const auto& f : maps) {
        affine = affine && f.affine();
        if (f.r == 0) throw InputError("ifs.maps: zero ratio");
        lo = qmin(lo, qabs(f.r));
        hi = qmax(hi, qabs(f.r));
    }
    Interval X;
    if (j.contains("ambient")) {
        auto a = detail::q_array(j.at("ambient"), "ambient");
        if (a.size() != 2 || !(a[0] < a[1])) throw InputError("ambient: expected [lo, hi] with lo < hi");
        X = {a[0], a[1]};
    } else {
        if (!affine) throw InputError("ambient: required for systems with perturbations");
        Hull h;
        try {
            h = detail::affine_hull(maps);
        } catch (const ConstructionError& e) {
            throw InputError(std::string("ambient: ") + e.what());
        }
        X = h.diam() > 0 ? h.interval() : Interval(h.lo - 1, h.hi + 1);
    }
    Q beta = j.contains("beta") ? detail::q_field(j.at("beta"), "beta") : (lo == hi ? Q(lo / 2) : lo);
    Q rho = j.contains("rho") ? detail::q_field(j.at("rho"), "rho") : hi;
    try {
        return Ifs(std::move(maps), X, beta, rho);
    } catch (const ConstructionError& e) {
        throw InputError(std::string("ifs: ") + e.what());
    }
}

// IFS fields plus {"family": {"center": [...], "radius": ..}}, optional "lambda".
inline TranslationFamily family_from_json(const Json& j) {
    Ifs base = ifs_from_json(j);
    const Json& f = detail::need(j, "family", "file");
    auto center = j.at("family").contains("center") ? detail::q_array(f.at("center"), "family.center")
                                                    : std::vector<Q>(static_cast<std::size_t>(base.m()), Q(0));
    Q radius = detail::q_field(detail::need(f, "radius", "family"), "family.radius");
    try {
        TranslationFamily fam(base, center, radius);
        if (f.contains("lambda")) fam.set_lambda(detail::q_array(f.at("lambda"), "family.lambda"));
        return fam;
    } catch (const std::runtime_error& e) {
        throw InputError(std::string("family: ") + e.what());
    }
}

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path + ": cannot open");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------- serialisation

inline Json to_json(const Q& q) { return qstr(q); }
inline Json to_json(const Interval& J) { return Json::array({qstr(J.lo), qstr(J.hi)}); }
inline Json to_json(const Word& w) { return Json(w); }
inline Json to_json(const InfiniteWordSpec& w) { return {{"preperiod", w.preperiod}, {"period", w.period}}; }
inline Json to_json(const AffineQ& a) { return {{"r", qstr(a.r)}, {"t", qstr(a.t)}}; }

inline Json to_json(const PolyPiece& p) {
    Json j;
    switch (p.kind) {
        case PolyPiece::Kind::Bump:
            j = {{"kind", "bump"}, {"delta", qstr(p.delta)}, {"y", qstr(p.y)}, {"eps", qstr(p.scale)}};
            return j;
        case PolyPiece::Kind::Poly: {
            Json c = Json::array();
            for (const auto& q : p.coeffs) c.push_back(qstr(q));
            j = {{"kind", "poly"}, {"coeffs", c}};
            break;
        }
        case PolyPiece::Kind::Factored: {
            Json rs = Json::array();
            for (const auto& [r, m] : p.roots) rs.push_back({{"root", qstr(r)}, {"mult", m}});
            j = {{"kind", "factored"}, {"scale", qstr(p.scale)}, {"roots", rs}};
            break;
        }
    }
    if (p.has_support) j["support"] = Json::array({qstr(p.sup_lo), qstr(p.sup_hi)});
    return j;
}

inline Json to_json(const Ifs& ifs) {
    Json maps = Json::array();
    for (const auto& f : ifs.maps) {
        Json m = {{"r", qstr(f.r)}, {"t", qstr(f.t)}};
        if (!f.pieces.empty()) {
            Json ps = Json::array();
            for (const auto& p : f.pieces) ps.push_back(to_json(p));
            m["perturbations"] = ps;
        }
        maps.push_back(m);
    }
    return {{"ambient", to_json(ifs.X)}, {"beta", qstr(ifs.beta)}, {"rho", qstr(ifs.rho)}, {"maps", maps}};
}

inline Json to_json(const DimensionEstimate& d) {
    return {{"method", to_string(d.method)}, {"value", d.value},       {"lower", d.lower},
            {"upper", d.upper},              {"depth", d.depth},       {"certified", d.certified}};
}

inline Json to_json(const SspReport& r) {
    Json v = Json::array();
    for (const auto& x : r.violations) {
        Json e = {{"i", x.i}, {"j", x.j}, {"kind", x.kind}, {"certified", x.certified}};
        if (x.point) e["point"] = qstr(*x.point);
        v.push_back(e);
    }
    return {{"status", r.status == SspStatus::Holds ? "HOLDS" : "FAILS"},
            {"gap", qstr(r.gap)},
            {"depth", r.depth},
            {"hull_level", r.hull_level},
            {"violations", v}};
}

inline Json to_json(const std::vector<OverlapFinding>& f) {
    Json a = Json::array();
    for (const auto& x : f) a.push_back({{"u", x.u}, {"v", x.v}, {"kind", to_string(x.kind)}});
    return a;
}

inline Json to_json(const DnSequence& s) {
    Json e = Json::array();
    for (const auto& d : s.entries)
        e.push_back({{"n", d.n},
                     {"value", qstr(d.value)},
                     {"upper", qstr(d.upper)},
                     {"value_approx", d.value.get_d()},
                     {"exact", d.exact},
                     {"u", d.u},
                     {"v", d.v}});
    return {{"requested", s.requested}, {"complete", s.complete}, {"nodes", s.nodes}, {"entries", e}};
}

inline Json to_json(const UnitFractionCertificate& c) {
    return {{"v", c.v}, {"D", qstr(c.D)}, {"same_length_bound", qstr(c.same_length_bound)}, {"bound", qstr(c.bound)}};
}

inline Json to_json(const WspVerdict& w) {
    Json j = {{"status", to_string(w.status)}, {"depth", w.depth}, {"ssp", w.ssp}, {"d_sequence", to_json(w.d_sequence)}};
    j["certificate"] = w.certificate ? to_json(*w.certificate) : Json(nullptr);
    j["witness"] = w.witness ? Json(*w.witness) : Json(nullptr);
    return j;
}

inline Json to_json(const PhiResult& p) {
    Json maps = Json::array();
    for (const auto& a : p.maps) maps.push_back(to_json(a));
    return {{"count", p.count}, {"nodes", p.nodes}, {"representatives", p.representatives}, {"maps", maps}};
}

inline Json to_json(const Independence& d) {
    Json j = {{"kind", to_string(d.kind)}};
    if (d.kind == IndependenceKind::RationalRatio) {
        j["p"] = d.p;
        j["q"] = d.q;
    }
    return j;
}

inline Json to_json(const CommonFixedPointWitness& w) {
    return {{"omega", w.omega}, {"tau", w.tau},     {"x_tilde", qstr(w.x_tilde)},
            {"x_exact", w.x_exact}, {"a", qstr(w.a)}, {"b", qstr(w.b)},
            {"independence", to_json(w.independence)}};
}

inline Json to_json(const WspFailureWitness& w) {
    Json mult = Json::array();
    for (const auto& [p, q] : w.hr.multiplicities) mult.push_back({p, q});
    Json der = Json::array();
    for (const auto& d : w.hr.derivatives) der.push_back(qstr(d));
    Json pairs = Json::array();
    for (const auto& [a, b] : w.pairs) pairs.push_back({a, b});
    Json attempts = Json::array();
    for (const auto& a : w.attempts) attempts.push_back({{"i", a.i}, {"j", a.j}, {"count", a.count}, {"eta", qstr(a.eta)}});
    return {{"base", to_json(w.base)},
            {"dirichlet", {{"i", w.i}, {"j", w.j}}},
            {"hr_family",
             {{"root", w.hr.root},
              {"multiplicities", mult},
              {"derivatives", der},
              {"step_ratio", qstr(w.hr.step_ratio)},
              {"ratio_bound", w.hr.ratio_bound}}},
            {"eta", qstr(w.eta)},
            {"count", w.count},
            {"N", w.N},
            {"K", w.K},
            {"C", qstr(w.C)},
            {"tau", qstr(w.tau)},
            {"interval", w.ell},
            {"pairs", pairs},
            {"r_star", w.r_star},
            {"r_hat", w.r_hat},
            {"I_r_star", w.i_rstar},
            {"theoretical_min", w.theoretical_min},
            {"representatives", w.representatives},
            {"attempts", attempts}};
}

inline Json to_json(const TransversalityCertificate& c) {
    Json pb = Json::array();
    for (const auto& p : c.pair_bounds) pb.push_back({{"i", p.i}, {"j", p.j}, {"bound", qstr(p.bound)}});
    return {{"pair_bounds", pb}, {"global", qstr(c.global)}, {"zeta_candidate", qstr(c.zeta_candidate)}, {"scope", c.scope}};
}

inline Json to_json(const ClassificationReport& r) {
    Json j = {{"refused", r.refused}, {"dim_assouad", r.dim_assouad}};
    j["dim_assouad_value"] = r.dim_assouad_value ? Json(*r.dim_assouad_value) : Json(nullptr);
    j["hausdorff_measure"] = r.hausdorff_measure;
    j["notes"] = r.notes;
    return j;
}

// Envelope shared by every report.
inline Json report_header(const std::string& command) {
    return {{"schema", kReportSchema}, {"tool", "ifsl"}, {"version", kToolVersion}, {"command", command}};
}

}  // namespace ifsl
