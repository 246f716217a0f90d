// ifsl command-line front end: load IFS or family files, run an analysis, write a report.
//
// Exit codes: 0 analysis completed, 1 input error, 2 resource limit (partial report written).

#include "ifsl/ifsl.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace ifsl;

namespace {

struct RunConfig {
    std::string command;
    std::string ifs_path, family_path, out_path;
    std::string format = "json";
    int depth = 0;  // 0: command default
    std::size_t budget = kDefaultWordBudget;
    long target = 10;
    std::string x = "0", r = "1/1000";
    int N = 1;
    std::uint64_t seed = 1;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct Run {
    RunConfig cfg;
    Json report;
    Table table;
};

int depth_or(const RunConfig& c, int fallback) { return c.depth > 0 ? c.depth : fallback; }

Ifs load_ifs(const RunConfig& c) {
    if (!c.ifs_path.empty()) return ifs_from_json(load_json_file(c.ifs_path));
    if (!c.family_path.empty()) return family_from_json(load_json_file(c.family_path)).current();
    throw InputError("--ifs or --family is required");
}

TranslationFamily load_family(const RunConfig& c) {
    if (c.family_path.empty()) throw InputError("--family is required");
    return family_from_json(load_json_file(c.family_path));
}

std::vector<Q> ratios_of(const Ifs& ifs) {
    std::vector<Q> r;
    for (const auto& f : ifs.maps) r.push_back(f.r);
    return r;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------- commands

void cmd_dim(Run& run) {
    Ifs ifs = load_ifs(run.cfg);
    Json& rep = run.report;
    rep["system"] = to_json(ifs);
    if (ifs.affine()) rep["similarity"] = to_json(similarity_dimension(ratios_of(ifs)));
    int n = depth_or(run.cfg, 10);
    rep["bowen"] = to_json(bowen_dimension(ifs, n, run.cfg.budget));
    std::vector<AssouadSample> samples;
    AssouadConfig ac;
    ac.depth = std::min(n, 4);
    rep["assouad"] = to_json(assouad_estimate(ifs, ac, &samples, run.cfg.budget));
    rep["assouad"]["note"] = "heuristic covering estimate, not a certified bound";
    Json js = Json::array();
    run.table.header = {"x", "R", "r", "count", "estimate"};
    for (const auto& s : samples) {
        js.push_back({{"x", qstr(s.x)}, {"R", qstr(s.R)}, {"r", qstr(s.r)}, {"count", s.count}, {"estimate", s.estimate}});
        run.table.rows.push_back({qstr(s.x), qstr(s.R), qstr(s.r), std::to_string(s.count), num(s.estimate)});
    }
    rep["assouad_samples"] = js;
}

void cmd_separation(Run& run) {
    Ifs ifs = load_ifs(run.cfg);
    Json& rep = run.report;
    rep["system"] = to_json(ifs);
    int n = depth_or(run.cfg, 12);
    rep["ssp"] = to_json(ssp_check(ifs));
    if (ifs.affine()) rep["overlaps"] = to_json(exact_overlap_search(ifs, std::min(n, 12), run.cfg.budget));
    WspVerdict v = wsp_verdict(ifs, n, run.cfg.budget);
    rep["wsp"] = to_json(v);
    run.table.header = {"n", "d_n", "d_n_upper", "exact"};
    for (const auto& e : v.d_sequence.entries)
        run.table.rows.push_back({std::to_string(e.n), qstr(e.value), qstr(e.upper), e.exact ? "1" : "0"});
    if (!v.d_sequence.complete) throw ResourceLimit("d_n search stopped by the node budget");
}

InfiniteWordSpec random_word(std::mt19937_64& rng, int m, int first) {
    InfiniteWordSpec w;
    auto sym = [&] { return static_cast<int>(rng() % static_cast<std::uint64_t>(m)) + 1; };
    std::size_t pre = rng() % 4, per = 1 + rng() % 3;
    w.preperiod.push_back(first);
    for (std::size_t k = 0; k < pre; ++k) w.preperiod.push_back(sym());
    for (std::size_t k = 0; k < per; ++k) w.period.push_back(sym());
    return w;
}

void cmd_transversality(Run& run) {
    TranslationFamily fam = load_family(run.cfg);
    Json& rep = run.report;
    rep["system"] = to_json(fam.base);
    Json lam = Json::array();
    for (const auto& l : fam.lambda) lam.push_back(qstr(l));
    rep["lambda"] = lam;
    rep["radius"] = qstr(fam.radius);
    auto cert = lemma1_check(fam);
    rep["certificate"] = cert ? to_json(*cert) : Json(nullptr);
    if (!cert) rep["certificate_note"] = "pairwise bound 1 - rho_i* - rho_j* is not positive for some pair";

    std::mt19937_64 rng(run.cfg.seed);
    const int pairs = 100;
    const double h = std::min(1e-4, fam.radius.get_d() / 20);
    int chain_ok = 0;
    double worst_fd = 0, min_abs_ep = INFINITY;
    run.table.header = {"pair", "e1", "e2", "abs_ep", "rho_sum", "chain_holds", "fd_error"};
    for (int k = 0; k < pairs && fam.m() >= 2; ++k) {
        int a = static_cast<int>(rng() % static_cast<std::uint64_t>(fam.m())) + 1;
        int b = static_cast<int>(rng() % static_cast<std::uint64_t>(fam.m() - 1)) + 1;
        if (b >= a) ++b;
        auto i = random_word(rng, fam.m(), a), j = random_word(rng, fam.m(), b);
        EzResult e = ez_values(fam, i, j);
        double fd = h > 0 ? gradient_fd_check(fam, i, j, h) : 0.0;
        chain_ok += e.chain_holds;
        worst_fd = std::max(worst_fd, fd);
        min_abs_ep = std::min(min_abs_ep, e.abs_ep);
        run.table.rows.push_back({std::to_string(k), num(e.e1), num(e.e2), num(e.abs_ep), num(e.rho_sum),
                                  e.chain_holds ? "1" : "0", num(fd)});
    }
    rep["random_pairs"] = {{"seed", run.cfg.seed},   {"pairs", pairs},         {"chain_holds", chain_ok},
                           {"fd_step", h},           {"worst_fd_error", worst_fd}, {"min_abs_ep", min_abs_ep}};
}

void cmd_wsp_witness(Run& run) {
    Ifs ifs = load_ifs(run.cfg);
    Json& rep = run.report;
    rep["system"] = to_json(ifs);
    auto w = find_common_fixed_point(ifs, depth_or(run.cfg, 3), run.cfg.budget);
    if (!w) {
        rep["witness"] = nullptr;
        rep["note"] = "no common fixed point with distinct first and last symbols up to the word length";
        return;
    }
    rep["witness"] = to_json(*w);
    if (w->independence.kind != IndependenceKind::IrrationalCertified) {
        rep["note"] = "derivative ratio is rational; irrationalize the system before demonstrating failure";
        return;
    }
    WspFailureWitness d = demonstrate_wsp_failure(ifs, *w, run.cfg.target, run.cfg.budget);
    rep["demonstration"] = to_json(d);
    run.table.header = {"j", "eta", "count"};
    for (const auto& a : d.attempts) run.table.rows.push_back({std::to_string(a.j), qstr(a.eta), std::to_string(a.count)});
}

void cmd_phi_count(Run& run) {
    Ifs ifs = load_ifs(run.cfg);
    Json& rep = run.report;
    rep["system"] = to_json(ifs);
    Q x = parse_rational(run.cfg.x), r = parse_rational(run.cfg.r);
    if (r <= 0) throw InputError("--r must be positive");
    if (run.cfg.N < 1) throw InputError("--N must be >= 1");
    rep["x"] = qstr(x);
    rep["N"] = run.cfg.N;
    // scales r, r/2, ..., r/2^(depth-1)
    int levels = depth_or(run.cfg, 1);
    run.table.header = {"scale", "count"};
    rep["table"] = Json::array();
    for (int k = 0; k < levels; ++k) {
        Q s = r / qpow(Q(2), k);
        PhiResult p = phi_count(ifs, x, s, run.cfg.N, run.cfg.budget);
        Json row = {{"scale", qstr(s)}};
        row.update(to_json(p));
        rep["table"].push_back(row);
        run.table.rows.push_back({qstr(s), std::to_string(p.count)});
    }
}

void cmd_classify(Run& run) {
    TranslationFamily fam = load_family(run.cfg);
    Json& rep = run.report;
    if (!fam.base.affine()) throw InputError("unsupported input: classify needs an affine translation family");
    Ifs ifs = fam.current();
    rep["system"] = to_json(ifs);
    Json lam = Json::array();
    for (const auto& l : fam.lambda) lam.push_back(qstr(l));
    rep["lambda"] = lam;

    DimensionEstimate s0 = similarity_dimension(ratios_of(ifs));
    rep["s0"] = to_json(s0);
    bool gradient_condition = lemma1_check(fam).has_value();
    rep["pairwise_ratio_condition"] = gradient_condition;
    SspReport ssp = ssp_check(ifs);
    rep["ssp"] = to_json(ssp);

    int n = depth_or(run.cfg, 8);
    WspVerdict v = wsp_verdict(ifs, n, run.cfg.budget);
    std::optional<CommonFixedPointWitness> w;
    w = find_common_fixed_point(ifs, std::min(n, 3), run.cfg.budget);
    if (w && w->independence.kind == IndependenceKind::IrrationalCertified) {
        v.status = WspStatus::WitnessedFails;
        v.witness = "common fixed point of " + word_str(w->omega) + " and " + word_str(w->tau) +
                    " with irrational log-derivative ratio";
    }
    rep["wsp"] = to_json(v);
    rep["witness"] = w ? to_json(*w) : Json(nullptr);

    std::string label, status;
    if (s0.lower > 1) {
        label = "1";
        status = "GENERIC_EXPECTATION";
        rep["claim"] = "Lebesgue measure positive, dim_H = dim_A = 1";
    } else if (s0.upper <= 1 && ssp.status == SspStatus::Holds) {
        label = "2a";
        status = "CERTIFIED";
        rep["claim"] = "SSP holds: dim_H = dim_A = s0 and H^s0 > 0";
    } else if (s0.upper <= 1 && v.status == WspStatus::WitnessedFails) {
        label = "2b";
        status = "CERTIFIED";
        rep["claim"] = "WSP fails by witness: dim_A = 1 and H^dim_H = 0";
    } else if (s0.upper <= 1) {
        label = "2b";
        status = "GENERIC_EXPECTATION";
        rep["claim"] = "H^dim_H = 0 and dim_A = 1";
    } else {
        label = "undetermined";
        status = "INCONCLUSIVE";
        rep["claim"] = "similarity dimension bracket contains 1";
    }
    rep["case"] = label;
    rep["status"] = status;
    if (status == "GENERIC_EXPECTATION")
        rep["caveat"] = "holds apart from a very small set of parameters; not verified at this lambda";
    WspStatus vs = v.status;
    CertificateKind ck = ssp.status == SspStatus::Holds ? CertificateKind::Ssp
                         : v.certificate                 ? CertificateKind::Lattice
                                                         : CertificateKind::None;
    rep["classification"] = to_json(synthesize_verdict(s0, vs, false, n, ck));
    run.table.header = {"field", "value"};
    run.table.rows = {{"case", label}, {"status", status}, {"s0", num(s0.value)}, {"ssp", ssp.status == SspStatus::Holds ? "HOLDS" : "FAILS"},
                      {"wsp", to_string(v.status)}};
}

// ---------------------------------------------------------------- output

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string render(const Run& run) {
    if (run.cfg.format == "json") return run.report.dump(2) + "\n";
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out += (k ? "," : "") + csv_cell(cells[k]);
        out += "\n";
    };
    line(run.table.header);
    for (const auto& r : run.table.rows) line(r);
    return out;
}

void emit(const Run& run) {
    std::string text = render(run);
    if (run.cfg.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(run.cfg.out_path, std::ios::binary);
    if (!f) throw InputError(run.cfg.out_path + ": cannot write");
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ifsl: separation, dimension and WSP analysis of iterated function systems on the line"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    Run run;
    RunConfig& c = run.cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--ifs", c.ifs_path, "IFS file (JSON)");
        sub->add_option("--family", c.family_path, "translation family file (JSON)");
        sub->add_option("--depth", c.depth, "depth / word length override")->check(CLI::PositiveNumber);
        sub->add_option("--budget", c.budget, "node budget")->check(CLI::PositiveNumber);
        sub->add_option("--target", c.target, "target Phi_N count")->check(CLI::PositiveNumber);
        sub->add_option("--x", c.x, "centre point (rational)");
        sub->add_option("--r", c.r, "scale (rational)");
        sub->add_option("--N", c.N, "suffix length N")->check(CLI::PositiveNumber);
        sub->add_option("--out", c.out_path, "output file (default stdout)");
        sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--seed", c.seed, "seed for randomized checks");
    };
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"dim", "similarity, Bowen and Assouad dimension estimates"},
        {"separation", "SSP check, exact overlaps and the d_n WSP criterion"},
        {"transversality", "gradient bound certificate for a translation family"},
        {"wsp-witness", "common fixed point witness and Phi_N blow-up demonstration"},
        {"classify", "case label for a translation family at its lambda"},
        {"phi-count", "Phi_N count of distinct maps near x at scale r"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    c.command = app.get_subcommands().front()->get_name();

    run.report = report_header(c.command);
    run.report["budgets"] = {{"depth", c.depth}, {"budget", c.budget}, {"target", c.target}, {"seed", c.seed}};
    int code = 0;
    try {
        if (c.command == "dim") cmd_dim(run);
        else if (c.command == "separation") cmd_separation(run);
        else if (c.command == "transversality") cmd_transversality(run);
        else if (c.command == "wsp-witness") cmd_wsp_witness(run);
        else if (c.command == "classify") cmd_classify(run);
        else cmd_phi_count(run);
        run.report["outcome"] = "COMPLETED";
    } catch (const ResourceLimit& e) {
        run.report["outcome"] = "RESOURCE_LIMIT";
        run.report["error"] = e.what();
        std::cerr << "resource limit: " << e.what() << "\n";
        code = 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const PreconditionError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const ConstructionError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
    try {
        emit(run);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
    return code;
}
