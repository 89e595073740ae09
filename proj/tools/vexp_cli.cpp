// vexp: command-line front end for exponents, norms, phi_n and the experiments.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vexp/experiments.hpp"

namespace {

using namespace vexp;
using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 64;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
    Config config;

    void load() {
        if (config_path.empty()) return;
        std::ifstream in(config_path);
        if (!in) throw InputError("cannot read config " + config_path);
        config = Config::parse(in);
    }

    /// Flags win over the config file.
    RunContext context() {
        RunContext ctx;
        ctx.seed = seed ? *seed : static_cast<std::uint64_t>(std::stoull(config.get_string("seed", std::to_string(ctx.seed))));
        ctx.threads = threads ? *threads : static_cast<unsigned>(config.get_int("threads", 1));
        ctx.out_dir = out.empty() ? config.get_string("out", "") : out;
        if (ctx.threads == 0) throw InputError("threads must be positive");
        return ctx;
    }
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

/// Writes to `path`, or to stdout when it is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream os(path);
    if (!os) throw InputError("cannot write " + path);
    os << text;
    if (!text.empty() && text.back() != '\n') os << '\n';
}

json extended_json(const ExtendedReal& v) { return v.is_divergent() ? json("inf") : json(v.value()); }

// ---------------------------------------------------------------------------
// exponent
// ---------------------------------------------------------------------------

struct ExponentArgs {
    std::string kind = "tilde-p";
    std::size_t truncation = 50;
    double value = 2.0;
    std::string function_path;
    std::string exponent_path;
    std::vector<double> at;
    std::size_t grid = 1024;
    bool conjugate = false;
};

ExponentFunction make_exponent(const ExponentArgs& a) {
    ExponentFunction p = [&] {
        if (!a.exponent_path.empty()) return exponent_from_json(read_json(a.exponent_path));
        if (a.kind == "tilde-p") return build_tilde_p(a.truncation);
        if (a.kind == "theorem52") return build_theorem52_exponent(static_cast<int>(a.truncation));
        if (a.kind == "constant") return ExponentFunction::constant(a.value);
        if (a.kind == "union") {
            if (a.function_path.empty()) throw InputError("--kind union needs --function");
            return exponent_for_integrable(function_from_json(read_json(a.function_path))).exponent;
        }
        throw InputError("unknown exponent kind: " + a.kind);
    }();
    return a.conjugate ? p.conjugate() : p;
}

int cmd_exponent_build(const ExponentArgs& a, Globals& g) {
    if (a.kind == "union" && a.exponent_path.empty()) {
        const auto u = exponent_for_integrable(function_from_json(read_json(a.function_path)));
        emit(g.out, to_json(u.exponent).dump(1));
        std::cerr << "certificate " << u.certificate << '\n';
        return kExitPass;
    }
    const auto p = make_exponent(a);
    emit(g.out, to_json(p).dump(1));
    std::cerr << to_string(p.kind()) << ": " << p.bumps().size() << " bumps on [" << p.domain().lo << ", "
              << p.domain().hi << ")\n";
    return kExitPass;
}

int cmd_exponent_eval(const ExponentArgs& a, Globals& g) {
    if (a.at.empty()) throw InputError("exponent eval needs --at");
    const auto p = make_exponent(a);
    auto arr = json::array();
    for (double x : a.at) arr.push_back({{"x", x}, {"p", extended_json(p.eval(x))}});
    emit(g.out, arr.dump(1));
    return kExitPass;
}

int cmd_exponent_sample(const ExponentArgs& a, Globals& g) {
    if (a.grid < 2) throw InputError("--grid must be >= 2");
    const auto p = make_exponent(a);
    std::ostringstream os;
    os.precision(17);
    os << "x,p(x)\n";
    const auto dom = p.domain();
    for (std::size_t i = 0; i < a.grid; ++i) {
        const double x = dom.lo + dom.length() * (static_cast<double>(i) + 0.5) / static_cast<double>(a.grid);
        const auto v = p.eval(x);
        os << x << ',';
        if (v.is_divergent()) os << "inf";
        else os << v.value();
        os << '\n';
    }
    emit(g.out, os.str());
    return kExitPass;
}

// ---------------------------------------------------------------------------
// norm
// ---------------------------------------------------------------------------

int cmd_norm(const std::string& function_path, const ExponentArgs& a, double tol, Globals& g) {
    const auto f = function_from_json(read_json(function_path));
    const auto p = make_exponent(a);
    NormTolerances t;
    t.bracket = tol;
    const auto r = luxemburg_norm(f, p, t);
    emit(g.out, to_json(r).dump(1));
    return kExitPass;
}

// ---------------------------------------------------------------------------
// phi
// ---------------------------------------------------------------------------

struct PhiArgs {
    int n = 25;
    int grid_density = PhiConfig{}.grid_density;
    int lambda_cap = PhiConfig{}.lambda_cap;
    bool symmetric = false;
    std::string mode = "best-effort";
    long r_max = 100000;
    int points = 2048;
};

PhiConfig phi_config(const PhiArgs& a) {
    PhiConfig c;
    c.grid_density = a.grid_density;
    c.lambda_cap = a.lambda_cap;
    c.symmetric = a.symmetric;
    if (a.mode == "strict") c.mode = PhiMode::Strict;
    else if (a.mode == "best-effort") c.mode = PhiMode::BestEffort;
    else throw InputError("unknown mode: " + a.mode);
    return c;
}

int cmd_phi_build(const PhiArgs& a, Globals& g) {
    try {
        const auto phi = build_phi_n(a.n, phi_config(a));
        emit(g.out, to_json(phi).dump(1));
        std::cerr << "phi_" << a.n << ": " << phi.m.size() << " steps, mass " << phi.mass_exact().str() << ", audit "
                  << (phi.audit_passed() ? "passed" : "failed") << '\n';
        return phi.audit_passed() ? kExitPass : kExitFail;
    } catch (const PhiConstructionError& e) {
        auto j = to_json(e.partial());
        j["error"] = e.what();
        j["failing_k"] = e.failing_k();
        emit(g.out, j.dump(1));
        std::cerr << e.what() << '\n';
        return kExitFail;
    }
}

std::vector<double> torus_points(int points) {
    if (points < 1) throw InputError("--points must be positive");
    std::vector<double> xs;
    for (int i = 0; i < points; ++i) xs.push_back(kTwoPi * i / points);
    return xs;
}

void summarize_scan(const std::vector<ScanPoint>& scan, const std::string& label) {
    double mean = 0.0, mx = 0.0;
    for (const auto& s : scan) {
        mean += s.max_abs_partial_sum;
        mx = std::max(mx, s.max_abs_partial_sum);
    }
    std::cerr << label << ": mean of max |S_r| " << mean / static_cast<double>(scan.size()) << ", largest " << mx << '\n';
}

int cmd_phi_scan(const PhiArgs& a, Globals& g) {
    auto cfg = phi_config(a);
    const auto ctx = g.context();
    const auto phi = build_phi_n(a.n, cfg);
    const auto scan = divergence_scan(phi.function(), a.r_max, torus_points(a.points), 0, ctx.threads);
    std::ostringstream os;
    write_scan_csv(os, scan);
    emit(g.out, os.str());
    summarize_scan(scan, "phi_" + std::to_string(a.n));
    return a.r_max < phi.m.back() ? kExitInconclusive : kExitPass;
}

// ---------------------------------------------------------------------------
// series
// ---------------------------------------------------------------------------

int cmd_series(const std::string& kind, const std::vector<int>& n_seq, const PhiArgs& a, Globals& g) {
    DivergentSeriesSpec spec;
    spec.weight = series_weight_from_string(kind);
    spec.n_sequence = n_seq;
    spec.truncation = n_seq.size();
    auto cfg = phi_config(a);
    const auto ctx = g.context();
    const auto s = assemble_series(spec, cfg);
    const auto scan = divergence_scan(s.f, a.r_max, torus_points(a.points), 0, ctx.threads);
    if (g.out.empty()) {
        std::ostringstream os;
        write_scan_csv(os, scan);
        emit("", os.str());
    } else {
        std::filesystem::create_directories(g.out);
        emit((std::filesystem::path(g.out) / "series_function.json").string(), to_json(s.f).dump(1));
        std::ostringstream os;
        write_scan_csv(os, scan);
        emit((std::filesystem::path(g.out) / "series_scan.csv").string(), os.str());
    }
    summarize_scan(scan, kind);
    long m_max = 0;
    for (const auto& phi : s.phis) m_max = std::max(m_max, phi.m.back());
    return a.r_max < m_max ? kExitInconclusive : kExitPass;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

/// Unprefixed keys apply to every experiment; `id.key` only to `id` and wins.
Config experiment_config(const Config& all, const std::string& id) {
    Config c;
    const std::string prefix = id + ".";
    auto scoped = [](const std::string& k) {
        for (const auto& e : experiment_ids())
            if (k.rfind(e + ".", 0) == 0) return true;
        return false;
    };
    for (const auto& [k, v] : all.values())
        if (!scoped(k) && k != "seed" && k != "threads" && k != "out") c.set(k, v);
    for (const auto& [k, v] : all.values())
        if (k.rfind(prefix, 0) == 0) c.set(k.substr(prefix.size()), v);
    return c;
}

int cmd_verify(const std::string& id, Globals& g) {
    const auto ctx = g.context();
    std::vector<std::string> ids = id == "all" ? experiment_ids() : std::vector<std::string>{id};
    std::vector<ExperimentReport> reports;
    for (const auto& e : ids) {
        auto cfg = experiment_config(g.config, e);
        RunContext sub = ctx;
        if (!ctx.out_dir.empty()) sub.out_dir = (std::filesystem::path(ctx.out_dir) / e).string();
        reports.push_back(run_experiment(e, cfg, sub));
        const auto& r = reports.back();
        std::cout << r.id << ": " << to_string(r.verdict) << '\n';
        for (const auto& c : r.checks)
            std::cout << "  [" << (c.passed ? "ok" : "FAIL") << "] " << c.name << (c.detail.empty() ? "" : ": " + c.detail)
                      << '\n';
        if (!ctx.out_dir.empty()) emit((std::filesystem::path(sub.out_dir) / "report.json").string(), to_json(r).dump(1));
    }
    if (!ctx.out_dir.empty()) {
        std::ostringstream os;
        write_summary_csv(os, reports);
        emit((std::filesystem::path(ctx.out_dir) / "summary.csv").string(), os.str());
    }
    bool fail = false, inconclusive = false;
    for (const auto& r : reports) {
        fail = fail || r.verdict == Verdict::Fail;
        inconclusive = inconclusive || r.verdict == Verdict::Inconclusive;
    }
    return fail ? kExitFail : inconclusive ? kExitInconclusive : kExitPass;
}

void exponent_options(CLI::App* c, ExponentArgs& a) {
    c->add_option("--kind", a.kind, "tilde-p, theorem52, union or constant")
        ->check(CLI::IsMember({"tilde-p", "theorem52", "union", "constant"}));
    c->add_option("--truncation", a.truncation, "bumps K (tilde-p) or rows N (theorem52)");
    c->add_option("--value", a.value, "value of a constant exponent");
    c->add_option("--function", a.function_path, "step function JSON for --kind union");
    c->add_option("--exponent", a.exponent_path, "load the exponent from JSON instead");
    c->add_flag("--conjugate", a.conjugate, "use the conjugate exponent");
}

void phi_options(CLI::App* c, PhiArgs& a) {
    c->add_option("--grid-density", a.grid_density, "audit points per D_k");
    c->add_option("--lambda-cap", a.lambda_cap, "odd candidates tried per step");
    c->add_flag("--symmetric", a.symmetric, "plateaus centered at A_k");
    c->add_option("--mode", a.mode, "strict or best-effort")->check(CLI::IsMember({"strict", "best-effort"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variable exponent spaces: exponents, norms, phi_n and experiments"};
    app.require_subcommand(1);
    // global options may follow the subcommand
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "flat key = value file");
    app.add_option("--seed", g.seed, "64-bit run seed");
    app.add_option("--threads", g.threads, "worker threads for scans");
    app.add_option("--out", g.out, "output file or directory");

    ExponentArgs ea;
    auto* exponent = app.add_subcommand("exponent", "build, evaluate or sample an exponent");
    exponent->require_subcommand(1);
    auto* ebuild = exponent->add_subcommand("build", "write the exponent as JSON");
    auto* eeval = exponent->add_subcommand("eval", "evaluate at points");
    auto* esample = exponent->add_subcommand("sample", "CSV of p on cell midpoints");
    for (auto* c : {ebuild, eeval, esample}) exponent_options(c, ea);
    eeval->add_option("--at", ea.at, "evaluation points")->required();
    esample->add_option("--grid", ea.grid, "number of cells");

    ExponentArgs na;
    std::string function_path;
    double tol = NormTolerances{}.bracket;
    auto* norm = app.add_subcommand("norm", "Luxemburg norm bracket of a function");
    exponent_options(norm, na);
    norm->remove_option(norm->get_option("--function"));
    norm->add_option("--function", function_path, "function JSON")->required();
    norm->add_option("--tol", tol, "relative bracket tolerance");

    PhiArgs pa;
    auto* phi = app.add_subcommand("phi", "build or scan phi_n");
    phi->require_subcommand(1);
    auto* pbuild = phi->add_subcommand("build", "construct phi_n and its audit");
    auto* pscan = phi->add_subcommand("scan", "max partial sums on a torus grid");
    for (auto* c : {pbuild, pscan}) {
        c->add_option("--n", pa.n, "index n >= 3");
        phi_options(c, pa);
    }
    pscan->add_option("--r-max", pa.r_max, "largest partial sum index");
    pscan->add_option("--points", pa.points, "torus grid points");

    PhiArgs sa;
    std::string series_kind = "kolmogorov";
    std::vector<int> n_seq{25, 50, 100};
    auto* series = app.add_subcommand("series", "assemble a Kolmogorov or Marcinkiewicz truncation and scan it");
    series->add_option("--kind", series_kind, "kolmogorov or marcinkiewicz")
        ->check(CLI::IsMember({"kolmogorov", "marcinkiewicz"}));
    series->add_option("--n-seq", n_seq, "increasing n_k")->delimiter(',');
    series->add_option("--r-max", sa.r_max, "largest partial sum index");
    series->add_option("--points", sa.points, "torus grid points");
    phi_options(series, sa);

    std::string verify_id = "all";
    auto* verify = app.add_subcommand("verify", "run experiments; exit 0 iff all pass");
    std::vector<std::string> choices = experiment_ids();
    choices.push_back("all");
    verify->add_option("--id", verify_id, "experiment id or all")->check(CLI::IsMember(choices));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        g.load();
        if (*ebuild) return cmd_exponent_build(ea, g);
        if (*eeval) return cmd_exponent_eval(ea, g);
        if (*esample) return cmd_exponent_sample(ea, g);
        if (*norm) return cmd_norm(function_path, na, tol, g);
        if (*pbuild) return cmd_phi_build(pa, g);
        if (*pscan) return cmd_phi_scan(pa, g);
        if (*series) return cmd_series(series_kind, n_seq, sa, g);
        if (*verify) return cmd_verify(verify_id, g);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFail;
    }
    return kExitUsage;
}
