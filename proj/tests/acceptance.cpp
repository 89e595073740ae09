// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vexp/experiments.hpp"

using namespace vexp;
using hp = boost::multiprecision::cpp_dec_float_50;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string fmt_exact(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string failed_checks(const ExperimentReport& r) {
    std::string s;
    for (const auto& c : r.checks)
        if (!c.passed) s += (s.empty() ? "" : "; ") + c.name + (c.detail.empty() ? "" : " (" + c.detail + ")");
    return s;
}

Outcome from_report(const ExperimentReport& r, const std::string& extra = "") {
    Outcome o;
    o.pass = r.verdict == Verdict::Pass;
    o.detail = "verdict " + to_string(r.verdict) + (extra.empty() ? "" : ", " + extra);
    if (!o.pass) o.detail += ", failed: " + failed_checks(r);
    return o;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PiecewiseFunction random_step(std::mt19937_64& rng, int pieces, double vmax, Interval dom = unit_interval()) {
    std::uniform_real_distribution<double> U(dom.lo, dom.hi), V(-vmax, vmax);
    std::vector<double> cuts;
    for (int i = 0; i < 2 * pieces; ++i) cuts.push_back(U(rng));
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::array<double, 3>> s;
    for (std::size_t i = 0; i + 1 < cuts.size(); i += 2)
        if (cuts[i + 1] > cuts[i]) s.push_back({cuts[i], cuts[i + 1], V(rng)});
    return PiecewiseFunction::step(s);
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (double q : {1.5, 2.0, 3.0}) {
        const auto p = ExponentFunction::constant(q);
        int done = 0;
        while (done < 100) {
            const auto f = random_step(rng, 5, 10.0);
            if (f.is_zero()) continue;
            ++done;
            double s = 0.0;
            for (const auto& pc : f.pieces()) s += std::pow(std::abs(pc.coef), q) * (pc.b - pc.a);
            const double classical = std::pow(s, 1.0 / q);
            const auto r = luxemburg_norm(f, p);
            worst = std::max(worst, std::abs(r.mid() - classical) / (1.0 + classical));
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-8 && t < 10.0, "max |norm - Lp| / (1 + norm) = " + fmt(worst) + ", " + fmt(t) + " s"};
}

// h chi_{(r, r + d)} under p(r + u) = 2 + log(1/u): the modular at lambda is
// (h/lambda)^2 d^{1 - L} / (1 - L) with L = log(h/lambda) < 1.
double single_bump_oracle(double d, double h) {
    const hp H = h, D = d;
    auto F = [&](const hp& lam) {
        const hp L = log(H / lam);
        return pow(H / lam, 2) * pow(D, 1 - L) / (1 - L);
    };
    hp lo = H * exp(hp(-1)) * (1 + hp("1e-40")), hi = H * 100 + 10;
    for (int i = 0; i < 300; ++i) {
        const hp mid = (lo + hi) / 2;
        if (F(mid) > 1) lo = mid;
        else hi = mid;
    }
    return hp((lo + hi) / 2).convert_to<double>();
}

Outcome criterion2() {
    LogBump b;
    b.center = 0.3;
    b.width = kBumpCutoff;
    b.index = 1;
    const ExponentFunction p(ExponentKind::TildeP, 2.0, unit_interval(), {b});
    double worst = 0.0;
    int cases = 0;
    NormTolerances tol;
    tol.bracket = 1e-12;
    for (double d : {5e-3, 1e-3, 1e-4, 1e-5, 1e-6})
        for (double h : {0.5, 1.0, 2.0, 5.0}) {
            const auto r = luxemburg_norm(characteristic(0.3, 0.3 + d, h), p, tol);
            worst = std::max(worst, std::abs(r.mid() - single_bump_oracle(d, h)));
            ++cases;
        }
    return {cases == 20 && worst <= 1e-8, std::to_string(cases) + " cases, max |norm - oracle| = " + fmt(worst)};
}

Outcome timed(const std::function<ExperimentReport()>& run, double budget, ExperimentReport* keep = nullptr,
              const std::string& extra_key = "") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run();
    const double t = seconds_since(t0);
    std::string extra = fmt(t) + " s";
    if (r.metrics.count(extra_key)) extra += ", " + extra_key + " = " + fmt(r.metrics.at(extra_key));
    auto o = from_report(r, extra);
    if (t >= budget) {
        o.pass = false;
        o.detail += ", over budget " + fmt(budget) + " s";
    }
    if (keep) *keep = r;
    return o;
}

// ---------------------------------------------------------------------------

Outcome criterion10() {
    std::mt19937_64 rng(110);
    const auto p = build_tilde_p(10);
    std::uniform_real_distribution<double> U(0.0, 1.0), C(-10.0, 10.0), S(1.0, 3.0);
    const NormTolerances tol{1e-9, 1e-11};
    const int N = 1000;
    int mono = 0, homog = 0, ball = 0, invol = 0, equi = 0;

    for (int t = 0; t < N; ++t) {
        // monotonicity: |f| <= |g| pointwise
        const auto f = random_step(rng, 3, 2.0);
        std::vector<std::array<double, 3>> gs;
        for (const auto& pc : f.pieces()) gs.push_back({pc.a, pc.b, pc.coef * S(rng)});
        const auto g = PiecewiseFunction::step(gs);
        const auto nf = luxemburg_norm(f, p, tol), ng = luxemburg_norm(g, p, tol);
        if (!(nf.lo <= ng.hi * (1.0 + 1e-12))) ++mono;

        // homogeneity
        const double c = C(rng);
        const auto nc = luxemburg_norm(f.scaled(c), p, tol);
        if (!(std::abs(nc.mid() - std::abs(c) * nf.mid()) <= nc.width() + std::abs(c) * nf.width() + 1e-12)) ++homog;

        // unit ball: ||f|| <= 1 iff rho(f) <= 1, and rho(f / ||f||) = 1 at the bracket
        if (!f.is_zero()) {
            const auto m1 = modular(f, p, 1.0);
            bool ok = true;
            if (nf.hi <= 1.0 && !(m1.is_finite() && m1.value() <= 1.0 + 1e-9)) ok = false;
            if (nf.lo > 1.0 && !(m1.is_divergent() || m1.value() > 1.0 - 1e-9)) ok = false;
            const auto mh = modular(f, p, nf.hi), ml = modular(f, p, nf.lo);
            if (!(mh.is_finite() && mh.value() <= 1.0 + 1e-9)) ok = false;
            if (!(ml.is_divergent() || ml.value() >= 1.0 - 1e-9)) ok = false;
            if (!ok) ++ball;
        }

        // conjugate involution: (p')' = p and 1/p + 1/p' = 1
        // half the points sit within 1e-8..1e-2 of a bump center
        double x = U(rng);
        if (t % 2 == 0) {
            const auto& bump = p.bumps()[static_cast<std::size_t>(t / 2) % p.bumps().size()];
            x = std::min(0.999999, bump.center + std::exp(std::log(1e-8) + U(rng) * std::log(1e6)));
        }
        const auto pv = p.eval(x), qv = p.conjugate().eval(x), rv = p.conjugate().conjugate().eval(x);
        if (pv.is_divergent()) {
            if (!rv.is_divergent() || qv.is_divergent() || qv.value() != 1.0) ++invol;
        } else if (rv.is_divergent() || std::abs(rv.value() - pv.value()) > 1e-12 * pv.value() ||
                   std::abs(1.0 / pv.value() + 1.0 / qv.value() - 1.0) > 1e-14) {
            ++invol;
        }

        // equimeasurability of f*
        const auto fs = decreasing_rearrangement(f);
        const double s = 2.0 * U(rng);
        if (std::abs(level_set_measure(f, s) - level_set_measure(fs, s)) > 1e-14) ++equi;
    }
    const int total = mono + homog + ball + invol + equi;
    std::ostringstream os;
    os << N << " cases each; violations: monotonicity " << mono << ", homogeneity " << homog << ", unit ball " << ball
       << ", conjugate involution " << invol << ", equimeasurability " << equi;
    return {total == 0, os.str()};
}

}  // namespace

int main() {
    const RunContext ctx;
    ExperimentReport band;
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"constant-exponent oracle", criterion1},
        {"single-bump closed-form oracle", criterion2},
        {"interval norms >= 1/e on p-tilde",
         [&] { return timed([&] { Config c; return thm32_interval_norms(c, ctx); }, 30.0, nullptr, "min_lo"); }},
        {"characteristic-function scaling",
         [&] { return timed([&] { Config c; return eq41_char_scaling(c, ctx); }, 600.0); }},
        {"norm / L1 equivalence band",
         [&] { return timed([&] { Config c; return lemma41_ratio_study(c, ctx); }, 600.0, &band, "spread"); }},
        {"maximal-function cutoff curve",
         [&] { return timed([&] { Config c; return thm42_maximal_divergence(c, ctx); }, 600.0); }},
        {"phi_n empirical properties",
         [&] { return timed([&] { Config c; return lemma51_empirical(c, ctx); }, 600.0); }},
        {"union-construction exponent",
         [&] { return timed([&] { Config c; return eq51_union_membership(c, ctx); }, 600.0); }},
        {"Kolmogorov / Marcinkiewicz end to end",
         [&] {
             return timed(
                 [&] {
                     Config c;
                     if (band.metrics.count("band_lo")) {
                         c.set("band_lo", fmt_exact(band.metrics.at("band_lo")));
                         c.set("band_hi", fmt_exact(band.metrics.at("band_hi")));
                     }
                     return thm52_end_to_end(c, ctx);
                 },
                 900.0);
         }},
        {"axiom property suite", criterion10},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << "criterion " << i + 1 << ' ' << (o.pass ? "PASS" : "FAIL") << ": " << criteria[i].first << ": "
                  << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << '/' << criteria.size() << " criteria pass"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
