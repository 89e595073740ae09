#pragma once

// Non-increasing rearrangements and the integral test
//
//   X_a = X_b  iff  integral A^{p*} < infinity for every A > 1.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vexp/exponent.hpp"
#include "vexp/funcrep.hpp"
#include "vexp/quadrature.hpp"

namespace vexp {

/// f* on (0, |supp f|): levels |c| sorted descending, widths concatenated.
inline PiecewiseFunction decreasing_rearrangement(const PiecewiseFunction& f) {
    if (!f.is_step()) throw UnsupportedRepresentation("rearrangement needs a step function");
    std::vector<std::pair<double, double>> levels;  // (|c|, width)
    for (const auto& p : f.pieces())
        if (p.coef != 0.0) levels.emplace_back(std::abs(p.coef), p.b - p.a);
    std::stable_sort(levels.begin(), levels.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<Piece> out;
    double t = 0.0;
    for (const auto& [c, w] : levels) {
        if (!out.empty() && out.back().coef == c) {
            out.back().b += w;
        } else {
            out.push_back(Piece::constant(t, t + w, c));
        }
        t = out.back().b;
    }
    return PiecewiseFunction(std::move(out));
}

/// |{ |f| > s }| by direct summation over pieces.
inline double level_set_measure(const PiecewiseFunction& f, double s) {
    double m = 0.0;
    for (const auto& p : f.pieces()) {
        if (p.kind != PieceKind::Constant) throw UnsupportedRepresentation("level sets need a step function");
        if (std::abs(p.coef) > s) m += p.b - p.a;
    }
    return m;
}

namespace detail {
/// Average of log(1/(x - c)) over (l, r) with c <= l, via the antiderivative of log(1/u).
inline double mean_log_reciprocal(double l, double r, double c) {
    auto F = [](double u) { return u > 0.0 ? u - u * std::log(u) : 0.0; };
    return (F(r - c) - F(l - c)) / (r - l);
}
}  // namespace detail

/// Step approximation of p on `grid_size` equal cells, then rearranged.
/// Regular cells take the midpoint value. A cell holding a bump center is cut
/// geometrically toward the center (ratio 1/2, `singular_levels` pieces) and
/// every sub-cell takes its average through the log antiderivative.
inline PiecewiseFunction exponent_rearrangement_grid(const ExponentFunction& p, std::size_t grid_size = 1u << 16,
                                                     int singular_levels = 40) {
    if (grid_size == 0) throw InputError("grid_size must be positive");
    const Interval dom = p.domain();
    const double h = dom.length() / static_cast<double>(grid_size);
    std::vector<std::array<double, 3>> cells;
    cells.reserve(grid_size);
    auto average = [&](double l, double r) {
        double v = p.level_at(0.5 * (l + r));
        for (const auto& b : p.bumps()) {
            if (b.center >= r) break;
            const double lo = std::max(l, b.center), hi = std::min(r, b.support_end());
            if (hi > lo) v += detail::mean_log_reciprocal(lo, hi, b.center) * (hi - lo) / (r - l);
        }
        return v;
    };
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double l = dom.lo + h * static_cast<double>(i);
        const double r = i + 1 == grid_size ? dom.hi : l + h;
        const double mid = 0.5 * (l + r);
        auto it = std::lower_bound(p.bumps().begin(), p.bumps().end(), l,
                                   [](const LogBump& b, double x) { return b.center < x; });
        const bool singular = it != p.bumps().end() && it->center < r;
        if (!singular || p.conjugated()) {
            auto e = p.eval(mid);
            cells.push_back({l - dom.lo, r - dom.lo, e.is_divergent() ? std::numeric_limits<double>::max() : e.value()});
            continue;
        }
        std::vector<double> cuts{l, r};
        for (auto jt = it; jt != p.bumps().end() && jt->center < r; ++jt) {
            if (jt->center > l) cuts.push_back(jt->center);
            double s = std::min(r, jt->support_end());
            for (int k = 0; k < singular_levels && s > jt->center; ++k) {
                s = jt->center + 0.5 * (s - jt->center);
                if (s > l && s < r) cuts.push_back(s);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            cells.push_back({cuts[k] - dom.lo, cuts[k + 1] - dom.lo, average(cuts[k], cuts[k + 1])});
    }
    return decreasing_rearrangement(PiecewiseFunction::step(cells));
}

/// integral over the domain of A^{p(x)}, equal to integral of A^{p*} by equimeasurability.
inline ModularValue prop21_integral(const ExponentFunction& p, double A, double tol = 1e-11) {
    if (!(A > 1.0)) throw InputError("A must exceed 1");
    auto constant_a = PiecewiseFunction::step({{p.domain().lo, p.domain().hi, A}});
    return powered_integral(constant_a, p, 1.0, p.domain().lo, p.domain().hi, tol);
}

inline std::vector<ModularValue> prop21_integral_test(const ExponentFunction& p, const std::vector<double>& A_values,
                                                      double tol = 1e-11) {
    std::vector<ModularValue> out;
    out.reserve(A_values.size());
    for (double A : A_values) out.push_back(prop21_integral(p, A, tol));
    return out;
}

/// Probe values of A used for the classification when none are given.
inline std::vector<double> default_probe_values() { return {1.1, 1.5, 2.0, std::numbers::e, 3.0, 10.0, 100.0}; }

enum class SubspaceRelation { Equal, StrictlyContained };

inline std::string to_string(SubspaceRelation r) {
    return r == SubspaceRelation::Equal ? "X_a = X_b" : "X_a strictly contained in X_b";
}

// ---------------------------------------------------------------------------
// Profiles on (0, 1/e)
// ---------------------------------------------------------------------------

enum class ProfileKind { XPower, LogPower };

/// p(x) = x^alpha ("x^alpha") or p(x) = (log 1/x)^alpha ("log^alpha") on (0, 1/e).
struct ProfilePreset {
    ProfileKind kind = ProfileKind::LogPower;
    double alpha = 1.0;

    static ProfilePreset parse(const std::string& name, double alpha) {
        if (name == "x^alpha") return {ProfileKind::XPower, alpha};
        if (name == "log^alpha") return {ProfileKind::LogPower, alpha};
        throw InputError("unknown preset: " + name);
    }
    [[nodiscard]] std::string name() const { return kind == ProfileKind::XPower ? "x^alpha" : "log^alpha"; }

    [[nodiscard]] double eval(double x) const {
        if (!(x > 0.0 && x < kInvE)) throw InputError("profile evaluated outside (0, 1/e)");
        return kind == ProfileKind::XPower ? std::pow(x, alpha) : std::pow(-std::log(x), alpha);
    }
};

/// integral over (0, 1/e) of A^{p(x)}. With x = e^{-L} the log profile becomes
/// integral over L > 1 of exp(log A * L^alpha - L); divergence is decided from
/// the exponent of that integrand.
inline ModularValue profile_integral(const ProfilePreset& pr, double A, double tol = 1e-11) {
    if (!(A > 1.0)) throw InputError("A must exceed 1");
    const double a = std::log(A);
    if (pr.kind == ProfileKind::XPower) {
        if (pr.alpha < 0.0) {
            // exp(a x^alpha) outgrows every power of 1/x at 0
            return ModularValue::divergent(0.0, -std::numeric_limits<double>::infinity());
        }
        auto est = quad::adaptive_gl([&](double x) { return std::exp(a * std::pow(x, pr.alpha)); }, 0.0, kInvE, tol);
        return ModularValue::finite(est.value, est.error);
    }
    if (!(pr.alpha > 0.0)) {
        // p bounded by 1 on (0, 1/e): the integrand is at most A
        auto est = quad::adaptive_gl(
            [&](double L) { return std::exp(a * std::pow(L, pr.alpha) - L); }, 1.0, 60.0, tol);
        return ModularValue::finite(est.value + A * std::exp(-60.0), est.error + A * std::exp(-60.0));
    }
    if (pr.alpha > 1.0) return ModularValue::divergent(0.0, -std::numeric_limits<double>::infinity());
    if (pr.alpha == 1.0) {
        if (a >= 1.0) return ModularValue::divergent(0.0, -a);
        return ModularValue::finite(std::exp((1.0 - a) * -1.0) / (1.0 - a));
    }
    // 0 < alpha < 1: integrate in L over doubling panels until past the peak
    // and the panel mass is negligible.
    auto g = [&](double L) { return std::exp(a * std::pow(L, pr.alpha) - L); };
    const double peak = std::pow(a * pr.alpha, 1.0 / (1.0 - pr.alpha));
    double total = 0.0, err = 0.0, lo = 1.0;
    for (int i = 0; i < 2000; ++i) {
        const double hi = lo + std::max(1.0, lo);
        auto est = quad::adaptive_gl(g, lo, hi, tol * 1e-3, 1e-13);
        total += est.value;
        err += est.error;
        lo = hi;
        if (lo > 2.0 * peak && lo > 8.0 && est.value <= 1e-17 * total) break;
    }
    // tail beyond lo where a L^alpha <= L/2: at most 2 exp(-lo/2)
    err += 2.0 * std::exp(-0.5 * lo);
    return ModularValue::finite(total, err);
}

struct ClassificationReport {
    std::vector<double> A_values;
    std::vector<ModularValue> integrals;
    SubspaceRelation relation = SubspaceRelation::Equal;
};

inline ClassificationReport classify(const std::vector<double>& A_values, const std::vector<ModularValue>& ints) {
    ClassificationReport r{A_values, ints, SubspaceRelation::Equal};
    for (const auto& m : ints)
        if (m.is_divergent()) r.relation = SubspaceRelation::StrictlyContained;
    return r;
}

inline ClassificationReport classify_exponent(const ExponentFunction& p, std::vector<double> A_values = {}) {
    if (A_values.empty()) A_values = default_probe_values();
    return classify(A_values, prop21_integral_test(p, A_values));
}

inline ClassificationReport classify_profile(const ProfilePreset& pr, std::vector<double> A_values = {}) {
    if (A_values.empty()) A_values = default_probe_values();
    std::vector<ModularValue> ints;
    for (double A : A_values) ints.push_back(profile_integral(pr, A));
    return classify(A_values, ints);
}

inline nlohmann::json to_json(const ModularValue& m) {
    if (m.is_divergent()) return {{"divergent", true}, {"location", m.witness().location}, {"power", m.witness().power}};
    return {{"divergent", false}, {"value", m.value()}, {"abs_error", m.abs_error()}};
}

inline nlohmann::json to_json(const ClassificationReport& r) {
    nlohmann::json j;
    j["relation"] = to_string(r.relation);
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < r.A_values.size(); ++i) arr.push_back({{"A", r.A_values[i]}, {"integral", to_json(r.integrals[i])}});
    j["integrals"] = arr;
    return j;
}

/// CSV rows t,f*(t) at the piece breakpoints of a rearranged step function.
inline void write_rearrangement_csv(std::ostream& os, const PiecewiseFunction& fstar) {
    os << "t,f*(t)\n";
    os.precision(17);
    for (const auto& p : fstar.pieces()) os << p.a << ',' << p.coef << '\n';
    if (!fstar.empty()) os << fstar.pieces().back().b << ",0\n";
}

}  // namespace vexp
