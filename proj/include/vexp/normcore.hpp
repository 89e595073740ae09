#pragma once

// Modulars and Luxemburg norms
//
//   ||f||_{p(.)} = inf { lambda > 0 : integral (|f|/lambda)^{p(x)} dx <= 1 }
//
// computed by bisection on lambda. Brackets are certified: `hi` always has a
// modular <= 1 (up to quadrature error) and `lo` either a modular > 1 or an
// analytic divergence certificate.

#include <cmath>
#include <numbers>
#include <optional>

#include <json.hpp>

#include "vexp/exponent.hpp"
#include "vexp/funcrep.hpp"

namespace vexp {

struct NormTolerances {
    double bracket = 1e-9;
    double modular = 1e-11;
};

struct NormResult {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t iterations = 0;
    std::optional<double> divergence_floor;
    /// Modular error budget stopped the bisection before `bracket` was reached.
    bool widened = false;
    /// Modular divergent for every lambda tried: f is not in the space.
    bool infinite = false;

    [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
    [[nodiscard]] double width() const { return hi - lo; }
};

inline nlohmann::json to_json(const NormResult& r) {
    nlohmann::json j{{"lo", r.lo}, {"hi", r.hi}, {"iterations", r.iterations}};
    j["divergence_floor"] = r.divergence_floor ? nlohmann::json(*r.divergence_floor) : nlohmann::json(nullptr);
    if (r.widened) j["widened"] = true;
    if (r.infinite) j["infinite"] = true;
    return j;
}

inline ModularValue modular(const PiecewiseFunction& f, const ExponentFunction& p, double lambda, double tol = 1e-11) {
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    if (!(lambda > 0.0)) throw InputError("lambda must be positive");
    if (f.empty()) return ModularValue::finite(0.0);
    return powered_integral(f, p, lambda, f.support_lo(), f.support_hi(), tol);
}

/// Largest lambda at which the modular is certainly infinite because a bump
/// center sits where |f| is positive: (|f(c+)|/lambda)^{log(1/u)} = u^{-log(|f|/lambda)}.
inline std::optional<double> analytic_divergence_floor(const PiecewiseFunction& f, const ExponentFunction& p) {
    if (p.conjugated()) return std::nullopt;
    std::optional<double> floor;
    for (const auto& piece : f.pieces()) {
        if (piece.kind == PieceKind::Sampled) continue;
        auto it = std::lower_bound(p.bumps().begin(), p.bumps().end(), piece.a,
                                   [](const LogBump& b, double v) { return b.center < v; });
        for (; it != p.bumps().end() && it->center < piece.b; ++it) {
            const double u = it->center - piece.a;
            if (u == 0.0 && piece.singular_at_left()) continue;  // handled by the piece's own test
            const double v = std::abs(piece.value_at_offset(u > 0.0 ? u : 0.0)) * kInvE;
            if (v > 0.0 && (!floor || v > *floor)) floor = v;
        }
    }
    return floor;
}

namespace detail {
enum class Side { Below, Above, Ambiguous };

inline Side classify(const ModularValue& m) {
    if (m.is_divergent()) return Side::Above;
    const double v = m.value(), e = m.abs_error();
    if (v + e <= 1.0) return Side::Below;
    if (v - e > 1.0) return Side::Above;
    return v <= 1.0 ? Side::Below : Side::Ambiguous;
}
}  // namespace detail

inline NormResult luxemburg_norm(const PiecewiseFunction& f, const ExponentFunction& p, NormTolerances tol = {}) {
    if (!(tol.bracket > 0.0) || !(tol.modular > 0.0)) throw InputError("tolerance must be positive");
    NormResult res;
    if (f.is_zero()) return res;

    res.divergence_floor = analytic_divergence_floor(f, p);
    auto side = [&](double lambda) {
        ++res.iterations;
        return detail::classify(modular(f, p, lambda, tol.modular));
    };

    const double sup = sup_norm(f);
    double guess = l1_norm(f) + (std::isfinite(sup) ? sup : 0.0);
    if (res.divergence_floor) guess = std::max(guess, 2.0 * *res.divergence_floor);

    double hi = guess;
    int expand = 0;
    while (side(hi) != detail::Side::Below) {
        hi *= 2.0;
        if (++expand > 1100 || !std::isfinite(hi)) {
            res.infinite = true;
            res.lo = res.hi = std::numeric_limits<double>::infinity();
            return res;
        }
    }
    double lo;
    if (res.divergence_floor && *res.divergence_floor < hi) {
        lo = *res.divergence_floor;
    } else {
        lo = hi;
        do {
            hi = lo;
            lo *= 0.5;
        } while (side(lo) == detail::Side::Below && lo > 0.0);
    }
    while (hi - lo > tol.bracket) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        auto s = side(mid);
        if (s == detail::Side::Below) hi = mid;
        else if (s == detail::Side::Above) lo = mid;
        else {
            res.widened = true;
            break;
        }
    }
    res.lo = lo;
    res.hi = hi;
    return res;
}

inline PiecewiseFunction characteristic(double a, double b, double height = 1.0, bool periodic = false) {
    return PiecewiseFunction::step({{a, b, height}}, periodic);
}

/// Norm of the indicator of (a, b). When a bump center lies in [a, b) the
/// bracket starts at the certified floor 1/e.
inline NormResult char_interval_norm(const ExponentFunction& p, double a, double b, NormTolerances tol = {}) {
    if (!(b > a) || a < p.domain().lo || b > p.domain().hi) throw InputError("char_interval_norm: bad interval");
    auto res = luxemburg_norm(characteristic(a, b), p, tol);
    return res;
}

/// True when some materialized bump center lies in [a, b).
inline bool has_bump_inside(const ExponentFunction& p, double a, double b) {
    auto it = std::lower_bound(p.bumps().begin(), p.bumps().end(), a,
                               [](const LogBump& bm, double v) { return bm.center < v; });
    return it != p.bumps().end() && it->center < b;
}

struct CharBounds {
    double lo = 0.0;
    double hi = 0.0;
    /// sup of the exponent is infinite: the upper bound collapses to 1.
    bool degenerate = false;
};

/// |I|^{1/p_-} <= ||chi_I|| <= |I|^{1/p_+}, valid while the norm is at most 1.
inline CharBounds char_norm_bounds(const ExponentFunction& p, double a, double b) {
    const auto range = essential_range_on(p, a, b);
    const double len = b - a;
    CharBounds out;
    out.lo = std::pow(len, 1.0 / range.inf);
    out.degenerate = range.sup.is_divergent();
    out.hi = std::pow(len, range.sup.reciprocal());
    return out;
}

struct HolderPairing {
    double pairing = 0.0;
    double bound = 0.0;
};

/// integral |f g| against 2 ||f||_{p} ||g||_{p'}.
inline HolderPairing holder_pairing(const PiecewiseFunction& f, const PiecewiseFunction& g, const ExponentFunction& p,
                                    NormTolerances tol = {}) {
    if (!f.is_step() || !g.is_step()) throw UnsupportedRepresentation("holder_pairing needs step functions");
    HolderPairing out;
    for (const auto& pf : f.pieces())
        for (const auto& pg : g.pieces()) {
            const double lo = std::max(pf.a, pg.a), hi = std::min(pf.b, pg.b);
            if (hi > lo) out.pairing += std::abs(pf.coef * pg.coef) * (hi - lo);
        }
    const auto nf = luxemburg_norm(f, p, tol);
    const auto ng = luxemburg_norm(g, p.conjugate(), tol);
    out.bound = 2.0 * nf.hi * ng.hi;
    return out;
}

}  // namespace vexp
