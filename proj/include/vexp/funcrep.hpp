#pragma once

// Piecewise closed-form functions and singularity-aware integration of
// (|f| / lambda)^p(x) against the bump exponents of exponent.hpp.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vexp/exponent.hpp"
#include "vexp/extended.hpp"
#include "vexp/quadrature.hpp"

namespace vexp {

enum class PieceKind { Constant, LogReciprocal, PowerLog, Sampled };

inline std::string to_string(PieceKind k) {
    switch (k) {
        case PieceKind::Constant: return "constant";
        case PieceKind::LogReciprocal: return "log-reciprocal";
        case PieceKind::PowerLog: return "power-log";
        case PieceKind::Sampled: return "sampled";
    }
    return "constant";
}

inline PieceKind piece_kind_from_string(const std::string& s) {
    if (s == "constant") return PieceKind::Constant;
    if (s == "log-reciprocal") return PieceKind::LogReciprocal;
    if (s == "power-log") return PieceKind::PowerLog;
    if (s == "sampled") return PieceKind::Sampled;
    throw InputError("unknown piece kind: " + s);
}

/// One piece on (a, b]. With u = x - a:
///   Constant       c
///   LogReciprocal  c log(1/u)
///   PowerLog       c / (u log^2(1/u)) = c d/du (1 / log(1/u))
///   Sampled        linear interpolation of (grid, values)
struct Piece {
    double a = 0.0;
    double b = 0.0;
    PieceKind kind = PieceKind::Constant;
    double coef = 0.0;
    std::vector<double> grid;
    std::vector<double> values;

    static Piece constant(double a, double b, double c) { return {a, b, PieceKind::Constant, c, {}, {}}; }
    static Piece log_reciprocal(double a, double b, double c = 1.0) {
        return {a, b, PieceKind::LogReciprocal, c, {}, {}};
    }
    static Piece power_log(double a, double b, double c = 1.0) { return {a, b, PieceKind::PowerLog, c, {}, {}}; }
    static Piece sampled(std::vector<double> grid, std::vector<double> values) {
        Piece p;
        p.kind = PieceKind::Sampled;
        p.a = grid.front();
        p.b = grid.back();
        p.grid = std::move(grid);
        p.values = std::move(values);
        return p;
    }

    [[nodiscard]] bool singular_at_left() const {
        return coef != 0.0 && (kind == PieceKind::LogReciprocal || kind == PieceKind::PowerLog);
    }

    /// Value at offset u = x - a > 0.
    [[nodiscard]] double value_at_offset(double u) const {
        switch (kind) {
            case PieceKind::Constant: return coef;
            case PieceKind::LogReciprocal: return coef * -std::log(u);
            case PieceKind::PowerLog: {
                const double L = -std::log(u);
                return coef / (u * L * L);
            }
            case PieceKind::Sampled: {
                const double x = a + u;
                auto it = std::upper_bound(grid.begin(), grid.end(), x);
                if (it == grid.begin()) return values.front();
                if (it == grid.end()) return values.back();
                const std::size_t i = static_cast<std::size_t>(it - grid.begin());
                const double t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
                return values[i - 1] + t * (values[i] - values[i - 1]);
            }
        }
        return 0.0;
    }

    /// log |value| at offset u; stays finite where the value itself overflows.
    [[nodiscard]] double log_abs_at_offset(double u, double log_u) const {
        switch (kind) {
            case PieceKind::PowerLog: {
                const double L = -log_u;
                return std::log(std::abs(coef)) - log_u - 2.0 * std::log(L);
            }
            case PieceKind::LogReciprocal: return std::log(std::abs(coef)) + std::log(-log_u);
            default: return std::log(std::abs(value_at_offset(u)));
        }
    }

    /// Antiderivative in u (zero at u = 0) for the closed-form kinds.
    [[nodiscard]] double antiderivative(double u) const {
        if (u <= 0.0) return 0.0;
        switch (kind) {
            case PieceKind::Constant: return coef * u;
            case PieceKind::LogReciprocal: return coef * (u - u * std::log(u));
            case PieceKind::PowerLog: return coef / -std::log(u);
            case PieceKind::Sampled: break;
        }
        throw UnsupportedRepresentation("sampled pieces have no antiderivative");
    }
};

class PiecewiseFunction {
public:
    PiecewiseFunction() = default;
    explicit PiecewiseFunction(std::vector<Piece> pieces, bool periodic = false)
        : pieces_(std::move(pieces)), periodic_(periodic) {
        std::sort(pieces_.begin(), pieces_.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const auto& p = pieces_[i];
            if (!(p.b > p.a)) throw InputError("piece with empty support");
            if (i > 0 && p.a < pieces_[i - 1].b) throw InputError("overlapping pieces");
            if (p.kind == PieceKind::LogReciprocal && p.b - p.a > 1.0)
                throw InputError("log-reciprocal piece longer than 1");
            if (p.kind == PieceKind::PowerLog && p.b - p.a >= 1.0) throw InputError("power-log piece must be shorter than 1");
            if (p.kind == PieceKind::Sampled && (p.grid.size() < 2 || p.grid.size() != p.values.size()))
                throw InputError("sampled piece needs matching grid and values");
        }
    }

    /// Step function from (a, b, value) triples.
    static PiecewiseFunction step(const std::vector<std::array<double, 3>>& steps, bool periodic = false) {
        std::vector<Piece> ps;
        ps.reserve(steps.size());
        for (const auto& s : steps) ps.push_back(Piece::constant(s[0], s[1], s[2]));
        return PiecewiseFunction(std::move(ps), periodic);
    }

    [[nodiscard]] const std::vector<Piece>& pieces() const { return pieces_; }
    [[nodiscard]] bool periodic() const { return periodic_; }
    [[nodiscard]] bool empty() const { return pieces_.empty(); }

    [[nodiscard]] bool is_step() const {
        return std::all_of(pieces_.begin(), pieces_.end(), [](const Piece& p) { return p.kind == PieceKind::Constant; });
    }

    [[nodiscard]] bool is_zero() const {
        return std::all_of(pieces_.begin(), pieces_.end(), [](const Piece& p) {
            if (p.kind == PieceKind::Sampled)
                return std::all_of(p.values.begin(), p.values.end(), [](double v) { return v == 0.0; });
            return p.coef == 0.0;
        });
    }

    /// Index of the piece with a < x <= b, or npos.
    [[nodiscard]] std::size_t find(double x) const {
        auto it = std::lower_bound(pieces_.begin(), pieces_.end(), x, [](const Piece& p, double v) { return p.b < v; });
        if (it == pieces_.end() || !(x > it->a && x <= it->b)) return npos;
        return static_cast<std::size_t>(it - pieces_.begin());
    }

    [[nodiscard]] double support_lo() const { return pieces_.empty() ? 0.0 : pieces_.front().a; }
    [[nodiscard]] double support_hi() const { return pieces_.empty() ? 0.0 : pieces_.back().b; }

    [[nodiscard]] PiecewiseFunction scaled(double c) const {
        PiecewiseFunction g = *this;
        for (auto& p : g.pieces_) {
            p.coef *= c;
            for (auto& v : p.values) v *= c;
        }
        return g;
    }

    /// Restriction to (a, b]; pieces are clipped.
    [[nodiscard]] PiecewiseFunction restricted(double a, double b) const {
        std::vector<Piece> out;
        for (const auto& p : pieces_) {
            const double lo = std::max(a, p.a), hi = std::min(b, p.b);
            if (!(hi > lo)) continue;
            if (p.kind == PieceKind::Constant) out.push_back(Piece::constant(lo, hi, p.coef));
            else if (lo == p.a) {
                Piece q = p;
                q.b = hi;
                out.push_back(q);
            } else {
                throw UnsupportedRepresentation("restriction would move a singular endpoint");
            }
        }
        return PiecewiseFunction(std::move(out), periodic_);
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<Piece> pieces_;
    bool periodic_ = false;
};

/// Pointwise sum of step functions, merged over the union of breakpoints.
inline PiecewiseFunction add_steps(const PiecewiseFunction& f, const PiecewiseFunction& g, double alpha = 1.0,
                                   double beta = 1.0) {
    if (!f.is_step() || !g.is_step()) throw UnsupportedRepresentation("add_steps needs step functions");
    std::vector<double> cuts;
    for (const auto* h : {&f, &g})
        for (const auto& p : h->pieces()) {
            cuts.push_back(p.a);
            cuts.push_back(p.b);
        }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Piece> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        double v = 0.0;
        if (auto k = f.find(mid); k != PiecewiseFunction::npos) v += alpha * f.pieces()[k].coef;
        if (auto k = g.find(mid); k != PiecewiseFunction::npos) v += beta * g.pieces()[k].coef;
        if (v == 0.0) continue;
        if (!out.empty() && out.back().b == cuts[i] && out.back().coef == v) out.back().b = cuts[i + 1];
        else out.push_back(Piece::constant(cuts[i], cuts[i + 1], v));
    }
    return PiecewiseFunction(std::move(out), f.periodic() || g.periodic());
}

/// f(x); zero off the supports, the divergence marker at a singular left end.
inline ExtendedReal evaluate(const PiecewiseFunction& f, double x) {
    for (const auto& p : f.pieces())
        if (x == p.a && p.singular_at_left()) return ExtendedReal::divergent();
    const auto i = f.find(x);
    if (i == PiecewiseFunction::npos) return 0.0;
    const auto& p = f.pieces()[i];
    return p.value_at_offset(x - p.a);
}

/// Integral of f over [a, b]; closed forms where the piece has one.
inline ModularValue integrate(const PiecewiseFunction& f, double a, double b) {
    if (!(b > a)) return ModularValue::finite(0.0);
    double total = 0.0;
    for (const auto& p : f.pieces()) {
        const double lo = std::max(a, p.a), hi = std::min(b, p.b);
        if (!(hi > lo)) continue;
        if (p.kind == PieceKind::Sampled) {
            // trapezoid on the piece's own grid
            std::vector<double> xs{lo};
            for (double g : p.grid)
                if (g > lo && g < hi) xs.push_back(g);
            xs.push_back(hi);
            for (std::size_t i = 0; i + 1 < xs.size(); ++i)
                total += 0.5 * (xs[i + 1] - xs[i]) * (p.value_at_offset(xs[i] - p.a) + p.value_at_offset(xs[i + 1] - p.a));
        } else if (p.kind == PieceKind::Constant) {
            total += p.coef * (hi - lo);
        } else {
            total += p.antiderivative(hi - p.a) - p.antiderivative(lo - p.a);
        }
    }
    return ModularValue::finite(total);
}

inline double l1_norm(const PiecewiseFunction& f) {
    double total = 0.0;
    for (const auto& p : f.pieces()) {
        if (p.kind == PieceKind::Sampled) throw UnsupportedRepresentation("l1_norm on sampled piece");
        total += std::abs(p.antiderivative(p.b - p.a));
    }
    return total;
}

/// Supremum of |f| over step pieces; +inf if some piece is unbounded.
inline double sup_norm(const PiecewiseFunction& f) {
    double m = 0.0;
    for (const auto& p : f.pieces()) {
        if (p.singular_at_left()) return std::numeric_limits<double>::infinity();
        if (p.kind == PieceKind::Sampled)
            for (double v : p.values) m = std::max(m, std::abs(v));
        else
            m = std::max(m, std::abs(p.coef));
    }
    return m;
}

namespace detail {

/// One cell (l, r) on which the piece, the level and the active bump set are fixed.
struct Cell {
    double l = 0.0;
    double r = 0.0;
    const Piece* piece = nullptr;
    double level = 2.0;
    std::vector<double> offsets;  // l - center for the non-singular active bumps
    int singular = 0;             // number of bump centers sitting at l
};

inline double log_stable(double x) { return std::log(x); }

/// Exponent value (unconjugated) at offset u into the cell, given log(1/u).
inline double primal_at(const Cell& c, double u, double L_sing) {
    double p = c.level;
    for (double off : c.offsets) p += -std::log(off + u);
    p += c.singular * L_sing;
    return p;
}

inline double apply_conjugate(double p) { return p / (p - 1.0); }

/// exp(e * ell) with e = exponent, ell = log(|f|/lambda).
inline double power_term(double e, double ell) {
    if (ell == -std::numeric_limits<double>::infinity()) return 0.0;
    if (std::isinf(e)) return ell < 0.0 ? 0.0 : (ell == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    return std::exp(e * ell);
}

inline ModularValue finite_or_divergent(const quad::Estimate& est, double at) {
    if (!std::isfinite(est.value)) return ModularValue::divergent(at, -std::numeric_limits<double>::infinity());
    return ModularValue::finite(est.value, est.error);
}

inline ModularValue cell_integral(const Cell& c, bool conjugated, double lambda, double tol) {
    const Piece& piece = *c.piece;
    const double h = c.r - c.l;
    const double off_piece = c.l - piece.a;  // offset of l inside the piece
    const bool f_singular = piece.singular_at_left() && off_piece == 0.0;
    const double log_lambda = std::log(lambda);

    auto ell_at = [&](double u, double log_u_piece) {
        return piece.log_abs_at_offset(off_piece + u, log_u_piece) - log_lambda;
    };
    auto exponent_at = [&](double u, double L_sing) {
        const double p = primal_at(c, u, L_sing);
        return conjugated ? apply_conjugate(p) : p;
    };

    if (piece.kind == PieceKind::Constant && piece.coef == 0.0) return ModularValue::finite(0.0);

    // Constant f without bumps: closed form.
    if (piece.kind == PieceKind::Constant && c.offsets.empty() && c.singular == 0) {
        const double e = conjugated ? apply_conjugate(c.level) : c.level;
        const double s = std::abs(piece.coef) / lambda;
        if (std::isinf(e)) {
            if (s <= 1.0) return ModularValue::finite(s == 1.0 ? h : 0.0);
            return ModularValue::divergent(c.l, -std::numeric_limits<double>::infinity());
        }
        return ModularValue::finite(std::pow(s, e) * h);
    }

    // f singular at the left end of the cell.
    if (f_singular) {
        double limit_exp;
        if (c.singular > 0) {
            limit_exp = conjugated ? 1.0 : std::numeric_limits<double>::infinity();
        } else {
            const double p0 = primal_at(c, 0.0, 0.0);
            limit_exp = conjugated ? apply_conjugate(p0) : p0;
        }
        if (piece.kind == PieceKind::PowerLog) {
            if (limit_exp > 1.0) return ModularValue::divergent(c.l, -limit_exp);
            // v = 1/log(1/u): |f| du = |c| dv, integrand (|f|/lambda)^e / |f| * |c|
            const double V = 1.0 / -std::log(h);
            auto g = [&](double v) {
                const double log_u = -1.0 / v;
                const double u = std::exp(log_u);
                const double ell = ell_at(u, log_u);
                const double e = exponent_at(u, -log_u);
                const double log_f = ell + log_lambda;
                return std::abs(piece.coef) * std::exp(e * ell - log_f);
            };
            return finite_or_divergent(quad::graded_left(g, V, 0.0, tol), c.l);
        }
        // log-reciprocal
        if (c.singular > 0 && !conjugated) return ModularValue::divergent(c.l, -std::numeric_limits<double>::infinity());
        auto g = [&](double u) {
            const double log_u = std::log(u);
            return power_term(exponent_at(u, -log_u), ell_at(u, log_u));
        };
        return finite_or_divergent(quad::graded_left(g, h, 0.0, tol), c.l);
    }

    // f finite at l; unconjugated bumps singular at l: integrand ~ u^{-m log(|f(l)|/lambda)}.
    if (c.singular > 0 && !conjugated) {
        const double f_left = std::abs(piece.value_at_offset(off_piece));
        const double Ls = f_left > 0.0 ? std::log(f_left) - log_lambda : -std::numeric_limits<double>::infinity();
        const double power = c.singular * Ls;
        if (power >= 1.0) return ModularValue::divergent(c.l, -power);
        if (piece.kind == PieceKind::Constant && c.offsets.empty()) {
            // s^{level} u^{-m Ls} integrated over (0, h]
            return ModularValue::finite(std::exp(c.level * Ls + (1.0 - power) * std::log(h)) / (1.0 - power));
        }
        if (!std::isfinite(Ls)) {
            auto g = [&](double u) {
                const double log_u = std::log(u);
                return power_term(exponent_at(u, -log_u), ell_at(u, std::log(off_piece + u)));
            };
            return finite_or_divergent(quad::graded_left(g, h, 0.0, tol), c.l);
        }
        // u^{-Ls} * exp(P_rest * ell + L_sing (ell - Ls))
        auto g = [&](double u) {
            const double log_u = std::log(u);
            const double L_sing = -log_u;
            const double ell = ell_at(u, std::log(off_piece + u));
            const double p_rest = primal_at(c, u, 0.0);
            return std::exp(p_rest * ell + c.singular * L_sing * (ell - Ls));
        };
        return finite_or_divergent(quad::graded_left(g, h, power, tol), c.l);
    }

    // Constant f with one non-singular bump, unconjugated: closed form in (x - c).
    if (piece.kind == PieceKind::Constant && !conjugated && c.offsets.size() == 1 && c.singular == 0) {
        const double s = std::abs(piece.coef) / lambda;
        const double L = std::log(s);
        const double d = c.offsets.front();
        const double ratio = h / d;
        double integral;
        if (L == 1.0) integral = std::log1p(ratio);
        else integral = std::exp((1.0 - L) * std::log(d)) * std::expm1((1.0 - L) * std::log1p(ratio)) / (1.0 - L);
        return ModularValue::finite(std::exp(c.level * L) * integral);
    }

    // Bounded integrand; grade toward l where an active bump may sit close by.
    auto g = [&](double u) {
        const double log_u = std::log(u);
        const double L_sing = -log_u;
        return power_term(exponent_at(u, L_sing), ell_at(u, std::log(off_piece + u)));
    };
    return finite_or_divergent(quad::graded_left(g, h, 0.0, tol, c.singular > 0 ? 60 : 40), c.l);
}

}  // namespace detail

/// Integral over [a, b] of (|f(x)| / lambda)^{p(x)}.
inline ModularValue powered_integral(const PiecewiseFunction& f, const ExponentFunction& p, double lambda, double a,
                                     double b, double tol = 1e-11) {
    if (!(lambda > 0.0)) throw InputError("lambda must be positive");
    if (!(b > a)) return ModularValue::finite(0.0);
    ModularValue total = ModularValue::finite(0.0);
    std::vector<double> cuts;
    std::vector<const Piece*> active_pieces;
    for (const auto& piece : f.pieces()) {
        const double lo = std::max(a, piece.a), hi = std::min(b, piece.b);
        if (!(hi > lo)) continue;
        if (piece.kind == PieceKind::Sampled) throw UnsupportedRepresentation("sampled pieces are diagnostic only");
        if (piece.kind == PieceKind::Constant && piece.coef == 0.0) continue;
        cuts.clear();
        cuts.push_back(lo);
        cuts.push_back(hi);
        p.breakpoints(lo, hi, cuts);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        const double cell_tol = tol / static_cast<double>(cuts.size());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            detail::Cell cell;
            cell.l = cuts[i];
            cell.r = cuts[i + 1];
            if (!(cell.r > cell.l)) continue;
            cell.piece = &piece;
            cell.level = p.level_at(0.5 * (cell.l + cell.r));
            for (const LogBump* bump : p.active_on(cell.l, cell.r)) {
                if (bump->center == cell.l) ++cell.singular;
                else cell.offsets.push_back(cell.l - bump->center);
            }
            total += detail::cell_integral(cell, p.conjugated(), lambda, cell_tol);
            if (total.is_divergent()) return total;
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Union construction: exponent 1 + 1/n on E_n = {n - 1 <= |f| < n}
// ---------------------------------------------------------------------------

struct UnionExponent {
    ExponentFunction exponent;
    /// sum_n n^{1 + 1/n} |E_n|
    double certificate = 0.0;
    /// |E_n| by level n
    std::map<long long, double> level_measure;
};

inline UnionExponent exponent_for_integrable(const PiecewiseFunction& f, Interval domain = unit_interval()) {
    if (!f.is_step()) throw UnsupportedRepresentation("union construction needs a step function");
    UnionExponent out;
    std::vector<LevelSegment> segs;
    auto level_of = [](double v) { return static_cast<long long>(std::floor(std::abs(v))) + 1; };
    double cursor = domain.lo;
    auto add_gap = [&](double lo, double hi) {
        if (hi > lo) {
            segs.push_back({lo, hi, 2.0});
            out.level_measure[1] += hi - lo;
        }
    };
    for (const auto& piece : f.pieces()) {
        if (piece.a < domain.lo || piece.b > domain.hi) throw InputError("step function leaves the domain");
        add_gap(cursor, piece.a);
        const long long n = level_of(piece.coef);
        segs.push_back({piece.a, piece.b, 1.0 + 1.0 / static_cast<double>(n)});
        out.level_measure[n] += piece.b - piece.a;
        cursor = piece.b;
    }
    add_gap(cursor, domain.hi);
    for (const auto& [n, measure] : out.level_measure) {
        const double nd = static_cast<double>(n);
        out.certificate += std::pow(nd, 1.0 + 1.0 / nd) * measure;
    }
    out.exponent = ExponentFunction(ExponentKind::UnionExponent, 1.0, domain, {}, std::move(segs));
    return out;
}

// ---------------------------------------------------------------------------
// JSON / CSV
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PiecewiseFunction& f) {
    nlohmann::json j;
    j["periodic"] = f.periodic();
    auto arr = nlohmann::json::array();
    for (const auto& p : f.pieces()) {
        nlohmann::json jp{{"a", p.a}, {"b", p.b}, {"kind", to_string(p.kind)}};
        if (p.kind == PieceKind::Sampled) jp["params"] = {{"grid", p.grid}, {"values", p.values}};
        else jp["params"] = {{"coef", p.coef}};
        arr.push_back(jp);
    }
    j["pieces"] = arr;
    return j;
}

inline PiecewiseFunction function_from_json(const nlohmann::json& j) {
    try {
        std::vector<Piece> pieces;
        for (const auto& jp : j.at("pieces")) {
            Piece p;
            p.a = jp.at("a").get<double>();
            p.b = jp.at("b").get<double>();
            p.kind = piece_kind_from_string(jp.at("kind").get<std::string>());
            const auto& params = jp.at("params");
            if (p.kind == PieceKind::Sampled) {
                p.grid = params.at("grid").get<std::vector<double>>();
                p.values = params.at("values").get<std::vector<double>>();
            } else {
                p.coef = params.at("coef").get<double>();
            }
            pieces.push_back(std::move(p));
        }
        return PiecewiseFunction(std::move(pieces), j.value("periodic", false));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed function JSON: ") + e.what());
    }
}

/// CSV rows x,f(x) at n equally spaced points of [a, b].
inline void write_samples_csv(std::ostream& os, const PiecewiseFunction& f, double a, double b, std::size_t n) {
    os << "x,f(x)\n";
    os.precision(17);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        auto v = evaluate(f, x);
        os << x << ',';
        if (v.is_divergent()) os << "inf";
        else os << v.value();
        os << '\n';
    }
}

}  // namespace vexp
