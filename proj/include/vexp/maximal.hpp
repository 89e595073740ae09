#pragma once

// Hardy-Littlewood maximal function
//
//   Mf(x) = sup_{Q containing x} (1/|Q|) integral_Q |f|
//
// For a step function the average over (a, b) is a ratio of two functions
// linear in b between breakpoints, hence monotone there; the same holds in a.
// The supremum is therefore attained with a and b in breakpoints and {x}, and
// the candidate search is exact. With singular pieces the candidates still give
// certified lower bounds, including the anchored average (1/u) integral_0^u f.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "vexp/exponent.hpp"
#include "vexp/funcrep.hpp"

namespace vexp {

enum class MaximalMethod { ExactCandidates, AnchoredAverage };

struct MaximalProfile {
    std::vector<double> grid;
    std::vector<double> values;
    MaximalMethod method = MaximalMethod::ExactCandidates;
};

/// Running integral of |f| from the left end of the domain.
class AbsPrimitive {
public:
    explicit AbsPrimitive(const PiecewiseFunction& f) : f_(f) {
        double acc = 0.0;
        for (const auto& p : f.pieces()) {
            if (p.kind == PieceKind::Sampled) throw UnsupportedRepresentation("maximal function on sampled piece");
            cum_.push_back(acc);
            acc += std::abs(p.antiderivative(p.b - p.a));
        }
        total_ = acc;
    }

    [[nodiscard]] double operator()(double y) const {
        const auto& ps = f_.pieces();
        auto it = std::upper_bound(ps.begin(), ps.end(), y, [](double v, const Piece& p) { return v < p.b; });
        if (it == ps.end()) return total_;
        const std::size_t i = static_cast<std::size_t>(it - ps.begin());
        if (y <= it->a) return cum_[i];
        return cum_[i] + std::abs(it->antiderivative(y - it->a));
    }

private:
    const PiecewiseFunction& f_;
    std::vector<double> cum_;
    double total_ = 0.0;
};

/// Mf on the given points; intervals Q range over subintervals of `domain`.
inline MaximalProfile maximal_on_grid(const PiecewiseFunction& f, const std::vector<double>& grid,
                                      Interval domain = unit_interval()) {
    MaximalProfile out;
    out.grid = grid;
    out.method = f.is_step() ? MaximalMethod::ExactCandidates : MaximalMethod::AnchoredAverage;
    const AbsPrimitive F(f);
    std::vector<double> breaks{domain.lo, domain.hi};
    for (const auto& p : f.pieces()) {
        if (p.a > domain.lo && p.a < domain.hi) breaks.push_back(p.a);
        if (p.b > domain.lo && p.b < domain.hi) breaks.push_back(p.b);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<double> Fb(breaks.size());
    for (std::size_t i = 0; i < breaks.size(); ++i) Fb[i] = F(breaks[i]);

    out.values.reserve(grid.size());
    for (double x : grid) {
        if (!domain.contains(x)) throw InputError("grid point outside domain");
        const std::size_t split = static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), x) - breaks.begin());
        const double Fx = F(x);
        double best = 0.0;
        auto consider = [&](double a, double Fa, double b, double Fbv) {
            if (b > a) best = std::max(best, (Fbv - Fa) / (b - a));
        };
        // a ranges over breaks <= x and x itself; b over breaks >= x and x itself
        for (std::size_t i = 0; i < split; ++i) {
            for (std::size_t j = split == 0 ? 0 : split - 1; j < breaks.size(); ++j)
                if (breaks[j] >= x) consider(breaks[i], Fb[i], breaks[j], Fb[j]);
            consider(breaks[i], Fb[i], x, Fx);
        }
        for (std::size_t j = 0; j < breaks.size(); ++j)
            if (breaks[j] > x) consider(x, Fx, breaks[j], Fb[j]);
        out.values.push_back(best);
    }
    return out;
}

inline void write_maximal_csv(std::ostream& os, const MaximalProfile& m) {
    os << "x,Mf(x)\n";
    os.precision(17);
    for (std::size_t i = 0; i < m.grid.size(); ++i) os << m.grid[i] << ',' << m.values[i] << '\n';
}

// ---------------------------------------------------------------------------
// Non-integrable maximal function
// ---------------------------------------------------------------------------

struct CurvePoint {
    int j = 0;
    double eta = 0.0;
    double value = 0.0;
};

/// g = sum_k a_k f(x - r_k) on (r_k, r_k + w_k) with f = d/dx (1/log(1/x)).
struct Thm42Witness {
    PiecewiseFunction g;
    std::vector<double> centers;
    std::vector<double> widths;
    std::vector<double> weights;
    /// sum_k a_k / log(1/w_k)
    double l1 = 0.0;

    /// Lower bound for the integral of Mg over (a, b) minus the cutoff windows
    /// (r_k, r_k + eta): sum_k a_k [log log(1/eta) - log log(1/w_k)]_+,
    /// from Mg(r_k + u) >= 1/(u log(1/u)).
    [[nodiscard]] double curve_at(double eta) const {
        double s = 0.0;
        const double lle = std::log(std::log(1.0 / eta));
        for (std::size_t k = 0; k < centers.size(); ++k)
            s += weights[k] * std::max(0.0, lle - std::log(std::log(1.0 / widths[k])));
        return s;
    }

    [[nodiscard]] std::vector<CurvePoint> curve(int j_lo, int j_hi) const {
        std::vector<CurvePoint> out;
        for (int j = j_lo; j <= j_hi; ++j) {
            const double eta = std::exp(-static_cast<double>(j));
            out.push_back({j, eta, curve_at(eta)});
        }
        return out;
    }
};

/// Builds the witness from the first `terms` bumps of p (enumeration order)
/// whose centers lie in (a, b). Each piece runs to the nearest of the next
/// center, b, and 1/e. Weights default to 2^{-k}.
inline Thm42Witness thm42_witness(const ExponentFunction& p, double a, double b, std::size_t terms,
                                  std::vector<double> weights = {}) {
    if (!(b > a)) throw InputError("thm42_witness: empty interval");
    if (terms == 0) throw InputError("thm42_witness: need at least one term");
    std::vector<std::pair<double, std::size_t>> chosen;  // (center, enumeration rank)
    for (const auto& bump : p.bumps_in_order()) {
        if (chosen.size() == terms) break;
        if (bump.center > a && bump.center < b) chosen.emplace_back(bump.center, chosen.size());
    }
    if (chosen.empty()) throw InputError("thm42_witness: no bump center inside (a, b)");
    if (weights.empty())
        for (std::size_t k = 0; k < chosen.size(); ++k) weights.push_back(std::ldexp(1.0, -static_cast<int>(k + 1)));
    if (weights.size() < chosen.size()) throw InputError("thm42_witness: too few weights");
    for (double w : weights)
        if (!(w > 0.0)) throw InputError("thm42_witness: weights must be positive");

    std::sort(chosen.begin(), chosen.end());
    Thm42Witness out;
    std::vector<Piece> pieces;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const double r = chosen[i].first;
        const double next = i + 1 < chosen.size() ? chosen[i + 1].first : b;
        const double w = std::min({kInvE, next - r, b - r});
        const double ak = weights[chosen[i].second];
        pieces.push_back(Piece::power_log(r, r + w, ak));
        out.centers.push_back(r);
        out.widths.push_back(w);
        out.weights.push_back(ak);
        out.l1 += ak / std::log(1.0 / w);
    }
    out.g = PiecewiseFunction(std::move(pieces));
    return out;
}

inline void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve) {
    os << "eta,partial_integral\n";
    os.precision(17);
    for (const auto& c : curve) os << c.eta << ',' << c.value << '\n';
}

}  // namespace vexp
