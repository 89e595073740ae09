#pragma once

// Gauss-Legendre panels, adaptive bisection and geometric grading toward a
// singular left endpoint.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace vexp::quad {

struct Rule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// Gauss-Legendre nodes via Newton iteration on P_n.
inline Rule make_gauss_legendre(int n) {
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

inline const Rule& gl16() {
    static const Rule r = make_gauss_legendre(16);
    return r;
}
inline const Rule& gl32() {
    static const Rule r = make_gauss_legendre(32);
    return r;
}

template <class F>
double apply(const Rule& rule, F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return s * half;
}

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

namespace detail {
template <class F>
Estimate adaptive(F& f, double a, double b, double coarse, double abs_tol, double rel_tol, int depth) {
    const double fine = apply(gl32(), f, a, b);
    const double err = std::abs(fine - coarse);
    if (err <= std::max(abs_tol, rel_tol * std::abs(fine)) || depth <= 0 || !(b - a > 0.0) ||
        a + 0.5 * (b - a) == a || !std::isfinite(fine)) {
        return {fine, err};
    }
    const double m = 0.5 * (a + b);
    const double cl = apply(gl16(), f, a, m);
    const double cr = apply(gl16(), f, m, b);
    auto l = adaptive(f, a, m, cl, 0.5 * abs_tol, rel_tol, depth - 1);
    auto r = adaptive(f, m, b, cr, 0.5 * abs_tol, rel_tol, depth - 1);
    return {l.value + r.value, l.error + r.error};
}
}  // namespace detail

/// Adaptive bisection comparing 16- and 32-point Gauss-Legendre panels.
template <class F>
Estimate adaptive_gl(F&& f, double a, double b, double abs_tol, double rel_tol = 1e-13, int max_depth = 30) {
    if (!(b > a)) return {};
    const double coarse = apply(gl16(), f, a, b);
    return detail::adaptive(f, a, b, coarse, abs_tol, rel_tol, max_depth);
}

/// Integral over u in (0, h] of u^(-power) * g(u), where g is bounded and
/// continuous at 0 and power < 1. Geometric mesh with ratio 1/2 toward u = 0;
/// the last sliver (0, h 2^-levels] is closed analytically using g at its
/// right end.
template <class G>
Estimate graded_left(G&& g, double h, double power, double abs_tol, int levels = 60) {
    Estimate total;
    if (!(h > 0.0)) return total;
    auto integrand = [&](double u) { return power == 0.0 ? g(u) : std::pow(u, -power) * g(u); };
    double hi = h;
    const double panel_tol = abs_tol / (levels + 1);
    for (int j = 0; j < levels; ++j) {
        const double lo = 0.5 * hi;
        auto e = adaptive_gl(integrand, lo, hi, panel_tol, 1e-13, 20);
        total.value += e.value;
        total.error += e.error;
        hi = lo;
        if (hi < 1e-300) break;
    }
    const double g_end = g(hi);
    const double measure = std::exp((1.0 - power) * std::log(hi)) / (1.0 - power);
    const double sliver = g_end * measure;
    if (std::isfinite(sliver)) {
        total.value += sliver;
        total.error += std::abs(g(2.0 * hi) - g_end) * measure;
    }
    return total;
}

}  // namespace vexp::quad
