#pragma once

// Fourier analysis of 2 pi-periodic step functions
//
//   f^(j) = (1/2 pi) integral_T f(x) e^{-ijx} dx,   S_r(x, f) = sum_{|j| <= r} f^(j) e^{ijx}
//
// and the spike functions phi_n with their divergent partial sums.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "vexp/extended.hpp"
#include "vexp/funcrep.hpp"
#include "vexp/quadrature.hpp"

namespace vexp {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// L_m(t) = sin((m + 1/2) t) / (2 sin(t/2)), with the limit m + 1/2 near t = 0 mod 2 pi.
inline double dirichlet_kernel(long m, double t) {
    const double s = std::sin(0.5 * t);
    const double w = static_cast<double>(m) + 0.5;
    if (std::abs(s) < 1e-8) {
        // t = 2 pi q + e; the signs (-1)^q of numerator and denominator cancel
        const double e = t - kTwoPi * std::round(t / kTwoPi);
        return e == 0.0 ? w : std::sin(w * e) / (2.0 * std::sin(0.5 * e));
    }
    return std::sin(w * t) / (2.0 * s);
}

/// Closed-form coefficient of a step function.
inline std::complex<double> fourier_coeff(const PiecewiseFunction& f, long j) {
    if (!f.is_step()) throw UnsupportedRepresentation("fourier_coeff needs a step function");
    std::complex<double> c = 0.0;
    const double jd = static_cast<double>(j);
    for (const auto& p : f.pieces()) {
        const double h = p.coef / kTwoPi;
        if (j == 0) {
            c += h * (p.b - p.a);
        } else {
            const auto ea = std::polar(1.0, -jd * p.a), eb = std::polar(1.0, -jd * p.b);
            c += h * (ea - eb) / std::complex<double>(0.0, jd);
        }
    }
    return c;
}

/// Coefficients f^(0..R) in one pass: each breakpoint carries a rotating phasor,
/// re-synchronized from the exact angle every 128 steps.
inline std::vector<std::complex<double>> fourier_coeffs(const PiecewiseFunction& f, long R) {
    if (!f.is_step()) throw UnsupportedRepresentation("fourier_coeffs needs a step function");
    if (R < 0) throw InputError("R must be nonnegative");
    // jump weights: f^(j) = sum_e w_e e^{-ij e} / (ij)
    std::vector<std::pair<double, double>> ends;
    for (const auto& p : f.pieces()) {
        const double h = p.coef / kTwoPi;
        if (!ends.empty() && ends.back().first == p.a) ends.back().second += h;
        else ends.emplace_back(p.a, h);
        ends.emplace_back(p.b, -h);
    }
    std::vector<std::complex<double>> c(static_cast<std::size_t>(R) + 1);
    c[0] = fourier_coeff(f, 0);
    std::vector<std::complex<double>> z(ends.size()), rot(ends.size());
    for (std::size_t e = 0; e < ends.size(); ++e) {
        z[e] = 1.0;
        rot[e] = std::polar(1.0, -ends[e].first);
    }
    for (long j = 1; j <= R; ++j) {
        std::complex<double> acc = 0.0;
        const bool sync = j % 128 == 0;
        for (std::size_t e = 0; e < ends.size(); ++e) {
            z[e] = sync ? std::polar(1.0, -static_cast<double>(j) * ends[e].first) : z[e] * rot[e];
            acc += ends[e].second * z[e];
        }
        c[static_cast<std::size_t>(j)] = acc / std::complex<double>(0.0, static_cast<double>(j));
    }
    return c;
}

/// S_r(x) by direct summation; the imaginary part is the rounding residue.
inline std::complex<double> partial_sum_complex(const PiecewiseFunction& f, long r, double x) {
    std::complex<double> s = fourier_coeff(f, 0);
    for (long j = 1; j <= r; ++j) {
        const double jd = static_cast<double>(j);
        s += fourier_coeff(f, j) * std::polar(1.0, jd * x) + fourier_coeff(f, -j) * std::polar(1.0, -jd * x);
    }
    return s;
}

inline double partial_sum(const PiecewiseFunction& f, long r, double x) { return partial_sum_complex(f, r, x).real(); }

/// S_0(x), ..., S_R(x) from a coefficient table.
inline std::vector<double> partial_sums(const std::vector<std::complex<double>>& coeffs, double x) {
    std::vector<double> out(coeffs.size());
    if (coeffs.empty()) return out;
    double s = coeffs[0].real();
    out[0] = s;
    const auto rot = std::polar(1.0, x);
    std::complex<double> z = 1.0;
    for (std::size_t r = 1; r < coeffs.size(); ++r) {
        z = r % 256 == 0 ? std::polar(1.0, static_cast<double>(r) * x) : z * rot;
        s += 2.0 * (coeffs[r] * z).real();
        out[r] = s;
    }
    return out;
}

inline std::vector<double> partial_sums(const PiecewiseFunction& f, long R, double x) {
    return partial_sums(fourier_coeffs(f, R), x);
}

// ---------------------------------------------------------------------------
// Divergence scans
// ---------------------------------------------------------------------------

struct ScanPoint {
    double x = 0.0;
    double max_abs_partial_sum = 0.0;
    long argmax_r = 0;
};

/// max over r_min <= r <= R of |S_r(x)| for every grid point.
inline std::vector<ScanPoint> divergence_scan(const std::vector<std::complex<double>>& coeffs,
                                              const std::vector<double>& grid, long r_min = 0, unsigned threads = 1) {
    std::vector<ScanPoint> out(grid.size());
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double x = grid[i];
            ScanPoint sp{x, 0.0, 0};
            double s = coeffs.empty() ? 0.0 : coeffs[0].real();
            if (r_min <= 0) sp.max_abs_partial_sum = std::abs(s);
            const auto rot = std::polar(1.0, x);
            std::complex<double> z = 1.0;
            for (std::size_t r = 1; r < coeffs.size(); ++r) {
                z = r % 256 == 0 ? std::polar(1.0, static_cast<double>(r) * x) : z * rot;
                s += 2.0 * (coeffs[r].real() * z.real() - coeffs[r].imag() * z.imag());
                if (static_cast<long>(r) >= r_min && std::abs(s) > sp.max_abs_partial_sum) {
                    sp.max_abs_partial_sum = std::abs(s);
                    sp.argmax_r = static_cast<long>(r);
                }
            }
            out[i] = sp;
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(grid.size())));
    if (threads == 1) {
        work(0, grid.size());
        return out;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (grid.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(grid.size(), lo + chunk);
        if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
    return out;
}

inline std::vector<ScanPoint> divergence_scan(const PiecewiseFunction& f, long r_max, const std::vector<double>& grid,
                                              long r_min = 0, unsigned threads = 1) {
    return divergence_scan(fourier_coeffs(f, r_max), grid, r_min, threads);
}

inline void write_scan_csv(std::ostream& os, const std::vector<ScanPoint>& scan) {
    os << "x,max_abs_partial_sum,argmax_r\n";
    os.precision(17);
    for (const auto& s : scan) os << s.x << ',' << s.max_abs_partial_sum << ',' << s.argmax_r << '\n';
}

// ---------------------------------------------------------------------------
// Plateau-kernel integrals
// ---------------------------------------------------------------------------

namespace detail {

/// j_0(x), ..., j_{K-1}(x) for x >= 0: power series below 1, Miller recurrence while
/// x < K, upward recurrence above.
inline void spherical_bessel_table(double x, int K, double* out) {
    if (x < 1.0) {
        double lead = 1.0;  // x^k / (2k+1)!!
        for (int k = 0; k < K; ++k) {
            if (k > 0) lead *= x / (2.0 * k + 1.0);
            double term = 1.0, sum = 1.0;
            for (int i = 1; i < 40; ++i) {
                term *= -0.5 * x * x / (i * (2.0 * k + 2.0 * i + 1.0));
                sum += term;
                if (std::abs(term) < 1e-18 * std::abs(sum)) break;
            }
            out[k] = lead * sum;
        }
        return;
    }
    const double j0 = std::sin(x) / x;
    const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
    if (x >= K) {
        out[0] = j0;
        if (K > 1) out[1] = j1;
        for (int k = 2; k < K; ++k) out[k] = (2.0 * k - 1.0) / x * out[k - 1] - out[k - 2];
        return;
    }
    const int start = K + 20 + static_cast<int>(x);
    std::vector<double> tmp(static_cast<std::size_t>(start) + 2, 0.0);
    tmp[static_cast<std::size_t>(start)] = 1e-300;
    for (int k = start; k >= 1; --k) {
        tmp[static_cast<std::size_t>(k - 1)] = (2.0 * k + 1.0) / x * tmp[static_cast<std::size_t>(k)] - tmp[static_cast<std::size_t>(k + 1)];
        if (std::abs(tmp[static_cast<std::size_t>(k - 1)]) > 1e250)
            for (int i = k - 1; i <= start; ++i) tmp[static_cast<std::size_t>(i)] *= 1e-250;
    }
    const double scale = std::abs(j0) >= std::abs(j1) ? j0 / tmp[0] : j1 / tmp[1];
    for (int k = 0; k < K; ++k) out[k] = tmp[static_cast<std::size_t>(k)] * scale;
}

inline constexpr int kLegendreTerms = 24;

}  // namespace detail

/// Values of (1/pi) integral over a union of plateaus of phi(t) L_m(t - x) dt at
/// fixed points x, for many m. On each plateau (c - h, c + h) the smooth factor
/// 1/(2 sin((t - x)/2)) is expanded in Legendre polynomials once; then
///   integral_{-1}^{1} P_k(u) e^{i b u} du = 2 i^k j_k(b)
/// leaves only spherical Bessel values at b = (m + 1/2) h per plateau and m.
class PlateauKernel {
public:
    struct Plateau {
        double lo = 0.0;
        double hi = 0.0;
        double height = 0.0;
    };

    PlateauKernel(std::vector<Plateau> plateaus, std::vector<double> xs)
        : plateaus_(std::move(plateaus)), xs_(std::move(xs)) {
        constexpr int K = detail::kLegendreTerms;
        const auto& rule = quad::gl32();
        const std::size_t nodes = rule.nodes.size();
        std::vector<double> P(nodes * K);
        for (std::size_t q = 0; q < nodes; ++q) {
            const double u = rule.nodes[q];
            double p0 = 1.0, p1 = u;
            P[q * K] = 1.0;
            if (K > 1) P[q * K + 1] = u;
            for (int k = 2; k < K; ++k) {
                const double p2 = ((2.0 * k - 1.0) * u * p1 - (k - 1.0) * p0) / k;
                P[q * K + k] = p2;
                p0 = p1;
                p1 = p2;
            }
        }
        coef_.assign(xs_.size() * plateaus_.size() * K, 0.0);
        for (std::size_t i = 0; i < xs_.size(); ++i)
            for (std::size_t j = 0; j < plateaus_.size(); ++j) {
                const auto& pl = plateaus_[j];
                const double c = 0.5 * (pl.lo + pl.hi) - xs_[i], h = 0.5 * (pl.hi - pl.lo);
                if (std::abs(c) <= h) throw InputError("plateau kernel: x inside a plateau");
                double* out = &coef_[(i * plateaus_.size() + j) * K];
                for (std::size_t q = 0; q < nodes; ++q) {
                    const double g = rule.weights[q] / (2.0 * std::sin(0.5 * (c + h * rule.nodes[q])));
                    for (int k = 0; k < K; ++k) out[k] += g * P[q * K + k];
                }
                for (int k = 0; k < K; ++k) out[k] *= 0.5 * (2.0 * k + 1.0);
            }
    }

    [[nodiscard]] const std::vector<double>& points() const { return xs_; }

    /// (1/pi) integral phi(t) L_m(t - x_i) dt for every point.
    [[nodiscard]] std::vector<double> values(long m) const {
        constexpr int K = detail::kLegendreTerms;
        const double w = static_cast<double>(m) + 0.5;
        // i^k j_k(w h) per plateau, split into real (even k) and imaginary (odd k) parts
        std::vector<double> bes(plateaus_.size() * K);
        for (std::size_t j = 0; j < plateaus_.size(); ++j) {
            const double h = 0.5 * (plateaus_[j].hi - plateaus_[j].lo);
            detail::spherical_bessel_table(w * h, K, &bes[j * K]);
            for (int k = 0; k < K; ++k)
                if (k % 4 == 2 || k % 4 == 3) bes[j * K + k] = -bes[j * K + k];
        }
        std::vector<double> out(xs_.size(), 0.0);
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j < plateaus_.size(); ++j) {
                const auto& pl = plateaus_[j];
                const double c = 0.5 * (pl.lo + pl.hi) - xs_[i], h = 0.5 * (pl.hi - pl.lo);
                const double* a = &coef_[(i * plateaus_.size() + j) * K];
                const double* b = &bes[j * K];
                double re = 0.0, im = 0.0;
                for (int k = 0; k < K; k += 2) re += a[k] * b[k];
                for (int k = 1; k < K; k += 2) im += a[k] * b[k];
                // Im[e^{i w c} (re + i im)] * 2h
                v += pl.height * 2.0 * h * (std::sin(w * c) * re + std::cos(w * c) * im);
            }
            out[i] = v / std::numbers::pi;
        }
        return out;
    }

    [[nodiscard]] double max_abs(long m) const {
        double best = 0.0;
        for (double v : values(m)) best = std::max(best, std::abs(v));
        return best;
    }

private:
    std::vector<Plateau> plateaus_;
    std::vector<double> xs_;
    std::vector<double> coef_;
};

// ---------------------------------------------------------------------------
// Spike functions phi_n
// ---------------------------------------------------------------------------

enum class PhiMode {
    /// Every lambda_k must pass the kernel bound; otherwise ConstructionError.
    Strict,
    /// Candidates must also pass the 2x grid; when none passes, keep the one
    /// with the smallest maximum over both grids.
    BestEffort,
};

struct PhiConfig {
    int grid_density = 64;
    bool symmetric = false;
    /// Odd candidates tried per k.
    int lambda_cap = 64;
    PhiMode mode = PhiMode::Strict;
    /// Require 2/m_k^2 < 2/(n^2 k^2) for k >= 2 (plateau inside the grid bump at t_n^k).
    bool theorem52_widths = false;
};

struct AuditRecord {
    int k = 0;
    long lambda = 0;
    long m = 0;
    std::size_t grid_points = 0;
    double max_abs = 0.0;
    double max_abs_fine = 0.0;
    int candidates = 0;
    bool admissible = false;
};

struct Span {
    double lo = 0.0;
    double hi = 0.0;
    [[nodiscard]] double length() const { return hi - lo; }
};

struct PhiN {
    int n = 0;
    bool symmetric = false;
    std::vector<long> lambdas;
    std::vector<long> m;
    std::vector<double> A;
    std::vector<Span> deltas;
    std::vector<double> heights;
    std::vector<Span> D;
    std::vector<AuditRecord> audit;

    /// Sum_k (m_k^2 / n) (2 / m_k^2) in rational arithmetic.
    [[nodiscard]] boost::multiprecision::cpp_rational mass_exact() const {
        using boost::multiprecision::cpp_rational;
        cpp_rational total = 0;
        for (long mk : m) {
            const cpp_rational m2 = cpp_rational(mk) * mk;
            total += (m2 / n) * (cpp_rational(2) / m2);
        }
        return total;
    }

    [[nodiscard]] double H_measure() const {
        double s = 0.0;
        for (const auto& d : D) s += d.length();
        return s;
    }

    [[nodiscard]] bool audit_passed() const {
        return std::all_of(audit.begin(), audit.end(),
                           [](const AuditRecord& a) { return a.max_abs < 1.0 && a.max_abs_fine < 1.0; });
    }

    [[nodiscard]] PiecewiseFunction function() const {
        std::vector<std::array<double, 3>> steps;
        for (std::size_t k = 0; k < deltas.size(); ++k) steps.push_back({deltas[k].lo, deltas[k].hi, heights[k]});
        return PiecewiseFunction::step(steps, true);
    }

    /// Points of H_n: `per_interval` equispaced points in each D_k, endpoints included.
    [[nodiscard]] std::vector<double> H_grid(int per_interval) const {
        std::vector<double> xs;
        for (const auto& d : D)
            for (int i = 0; i < per_interval; ++i)
                xs.push_back(per_interval == 1 ? 0.5 * (d.lo + d.hi) : d.lo + d.length() * i / (per_interval - 1.0));
        return xs;
    }
};

/// Strict search ran out of candidates; carries the steps built so far.
class PhiConstructionError : public ConstructionError {
public:
    PhiConstructionError(PhiN partial, int k, double best, long lambda)
        : ConstructionError("build_phi_n: lambda_cap exhausted at k = " + std::to_string(k) +
                            ", smallest kernel maximum " + std::to_string(best) + " at lambda = " +
                            std::to_string(lambda)),
          partial_(std::move(partial)), k_(k), best_(best) {}

    [[nodiscard]] const PhiN& partial() const { return partial_; }
    [[nodiscard]] int failing_k() const { return k_; }
    [[nodiscard]] double best_maximum() const { return best_; }

private:
    PhiN partial_;
    int k_;
    double best_;
};

namespace detail {
inline std::vector<double> closed_grid(const Span& s, int points) {
    std::vector<double> xs(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) xs[static_cast<std::size_t>(i)] = points == 1 ? 0.5 * (s.lo + s.hi) : s.lo + s.length() * i / (points - 1.0);
    return xs;
}

inline Span plateau(double A, long m, bool symmetric) {
    const double w = 1.0 / (static_cast<double>(m) * static_cast<double>(m));
    return symmetric ? Span{A - w, A + w} : Span{A, A + 2.0 * w};
}
}  // namespace detail

/// Inductive construction: lambda_1 = 1, m_1 = n, and for k >= 2 the smallest
/// odd lambda_k > lambda_{k-1} whose kernel integral over the earlier plateaus
/// stays below 1 on the grid of D_{k-1}.
inline PhiN build_phi_n(int n, const PhiConfig& cfg = {}) {
    if (n < 3) throw InputError("build_phi_n: n must be >= 3");
    if (cfg.grid_density < 2) throw InputError("build_phi_n: grid_density must be >= 2");
    if (cfg.lambda_cap < 1) throw InputError("build_phi_n: lambda_cap must be >= 1");
    PhiN phi;
    phi.n = n;
    phi.symmetric = cfg.symmetric;
    const double nd = n, sep = 1.0 / (nd * std::log(nd));
    for (int k = 1; k <= n + 1; ++k) phi.A.push_back(4.0 * std::numbers::pi * k / (2.0 * nd + 1.0));
    for (int k = 1; k <= n - 1; ++k) phi.D.push_back({phi.A[k - 1] + sep, phi.A[k] - sep});
    phi.A.pop_back();

    auto m_of = [&](long lambda) { return (lambda * (2L * n + 1) - 1) / 2; };
    phi.lambdas.push_back(1);
    phi.m.push_back(n);
    phi.deltas.push_back(detail::plateau(phi.A[0], n, cfg.symmetric));
    phi.heights.push_back(nd);  // m_1^2 / n

    for (int k = 2; k <= n; ++k) {
        std::vector<PlateauKernel::Plateau> earlier;
        for (std::size_t j = 0; j < phi.deltas.size(); ++j)
            earlier.push_back({phi.deltas[j].lo, phi.deltas[j].hi, phi.heights[j]});
        const Span& Dk = phi.D[static_cast<std::size_t>(k - 2)];
        const PlateauKernel coarse(earlier, detail::closed_grid(Dk, cfg.grid_density));
        const PlateauKernel fine(earlier, detail::closed_grid(Dk, 2 * cfg.grid_density - 1));

        AuditRecord rec;
        rec.k = k;
        rec.grid_points = static_cast<std::size_t>(cfg.grid_density);
        double best_score = std::numeric_limits<double>::infinity();
        long lambda = phi.lambdas.back();
        for (int tried = 0; tried < cfg.lambda_cap;) {
            lambda += 2;
            const long mk = m_of(lambda);
            if (cfg.theorem52_widths && !(static_cast<double>(mk) > nd * k)) continue;
            ++tried;
            const double c = coarse.max_abs(mk);
            if (cfg.mode == PhiMode::Strict && c < 1.0) {
                rec = {k, lambda, mk, rec.grid_points, c, fine.max_abs(mk), tried, true};
                break;
            }
            if (cfg.mode == PhiMode::BestEffort) {
                const double f = fine.max_abs(mk);
                if (c < 1.0 && f < 1.0) {
                    rec = {k, lambda, mk, rec.grid_points, c, f, tried, true};
                    break;
                }
                if (std::max(c, f) < best_score) {
                    best_score = std::max(c, f);
                    rec = {k, lambda, mk, rec.grid_points, c, f, tried, false};
                }
            } else if (c < best_score) {
                best_score = c;
                rec.lambda = lambda;
                rec.max_abs = c;
            }
            rec.candidates = tried;
        }
        if (!rec.admissible && cfg.mode == PhiMode::Strict) throw PhiConstructionError(std::move(phi), k, rec.max_abs, rec.lambda);
        phi.lambdas.push_back(rec.lambda);
        phi.m.push_back(rec.m);
        phi.deltas.push_back(detail::plateau(phi.A[static_cast<std::size_t>(k - 1)], rec.m, cfg.symmetric));
        phi.heights.push_back(static_cast<double>(rec.m) * static_cast<double>(rec.m) / nd);
        phi.audit.push_back(rec);
    }
    return phi;
}

inline nlohmann::json to_json(const Span& s) { return nlohmann::json::array({s.lo, s.hi}); }

inline nlohmann::json to_json(const PhiN& phi) {
    nlohmann::json j;
    j["n"] = phi.n;
    j["symmetric"] = phi.symmetric;
    j["lambdas"] = phi.lambdas;
    j["m"] = phi.m;
    j["A"] = phi.A;
    j["heights"] = phi.heights;
    auto spans = [](const std::vector<Span>& v) {
        auto a = nlohmann::json::array();
        for (const auto& s : v) a.push_back(to_json(s));
        return a;
    };
    j["deltas"] = spans(phi.deltas);
    j["D"] = spans(phi.D);
    j["H_measure"] = phi.H_measure();
    j["mass"] = phi.mass_exact().str();
    auto audit = nlohmann::json::array();
    for (const auto& a : phi.audit)
        audit.push_back({{"k", a.k},
                         {"lambda", a.lambda},
                         {"m", a.m},
                         {"grid_points", a.grid_points},
                         {"max_abs", a.max_abs},
                         {"max_abs_fine", a.max_abs_fine},
                         {"candidates", a.candidates},
                         {"admissible", a.admissible}});
    j["audit"] = audit;
    j["audit_passed"] = phi.audit_passed();
    j["function"] = to_json(phi.function());
    return j;
}

// ---------------------------------------------------------------------------
// Kolmogorov and Marcinkiewicz truncations
// ---------------------------------------------------------------------------

enum class SeriesWeight { Kolmogorov, Marcinkiewicz };

inline std::string to_string(SeriesWeight w) { return w == SeriesWeight::Kolmogorov ? "kolmogorov" : "marcinkiewicz"; }

inline SeriesWeight series_weight_from_string(const std::string& s) {
    if (s == "kolmogorov") return SeriesWeight::Kolmogorov;
    if (s == "marcinkiewicz") return SeriesWeight::Marcinkiewicz;
    throw InputError("unknown series kind: " + s);
}

struct DivergentSeriesSpec {
    std::vector<int> n_sequence{25, 50, 100, 200};
    SeriesWeight weight = SeriesWeight::Kolmogorov;
    std::size_t truncation = 3;

    [[nodiscard]] double weight_of(int n) const {
        const double l = std::log(static_cast<double>(n));
        return weight == SeriesWeight::Kolmogorov ? 1.0 / std::sqrt(l) : 1.0 / l;
    }

    void validate() const {
        if (truncation > n_sequence.size()) throw InputError("truncation exceeds n_sequence");
        for (std::size_t i = 0; i < truncation; ++i) {
            if (n_sequence[i] < 3) throw InputError("n_k must be >= 3");
            if (i > 0 && n_sequence[i] <= n_sequence[i - 1]) throw InputError("n_sequence must increase strictly");
        }
    }

    /// sum_k 2 w(n_k)
    [[nodiscard]] double l1_mass() const {
        double s = 0.0;
        for (std::size_t i = 0; i < truncation; ++i) s += 2.0 * weight_of(n_sequence[i]);
        return s;
    }
};

struct AssembledSeries {
    PiecewiseFunction f;
    std::vector<PhiN> phis;
};

/// Weighted sum of phi_{n_1}, ..., phi_{n_N} merged into one periodic step function.
inline AssembledSeries assemble_series(const DivergentSeriesSpec& spec, const PhiConfig& cfg = {}) {
    spec.validate();
    AssembledSeries out;
    out.f = PiecewiseFunction({}, true);
    for (std::size_t i = 0; i < spec.truncation; ++i) {
        out.phis.push_back(build_phi_n(spec.n_sequence[i], cfg));
        out.f = add_steps(out.f, out.phis.back().function(), 1.0, spec.weight_of(spec.n_sequence[i]));
    }
    return out;
}

}  // namespace vexp
