#pragma once

// Variable exponents built from logarithmic bumps
//
//   p(x) = level(x) + sum_k m(x - c_k),   m(u) = log(1/u) on (0, min(w_k, 1/200))
//
// and their pointwise conjugates 1/p + 1/p' = 1 (1/infinity = 0).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vexp/extended.hpp"

namespace vexp {

/// Support cutoff of the bump profile m(u) = log(1/u).
inline constexpr double kBumpCutoff = 1.0 / 200.0;

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    [[nodiscard]] double length() const { return hi - lo; }
    [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
};

inline Interval unit_interval() { return {0.0, 1.0}; }
inline Interval torus_interval() { return {0.0, 2.0 * std::numbers::pi}; }

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    [[nodiscard]] double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    [[nodiscard]] std::string to_string() const { return std::to_string(num) + "/" + std::to_string(den); }
    static Rational parse(const std::string& s) {
        auto slash = s.find('/');
        if (slash == std::string::npos) return {std::stoll(s), 1};
        return {std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
    }
    friend bool operator==(const Rational&, const Rational&) = default;
};

struct LogBump {
    double center = 0.0;
    double width = 0.0;
    std::size_t index = 0;
    std::optional<Rational> center_exact;
    std::optional<Rational> width_exact;

    /// Length of the set where the bump is nonzero.
    [[nodiscard]] double effective_width() const { return std::min(width, kBumpCutoff); }
    [[nodiscard]] double support_end() const { return center + effective_width(); }
};

/// Piecewise-constant level used by the union construction.
struct LevelSegment {
    double a = 0.0;
    double b = 0.0;
    double value = 1.0;
};

enum class ExponentKind { Constant, TildeP, Theorem52, UnionExponent };

inline std::string to_string(ExponentKind k) {
    switch (k) {
        case ExponentKind::Constant: return "constant";
        case ExponentKind::TildeP: return "tilde-p";
        case ExponentKind::Theorem52: return "theorem52";
        case ExponentKind::UnionExponent: return "union";
    }
    return "constant";
}

inline ExponentKind exponent_kind_from_string(const std::string& s) {
    if (s == "constant") return ExponentKind::Constant;
    if (s == "tilde-p") return ExponentKind::TildeP;
    if (s == "theorem52") return ExponentKind::Theorem52;
    if (s == "union") return ExponentKind::UnionExponent;
    throw InputError("unknown exponent kind: " + s);
}

/// (n, k) slot of a grid bump: center 4 pi k / (2n + 1), width delta_n^k.
struct GridSlot {
    int n = 0;
    int k = 0;
    double center = 0.0;
    double width = 0.0;
};

/// Conjugate of a single exponent value.
inline ExtendedReal conjugate_value(const ExtendedReal& p) {
    if (p.is_divergent()) return 1.0;
    const double v = p.value();
    if (v == 1.0) return ExtendedReal::divergent();
    return v / (v - 1.0);
}

class ExponentFunction {
public:
    ExponentFunction() = default;

    static ExponentFunction constant(double value, Interval domain = unit_interval()) {
        ExponentFunction p;
        p.kind_ = ExponentKind::Constant;
        p.base_ = value;
        p.domain_ = domain;
        p.validate();
        return p;
    }

    ExponentFunction(ExponentKind kind, double base, Interval domain, std::vector<LogBump> bumps,
                     std::vector<LevelSegment> segments = {}, bool conjugated = false)
        : kind_(kind), base_(base), domain_(domain), bumps_(std::move(bumps)),
          segments_(std::move(segments)), conjugated_(conjugated) {
        truncation_ = bumps_.size();
        validate();
    }

    [[nodiscard]] ExponentKind kind() const { return kind_; }
    [[nodiscard]] double base() const { return base_; }
    [[nodiscard]] const Interval& domain() const { return domain_; }
    [[nodiscard]] bool conjugated() const { return conjugated_; }
    [[nodiscard]] std::size_t truncation() const { return truncation_; }
    [[nodiscard]] double tail_bound() const { return tail_bound_; }
    [[nodiscard]] const std::vector<LevelSegment>& segments() const { return segments_; }
    [[nodiscard]] const std::vector<GridSlot>& slots() const { return slots_; }
    [[nodiscard]] double max_effective_width() const { return max_eff_; }

    /// Bumps sorted by center.
    [[nodiscard]] const std::vector<LogBump>& bumps() const { return sorted_; }
    /// Bumps in enumeration order.
    [[nodiscard]] const std::vector<LogBump>& bumps_in_order() const { return bumps_; }

    void set_tail_bound(double t) { tail_bound_ = t; }
    void set_slots(std::vector<GridSlot> s) { slots_ = std::move(s); }

    /// Level at x ignoring bumps.
    [[nodiscard]] double level_at(double x) const {
        for (const auto& s : segments_)
            if (x > s.a && x <= s.b) return s.value;
        if (!segments_.empty() && x == segments_.front().a) return segments_.front().value;
        return base_;
    }

    /// Value of the underlying (unconjugated) exponent; the divergence
    /// marker at a bump center.
    [[nodiscard]] ExtendedReal primal_eval(double x) const {
        check_domain(x);
        double v = level_at(x);
        for_each_bump_covering(x, [&](const LogBump& b) {
            if (x == b.center) {
                v = std::numeric_limits<double>::infinity();
                return;
            }
            v += -std::log(x - b.center);
        });
        if (std::isinf(v)) return ExtendedReal::divergent();
        return v;
    }

    [[nodiscard]] ExtendedReal eval(double x) const {
        auto p = primal_eval(x);
        return conjugated_ ? conjugate_value(p) : p;
    }

    [[nodiscard]] ExponentFunction conjugate() const {
        ExponentFunction q = *this;
        q.conjugated_ = !conjugated_;
        return q;
    }

    /// First K bumps (in enumeration order).
    [[nodiscard]] ExponentFunction truncated(std::size_t K) const {
        ExponentFunction q = *this;
        q.bumps_.resize(std::min(K, bumps_.size()));
        q.truncation_ = q.bumps_.size();
        q.rebuild_index();
        return q;
    }

    /// Bumps with center <= l and support end >= r, i.e. nonzero on all of (l, r).
    [[nodiscard]] std::vector<const LogBump*> active_on(double l, double r) const {
        std::vector<const LogBump*> out;
        const double mid = 0.5 * (l + r);
        auto it = std::upper_bound(sorted_.begin(), sorted_.end(), l,
                                   [](double v, const LogBump& b) { return v < b.center; });
        while (it != sorted_.begin()) {
            --it;
            if (it->center < l - max_eff_) break;
            if (it->center <= l && mid < it->support_end()) out.push_back(&*it);
        }
        return out;
    }

    /// Bump centers, bump ends and level changes strictly inside (a, b).
    void breakpoints(double a, double b, std::vector<double>& out) const {
        auto it = std::lower_bound(sorted_.begin(), sorted_.end(), a - max_eff_,
                                   [](const LogBump& bm, double v) { return bm.center < v; });
        for (; it != sorted_.end() && it->center < b; ++it) {
            if (it->center > a) out.push_back(it->center);
            const double e = it->support_end();
            if (e > a && e < b) out.push_back(e);
        }
        for (const auto& s : segments_) {
            if (s.a > a && s.a < b) out.push_back(s.a);
            if (s.b > a && s.b < b) out.push_back(s.b);
        }
    }

    friend bool operator==(const ExponentFunction& x, const ExponentFunction& y) {
        auto same_bumps = [](const std::vector<LogBump>& u, const std::vector<LogBump>& v) {
            if (u.size() != v.size()) return false;
            for (std::size_t i = 0; i < u.size(); ++i)
                if (u[i].center != v[i].center || u[i].width != v[i].width || u[i].index != v[i].index)
                    return false;
            return true;
        };
        auto same_segments = [](const std::vector<LevelSegment>& u, const std::vector<LevelSegment>& v) {
            if (u.size() != v.size()) return false;
            for (std::size_t i = 0; i < u.size(); ++i)
                if (u[i].a != v[i].a || u[i].b != v[i].b || u[i].value != v[i].value) return false;
            return true;
        };
        return x.kind_ == y.kind_ && x.base_ == y.base_ && x.domain_.lo == y.domain_.lo &&
               x.domain_.hi == y.domain_.hi && x.conjugated_ == y.conjugated_ &&
               x.truncation_ == y.truncation_ && same_bumps(x.bumps_, y.bumps_) &&
               same_segments(x.segments_, y.segments_);
    }

private:
    void check_domain(double x) const {
        if (!(x >= domain_.lo && x <= domain_.hi))
            throw InputError("point " + std::to_string(x) + " outside exponent domain");
    }

    template <class F>
    void for_each_bump_covering(double x, F&& f) const {
        auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x,
                                   [](double v, const LogBump& b) { return v < b.center; });
        while (it != sorted_.begin()) {
            --it;
            if (it->center < x - max_eff_) break;
            if (x == it->center || x < it->support_end()) f(*it);
        }
    }

    void validate() {
        if (!(base_ >= 1.0)) throw InputError("exponent base must be >= 1");
        if (!(domain_.hi > domain_.lo)) throw InputError("degenerate exponent domain");
        for (const auto& s : segments_)
            if (!(s.value >= 1.0) || !(s.b > s.a)) throw InputError("invalid level segment");
        std::sort(segments_.begin(), segments_.end(), [](auto& u, auto& v) { return u.a < v.a; });
        for (const auto& b : bumps_)
            if (!(b.width > 0.0) || !domain_.contains(b.center)) throw InputError("invalid bump");
        rebuild_index();
    }

    void rebuild_index() {
        sorted_ = bumps_;
        std::sort(sorted_.begin(), sorted_.end(), [](auto& u, auto& v) { return u.center < v.center; });
        max_eff_ = 0.0;
        for (const auto& b : sorted_) max_eff_ = std::max(max_eff_, b.effective_width());
    }

    ExponentKind kind_ = ExponentKind::Constant;
    double base_ = 2.0;
    Interval domain_{};
    std::vector<LogBump> bumps_;
    std::vector<LogBump> sorted_;
    std::vector<LevelSegment> segments_;
    bool conjugated_ = false;
    std::size_t truncation_ = 0;
    double tail_bound_ = 0.0;
    double max_eff_ = 0.0;
    std::vector<GridSlot> slots_;
};

// ---------------------------------------------------------------------------
// Widths and enumerations
// ---------------------------------------------------------------------------

/// integral_0^delta log(1/x) dx = delta (1 + log(1/delta)).
inline double log_mass(double delta) { return delta > 0.0 ? delta * (1.0 - std::log(delta)) : 0.0; }

/// delta_k = min(cap, scale * ratio^k), k = 1, 2, ...
struct WidthRule {
    double scale = 1.0;
    double ratio = 0.5;
    double cap = kBumpCutoff;

    [[nodiscard]] double width(std::size_t k) const {
        return std::min(cap, scale * std::pow(ratio, static_cast<double>(k)));
    }

    [[nodiscard]] bool summable() const { return scale > 0.0 && ratio > 0.0 && ratio < 1.0 && cap > 0.0; }

    /// Exact value of sum_{k > K} log_mass(delta_k): capped terms summed
    /// explicitly, the geometric remainder in closed form.
    [[nodiscard]] double tail_bound(std::size_t K) const {
        if (!summable()) throw ConstructionError("width rule is not summable");
        double total = 0.0;
        std::size_t k = K + 1;
        for (; scale * std::pow(ratio, static_cast<double>(k)) >= cap && k < K + 100000; ++k) total += log_mass(cap);
        // sum_{j >= k} c r^j (1 + log(1/c) + j log(1/r))
        const double M = static_cast<double>(k);
        const double rk = std::pow(ratio, M);
        const double geo = rk / (1.0 - ratio);
        const double lin = rk * (M - (M - 1.0) * ratio) / ((1.0 - ratio) * (1.0 - ratio));
        total += scale * ((1.0 - std::log(scale)) * geo - std::log(ratio) * lin);
        return total;
    }

    [[nodiscard]] std::optional<Rational> exact_width(std::size_t k) const {
        if (cap == kBumpCutoff && scale == 1.0 && ratio == 0.5 && k < 62) {
            const std::int64_t den = std::int64_t{1} << k;
            if (den <= 200) return Rational{1, 200};
            return Rational{1, den};
        }
        return std::nullopt;
    }
};

enum class EnumerationScheme { DyadicRationals, Theorem52Grid };

struct BumpEnumeration {
    EnumerationScheme scheme = EnumerationScheme::DyadicRationals;
    Interval interval = unit_interval();
    /// Rows n for the (n, k) grid; empty means 1, 2, 3, ...
    std::vector<int> rows;

    static BumpEnumeration dyadic(Interval I = unit_interval()) { return {EnumerationScheme::DyadicRationals, I, {}}; }
    static BumpEnumeration theorem52(Interval I = torus_interval(), std::vector<int> rows = {}) {
        return {EnumerationScheme::Theorem52Grid, I, std::move(rows)};
    }

    struct Entry {
        double center;
        std::optional<Rational> exact;
        int n = 0;
        int k = 0;
    };

    /// First K entries. Dyadic centers are distinct; grid centers repeat
    /// whenever 2k/(2n+1) is not in lowest terms.
    [[nodiscard]] std::vector<Entry> first(std::size_t K) const {
        std::vector<Entry> out;
        out.reserve(K);
        const double len = interval.length();
        if (scheme == EnumerationScheme::DyadicRationals) {
            for (int level = 1; out.size() < K && level < 62; ++level) {
                const std::int64_t den = std::int64_t{1} << level;
                for (std::int64_t num = 1; num < den && out.size() < K; num += 2) {
                    Entry e{interval.lo + len * (static_cast<double>(num) / static_cast<double>(den)), std::nullopt};
                    if (interval.lo == 0.0 && interval.hi == 1.0) e.exact = Rational{num, den};
                    out.push_back(e);
                }
            }
        } else {
            const double scale = len / (2.0 * std::numbers::pi);
            auto emit_row = [&](int n) {
                for (int k = 1; k <= n && out.size() < K; ++k) {
                    const double t = 4.0 * std::numbers::pi * k / (2.0 * n + 1.0);
                    out.push_back({interval.lo + scale * t, std::nullopt, n, k});
                }
            };
            if (rows.empty()) {
                for (int n = 1; out.size() < K; ++n) emit_row(n);
            } else {
                for (int n : rows) emit_row(n);
            }
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// p = 2 + sum_{k <= K} m(x - r_k) with widths from `rule`.
inline ExponentFunction build_tilde_p(std::size_t K, const BumpEnumeration& enumeration = BumpEnumeration::dyadic(),
                                      const WidthRule& rule = {}) {
    if (!rule.summable()) throw ConstructionError("width rule does not satisfy the summability condition");
    auto entries = enumeration.first(K);
    if (entries.size() < K) throw ConstructionError("enumeration exhausted");
    std::vector<LogBump> bumps;
    std::vector<GridSlot> slots;
    bumps.reserve(K);
    for (std::size_t i = 0; i < K; ++i) {
        LogBump b;
        b.center = entries[i].center;
        b.width = rule.width(i + 1);
        b.index = i + 1;
        b.center_exact = entries[i].exact;
        b.width_exact = rule.exact_width(i + 1);
        if (b.center >= enumeration.interval.hi) continue;
        bumps.push_back(b);
        if (entries[i].n > 0) slots.push_back({entries[i].n, entries[i].k, b.center, b.width});
    }
    ExponentFunction p(ExponentKind::TildeP, 2.0, enumeration.interval, std::move(bumps));
    p.set_tail_bound(rule.tail_bound(K));
    p.set_slots(std::move(slots));
    return p;
}

/// delta_n^k = 2 / (n^2 k^2); delta_n^1 = 2 / n^2 and the double series of
/// log masses converges.
inline double theorem52_width(int n, int k) {
    const double nn = static_cast<double>(n) * n;
    const double kk = static_cast<double>(k) * k;
    return 2.0 / (nn * kk);
}

/// Exponent 2 + sum_n sum_{k <= n} m(x - t_n^k) over the given rows n.
inline ExponentFunction build_theorem52_exponent(const std::vector<int>& rows, Interval domain = torus_interval()) {
    std::vector<LogBump> bumps;
    std::vector<GridSlot> slots;
    const double scale = domain.length() / (2.0 * std::numbers::pi);
    std::size_t index = 0;
    double mass = 0.0;
    for (int n : rows) {
        if (n < 1) throw InputError("grid rows must be >= 1");
        for (int k = 1; k <= n; ++k) {
            LogBump b;
            b.center = domain.lo + scale * 4.0 * std::numbers::pi * k / (2.0 * n + 1.0);
            b.width = theorem52_width(n, k) * scale;
            b.index = ++index;
            const std::int64_t den = static_cast<std::int64_t>(n) * n * k * k;
            if (scale == 1.0 && den % 2 == 0) b.width_exact = Rational{1, den / 2};
            else if (scale == 1.0) b.width_exact = Rational{2, den};
            bumps.push_back(b);
            slots.push_back({n, k, b.center, b.width});
            mass += log_mass(b.effective_width());
        }
    }
    ExponentFunction p(ExponentKind::Theorem52, 2.0, domain, std::move(bumps));
    // Rows beyond the last one: sum_{n > N} sum_k log_mass(2/(n^2 k^2)) bounded by
    // sum_{n > N} sum_k (2/(n^2 k^2)) (1 + log(n^2 k^2 / 2)), itself below the
    // integral comparison 2 zeta(2) (1 + 2 log N + 4) / N.
    const int N = rows.empty() ? 0 : *std::max_element(rows.begin(), rows.end());
    if (N > 0) {
        const double z2 = std::numbers::pi * std::numbers::pi / 6.0;
        p.set_tail_bound(2.0 * z2 * (5.0 + 2.0 * std::log(static_cast<double>(N) + 1.0)) / N);
    }
    p.set_slots(std::move(slots));
    return p;
}

inline ExponentFunction build_theorem52_exponent(int N, Interval domain = torus_interval()) {
    if (N < 1) throw InputError("N must be >= 1");
    std::vector<int> rows(N);
    for (int i = 0; i < N; ++i) rows[i] = i + 1;
    return build_theorem52_exponent(rows, domain);
}

// ---------------------------------------------------------------------------
// Ranges
// ---------------------------------------------------------------------------

struct ExponentRange {
    double inf = 0.0;
    ExtendedReal sup = 0.0;
};

/// Exact essential infimum and supremum over (a, b). Between breakpoints the
/// bump sum is decreasing, so extremes are one-sided limits at cell ends.
inline ExponentRange essential_range_on(const ExponentFunction& p, double a, double b) {
    if (!(b > a)) throw InputError("essential_range_on needs a nondegenerate interval");
    std::vector<double> cuts{a, b};
    p.breakpoints(a, b, cuts);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double pinf = std::numeric_limits<double>::infinity();
    ExtendedReal psup = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double l = cuts[i], r = cuts[i + 1];
        const double level = p.level_at(0.5 * (l + r));
        double at_r = level;
        double at_l = level;
        bool singular = false;
        for (const LogBump* bump : p.active_on(l, r)) {
            at_r += -std::log(r - bump->center);
            if (bump->center == l) singular = true;
            else at_l += -std::log(l - bump->center);
        }
        pinf = std::min(pinf, at_r);
        ExtendedReal left = singular ? ExtendedReal::divergent() : ExtendedReal(at_l);
        if (psup < left) psup = left;
    }
    if (!p.conjugated()) return {pinf, psup};
    const ExtendedReal qsup = conjugate_value(pinf);
    const ExtendedReal qinf = conjugate_value(psup);
    return {qinf.value(), qsup};
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ExponentFunction& p) {
    nlohmann::json j;
    j["kind"] = to_string(p.kind());
    j["base"] = p.base();
    j["conjugate"] = p.conjugated();
    j["interval"] = {p.domain().lo, p.domain().hi};
    j["truncation"] = p.truncation();
    j["tail_bound"] = p.tail_bound();
    auto bumps = nlohmann::json::array();
    for (const auto& b : p.bumps_in_order()) {
        nlohmann::json jb{{"center", b.center}, {"width", b.width}, {"index", b.index}};
        if (b.center_exact) jb["center_exact"] = b.center_exact->to_string();
        if (b.width_exact) jb["width_exact"] = b.width_exact->to_string();
        bumps.push_back(jb);
    }
    j["bumps"] = bumps;
    if (!p.segments().empty()) {
        auto segs = nlohmann::json::array();
        for (const auto& s : p.segments()) segs.push_back({{"a", s.a}, {"b", s.b}, {"value", s.value}});
        j["segments"] = segs;
    }
    if (!p.slots().empty()) {
        auto slots = nlohmann::json::array();
        for (const auto& s : p.slots()) slots.push_back({{"n", s.n}, {"k", s.k}, {"center", s.center}, {"width", s.width}});
        j["slots"] = slots;
    }
    return j;
}

inline ExponentFunction exponent_from_json(const nlohmann::json& j) {
    try {
        std::vector<LogBump> bumps;
        for (const auto& jb : j.value("bumps", nlohmann::json::array())) {
            LogBump b;
            b.center = jb.at("center").get<double>();
            b.width = jb.at("width").get<double>();
            b.index = jb.at("index").get<std::size_t>();
            if (jb.contains("center_exact")) b.center_exact = Rational::parse(jb["center_exact"].get<std::string>());
            if (jb.contains("width_exact")) b.width_exact = Rational::parse(jb["width_exact"].get<std::string>());
            bumps.push_back(b);
        }
        std::vector<LevelSegment> segs;
        for (const auto& js : j.value("segments", nlohmann::json::array()))
            segs.push_back({js.at("a").get<double>(), js.at("b").get<double>(), js.at("value").get<double>()});
        Interval dom{j.at("interval").at(0).get<double>(), j.at("interval").at(1).get<double>()};
        ExponentFunction p(exponent_kind_from_string(j.at("kind").get<std::string>()), j.at("base").get<double>(), dom,
                           std::move(bumps), std::move(segs), j.value("conjugate", false));
        p.set_tail_bound(j.value("tail_bound", 0.0));
        std::vector<GridSlot> slots;
        for (const auto& js : j.value("slots", nlohmann::json::array()))
            slots.push_back({js.at("n").get<int>(), js.at("k").get<int>(), js.at("center").get<double>(),
                             js.at("width").get<double>()});
        p.set_slots(std::move(slots));
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed exponent JSON: ") + e.what());
    }
}

}  // namespace vexp
