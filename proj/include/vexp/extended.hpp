#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>

namespace vexp {

inline constexpr double kInvE = 1.0 / std::numbers::e;

class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedRepresentation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Marker for +infinity. Never participates in arithmetic.
struct Divergence {};

/// A real number or the divergence marker.
class ExtendedReal {
public:
    constexpr ExtendedReal() = default;
    constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(implicit)
    constexpr ExtendedReal(Divergence) : divergent_(true) {}  // NOLINT(implicit)

    static constexpr ExtendedReal divergent() { return ExtendedReal(Divergence{}); }

    [[nodiscard]] constexpr bool is_divergent() const { return divergent_; }
    [[nodiscard]] constexpr bool is_finite() const { return !divergent_; }

    /// Finite value; throws when divergent.
    [[nodiscard]] double value() const {
        if (divergent_) throw std::logic_error("value() on divergence marker");
        return value_;
    }

    /// 1/x with the convention 1/infinity = 0.
    [[nodiscard]] double reciprocal() const { return divergent_ ? 0.0 : 1.0 / value_; }

    friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
        if (a.divergent_ || b.divergent_) return a.divergent_ == b.divergent_;
        return a.value_ == b.value_;
    }

    friend constexpr bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
        if (a.divergent_) return false;
        if (b.divergent_) return true;
        return a.value_ < b.value_;
    }

    friend constexpr bool operator<=(const ExtendedReal& a, const ExtendedReal& b) {
        return !(b < a);
    }

    [[nodiscard]] std::string to_string() const {
        return divergent_ ? std::string("inf") : std::to_string(value_);
    }

private:
    double value_ = 0.0;
    bool divergent_ = false;
};

struct FiniteModular {
    double value = 0.0;
    double abs_error = 0.0;
};

/// Certificate that an integral is +infinity: the integrand behaves like
/// u^power (power <= -1) as u = x - location -> 0+.
struct DivergentModular {
    double location = 0.0;
    double power = -1.0;
};

class ModularValue {
public:
    ModularValue() = default;
    ModularValue(FiniteModular f) : data_(f) {}  // NOLINT(implicit)
    ModularValue(DivergentModular d) : data_(d) {}  // NOLINT(implicit)

    static ModularValue finite(double value, double abs_error = 0.0) {
        return FiniteModular{value, abs_error};
    }
    static ModularValue divergent(double location, double power) {
        return DivergentModular{location, power};
    }

    [[nodiscard]] bool is_finite() const { return std::holds_alternative<FiniteModular>(data_); }
    [[nodiscard]] bool is_divergent() const { return !is_finite(); }

    [[nodiscard]] double value() const {
        if (!is_finite()) throw std::logic_error("value() on divergent modular");
        return std::get<FiniteModular>(data_).value;
    }
    [[nodiscard]] double abs_error() const {
        return is_finite() ? std::get<FiniteModular>(data_).abs_error : 0.0;
    }
    [[nodiscard]] const DivergentModular& witness() const { return std::get<DivergentModular>(data_); }

    /// Sum; divergence absorbs.
    ModularValue& operator+=(const ModularValue& o) {
        if (is_divergent()) return *this;
        if (o.is_divergent()) {
            data_ = o.data_;
            return *this;
        }
        auto& f = std::get<FiniteModular>(data_);
        f.value += o.value();
        f.abs_error += o.abs_error();
        return *this;
    }

    /// True when the modular is certainly <= bound (divergent counts as > bound).
    [[nodiscard]] bool at_most(double bound) const { return is_finite() && value() <= bound; }

private:
    std::variant<FiniteModular, DivergentModular> data_{FiniteModular{}};
};

inline ModularValue operator*(double c, ModularValue m) {
    if (m.is_divergent()) return m;
    return ModularValue::finite(c * m.value(), std::abs(c) * m.abs_error());
}

}  // namespace vexp
