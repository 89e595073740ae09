#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <random>
#include <sstream>

#include "vexp/funcrep.hpp"

using namespace vexp;
using hp = boost::multiprecision::cpp_dec_float_50;

namespace {

ExponentFunction single_bump(double center, double width, double base = 2.0) {
    LogBump b;
    b.center = center;
    b.width = width;
    b.index = 1;
    return ExponentFunction(ExponentKind::TildeP, base, unit_interval(), {b});
}

// Independent oracle: tanh-sinh on the pointwise integrand (|f|/lambda)^{p(x)}.
double oracle_powered(const PiecewiseFunction& f, const ExponentFunction& p, double lambda, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> ts;
    std::vector<double> cuts{a, b};
    p.breakpoints(a, b, cuts);
    for (const auto& pc : f.pieces())
        for (double e : {pc.a, pc.b})
            if (e > a && e < b) cuts.push_back(e);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        total += ts.integrate(
            [&](double x) {
                auto fx = evaluate(f, x);
                auto px = p.eval(x);
                if (fx.is_divergent() || px.is_divergent()) return 0.0;
                const double s = std::abs(fx.value()) / lambda;
                if (s == 0.0) return 0.0;
                return std::pow(s, px.value());
            },
            cuts[i], cuts[i + 1]);
    }
    return total;
}

}  // namespace

TEST(Funcrep, EvaluateStep) {
    auto f = PiecewiseFunction::step({{0.0, 0.5, 1.0}, {0.5, 1.0, 3.0}});
    EXPECT_EQ(evaluate(f, 0.75).value(), 3.0);
    EXPECT_EQ(evaluate(f, 0.5).value(), 1.0);
    EXPECT_EQ(evaluate(f, 1.5).value(), 0.0);
    EXPECT_EQ(evaluate(f, -1.0).value(), 0.0);
}

TEST(Funcrep, EvaluatePowerLog) {
    PiecewiseFunction f({Piece::power_log(0.0, 0.5)});
    const hp u = exp(hp(-2));
    const hp expected = 1 / (u * 4);
    EXPECT_NEAR(evaluate(f, std::exp(-2.0)).value(), expected.convert_to<double>(), 1e-13);
    EXPECT_NEAR(evaluate(f, std::exp(-2.0)).value(), 1.8473, 1e-4);
    EXPECT_TRUE(evaluate(f, 0.0).is_divergent());
}

TEST(Funcrep, IntegrateLogReciprocal) {
    PiecewiseFunction f({Piece::log_reciprocal(0.0, 1.0)});
    const hp d = hp(1) / 100;
    const hp expected = d - d * log(d);
    EXPECT_NEAR(integrate(f, 0.0, 0.01).value(), expected.convert_to<double>(), 1e-15);
    EXPECT_NEAR(integrate(f, 0.0, 0.01).value(), 0.056052, 1e-6);
}

TEST(Funcrep, IntegratePowerLog) {
    PiecewiseFunction f({Piece::power_log(0.0, std::exp(-1.0))});
    EXPECT_NEAR(integrate(f, 0.0, std::exp(-1.0)).value(), 1.0, 1e-15);
}

TEST(Funcrep, IntegrateEmpty) {
    auto f = PiecewiseFunction::step({{0.0, 1.0, 2.0}});
    EXPECT_EQ(integrate(f, 0.3, 0.3).value(), 0.0);
}

TEST(Funcrep, PoweredConstantOnBump) {
    const double r = 0.25, d = 0.005;
    auto p = single_bump(r, d);
    auto f = PiecewiseFunction::step({{r, r + d, 1.0}});
    EXPECT_NEAR(powered_integral(f, p, 1.0, 0.0, 1.0).value(), d, 1e-15);
    EXPECT_TRUE(powered_integral(f, p, std::exp(-1.0), 0.0, 1.0).is_divergent());
    const double L = std::log(2.0);
    const double expected = 4.0 * std::pow(d, 1.0 - L) / (1.0 - L);
    EXPECT_NEAR(powered_integral(f, p, 0.5, 0.0, 1.0).value(), expected, 1e-14);
    const hp L50 = log(hp(2));
    const hp oracle = 4 * pow(hp(d), 1 - L50) / (1 - L50);
    EXPECT_NEAR(powered_integral(f, p, 0.5, 0.0, 1.0).value(), oracle.convert_to<double>(), 1e-13);
    EXPECT_NEAR(expected, 2.5648, 1e-4);
}

TEST(Funcrep, PoweredDivergenceThreshold) {
    const double r = 0.5, d = 0.004;
    auto p = single_bump(r, d);
    auto f = PiecewiseFunction::step({{0.4, 0.6, 1.0}});
    EXPECT_TRUE(powered_integral(f, p, kBumpCutoff, 0.0, 1.0).is_divergent());
    EXPECT_TRUE(powered_integral(f, p, std::exp(-1.0), 0.0, 1.0).is_divergent());
    EXPECT_TRUE(powered_integral(f, p, std::nextafter(std::exp(-1.0), 1.0), 0.0, 1.0).is_finite());
}

TEST(Funcrep, PoweredRejectsBadLambda) {
    auto f = PiecewiseFunction::step({{0.0, 1.0, 1.0}});
    auto p = ExponentFunction::constant(2.0);
    EXPECT_THROW(powered_integral(f, p, 0.0, 0.0, 1.0), InputError);
    EXPECT_THROW(powered_integral(f, p, -1.0, 0.0, 1.0), InputError);
}

TEST(Funcrep, PoweredPowerLogAgainstExponent) {
    // (f)^{q} with f = 1/(u log^2(1/u)) and constant exponent: divergent above 1, finite at 1
    PiecewiseFunction f({Piece::power_log(0.0, 0.1)});
    EXPECT_TRUE(powered_integral(f, ExponentFunction::constant(1.01), 1.0, 0.0, 1.0).is_divergent());
    auto m = powered_integral(f, ExponentFunction::constant(1.0), 1.0, 0.0, 1.0);
    ASSERT_TRUE(m.is_finite());
    EXPECT_NEAR(m.value(), 1.0 / std::log(10.0), 1e-11);
}

TEST(Funcrep, PoweredPowerLogConjugateBumpFinite) {
    // base 1 bump at 0, conjugated: q = 1 + v with v = 1/log(1/u), and f^q du = e v^{2v} dv
    auto q = single_bump(0.0, 1.0, 1.0).conjugate();
    PiecewiseFunction f({Piece::power_log(0.0, 0.1)});
    auto m = powered_integral(f, q, 1.0, 0.0, kBumpCutoff);
    ASSERT_TRUE(m.is_finite());
    boost::math::quadrature::tanh_sinh<double> ts;
    const double V = 1.0 / std::log(1.0 / kBumpCutoff);
    const double oracle = ts.integrate([](double v) { return std::exp(1.0 + 2.0 * v * std::log(v)); }, 0.0, V);
    EXPECT_NEAR(m.value(), oracle, 1e-10);
    // off the bump q is infinite and f > 1 there
    EXPECT_TRUE(powered_integral(f, q, 1.0, 0.0, 0.1).is_divergent());
}

TEST(Funcrep, InfiniteExponentOffBumps) {
    auto q = single_bump(0.5, 0.001, 1.0).conjugate();
    EXPECT_NEAR(powered_integral(PiecewiseFunction::step({{0.0, 0.4, 1.0}}), q, 1.0, 0.0, 1.0).value(), 0.4, 1e-15);
    EXPECT_EQ(powered_integral(PiecewiseFunction::step({{0.0, 0.4, 0.9}}), q, 1.0, 0.0, 1.0).value(), 0.0);
    EXPECT_TRUE(powered_integral(PiecewiseFunction::step({{0.0, 0.4, 1.1}}), q, 1.0, 0.0, 1.0).is_divergent());
}

TEST(Funcrep, SampledRejectedByNormPaths) {
    PiecewiseFunction f({Piece::sampled({0.0, 0.5, 1.0}, {1.0, 2.0, 1.0})});
    EXPECT_NEAR(integrate(f, 0.0, 1.0).value(), 1.5, 1e-15);
    EXPECT_THROW(powered_integral(f, ExponentFunction::constant(2.0), 1.0, 0.0, 1.0), UnsupportedRepresentation);
}

TEST(FuncrepProperty, LinearityOnSteps) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.0, 1.0), V(-5.0, 5.0);
    auto random_step = [&] {
        std::vector<double> cuts;
        for (int i = 0; i < 9; ++i) cuts.push_back(U(rng));
        std::sort(cuts.begin(), cuts.end());
        std::vector<std::array<double, 3>> s;
        for (std::size_t i = 0; i + 1 < cuts.size(); i += 2) s.push_back({cuts[i], cuts[i + 1], V(rng)});
        return PiecewiseFunction::step(s);
    };
    for (int t = 0; t < 200; ++t) {
        auto f = random_step(), g = random_step();
        const double al = V(rng), be = V(rng);
        auto h = add_steps(f, g, al, be);
        const double lhs = integrate(h, 0.0, 1.0).value();
        const double rhs = al * integrate(f, 0.0, 1.0).value() + be * integrate(g, 0.0, 1.0).value();
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST(FuncrepProperty, QuadratureMatchesAntiderivative) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        const int kind = t % 3;
        const double len = kind == 2 ? 0.9 * U(rng) + 0.01 : U(rng) * 0.99 + 0.01;
        Piece pc = kind == 0 ? Piece::constant(0.0, len, 3.0 * U(rng) + 0.1)
                   : kind == 1 ? Piece::log_reciprocal(0.0, len, U(rng) + 0.1)
                               : Piece::power_log(0.0, len, U(rng) + 0.1);
        PiecewiseFunction f({pc});
        double a = U(rng) * len, b = U(rng) * len;
        if (a > b) std::swap(a, b);
        if (t % 5 == 0) a = 0.0;
        if (!(b > a)) continue;
        const double exact = integrate(f, a, b).value();
        // quadrature: powered integral with exponent 1 and lambda 1 is the plain integral
        const auto q = powered_integral(f, ExponentFunction::constant(1.0), 1.0, a, b, 1e-13);
        ASSERT_TRUE(q.is_finite());
        EXPECT_NEAR(q.value(), exact, 1e-10 * std::max(std::abs(exact), 1e-3)) << t;
    }
}

TEST(FuncrepProperty, ConstantExponentIsClassical) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const double q = 1.0 + 4.0 * U(rng), lambda = 0.2 + U(rng);
        std::vector<std::array<double, 3>> s;
        double x = 0.0, classical = 0.0;
        for (int i = 0; i < 6; ++i) {
            const double w = 0.15 * U(rng), c = 3.0 * U(rng) - 1.5;
            s.push_back({x, x + w, c});
            classical += std::pow(std::abs(c) / lambda, q) * w;
            x += w + 0.01;
        }
        auto f = PiecewiseFunction::step(s);
        const double v = powered_integral(f, ExponentFunction::constant(q), lambda, 0.0, 1.0).value();
        EXPECT_NEAR(v, classical, 1e-10 * classical);
        // log-reciprocal piece under a constant exponent: Gamma(q+1) oracle on (0,1)
        PiecewiseFunction g({Piece::log_reciprocal(0.0, 1.0)});
        const double mv = powered_integral(g, ExponentFunction::constant(q), 1.0, 0.0, 1.0).value();
        EXPECT_NEAR(mv, std::tgamma(q + 1.0), 1e-10 * std::tgamma(q + 1.0));
    }
}

TEST(FuncrepProperty, PoweredAgainstIndependentQuadrature) {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto p = build_tilde_p(40);
    for (int t = 0; t < 60; ++t) {
        std::vector<std::array<double, 3>> s;
        double x = 0.0;
        while (x < 0.95) {
            const double w = 0.02 + 0.1 * U(rng);
            s.push_back({x, std::min(1.0, x + w), 0.1 * U(rng)});
            x += w;
        }
        auto f = PiecewiseFunction::step(s);
        const double lambda = 0.3 + U(rng);
        auto m = powered_integral(f, p, lambda, 0.0, 1.0);
        ASSERT_TRUE(m.is_finite());
        const double oracle = oracle_powered(f, p, lambda, 0.0, 1.0);
        EXPECT_NEAR(m.value(), oracle, 1e-9 * std::max(1.0, oracle)) << t;
        auto mq = powered_integral(f, p.conjugate(), lambda, 0.0, 1.0);
        EXPECT_NEAR(mq.value(), oracle_powered(f, p.conjugate(), lambda, 0.0, 1.0), 1e-9) << t;
    }
}

TEST(FuncrepProperty, DivergenceIffLocalExponentTest) {
    // constant c on (r, r+d): divergent exactly when log(c/lambda) >= 1
    auto p = single_bump(0.5, 0.003);
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> U(0.05, 5.0);
    for (int t = 0; t < 300; ++t) {
        const double c = U(rng), lambda = U(rng);
        auto f = PiecewiseFunction::step({{0.5, 0.503, c}});
        const bool expect_div = std::log(c) - std::log(lambda) >= 1.0;
        EXPECT_EQ(powered_integral(f, p, lambda, 0.0, 1.0).is_divergent(), expect_div) << c << " " << lambda;
    }
}

TEST(Funcrep, UnionExponentLevels) {
    auto u0 = exponent_for_integrable(PiecewiseFunction::step({{0.0, 1.0, 0.5}}));
    EXPECT_EQ(u0.exponent.eval(0.3).value(), 2.0);
    EXPECT_EQ(u0.exponent.kind(), ExponentKind::UnionExponent);

    auto u = exponent_for_integrable(PiecewiseFunction::step({{0.0, 0.2, 0.5}, {0.2, 0.5, 1.5}, {0.5, 0.9, 7.3}}));
    EXPECT_EQ(u.exponent.eval(0.1).value(), 2.0);
    EXPECT_EQ(u.exponent.eval(0.3).value(), 1.5);
    EXPECT_EQ(u.exponent.eval(0.7).value(), 1.125);
    EXPECT_EQ(u.exponent.eval(0.95).value(), 2.0);
}

TEST(Funcrep, UnionCertificate) {
    auto u = exponent_for_integrable(PiecewiseFunction::step({{0.5, 0.5 + 1e-9, 1e6}}));
    const hp n = hp(1000001);
    const hp oracle = pow(n, 1 + 1 / n) * hp("1e-9") + (1 - hp("1e-9"));
    EXPECT_TRUE(std::isfinite(u.certificate));
    EXPECT_NEAR(u.certificate, oracle.convert_to<double>(), 1e-9);
    EXPECT_THROW(exponent_for_integrable(PiecewiseFunction({Piece::log_reciprocal(0.0, 0.5)})),
                 UnsupportedRepresentation);
}

TEST(Funcrep, JsonRoundTrip) {
    PiecewiseFunction f({Piece::constant(0.0, 0.25, 1.5), Piece::log_reciprocal(0.3, 0.6, 2.0),
                         Piece::power_log(0.6, 0.9, -1.0)},
                        true);
    auto back = function_from_json(nlohmann::json::parse(to_json(f).dump()));
    ASSERT_EQ(back.pieces().size(), 3u);
    EXPECT_TRUE(back.periodic());
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.pieces()[i].a, f.pieces()[i].a);
        EXPECT_EQ(back.pieces()[i].b, f.pieces()[i].b);
        EXPECT_EQ(back.pieces()[i].kind, f.pieces()[i].kind);
        EXPECT_EQ(back.pieces()[i].coef, f.pieces()[i].coef);
    }
    EXPECT_THROW(function_from_json(nlohmann::json{{"pieces", {{{"a", 0}}}}}), InputError);
}

TEST(Funcrep, CsvSamples) {
    std::ostringstream os;
    write_samples_csv(os, PiecewiseFunction::step({{0.0, 0.5, 2.0}}), 0.0, 1.0, 3);
    EXPECT_EQ(os.str(), "x,f(x)\n0,0\n0.5,2\n1,0\n");
}

TEST(Funcrep, OverlapRejected) {
    EXPECT_THROW(PiecewiseFunction::step({{0.0, 0.5, 1.0}, {0.4, 0.8, 1.0}}), InputError);
    EXPECT_THROW(PiecewiseFunction({Piece::power_log(0.0, 1.0)}), InputError);
}
