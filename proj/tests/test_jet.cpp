#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pikan/jet.hpp"

using pikan::Jet2;

TEST_CASE("lifting rules") {
    const Jet2 c = pikan::lift_const(3.5);
    REQUIRE(c.v == 3.5);
    REQUIRE(c.d1 == 0.0);
    REQUIRE(c.d2 == 0.0);
    const Jet2 t = pikan::lift_input(3.5);
    REQUIRE(t.v == 3.5);
    REQUIRE(t.d1 == 1.0);
    REQUIRE(t.d2 == 0.0);
}

TEST_CASE("sin jet at seeded input") {
    const Jet2 y = sin(pikan::lift_input(0.5));
    REQUIRE(y.v == Catch::Approx(0.479426).margin(1e-6));
    REQUIRE(y.d1 == Catch::Approx(0.877583).margin(1e-6));
    REQUIRE(y.d2 == Catch::Approx(-0.479426).margin(1e-6));
}

TEST_CASE("silu of a constant is constant") {
    const Jet2 y = silu(pikan::lift_const(0.0));
    REQUIRE(y.v == 0.0);
    REQUIRE(y.d1 == 0.0);
    REQUIRE(y.d2 == 0.0);
}

TEST_CASE("product rule: t * t") {
    const Jet2 t = pikan::lift_input(2.0);
    const Jet2 y = t * t;
    REQUIRE(y.v == 4.0);
    REQUIRE(y.d1 == 4.0);
    REQUIRE(y.d2 == 2.0);
}

TEST_CASE("cubic is exact") {
    for (double t0 : {-1.7, 0.0, 0.3, 2.5}) {
        const Jet2 t = pikan::lift_input(t0);
        const Jet2 y = t * t * t;
        REQUIRE(y.v == Catch::Approx(t0 * t0 * t0).margin(1e-14));
        REQUIRE(y.d1 == Catch::Approx(3 * t0 * t0).margin(1e-14));
        REQUIRE(y.d2 == Catch::Approx(6 * t0).margin(1e-14));
    }
}

TEST_CASE("jet linearity") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int n = 0; n < 100; ++n) {
        const Jet2 f{u(rng), u(rng), u(rng)};
        const Jet2 g{u(rng), u(rng), u(rng)};
        const double a = u(rng), b = u(rng);
        const Jet2 lhs = a * f + b * g;
        REQUIRE(lhs.v == Catch::Approx(a * f.v + b * g.v).margin(1e-14));
        REQUIRE(lhs.d1 == Catch::Approx(a * f.d1 + b * g.d1).margin(1e-14));
        REQUIRE(lhs.d2 == Catch::Approx(a * f.d2 + b * g.d2).margin(1e-14));
    }
}

TEST_CASE("composed transcendental chain matches finite differences") {
    auto f = [](double t) { return std::sin(t) * pikan::silu(2.0 * t) + std::cos(t * t); };
    auto jet_f = [](Jet2 t) { return sin(t) * silu(2.0 * t) + cos(t * t); };
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int n = 0; n < 50; ++n) {
        const double t0 = u(rng);
        const Jet2 y = jet_f(pikan::lift_input(t0));
        REQUIRE(y.v == Catch::Approx(f(t0)).margin(1e-12));
        REQUIRE(oracle::rel_err(y.d1, oracle::fd1(f, t0, 1e-5), 1e-6) <= 1e-5);
        REQUIRE(oracle::rel_err(y.d2, oracle::fd2(f, t0, 1e-4), 1e-5) <= 1e-4);
    }
}

TEST_CASE("silu and tanh derivative tables match finite differences") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int n = 0; n < 50; ++n) {
        const double x = u(rng);
        double sd[4], td[4];
        pikan::silu_derivs(x, sd);
        pikan::tanh_derivs(x, td);
        REQUIRE(oracle::rel_err(sd[1], oracle::fd1([](double t) { return pikan::silu(t); }, x, 1e-6), 1e-8) <= 1e-6);
        REQUIRE(oracle::rel_err(sd[2], oracle::fd2([](double t) { return pikan::silu(t); }, x, 1e-4), 1e-6) <= 1e-4);
        auto silu1 = [](double t) { double d[4]; pikan::silu_derivs(t, d); return d[1]; };
        auto silu2 = [](double t) { double d[4]; pikan::silu_derivs(t, d); return d[2]; };
        REQUIRE(oracle::rel_err(sd[2], oracle::fd1(silu1, x, 1e-6), 1e-8) <= 1e-5);
        REQUIRE(oracle::rel_err(sd[3], oracle::fd1(silu2, x, 1e-6), 1e-6) <= 1e-4);
        REQUIRE(oracle::rel_err(td[1], oracle::fd1([](double t) { return std::tanh(t); }, x, 1e-6), 1e-8) <= 1e-6);
        auto tanh2 = [](double t) { double d[4]; pikan::tanh_derivs(t, d); return d[2]; };
        REQUIRE(oracle::rel_err(td[3], oracle::fd1(tanh2, x, 1e-6), 1e-7) <= 1e-5);
    }
}

TEST_CASE("zero tangent seed degenerates to plain evaluation") {
    const Jet2 x{0.7, 0.0, 0.0};
    const Jet2 y = sin(x) * silu(x) + exp(x);
    REQUIRE(y.d1 == 0.0);
    REQUIRE(y.d2 == 0.0);
    REQUIRE(y.v == Catch::Approx(std::sin(0.7) * pikan::silu(0.7) + std::exp(0.7)).margin(1e-14));
}
