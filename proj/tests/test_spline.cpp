#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pikan/spline.hpp"

using pikan::SplineSpec;

TEST_CASE("knot grid and basis counts") {
    SplineSpec s(1, 2, 0.0, 1.0);
    REQUIRE(s.num_basis() == 3);
    const std::vector<double> expect = {-0.5, 0.0, 0.5, 1.0, 1.5};
    REQUIRE(s.knots().size() == expect.size());
    for (size_t i = 0; i < expect.size(); ++i)
        REQUIRE(s.knots()[i] == Catch::Approx(expect[i]).margin(1e-15));

    REQUIRE(SplineSpec(3, 10, -1.0, 1.0).num_basis() == 13);  // 195 / 15 edges
    REQUIRE(SplineSpec(3, 5, -1.0, 1.0).num_basis() == 8);    // 720 / 90 edges

    // Strictly increasing uniform extension.
    SplineSpec c(3, 10, -1.0, 1.0);
    for (size_t i = 1; i < c.knots().size(); ++i) REQUIRE(c.knots()[i] > c.knots()[i - 1]);
    REQUIRE(c.knots().size() == static_cast<size_t>(10 + 2 * 3 + 1));
}

TEST_CASE("construction errors") {
    REQUIRE_THROWS_AS(SplineSpec(0, 5, -1.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(SplineSpec(3, 0, -1.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(SplineSpec(3, 5, 1.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(SplineSpec(3, 5, 2.0, -1.0), std::invalid_argument);
}

TEST_CASE("partition of unity and local support") {
    for (auto [k, g] : {std::pair{1, 2}, {2, 7}, {3, 10}, {3, 5}, {4, 6}}) {
        SplineSpec s(k, g, -1.0, 1.0);
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> xs(-1.0, 1.0);
        for (int n = 0; n < 1000; ++n) {
            const double x = xs(rng);
            const auto b = s.basis_all(x, 0);
            double sum = 0.0;
            int nonzero = 0;
            for (double v : b) {
                sum += v;
                nonzero += v != 0.0;
            }
            REQUIRE(std::abs(sum - 1.0) <= 1e-12);
            REQUIRE(nonzero <= k + 1);

            const auto b1 = s.basis_all(x, 1);
            double dsum = 0.0;
            for (double v : b1) dsum += v;
            REQUIRE(std::abs(dsum) <= 1e-11);
        }
    }
}

TEST_CASE("basis matches naive recursive Cox-de Boor") {
    for (auto [k, g] : {std::pair{1, 3}, {2, 4}, {3, 10}, {3, 5}}) {
        SplineSpec s(k, g, -1.0, 1.0);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> xs(-1.0 + 1e-9, 1.0 - 1e-9);
        for (int n = 0; n < 200; ++n) {
            const double x = xs(rng);
            const auto got = s.basis_all(x, 0);
            for (int i = 0; i < s.num_basis(); ++i) {
                const double want = oracle::naive_bspline(s.knots(), i, k, x);
                REQUIRE(std::abs(got[static_cast<size_t>(i)] - want) <= 1e-12);
            }
        }
    }
}

TEST_CASE("analytic derivatives match finite differences") {
    SplineSpec s(3, 10, -1.0, 1.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> xs(-0.95, 0.95);
    std::normal_distribution<double> cs(0.0, 1.0);
    std::vector<double> coeffs(static_cast<size_t>(s.num_basis()));
    for (auto& c : coeffs) c = cs(rng);

    for (int n = 0; n < 100; ++n) {
        const double x = xs(rng);
        auto f = [&](double t) { return s.eval(coeffs, t, 0); };
        const double d1 = s.eval(coeffs, x, 1);
        const double d2 = s.eval(coeffs, x, 2);
        REQUIRE(oracle::rel_err(d1, oracle::fd1(f, x, 1e-5)) <= 1e-5);
        REQUIRE(oracle::rel_err(d2, oracle::fd2(f, x, 1e-5), 1e-6) <= 1e-5);
    }
}

TEST_CASE("spec example: first derivative vector at x = 0.3") {
    SplineSpec s(3, 10, -1.0, 1.0);
    const auto d1 = s.basis_all(0.3, 1);
    const double h = 1e-6;
    const auto up = s.basis_all(0.3 + h, 0);
    const auto dn = s.basis_all(0.3 - h, 0);
    for (int i = 0; i < s.num_basis(); ++i) {
        const double fd = (up[static_cast<size_t>(i)] - dn[static_cast<size_t>(i)]) / (2 * h);
        if (std::abs(fd) > 1e-9)
            REQUIRE(oracle::rel_err(d1[static_cast<size_t>(i)], fd, 1e-6) <= 1e-6);
    }
}

TEST_CASE("degree-1 spline: order-2 derivative is zero") {
    SplineSpec s(1, 4, -1.0, 1.0);
    for (double x : {-0.9, -0.3, 0.2, 0.8}) {
        const auto d2 = s.basis_all(x, 2);
        for (double v : d2) REQUIRE(v == 0.0);
    }
}

TEST_CASE("spline_eval: constant coefficients reproduce the constant") {
    SplineSpec s(3, 10, -1.0, 1.0);
    std::vector<double> zeros(static_cast<size_t>(s.num_basis()), 0.0);
    std::vector<double> halves(static_cast<size_t>(s.num_basis()), 0.5);
    for (double x : {-1.0, -0.37, 0.0, 0.42, 0.999}) {
        REQUIRE(s.eval(zeros, x, 0) == 0.0);
        REQUIRE(s.eval(halves, x, 0) == Catch::Approx(0.5).margin(1e-13));
    }
}

TEST_CASE("spline_eval matches per-basis brute force") {
    SplineSpec s(3, 10, -1.0, 1.0);
    std::mt19937_64 rng(123);
    std::normal_distribution<double> cs(0.0, 1.0);
    std::vector<double> coeffs(static_cast<size_t>(s.num_basis()));
    for (auto& c : coeffs) c = cs(rng);
    const double x = 0.42;
    double want = 0.0;
    for (int i = 0; i < s.num_basis(); ++i)
        want += coeffs[static_cast<size_t>(i)] * oracle::naive_bspline(s.knots(), i, 3, x);
    REQUIRE(s.eval(coeffs, x, 0) == Catch::Approx(want).epsilon(1e-12));
}

TEST_CASE("continuity across knots") {
    SplineSpec s(3, 10, -1.0, 1.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> cs(0.0, 1.0);
    std::vector<double> coeffs(static_cast<size_t>(s.num_basis()));
    for (auto& c : coeffs) c = cs(rng);
    for (int cell = 1; cell < 10; ++cell) {
        const double knot = -1.0 + 0.2 * cell;
        const double lo = s.eval(coeffs, knot - 1e-9, 0);
        const double hi = s.eval(coeffs, knot + 1e-9, 0);
        REQUIRE(std::abs(hi - lo) <= 1e-6 * std::max(1.0, std::abs(lo)));
    }
}

TEST_CASE("out-of-domain evaluation extends the boundary polynomial") {
    SplineSpec s(3, 10, -1.0, 1.0);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> cs(0.0, 1.0);
    std::vector<double> coeffs(static_cast<size_t>(s.num_basis()));
    for (auto& c : coeffs) c = cs(rng);

    // Cubic extrapolation: third derivative constant beyond the boundary, and
    // the value stays continuous through it.
    const double inside = s.eval(coeffs, 1.0 - 1e-7, 0);
    const double outside = s.eval(coeffs, 1.0 + 1e-7, 0);
    REQUIRE(std::abs(inside - outside) <= 1e-5);

    // Derivatives stay nonzero out there (no dead gradients).
    const double d1_out = s.eval(coeffs, 1.8, 1);
    REQUIRE(std::isfinite(d1_out));
    auto f = [&](double t) { return s.eval(coeffs, t, 0); };
    REQUIRE(oracle::rel_err(d1_out, oracle::fd1(f, 1.8, 1e-6), 1e-9) <= 1e-5);

    // Partition of unity extends too (sum of all basis polynomials).
    const auto b = s.basis_all(-1.6, 0);
    double sum = 0.0;
    for (double v : b) sum += v;
    REQUIRE(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("evaluation errors") {
    SplineSpec s(3, 10, -1.0, 1.0);
    std::vector<double> bad(3, 0.0);
    REQUIRE_THROWS_AS(s.eval(bad, 0.0, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(s.basis_all(std::nan(""), 0), std::domain_error);
    std::vector<double> ok(static_cast<size_t>(s.num_basis()), 0.0);
    REQUIRE_THROWS_AS(s.eval(ok, std::numeric_limits<double>::infinity(), 0), std::domain_error);
}
