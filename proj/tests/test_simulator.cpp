#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "pikan/grid.hpp"
#include "pikan/simulate.hpp"

using pikan::Dataset;
using pikan::GridModel;
using pikan::Trajectory;

TEST_CASE("equilibrium initial state stays constant") {
    const GridModel smib = pikan::smib_model();
    const double theta_eq = std::asin(0.5);
    const auto traj = pikan::integrate(smib, std::vector<double>{theta_eq, 0.0},
                                       std::vector<double>{0.1, 0.0}, 20.0);
    REQUIRE(traj.n_samples() == 201);
    for (int r = 0; r < traj.n_samples(); ++r) {
        REQUIRE(std::abs(traj.theta(r, 0) - theta_eq) <= 1e-9);
        REQUIRE(std::abs(traj.omega(r, 0)) <= 1e-9);
    }
}

TEST_CASE("step halving agreement") {
    const GridModel smib = pikan::smib_model();
    const std::vector<double> pm = {0.1, 0.0};
    const std::vector<double> x0 = {0.1, 0.1};
    const auto full = pikan::integrate(smib, x0, pm, 20.0, 0.1, 1e-3);
    const auto half = pikan::integrate(smib, x0, pm, 20.0, 0.1, 5e-4);
    double scale = 0.0, diff = 0.0;
    for (int r = 0; r < full.n_samples(); ++r) {
        scale = std::max({scale, std::abs(full.theta(r, 0)), std::abs(full.omega(r, 0))});
        diff = std::max({diff, std::abs(full.theta(r, 0) - half.theta(r, 0)),
                         std::abs(full.omega(r, 0) - half.omega(r, 0))});
    }
    REQUIRE(diff <= 1e-6 * scale);
}

TEST_CASE("undamped SMIB conserves energy to 1e-7 relative") {
    GridModel smib = pikan::smib_model();
    smib.D = {0.0, 0.0};
    const std::vector<double> pm = {0.1, 0.0};
    const std::vector<double> x0 = {0.1, 0.1};
    const auto traj = pikan::integrate(smib, x0, pm, 20.0, 0.1, 1e-3);
    const double e0 = oracle::smib_energy(0.4, 0.1, 0.2, traj.theta(0, 0), traj.omega(0, 0));
    double drift = 0.0;
    for (int r = 1; r < traj.n_samples(); ++r) {
        const double e = oracle::smib_energy(0.4, 0.1, 0.2, traj.theta(r, 0), traj.omega(r, 0));
        drift = std::max(drift, std::abs(e - e0));
    }
    REQUIRE(drift <= 1e-7 * std::abs(e0));
}

TEST_CASE("step-halving error ratio shows fourth-order convergence") {
    // The default SMIB is so gentle that truncation at these steps hides under
    // accumulated roundoff (~1e-12); a stiffer undamped swing keeps the
    // trajectory smooth while making the dt^4 term measurable.
    GridModel smib = pikan::smib_model(5.0);
    smib.D = {0.0, 0.0};
    const std::vector<double> pm = {0.1, 0.0};
    const std::vector<double> x0 = {0.9, 0.0};
    const auto ref = pikan::integrate(smib, x0, pm, 20.0, 0.1, 1.25e-4);
    const auto coarse = pikan::integrate(smib, x0, pm, 20.0, 0.1, 2e-3);
    const auto fine = pikan::integrate(smib, x0, pm, 20.0, 0.1, 1e-3);
    double e_coarse = 0.0, e_fine = 0.0;
    for (int r = 0; r < ref.n_samples(); ++r) {
        e_coarse = std::max(e_coarse, std::abs(coarse.theta(r, 0) - ref.theta(r, 0)));
        e_fine = std::max(e_fine, std::abs(fine.theta(r, 0) - ref.theta(r, 0)));
    }
    const double ratio = e_coarse / e_fine;
    REQUIRE(ratio >= 12.0);
    REQUIRE(ratio <= 20.0);
}

TEST_CASE("omega columns consistent with centered differences of theta") {
    const GridModel smib = pikan::smib_model();
    const auto traj = pikan::integrate(smib, std::vector<double>{0.1, 0.1},
                                       std::vector<double>{0.12, 0.0}, 20.0);
    const double dt = 0.1;
    double worst = 0.0;
    for (int r = 1; r + 1 < traj.n_samples(); ++r) {
        const double fd = (traj.theta(r + 1, 0) - traj.theta(r - 1, 0)) / (2 * dt);
        worst = std::max(worst, std::abs(fd - traj.omega(r, 0)));
    }
    REQUIRE(worst <= 1e-3);  // O(dt^2) with |theta'''| well below 0.6 here
}

TEST_CASE("SMIB dataset: counts, initial rows, determinism") {
    const GridModel smib = pikan::smib_model();
    const Dataset ds = pikan::gen_smib_dataset(smib, 100, 7);
    REQUIRE(ds.trajectories.size() == 100);
    REQUIRE(ds.n_test() == 20100);
    for (const auto& traj : ds.trajectories) {
        REQUIRE(traj.theta(0, 0) == 0.1);
        REQUIRE(traj.omega(0, 0) == 0.1);
        REQUIRE(traj.pm[0] >= 0.08);
        REQUIRE(traj.pm[0] <= 0.18);
        REQUIRE_FALSE(traj.blew_up);
    }
    // Grid sweep covers the whole range.
    REQUIRE(ds.trajectories.front().pm[0] == Catch::Approx(0.08));
    REQUIRE(ds.trajectories.back().pm[0] == Catch::Approx(0.18));

    const Dataset again = pikan::gen_smib_dataset(smib, 100, 7);
    REQUIRE(pikan::dataset_hash(ds) == pikan::dataset_hash(again));

    const Dataset random_a = pikan::gen_smib_dataset(smib, 10, 3, true);
    const Dataset random_b = pikan::gen_smib_dataset(smib, 10, 4, true);
    REQUIRE(pikan::dataset_hash(random_a) != pikan::dataset_hash(random_b));
}

TEST_CASE("4-bus dataset: counts and balanced injections") {
    const GridModel four = pikan::fourbus_model();
    const Dataset ds = pikan::gen_4bus_dataset(four);
    REQUIRE(ds.trajectories.size() == 19);
    REQUIRE(ds.n_test() == 969);
    for (const auto& traj : ds.trajectories) {
        double sum = 0.0;
        for (double p : traj.pm) sum += p;
        REQUIRE(std::abs(sum) <= 1e-12);
        REQUIRE_FALSE(traj.blew_up);
        for (int b = 0; b < 4; ++b) REQUIRE(traj.theta(0, b) == 0.0);
    }
    // a = 0.5 ... 9.5 in steps of 0.5 on the published pattern.
    REQUIRE(ds.trajectories.front().pm[1] == Catch::Approx(0.1));
    REQUIRE(ds.trajectories.back().pm[1] == Catch::Approx(1.9));
}

TEST_CASE("zero injection from equilibrium keeps the 4-bus flat") {
    const GridModel four = pikan::fourbus_model();
    std::vector<double> x0(static_cast<size_t>(four.state_size()), 0.0);
    const auto traj = pikan::integrate(four, x0, std::vector<double>(4, 0.0), 5.0);
    for (int r = 0; r < traj.n_samples(); ++r)
        for (int b = 0; b < 4; ++b) REQUIRE(traj.theta(r, b) == 0.0);
}

TEST_CASE("blow-up detection truncates and flags") {
    // Negative damping pumps energy in; angles pass 1e3 rad well inside 50 s.
    GridModel smib = pikan::smib_model();
    smib.D = {0.15, 0.0};
    const auto traj = pikan::integrate(smib, std::vector<double>{3.0, 8.0},
                                       std::vector<double>{0.9, 0.0}, 2000.0);
    REQUIRE(traj.blew_up);
    REQUIRE(traj.n_samples() < 20001);
    REQUIRE(traj.theta.rows == traj.n_samples());
}

TEST_CASE("dataset CSV round trip") {
    const GridModel smib = pikan::smib_model();
    Dataset ds = pikan::gen_smib_dataset(smib, 3, 11);
    const std::string csv = pikan::dataset_to_csv(ds);
    const Dataset back = pikan::dataset_from_csv(csv);
    REQUIRE(back.trajectories.size() == 3);
    for (size_t k = 0; k < 3; ++k) {
        REQUIRE(back.trajectories[k].times == ds.trajectories[k].times);
        REQUIRE(back.trajectories[k].theta == ds.trajectories[k].theta);
        REQUIRE(back.trajectories[k].omega == ds.trajectories[k].omega);
        REQUIRE(back.trajectories[k].pm == ds.trajectories[k].pm);
    }

    // Empty dataset -> header only.
    Dataset empty;
    const std::string empty_csv = pikan::dataset_to_csv(empty);
    REQUIRE(empty_csv.find('\n') == empty_csv.size() - 1);

    // Row arithmetic: header + 100 x 201.
    const Dataset full = pikan::gen_smib_dataset(smib, 100, 7);
    const std::string full_csv = pikan::dataset_to_csv(full);
    size_t lines = 0;
    for (char c : full_csv) lines += c == '\n';
    REQUIRE(lines == 20101);

    REQUIRE_THROWS_WITH(pikan::dataset_from_csv("traj_id,t,theta_1,omega_1,pm_1\n0,0.0,bad,0,0\n"),
                        Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("integrate validates its grid") {
    const GridModel smib = pikan::smib_model();
    const std::vector<double> x0 = {0.1, 0.1};
    REQUIRE_THROWS_AS(pikan::integrate(smib, x0, smib.pm, 20.0, 0.1, 3e-4), std::invalid_argument);
    REQUIRE_THROWS_AS(pikan::integrate(smib, std::vector<double>{0.1}, smib.pm, 20.0),
                      std::invalid_argument);
}
