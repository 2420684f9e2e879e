#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pikan/kan.hpp"

using pikan::AffineMap;
using pikan::Jet2;
using pikan::KanCache;
using pikan::KanNetwork;
using pikan::SplineSpec;

namespace {

KanNetwork smib_shape_net(std::uint64_t seed) {
    return KanNetwork::init({2, 5, 1}, SplineSpec(3, 10, -1.0, 1.0), seed);
}

// Scalar functional of the jet outputs; used to exercise backward() against
// finite differences of the jet forward.
struct JetFunctional {
    std::vector<double> av, a1, a2;  // weights on v, d1, d2 per output

    double eval(std::span<const Jet2> out) const {
        double acc = 0.0;
        for (size_t j = 0; j < out.size(); ++j)
            acc += av[j] * out[j].v + a1[j] * out[j].d1 + a2[j] * out[j].d2;
        return acc;
    }
    std::vector<Jet2> seeds() const {
        std::vector<Jet2> s(av.size());
        for (size_t j = 0; j < av.size(); ++j) s[j] = {av[j], a1[j], a2[j]};
        return s;
    }
};

}  // namespace

TEST_CASE("parameter counts match the published configurations") {
    const KanNetwork smib = smib_shape_net(0);
    REQUIRE(smib.num_edges() == 15);
    REQUIRE(smib.param_count() == 195);
    REQUIRE(smib.trainable_count() == 210);

    const KanNetwork fourbus = KanNetwork::init({5, 10, 4}, SplineSpec(3, 5, -1.0, 1.0), 0);
    REQUIRE(fourbus.num_edges() == 90);
    REQUIRE(fourbus.param_count() == 720);

    // Smallest scaling-sweep shape: 9 edges x 13 basis functions.
    const KanNetwork small = KanNetwork::init({2, 3, 1}, SplineSpec(3, 10, -1.0, 1.0), 0);
    REQUIRE(small.param_count() == 117);
}

TEST_CASE("init determinism and distribution bounds") {
    const KanNetwork a = smib_shape_net(1234);
    const KanNetwork b = smib_shape_net(1234);
    REQUIRE(a.flatten() == b.flatten());
    const KanNetwork c = smib_shape_net(1235);
    REQUIRE(a.flatten() != c.flatten());

    // Xavier bound per layer.
    for (size_t l = 0; l < a.layers().size(); ++l) {
        const auto& layer = a.layers()[l];
        const double bound = std::sqrt(6.0 / (layer.n_in + layer.n_out));
        for (double w : layer.w) REQUIRE(std::abs(w) <= bound);
    }
}

TEST_CASE("construction errors") {
    REQUIRE_THROWS_AS(KanNetwork({5}, SplineSpec(3, 10, -1.0, 1.0)), std::invalid_argument);
    REQUIRE_THROWS_AS(KanNetwork({2, 0, 1}, SplineSpec(3, 10, -1.0, 1.0)), std::invalid_argument);
}

TEST_CASE("phi_eval examples") {
    SplineSpec spec(3, 10, -1.0, 1.0);
    std::vector<double> zero(static_cast<size_t>(spec.num_basis()), 0.0);
    std::vector<double> half(static_cast<size_t>(spec.num_basis()), 0.5);

    REQUIRE(pikan::phi_eval(spec, 0.0, half, 0.37) == 0.0);
    REQUIRE(pikan::phi_eval(spec, 1.0, zero, 1.0) == Catch::Approx(0.731059).margin(1e-6));
    for (double x : {-0.8, -0.1, 0.4, 0.99})
        REQUIRE(pikan::phi_eval(spec, 2.0, half, x) ==
                Catch::Approx(2.0 * (pikan::silu(x) + 0.5)).margin(1e-12));
}

TEST_CASE("forward: zero last layer returns the output offset with zero jets") {
    KanNetwork net = smib_shape_net(3);
    auto p = net.flatten();
    // Zero every last-layer edge (w and coefficients).
    const int nb = net.spec().num_basis();
    const size_t layer0 = static_cast<size_t>(2 * 5) * (nb + 1);
    for (size_t i = layer0; i < p.size(); ++i) p[i] = 0.0;
    net.unflatten(p);
    net.output_affine.offset = {0.25};

    const std::vector<double> out = net.forward(std::vector<double>{0.3, 0.1});
    REQUIRE(out[0] == 0.25);

    std::vector<Jet2> jin = {pikan::lift_input(0.3), pikan::lift_const(0.1)};
    const auto jout = net.forward(std::span<const Jet2>(jin));
    REQUIRE(jout[0].v == 0.25);
    REQUIRE(jout[0].d1 == 0.0);
    REQUIRE(jout[0].d2 == 0.0);
}

TEST_CASE("single-edge network equals hand-composed phi") {
    SplineSpec spec(3, 8, -1.0, 1.0);
    KanNetwork net = KanNetwork::init({1, 1}, spec, 77);
    const auto edge = net.edge(0, 0, 0);
    for (double x : {-0.9, -0.2, 0.55, 1.3}) {
        const double want = pikan::phi_eval(spec, edge.w, edge.coeffs, x);
        const auto got = net.forward(std::vector<double>{x});
        REQUIRE(got[0] == Catch::Approx(want).margin(1e-14));
    }
}

TEST_CASE("jet forward matches finite differences in t") {
    KanNetwork net = KanNetwork::init({2, 3, 1}, SplineSpec(3, 10, -1.0, 1.0), 11);
    net.input_affine = AffineMap::to_unit(std::vector<double>{0.0, 0.08}, std::vector<double>{20.0, 0.18});
    const double pm = 0.1;
    auto f = [&](double t) { return net.forward(std::vector<double>{t, pm})[0]; };

    for (double t0 : {0.5, 3.0, 11.7, 19.2}) {
        std::vector<Jet2> jin = {pikan::lift_input(t0), pikan::lift_const(pm)};
        const auto jout = net.forward(std::span<const Jet2>(jin));
        REQUIRE(jout[0].v == Catch::Approx(f(t0)).margin(1e-12));
        REQUIRE(oracle::rel_err(jout[0].d1, oracle::fd1(f, t0, 1e-5), 1e-7) <= 1e-5);
        REQUIRE(oracle::rel_err(jout[0].d2, oracle::fd2(f, t0, 1e-4), 1e-6) <= 1e-4);
    }
}

TEST_CASE("zero tangent seed reduces jets to plain forward") {
    KanNetwork net = smib_shape_net(5);
    std::vector<Jet2> jin = {pikan::lift_const(0.4), pikan::lift_const(0.12)};
    const auto jout = net.forward(std::span<const Jet2>(jin));
    const auto out = net.forward(std::vector<double>{0.4, 0.12});
    REQUIRE(jout[0].v == Catch::Approx(out[0]).margin(1e-14));
    REQUIRE(jout[0].d1 == 0.0);
    REQUIRE(jout[0].d2 == 0.0);
}

TEST_CASE("flatten / unflatten round trip") {
    KanNetwork net = smib_shape_net(21);
    REQUIRE(static_cast<int>(net.flatten().size()) == 210);

    KanNetwork copy = smib_shape_net(0);
    copy.unflatten(net.flatten());
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 100; ++n) {
        const std::vector<double> in = {u(rng), u(rng)};
        REQUIRE(net.forward(in) == copy.forward(in));
    }

    // Zero vector -> affine offset everywhere.
    KanNetwork zeroed = smib_shape_net(4);
    zeroed.output_affine.offset = {0.125};
    zeroed.unflatten(std::vector<double>(210, 0.0));
    for (int n = 0; n < 10; ++n)
        REQUIRE(zeroed.forward(std::vector<double>{u(rng), u(rng)})[0] == 0.125);

    REQUIRE_THROWS_AS(zeroed.unflatten(std::vector<double>(200, 0.0)), std::invalid_argument);
}

TEST_CASE("backward gradient matches finite differences") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    for (int config = 0; config < 6; ++config) {
        const std::vector<std::vector<int>> shapes = {{2, 5, 1}, {2, 3, 1}, {3, 4, 2}, {1, 1},
                                                      {2, 3, 3, 1}, {5, 10, 4}};
        const std::vector<std::pair<int, int>> specs = {{3, 10}, {3, 5}, {2, 7}, {1, 4}, {3, 10}, {3, 5}};
        KanNetwork net = KanNetwork::init(shapes[static_cast<size_t>(config)],
                                          SplineSpec(specs[static_cast<size_t>(config)].first,
                                                     specs[static_cast<size_t>(config)].second, -1.0, 1.0),
                                          static_cast<std::uint64_t>(config) + 7);
        const int n_in = net.n_inputs();
        const int n_out = net.n_outputs();
        net.input_affine = AffineMap::identity(n_in);
        net.output_affine.scale.assign(static_cast<size_t>(n_out), 1.3);
        net.output_affine.offset.assign(static_cast<size_t>(n_out), -0.2);

        std::vector<Jet2> jin(static_cast<size_t>(n_in));
        jin[0] = pikan::lift_input(u(rng));
        for (int i = 1; i < n_in; ++i) jin[static_cast<size_t>(i)] = pikan::lift_const(u(rng));

        JetFunctional fn;
        for (int j = 0; j < n_out; ++j) {
            fn.av.push_back(u(rng));
            fn.a1.push_back(u(rng));
            fn.a2.push_back(u(rng));
        }

        // Analytic gradient.
        KanCache cache;
        std::vector<Jet2> jout(static_cast<size_t>(n_out));
        net.forward_jets(jin, cache, jout);
        std::vector<double> grad(static_cast<size_t>(net.trainable_count()), 0.0);
        const auto seeds = fn.seeds();
        net.backward(cache, seeds, grad);

        // Finite differences through flatten/unflatten.
        KanNetwork work = net;
        auto loss = [&](std::span<const double> p) {
            work.unflatten(p);
            KanCache c2;
            std::vector<Jet2> o2(static_cast<size_t>(n_out));
            work.forward_jets(jin, c2, o2);
            return fn.eval(o2);
        };
        const auto p0 = net.flatten();
        const auto fd = oracle::fd_gradient(loss, p0, 1e-6);
        for (size_t i = 0; i < fd.size(); ++i) {
            const double denom = std::max({std::abs(grad[i]), std::abs(fd[i]), 1e-6});
            REQUIRE(std::abs(grad[i] - fd[i]) / denom <= 1e-4);
        }
    }
}

TEST_CASE("train_w = false freezes scale factors in the gradient") {
    KanNetwork net = smib_shape_net(31);
    net.train_w = false;
    std::vector<Jet2> jin = {pikan::lift_input(0.2), pikan::lift_const(-0.4)};
    KanCache cache;
    std::vector<Jet2> jout(1);
    net.forward_jets(jin, cache, jout);
    std::vector<double> grad(static_cast<size_t>(net.trainable_count()), 0.0);
    std::vector<Jet2> seeds = {Jet2{1.0, 0.5, 0.25}};
    net.backward(cache, seeds, grad);
    const int stride = net.spec().num_basis() + 1;
    double coeff_mag = 0.0;
    for (size_t e = 0; e < static_cast<size_t>(net.num_edges()); ++e) {
        REQUIRE(grad[e * static_cast<size_t>(stride)] == 0.0);
        for (int s = 1; s < stride; ++s) coeff_mag += std::abs(grad[e * static_cast<size_t>(stride) + static_cast<size_t>(s)]);
    }
    REQUIRE(coeff_mag > 0.0);
}

TEST_CASE("input size validation") {
    KanNetwork net = smib_shape_net(1);
    REQUIRE_THROWS_AS(net.forward(std::vector<double>{1.0}), std::invalid_argument);
}
