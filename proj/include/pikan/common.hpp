#pragma once

// Shared small types: seed derivation, dense matrix, parameter vectors and
// the differentiable-objective contract used by the optimizers.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pikan/jet.hpp"

namespace pikan {

// splitmix64, used to derive independent seed streams from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream `stream` of master seed `master` (documented derivation used by the
// dataset generator and the per-repetition identification seeds).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    splitmix64(s);
    return splitmix64(s);
}

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    std::span<double> row(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
    std::span<const double> row(int r) const {
        return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
    }

    bool operator==(const Matrix&) const = default;
};

// Flat vector of every trainable scalar; module-specific layouts document the
// index maps (see KanNetwork/MlpNetwork flatten ordering).
using ParamVector = std::vector<double>;

// Anything the optimizers can minimize: loss value plus analytic gradient.
template <class F>
concept DifferentiableLoss = requires(F f, std::span<const double> p, std::span<double> g) {
    { f.value(p) } -> std::convertible_to<double>;
    { f.value_and_grad(p, g) } -> std::convertible_to<double>;
};

// Gradient of a scalar loss with respect to every entry of p.
template <DifferentiableLoss F>
std::vector<double> loss_gradient(F& f, std::span<const double> p) {
    std::vector<double> grad(p.size(), 0.0);
    const double value = f.value_and_grad(p, grad);
    if (!std::isfinite(value)) throw std::runtime_error("loss_gradient: non-finite loss value");
    return grad;
}

inline void check_finite(std::span<const double> xs, const char* what) {
    for (double x : xs)
        if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite value");
}

// Per-coordinate affine map x -> scale * x + offset. Networks use one to pull
// raw inputs (t, P_m...) into the spline domain and one to scale outputs.
struct AffineMap {
    std::vector<double> scale;
    std::vector<double> offset;

    static AffineMap identity(int n) {
        AffineMap m;
        m.scale.assign(static_cast<size_t>(n), 1.0);
        m.offset.assign(static_cast<size_t>(n), 0.0);
        return m;
    }

    // Maps [lo_i, hi_i] onto [-1, 1] per coordinate; a degenerate range maps
    // onto the constant 0 so a pinned input cannot blow up the scale.
    static AffineMap to_unit(std::span<const double> lo, std::span<const double> hi) {
        if (lo.size() != hi.size()) throw std::invalid_argument("AffineMap: bound size mismatch");
        AffineMap m;
        m.scale.resize(lo.size());
        m.offset.resize(lo.size());
        for (size_t i = 0; i < lo.size(); ++i) {
            const double width = hi[i] - lo[i];
            if (width > 1e-12) {
                m.scale[i] = 2.0 / width;
                m.offset[i] = -(hi[i] + lo[i]) / width;
            } else {
                m.scale[i] = 0.0;
                m.offset[i] = 0.0;
            }
        }
        return m;
    }

    int size() const { return static_cast<int>(scale.size()); }

    double apply(int i, double x) const { return scale[static_cast<size_t>(i)] * x + offset[static_cast<size_t>(i)]; }
    Jet2 apply(int i, const Jet2& x) const {
        const double s = scale[static_cast<size_t>(i)];
        return {s * x.v + offset[static_cast<size_t>(i)], s * x.d1, s * x.d2};
    }

    bool operator==(const AffineMap&) const = default;
};

}  // namespace pikan
