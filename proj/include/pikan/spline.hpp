#pragma once

// Uniform B-spline basis on an extended knot grid. Every KAN edge activation
// owns a coefficient vector against one shared spec.
//
// Knots: t_i = lo + (i - order) * h for i = 0 .. intervals + 2*order,
// h = (hi - lo) / intervals. No repeated knots, so there are
// intervals + order basis functions of degree `order`, and at any x exactly
// order + 1 of them are nonzero. Outside [lo, hi] the boundary polynomial
// pieces are evaluated on the extended knots instead of returning zero, so
// hidden activations that drift out of the grid keep nonzero gradients.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pikan {

class SplineSpec {
public:
    static constexpr int kMaxOrder = 10;
    static constexpr int kMaxDeriv = 3;

    SplineSpec(int order, int intervals, double lo, double hi)
        : order_(order), intervals_(intervals), lo_(lo), hi_(hi) {
        if (order < 1 || order > kMaxOrder)
            throw std::invalid_argument("SplineSpec: order must be in [1, " +
                                        std::to_string(kMaxOrder) + "]");
        if (intervals < 1) throw std::invalid_argument("SplineSpec: intervals must be >= 1");
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("SplineSpec: domain must be a finite interval with lo < hi");
        h_ = (hi - lo) / intervals;
        knots_.resize(static_cast<size_t>(intervals + 2 * order + 1));
        for (int i = 0; i <= intervals + 2 * order; ++i)
            knots_[static_cast<size_t>(i)] = lo + (i - order) * h_;
    }

    int order() const { return order_; }
    int intervals() const { return intervals_; }
    int num_basis() const { return intervals_ + order_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double spacing() const { return h_; }
    const std::vector<double>& knots() const { return knots_; }

    // Index of the first basis function whose window covers x. The window is
    // [window_begin, window_begin + order]; x outside [lo, hi] clamps to the
    // boundary span (polynomial extension).
    int window_begin(double x) const {
        int cell = static_cast<int>(std::floor((x - lo_) / h_));
        cell = std::clamp(cell, 0, intervals_ - 1);
        return cell;
    }

    // Evaluate the order+1 window basis functions and their derivatives at x.
    // values must hold (max_deriv + 1) * (order + 1) doubles; row m holds the
    // m-th derivative of basis functions window_begin(x) .. window_begin(x)+order.
    void eval_window(double x, int max_deriv, double* values) const {
        if (!std::isfinite(x)) throw std::domain_error("SplineSpec: non-finite evaluation point");
        if (max_deriv < 0 || max_deriv > kMaxDeriv)
            throw std::invalid_argument("SplineSpec: derivative order must be in [0, 3]");

        const int k = order_;
        const int j = window_begin(x) + k;  // knot span: t_j <= x < t_(j+1) (clamped)

        // de Boor triangle: tri[d][r] = B_(j-d+r, d)(x), r = 0..d.
        double tri[kMaxOrder + 1][kMaxOrder + 1];
        tri[0][0] = 1.0;
        for (int d = 1; d <= k; ++d) {
            for (int r = d; r >= 0; --r) {
                const int s = j - d + r;
                double acc = 0.0;
                if (r >= 1)
                    acc += (x - knot(s)) / (knot(s + d) - knot(s)) * tri[d - 1][r - 1];
                if (r <= d - 1)
                    acc += (knot(s + d + 1) - x) / (knot(s + d + 1) - knot(s + 1)) * tri[d - 1][r];
                tri[d][r] = acc;
            }
        }

        const int w = k + 1;
        for (int p = 0; p < w; ++p) values[p] = tri[k][p];

        // Uniform knots: B^(m)_(s,k) = h^-m * sum_i (-1)^i C(m,i) B_(s+i, k-m).
        static constexpr double kBinom[4][4] = {
            {1, 0, 0, 0}, {1, -1, 0, 0}, {1, -2, 1, 0}, {1, -3, 3, -1}};
        for (int m = 1; m <= max_deriv; ++m) {
            double* row = values + m * w;
            if (m > k) {
                std::fill(row, row + w, 0.0);
                continue;
            }
            const double hm = std::pow(1.0 / h_, m);
            const int dlow = k - m;
            for (int p = 0; p < w; ++p) {
                const int s = j - k + p;
                double acc = 0.0;
                for (int i = 0; i <= m; ++i) {
                    const int r = s + i - (j - dlow);
                    if (r >= 0 && r <= dlow) acc += kBinom[m][i] * tri[dlow][r];
                }
                row[p] = hm * acc;
            }
        }
    }

    // Dense vector of all num_basis() basis values (or m-th derivatives) at x.
    std::vector<double> basis_all(double x, int deriv_order) const {
        std::vector<double> out(static_cast<size_t>(num_basis()), 0.0);
        double window[(kMaxDeriv + 1) * (kMaxOrder + 1)];
        eval_window(x, deriv_order, window);
        const int first = window_begin(x);
        const double* row = window + deriv_order * (order_ + 1);
        for (int p = 0; p <= order_; ++p) out[static_cast<size_t>(first + p)] = row[p];
        return out;
    }

    // spline(x) = sum_s coeffs[s] * B_s(x), or its deriv_order-th derivative.
    double eval(std::span<const double> coeffs, double x, int deriv_order) const {
        if (static_cast<int>(coeffs.size()) != num_basis())
            throw std::invalid_argument("SplineSpec::eval: coefficient count " +
                                        std::to_string(coeffs.size()) + " != " +
                                        std::to_string(num_basis()));
        double window[(kMaxDeriv + 1) * (kMaxOrder + 1)];
        eval_window(x, deriv_order, window);
        const int first = window_begin(x);
        const double* row = window + deriv_order * (order_ + 1);
        double acc = 0.0;
        for (int p = 0; p <= order_; ++p) acc += coeffs[static_cast<size_t>(first + p)] * row[p];
        return acc;
    }

    bool operator==(const SplineSpec& other) const {
        return order_ == other.order_ && intervals_ == other.intervals_ &&
               lo_ == other.lo_ && hi_ == other.hi_;
    }

private:
    double knot(int i) const { return knots_[static_cast<size_t>(i)]; }

    int order_;
    int intervals_;
    double lo_, hi_, h_;
    std::vector<double> knots_;
};

inline SplineSpec make_spec(int order, int intervals, double lo, double hi) {
    return SplineSpec(order, intervals, lo, hi);
}

}  // namespace pikan
