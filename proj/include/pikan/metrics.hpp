#pragma once

// Evaluation metrics: test-set MSE, relative trajectory error, parameter
// estimation errors, and the max/min/median summaries the result tables use.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "pikan/common.hpp"

namespace pikan {

// Mean over samples of the squared vector error |pred_row - truth_row|^2.
inline double mse_test(const Matrix& pred, const Matrix& truth) {
    if (pred.rows != truth.rows || pred.cols != truth.cols)
        throw std::invalid_argument("mse_test: shape mismatch");
    if (pred.rows == 0) throw std::invalid_argument("mse_test: empty input");
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - truth.data[i];
        acc += d * d;
    }
    return acc / pred.rows;
}

// ||truth - pred||_2 / ||truth||_2 over all buses and times of one trajectory.
inline double rel_traj_error(const Matrix& pred, const Matrix& truth) {
    if (pred.rows != truth.rows || pred.cols != truth.cols)
        throw std::invalid_argument("rel_traj_error: shape mismatch");
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = truth.data[i] - pred.data[i];
        num += d * d;
        den += truth.data[i] * truth.data[i];
    }
    if (den <= 0.0) throw std::invalid_argument("rel_traj_error: zero-norm truth trajectory");
    return std::sqrt(num) / std::sqrt(den);
}

// Relative estimation error |true - est| / true, elementwise.
inline std::vector<double> param_errors(std::span<const double> truth, std::span<const double> est) {
    if (truth.size() != est.size()) throw std::invalid_argument("param_errors: size mismatch");
    std::vector<double> out(truth.size());
    for (size_t i = 0; i < truth.size(); ++i) {
        if (!(truth[i] > 0.0)) throw std::invalid_argument("param_errors: true value must be > 0");
        out[i] = std::abs(truth[i] - est[i]) / truth[i];
    }
    return out;
}

// Even counts take the lower middle element (documented tie rule).
inline double median_lower(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

struct ErrorSummary {
    double max = 0.0;
    double min = 0.0;
    double median = 0.0;
};

inline ErrorSummary summarize(std::span<const double> errors) {
    if (errors.empty()) throw std::invalid_argument("summarize: empty input");
    ErrorSummary s;
    s.max = *std::max_element(errors.begin(), errors.end());
    s.min = *std::min_element(errors.begin(), errors.end());
    s.median = median_lower({errors.begin(), errors.end()});
    return s;
}

}  // namespace pikan
