#pragma once

// Optimizers for the physics-informed training loop: L-BFGS (two-loop
// recursion, m = 10 curvature pairs, strong-Wolfe line search capped at 20
// function/gradient evaluations per step) and standard bias-corrected Adam.
// Both operate on the flat parameter vector through the DifferentiableLoss
// contract and keep the caller's (value, gradient) pair current, so one step
// costs exactly the line-search evaluations (one for Adam).

#include <cmath>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "pikan/common.hpp"

namespace pikan {

struct LbfgsOptions {
    int history = 10;
    // One optimizer step runs inner L-BFGS iterations until this many
    // function/gradient evaluations are spent (the convention PyTorch's LBFGS
    // uses with max_iter: a training "step" wraps up to 20 inner iterations).
    int max_evals_per_step = 20;
    double c1 = 1e-4;  // sufficient decrease
    double c2 = 0.9;   // curvature
};

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct StepInfo {
    double step_length = 0.0;
    int evals = 0;
    bool used_fallback = false;  // strong Wolfe failed; Armijo steepest descent
    bool moved = true;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace detail

template <DifferentiableLoss F>
class Lbfgs {
public:
    Lbfgs(LbfgsOptions opt, size_t dim) : opt_(opt), dim_(dim) {}

    void reset() { pairs_.clear(); }

    // One optimizer step: inner L-BFGS iterations (direction + strong-Wolfe
    // line search) until the step's evaluation budget is spent. x, f, g are
    // updated to the last accepted point.
    StepInfo step(F& loss, std::vector<double>& x, double& f, std::vector<double>& g) {
        StepInfo info;
        while (info.evals < opt_.max_evals_per_step) {
            StepInfo inner = iterate(loss, x, f, g, opt_.max_evals_per_step - info.evals);
            info.evals += inner.evals;
            info.step_length = inner.step_length;
            info.used_fallback |= inner.used_fallback;
            if (!inner.moved) {
                info.moved = info.step_length > 0.0;
                break;
            }
        }
        return info;
    }

    // A single L-BFGS iteration with at most eval_budget evaluations.
    StepInfo iterate(F& loss, std::vector<double>& x, double& f, std::vector<double>& g,
                     int eval_budget) {
        StepInfo info;
        std::vector<double> dir = direction(g);

        double dg = detail::dot(dir, g);
        if (!(dg < 0.0)) {  // not a descent direction: drop history, steepest descent
            reset();
            for (size_t i = 0; i < dim_; ++i) dir[i] = -g[i];
            dg = detail::dot(dir, g);
            if (!(dg < 0.0)) {  // zero gradient: nothing to do
                info.moved = false;
                return info;
            }
        }

        const double f0 = f;
        const double g0 = dg;
        std::vector<double> x0 = x;
        std::vector<double> xt(dim_), gt(dim_);

        auto eval = [&](double alpha, double& fa, double& ga) {
            for (size_t i = 0; i < dim_; ++i) xt[i] = x0[i] + alpha * dir[i];
            fa = loss.value_and_grad(xt, gt);
            ga = detail::dot(gt, dir);
            ++info.evals;
        };

        auto accept = [&](double alpha, double fa) {
            update_history(x0, g, xt, gt);
            x = xt;
            f = fa;
            g = gt;
            info.step_length = alpha;
        };

        // Strong Wolfe: bracketing phase then zoom (bisection with a
        // quadratic-interpolation first guess).
        const double c1 = opt_.c1, c2 = opt_.c2;
        double alpha_prev = 0.0, f_prev = f0, g_prev = g0;
        double alpha = 1.0;
        double lo = -1.0, hi = -1.0, f_lo = 0.0, g_lo = 0.0;
        bool bracketed = false;

        while (info.evals < eval_budget) {
            double fa, ga;
            eval(alpha, fa, ga);
            if (!std::isfinite(fa)) {  // overshot into garbage: shrink hard
                alpha *= 0.25;
                continue;
            }
            if (fa > f0 + c1 * alpha * g0 || (info.evals > 1 && fa >= f_prev)) {
                lo = alpha_prev; f_lo = f_prev; g_lo = g_prev;
                hi = alpha;
                bracketed = true;
                break;
            }
            if (std::abs(ga) <= -c2 * g0) {
                accept(alpha, fa);
                return info;
            }
            if (ga >= 0.0) {
                lo = alpha; f_lo = fa; g_lo = ga;
                hi = alpha_prev;
                bracketed = true;
                break;
            }
            alpha_prev = alpha; f_prev = fa; g_prev = ga;
            alpha *= 2.0;
        }

        while (bracketed && info.evals < eval_budget) {
            const double trial = lo + 0.5 * (hi - lo);  // bisection zoom
            double fa, ga;
            eval(trial, fa, ga);
            if (!std::isfinite(fa) || fa > f0 + c1 * trial * g0 || fa >= f_lo) {
                hi = trial;
            } else {
                if (std::abs(ga) <= -c2 * g0) {
                    accept(trial, fa);
                    return info;
                }
                if (ga * (hi - lo) >= 0.0) hi = lo;
                lo = trial; f_lo = fa; g_lo = ga;
            }
            if (std::abs(hi - lo) < 1e-16) break;
        }

        // Wolfe budget exhausted: Armijo backoff along -g, history dropped.
        info.used_fallback = true;
        reset();
        for (size_t i = 0; i < dim_; ++i) dir[i] = -g[i];
        const double gd = detail::dot(dir, g);
        double step = 1.0 / std::max(1.0, detail::norm_inf(g));
        for (int k = 0; k < 40 && info.evals < eval_budget + 8; ++k) {
            double fa, ga;
            eval(step, fa, ga);
            if (std::isfinite(fa) && fa <= f0 + opt_.c1 * step * gd) {
                x = xt;
                f = fa;
                g = gt;
                info.step_length = step;
                return info;
            }
            step *= 0.5;
        }
        info.moved = false;  // stuck; caller decides what to do
        return info;
    }

private:
    std::vector<double> direction(const std::vector<double>& g) {
        std::vector<double> q(g.begin(), g.end());
        std::vector<double> alpha(pairs_.size());
        for (size_t k = pairs_.size(); k-- > 0;) {
            const auto& pr = pairs_[k];
            alpha[k] = pr.rho * detail::dot(pr.s, q);
            for (size_t i = 0; i < dim_; ++i) q[i] -= alpha[k] * pr.y[i];
        }
        if (!pairs_.empty()) {
            const auto& last = pairs_.back();
            const double gamma = detail::dot(last.s, last.y) / detail::dot(last.y, last.y);
            for (double& v : q) v *= gamma;
        }
        for (size_t k = 0; k < pairs_.size(); ++k) {
            const auto& pr = pairs_[k];
            const double beta = pr.rho * detail::dot(pr.y, q);
            for (size_t i = 0; i < dim_; ++i) q[i] += (alpha[k] - beta) * pr.s[i];
        }
        for (double& v : q) v = -v;
        return q;
    }

    void update_history(const std::vector<double>& x0, const std::vector<double>& g0,
                        const std::vector<double>& x1, const std::vector<double>& g1) {
        Pair pr;
        pr.s.resize(dim_);
        pr.y.resize(dim_);
        double sy = 0.0, ss = 0.0, yy = 0.0;
        for (size_t i = 0; i < dim_; ++i) {
            pr.s[i] = x1[i] - x0[i];
            pr.y[i] = g1[i] - g0[i];
            sy += pr.s[i] * pr.y[i];
            ss += pr.s[i] * pr.s[i];
            yy += pr.y[i] * pr.y[i];
        }
        if (sy > 1e-12 * std::sqrt(ss * yy) && sy > 0.0) {
            pr.rho = 1.0 / sy;
            pairs_.push_back(std::move(pr));
            if (static_cast<int>(pairs_.size()) > opt_.history) pairs_.pop_front();
        }
    }

    struct Pair {
        std::vector<double> s, y;
        double rho = 0.0;
    };

    LbfgsOptions opt_;
    size_t dim_;
    std::deque<Pair> pairs_;
};

template <DifferentiableLoss F>
class Adam {
public:
    Adam(AdamOptions opt, size_t dim)
        : opt_(opt), m_(dim, 0.0), v_(dim, 0.0) {}

    // Applies one update using the gradient at x, then refreshes (f, g) at the
    // new point: exactly one evaluation per step.
    StepInfo step(F& loss, std::vector<double>& x, double& f, std::vector<double>& g) {
        ++t_;
        const double b1t = 1.0 - std::pow(opt_.beta1, t_);
        const double b2t = 1.0 - std::pow(opt_.beta2, t_);
        for (size_t i = 0; i < x.size(); ++i) {
            m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g[i];
            v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g[i] * g[i];
            const double mhat = m_[i] / b1t;
            const double vhat = v_[i] / b2t;
            x[i] -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
        }
        f = loss.value_and_grad(x, g);
        StepInfo info;
        info.evals = 1;
        info.step_length = opt_.lr;
        return info;
    }

private:
    AdamOptions opt_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

}  // namespace pikan
