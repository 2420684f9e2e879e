#pragma once

// Physics-informed training: point sampling, the loss variants, the analytic
// parameter gradient (reverse sweep over the jet-valued network forward), the
// two optimization problems (known parameters / joint M-D identification),
// and the training loops around L-BFGS and Adam.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pikan/common.hpp"
#include "pikan/grid.hpp"
#include "pikan/metrics.hpp"
#include "pikan/optim.hpp"
#include "pikan/simulate.hpp"

namespace pikan {

enum class LossVariant { I, II, DataOnly };

inline const char* to_string(LossVariant v) {
    switch (v) {
        case LossVariant::I: return "I";
        case LossVariant::II: return "II";
        case LossVariant::DataOnly: return "data_only";
    }
    return "?";
}

// Collocation inputs default to uniform draws over the full t x Pm box; the
// trajectory mode restricts injections to those of training trajectories.
enum class CollocMode { Box, Trajectory };

struct LossConfig {
    LossVariant variant = LossVariant::I;
    int n_u = 40;
    int n_f = 800;
    std::uint64_t seed = 0;
    CollocMode colloc = CollocMode::Box;
};

struct UPoint {
    double t = 0.0;
    std::vector<double> pm;     // all buses
    std::vector<double> theta;  // labels, dynamic buses in bus order
    std::vector<double> omega;
};

struct FPoint {
    double t = 0.0;
    std::vector<double> pm;
};

struct TrainingPoints {
    std::vector<UPoint> u;
    std::vector<FPoint> f;
};

// Labeled points are drawn uniformly without replacement from the training
// trajectories' samples; collocation points are label-free draws over the
// continuous input domain. Both are pinned by cfg.seed.
inline TrainingPoints sample_points(const Dataset& dataset, const GridModel& model,
                                    const LossConfig& cfg) {
    if (dataset.trajectories.empty() || dataset.train_ids.empty())
        throw std::invalid_argument("sample_points: empty dataset");
    if (cfg.n_u < 1) throw std::invalid_argument("sample_points: N_u must be >= 1");
    if (cfg.n_f < 0) throw std::invalid_argument("sample_points: N_f must be >= 0");

    const auto dyn = model.dynamic_buses();
    TrainingPoints pts;

    // Enumerate (trajectory, row) sample slots.
    std::vector<std::pair<int, int>> slots;
    for (int id : dataset.train_ids) {
        const auto& traj = dataset.trajectories[static_cast<size_t>(id)];
        for (int r = 0; r < traj.n_samples(); ++r) slots.emplace_back(id, r);
    }
    if (cfg.n_u > static_cast<int>(slots.size()))
        throw std::invalid_argument("sample_points: N_u = " + std::to_string(cfg.n_u) +
                                    " exceeds the " + std::to_string(slots.size()) +
                                    " available training samples");

    std::mt19937_64 urng(derive_seed(cfg.seed, 1));
    // Partial Fisher-Yates: the first n_u entries become the sample.
    for (int k = 0; k < cfg.n_u; ++k) {
        std::uniform_int_distribution<size_t> pick(static_cast<size_t>(k), slots.size() - 1);
        std::swap(slots[static_cast<size_t>(k)], slots[pick(urng)]);
        const auto [id, row] = slots[static_cast<size_t>(k)];
        const auto& traj = dataset.trajectories[static_cast<size_t>(id)];
        UPoint p;
        p.t = traj.times[static_cast<size_t>(row)];
        p.pm = traj.pm;
        for (int b : dyn) {
            p.theta.push_back(traj.theta(row, b));
            p.omega.push_back(traj.omega(row, b));
        }
        pts.u.push_back(std::move(p));
    }

    std::mt19937_64 frng(derive_seed(cfg.seed, 2));
    std::uniform_real_distribution<double> tdist(0.0, model.horizon);
    const int n_colloc = cfg.variant == LossVariant::DataOnly ? 0 : cfg.n_f;
    for (int k = 0; k < n_colloc; ++k) {
        FPoint p;
        p.t = tdist(frng);
        if (cfg.colloc == CollocMode::Box) {
            p.pm.resize(static_cast<size_t>(model.n_bus()));
            for (int b = 0; b < model.n_bus(); ++b) {
                std::uniform_real_distribution<double> pdist(model.pm_min[static_cast<size_t>(b)],
                                                             model.pm_max[static_cast<size_t>(b)]);
                p.pm[static_cast<size_t>(b)] = pdist(frng);
            }
        } else {
            std::uniform_int_distribution<size_t> pick(0, dataset.train_ids.size() - 1);
            const int id = dataset.train_ids[pick(frng)];
            p.pm = dataset.trajectories[static_cast<size_t>(id)].pm;
        }
        pts.f.push_back(std::move(p));
    }
    return pts;
}

// Network inputs are (t, Pm of dynamic buses): the SMIB net sees (t, Pm_1),
// the 4-bus net (t, Pm_1..Pm_4).
inline int network_input_dim(const GridModel& model) { return 1 + model.n_dynamic(); }

inline AffineMap default_input_affine(const GridModel& model) {
    std::vector<double> lo = {0.0}, hi = {model.horizon};
    for (int b : model.dynamic_buses()) {
        lo.push_back(model.pm_min[static_cast<size_t>(b)]);
        hi.push_back(model.pm_max[static_cast<size_t>(b)]);
    }
    return AffineMap::to_unit(lo, hi);
}

// Thrown when a forward pass goes non-finite during training.
class TrainingDivergence : public std::runtime_error {
public:
    explicit TrainingDivergence(int step)
        : std::runtime_error("training diverged: non-finite loss at step " + std::to_string(step)),
          step_(step) {}
    int step() const { return step_; }

private:
    int step_ = 0;
};

// The physics-informed loss over fixed point sets.
//   variant I:  (1/N_u) sum |theta - label|^2 + (1/N_f) sum |r|^2
//   variant II: adds |theta_dot - omega label|^2 inside the data term
//   DataOnly:   data term only
// In identification mode the parameter vector carries log M (per generator)
// and log D (per dynamic bus) behind the network parameters, and the residual
// uses those instead of the model table.
template <class Net>
class PhysicsLoss {
public:
    PhysicsLoss(const Net& net, const GridModel& model, TrainingPoints points, LossVariant variant,
                bool identify = false)
        : net_(net), model_(model), points_(std::move(points)), variant_(variant), identify_(identify) {
        dyn_ = model_.dynamic_buses();
        if (net_.n_outputs() != static_cast<int>(dyn_.size()))
            throw std::invalid_argument("PhysicsLoss: network outputs must cover the dynamic buses");
        if (net_.n_inputs() != network_input_dim(model_))
            throw std::invalid_argument("PhysicsLoss: network inputs must be (t, Pm_dynamic)");
        n_extra_ = identify_ ? model_.n_generators() + static_cast<int>(dyn_.size()) : 0;
    }

    int dim() const { return net_.trainable_count() + n_extra_; }
    int n_extras() const { return n_extra_; }

    // Unpack exp(log M), exp(log D) from the tail of the parameter vector.
    void extract_md(std::span<const double> p, std::vector<double>& m_out,
                    std::vector<double>& d_out) const {
        if (!identify_) throw std::logic_error("extract_md: not in identification mode");
        const double* extra = p.data() + net_.trainable_count();
        m_out.clear();
        d_out.clear();
        int k = 0;
        for (int g = 0; g < model_.n_generators(); ++g) m_out.push_back(std::exp(extra[k++]));
        for (size_t d = 0; d < dyn_.size(); ++d) d_out.push_back(std::exp(extra[k++]));
    }

    // Public evaluation: a non-finite forward is a training-divergence error.
    double value(std::span<const double> p) {
        const double v = evaluate(p, nullptr);
        if (!std::isfinite(v)) throw TrainingDivergence(-1);
        return v;
    }

    // Optimizer-facing evaluation: line-search probes may legitimately
    // overshoot into non-finite territory, so this returns +inf and lets the
    // optimizer backtrack; the training loop flags divergence if an accepted
    // point is non-finite.
    double value_and_grad(std::span<const double> p, std::span<double> grad) {
        if (static_cast<int>(grad.size()) != dim())
            throw std::invalid_argument("PhysicsLoss: gradient size mismatch");
        std::fill(grad.begin(), grad.end(), 0.0);
        return evaluate(p, &grad);
    }

    double last_mse_u() const { return last_mse_u_; }
    double last_mse_f() const { return last_mse_f_; }

private:
    double evaluate(std::span<const double> p, std::span<double>* grad) {
        if (static_cast<int>(p.size()) != dim())
            throw std::invalid_argument("PhysicsLoss: parameter size mismatch");
        net_.unflatten(p.subspan(0, static_cast<size_t>(net_.trainable_count())));

        // Effective inertia / damping per dynamic slot.
        const int n_dyn = static_cast<int>(dyn_.size());
        std::vector<double> m_eff(static_cast<size_t>(n_dyn)), d_eff(static_cast<size_t>(n_dyn));
        const double* extra = identify_ ? p.data() + net_.trainable_count() : nullptr;
        {
            int k = 0;
            for (int s = 0; s < n_dyn; ++s) {
                const int b = dyn_[static_cast<size_t>(s)];
                m_eff[static_cast<size_t>(s)] =
                    model_.is_generator(b) ? (identify_ ? std::exp(extra[k++]) : model_.M[static_cast<size_t>(b)]) : 0.0;
            }
            for (int s = 0; s < n_dyn; ++s) {
                const int b = dyn_[static_cast<size_t>(s)];
                d_eff[static_cast<size_t>(s)] = identify_ ? std::exp(extra[model_.n_generators() + s])
                                                          : model_.D[static_cast<size_t>(b)];
            }
        }

        const int n_in = net_.n_inputs();
        std::vector<Jet2> jin(static_cast<size_t>(n_in));
        std::vector<Jet2> jout(static_cast<size_t>(n_dyn));
        std::vector<Jet2> seeds(static_cast<size_t>(n_dyn));
        typename Net::Cache cache;

        double mse_u = 0.0, mse_f = 0.0;
        const double wu = points_.u.empty() ? 0.0 : 1.0 / static_cast<double>(points_.u.size());
        const double wf = points_.f.empty() ? 0.0 : 1.0 / static_cast<double>(points_.f.size());

        std::span<double> net_grad;
        if (grad) net_grad = grad->subspan(0, static_cast<size_t>(net_.trainable_count()));

        // Data points.
        for (const auto& pt : points_.u) {
            fill_inputs(pt.t, pt.pm, jin);
            net_.forward_jets(jin, cache, jout);
            double contrib = 0.0;
            for (int s = 0; s < n_dyn; ++s) {
                const double ev = jout[static_cast<size_t>(s)].v - pt.theta[static_cast<size_t>(s)];
                contrib += ev * ev;
                seeds[static_cast<size_t>(s)] = {2.0 * wu * ev, 0.0, 0.0};
                if (variant_ == LossVariant::II) {
                    const double ed = jout[static_cast<size_t>(s)].d1 - pt.omega[static_cast<size_t>(s)];
                    contrib += ed * ed;
                    seeds[static_cast<size_t>(s)].d1 = 2.0 * wu * ed;
                }
            }
            if (!std::isfinite(contrib)) return std::numeric_limits<double>::infinity();
            mse_u += wu * contrib;
            if (grad) net_.backward(cache, seeds, net_grad);
        }

        // Collocation points.
        std::vector<double> theta_full(static_cast<size_t>(model_.n_bus()), 0.0);
        std::vector<double> resid(static_cast<size_t>(n_dyn));
        Matrix pe_jac;
        for (const auto& pt : points_.f) {
            fill_inputs(pt.t, pt.pm, jin);
            net_.forward_jets(jin, cache, jout);
            for (int s = 0; s < n_dyn; ++s) theta_full[static_cast<size_t>(dyn_[static_cast<size_t>(s)])] = jout[static_cast<size_t>(s)].v;

            double contrib = 0.0;
            for (int s = 0; s < n_dyn; ++s) {
                const int b = dyn_[static_cast<size_t>(s)];
                double pe = 0.0;
                for (int j = 0; j < model_.n_bus(); ++j) {
                    const double bij = model_.B(b, j);
                    if (bij != 0.0) pe += bij * std::sin(theta_full[static_cast<size_t>(b)] - theta_full[static_cast<size_t>(j)]);
                }
                const double r = m_eff[static_cast<size_t>(s)] * jout[static_cast<size_t>(s)].d2 +
                                 d_eff[static_cast<size_t>(s)] * jout[static_cast<size_t>(s)].d1 + pe -
                                 pt.pm[static_cast<size_t>(b)];
                resid[static_cast<size_t>(s)] = r;
                contrib += r * r;
            }
            if (!std::isfinite(contrib)) return std::numeric_limits<double>::infinity();
            mse_f += wf * contrib;

            if (grad) {
                power_jacobian(model_, theta_full, pe_jac);
                for (int s = 0; s < n_dyn; ++s) {
                    const int b = dyn_[static_cast<size_t>(s)];
                    const double c_s = 2.0 * wf * resid[static_cast<size_t>(s)];
                    Jet2& sd = seeds[static_cast<size_t>(s)];
                    sd.d1 = c_s * d_eff[static_cast<size_t>(s)];
                    sd.d2 = c_s * m_eff[static_cast<size_t>(s)];
                    double acc = 0.0;
                    for (int s2 = 0; s2 < n_dyn; ++s2)
                        acc += 2.0 * wf * resid[static_cast<size_t>(s2)] *
                               pe_jac(dyn_[static_cast<size_t>(s2)], b);
                    sd.v = acc;
                }
                net_.backward(cache, seeds, net_grad);

                if (identify_) {
                    double* gex = grad->data() + net_.trainable_count();
                    for (int s = 0; s < n_dyn; ++s) {
                        const int b = dyn_[static_cast<size_t>(s)];
                        const double c_s = 2.0 * wf * resid[static_cast<size_t>(s)];
                        if (model_.is_generator(b)) {
                            const int gslot = gen_index(s);
                            gex[gslot] += c_s * jout[static_cast<size_t>(s)].d2 * m_eff[static_cast<size_t>(s)];
                        }
                        gex[model_.n_generators() + s] += c_s * jout[static_cast<size_t>(s)].d1 * d_eff[static_cast<size_t>(s)];
                    }
                }
            }
        }

        last_mse_u_ = mse_u;
        last_mse_f_ = mse_f;
        return mse_u + mse_f;
    }

    void fill_inputs(double t, std::span<const double> pm_all, std::span<Jet2> jin) const {
        jin[0] = lift_input(t);
        int k = 1;
        for (int b : dyn_) jin[static_cast<size_t>(k++)] = lift_const(pm_all[static_cast<size_t>(b)]);
    }

    int gen_index(int dyn_slot) const {
        int g = 0;
        for (int s = 0; s < dyn_slot; ++s)
            if (model_.is_generator(dyn_[static_cast<size_t>(s)])) ++g;
        return g;
    }

    Net net_;  // mutable working copy
    const GridModel& model_;
    TrainingPoints points_;
    LossVariant variant_;
    bool identify_;
    std::vector<int> dyn_;
    int n_extra_ = 0;
    double last_mse_u_ = 0.0;
    double last_mse_f_ = 0.0;
};

// --- training loops -----------------------------------------------------------

enum class OptimizerKind { Lbfgs, Adam };

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::Lbfgs;
    LbfgsOptions lbfgs;
    AdamOptions adam;
    int max_steps = 500;
    int eval_period = 10;
};

struct LossReport {
    std::vector<int> steps;
    std::vector<double> total;
    std::vector<double> mse_u;
    std::vector<double> mse_f;
    std::vector<double> mse_test;  // NaN on steps without a test evaluation
    std::vector<double> ms_per_step;
    double best_loss = std::numeric_limits<double>::infinity();
    int best_step = 0;
    int fallback_steps = 0;
    bool diverged = false;
};

// MSE_t over the test split: plain forward on every (trajectory, time) sample.
template <class Net>
double eval_test_mse(const Net& net, const GridModel& model, const Dataset& dataset) {
    const auto dyn = model.dynamic_buses();
    std::vector<double> input(static_cast<size_t>(net.n_inputs()));
    double acc = 0.0;
    long count = 0;
    for (int id : dataset.test_ids) {
        const auto& traj = dataset.trajectories[static_cast<size_t>(id)];
        for (int r = 0; r < traj.n_samples(); ++r) {
            input[0] = traj.times[static_cast<size_t>(r)];
            for (size_t s = 0; s < dyn.size(); ++s)
                input[1 + s] = traj.pm[static_cast<size_t>(dyn[s])];
            const auto out = net.forward(input);
            for (size_t s = 0; s < dyn.size(); ++s) {
                const double d = out[s] - traj.theta(r, dyn[s]);
                acc += d * d;
            }
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

// Per-trajectory relative angle errors over the test split.
template <class Net>
std::vector<double> eval_traj_errors(const Net& net, const GridModel& model, const Dataset& dataset) {
    const auto dyn = model.dynamic_buses();
    std::vector<double> errors;
    std::vector<double> input(static_cast<size_t>(net.n_inputs()));
    for (int id : dataset.test_ids) {
        const auto& traj = dataset.trajectories[static_cast<size_t>(id)];
        Matrix pred(traj.n_samples(), static_cast<int>(dyn.size()));
        Matrix truth(traj.n_samples(), static_cast<int>(dyn.size()));
        for (int r = 0; r < traj.n_samples(); ++r) {
            input[0] = traj.times[static_cast<size_t>(r)];
            for (size_t s = 0; s < dyn.size(); ++s)
                input[1 + s] = traj.pm[static_cast<size_t>(dyn[s])];
            const auto out = net.forward(input);
            for (size_t s = 0; s < dyn.size(); ++s) {
                pred(r, static_cast<int>(s)) = out[s];
                truth(r, static_cast<int>(s)) = traj.theta(r, dyn[s]);
            }
        }
        errors.push_back(rel_traj_error(pred, truth));
    }
    return errors;
}

namespace detail {

template <class Net, class Loss>
LossReport run_loop(Loss& loss, Net& net, const GridModel& model, const Dataset& dataset,
                    const TrainConfig& cfg, std::vector<double>& p) {
    LossReport report;
    std::vector<double> g(p.size());
    double f = loss.value_and_grad(p, g);
    if (!std::isfinite(f)) {
        report.diverged = true;
        return report;
    }
    report.best_loss = f;
    report.best_step = 0;
    std::vector<double> best_p = p;

    Lbfgs<Loss> lbfgs(cfg.lbfgs, p.size());
    Adam<Loss> adam(cfg.adam, p.size());

    for (int step = 1; step <= cfg.max_steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        StepInfo info = cfg.optimizer == OptimizerKind::Lbfgs ? lbfgs.step(loss, p, f, g)
                                                              : adam.step(loss, p, f, g);
        if (!std::isfinite(f)) {  // an accepted point went non-finite
            report.diverged = true;
            break;
        }
        const auto t1 = std::chrono::steady_clock::now();
        if (info.used_fallback) ++report.fallback_steps;

        report.steps.push_back(step);
        report.total.push_back(f);
        report.mse_u.push_back(loss.last_mse_u());
        report.mse_f.push_back(loss.last_mse_f());
        report.ms_per_step.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

        if (f < report.best_loss) {
            report.best_loss = f;
            report.best_step = step;
            best_p = p;
        }

        if (step % cfg.eval_period == 0 || step == cfg.max_steps) {
            net.unflatten(std::span<const double>(p.data(), static_cast<size_t>(net.trainable_count())));
            report.mse_test.push_back(eval_test_mse(net, model, dataset));
        } else {
            report.mse_test.push_back(std::numeric_limits<double>::quiet_NaN());
        }

        if (!info.moved) break;  // converged or stuck: no progress possible
    }

    p = best_p;  // snapshot policy: best total loss
    net.unflatten(std::span<const double>(p.data(), static_cast<size_t>(net.trainable_count())));
    return report;
}

}  // namespace detail

// step, loss, mse_u, mse_f, mse_test, ms_per_step; mse_test is blank on
// steps without a test evaluation.
inline std::string loss_report_to_csv(const LossReport& report) {
    std::string out = "step,loss,mse_u,mse_f,mse_test,ms_per_step\n";
    char buf[160];
    for (size_t i = 0; i < report.steps.size(); ++i) {
        const double mt = report.mse_test[i];
        if (std::isnan(mt))
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,,%.3f\n", report.steps[i],
                          report.total[i], report.mse_u[i], report.mse_f[i], report.ms_per_step[i]);
        else
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.3f\n", report.steps[i],
                          report.total[i], report.mse_u[i], report.mse_f[i], mt,
                          report.ms_per_step[i]);
        out += buf;
    }
    return out;
}

template <class Net>
struct TrainResult {
    Net net;
    LossReport report;
};

// Algorithm "capture dynamics": model parameters known and frozen; minimize
// over the network parameters only.
template <class Net>
TrainResult<Net> train_dynamics(Net net, const GridModel& model, const Dataset& dataset,
                                const LossConfig& loss_cfg, const TrainConfig& train_cfg) {
    TrainingPoints pts = sample_points(dataset, model, loss_cfg);
    PhysicsLoss<Net> loss(net, model, std::move(pts), loss_cfg.variant, false);
    std::vector<double> p = net.flatten();
    LossReport report = detail::run_loop(loss, net, model, dataset, train_cfg, p);
    return {std::move(net), std::move(report)};
}

template <class Net>
struct IdentifyResult {
    Net net;
    std::vector<double> m_est;  // per generator bus, bus order
    std::vector<double> d_est;  // per dynamic bus, bus order
    LossReport report;
};

// Algorithm "identify parameters": M and D join the optimization variables in
// log space (positive by construction); B stays known.
template <class Net>
IdentifyResult<Net> train_identify(Net net, const GridModel& model, const Dataset& dataset,
                                   const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                                   double m_init = 0.1, double d_init = 0.1) {
    if (!(m_init > 0) || !(d_init > 0))
        throw std::invalid_argument("train_identify: initial M and D must be positive");
    TrainingPoints pts = sample_points(dataset, model, loss_cfg);
    PhysicsLoss<Net> loss(net, model, std::move(pts), loss_cfg.variant, true);

    std::vector<double> p = net.flatten();
    for (int g = 0; g < model.n_generators(); ++g) p.push_back(std::log(m_init));
    for (int d = 0; d < model.n_dynamic(); ++d) p.push_back(std::log(d_init));

    LossReport report = detail::run_loop(loss, net, model, dataset, train_cfg, p);

    IdentifyResult<Net> result{std::move(net), {}, {}, std::move(report)};
    loss.extract_md(p, result.m_est, result.d_est);
    return result;
}

}  // namespace pikan
