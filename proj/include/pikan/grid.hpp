#pragma once

// Lossless swing-equation model. Generators follow
//   dtheta_i/dt = omega_i,  M_i domega_i/dt = Pm_i - Pe_i - D_i omega_i,
// frequency-dependent loads follow D_i dtheta_i/dt = Pm_i - Pe_i, and an
// infinite bus keeps theta = 0. Electrical power couples buses through
//   Pe_i = sum_j B_ij sin(theta_i - theta_j).
// Load buses are first-order ODE states, so the whole system integrates as an
// explicit ODE.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pikan/common.hpp"
#include "pikan/jet.hpp"

namespace pikan {

enum class BusKind { Generator, LoadFreqDep, InfiniteBus };

inline const char* to_string(BusKind k) {
    switch (k) {
        case BusKind::Generator: return "generator";
        case BusKind::LoadFreqDep: return "load";
        case BusKind::InfiniteBus: return "infinite";
    }
    return "?";
}

struct GridModel {
    std::vector<BusKind> kinds;
    std::vector<double> M;       // inertia, p.u. s^2 (0 for loads / infinite)
    std::vector<double> D;       // damping, p.u. s (0 for infinite)
    std::vector<double> pm;      // default net injection, p.u.
    std::vector<double> pm_min;  // injection bounds per bus
    std::vector<double> pm_max;
    Matrix B;                    // susceptance matrix, symmetric, zero diagonal
    double horizon = 0.0;        // time window T, s

    int n_bus() const { return static_cast<int>(kinds.size()); }

    bool is_dynamic(int b) const { return kinds[static_cast<size_t>(b)] != BusKind::InfiniteBus; }
    bool is_generator(int b) const { return kinds[static_cast<size_t>(b)] == BusKind::Generator; }

    std::vector<int> dynamic_buses() const {
        std::vector<int> out;
        for (int b = 0; b < n_bus(); ++b)
            if (is_dynamic(b)) out.push_back(b);
        return out;
    }
    std::vector<int> generator_buses() const {
        std::vector<int> out;
        for (int b = 0; b < n_bus(); ++b)
            if (is_generator(b)) out.push_back(b);
        return out;
    }

    int n_dynamic() const { return static_cast<int>(dynamic_buses().size()); }
    int n_generators() const { return static_cast<int>(generator_buses().size()); }

    // Packed ODE state: theta for dynamic buses (bus order), then omega for
    // generator buses (bus order).
    int state_size() const { return n_dynamic() + n_generators(); }

    void validate() const {
        const int n = n_bus();
        if (n < 1) throw std::invalid_argument("GridModel: empty model");
        if (static_cast<int>(M.size()) != n || static_cast<int>(D.size()) != n ||
            static_cast<int>(pm.size()) != n || static_cast<int>(pm_min.size()) != n ||
            static_cast<int>(pm_max.size()) != n)
            throw std::invalid_argument("GridModel: per-bus array size mismatch");
        if (B.rows != n || B.cols != n) throw std::invalid_argument("GridModel: B matrix shape mismatch");
        if (n_dynamic() < 1) throw std::invalid_argument("GridModel: need at least one non-infinite bus");
        if (!(horizon > 0)) throw std::invalid_argument("GridModel: horizon T must be positive");
        for (int b = 0; b < n; ++b) {
            switch (kinds[static_cast<size_t>(b)]) {
                case BusKind::Generator:
                    if (!(M[static_cast<size_t>(b)] > 0))
                        throw std::invalid_argument("GridModel: generator bus " + std::to_string(b) +
                                                    " needs M > 0");
                    // D = 0 stays legal on generators (undamped studies).
                    if (D[static_cast<size_t>(b)] < 0)
                        throw std::invalid_argument("GridModel: generator bus " + std::to_string(b) +
                                                    " needs D >= 0");
                    break;
                case BusKind::LoadFreqDep:
                    if (M[static_cast<size_t>(b)] != 0)
                        throw std::invalid_argument("GridModel: load bus " + std::to_string(b) +
                                                    " must have M = 0");
                    if (!(D[static_cast<size_t>(b)] > 0))
                        throw std::invalid_argument("GridModel: load bus " + std::to_string(b) +
                                                    " needs D > 0");
                    break;
                case BusKind::InfiniteBus:
                    break;
            }
            if (B(b, b) != 0) throw std::invalid_argument("GridModel: B diagonal must be zero");
            for (int c = 0; c < n; ++c)
                if (B(b, c) != B(c, b)) throw std::invalid_argument("GridModel: B must be symmetric");
        }
        if (pm_min.size() == pm_max.size()) {
            for (int b = 0; b < n; ++b)
                if (pm_min[static_cast<size_t>(b)] > pm_max[static_cast<size_t>(b)])
                    throw std::invalid_argument("GridModel: Pm_min > Pm_max on bus " + std::to_string(b));
        }
    }
};

// Pe_i = sum_j B_ij sin(theta_i - theta_j); antisymmetric pairwise flows, so
// the components sum to zero.
inline void electrical_power(const GridModel& model, std::span<const double> theta,
                             std::span<double> pe) {
    const int n = model.n_bus();
    if (static_cast<int>(theta.size()) != n || static_cast<int>(pe.size()) != n)
        throw std::invalid_argument("electrical_power: theta size mismatch");
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const double b = model.B(i, j);
            if (b != 0.0) acc += b * std::sin(theta[static_cast<size_t>(i)] - theta[static_cast<size_t>(j)]);
        }
        pe[static_cast<size_t>(i)] = acc;
    }
}

inline std::vector<double> electrical_power(const GridModel& model, std::span<const double> theta) {
    std::vector<double> pe(static_cast<size_t>(model.n_bus()));
    electrical_power(model, theta, pe);
    return pe;
}

inline std::vector<Jet2> electrical_power(const GridModel& model, std::span<const Jet2> theta) {
    const int n = model.n_bus();
    if (static_cast<int>(theta.size()) != n)
        throw std::invalid_argument("electrical_power: theta size mismatch");
    std::vector<Jet2> pe(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Jet2 acc{0.0, 0.0, 0.0};
        for (int j = 0; j < n; ++j) {
            const double b = model.B(i, j);
            if (b != 0.0) acc += b * sin(theta[i] - theta[j]);
        }
        pe[static_cast<size_t>(i)] = acc;
    }
    return pe;
}

// Jacobian of Pe with respect to theta values: J(i,j) = dPe_i/dtheta_j.
inline void power_jacobian(const GridModel& model, std::span<const double> theta, Matrix& jac) {
    const int n = model.n_bus();
    if (static_cast<int>(theta.size()) != n)
        throw std::invalid_argument("power_jacobian: theta size mismatch");
    jac = Matrix(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double b = model.B(i, j);
            if (b == 0.0) continue;
            const double c = b * std::cos(theta[static_cast<size_t>(i)] - theta[static_cast<size_t>(j)]);
            jac(i, j) = -c;
            diag += c;
        }
        jac(i, i) = diag;
    }
}

// Physics residual per dynamic bus, from output jets seeded on t:
//   generator: r = M theta'' + D theta' + Pe - Pm
//   load:      r =            D theta' + Pe - Pm      (M = 0)
// Exactly zero along a true trajectory. theta covers all buses (infinite
// entries fixed at zero); the result covers dynamic buses in bus order.
inline std::vector<double> swing_residual(const GridModel& model, std::span<const Jet2> theta,
                                          std::span<const double> pm_vec) {
    const int n = model.n_bus();
    if (static_cast<int>(theta.size()) != n || static_cast<int>(pm_vec.size()) != n)
        throw std::invalid_argument("swing_residual: size mismatch");
    std::vector<double> out;
    out.reserve(static_cast<size_t>(model.n_dynamic()));
    for (int i = 0; i < n; ++i) {
        if (!model.is_dynamic(i)) continue;
        double pe = 0.0;
        for (int j = 0; j < n; ++j) {
            const double b = model.B(i, j);
            if (b != 0.0) pe += b * std::sin(theta[i].v - theta[j].v);
        }
        const double m = model.M[static_cast<size_t>(i)];
        const double d = model.D[static_cast<size_t>(i)];
        out.push_back(m * theta[i].d2 + d * theta[i].d1 + pe - pm_vec[static_cast<size_t>(i)]);
    }
    return out;
}

inline std::vector<double> swing_residual(const GridModel& model, std::span<const Jet2> theta) {
    return swing_residual(model, theta, model.pm);
}

// Explicit ODE right-hand side on the packed state.
inline void ode_rhs(const GridModel& model, std::span<const double> state,
                    std::span<const double> pm_vec, std::span<double> dstate) {
    const int n = model.n_bus();
    if (static_cast<int>(state.size()) != model.state_size() ||
        static_cast<int>(dstate.size()) != model.state_size())
        throw std::invalid_argument("ode_rhs: state size mismatch");

    // Unpack theta over all buses.
    double theta_full[64];
    if (n > 64) throw std::invalid_argument("ode_rhs: model too large");
    int idx = 0;
    for (int b = 0; b < n; ++b)
        theta_full[b] = model.is_dynamic(b) ? state[static_cast<size_t>(idx++)] : 0.0;

    const int n_dyn = idx;
    int gidx = n_dyn;  // omega slots follow theta slots

    for (int b = 0, d = 0; b < n; ++b) {
        if (!model.is_dynamic(b)) continue;
        double pe = 0.0;
        for (int j = 0; j < n; ++j) {
            const double bij = model.B(b, j);
            if (bij != 0.0) pe += bij * std::sin(theta_full[b] - theta_full[j]);
        }
        if (model.is_generator(b)) {
            const double m = model.M[static_cast<size_t>(b)];
            if (!(m > 0)) throw std::invalid_argument("ode_rhs: generator bus with M = 0");
            const double omega = state[static_cast<size_t>(gidx)];
            dstate[static_cast<size_t>(d)] = omega;
            dstate[static_cast<size_t>(gidx)] =
                (pm_vec[static_cast<size_t>(b)] - pe - model.D[static_cast<size_t>(b)] * omega) / m;
            ++gidx;
        } else {
            dstate[static_cast<size_t>(d)] = (pm_vec[static_cast<size_t>(b)] - pe) / model.D[static_cast<size_t>(b)];
        }
        ++d;
    }
}

inline std::vector<double> ode_rhs(const GridModel& model, std::span<const double> state,
                                   std::span<const double> pm_vec) {
    std::vector<double> dstate(static_cast<size_t>(model.state_size()));
    ode_rhs(model, state, pm_vec, dstate);
    return dstate;
}

namespace detail {

// Gaussian elimination with partial pivoting; solves in place, returns false
// on a (numerically) singular matrix.
inline bool solve_dense(Matrix a, std::vector<double>& rhs) {
    const int n = a.rows;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-14) return false;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
            std::swap(rhs[static_cast<size_t>(piv)], rhs[static_cast<size_t>(col)]);
        }
        const double inv = 1.0 / a(col, col);
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) * inv;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            rhs[static_cast<size_t>(r)] -= f * rhs[static_cast<size_t>(col)];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double acc = rhs[static_cast<size_t>(r)];
        for (int c = r + 1; c < n; ++c) acc -= a(r, c) * rhs[static_cast<size_t>(c)];
        rhs[static_cast<size_t>(r)] = acc / a(r, r);
    }
    return true;
}

}  // namespace detail

// Newton solve of Pe(theta) = Pm for the steady-state angles. With no
// infinite bus the injections must balance and the first dynamic bus is
// pinned at theta = 0 as the reference.
inline std::vector<double> solve_equilibrium(const GridModel& model, std::span<const double> pm_vec,
                                             double tol = 1e-10, int max_iter = 50) {
    const int n = model.n_bus();
    if (static_cast<int>(pm_vec.size()) != n)
        throw std::invalid_argument("solve_equilibrium: pm size mismatch");

    const auto dyn = model.dynamic_buses();
    const bool has_infinite = model.n_dynamic() < n;
    std::vector<int> unknowns;  // bus index per unknown angle
    if (has_infinite) {
        unknowns = dyn;
    } else {
        double total = 0.0;
        for (double p : pm_vec) total += p;
        if (std::abs(total) > 1e-9)
            throw std::invalid_argument("solve_equilibrium: injections must sum to zero");
        unknowns.assign(dyn.begin() + 1, dyn.end());  // pin dyn[0] at 0
    }
    const int m = static_cast<int>(unknowns.size());

    std::vector<double> theta(static_cast<size_t>(n), 0.0);
    if (m == 0) return theta;

    Matrix jac_full;
    for (int it = 0; it < max_iter; ++it) {
        const auto pe = electrical_power(model, theta);
        std::vector<double> g(static_cast<size_t>(m));
        double gmax = 0.0;
        for (int r = 0; r < m; ++r) {
            const int b = unknowns[static_cast<size_t>(r)];
            g[static_cast<size_t>(r)] = pe[static_cast<size_t>(b)] - pm_vec[static_cast<size_t>(b)];
            gmax = std::max(gmax, std::abs(g[static_cast<size_t>(r)]));
        }
        if (gmax <= tol) return theta;

        power_jacobian(model, theta, jac_full);
        Matrix jac(m, m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                jac(r, c) = jac_full(unknowns[static_cast<size_t>(r)], unknowns[static_cast<size_t>(c)]);
        if (!detail::solve_dense(jac, g))
            throw std::runtime_error("solve_equilibrium: singular Jacobian");
        for (int r = 0; r < m; ++r) theta[static_cast<size_t>(unknowns[static_cast<size_t>(r)])] -= g[static_cast<size_t>(r)];
    }

    // Final convergence check after the last update.
    const auto pe = electrical_power(model, theta);
    double gmax = 0.0;
    for (int b : unknowns) gmax = std::max(gmax, std::abs(pe[static_cast<size_t>(b)] - pm_vec[static_cast<size_t>(b)]));
    if (gmax <= tol) return theta;
    throw std::runtime_error("solve_equilibrium: Newton did not converge in " +
                             std::to_string(max_iter) + " iterations");
}

// --- canned case studies ----------------------------------------------------

// Single machine vs infinite bus: Table-I machine parameters; the line
// susceptance is an assumption (the published figure is not machine readable)
// and every experiment treats it as configurable.
inline GridModel smib_model(double b_line = 0.2) {
    GridModel g;
    g.kinds = {BusKind::Generator, BusKind::InfiniteBus};
    g.M = {0.4, 0.0};
    g.D = {0.15, 0.0};
    g.pm = {0.1, 0.0};
    g.pm_min = {0.08, 0.0};
    g.pm_max = {0.18, 0.0};
    g.B = Matrix(2, 2, 0.0);
    g.B(0, 1) = g.B(1, 0) = b_line;
    g.horizon = 20.0;
    g.validate();
    return g;
}

// Two generators (buses 0, 1) and two frequency-dependent loads (buses 2, 3)
// on a ring. The default line susceptance keeps every a * [0.1, 0.2, -0.1,
// -0.2] injection (a up to 9.5) inside the network's transfer capability so
// all training trajectories settle; it is configurable like the SMIB line.
inline GridModel fourbus_model(double b_line = 5.0) {
    GridModel g;
    g.kinds = {BusKind::Generator, BusKind::Generator, BusKind::LoadFreqDep, BusKind::LoadFreqDep};
    g.M = {0.3, 0.2, 0.0, 0.0};
    g.D = {0.15, 0.3, 0.25, 0.2};
    g.pm = {0.0, 0.0, 0.0, 0.0};
    g.pm_min = {0.05, 0.1, -0.95, -1.9};
    g.pm_max = {0.95, 1.9, -0.05, -0.1};
    g.B = Matrix(4, 4, 0.0);
    const int ring[4][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    for (const auto& line : ring) g.B(line[0], line[1]) = g.B(line[1], line[0]) = b_line;
    g.horizon = 5.0;
    g.validate();
    return g;
}

}  // namespace pikan
