#pragma once

// Ground-truth time-domain integration and dataset generation. Classic RK4
// with a fixed 1e-3 s internal step (bit-reproducible), sampled on the 0.1 s
// output grid the experiments use.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "pikan/common.hpp"
#include "pikan/grid.hpp"

namespace pikan {

struct TrajectoryMeta {
    std::uint64_t seed = 0;
    std::uint64_t model_hash = 0;
    std::vector<double> initial_state;
};

struct Trajectory {
    std::vector<double> times;  // uniform output grid
    Matrix theta;               // n_t x n_bus, rad (infinite-bus columns are 0)
    Matrix omega;               // n_t x n_bus, rad/s (loads: theta-dot from the load law)
    std::vector<double> pm;     // per-bus injection held constant over the run
    TrajectoryMeta meta;
    bool blew_up = false;

    int n_samples() const { return static_cast<int>(times.size()); }
};

struct Dataset {
    std::vector<Trajectory> trajectories;
    std::vector<int> train_ids;
    std::vector<int> test_ids;

    int n_bus() const { return trajectories.empty() ? 0 : trajectories.front().theta.cols; }

    int count_samples(std::span<const int> ids) const {
        int n = 0;
        for (int id : ids) n += trajectories[static_cast<size_t>(id)].n_samples();
        return n;
    }
    int n_test() const { return count_samples(test_ids); }
    int n_train() const { return count_samples(train_ids); }
};

// FNV-1a over the canonical JSON-ish description; identifies a model in
// trajectory metadata.
inline std::uint64_t model_hash(const GridModel& model) {
    std::ostringstream os;
    os << model.n_bus() << '|' << model.horizon << '|';
    for (int b = 0; b < model.n_bus(); ++b)
        os << to_string(model.kinds[static_cast<size_t>(b)]) << ',' << model.M[static_cast<size_t>(b)] << ','
           << model.D[static_cast<size_t>(b)] << ',' << model.pm_min[static_cast<size_t>(b)] << ','
           << model.pm_max[static_cast<size_t>(b)] << ';';
    for (double v : model.B.data) os << v << ',';
    const std::string s = os.str();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Fixed-step RK4 over [0, T]; outputs every dt_out. The internal step must
// divide the output step. Blow-up (|theta| > 1e3 rad or non-finite state)
// truncates the trajectory and sets the flag.
inline Trajectory integrate(const GridModel& model, std::span<const double> state0,
                            std::span<const double> pm_vec, double T, double dt_out = 0.1,
                            double dt_int = 1e-3) {
    model.validate();
    if (static_cast<int>(state0.size()) != model.state_size())
        throw std::invalid_argument("integrate: state size mismatch");
    if (!(dt_out > 0) || !(dt_int > 0) || !(T > 0))
        throw std::invalid_argument("integrate: steps and horizon must be positive");
    const double ratio = dt_out / dt_int;
    const int inner = static_cast<int>(std::llround(ratio));
    if (inner < 1 || std::abs(ratio - inner) > 1e-9)
        throw std::invalid_argument("integrate: dt_int must divide dt_out");
    const int n_out = static_cast<int>(std::llround(T / dt_out));
    if (std::abs(T / dt_out - n_out) > 1e-9)
        throw std::invalid_argument("integrate: dt_out must divide T");

    const int n = model.n_bus();
    const int ns = model.state_size();
    const int n_dyn = model.n_dynamic();

    Trajectory traj;
    traj.pm.assign(pm_vec.begin(), pm_vec.end());
    traj.meta.model_hash = model_hash(model);
    traj.meta.initial_state.assign(state0.begin(), state0.end());
    traj.times.reserve(static_cast<size_t>(n_out) + 1);
    traj.theta = Matrix(n_out + 1, n);
    traj.omega = Matrix(n_out + 1, n);

    std::vector<double> state(state0.begin(), state0.end());
    std::vector<double> k1(static_cast<size_t>(ns)), k2(static_cast<size_t>(ns)), k3(static_cast<size_t>(ns)),
        k4(static_cast<size_t>(ns)), tmp(static_cast<size_t>(ns));
    std::vector<double> theta_full(static_cast<size_t>(n)), pe(static_cast<size_t>(n));

    auto record = [&](int row) {
        int d = 0, g = n_dyn;
        for (int b = 0; b < n; ++b)
            theta_full[static_cast<size_t>(b)] = model.is_dynamic(b) ? state[static_cast<size_t>(d++)] : 0.0;
        electrical_power(model, theta_full, pe);
        for (int b = 0; b < n; ++b) {
            traj.theta(row, b) = theta_full[static_cast<size_t>(b)];
            if (model.is_generator(b))
                traj.omega(row, b) = state[static_cast<size_t>(g++)];
            else if (model.is_dynamic(b))
                traj.omega(row, b) =
                    (traj.pm[static_cast<size_t>(b)] - pe[static_cast<size_t>(b)]) / model.D[static_cast<size_t>(b)];
            else
                traj.omega(row, b) = 0.0;
        }
        traj.times.push_back(row * dt_out);
    };

    auto healthy = [&]() {
        for (int i = 0; i < ns; ++i) {
            if (!std::isfinite(state[static_cast<size_t>(i)])) return false;
            if (i < n_dyn && std::abs(state[static_cast<size_t>(i)]) > 1e3) return false;
        }
        return true;
    };

    record(0);
    for (int out = 1; out <= n_out; ++out) {
        for (int s = 0; s < inner; ++s) {
            ode_rhs(model, state, pm_vec, k1);
            for (int i = 0; i < ns; ++i) tmp[static_cast<size_t>(i)] = state[static_cast<size_t>(i)] + 0.5 * dt_int * k1[static_cast<size_t>(i)];
            ode_rhs(model, tmp, pm_vec, k2);
            for (int i = 0; i < ns; ++i) tmp[static_cast<size_t>(i)] = state[static_cast<size_t>(i)] + 0.5 * dt_int * k2[static_cast<size_t>(i)];
            ode_rhs(model, tmp, pm_vec, k3);
            for (int i = 0; i < ns; ++i) tmp[static_cast<size_t>(i)] = state[static_cast<size_t>(i)] + dt_int * k3[static_cast<size_t>(i)];
            ode_rhs(model, tmp, pm_vec, k4);
            for (int i = 0; i < ns; ++i)
                state[static_cast<size_t>(i)] += dt_int / 6.0 *
                                                 (k1[static_cast<size_t>(i)] + 2.0 * (k2[static_cast<size_t>(i)] + k3[static_cast<size_t>(i)]) +
                                                  k4[static_cast<size_t>(i)]);
        }
        if (!healthy()) {
            traj.blew_up = true;
            traj.theta.rows = out;
            traj.omega.rows = out;
            traj.theta.data.resize(static_cast<size_t>(out) * n);
            traj.omega.data.resize(static_cast<size_t>(out) * n);
            return traj;
        }
        record(out);
    }
    return traj;
}

// 100 SMIB trajectories from theta0 = omega0 = 0.1, Pm swept over the bus-0
// injection range. The sweep is a uniform grid by default ("ranges between"
// in the source protocol is ambiguous); random draws sit behind the flag.
inline Dataset gen_smib_dataset(const GridModel& model, int n_traj = 100, std::uint64_t seed = 0,
                                bool random_pm = false) {
    if (model.n_bus() != 2 || model.n_generators() != 1)
        throw std::invalid_argument("gen_smib_dataset: expected the 2-bus SMIB model");
    const double lo = model.pm_min[0], hi = model.pm_max[0];
    Dataset ds;
    std::mt19937_64 rng(derive_seed(seed, 0x534d4942ULL));  // "SMIB"
    std::uniform_real_distribution<double> dist(lo, hi);
    for (int k = 0; k < n_traj; ++k) {
        double pm1;
        if (random_pm)
            pm1 = dist(rng);
        else
            pm1 = n_traj == 1 ? lo : lo + (hi - lo) * k / (n_traj - 1);
        const std::vector<double> pm = {pm1, 0.0};
        const std::vector<double> x0 = {0.1, 0.1};
        Trajectory traj = integrate(model, x0, pm, model.horizon);
        traj.meta.seed = derive_seed(seed, static_cast<std::uint64_t>(k));
        ds.trajectories.push_back(std::move(traj));
        ds.train_ids.push_back(k);
        ds.test_ids.push_back(k);
    }
    return ds;
}

// 19 trajectories Pm = a * [0.1, 0.2, -0.1, -0.2], a = 0.5, 1.0, ..., 9.5,
// started from the unperturbed equilibrium theta = omega = 0.
inline Dataset gen_4bus_dataset(const GridModel& model) {
    if (model.n_bus() != 4) throw std::invalid_argument("gen_4bus_dataset: expected the 4-bus model");
    static constexpr double kPattern[4] = {0.1, 0.2, -0.1, -0.2};
    Dataset ds;
    for (int k = 0; k < 19; ++k) {
        const double a = 0.5 + 0.5 * k;
        std::vector<double> pm(4);
        for (int b = 0; b < 4; ++b) pm[static_cast<size_t>(b)] = a * kPattern[b];
        std::vector<double> x0(static_cast<size_t>(model.state_size()), 0.0);
        Trajectory traj = integrate(model, x0, pm, model.horizon);
        traj.meta.seed = static_cast<std::uint64_t>(k);
        ds.trajectories.push_back(std::move(traj));
        ds.train_ids.push_back(k);
        ds.test_ids.push_back(k);
    }
    return ds;
}

// --- CSV persistence ---------------------------------------------------------
// One row per (trajectory, time): traj_id, t, theta_1..n, omega_1..n, pm_1..n.
// Values print as shortest round-trip decimals, so write -> read is exact.

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline double parse_double(std::string_view field, int line_no) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw std::runtime_error("dataset CSV: malformed number '" + std::string(field) +
                                 "' on line " + std::to_string(line_no));
    return v;
}

}  // namespace detail

inline std::string dataset_to_csv(const Dataset& ds) {
    std::string out;
    const int n = ds.n_bus();
    out += "traj_id,t";
    for (int b = 1; b <= n; ++b) out += ",theta_" + std::to_string(b);
    for (int b = 1; b <= n; ++b) out += ",omega_" + std::to_string(b);
    for (int b = 1; b <= n; ++b) out += ",pm_" + std::to_string(b);
    out += '\n';
    for (size_t id = 0; id < ds.trajectories.size(); ++id) {
        const auto& traj = ds.trajectories[id];
        for (int r = 0; r < traj.n_samples(); ++r) {
            out += std::to_string(id);
            out += ',';
            detail::append_double(out, traj.times[static_cast<size_t>(r)]);
            for (int b = 0; b < n; ++b) { out += ','; detail::append_double(out, traj.theta(r, b)); }
            for (int b = 0; b < n; ++b) { out += ','; detail::append_double(out, traj.omega(r, b)); }
            for (int b = 0; b < n; ++b) { out += ','; detail::append_double(out, traj.pm[static_cast<size_t>(b)]); }
            out += '\n';
        }
    }
    return out;
}

inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    f << dataset_to_csv(ds);
    if (!f) throw std::runtime_error("write_dataset_csv: write failed for " + path);
}

inline Dataset dataset_from_csv(const std::string& text) {
    Dataset ds;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset CSV: empty file");
    // Header fixes the bus count: 2 + 3n columns.
    int commas = 0;
    for (char c : line) commas += c == ',';
    if (commas < 2 || (commas - 1) % 3 != 0)
        throw std::runtime_error("dataset CSV: malformed header");
    const int n = (commas - 1) / 3;

    int line_no = 1;
    std::vector<std::string_view> fields;
    Trajectory* cur = nullptr;
    long cur_id = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        fields.clear();
        size_t start = 0;
        const std::string_view lv(line);
        while (true) {
            const size_t comma = lv.find(',', start);
            fields.push_back(lv.substr(start, comma == std::string_view::npos ? comma : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (static_cast<int>(fields.size()) != 2 + 3 * n)
            throw std::runtime_error("dataset CSV: wrong field count on line " + std::to_string(line_no));
        const long id = std::lround(detail::parse_double(fields[0], line_no));
        if (id != cur_id) {
            if (id != static_cast<long>(ds.trajectories.size()))
                throw std::runtime_error("dataset CSV: trajectory ids must be contiguous (line " +
                                         std::to_string(line_no) + ")");
            ds.trajectories.emplace_back();
            cur = &ds.trajectories.back();
            cur->theta = Matrix(0, n);
            cur->omega = Matrix(0, n);
            cur->pm.assign(static_cast<size_t>(n), 0.0);
            for (int b = 0; b < n; ++b)
                cur->pm[static_cast<size_t>(b)] = detail::parse_double(fields[static_cast<size_t>(2 + 2 * n + b)], line_no);
            cur_id = id;
        }
        cur->times.push_back(detail::parse_double(fields[1], line_no));
        cur->theta.rows += 1;
        cur->omega.rows += 1;
        for (int b = 0; b < n; ++b)
            cur->theta.data.push_back(detail::parse_double(fields[static_cast<size_t>(2 + b)], line_no));
        for (int b = 0; b < n; ++b)
            cur->omega.data.push_back(detail::parse_double(fields[static_cast<size_t>(2 + n + b)], line_no));
    }
    ds.train_ids.resize(ds.trajectories.size());
    ds.test_ids.resize(ds.trajectories.size());
    for (size_t i = 0; i < ds.trajectories.size(); ++i) {
        ds.train_ids[i] = static_cast<int>(i);
        ds.test_ids[i] = static_cast<int>(i);
    }
    return ds;
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_dataset_csv: cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return dataset_from_csv(buf.str());
}

// Hash of the canonical CSV serialization; determinism checks compare these.
inline std::uint64_t dataset_hash(const Dataset& ds) {
    const std::string csv = dataset_to_csv(ds);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : csv) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace pikan
