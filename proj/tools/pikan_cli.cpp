// Experiment driver: simulate | train | evaluate | identify | scaling | compare.
// Every command is a pure function of (config, seed); outputs are CSV/JSON
// under --out. Errors leave a machine-readable JSON object on stderr and a
// nonzero exit code.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "pikan/kan.hpp"
#include "pikan/metrics.hpp"
#include "pikan/mlp.hpp"
#include "pikan/serialize.hpp"
#include "pikan/simulate.hpp"
#include "pikan/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pikan;

namespace {

struct NetworkConfig {
    std::string kind = "kan";  // kan | mlp
    std::vector<int> shape;
    int k_b = 3;
    int g = 10;
    bool train_w = true;
};

struct ExperimentConfig {
    GridModel grid;
    std::string system;  // smib | fourbus | custom
    NetworkConfig network;
    LossConfig loss;
    OptimizerKind optimizer = OptimizerKind::Lbfgs;
    AdamOptions adam;
    LbfgsOptions lbfgs;
    int steps = 500;
    int n_traj = 100;  // SMIB dataset size
    bool random_pm = false;
    int identify_repeats = 20;
    int identify_steps = 0;  // 0: use `steps`
    std::uint64_t seed = 0;
    fs::path out = "out";
};

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "smib") {
        cfg.grid = smib_model();
        cfg.system = "smib";
        cfg.network.shape = {2, 5, 1};
        cfg.network.g = 10;
        cfg.loss.n_u = 40;
        cfg.loss.n_f = 800;
        cfg.loss.colloc = CollocMode::Box;
    } else if (name == "fourbus") {
        cfg.grid = fourbus_model();
        cfg.system = "fourbus";
        cfg.network.shape = {5, 10, 4};
        cfg.network.g = 5;
        cfg.loss.n_u = 80;
        cfg.loss.n_f = 4000;
        // The 4-bus injections live on the 1-D family a*[0.1,0.2,-0.1,-0.2];
        // collocating on training injections instead of the full 4-D box keeps
        // the network's capacity on the family the tests measure.
        cfg.loss.colloc = CollocMode::Trajectory;
        cfg.n_traj = 19;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "' (expected smib or fourbus)");
    }
    return cfg;
}

LossVariant variant_from_string(const std::string& s) {
    if (s == "I" || s == "1") return LossVariant::I;
    if (s == "II" || s == "2") return LossVariant::II;
    if (s == "data_only" || s == "data") return LossVariant::DataOnly;
    throw std::invalid_argument("unknown loss variant '" + s + "'");
}

ExperimentConfig load_config(const std::optional<std::string>& config_path,
                             const std::optional<std::string>& preset) {
    ExperimentConfig cfg;
    json j;
    if (config_path) {
        j = read_json(*config_path);
        if (j.value("schema", 0) != 1)
            throw std::invalid_argument("config: expected \"schema\": 1");
    }
    const std::string preset_name =
        preset ? *preset : (j.contains("preset") ? j["preset"].get<std::string>() : "");
    if (!preset_name.empty()) {
        cfg = preset_config(preset_name);
    } else if (!config_path) {
        throw std::invalid_argument("either --config or --preset is required");
    }

    if (j.contains("grid")) {
        if (j["grid"].is_string())
            cfg.grid = grid_from_json(read_json(j["grid"].get<std::string>()));
        else
            cfg.grid = grid_from_json(j["grid"]);
        if (preset_name.empty()) cfg.system = "custom";
    } else if (preset_name.empty()) {
        throw std::invalid_argument("config: 'grid' required without a preset");
    }

    if (j.contains("network")) {
        const auto& n = j["network"];
        cfg.network.kind = n.value("kind", cfg.network.kind);
        if (n.contains("shape")) cfg.network.shape = n["shape"].get<std::vector<int>>();
        cfg.network.k_b = n.value("k_b", cfg.network.k_b);
        cfg.network.g = n.value("G", cfg.network.g);
        cfg.network.train_w = n.value("train_w", cfg.network.train_w);
    }
    if (j.contains("loss")) {
        const auto& l = j["loss"];
        if (l.contains("variant")) cfg.loss.variant = variant_from_string(l["variant"].get<std::string>());
        cfg.loss.n_u = l.value("n_u", cfg.loss.n_u);
        cfg.loss.n_f = l.value("n_f", cfg.loss.n_f);
        if (l.contains("collocation"))
            cfg.loss.colloc = l["collocation"].get<std::string>() == "trajectory"
                                  ? CollocMode::Trajectory
                                  : CollocMode::Box;
    }
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        const std::string kind = o.value("kind", "lbfgs");
        cfg.optimizer = kind == "adam" ? OptimizerKind::Adam : OptimizerKind::Lbfgs;
        cfg.steps = o.value("steps", cfg.steps);
        cfg.adam.lr = o.value("lr", cfg.adam.lr);
    }
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        cfg.n_traj = d.value("n_traj", cfg.n_traj);
        cfg.random_pm = d.value("random_pm", cfg.random_pm);
    }
    if (j.contains("identify")) {
        const auto& idf = j["identify"];
        cfg.identify_repeats = idf.value("repeats", cfg.identify_repeats);
        cfg.identify_steps = idf.value("steps", cfg.identify_steps);
    }
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    cfg.grid.validate();
    if (cfg.network.shape.empty()) throw std::invalid_argument("config: network shape required");
    if (cfg.network.shape.front() != network_input_dim(cfg.grid))
        throw std::invalid_argument("config: network input width must be 1 + dynamic buses");
    if (cfg.network.shape.back() != cfg.grid.n_dynamic())
        throw std::invalid_argument("config: network output width must equal dynamic buses");
    if (cfg.steps < 1) throw std::invalid_argument("config: steps must be >= 1");
    return cfg;
}

Dataset build_dataset(const ExperimentConfig& cfg) {
    if (cfg.grid.n_bus() == 4 && cfg.grid.n_dynamic() == 4) return gen_4bus_dataset(cfg.grid);
    return gen_smib_dataset(cfg.grid, cfg.n_traj, cfg.seed, cfg.random_pm);
}

Dataset load_or_build_dataset(const ExperimentConfig& cfg) {
    const fs::path csv = cfg.out / "dataset.csv";
    if (fs::exists(csv)) return read_dataset_csv(csv.string());
    return build_dataset(cfg);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

KanNetwork make_kan(const ExperimentConfig& cfg, std::uint64_t seed) {
    KanNetwork net = KanNetwork::init(cfg.network.shape,
                                      SplineSpec(cfg.network.k_b, cfg.network.g, -1.0, 1.0), seed);
    net.input_affine = default_input_affine(cfg.grid);
    net.train_w = cfg.network.train_w;
    return net;
}

MlpNetwork make_mlp(const ExperimentConfig& cfg, std::uint64_t seed,
                    const std::vector<int>* widths = nullptr) {
    MlpNetwork net = MlpNetwork::init(widths ? *widths : cfg.network.shape, seed);
    net.input_affine = default_input_affine(cfg.grid);
    return net;
}

TrainConfig train_config(const ExperimentConfig& cfg, int steps_override = 0) {
    TrainConfig t;
    t.optimizer = cfg.optimizer;
    t.lbfgs = cfg.lbfgs;
    t.adam = cfg.adam;
    t.max_steps = steps_override > 0 ? steps_override : cfg.steps;
    return t;
}

std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? " " : "") + std::to_string(s[i]);
    return out + "]";
}

// --- commands -----------------------------------------------------------------

int cmd_simulate(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out);
    const Dataset ds = build_dataset(cfg);
    const fs::path csv = cfg.out / "dataset.csv";
    write_dataset_csv(ds, csv.string());
    json meta = {{"model_hash", model_hash(cfg.grid)},
                 {"seed", cfg.seed},
                 {"T", cfg.grid.horizon},
                 {"dt_out", 0.1},
                 {"n_trajectories", ds.trajectories.size()},
                 {"n_samples", ds.n_test()},
                 {"system", cfg.system}};
    write_json(meta, (cfg.out / "dataset.meta.json").string());
    write_json(grid_to_json(cfg.grid), (cfg.out / "grid.json").string());
    std::cout << "wrote " << csv.string() << ": " << ds.n_test() << " data rows ("
              << ds.trajectories.size() << " trajectories)\n";
    return 0;
}

template <class Net>
int run_training(const ExperimentConfig& cfg, Net net, const Dataset& ds) {
    auto result = train_dynamics(std::move(net), cfg.grid, ds, cfg.loss, train_config(cfg));
    fs::create_directories(cfg.out);
    write_json(checkpoint_to_json(result.net), (cfg.out / "checkpoint.json").string());
    write_text(cfg.out / "loss_report.csv", loss_report_to_csv(result.report));
    const double mse = eval_test_mse(result.net, cfg.grid, ds);
    std::cout << "trained " << result.report.steps.size() << " steps; best loss "
              << result.report.best_loss << "; test MSE " << mse << "\n";
    if (result.report.diverged) {
        std::cerr << json{{"error", "training diverged"},
                          {"steps", result.report.steps.size()}}.dump()
                  << "\n";
        return 3;
    }
    return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
    const Dataset ds = load_or_build_dataset(cfg);
    if (cfg.network.kind == "mlp") return run_training(cfg, make_mlp(cfg, cfg.seed), ds);
    return run_training(cfg, make_kan(cfg, cfg.seed), ds);
}

template <class Net>
int run_evaluation(const ExperimentConfig& cfg, const Net& net, const Dataset& ds) {
    const auto errors = eval_traj_errors(net, cfg.grid, ds);
    std::string csv = "traj_id,e_theta\n";
    char buf[128];
    for (size_t i = 0; i < errors.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, errors[i]);
        csv += buf;
    }
    fs::create_directories(cfg.out);
    write_text(cfg.out / "traj_errors.csv", csv);

    const auto s = summarize(errors);
    std::string table = "method,system,max_pct,min_pct,median_pct\n";
    std::snprintf(buf, sizeof(buf), "%s,%s,%.4f,%.4f,%.4f\n",
                  cfg.network.kind == "mlp" ? "PINN" : "PIKAN", cfg.system.c_str(), 100 * s.max,
                  100 * s.min, 100 * s.median);
    table += buf;
    write_text(cfg.out / "summary.csv", table);
    std::cout << "e_theta over " << errors.size() << " trajectories: max " << 100 * s.max
              << "% min " << 100 * s.min << "% median " << 100 * s.median << "%\n";
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
    const Dataset ds = load_or_build_dataset(cfg);
    const json ckpt = read_json((cfg.out / "checkpoint.json").string());
    if (ckpt.at("kind").get<std::string>() == "mlp")
        return run_evaluation(cfg, mlp_from_json(ckpt), ds);
    return run_evaluation(cfg, kan_from_json(ckpt), ds);
}

int cmd_identify(const ExperimentConfig& cfg) {
    const Dataset ds = load_or_build_dataset(cfg);
    const auto dyn = cfg.grid.dynamic_buses();
    const auto gens = cfg.grid.generator_buses();

    std::vector<double> m_true, d_true;
    for (int b : gens) m_true.push_back(cfg.grid.M[static_cast<size_t>(b)]);
    for (int b : dyn) d_true.push_back(cfg.grid.D[static_cast<size_t>(b)]);

    LossConfig loss = cfg.loss;
    if (loss.variant == LossVariant::DataOnly)
        throw std::invalid_argument("identify: data-only loss cannot estimate parameters");

    json runs = json::array();
    std::vector<double> m_err_all, d_err_all;
    const int steps = cfg.identify_steps > 0 ? cfg.identify_steps : cfg.steps;
    for (int rep = 0; rep < cfg.identify_repeats; ++rep) {
        const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
        loss.seed = seed;
        std::vector<double> m_est, d_est;
        double best_loss = 0.0;
        if (cfg.network.kind == "mlp") {
            auto r = train_identify(make_mlp(cfg, seed), cfg.grid, ds, loss, train_config(cfg, steps));
            m_est = std::move(r.m_est);
            d_est = std::move(r.d_est);
            best_loss = r.report.best_loss;
        } else {
            auto r = train_identify(make_kan(cfg, seed), cfg.grid, ds, loss, train_config(cfg, steps));
            m_est = std::move(r.m_est);
            d_est = std::move(r.d_est);
            best_loss = r.report.best_loss;
        }
        const auto e_m = param_errors(m_true, m_est);
        const auto e_d = param_errors(d_true, d_est);
        for (double e : e_m) m_err_all.push_back(e);
        for (double e : e_d) d_err_all.push_back(e);
        runs.push_back({{"seed", seed},
                        {"M_est", m_est},
                        {"D_est", d_est},
                        {"e_M", e_m},
                        {"e_D", e_d},
                        {"best_loss", best_loss}});
        std::cout << "rep " << rep << ": e_M median "
                  << 100 * median_lower({e_m.begin(), e_m.end()}) << "% e_D median "
                  << 100 * median_lower({e_d.begin(), e_d.end()}) << "%\n";
    }
    json out = {{"system", cfg.system},
                {"variant", to_string(cfg.loss.variant)},
                {"repeats", cfg.identify_repeats},
                {"M_true", m_true},
                {"D_true", d_true},
                {"runs", runs},
                {"e_M_median", median_lower(m_err_all)},
                {"e_D_median", median_lower(d_err_all)}};
    fs::create_directories(cfg.out);
    write_json(out, (cfg.out / "identify_report.json").string());
    std::cout << "overall: e_M median " << 100 * out["e_M_median"].get<double>() << "% e_D median "
              << 100 * out["e_D_median"].get<double>() << "%\n";
    return 0;
}

int cmd_scaling(const ExperimentConfig& cfg) {
    const Dataset ds = load_or_build_dataset(cfg);
    std::vector<std::vector<int>> kan_shapes, mlp_shapes;
    if (cfg.system == "fourbus") {
        kan_shapes = {{5, 4, 4}, {5, 7, 4}, {5, 10, 4}};
        mlp_shapes = {{5, 10, 10, 4}, {5, 20, 20, 4}, {5, 30, 30, 4}};
    } else {
        kan_shapes = {{2, 3, 1}, {2, 5, 1}, {2, 8, 1}};
        mlp_shapes = {{2, 5, 5, 5, 1}, {2, 8, 8, 8, 1}, {2, 10, 10, 10, 10, 10, 1}};
    }

    std::string csv = "kind,shape,param_count,mse_test\n";
    char buf[160];
    for (const auto& shape : kan_shapes) {
        ExperimentConfig c = cfg;
        c.network.shape = shape;
        auto result = train_dynamics(make_kan(c, cfg.seed), cfg.grid, ds, cfg.loss, train_config(cfg));
        const double mse = eval_test_mse(result.net, cfg.grid, ds);
        std::snprintf(buf, sizeof(buf), "kan,%s,%d,%.17g\n", shape_str(shape).c_str(),
                      result.net.param_count(), mse);
        csv += buf;
        std::cout << "kan " << shape_str(shape) << " params " << result.net.param_count()
                  << " mse " << mse << "\n";
    }
    TrainConfig mlp_train = train_config(cfg);
    mlp_train.optimizer = OptimizerKind::Adam;
    mlp_train.max_steps = std::max(cfg.steps, 5000);
    for (const auto& shape : mlp_shapes) {
        auto result = train_dynamics(make_mlp(cfg, cfg.seed, &shape), cfg.grid, ds, cfg.loss, mlp_train);
        const double mse = eval_test_mse(result.net, cfg.grid, ds);
        std::snprintf(buf, sizeof(buf), "mlp,%s,%d,%.17g\n", shape_str(shape).c_str(),
                      result.net.param_count(), mse);
        csv += buf;
        std::cout << "mlp " << shape_str(shape) << " params " << result.net.param_count()
                  << " mse " << mse << "\n";
    }
    fs::create_directories(cfg.out);
    write_text(cfg.out / "scaling.csv", csv);
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
    const Dataset ds = load_or_build_dataset(cfg);
    const std::vector<int> mlp_shape = cfg.system == "fourbus"
                                           ? std::vector<int>{5, 30, 30, 4}
                                           : std::vector<int>{2, 10, 10, 10, 10, 10, 1};
    std::string csv = "method,system,max_pct,min_pct,median_pct\n";
    char buf[160];
    const std::vector<std::pair<std::string, LossVariant>> methods = {
        {"PIKAN-I", LossVariant::I},
        {"PIKAN-II", LossVariant::II},
        {"PINN-I", LossVariant::I},
        {"PINN-II", LossVariant::II}};
    for (const auto& [method, variant] : methods) {
        LossConfig loss = cfg.loss;
        loss.variant = variant;
        ErrorSummary s;
        if (method.rfind("PIKAN", 0) == 0) {
            auto result = train_dynamics(make_kan(cfg, cfg.seed), cfg.grid, ds, loss, train_config(cfg));
            s = summarize(eval_traj_errors(result.net, cfg.grid, ds));
        } else {
            TrainConfig t = train_config(cfg);
            t.optimizer = OptimizerKind::Adam;
            t.max_steps = std::max(cfg.steps * 10, 5000);
            auto result = train_dynamics(make_mlp(cfg, cfg.seed, &mlp_shape), cfg.grid, ds, loss, t);
            s = summarize(eval_traj_errors(result.net, cfg.grid, ds));
        }
        std::snprintf(buf, sizeof(buf), "%s,%s,%.4f,%.4f,%.4f\n", method.c_str(),
                      cfg.system.c_str(), 100 * s.max, 100 * s.min, 100 * s.median);
        csv += buf;
        std::cout << method << ": median " << 100 * s.median << "% max " << 100 * s.max << "%\n";
    }
    fs::create_directories(cfg.out);
    write_text(cfg.out / "compare.csv", csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-informed Kolmogorov-Arnold networks for power-system dynamics"};
    app.require_subcommand(1);
    app.fallthrough();  // accept the global options after the subcommand too

    std::optional<std::string> config_path, preset;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    std::optional<int> steps_override;
    app.add_option("--config", config_path, "experiment config JSON (schema 1)");
    app.add_option("--preset", preset, "built-in experiment preset: smib | fourbus");
    app.add_option("--seed", seed_override, "override the config seed");
    app.add_option("--out", out_override, "output directory");
    app.add_option("--steps", steps_override, "override the optimizer step budget");

    const std::vector<std::pair<std::string, int (*)(const ExperimentConfig&)>> commands = {
        {"simulate", cmd_simulate}, {"train", cmd_train},     {"evaluate", cmd_evaluate},
        {"identify", cmd_identify}, {"scaling", cmd_scaling}, {"compare", cmd_compare}};
    const char* descriptions[] = {
        "generate the time-domain dataset and write CSV",
        "train a network on the dataset and write a checkpoint",
        "evaluate a checkpoint: per-trajectory errors and summary",
        "repeated inertia/damping identification runs",
        "network-size sweep: parameter count vs test MSE",
        "all four methods side by side, table-style summary"};
    for (size_t i = 0; i < commands.size(); ++i)
        app.add_subcommand(commands[i].first, descriptions[i]);

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = load_config(config_path, preset);
        if (seed_override) cfg.seed = *seed_override;
        if (out_override) cfg.out = *out_override;
        if (steps_override) cfg.steps = *steps_override;

        for (const auto& [name, fn] : commands)
            if (app.got_subcommand(name)) return fn(cfg);
        throw std::logic_error("no subcommand dispatched");
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 2;
    }
}
