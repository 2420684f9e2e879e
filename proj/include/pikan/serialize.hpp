#pragma once

// JSON persistence: grid model configs and network checkpoints. Doubles are
// emitted as shortest round-trip decimals (nlohmann), so finite values
// survive a save/load cycle bit-exactly.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pikan/grid.hpp"
#include "pikan/kan.hpp"
#include "pikan/mlp.hpp"

namespace pikan {

using nlohmann::json;

// --- grid model ---------------------------------------------------------------
// {"buses": [{"kind", "M", "D", "Pm", "Pm_min", "Pm_max"}...],
//  "lines": [{"i", "j", "B"}...], "T": horizon}; bus indices are 0-based.

inline json grid_to_json(const GridModel& model) {
    json buses = json::array();
    for (int b = 0; b < model.n_bus(); ++b) {
        buses.push_back({{"kind", to_string(model.kinds[static_cast<size_t>(b)])},
                         {"M", model.M[static_cast<size_t>(b)]},
                         {"D", model.D[static_cast<size_t>(b)]},
                         {"Pm", model.pm[static_cast<size_t>(b)]},
                         {"Pm_min", model.pm_min[static_cast<size_t>(b)]},
                         {"Pm_max", model.pm_max[static_cast<size_t>(b)]}});
    }
    json lines = json::array();
    for (int i = 0; i < model.n_bus(); ++i)
        for (int j = i + 1; j < model.n_bus(); ++j)
            if (model.B(i, j) != 0.0) lines.push_back({{"i", i}, {"j", j}, {"B", model.B(i, j)}});
    return json{{"buses", buses}, {"lines", lines}, {"T", model.horizon}};
}

inline GridModel grid_from_json(const json& j) {
    GridModel model;
    if (!j.contains("buses") || !j["buses"].is_array() || j["buses"].empty())
        throw std::invalid_argument("grid config: missing or empty 'buses'");
    const auto& buses = j["buses"];
    const int n = static_cast<int>(buses.size());
    model.B = Matrix(n, n, 0.0);
    for (const auto& bus : buses) {
        const std::string kind = bus.at("kind").get<std::string>();
        if (kind == "generator")
            model.kinds.push_back(BusKind::Generator);
        else if (kind == "load")
            model.kinds.push_back(BusKind::LoadFreqDep);
        else if (kind == "infinite")
            model.kinds.push_back(BusKind::InfiniteBus);
        else
            throw std::invalid_argument("grid config: unknown bus kind '" + kind + "'");
        model.M.push_back(bus.value("M", 0.0));
        model.D.push_back(bus.value("D", 0.0));
        model.pm.push_back(bus.value("Pm", 0.0));
        model.pm_min.push_back(bus.value("Pm_min", 0.0));
        model.pm_max.push_back(bus.value("Pm_max", 0.0));
    }
    for (const auto& line : j.value("lines", json::array())) {
        const int i = line.at("i").get<int>();
        const int jj = line.at("j").get<int>();
        if (i < 0 || i >= n || jj < 0 || jj >= n || i == jj)
            throw std::invalid_argument("grid config: line endpoints out of range");
        const double b = line.at("B").get<double>();
        model.B(i, jj) = b;
        model.B(jj, i) = b;
    }
    model.horizon = j.at("T").get<double>();
    model.validate();
    return model;
}

// --- affine maps ---------------------------------------------------------------

inline json affine_to_json(const AffineMap& m) {
    return json{{"scale", m.scale}, {"offset", m.offset}};
}

inline AffineMap affine_from_json(const json& j) {
    AffineMap m;
    m.scale = j.at("scale").get<std::vector<double>>();
    m.offset = j.at("offset").get<std::vector<double>>();
    if (m.scale.size() != m.offset.size())
        throw std::invalid_argument("affine: scale/offset length mismatch");
    return m;
}

// --- network checkpoints --------------------------------------------------------
// KAN: {"kind":"kan","shape",[-],"k_b","G","domain":[lo,hi],"seed","train_w",
//       "params":[...],"affines":{"input":{...},"output":{...}}}
// MLP: {"kind":"mlp","widths":[...],"seed","params":[...],"affines":{...}}

inline json checkpoint_to_json(const KanNetwork& net) {
    return json{{"kind", "kan"},
                {"shape", net.shape()},
                {"k_b", net.spec().order()},
                {"G", net.spec().intervals()},
                {"domain", {net.spec().lo(), net.spec().hi()}},
                {"seed", net.init_seed},
                {"train_w", net.train_w},
                {"params", net.flatten()},
                {"affines", {{"input", affine_to_json(net.input_affine)},
                             {"output", affine_to_json(net.output_affine)}}}};
}

inline json checkpoint_to_json(const MlpNetwork& net) {
    return json{{"kind", "mlp"},
                {"widths", net.widths()},
                {"seed", net.init_seed},
                {"params", net.flatten()},
                {"affines", {{"input", affine_to_json(net.input_affine)},
                             {"output", affine_to_json(net.output_affine)}}}};
}

inline KanNetwork kan_from_json(const json& j) {
    if (j.at("kind").get<std::string>() != "kan")
        throw std::invalid_argument("checkpoint: expected kind 'kan'");
    const auto domain = j.at("domain").get<std::vector<double>>();
    if (domain.size() != 2) throw std::invalid_argument("checkpoint: bad domain");
    KanNetwork net(j.at("shape").get<std::vector<int>>(),
                   SplineSpec(j.at("k_b").get<int>(), j.at("G").get<int>(), domain[0], domain[1]));
    net.init_seed = j.value("seed", 0ULL);
    net.train_w = j.value("train_w", true);
    net.unflatten(j.at("params").get<std::vector<double>>());
    net.input_affine = affine_from_json(j.at("affines").at("input"));
    net.output_affine = affine_from_json(j.at("affines").at("output"));
    if (net.input_affine.size() != net.n_inputs() || net.output_affine.size() != net.n_outputs())
        throw std::invalid_argument("checkpoint: affine sizes do not match the network");
    return net;
}

inline MlpNetwork mlp_from_json(const json& j) {
    if (j.at("kind").get<std::string>() != "mlp")
        throw std::invalid_argument("checkpoint: expected kind 'mlp'");
    MlpNetwork net(j.at("widths").get<std::vector<int>>());
    net.init_seed = j.value("seed", 0ULL);
    net.unflatten(j.at("params").get<std::vector<double>>());
    net.input_affine = affine_from_json(j.at("affines").at("input"));
    net.output_affine = affine_from_json(j.at("affines").at("output"));
    if (net.input_affine.size() != net.n_inputs() || net.output_affine.size() != net.n_outputs())
        throw std::invalid_argument("checkpoint: affine sizes do not match the network");
    return net;
}

// --- file helpers ----------------------------------------------------------------

inline void write_json(const json& j, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_json: cannot open " + path);
    f << j.dump(2) << '\n';
    if (!f) throw std::runtime_error("write_json: write failed for " + path);
}

inline json read_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_json: cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("read_json: " + path + ": " + e.what());
    }
    return j;
}

}  // namespace pikan
