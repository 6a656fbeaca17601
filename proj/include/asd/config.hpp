#pragma once

// Run configuration with per-machine-type defaults, JSON round-trip, and a
// stable hash embedded in every artifact.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "asd/common.hpp"
#include "asd/nnet.hpp"

namespace asd {

struct MachineDefaults {
    double lr;
    int batch_size;
    double lambda;
    std::string h_type;  // "gmm" or "lof"
    int h_param;
};

inline const std::map<std::string, MachineDefaults>& machine_defaults() {
    static const std::map<std::string, MachineDefaults> table = {
        {"fan", {0.001, 32, 0.1, "gmm", 16}},
        {"gearbox", {0.001, 128, 10.0, "gmm", 64}},
        {"pump", {0.001, 128, 10.0, "gmm", 2}},
        {"valve", {0.0005, 128, 10.0, "gmm", 32}},
        {"slider", {0.001, 128, 10.0, "gmm", 2}},
        {"ToyCar", {0.001, 128, 10.0, "lof", 16}},
        {"ToyTrain", {0.0005, 32, 0.1, "lof", 8}},
    };
    return table;
}

struct RunConfig {
    std::string machine_type;
    double lr = 0.001;
    int batch_size = 32;
    double lambda = 10.0;
    int epochs = 300;
    std::string h_type = "gmm";
    int h_param = 16;
    std::string aggregator;  // empty = paper pairing (gmm -> mean_above_median, lof -> mean)
    std::uint64_t seed = 0;
    double mixup_alpha = 0.2;
    bool mixup_enabled = true;
    int segments = 10;       // S
    double segment_s = 2.0;  // T
    std::vector<int> p_grid{2, 8, 16};
    std::string inlier_fit_set = "train-val";  // or "train" (train + train-val)
    bool desk = false;
    bool use_machine_defaults = true;

    std::filesystem::path manifest_path;
    std::filesystem::path out_dir = "out";

    EncoderConfig encoder;  // n_products filled from manifest at run time

    std::string effective_aggregator() const {
        if (!aggregator.empty()) return aggregator;
        return h_type == "gmm" ? "mean_above_median" : "mean";
    }

    void apply_machine_defaults() {
        auto it = machine_defaults().find(machine_type);
        if (it == machine_defaults().end()) return;
        lr = it->second.lr;
        batch_size = it->second.batch_size;
        lambda = it->second.lambda;
        h_type = it->second.h_type;
        h_param = it->second.h_param;
    }

    void apply_desk_preset() {
        desk = true;
        epochs = 25;
        batch_size = 32;
        encoder.conv_blocks = {{8, 3, 2}, {16, 3, 2}, {32, 3, 2}};
        encoder.head_hidden = 64;
        encoder.embedding_dim = 16;  // keeps full-covariance GMMs well-posed on few clips
        p_grid = {1, 2, 4};
        if (h_param > 4) h_param = 2;
    }

    void validate() const {
        if (machine_type.empty()) throw AsdError("config: machine_type required");
        if (batch_size < 2 || batch_size % 2 != 0)
            throw AsdError("config: batch_size must be even and >= 2");
        if (lr <= 0.0) throw AsdError("config: lr must be positive");
        if (lambda < 0.0) throw AsdError("config: lambda must be >= 0");
        if (epochs < 1) throw AsdError("config: epochs must be >= 1");
        if (h_type != "gmm" && h_type != "lof") throw AsdError("config: h_type must be gmm|lof");
        if (h_param < 1) throw AsdError("config: h_param must be >= 1");
        if (segments < 2) throw AsdError("config: need >= 2 segments");
        if (inlier_fit_set != "train-val" && inlier_fit_set != "train")
            throw AsdError("config: inlier_fit_set must be train-val|train");
        if (manifest_path.empty()) throw AsdError("config: manifest path required");
    }

    nlohmann::json to_json() const {
        return {{"machine_type", machine_type},
                {"lr", lr},
                {"batch_size", batch_size},
                {"lambda", lambda},
                {"epochs", epochs},
                {"h_type", h_type},
                {"h_param", h_param},
                {"aggregator", aggregator},
                {"seed", seed},
                {"mixup_alpha", mixup_alpha},
                {"mixup_enabled", mixup_enabled},
                {"segments", segments},
                {"segment_s", segment_s},
                {"p_grid", p_grid},
                {"inlier_fit_set", inlier_fit_set},
                {"desk", desk},
                {"use_machine_defaults", use_machine_defaults},
                {"manifest", manifest_path.generic_string()},
                {"out_dir", out_dir.generic_string()},
                {"encoder", encoder.to_json()}};
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        c.machine_type = j.value("machine_type", std::string());
        c.apply_machine_defaults();
        if (j.value("desk", false)) c.apply_desk_preset();
        if (j.contains("lr")) c.lr = j["lr"].get<double>();
        if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
        if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
        if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
        if (j.contains("h_type")) c.h_type = j["h_type"].get<std::string>();
        if (j.contains("h_param")) c.h_param = j["h_param"].get<int>();
        if (j.contains("aggregator")) c.aggregator = j["aggregator"].get<std::string>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("mixup_alpha")) c.mixup_alpha = j["mixup_alpha"].get<double>();
        if (j.contains("mixup_enabled")) c.mixup_enabled = j["mixup_enabled"].get<bool>();
        if (j.contains("segments")) c.segments = j["segments"].get<int>();
        if (j.contains("segment_s")) c.segment_s = j["segment_s"].get<double>();
        if (j.contains("p_grid")) c.p_grid = j["p_grid"].get<std::vector<int>>();
        if (j.contains("inlier_fit_set")) c.inlier_fit_set = j["inlier_fit_set"].get<std::string>();
        if (j.contains("use_machine_defaults"))
            c.use_machine_defaults = j["use_machine_defaults"].get<bool>();
        if (j.contains("manifest")) c.manifest_path = j["manifest"].get<std::string>();
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("encoder")) c.encoder = EncoderConfig::from_json(j["encoder"]);
        return c;
    }

    std::uint64_t hash() const { return fnv1a64(to_json().dump()); }
};

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw AsdError("cannot read config: " + path.string());
    nlohmann::json j;
    in >> j;
    return RunConfig::from_json(j);
}

inline int num_workers() {
    if (const char* env = std::getenv("ASD_NUM_WORKERS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 4;
}

}  // namespace asd
