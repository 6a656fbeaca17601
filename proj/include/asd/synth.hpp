#pragma once

// Desk-scale synthetic corpus generator. Each (machine_type, product_id)
// pair gets a tonal signature: a base frequency with a machine-specific
// harmonic profile and amplitude modulation, plus a noise floor. Anomalies
// (eval splits only) shift the tonal stack in frequency and/or add
// transient bursts.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "asd/common.hpp"
#include "asd/manifest.hpp"
#include "asd/wav.hpp"

namespace asd {

struct SynthSpec {
    std::vector<std::string> machine_types{"fan", "pump", "valve"};
    int ids_per_type = 3;
    double clip_s = 10.0;
    int sample_rate_hz = 16000;
    int train_per_id = 60;
    int eval_normal_per_id = 20;
    int eval_anomaly_per_id = 20;
    std::uint64_t seed = 0;
    double base_freq_hz = 180.0;     // machine m fundamental: base * type_ratio^m
    double type_ratio = 2.1;         // spacing between machine types
    double id_ratio = 1.45;          // spacing between product IDs inside a type
    double noise_floor = 0.08;       // white noise amplitude relative to tone stack
    double detune_pct = 0.6;         // per-clip random detune, +-pct
    double anomaly_freq_shift_pct = 15.0;
    bool anomaly_bursts = false;
    int n_harmonics = 4;
};

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec s;
    if (j.contains("machine_types")) s.machine_types = j["machine_types"].get<std::vector<std::string>>();
    if (j.contains("ids_per_type")) s.ids_per_type = j["ids_per_type"].get<int>();
    if (j.contains("clip_s")) s.clip_s = j["clip_s"].get<double>();
    if (j.contains("sample_rate_hz")) s.sample_rate_hz = j["sample_rate_hz"].get<int>();
    if (j.contains("train_per_id")) s.train_per_id = j["train_per_id"].get<int>();
    if (j.contains("eval_normal_per_id")) s.eval_normal_per_id = j["eval_normal_per_id"].get<int>();
    if (j.contains("eval_anomaly_per_id")) s.eval_anomaly_per_id = j["eval_anomaly_per_id"].get<int>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("base_freq_hz")) s.base_freq_hz = j["base_freq_hz"].get<double>();
    if (j.contains("type_ratio")) s.type_ratio = j["type_ratio"].get<double>();
    if (j.contains("id_ratio")) s.id_ratio = j["id_ratio"].get<double>();
    if (j.contains("noise_floor")) s.noise_floor = j["noise_floor"].get<double>();
    if (j.contains("detune_pct")) s.detune_pct = j["detune_pct"].get<double>();
    if (j.contains("anomaly_freq_shift_pct"))
        s.anomaly_freq_shift_pct = j["anomaly_freq_shift_pct"].get<double>();
    if (j.contains("anomaly_bursts")) s.anomaly_bursts = j["anomaly_bursts"].get<bool>();
    if (j.contains("n_harmonics")) s.n_harmonics = j["n_harmonics"].get<int>();
    return s;
}

inline SynthSpec load_synth_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw AsdError("cannot read synth spec: " + path.string());
    nlohmann::json j;
    in >> j;
    return synth_spec_from_json(j);
}

namespace detail {

inline std::vector<float> render_clip(const SynthSpec& spec, int machine_idx, int product_id,
                                      bool anomalous, std::mt19937_64& rng) {
    const int n = int(std::llround(spec.clip_s * spec.sample_rate_hz));
    std::vector<float> out(n);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    double f0 = spec.base_freq_hz * std::pow(spec.type_ratio, machine_idx) *
                std::pow(spec.id_ratio, product_id);
    f0 *= 1.0 + spec.detune_pct / 100.0 * (2.0 * uni(rng) - 1.0);
    if (anomalous) f0 *= 1.0 + spec.anomaly_freq_shift_pct / 100.0;

    // Machine-specific timbre: harmonic roll-off and AM rate.
    const double rolloff = 0.45 + 0.18 * machine_idx;
    const double am_hz = 1.5 + 0.9 * machine_idx;
    const double am_depth = 0.25;
    std::vector<double> phase(std::size_t(spec.n_harmonics));
    for (auto& p : phase) p = 2.0 * M_PI * uni(rng);
    const double gain = 0.85 + 0.3 * uni(rng);

    const double dt = 1.0 / spec.sample_rate_hz;
    for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        double v = 0.0, amp = 1.0;
        for (int h = 0; h < spec.n_harmonics; ++h) {
            v += amp * std::sin(2.0 * M_PI * f0 * (h + 1) * t + phase[std::size_t(h)]);
            amp *= rolloff;
        }
        v *= gain * (1.0 + am_depth * std::sin(2.0 * M_PI * am_hz * t));
        v += spec.noise_floor * gauss(rng);
        out[std::size_t(i)] = float(0.2 * v);
    }

    if (anomalous && spec.anomaly_bursts) {
        const int n_bursts = 3 + int(uni(rng) * 3);
        for (int b = 0; b < n_bursts; ++b) {
            int start = int(uni(rng) * (n - spec.sample_rate_hz / 10));
            int len = spec.sample_rate_hz / 20;  // 50 ms
            for (int i = 0; i < len; ++i) {
                double env = std::sin(M_PI * double(i) / len);
                out[std::size_t(start + i)] += float(0.3 * env * gauss(rng));
            }
        }
    }
    return out;
}

}  // namespace detail

inline Manifest generate_synthetic(const SynthSpec& spec, const std::filesystem::path& out_dir) {
    if (int(spec.machine_types.size()) < 2)
        throw AsdError("synthetic spec needs >= 2 machine types");
    if (spec.ids_per_type < 2) throw AsdError("synthetic spec needs >= 2 product IDs per type");

    Manifest m;
    m.machine_types = spec.machine_types;
    m.ids_per_type = spec.ids_per_type;
    m.seed = spec.seed;
    m.base_dir = out_dir;

    char name[64];
    auto emit = [&](int machine_idx, int id, bool train, Label label, int index) {
        const std::string& machine = spec.machine_types[std::size_t(machine_idx)];
        const char* tag = label == Label::anomaly ? "anomaly" : (train ? "train" : "normal");
        std::snprintf(name, sizeof(name), "section_%02d_%s_%s_%04d.wav", id,
                      train ? "train" : "test", tag, index);
        std::filesystem::path dir = out_dir / machine / (train ? "train" : "test");
        std::filesystem::create_directories(dir);
        // Each file gets its own RNG stream so generation order is irrelevant.
        auto rng = make_rng(spec.seed, "synth/" + machine + "/" + std::string(name));
        auto samples = detail::render_clip(spec, machine_idx, id, label == Label::anomaly, rng);
        write_wav(dir / name, samples, spec.sample_rate_hz);

        ClipRecord r;
        r.path = (std::filesystem::path(machine) / (train ? "train" : "test") / name).generic_string();
        r.machine_type = machine;
        r.product_id = id;
        r.split = train ? Split::train : eval_split_for_id(id, spec.ids_per_type);
        r.label = train ? Label::unknown : label;
        r.duration_s = spec.clip_s;
        r.sample_rate_hz = spec.sample_rate_hz;
        m.records.push_back(std::move(r));
    };

    for (int mi = 0; mi < int(spec.machine_types.size()); ++mi)
        for (int id = 0; id < spec.ids_per_type; ++id) {
            for (int i = 0; i < spec.train_per_id; ++i) emit(mi, id, true, Label::unknown, i);
            for (int i = 0; i < spec.eval_normal_per_id; ++i) emit(mi, id, false, Label::normal, i);
            for (int i = 0; i < spec.eval_anomaly_per_id; ++i) emit(mi, id, false, Label::anomaly, i);
        }

    assign_train_val(m.records, spec.seed);
    m.validate();
    return m;
}

}  // namespace asd
