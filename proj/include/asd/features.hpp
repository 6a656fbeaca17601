#pragma once

// Feature frontend: per-machine amplitude normalization, log-mel
// spectrograms (Hann / power / HTK-mel, no area normalization), random
// training crops and the evenly spaced S-segment inference grid.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "asd/common.hpp"
#include "asd/fft.hpp"
#include "asd/manifest.hpp"

namespace asd {

struct NormStats {
    std::string machine_type;
    double mean = 0.0;
    double std_dev = 1.0;
    bool degenerate = false;  // std clamped to the floor
};

struct MelConfig {
    int sample_rate_hz = 16000;
    int window_ms = 128;
    int hop_ms = 16;
    int n_mels = 224;
    double fmin_hz = 50.0;
    double fmax_hz = 7800.0;
    double segment_s = 2.0;
    double log_floor = 1e-10;

    int window_samples() const { return sample_rate_hz * window_ms / 1000; }  // 2048
    int hop_samples() const { return sample_rate_hz * hop_ms / 1000; }        // 256
    int frames_for(std::size_t n_samples) const {
        if (int(n_samples) < window_samples()) return 0;
        return int((n_samples - std::size_t(window_samples())) / std::size_t(hop_samples())) + 1;
    }
    int segment_frames() const {
        return frames_for(std::size_t(std::llround(segment_s * sample_rate_hz)));  // 118
    }
    void check() const {
        if (!(fmin_hz < fmax_hz && fmax_hz <= sample_rate_hz / 2.0))
            throw AsdError("mel config: need fmin < fmax <= nyquist");
        if (window_samples() < hop_samples()) throw AsdError("mel config: window < hop");
    }
};

// Full-clip or segment log-mel matrix, row-major frames x n_mels.
struct MelMatrix {
    int frames = 0;
    int n_mels = 0;
    std::vector<float> values;

    float& at(int f, int m) { return values[std::size_t(f) * n_mels + m]; }
    float at(int f, int m) const { return values[std::size_t(f) * n_mels + m]; }
};

struct FeatureSegment {
    MelMatrix values;
    std::string clip_id;
    double start_s = 0.0;
};

inline NormStats fit_norm_stats(const Manifest& manifest, const std::string& machine_type) {
    // Streaming moments over the concatenated train-side amplitudes.
    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (const auto& r : manifest.records) {
        if (r.machine_type != machine_type) continue;
        if (r.split != Split::train && r.split != Split::train_val) continue;
        WavData wav = read_wav(manifest.resolve(r));
        for (float s : wav.samples) {
            sum += s;
            sumsq += double(s) * s;
        }
        count += wav.samples.size();
    }
    if (count == 0) throw AsdError("no train clips for machine type " + machine_type);
    NormStats st;
    st.machine_type = machine_type;
    st.mean = sum / double(count);
    double var = sumsq / double(count) - st.mean * st.mean;
    st.std_dev = std::sqrt(std::max(var, 0.0));
    if (st.std_dev < 1e-8) {
        st.std_dev = 1e-8;
        st.degenerate = true;
    }
    return st;
}

inline nlohmann::json to_json(const NormStats& st) {
    return {{"machine_type", st.machine_type},
            {"mean", st.mean},
            {"std", st.std_dev},
            {"degenerate", st.degenerate}};
}

inline NormStats norm_stats_from_json(const nlohmann::json& j) {
    NormStats st;
    st.machine_type = j.at("machine_type").get<std::string>();
    st.mean = j.at("mean").get<double>();
    st.std_dev = j.at("std").get<double>();
    st.degenerate = j.value("degenerate", false);
    return st;
}

namespace detail {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace detail

// Triangular HTK-mel filterbank, no area normalization.
// Returned as n_mels rows of (first_bin, weights...).
struct MelFilterbank {
    int n_fft_bins = 0;
    std::vector<int> first_bin;
    std::vector<std::vector<double>> weights;  // per mel band
    std::vector<double> center_hz;

    static MelFilterbank build(const MelConfig& cfg) {
        cfg.check();
        MelFilterbank fb;
        const int n_fft = cfg.window_samples();
        fb.n_fft_bins = n_fft / 2 + 1;
        const double mel_lo = detail::hz_to_mel(cfg.fmin_hz);
        const double mel_hi = detail::hz_to_mel(cfg.fmax_hz);
        std::vector<double> pts(std::size_t(cfg.n_mels) + 2);
        for (int i = 0; i < cfg.n_mels + 2; ++i)
            pts[std::size_t(i)] =
                detail::mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / double(cfg.n_mels + 1));
        const double bin_hz = double(cfg.sample_rate_hz) / n_fft;
        fb.first_bin.resize(std::size_t(cfg.n_mels));
        fb.weights.resize(std::size_t(cfg.n_mels));
        fb.center_hz.resize(std::size_t(cfg.n_mels));
        for (int m = 0; m < cfg.n_mels; ++m) {
            const double f0 = pts[std::size_t(m)], f1 = pts[std::size_t(m) + 1],
                         f2 = pts[std::size_t(m) + 2];
            fb.center_hz[std::size_t(m)] = f1;
            int lo = std::max(0, int(std::ceil(f0 / bin_hz)));
            int hi = std::min(fb.n_fft_bins - 1, int(std::floor(f2 / bin_hz)));
            fb.first_bin[std::size_t(m)] = lo;
            auto& w = fb.weights[std::size_t(m)];
            for (int k = lo; k <= hi; ++k) {
                const double f = k * bin_hz;
                double v = f < f1 ? (f - f0) / (f1 - f0) : (f2 - f) / (f2 - f1);
                w.push_back(std::max(0.0, v));
            }
        }
        return fb;
    }
};

inline MelMatrix logmel(const std::vector<float>& waveform, const MelConfig& cfg,
                        const NormStats& stats) {
    cfg.check();
    const int win = cfg.window_samples();
    const int hop = cfg.hop_samples();
    if (int(waveform.size()) < win)
        throw AsdError("waveform shorter than one analysis window");
    const int frames = cfg.frames_for(waveform.size());

    static thread_local MelFilterbank fb;
    static thread_local int fb_key = -1;
    const int key = cfg.n_mels * 1000003 + win;
    if (fb_key != key) {
        fb = MelFilterbank::build(cfg);
        fb_key = key;
    }

    std::vector<double> hann(static_cast<std::size_t>(win), 0.0);
    for (int i = 0; i < win; ++i) hann[std::size_t(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / win);

    MelMatrix out;
    out.frames = frames;
    out.n_mels = cfg.n_mels;
    out.values.resize(std::size_t(frames) * std::size_t(cfg.n_mels));

    std::vector<double> frame(static_cast<std::size_t>(win), 0.0), power;
    for (int f = 0; f < frames; ++f) {
        const std::size_t off = std::size_t(f) * std::size_t(hop);
        for (int i = 0; i < win; ++i)
            frame[std::size_t(i)] =
                (double(waveform[off + std::size_t(i)]) - stats.mean) / stats.std_dev *
                hann[std::size_t(i)];
        power_spectrum(frame, power);
        for (int m = 0; m < cfg.n_mels; ++m) {
            double acc = 0.0;
            const auto& w = fb.weights[std::size_t(m)];
            const int lo = fb.first_bin[std::size_t(m)];
            for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * power[std::size_t(lo) + k];
            out.at(f, m) = float(std::log(std::max(acc, cfg.log_floor)));
        }
    }
    return out;
}

inline MelMatrix slice_frames(const MelMatrix& mel, int start_frame, int n_frames) {
    if (start_frame < 0 || start_frame + n_frames > mel.frames)
        throw AsdError("mel slice out of range");
    MelMatrix out;
    out.frames = n_frames;
    out.n_mels = mel.n_mels;
    out.values.assign(mel.values.begin() + std::size_t(start_frame) * mel.n_mels,
                      mel.values.begin() + std::size_t(start_frame + n_frames) * mel.n_mels);
    return out;
}

// S segments of T_s seconds with evenly spaced starts: the first at 0, the
// last ending at the clip end, overlap allowed.
inline std::vector<FeatureSegment> inference_segments(const MelMatrix& clip_mel,
                                                      const MelConfig& cfg, int S, double T_s,
                                                      const std::string& clip_id = {}) {
    if (S < 2) throw AsdError("need S >= 2 segments");
    const int seg_frames = cfg.frames_for(std::size_t(std::llround(T_s * cfg.sample_rate_hz)));
    if (seg_frames <= 0 || seg_frames > clip_mel.frames)
        throw AsdError("segment length exceeds clip duration");
    const int max_start = clip_mel.frames - seg_frames;
    const double duration_s =
        (double(clip_mel.frames - 1) * cfg.hop_samples() + cfg.window_samples()) /
        double(cfg.sample_rate_hz);
    std::vector<FeatureSegment> out;
    out.reserve(std::size_t(S));
    for (int i = 0; i < S; ++i) {
        FeatureSegment seg;
        seg.clip_id = clip_id;
        seg.start_s = double(i) * (duration_s - T_s) / double(S - 1);
        int start = int(std::llround(double(i) * max_start / double(S - 1)));
        seg.values = slice_frames(clip_mel, start, seg_frames);
        out.push_back(std::move(seg));
    }
    return out;
}

// Uniform random crop aligned to hop boundaries.
inline FeatureSegment random_crop(const MelMatrix& clip_mel, const MelConfig& cfg, double T_s,
                                  std::mt19937_64& rng, const std::string& clip_id = {}) {
    const int seg_frames = cfg.frames_for(std::size_t(std::llround(T_s * cfg.sample_rate_hz)));
    if (seg_frames <= 0 || seg_frames > clip_mel.frames)
        throw AsdError("clip shorter than crop length");
    const int max_start = clip_mel.frames - seg_frames;
    std::uniform_int_distribution<int> dist(0, max_start);
    const int start = dist(rng);
    FeatureSegment seg;
    seg.clip_id = clip_id;
    seg.start_s = double(start) * cfg.hop_samples() / cfg.sample_rate_hz;
    seg.values = slice_frames(clip_mel, start, seg_frames);
    return seg;
}

}  // namespace asd
