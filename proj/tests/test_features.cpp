#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "asd/features.hpp"
#include "asd/synth.hpp"

using namespace asd;
namespace fs = std::filesystem;

namespace {
NormStats identity_stats() {
    NormStats st;
    st.machine_type = "x";
    st.mean = 0.0;
    st.std_dev = 1.0;
    return st;
}
}  // namespace

TEST_CASE("frame count formula") {
    MelConfig cfg;
    CHECK(cfg.window_samples() == 2048);
    CHECK(cfg.hop_samples() == 256);
    CHECK(cfg.frames_for(160000) == 618);  // 10.0 s clip
    CHECK(cfg.frames_for(32000) == 118);   // 2.0 s segment
    CHECK(cfg.segment_frames() == 118);
    CHECK(cfg.frames_for(2048) == 1);
    CHECK(cfg.frames_for(2047) == 0);
    // exact for a spread of lengths
    for (std::size_t n : {2048u, 2304u, 5000u, 31999u, 32000u, 160001u})
        CHECK(cfg.frames_for(n) == int((n - 2048) / 256) + 1);
}

TEST_CASE("logmel shape and finiteness") {
    MelConfig cfg;
    std::mt19937_64 rng(1);
    std::normal_distribution<float> g(0.0f, 0.1f);
    std::vector<float> wav(160000);
    for (auto& v : wav) v = g(rng);
    MelMatrix mel = logmel(wav, cfg, identity_stats());
    CHECK(mel.frames == 618);
    CHECK(mel.n_mels == 224);
    for (float v : mel.values) CHECK(std::isfinite(v));
}

TEST_CASE("logmel rejects too-short input") {
    MelConfig cfg;
    std::vector<float> wav(2047, 0.1f);
    CHECK_THROWS_AS(logmel(wav, cfg, identity_stats()), AsdError);
}

TEST_CASE("silent input maps to log(log_floor)") {
    MelConfig cfg;
    std::vector<float> wav(32000, 0.0f);
    MelMatrix mel = logmel(wav, cfg, identity_stats());
    const float expect = float(std::log(cfg.log_floor));
    for (float v : mel.values) CHECK(v == doctest::Approx(expect));
}

TEST_CASE("pure tone peaks in the mel band nearest its frequency") {
    MelConfig cfg;
    std::vector<float> wav(32000);
    for (std::size_t i = 0; i < wav.size(); ++i)
        wav[i] = 0.5f * std::sin(2.0f * float(M_PI) * 1000.0f * float(i) / 16000.0f);
    MelMatrix mel = logmel(wav, cfg, identity_stats());
    auto fb = MelFilterbank::build(cfg);
    // oracle: band whose center frequency is nearest 1 kHz
    int expect = 0;
    for (int m = 1; m < cfg.n_mels; ++m)
        if (std::abs(fb.center_hz[std::size_t(m)] - 1000.0) <
            std::abs(fb.center_hz[std::size_t(expect)] - 1000.0))
            expect = m;
    int arg = 0;
    for (int m = 1; m < cfg.n_mels; ++m)
        if (mel.at(50, m) > mel.at(50, arg)) arg = m;
    CHECK(std::abs(arg - expect) <= 1);
}

TEST_CASE("mel filterbank coverage and non-negativity") {
    MelConfig cfg;
    auto fb = MelFilterbank::build(cfg);
    std::vector<double> coverage(std::size_t(fb.n_fft_bins), 0.0);
    for (int m = 0; m < cfg.n_mels; ++m)
        for (std::size_t k = 0; k < fb.weights[std::size_t(m)].size(); ++k) {
            CHECK(fb.weights[std::size_t(m)][k] >= 0.0);
            coverage[std::size_t(fb.first_bin[std::size_t(m)]) + k] +=
                fb.weights[std::size_t(m)][k];
        }
    const double bin_hz = 16000.0 / 2048.0;
    for (int k = 0; k < fb.n_fft_bins; ++k) {
        const double f = k * bin_hz;
        if (f > cfg.fmin_hz && f < cfg.fmax_hz) CHECK(coverage[std::size_t(k)] > 0.0);
    }
}

TEST_CASE("fit_norm_stats recovers sample statistics") {
    auto dir = fs::temp_directory_path() / "asd_norm";
    fs::remove_all(dir);
    fs::create_directories(dir / "m" / "train");
    std::mt19937_64 rng(11);
    std::normal_distribution<float> g(0.0f, 0.2f);  // int16 range limits the mean/std choice
    Manifest m;
    m.machine_types = {"m"};
    m.ids_per_type = 1;
    for (int c = 0; c < 4; ++c) {
        std::vector<float> wav(40000);
        for (auto& v : wav) v = 0.1f + g(rng);
        char name[64];
        std::snprintf(name, sizeof(name), "section_00_train_normal_%04d.wav", c);
        write_wav(dir / "m" / "train" / name, wav, 16000);
        ClipRecord r;
        r.path = (fs::path("m") / "train" / name).generic_string();
        r.machine_type = "m";
        r.product_id = 0;
        r.split = Split::train;
        r.duration_s = 2.5;
        m.records.push_back(r);
    }
    m.base_dir = dir;
    NormStats st = fit_norm_stats(m, "m");
    CHECK(st.mean == doctest::Approx(0.1).epsilon(0.01));
    CHECK(st.std_dev == doctest::Approx(0.2).epsilon(0.01));
    CHECK_THROWS_AS(fit_norm_stats(m, "nope"), AsdError);
    fs::remove_all(dir);
}

TEST_CASE("fit_norm_stats guards constant signals") {
    auto dir = fs::temp_directory_path() / "asd_norm_flat";
    fs::remove_all(dir);
    fs::create_directories(dir / "m" / "train");
    write_wav(dir / "m" / "train" / "section_00_train_normal_0000.wav",
              std::vector<float>(32000, 0.0f), 16000);
    Manifest m;
    m.machine_types = {"m"};
    m.ids_per_type = 1;
    ClipRecord r;
    r.path = "m/train/section_00_train_normal_0000.wav";
    r.machine_type = "m";
    r.product_id = 0;
    r.split = Split::train;
    m.records.push_back(r);
    m.base_dir = dir;
    NormStats st = fit_norm_stats(m, "m");
    CHECK(st.degenerate);
    CHECK(st.std_dev == doctest::Approx(1e-8));
    fs::remove_all(dir);
}

TEST_CASE("alternating +-1 signal has mean 0 and std 1") {
    auto dir = fs::temp_directory_path() / "asd_norm_alt";
    fs::remove_all(dir);
    fs::create_directories(dir / "m" / "train");
    std::vector<float> wav(32000);
    for (std::size_t i = 0; i < wav.size(); ++i) wav[i] = (i % 2 == 0) ? 1.0f : -1.0f;
    write_wav(dir / "m" / "train" / "section_00_train_normal_0000.wav", wav, 16000);
    Manifest m;
    m.machine_types = {"m"};
    m.ids_per_type = 1;
    ClipRecord r;
    r.path = "m/train/section_00_train_normal_0000.wav";
    r.machine_type = "m";
    r.product_id = 0;
    r.split = Split::train;
    m.records.push_back(r);
    m.base_dir = dir;
    NormStats st = fit_norm_stats(m, "m");
    CHECK(st.mean == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(st.std_dev == doctest::Approx(1.0).epsilon(1e-3));
    fs::remove_all(dir);
}

TEST_CASE("inference segments: even spacing, endpoints, coverage") {
    MelConfig cfg;
    MelMatrix mel;
    mel.frames = 618;
    mel.n_mels = 224;
    mel.values.resize(std::size_t(618) * 224, 0.0f);

    auto segs = inference_segments(mel, cfg, 10, 2.0);
    REQUIRE(segs.size() == 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(segs[std::size_t(i)].start_s == doctest::Approx(i * 8.0 / 9.0).epsilon(1e-12));
        CHECK(segs[std::size_t(i)].values.frames == 118);
    }
    CHECK(segs.front().start_s == 0.0);
    CHECK(segs.back().start_s == doctest::Approx(8.0));

    auto two = inference_segments(mel, cfg, 2, 2.0);
    CHECK(two[0].start_s == 0.0);
    CHECK(two[1].start_s == doctest::Approx(8.0));

    CHECK_THROWS_AS(inference_segments(mel, cfg, 1, 2.0), AsdError);
    CHECK_THROWS_AS(inference_segments(mel, cfg, 10, 11.0), AsdError);
}

TEST_CASE("random crops: determinism, degenerate clip, uniformity") {
    MelConfig cfg;
    MelMatrix mel;
    mel.frames = 618;
    mel.n_mels = 4;
    mel.values.resize(std::size_t(618) * 4, 0.0f);

    auto r1 = make_rng(5, "crop");
    auto r2 = make_rng(5, "crop");
    for (int i = 0; i < 50; ++i) {
        auto a = random_crop(mel, cfg, 2.0, r1);
        auto b = random_crop(mel, cfg, 2.0, r2);
        CHECK(a.start_s == b.start_s);
    }

    MelMatrix exact;
    exact.frames = 118;
    exact.n_mels = 4;
    exact.values.resize(std::size_t(118) * 4, 0.0f);
    auto rng = make_rng(1, "crop2");
    for (int i = 0; i < 10; ++i) CHECK(random_crop(exact, cfg, 2.0, rng).start_s == 0.0);

    MelMatrix tiny;
    tiny.frames = 117;
    tiny.n_mels = 4;
    tiny.values.resize(std::size_t(117) * 4, 0.0f);
    CHECK_THROWS_AS(random_crop(tiny, cfg, 2.0, rng), AsdError);

    // KS test against uniform on [0, max_start] at alpha = 0.01.
    const int n = 10000;
    std::vector<double> starts;
    auto rk = make_rng(9, "crop-ks");
    for (int i = 0; i < n; ++i) starts.push_back(random_crop(mel, cfg, 2.0, rk).start_s);
    std::sort(starts.begin(), starts.end());
    const double max_start = 500.0 * cfg.hop_samples() / cfg.sample_rate_hz;  // 8.0 s
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = starts[std::size_t(i)] / max_start;
        d = std::max(d, std::abs(f - double(i + 1) / n));
        d = std::max(d, std::abs(f - double(i) / n));
    }
    const double crit = 1.63 / std::sqrt(double(n));  // alpha = 0.01
    CHECK(d < crit);
}
