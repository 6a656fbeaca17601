#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "asd/fft.hpp"
#include "asd/manifest.hpp"
#include "asd/synth.hpp"

using namespace asd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

SynthSpec tiny_spec(std::uint64_t seed = 1) {
    SynthSpec s;
    s.machine_types = {"alpha", "beta"};
    s.ids_per_type = 2;
    s.clip_s = 2.0;
    s.train_per_id = 10;
    s.eval_normal_per_id = 2;
    s.eval_anomaly_per_id = 2;
    s.seed = seed;
    return s;
}

std::uint64_t tree_hash(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        h = fnv1a64(fs::relative(f, root).generic_string(), h);
        h = fnv1a64(data, h);
    }
    return h;
}

// FFT-based spectral centroid oracle.
double spectral_centroid(const std::vector<float>& x, int sr) {
    std::size_t n = 1;
    while (n * 2 <= x.size()) n *= 2;
    std::vector<double> frame(x.begin(), x.begin() + std::ptrdiff_t(n));
    std::vector<double> p;
    power_spectrum(frame, p);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 1; k < p.size(); ++k) {
        const double f = double(k) * sr / double(n);
        num += f * p[k];
        den += p[k];
    }
    return num / den;
}

}  // namespace

TEST_CASE("synthetic generation: counts, shapes, manifest invariants") {
    auto dir = fresh_dir("asd_synth_tiny");
    auto spec = tiny_spec();
    Manifest m = generate_synthetic(spec, dir);
    // 2 types x 2 ids x (10 + 2 + 2)
    CHECK(m.records.size() == 56);
    CHECK(m.ids_per_type == 2);
    std::size_t n_files = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".wav") ++n_files;
    CHECK(n_files == 56);
    // clip length: 2.0 s @ 16 kHz = 32000 samples
    WavData w = read_wav(m.resolve(m.records[0]));
    CHECK(w.samples.size() == 32000);
    CHECK_NOTHROW(m.validate());
    fs::remove_all(dir);
}

TEST_CASE("synthetic generation is byte-reproducible given the seed") {
    auto d1 = fresh_dir("asd_synth_a");
    auto d2 = fresh_dir("asd_synth_b");
    generate_synthetic(tiny_spec(7), d1);
    generate_synthetic(tiny_spec(7), d2);
    CHECK(tree_hash(d1) == tree_hash(d2));
    auto d3 = fresh_dir("asd_synth_c");
    generate_synthetic(tiny_spec(8), d3);
    CHECK(tree_hash(d1) != tree_hash(d3));
    fs::remove_all(d1);
    fs::remove_all(d2);
    fs::remove_all(d3);
}

TEST_CASE("degenerate synth specs are rejected") {
    auto dir = fresh_dir("asd_synth_bad");
    SynthSpec s = tiny_spec();
    s.machine_types = {"solo"};
    CHECK_THROWS_AS(generate_synthetic(s, dir), AsdError);
    s = tiny_spec();
    s.ids_per_type = 1;
    CHECK_THROWS_AS(generate_synthetic(s, dir), AsdError);
    fs::remove_all(dir);
}

TEST_CASE("anomalous clips have a higher spectral centroid than normal ones") {
    auto dir = fresh_dir("asd_synth_cent");
    auto spec = tiny_spec();
    spec.anomaly_freq_shift_pct = 15.0;
    Manifest m = generate_synthetic(spec, dir);
    for (const auto& machine : m.machine_types)
        for (int id = 0; id < m.ids_per_type; ++id) {
            double c_norm = 0, c_anom = 0;
            int n_norm = 0, n_anom = 0;
            for (const auto& r : m.records) {
                if (r.machine_type != machine || r.product_id != id) continue;
                if (r.label == Label::normal) {
                    c_norm += spectral_centroid(read_wav(m.resolve(r)).samples, 16000);
                    ++n_norm;
                } else if (r.label == Label::anomaly) {
                    c_anom += spectral_centroid(read_wav(m.resolve(r)).samples, 16000);
                    ++n_anom;
                }
            }
            CHECK(c_anom / n_anom > c_norm / n_norm);
        }
    fs::remove_all(dir);
}

TEST_CASE("scan_corpus parses a generated tree and matches its manifest") {
    auto dir = fresh_dir("asd_scan");
    auto spec = tiny_spec(3);
    Manifest gen = generate_synthetic(spec, dir);
    Manifest scanned = scan_corpus(dir, "dcase2021", spec.seed);
    CHECK(scanned.records.size() == gen.records.size());
    CHECK(scanned.ids_per_type == gen.ids_per_type);
    // Same split assignment: both use the same seed and stratified shuffle.
    std::map<std::string, Split> by_path;
    for (const auto& r : gen.records) by_path[r.path] = r.split;
    for (const auto& r : scanned.records) CHECK(by_path.at(r.path) == r.split);
    fs::remove_all(dir);
}

TEST_CASE("scan errors: empty directory, unparseable name") {
    auto dir = fresh_dir("asd_scan_empty");
    CHECK_THROWS_WITH_AS(scan_corpus(dir, "dcase2021"), doctest::Contains("no audio files"),
                         AsdError);
    fs::create_directories(dir / "fan" / "train");
    write_wav(dir / "fan" / "train" / "mystery.wav", std::vector<float>(100, 0.0f), 16000);
    CHECK_THROWS_AS(scan_corpus(dir, "dcase2021"), AsdError);
    fs::remove_all(dir);
}

TEST_CASE("train-val split: exactly 10 percent, deterministic, stratified") {
    auto dir = fresh_dir("asd_split");
    SynthSpec spec = tiny_spec(1);
    spec.ids_per_type = 5;
    spec.train_per_id = 10;  // 100 train clips total across 10 (machine, id) groups
    Manifest m = generate_synthetic(spec, dir);
    int n_val = 0, n_train = 0;
    std::map<std::pair<std::string, int>, int> val_per_group;
    for (const auto& r : m.records) {
        if (r.split == Split::train_val) {
            ++n_val;
            ++val_per_group[{r.machine_type, r.product_id}];
        }
        if (r.split == Split::train) ++n_train;
    }
    CHECK(n_val == 10);
    CHECK(n_train == 90);
    for (const auto& [g, c] : val_per_group) CHECK(c == 1);  // 10% of each group of 10

    // Pure function of contents + seed: rescan twice.
    Manifest s1 = scan_corpus(dir, "dcase2021", 5);
    Manifest s2 = scan_corpus(dir, "dcase2021", 5);
    for (std::size_t i = 0; i < s1.records.size(); ++i)
        CHECK(s1.records[i].split == s2.records[i].split);
    fs::remove_all(dir);
}

TEST_CASE("eval id partition matches the K=6 convention") {
    CHECK(eval_split_for_id(0, 6) == Split::eval_val);
    CHECK(eval_split_for_id(2, 6) == Split::eval_val);
    CHECK(eval_split_for_id(3, 6) == Split::eval_test);
    CHECK(eval_split_for_id(5, 6) == Split::eval_test);
    // K=3: lower half to eval-val, remainder to eval-test.
    CHECK(eval_split_for_id(0, 3) == Split::eval_val);
    CHECK(eval_split_for_id(1, 3) == Split::eval_val);
    CHECK(eval_split_for_id(2, 3) == Split::eval_test);
}

TEST_CASE("manifest JSON round trip") {
    auto dir = fresh_dir("asd_manifest_rt");
    Manifest m = generate_synthetic(tiny_spec(2), dir);
    save_manifest(m, dir / "manifest.json");
    Manifest back = load_manifest(dir / "manifest.json");
    REQUIRE(back.records.size() == m.records.size());
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        CHECK(back.records[i].path == m.records[i].path);
        CHECK(back.records[i].split == m.records[i].split);
        CHECK(back.records[i].label == m.records[i].label);
    }
    CHECK(back.seed == m.seed);
    fs::remove_all(dir);
}

TEST_CASE("manifest invariant violations are rejected") {
    Manifest m;
    m.machine_types = {"alpha"};
    m.ids_per_type = 1;
    ClipRecord r;
    r.path = "x.wav";
    r.machine_type = "alpha";
    r.product_id = 0;
    r.split = Split::eval_test;
    r.label = Label::unknown;  // unknown only allowed on train side
    m.records.push_back(r);
    CHECK_THROWS_AS(m.validate(), AsdError);
}
