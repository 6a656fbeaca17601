#pragma once

// Corpus bookkeeping: clip records, split assignment, manifest JSON I/O,
// and scanning of DCASE-2021-style directory trees.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "asd/common.hpp"
#include "asd/wav.hpp"

namespace asd {

enum class Split { train, train_val, eval_val, eval_test };
enum class Label { normal, anomaly, unknown };

inline const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::train_val: return "train-val";
        case Split::eval_val: return "eval-val";
        case Split::eval_test: return "eval-test";
    }
    return "?";
}

inline const char* to_string(Label l) {
    switch (l) {
        case Label::normal: return "normal";
        case Label::anomaly: return "anomaly";
        case Label::unknown: return "unknown";
    }
    return "?";
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "train-val") return Split::train_val;
    if (s == "eval-val") return Split::eval_val;
    if (s == "eval-test") return Split::eval_test;
    throw AsdError("unknown split: " + s);
}

inline Label label_from_string(const std::string& s) {
    if (s == "normal") return Label::normal;
    if (s == "anomaly") return Label::anomaly;
    if (s == "unknown") return Label::unknown;
    throw AsdError("unknown label: " + s);
}

struct ClipRecord {
    std::string path;  // relative to manifest location
    std::string machine_type;
    int product_id = 0;
    Split split = Split::train;
    Label label = Label::unknown;
    double duration_s = 0.0;
    int sample_rate_hz = 16000;
};

struct Manifest {
    std::vector<ClipRecord> records;
    std::vector<std::string> machine_types;
    int ids_per_type = 0;
    std::uint64_t seed = 0;
    std::filesystem::path base_dir;  // directory of the manifest file; not serialized

    std::filesystem::path resolve(const ClipRecord& r) const { return base_dir / r.path; }

    void validate() const {
        for (const auto& r : records) {
            if (r.sample_rate_hz != 16000)
                throw AsdError("manifest requires 16 kHz clips, got " +
                               std::to_string(r.sample_rate_hz) + " for " + r.path);
            if (r.product_id < 0 || r.product_id >= ids_per_type)
                throw AsdError("product_id out of range for " + r.path);
            if (r.label == Label::unknown && r.split != Split::train && r.split != Split::train_val)
                throw AsdError("unknown label only allowed on train side: " + r.path);
        }
        for (const auto& m : machine_types)
            for (int k = 0; k < ids_per_type; ++k) {
                bool found = false;
                for (const auto& r : records)
                    if (r.split == Split::train && r.machine_type == m && r.product_id == k) {
                        found = true;
                        break;
                    }
                if (!found)
                    throw AsdError("no train record for " + m + " id " + std::to_string(k));
            }
    }

    std::vector<const ClipRecord*> select(const std::string& machine_type, Split split) const {
        std::vector<const ClipRecord*> out;
        for (const auto& r : records)
            if (r.machine_type == machine_type && r.split == split) out.push_back(&r);
        return out;
    }
};

// Evaluation IDs in the lower half go to eval-val, the rest to eval-test.
// For K = 6 this is the 0-2 / 3-5 split.
inline Split eval_split_for_id(int product_id, int ids_per_type) {
    return product_id < (ids_per_type + 1) / 2 ? Split::eval_val : Split::eval_test;
}

// Deterministic 90/10 train / train-val partition, stratified per
// (machine_type, product_id). Records are sorted by path before the seeded
// shuffle so the result depends only on contents and seed.
inline void assign_train_val(std::vector<ClipRecord>& records, std::uint64_t seed) {
    std::map<std::pair<std::string, int>, std::vector<ClipRecord*>> groups;
    for (auto& r : records)
        if (r.split == Split::train || r.split == Split::train_val)
            groups[{r.machine_type, r.product_id}].push_back(&r);
    for (auto& [key, grp] : groups) {
        std::sort(grp.begin(), grp.end(),
                  [](const ClipRecord* a, const ClipRecord* b) { return a->path < b->path; });
        std::vector<std::size_t> order(grp.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        auto rng = make_rng(seed, "split/" + key.first + "/" + std::to_string(key.second));
        std::shuffle(order.begin(), order.end(), rng);
        std::size_t n_val = std::size_t(std::llround(0.1 * double(grp.size())));
        if (grp.size() >= 2 && n_val == 0) n_val = 1;
        for (auto* r : grp) r->split = Split::train;
        for (std::size_t i = 0; i < n_val; ++i) grp[order[i]]->split = Split::train_val;
    }
}

inline nlohmann::json to_json(const Manifest& m) {
    nlohmann::json j;
    j["machine_types"] = m.machine_types;
    j["ids_per_type"] = m.ids_per_type;
    j["seed"] = m.seed;
    auto& arr = j["records"] = nlohmann::json::array();
    for (const auto& r : m.records) {
        arr.push_back({{"path", r.path},
                       {"machine_type", r.machine_type},
                       {"product_id", r.product_id},
                       {"split", to_string(r.split)},
                       {"label", to_string(r.label)},
                       {"duration_s", r.duration_s},
                       {"sample_rate_hz", r.sample_rate_hz}});
    }
    return j;
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    Manifest m;
    m.machine_types = j.at("machine_types").get<std::vector<std::string>>();
    m.ids_per_type = j.at("ids_per_type").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("records")) {
        ClipRecord r;
        r.path = e.at("path").get<std::string>();
        r.machine_type = e.at("machine_type").get<std::string>();
        r.product_id = e.at("product_id").get<int>();
        r.split = split_from_string(e.at("split").get<std::string>());
        r.label = label_from_string(e.at("label").get<std::string>());
        r.duration_s = e.at("duration_s").get<double>();
        r.sample_rate_hz = e.at("sample_rate_hz").get<int>();
        m.records.push_back(std::move(r));
    }
    return m;
}

inline void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw AsdError("cannot write manifest: " + path.string());
    out << to_json(m).dump(2) << "\n";
}

inline Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw AsdError("cannot read manifest: " + path.string());
    nlohmann::json j;
    in >> j;
    Manifest m = manifest_from_json(j);
    m.base_dir = path.parent_path();
    m.validate();
    return m;
}

// Parse "<machine>/<train|test>/section_NN_..._<normal|anomaly>_...wav".
// Returns false if the path does not look like an audio clip at all.
struct ParsedClip {
    std::string machine_type;
    int product_id = 0;
    bool is_train = false;
    Label label = Label::unknown;
};

inline ParsedClip parse_dcase2021_path(const std::filesystem::path& rel) {
    auto fail = [&](const std::string& why) {
        throw AsdError("unparseable clip path (" + why + "): " + rel.string());
    };
    std::vector<std::string> parts;
    for (const auto& p : rel) parts.push_back(p.string());
    if (parts.size() < 3) fail("expected <machine>/<split>/<file>");
    ParsedClip out;
    out.machine_type = parts[parts.size() - 3];
    const std::string& sub = parts[parts.size() - 2];
    if (sub == "train")
        out.is_train = true;
    else if (sub == "test" || sub == "source_test" || sub == "target_test")
        out.is_train = false;
    else
        fail("unknown subdirectory '" + sub + "'");
    const std::string name = parts.back();
    auto sec = name.find("section_");
    if (sec == std::string::npos || sec + 10 > name.size()) fail("missing section_NN");
    const std::string digits = name.substr(sec + 8, 2);
    if (!std::isdigit(static_cast<unsigned char>(digits[0])) ||
        !std::isdigit(static_cast<unsigned char>(digits[1])))
        fail("bad section number");
    out.product_id = std::stoi(digits);
    if (out.is_train) {
        out.label = Label::unknown;
    } else if (name.find("anomaly") != std::string::npos) {
        out.label = Label::anomaly;
    } else if (name.find("normal") != std::string::npos) {
        out.label = Label::normal;
    } else {
        fail("eval clip without normal/anomaly tag");
    }
    return out;
}

inline Manifest scan_corpus(const std::filesystem::path& root, const std::string& layout,
                            std::uint64_t seed = 0) {
    if (layout != "dcase2021") throw AsdError("unknown layout: " + layout);
    if (!std::filesystem::is_directory(root))
        throw AsdError("corpus root is not a directory: " + root.string());

    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
    if (files.empty()) throw AsdError("no audio files found under " + root.string());
    std::sort(files.begin(), files.end());

    Manifest m;
    m.seed = seed;
    m.base_dir = root;
    std::map<std::string, int> max_id;
    for (const auto& f : files) {
        auto rel = std::filesystem::relative(f, root);
        ParsedClip pc = parse_dcase2021_path(rel);
        WavData wav = read_wav(f);
        ClipRecord r;
        r.path = rel.generic_string();
        r.machine_type = pc.machine_type;
        r.product_id = pc.product_id;
        r.label = pc.label;
        r.split = pc.is_train ? Split::train : Split::eval_val;  // eval split fixed below
        r.duration_s = wav.duration_s();
        r.sample_rate_hz = wav.sample_rate_hz;
        m.records.push_back(std::move(r));
        max_id[pc.machine_type] = std::max(max_id[pc.machine_type], pc.product_id);
    }
    for (const auto& [machine, mid] : max_id) {
        m.machine_types.push_back(machine);
        m.ids_per_type = std::max(m.ids_per_type, mid + 1);
    }
    for (auto& r : m.records)
        if (r.split != Split::train) r.split = eval_split_for_id(r.product_id, m.ids_per_type);
    assign_train_val(m.records, seed);
    m.validate();
    return m;
}

}  // namespace asd
