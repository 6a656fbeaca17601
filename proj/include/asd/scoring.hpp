#pragma once

// Clip scoring: segment, embed, score each segment with the inlier model,
// aggregate. Aggregators: mean, max, and mean of the scores at or above the
// median (median of an even count = lower-middle order statistic).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "asd/common.hpp"
#include "asd/features.hpp"
#include "asd/inlier/io.hpp"
#include "asd/manifest.hpp"
#include "asd/nnet.hpp"

namespace asd {

enum class Aggregator { mean, max, mean_above_median };

inline Aggregator aggregator_from_string(const std::string& s) {
    if (s == "mean") return Aggregator::mean;
    if (s == "max") return Aggregator::max;
    if (s == "mean_above_median") return Aggregator::mean_above_median;
    throw AsdError("unknown aggregator: " + s);
}

inline const char* to_string(Aggregator a) {
    switch (a) {
        case Aggregator::mean: return "mean";
        case Aggregator::max: return "max";
        case Aggregator::mean_above_median: return "mean_above_median";
    }
    return "?";
}

inline double aggregate_scores(const std::vector<double>& scores, Aggregator agg) {
    if (scores.empty()) throw AsdError("aggregate of empty score vector");
    switch (agg) {
        case Aggregator::mean: {
            double s = 0.0;
            for (double v : scores) s += v;
            return s / double(scores.size());
        }
        case Aggregator::max:
            return *std::max_element(scores.begin(), scores.end());
        case Aggregator::mean_above_median: {
            std::vector<double> sorted = scores;
            std::sort(sorted.begin(), sorted.end());
            const double median = sorted[(sorted.size() - 1) / 2];  // lower-middle for even n
            double s = 0.0;
            std::size_t n = 0;
            for (double v : sorted)
                if (v >= median) {
                    s += v;
                    ++n;
                }
            return s / double(n);
        }
    }
    throw AsdError("unreachable");
}

struct ClipScore {
    std::string clip_id;
    std::string machine_type;
    int product_id = 0;
    Label label = Label::unknown;
    std::vector<double> segment_scores;
    double aggregate = 0.0;
};

template <class T>
Eigen::VectorXd embed_segment(Model<T>& model, const MelMatrix& seg, Workspace<T>& ws) {
    auto input = tensor_from_mel<T>(seg);
    const auto& out = forward_sample(model, input, ws);
    Eigen::VectorXd e(out.embedding.size());
    for (std::size_t i = 0; i < out.embedding.size(); ++i) e(int(i)) = double(out.embedding[i]);
    return e;
}

template <class T>
ClipScore score_clip(const ClipRecord& rec, const MelMatrix& clip_mel, const MelConfig& cfg,
                     Model<T>& model, const InlierModel& inlier, Aggregator agg, int S = 10,
                     double T_s = 2.0) {
    ClipScore cs;
    cs.clip_id = rec.path;
    cs.machine_type = rec.machine_type;
    cs.product_id = rec.product_id;
    cs.label = rec.label;
    Workspace<T> ws;
    ws.bind(model);
    for (const auto& seg : inference_segments(clip_mel, cfg, S, T_s, rec.path)) {
        Eigen::VectorXd e = embed_segment(model, seg.values, ws);
        cs.segment_scores.push_back(inlier.score(e));
    }
    cs.aggregate = aggregate_scores(cs.segment_scores, agg);
    return cs;
}

// Ablation scoring without an inlier model: one minus the mean predicted
// probability of the clip's own product ID across segments.
template <class T>
ClipScore score_clip_no_h(const ClipRecord& rec, const MelMatrix& clip_mel, const MelConfig& cfg,
                          Model<T>& model, int S = 10, double T_s = 2.0) {
    ClipScore cs;
    cs.clip_id = rec.path;
    cs.machine_type = rec.machine_type;
    cs.product_id = rec.product_id;
    cs.label = rec.label;
    Workspace<T> ws;
    ws.bind(model);
    for (const auto& seg : inference_segments(clip_mel, cfg, S, T_s, rec.path)) {
        auto input = tensor_from_mel<T>(seg.values);
        const auto& out = forward_sample(model, input, ws);
        cs.segment_scores.push_back(1.0 - double(out.product_probs[std::size_t(rec.product_id)]));
    }
    cs.aggregate = aggregate_scores(cs.segment_scores, Aggregator::mean);
    return cs;
}

inline std::string score_table_csv(const std::vector<ClipScore>& scores, int S) {
    std::ostringstream os;
    os << "clip_id,machine_type,product_id,label,aggregate";
    for (int i = 0; i < S; ++i) os << ",seg_" << i;
    os << "\n";
    os << std::setprecision(17);
    for (const auto& cs : scores) {
        os << cs.clip_id << "," << cs.machine_type << "," << cs.product_id << ","
           << to_string(cs.label) << "," << cs.aggregate;
        for (double v : cs.segment_scores) os << "," << v;
        os << "\n";
    }
    return os.str();
}

inline std::vector<ClipScore> parse_score_table_csv(std::istream& in) {
    std::vector<ClipScore> out;
    std::string line;
    if (!std::getline(in, line)) throw AsdError("empty score table");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        ClipScore cs;
        std::getline(ss, cs.clip_id, ',');
        std::getline(ss, cs.machine_type, ',');
        std::getline(ss, field, ',');
        cs.product_id = std::stoi(field);
        std::getline(ss, field, ',');
        cs.label = label_from_string(field);
        std::getline(ss, field, ',');
        cs.aggregate = std::stod(field);
        while (std::getline(ss, field, ',')) cs.segment_scores.push_back(std::stod(field));
        out.push_back(std::move(cs));
    }
    return out;
}

}  // namespace asd
