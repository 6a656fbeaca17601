#pragma once

// Dump per-segment embeddings with labels as CSV for external projection
// (t-SNE etc.) and for inlier-model debugging.

#include <fstream>
#include <iomanip>

#include "asd/manifest.hpp"
#include "asd/nnet.hpp"
#include "asd/scoring.hpp"
#include "asd/train.hpp"

namespace asd {

template <class T>
std::size_t export_embeddings(const Manifest& manifest, const std::vector<int>& record_indices,
                              Model<T>& model, MelCache& cache, int S, double T_s,
                              const std::filesystem::path& out_path) {
    std::ofstream out(out_path);
    if (!out) throw AsdError("cannot write embedding export: " + out_path.string());
    const int dim = model.cfg.embedding_dim;
    out << "clip_id,segment,machine_type,product_id,label";
    for (int i = 0; i < dim; ++i) out << ",e" << i;
    out << "\n";
    out << std::setprecision(9);

    std::vector<int> ordered = record_indices;
    std::sort(ordered.begin(), ordered.end(), [&](int a, int b) {
        return manifest.records[std::size_t(a)].path < manifest.records[std::size_t(b)].path;
    });

    Workspace<T> ws;
    ws.bind(model);
    std::size_t rows = 0;
    for (int idx : ordered) {
        const auto& r = manifest.records[std::size_t(idx)];
        MelMatrix mel = cache.compute(idx);
        int seg_idx = 0;
        for (const auto& seg : inference_segments(mel, cache.config(), S, T_s, r.path)) {
            Eigen::VectorXd e = embed_segment(model, seg.values, ws);
            out << r.path << "," << seg_idx++ << "," << r.machine_type << "," << r.product_id
                << "," << to_string(r.label);
            for (int i = 0; i < dim; ++i) out << "," << e(i);
            out << "\n";
            ++rows;
        }
    }
    if (!out) throw AsdError("embedding export write failed: " + out_path.string());
    return rows;
}

}  // namespace asd
