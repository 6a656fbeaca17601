#pragma once

// End-to-end drivers: per-ID inlier fitting, batch scoring over manifest
// splits, metric evaluation, hyperparameter selection on eval-val, the full
// serial pipeline, and the ablation arms.

#include <atomic>
#include <map>
#include <thread>

#include "asd/config.hpp"
#include "asd/embed_export.hpp"
#include "asd/metrics.hpp"
#include "asd/scoring.hpp"
#include "asd/train.hpp"

namespace asd {

// Segment embeddings of the given records, rows ordered (record, segment).
template <class T>
Eigen::MatrixXd compute_embeddings(Model<T>& model, MelCache& cache, const Manifest& manifest,
                                   const std::vector<int>& record_indices, int S, double T_s) {
    const int dim = model.cfg.embedding_dim;
    Eigen::MatrixXd out(std::size_t(record_indices.size()) * S, dim);
    Workspace<T> ws;
    ws.bind(model);
    int row = 0;
    for (int idx : record_indices) {
        const auto& mel = cache.get(idx);
        for (const auto& seg : inference_segments(mel, cache.config(), S, T_s)) {
            out.row(row++) = embed_segment(model, seg.values, ws).transpose();
        }
    }
    return out;
}

inline std::vector<int> records_of(const Manifest& manifest, const std::string& machine,
                                   Split split, int product_id = -1) {
    std::vector<int> out;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& r = manifest.records[i];
        if (r.machine_type != machine || r.split != split) continue;
        if (product_id >= 0 && r.product_id != product_id) continue;
        out.push_back(int(i));
    }
    return out;
}

// Fit one inlier model per product ID on the configured fit set
// (train-val embeddings by default).
template <class T>
std::map<int, InlierModel> fit_inlier_models(const RunConfig& cfg, const Manifest& manifest,
                                             Model<T>& model, MelCache& cache, int p,
                                             const std::vector<int>& product_ids) {
    std::map<int, InlierModel> models;
    for (int id : product_ids) {
        std::vector<int> recs = records_of(manifest, cfg.machine_type, Split::train_val, id);
        if (cfg.inlier_fit_set == "train") {
            auto more = records_of(manifest, cfg.machine_type, Split::train, id);
            recs.insert(recs.end(), more.begin(), more.end());
        }
        if (recs.empty())
            throw AsdError("no fit clips for " + cfg.machine_type + " id " + std::to_string(id));
        Eigen::MatrixXd emb =
            compute_embeddings(model, cache, manifest, recs, cfg.segments, cfg.segment_s);
        InlierModel im;
        im.fit_set_hash = hex64(fnv1a64(emb.data(), std::size_t(emb.size()) * sizeof(double)));
        if (cfg.h_type == "gmm") {
            const int eff_p = std::min<int>(p, int(emb.rows()));
            im.model = gmm_fit(emb, eff_p, cfg.seed);
        } else {
            const int eff_k = std::min<int>(p, int(emb.rows()) - 1);
            im.model = lof_fit(emb, eff_k);
        }
        models.emplace(id, std::move(im));
    }
    return models;
}

// Score every clip of one machine type in the given split. Clips are scored
// in parallel into preassigned slots; output order follows clip_id order.
template <class T>
std::vector<ClipScore> score_split(const RunConfig& cfg, const Manifest& manifest, Model<T>& model,
                                   MelCache& cache, const std::map<int, InlierModel>& inliers,
                                   Split split, bool no_h = false) {
    std::vector<int> recs = records_of(manifest, cfg.machine_type, split);
    std::sort(recs.begin(), recs.end(), [&](int a, int b) {
        return manifest.records[std::size_t(a)].path < manifest.records[std::size_t(b)].path;
    });
    const Aggregator agg = aggregator_from_string(cfg.effective_aggregator());
    std::vector<ClipScore> out(recs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string fail_msg;
    std::mutex fail_mu;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= recs.size() || failed.load()) break;
            const auto& r = manifest.records[std::size_t(recs[i])];
            try {
                MelMatrix mel = cache.compute(recs[i]);  // eval clips are not cached
                if (no_h) {
                    out[i] = score_clip_no_h(r, mel, cache.config(), model, cfg.segments,
                                             cfg.segment_s);
                } else {
                    auto it = inliers.find(r.product_id);
                    if (it == inliers.end())
                        throw AsdError("missing inlier model for product id " +
                                       std::to_string(r.product_id));
                    out[i] = score_clip(r, mel, cache.config(), model, it->second, agg,
                                        cfg.segments, cfg.segment_s);
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fail_mu);
                failed = true;
                if (fail_msg.empty()) fail_msg = std::string(e.what()) + " (clip " + r.path + ")";
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < num_workers(); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed) throw AsdError("scoring failed: " + fail_msg);
    return out;
}

// Per-(machine, id) AUC / pAUC cells from clip scores.
inline std::vector<EvalCell> evaluate_scores(const std::vector<ClipScore>& scores,
                                             double p = 0.1) {
    std::map<std::pair<std::string, int>, std::pair<std::vector<double>, std::vector<double>>>
        groups;  // (normals, anomalies)
    for (const auto& cs : scores) {
        auto& g = groups[{cs.machine_type, cs.product_id}];
        if (cs.label == Label::normal)
            g.first.push_back(cs.aggregate);
        else if (cs.label == Label::anomaly)
            g.second.push_back(cs.aggregate);
    }
    std::vector<EvalCell> cells;
    for (const auto& [key, g] : groups) {
        if (g.first.empty() || g.second.empty()) continue;
        EvalCell c;
        c.machine_type = key.first;
        c.product_id = key.second;
        c.auc = auc(g.first, g.second);
        c.pauc = pauc(g.first, g.second, p);
        cells.push_back(std::move(c));
    }
    return cells;
}

struct MachineRunResult {
    std::filesystem::path checkpoint_path;
    int chosen_p = 0;
    std::vector<EvalCell> test_cells;
    TrainResult train;
};

// One machine type end to end: train, pick p on eval-val, score eval-test.
template <class T = float>
MachineRunResult run_machine(const RunConfig& cfg, const Manifest& manifest, MelCache& cache,
                             const TrainArm& arm) {
    MachineRunResult res;
    res.train = train_model<T>(cfg, manifest, cache, arm);
    res.checkpoint_path = res.train.checkpoint_path;
    CheckpointMeta meta;
    Model<T> model = checkpoint_load<T>(res.checkpoint_path, &meta);

    const bool no_h = arm.name == "no_h";
    std::vector<int> val_ids, test_ids;
    for (int id = 0; id < manifest.ids_per_type; ++id)
        (eval_split_for_id(id, manifest.ids_per_type) == Split::eval_val ? val_ids : test_ids)
            .push_back(id);

    res.chosen_p = cfg.h_param;
    if (!no_h) {
        // Select p on eval-val by the harmonic mean of AUC and pAUC.
        double best = -1.0;
        std::vector<int> grid = cfg.p_grid;
        if (std::find(grid.begin(), grid.end(), cfg.h_param) == grid.end())
            grid.push_back(cfg.h_param);
        std::sort(grid.begin(), grid.end());
        for (int p : grid) {
            auto models = fit_inlier_models(cfg, manifest, model, cache, p, val_ids);
            auto scores = score_split(cfg, manifest, model, cache, models, Split::eval_val);
            auto cells = evaluate_scores(scores);
            if (cells.empty()) continue;
            const double hm = harmonic_rollup(cells).overall_hm;
            if (hm > best) {
                best = hm;
                res.chosen_p = p;
            }
        }
    }

    std::map<int, InlierModel> test_models;
    if (!no_h)
        test_models = fit_inlier_models(cfg, manifest, model, cache, res.chosen_p, test_ids);
    auto scores = score_split(cfg, manifest, model, cache, test_models, Split::eval_test, no_h);

    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir / (cfg.machine_type + "_" + arm.name + "_scores.csv"));
    csv << score_table_csv(scores, cfg.segments);
    if (!no_h)
        for (const auto& [id, im] : test_models)
            save_inlier_model(im, cfg.out_dir / (cfg.machine_type + "_" + arm.name + "_id" +
                                                 std::to_string(id) + ".im"));

    res.test_cells = evaluate_scores(scores);
    return res;
}

struct PipelineResult {
    EvalReport report;
    std::map<std::string, int> chosen_p;
    nlohmann::json provenance;
};

// Full serial method over every machine type in the manifest. Machine types
// present in the hyperparameter table get their own defaults; the values in
// `base` apply otherwise.
template <class T = float>
PipelineResult run_pipeline(const RunConfig& base, const Manifest& manifest,
                            const std::string& arm_name = "proposed") {
    auto stats = fit_all_norm_stats(manifest);
    MelConfig mel_cfg;
    MelCache cache(manifest, mel_cfg, stats);

    // Cache train-side clips up front; eval clips are streamed.
    std::vector<int> train_side;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& r = manifest.records[i];
        if (r.split == Split::train || r.split == Split::train_val) train_side.push_back(int(i));
    }
    cache.precompute(train_side, num_workers());

    PipelineResult out;
    std::vector<EvalCell> all_cells;
    for (const auto& machine : manifest.machine_types) {
        RunConfig cfg = base;
        cfg.machine_type = machine;
        if (base.use_machine_defaults && machine_defaults().count(machine))
            cfg.apply_machine_defaults();
        if (base.desk) cfg.apply_desk_preset();
        TrainArm arm = TrainArm::from_name(arm_name, cfg);
        MachineRunResult res = run_machine<T>(cfg, manifest, cache, arm);
        out.chosen_p[machine] = res.chosen_p;
        all_cells.insert(all_cells.end(), res.test_cells.begin(), res.test_cells.end());

        std::ofstream log(cfg.out_dir / (machine + "_" + arm_name + "_train_log.json"));
        log << train_log_json(res.train).dump(2) << "\n";
    }
    out.report = harmonic_rollup(all_cells);
    out.provenance = {{"arm", arm_name},
                      {"seed", base.seed},
                      {"config_hash", hex64(base.hash())},
                      {"chosen_p", out.chosen_p}};
    return out;
}

}  // namespace asd
