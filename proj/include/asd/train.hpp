#pragma once

// Training loop: 1:1 sampler -> random crops -> mixup -> forward -> the two
// BCE losses -> AdamW step, with per-epoch validation loss tracking and
// best-checkpoint selection.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "asd/config.hpp"
#include "asd/features.hpp"
#include "asd/manifest.hpp"
#include "asd/nnet.hpp"
#include "asd/objective.hpp"

namespace asd {

inline std::map<std::string, NormStats> fit_all_norm_stats(const Manifest& manifest) {
    std::map<std::string, NormStats> stats;
    for (const auto& m : manifest.machine_types) stats[m] = fit_norm_stats(manifest, m);
    return stats;
}

// Full-clip log-mel cache keyed by manifest record index. Each clip is
// normalized with its own machine type's statistics.
class MelCache {
public:
    MelCache(const Manifest& manifest, const MelConfig& cfg,
             std::map<std::string, NormStats> stats)
        : manifest_(&manifest), cfg_(cfg), stats_(std::move(stats)),
          cache_(manifest.records.size()) {}

    const MelConfig& config() const { return cfg_; }
    const NormStats& stats_for(const std::string& machine) const {
        auto it = stats_.find(machine);
        if (it == stats_.end()) throw AsdError("no norm stats for " + machine);
        return it->second;
    }

    const MelMatrix& get(int rec_idx) {
        auto& slot = cache_[std::size_t(rec_idx)];
        if (!slot) slot = std::make_unique<MelMatrix>(compute(rec_idx));
        return *slot;
    }

    MelMatrix compute(int rec_idx) const {
        const auto& r = manifest_->records[std::size_t(rec_idx)];
        WavData wav = read_wav(manifest_->resolve(r));
        return logmel(wav.samples, cfg_, stats_for(r.machine_type));
    }

    void precompute(const std::vector<int>& indices, int workers) {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= indices.size()) break;
                auto& slot = cache_[std::size_t(indices[i])];
                if (!slot) slot = std::make_unique<MelMatrix>(compute(indices[i]));
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::max(1, workers); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    void drop(int rec_idx) { cache_[std::size_t(rec_idx)].reset(); }

private:
    const Manifest* manifest_;
    MelConfig cfg_;
    std::map<std::string, NormStats> stats_;
    std::vector<std::unique_ptr<MelMatrix>> cache_;
};

struct TrainArm {
    std::string name = "proposed";
    bool use_mixup = true;
    bool use_machine_loss = true;  // false = product-IDs-only ablation

    static TrainArm from_name(const std::string& n, const RunConfig& cfg) {
        TrainArm a;
        a.name = n;
        a.use_mixup = cfg.mixup_enabled;
        if (n == "proposed" || n == "no_h") {
            // no_h shares the proposed training; only scoring differs
        } else if (n == "no_mixup") {
            a.use_mixup = false;
        } else if (n == "ids_only") {
            a.use_machine_loss = false;
        } else {
            throw AsdError("unknown ablation arm: " + n);
        }
        return a;
    }
};

// A batch ready for the network: cropped features plus labels.
struct AssembledBatch {
    std::vector<FeatureSegment> features;
    BatchLabels labels;
};

inline AssembledBatch assemble_batch(const Manifest& manifest, MelCache& cache,
                                     const std::vector<int>& record_indices,
                                     const std::string& target_machine, int n_products,
                                     double T_s, std::mt19937_64& rng) {
    AssembledBatch b;
    for (int idx : record_indices) {
        const auto& r = manifest.records[std::size_t(idx)];
        b.features.push_back(random_crop(cache.get(idx), cache.config(), T_s, rng, r.path));
        const bool target = r.machine_type == target_machine;
        b.labels.t.push_back(target ? 1.0 : 0.0);
        std::vector<double> y(std::size_t(n_products), 0.0);
        if (target) y[std::size_t(r.product_id)] = 1.0;
        b.labels.y.push_back(std::move(y));
        b.labels.lambda_mix.push_back(1.0);
    }
    return b;
}

// Shuffle-against-itself pairing for within-batch mixup.
inline void apply_within_batch_mixup(AssembledBatch& batch, double alpha, std::mt19937_64& rng) {
    const std::size_t N = batch.features.size();
    std::vector<std::size_t> perm(N);
    for (std::size_t i = 0; i < N; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<FeatureSegment> partner_f(N);
    BatchLabels partner_l;
    partner_l.t.resize(N);
    partner_l.y.resize(N);
    partner_l.lambda_mix.assign(N, 1.0);
    for (std::size_t i = 0; i < N; ++i) {
        partner_f[i] = batch.features[perm[i]];
        partner_l.t[i] = batch.labels.t[perm[i]];
        partner_l.y[i] = batch.labels.y[perm[i]];
    }
    mixup(batch.features, partner_f, batch.labels, partner_l, alpha, rng);
}

struct StepLog {
    int step = 0;
    double lp = 0.0, lm = 0.0, total = 0.0, lr = 0.0;
};

struct EpochLog {
    int epoch = 0;
    double train_total = 0.0;
    double val_lp = 0.0, val_lm = 0.0, val_total = 0.0;
};

struct TrainResult {
    std::filesystem::path checkpoint_path;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    std::vector<StepLog> steps;
    std::vector<EpochLog> epochs;
};

namespace detail {

// Batch forward/backward across worker threads. Per-thread gradients are
// reduced in thread order so the result does not depend on scheduling.
template <class T>
struct BatchRunner {
    Model<T>* model;
    std::vector<Workspace<T>> workspaces;

    explicit BatchRunner(Model<T>& m, int workers) : model(&m) {
        workspaces.resize(std::size_t(std::max(1, workers)));
        for (auto& ws : workspaces) ws.bind(m);
    }

    // Outputs per sample; grads accumulated if `backward` produces nonzero.
    struct Outputs {
        std::vector<std::vector<double>> product_probs;
        std::vector<double> machine_probs;
    };

    Outputs run(const std::vector<FeatureSegment>& features, const BatchLabels* labels,
                double lambda, bool machine_loss, Grads<T>* out_grads) {
        const std::size_t N = features.size();
        Outputs out;
        out.product_probs.resize(N);
        out.machine_probs.resize(N);
        const std::size_t W = workspaces.size();
        const double sum_t = labels ? labels->sum_t() : 0.0;
        const int K = model->cfg.n_products;
        auto work = [&](std::size_t w) {
            auto& ws = workspaces[w];
            ws.grads.zero();
            for (std::size_t i = w; i < N; i += W) {
                auto input = tensor_from_mel<T>(features[i].values);
                const auto& fo = forward_sample(*model, input, ws);
                out.product_probs[i].assign(fo.product_probs.begin(), fo.product_probs.end());
                out.machine_probs[i] = double(fo.machine_prob);
                if (!out_grads) continue;
                std::vector<T> d_pl(std::size_t(K), T(0));
                if (labels->t[i] > 0.0 && sum_t > 0.0 && lambda > 0.0) {
                    const double c = lambda * labels->t[i] / (double(K) * sum_t);
                    for (int k = 0; k < K; ++k)
                        d_pl[std::size_t(k)] =
                            T(c * (double(fo.product_probs[std::size_t(k)]) - labels->y[i][std::size_t(k)]));
                }
                T d_ml = T(0);
                if (machine_loss)
                    d_ml = T((out.machine_probs[i] - labels->t[i]) / double(N));
                backward_sample(*model, ws, d_pl, d_ml);
            }
        };
        if (W == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < W; ++w) pool.emplace_back(work, w);
            for (auto& t : pool) t.join();
        }
        if (out_grads) {
            out_grads->zero();
            for (auto& ws : workspaces) out_grads->add(ws.grads);
        }
        return out;
    }
};

}  // namespace detail

template <class T = float>
TrainResult train_model(const RunConfig& cfg, const Manifest& manifest, MelCache& cache,
                        const TrainArm& arm) {
    cfg.validate();
    EncoderConfig enc = cfg.encoder;
    enc.n_products = manifest.ids_per_type;
    Model<T> model = Model<T>::init(enc, cfg.seed);

    BatchSampler sampler(manifest, cfg.machine_type, cfg.batch_size, cfg.seed);
    const int steps_per_epoch = sampler.batches_per_epoch();
    const int total_steps = steps_per_epoch * cfg.epochs;

    AdamW<T> optim;
    optim.schedule.max_lr = cfg.lr;
    optim.schedule.total_steps = total_steps;

    auto rng = make_rng(cfg.seed, "train/" + cfg.machine_type + "/" + arm.name);
    const int workers = num_workers();
    detail::BatchRunner<T> runner(model, workers);
    Grads<T> grads = Grads<T>::like(model);

    // Deterministic validation set: all target train-val clips plus an equal
    // number of non-target train-val clips, center-cropped.
    std::vector<int> val_target, val_other;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& r = manifest.records[i];
        if (r.split != Split::train_val) continue;
        (r.machine_type == cfg.machine_type ? val_target : val_other).push_back(int(i));
    }
    if (val_target.empty()) throw AsdError("no target train-val clips for validation");
    std::vector<int> val_indices = val_target;
    for (std::size_t i = 0; i < val_target.size() && !val_other.empty(); ++i)
        val_indices.push_back(val_other[i % val_other.size()]);

    auto make_val_batch = [&]() {
        AssembledBatch b;
        for (int idx : val_indices) {
            const auto& r = manifest.records[std::size_t(idx)];
            const auto& mel = cache.get(idx);
            const int seg_frames = cache.config().segment_frames();
            const int start = (mel.frames - seg_frames) / 2;
            FeatureSegment seg;
            seg.clip_id = r.path;
            seg.values = slice_frames(mel, start, seg_frames);
            b.features.push_back(std::move(seg));
            const bool target = r.machine_type == cfg.machine_type;
            b.labels.t.push_back(target ? 1.0 : 0.0);
            std::vector<double> y(std::size_t(enc.n_products), 0.0);
            if (target) y[std::size_t(r.product_id)] = 1.0;
            b.labels.y.push_back(std::move(y));
            b.labels.lambda_mix.push_back(1.0);
        }
        return b;
    };
    AssembledBatch val_batch = make_val_batch();

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::filesystem::create_directories(cfg.out_dir);
    result.checkpoint_path =
        cfg.out_dir / (cfg.machine_type + "_" + arm.name + ".ckpt");

    CheckpointMeta meta;
    meta.norm_stats_json = to_json(cache.stats_for(cfg.machine_type)).dump();
    meta.run_config_json = cfg.to_json().dump();

    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_total = 0.0;
        for (int s = 0; s < steps_per_epoch; ++s, ++step) {
            auto indices = sampler.next_batch();
            AssembledBatch batch = assemble_batch(manifest, cache, indices, cfg.machine_type,
                                                  enc.n_products, cfg.segment_s, rng);
            if (arm.use_mixup) apply_within_batch_mixup(batch, cfg.mixup_alpha, rng);

            auto outs = runner.run(batch.features, &batch.labels, cfg.lambda,
                                   arm.use_machine_loss, &grads);
            const double lp = loss_product(outs.product_probs, batch.labels);
            const double lm = loss_machine(outs.machine_probs, batch.labels);
            const double total =
                arm.use_machine_loss ? loss_total(lp, lm, cfg.lambda) : cfg.lambda * lp;

            StepLog sl;
            sl.step = step;
            sl.lp = lp;
            sl.lm = lm;
            sl.total = total;
            sl.lr = optim.schedule.lr_at(optim.step_count);
            result.steps.push_back(sl);
            epoch_total += total;

            optim.step(model, grads);
        }

        auto vouts = runner.run(val_batch.features, &val_batch.labels, cfg.lambda,
                                arm.use_machine_loss, nullptr);
        EpochLog el;
        el.epoch = epoch;
        el.train_total = epoch_total / steps_per_epoch;
        el.val_lp = loss_product(vouts.product_probs, val_batch.labels);
        el.val_lm = loss_machine(vouts.machine_probs, val_batch.labels);
        el.val_total = arm.use_machine_loss ? loss_total(el.val_lp, el.val_lm, cfg.lambda)
                                            : cfg.lambda * el.val_lp;
        result.epochs.push_back(el);

        if (el.val_total < result.best_val_loss) {
            result.best_val_loss = el.val_total;
            result.best_epoch = epoch;
            meta.epoch = epoch;
            meta.val_loss = el.val_total;
            checkpoint_save(model, result.checkpoint_path, meta);
        }
    }
    return result;
}

inline nlohmann::json train_log_json(const TrainResult& r) {
    nlohmann::json j;
    j["best_epoch"] = r.best_epoch;
    j["best_val_loss"] = r.best_val_loss;
    auto& steps = j["steps"] = nlohmann::json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"step", s.step}, {"lp", s.lp}, {"lm", s.lm}, {"total", s.total},
                         {"lr", s.lr}});
    auto& epochs = j["epochs"] = nlohmann::json::array();
    for (const auto& e : r.epochs)
        epochs.push_back({{"epoch", e.epoch},
                          {"train_total", e.train_total},
                          {"val_lp", e.val_lp},
                          {"val_lm", e.val_lm},
                          {"val_total", e.val_total}});
    return j;
}

}  // namespace asd
