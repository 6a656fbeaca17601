#pragma once

// Training objective: the product-ID BCE over target samples, the machine
// BCE on the norm head, their weighted combination, within-batch mixup, and
// the 1:1 target/non-target batch sampler.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "asd/common.hpp"
#include "asd/manifest.hpp"

namespace asd {

inline constexpr double kProbClamp = 1e-7;

struct BatchLabels {
    std::vector<double> t;               // machine-target weight per sample, [0,1]
    std::vector<std::vector<double>> y;  // N x K product weights, [0,1]
    std::vector<double> lambda_mix;      // per-pair mixup coefficient (1 = unmixed)

    std::size_t size() const { return t.size(); }
    double sum_t() const {
        double s = 0.0;
        for (double v : t) s += v;
        return s;
    }
};

// Eq.-style product-ID BCE: only samples with target mass contribute, each
// in proportion to its (possibly fractional) t.
inline double loss_product(const std::vector<std::vector<double>>& product_probs,
                           const BatchLabels& labels) {
    const std::size_t N = labels.size();
    if (product_probs.size() != N) throw AsdError("loss_product: batch size mismatch");
    const double sum_t = labels.sum_t();
    if (sum_t <= 0.0) throw AsdError("loss_product: batch has no target mass");
    const std::size_t K = product_probs.empty() ? 0 : product_probs[0].size();
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        if (labels.t[i] == 0.0) continue;
        for (std::size_t k = 0; k < K; ++k) {
            const double p = std::clamp(product_probs[i][k], kProbClamp, 1.0 - kProbClamp);
            const double y = labels.y[i][k];
            acc += labels.t[i] * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        }
    }
    return -acc / (double(K) * sum_t);
}

inline double loss_machine(const std::vector<double>& machine_probs, const BatchLabels& labels) {
    const std::size_t N = labels.size();
    if (machine_probs.size() != N) throw AsdError("loss_machine: batch size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double q = std::clamp(machine_probs[i], kProbClamp, 1.0 - kProbClamp);
        acc += labels.t[i] * std::log(q) + (1.0 - labels.t[i]) * std::log(1.0 - q);
    }
    return -acc / double(N);
}

inline double loss_total(double lp, double lm, double lambda) {
    if (lambda < 0.0) throw AsdError("loss_total: lambda must be >= 0");
    return lm + lambda * lp;
}

// Beta(alpha, alpha) via two gamma draws.
inline double sample_beta(double alpha, std::mt19937_64& rng) {
    std::gamma_distribution<double> g(alpha, 1.0);
    const double a = g(rng), b = g(rng);
    if (a + b <= 0.0) return 0.5;
    return a / (a + b);
}

// Pairwise convex combination of two equally shaped batches; features and
// both label channels are mixed with the same per-pair coefficient.
template <class Feature>
void mixup(std::vector<Feature>& batch_a, const std::vector<Feature>& batch_b,
           BatchLabels& labels_a, const BatchLabels& labels_b, double alpha,
           std::mt19937_64& rng) {
    const std::size_t N = batch_a.size();
    if (batch_b.size() != N || labels_a.size() != N || labels_b.size() != N)
        throw AsdError("mixup: shape mismatch");
    labels_a.lambda_mix.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double lam = sample_beta(alpha, rng);
        labels_a.lambda_mix[i] = lam;
        auto& xa = batch_a[i].values.values;
        const auto& xb = batch_b[i].values.values;
        if (xa.size() != xb.size()) throw AsdError("mixup: feature shape mismatch");
        for (std::size_t j = 0; j < xa.size(); ++j)
            xa[j] = float(lam * xa[j] + (1.0 - lam) * xb[j]);
        labels_a.t[i] = lam * labels_a.t[i] + (1.0 - lam) * labels_b.t[i];
        for (std::size_t k = 0; k < labels_a.y[i].size(); ++k)
            labels_a.y[i][k] = lam * labels_a.y[i][k] + (1.0 - lam) * labels_b.y[i][k];
    }
}

// 1:1 batch sampler. Each batch is half target-machine clips (stratified
// round-robin over the K product IDs across an epoch) and half clips drawn
// uniformly from the other machine types.
class BatchSampler {
public:
    BatchSampler(const Manifest& manifest, const std::string& target_machine, int batch_size,
                 std::uint64_t seed)
        : batch_size_(batch_size), rng_(make_rng(seed, "sampler/" + target_machine)) {
        if (batch_size < 2 || batch_size % 2 != 0)
            throw AsdError("sampler: batch size must be even and >= 2");
        for (std::size_t i = 0; i < manifest.records.size(); ++i) {
            const auto& r = manifest.records[i];
            if (r.split != Split::train) continue;
            if (r.machine_type == target_machine)
                per_id_[std::size_t(r.product_id)].push_back(int(i));
            else
                non_target_.push_back(int(i));
        }
        // Normalize the per-ID map into a dense list of non-empty queues.
        for (auto& [id, clips] : per_id_)
            if (!clips.empty()) ids_.push_back(id);
        if (ids_.empty()) throw AsdError("sampler: no target-machine train clips");
        if (non_target_.empty())
            throw AsdError("sampler: outlier exposure requires non-target machine types");
        cursors_.assign(per_id_.size(), 0);
        for (auto& [id, clips] : per_id_) {
            auto rng = make_rng(seed, "sampler-shuffle/" + std::to_string(id));
            std::shuffle(clips.begin(), clips.end(), rng);
        }
    }

    // Record indices into the manifest; first half targets, second half not.
    std::vector<int> next_batch() {
        std::vector<int> out;
        out.reserve(std::size_t(batch_size_));
        const int half = batch_size_ / 2;
        for (int i = 0; i < half; ++i) out.push_back(next_target());
        std::uniform_int_distribution<std::size_t> pick(0, non_target_.size() - 1);
        for (int i = 0; i < half; ++i) out.push_back(non_target_[pick(rng_)]);
        return out;
    }

    int batches_per_epoch() const {
        std::size_t total = 0;
        for (const auto& [id, clips] : per_id_) total += clips.size();
        return std::max(1, int(total) / (batch_size_ / 2));
    }

private:
    int next_target() {
        // Round-robin over IDs keeps per-ID counts within one of equal share.
        const std::size_t slot = id_cursor_++ % ids_.size();
        auto& clips = per_id_[std::size_t(ids_[slot])];
        auto& cur = cursors_[slot];
        if (cur >= clips.size()) {
            std::shuffle(clips.begin(), clips.end(), rng_);
            cur = 0;
        }
        return clips[cur++];
    }

    int batch_size_;
    std::map<int, std::vector<int>> per_id_;
    std::vector<int> ids_;
    std::vector<std::size_t> cursors_;
    std::vector<int> non_target_;
    std::size_t id_cursor_ = 0;
    std::mt19937_64 rng_;
};

}  // namespace asd
