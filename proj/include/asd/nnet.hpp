#pragma once

// Small convolutional encoder with manual reverse-mode gradients, the two
// output heads (per-product logistic and the affine-on-squared-norm machine
// head), AdamW with a one-cycle learning-rate schedule, and checkpoints.
//
// The scalar type is a template parameter: float for training, double for
// finite-difference verification.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "asd/common.hpp"
#include "asd/features.hpp"

namespace asd {

struct ConvSpec {
    int channels = 0;
    int kernel = 3;
    int stride = 2;
};

struct EncoderConfig {
    std::vector<ConvSpec> conv_blocks{{16, 3, 2}, {32, 3, 2}, {64, 3, 2}, {128, 3, 2}};
    int embedding_dim = 128;
    int head_hidden = 256;
    int n_products = 0;  // K, size of the product head

    nlohmann::json to_json() const {
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& b : conv_blocks)
            blocks.push_back({{"channels", b.channels}, {"kernel", b.kernel}, {"stride", b.stride}});
        return {{"conv_blocks", blocks},
                {"embedding_dim", embedding_dim},
                {"head_hidden", head_hidden},
                {"n_products", n_products}};
    }
    static EncoderConfig from_json(const nlohmann::json& j) {
        EncoderConfig c;
        c.conv_blocks.clear();
        for (const auto& b : j.at("conv_blocks"))
            c.conv_blocks.push_back({b.at("channels").get<int>(), b.at("kernel").get<int>(),
                                     b.at("stride").get<int>()});
        c.embedding_dim = j.at("embedding_dim").get<int>();
        c.head_hidden = j.at("head_hidden").get<int>();
        c.n_products = j.at("n_products").get<int>();
        return c;
    }
    std::uint64_t hash() const { return fnv1a64(to_json().dump()); }
    void check() const {
        if (conv_blocks.empty()) throw AsdError("encoder needs >= 1 conv block");
        if (embedding_dim <= 0 || head_hidden <= 0 || n_products <= 0)
            throw AsdError("bad encoder config");
    }
};

template <class T>
struct Tensor3 {
    int c = 0, h = 0, w = 0;
    std::vector<T> v;

    void resize(int c_, int h_, int w_) {
        c = c_; h = h_; w = w_;
        v.assign(std::size_t(c) * h * w, T(0));
    }
    T* plane(int ci) { return v.data() + std::size_t(ci) * h * w; }
    const T* plane(int ci) const { return v.data() + std::size_t(ci) * h * w; }
};

template <class T>
Tensor3<T> tensor_from_mel(const MelMatrix& mel) {
    Tensor3<T> t;
    t.resize(1, mel.frames, mel.n_mels);
    for (std::size_t i = 0; i < mel.values.size(); ++i) t.v[i] = T(mel.values[i]);
    return t;
}

template <class T>
struct Model {
    EncoderConfig cfg;
    std::vector<std::vector<T>> conv_w, conv_b;  // per block
    std::vector<T> fc1_w, fc1_b;                 // head_hidden x c_last
    std::vector<T> fc2_w, fc2_b;                 // embedding_dim x head_hidden
    std::vector<T> prod_w, prod_b;               // K x embedding_dim
    std::vector<T> norm_ab{T(0.01), T(0)};       // machine head: a, b

    static Model init(const EncoderConfig& cfg, std::uint64_t seed) {
        cfg.check();
        Model m;
        m.cfg = cfg;
        auto rng = make_rng(seed, "model-init");
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto he = [&](std::vector<T>& w, std::size_t n, int fan_in) {
            w.resize(n);
            const double s = std::sqrt(2.0 / fan_in);
            for (auto& x : w) x = T(s * gauss(rng));
        };
        int in_c = 1;
        for (const auto& b : cfg.conv_blocks) {
            std::vector<T> w, bias(std::size_t(b.channels), T(0));
            he(w, std::size_t(b.channels) * in_c * b.kernel * b.kernel,
               in_c * b.kernel * b.kernel);
            m.conv_w.push_back(std::move(w));
            m.conv_b.push_back(std::move(bias));
            in_c = b.channels;
        }
        he(m.fc1_w, std::size_t(cfg.head_hidden) * in_c, in_c);
        m.fc1_b.assign(std::size_t(cfg.head_hidden), T(0));
        he(m.fc2_w, std::size_t(cfg.embedding_dim) * cfg.head_hidden, cfg.head_hidden);
        m.fc2_b.assign(std::size_t(cfg.embedding_dim), T(0));
        he(m.prod_w, std::size_t(cfg.n_products) * cfg.embedding_dim, cfg.embedding_dim);
        m.prod_b.assign(std::size_t(cfg.n_products), T(0));
        return m;
    }

    template <class Fn>
    void for_each_param(Fn&& fn) {
        for (std::size_t l = 0; l < conv_w.size(); ++l) {
            fn("conv" + std::to_string(l) + ".w", conv_w[l]);
            fn("conv" + std::to_string(l) + ".b", conv_b[l]);
        }
        fn("fc1.w", fc1_w);
        fn("fc1.b", fc1_b);
        fn("fc2.w", fc2_w);
        fn("fc2.b", fc2_b);
        fn("prod.w", prod_w);
        fn("prod.b", prod_b);
        fn("norm.ab", norm_ab);
    }

    std::size_t n_params() {
        std::size_t n = 0;
        for_each_param([&](const std::string&, std::vector<T>& w) { n += w.size(); });
        return n;
    }
};

// Gradient buffers mirroring a model's parameter vectors.
template <class T>
struct Grads {
    std::vector<std::vector<T>> bufs;
    std::vector<std::string> names;

    template <class M>
    static Grads like(M& model) {
        Grads g;
        model.for_each_param([&](const std::string& name, std::vector<T>& w) {
            g.names.push_back(name);
            g.bufs.emplace_back(w.size(), T(0));
        });
        return g;
    }
    void zero() {
        for (auto& b : bufs) std::fill(b.begin(), b.end(), T(0));
    }
    void add(const Grads& other) {
        for (std::size_t i = 0; i < bufs.size(); ++i)
            for (std::size_t j = 0; j < bufs[i].size(); ++j) bufs[i][j] += other.bufs[i][j];
    }
    void scale(T s) {
        for (auto& b : bufs)
            for (auto& x : b) x *= s;
    }
};

template <class T>
struct ForwardOut {
    std::vector<T> embedding;      // embedding_dim
    std::vector<T> product_probs;  // K
    T machine_prob = T(0);
    std::vector<T> product_logits;
    T machine_logit = T(0);
};

// Per-sample activation storage plus per-thread gradient accumulators.
template <class T>
struct Workspace {
    std::vector<Tensor3<T>> acts;  // acts[0] = input; acts[l+1] = relu(conv_l out)
    std::vector<Tensor3<T>> pre;   // pre-relu conv outputs
    std::vector<T> gap, fc1_pre, fc1_post, embedding;
    ForwardOut<T> out;
    Grads<T> grads;

    template <class M>
    void bind(M& model) {
        grads = Grads<T>::like(model);
    }
};

namespace detail {

template <class T>
void conv_forward(const std::vector<T>& w, const std::vector<T>& b, const ConvSpec& spec,
                  const Tensor3<T>& in, Tensor3<T>& out) {
    const int k = spec.kernel, s = spec.stride, pad = spec.kernel / 2;
    const int oh = (in.h + 2 * pad - k) / s + 1;
    const int ow = (in.w + 2 * pad - k) / s + 1;
    if (oh <= 0 || ow <= 0) throw AsdError("conv output collapsed; input too small");
    out.resize(spec.channels, oh, ow);
    for (int oc = 0; oc < spec.channels; ++oc) {
        T* op = out.plane(oc);
        for (int i = 0; i < oh * ow; ++i) op[i] = b[std::size_t(oc)];
        for (int ic = 0; ic < in.c; ++ic) {
            const T* ip = in.plane(ic);
            const T* wp = w.data() + (std::size_t(oc) * in.c + ic) * k * k;
            for (int y = 0; y < oh; ++y) {
                const int iy0 = y * s - pad;
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = iy0 + ky;
                    if (iy < 0 || iy >= in.h) continue;
                    const T* irow = ip + std::size_t(iy) * in.w;
                    T* orow = op + std::size_t(y) * ow;
                    for (int kx = 0; kx < k; ++kx) {
                        const T wv = wp[ky * k + kx];
                        const int ix0 = kx - pad;
                        int x_lo = std::max(0, (-ix0 + s - 1) / s);
                        int x_hi = ow;
                        while (x_hi > 0 && (x_hi - 1) * s + ix0 >= in.w) --x_hi;
                        for (int x = x_lo; x < x_hi; ++x)
                            orow[x] += wv * irow[x * s + ix0];
                    }
                }
            }
        }
    }
}

// Accumulates weight/bias grads and writes the input gradient.
template <class T>
void conv_backward(const std::vector<T>& w, const ConvSpec& spec, const Tensor3<T>& in,
                   const Tensor3<T>& d_out, Tensor3<T>& d_in, std::vector<T>& g_w,
                   std::vector<T>& g_b) {
    const int k = spec.kernel, s = spec.stride, pad = spec.kernel / 2;
    d_in.resize(in.c, in.h, in.w);
    for (int oc = 0; oc < spec.channels; ++oc) {
        const T* dop = d_out.plane(oc);
        T gb = T(0);
        for (int i = 0; i < d_out.h * d_out.w; ++i) gb += dop[i];
        g_b[std::size_t(oc)] += gb;
        for (int ic = 0; ic < in.c; ++ic) {
            const T* ip = in.plane(ic);
            T* dip = d_in.plane(ic);
            const std::size_t wbase = (std::size_t(oc) * in.c + ic) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const T wv = w[wbase + std::size_t(ky) * k + kx];
                    T gw = T(0);
                    for (int y = 0; y < d_out.h; ++y) {
                        const int iy = y * s - pad + ky;
                        if (iy < 0 || iy >= in.h) continue;
                        const T* irow = ip + std::size_t(iy) * in.w;
                        T* dirow = dip + std::size_t(iy) * in.w;
                        const T* dorow = dop + std::size_t(y) * d_out.w;
                        const int ix0 = kx - pad;
                        int x_lo = std::max(0, (-ix0 + s - 1) / s);
                        int x_hi = d_out.w;
                        while (x_hi > 0 && (x_hi - 1) * s + ix0 >= in.w) --x_hi;
                        for (int x = x_lo; x < x_hi; ++x) {
                            gw += dorow[x] * irow[x * s + ix0];
                            dirow[x * s + ix0] += wv * dorow[x];
                        }
                    }
                    g_w[wbase + std::size_t(ky) * k + kx] += gw;
                }
            }
        }
    }
}

template <class T>
T sigmoid(T z) {
    if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
}

}  // namespace detail

// Forward pass for one sample; activations retained in the workspace.
template <class T>
const ForwardOut<T>& forward_sample(Model<T>& model, const Tensor3<T>& input, Workspace<T>& ws) {
    const auto& cfg = model.cfg;
    const std::size_t L = cfg.conv_blocks.size();
    ws.acts.resize(L + 1);
    ws.pre.resize(L);
    ws.acts[0] = input;
    for (std::size_t l = 0; l < L; ++l) {
        detail::conv_forward(model.conv_w[l], model.conv_b[l], cfg.conv_blocks[l], ws.acts[l],
                             ws.pre[l]);
        ws.acts[l + 1] = ws.pre[l];
        for (auto& x : ws.acts[l + 1].v) x = std::max(x, T(0));
    }
    const auto& last = ws.acts[L];
    const int c_last = last.c;
    ws.gap.assign(std::size_t(c_last), T(0));
    const T inv_hw = T(1) / T(last.h * last.w);
    for (int c = 0; c < c_last; ++c) {
        T acc = T(0);
        const T* p = last.plane(c);
        for (int i = 0; i < last.h * last.w; ++i) acc += p[i];
        ws.gap[std::size_t(c)] = acc * inv_hw;
    }
    ws.fc1_pre.assign(std::size_t(cfg.head_hidden), T(0));
    for (int o = 0; o < cfg.head_hidden; ++o) {
        T acc = model.fc1_b[std::size_t(o)];
        const T* wr = model.fc1_w.data() + std::size_t(o) * c_last;
        for (int i = 0; i < c_last; ++i) acc += wr[i] * ws.gap[std::size_t(i)];
        ws.fc1_pre[std::size_t(o)] = acc;
    }
    ws.fc1_post = ws.fc1_pre;
    for (auto& x : ws.fc1_post) x = std::max(x, T(0));
    ws.embedding.assign(std::size_t(cfg.embedding_dim), T(0));
    for (int o = 0; o < cfg.embedding_dim; ++o) {
        T acc = model.fc2_b[std::size_t(o)];
        const T* wr = model.fc2_w.data() + std::size_t(o) * cfg.head_hidden;
        for (int i = 0; i < cfg.head_hidden; ++i) acc += wr[i] * ws.fc1_post[std::size_t(i)];
        ws.embedding[std::size_t(o)] = acc;
    }

    auto& out = ws.out;
    out.embedding = ws.embedding;
    out.product_logits.assign(std::size_t(cfg.n_products), T(0));
    out.product_probs.assign(std::size_t(cfg.n_products), T(0));
    for (int k = 0; k < cfg.n_products; ++k) {
        T acc = model.prod_b[std::size_t(k)];
        const T* wr = model.prod_w.data() + std::size_t(k) * cfg.embedding_dim;
        for (int i = 0; i < cfg.embedding_dim; ++i) acc += wr[i] * ws.embedding[std::size_t(i)];
        out.product_logits[std::size_t(k)] = acc;
        out.product_probs[std::size_t(k)] = detail::sigmoid(acc);
    }
    T nsq = T(0);
    for (T e : ws.embedding) nsq += e * e;
    out.machine_logit = model.norm_ab[0] * nsq + model.norm_ab[1];
    out.machine_prob = detail::sigmoid(out.machine_logit);
    return out;
}

// Backward for the sample most recently run through `ws`. Takes gradients of
// the scalar loss with respect to the product logits and the machine logit;
// parameter gradients are accumulated into ws.grads.
template <class T>
void backward_sample(Model<T>& model, Workspace<T>& ws, const std::vector<T>& d_product_logits,
                     T d_machine_logit) {
    const auto& cfg = model.cfg;
    if (ws.embedding.empty()) throw AsdError("backward without forward");
    auto& g = ws.grads;
    // Gradient buffer layout follows for_each_param order.
    const std::size_t L = cfg.conv_blocks.size();
    auto gbuf = [&](std::size_t idx) -> std::vector<T>& { return g.bufs[idx]; };
    const std::size_t gi_fc1w = 2 * L, gi_fc1b = 2 * L + 1, gi_fc2w = 2 * L + 2,
                      gi_fc2b = 2 * L + 3, gi_pw = 2 * L + 4, gi_pb = 2 * L + 5,
                      gi_nab = 2 * L + 6;

    std::vector<T> d_emb(std::size_t(cfg.embedding_dim), T(0));
    T nsq = T(0);
    for (T e : ws.embedding) nsq += e * e;
    for (int k = 0; k < cfg.n_products; ++k) {
        const T dk = d_product_logits[std::size_t(k)];
        if (dk != T(0)) {
            T* gw = gbuf(gi_pw).data() + std::size_t(k) * cfg.embedding_dim;
            const T* wr = model.prod_w.data() + std::size_t(k) * cfg.embedding_dim;
            for (int i = 0; i < cfg.embedding_dim; ++i) {
                gw[i] += dk * ws.embedding[std::size_t(i)];
                d_emb[std::size_t(i)] += dk * wr[i];
            }
            gbuf(gi_pb)[std::size_t(k)] += dk;
        }
    }
    gbuf(gi_nab)[0] += d_machine_logit * nsq;
    gbuf(gi_nab)[1] += d_machine_logit;
    const T coef = d_machine_logit * model.norm_ab[0] * T(2);
    for (int i = 0; i < cfg.embedding_dim; ++i) d_emb[std::size_t(i)] += coef * ws.embedding[std::size_t(i)];

    // fc2
    std::vector<T> d_post(std::size_t(cfg.head_hidden), T(0));
    for (int o = 0; o < cfg.embedding_dim; ++o) {
        const T d = d_emb[std::size_t(o)];
        T* gw = gbuf(gi_fc2w).data() + std::size_t(o) * cfg.head_hidden;
        const T* wr = model.fc2_w.data() + std::size_t(o) * cfg.head_hidden;
        for (int i = 0; i < cfg.head_hidden; ++i) {
            gw[i] += d * ws.fc1_post[std::size_t(i)];
            d_post[std::size_t(i)] += d * wr[i];
        }
        gbuf(gi_fc2b)[std::size_t(o)] += d;
    }
    // relu + fc1
    const int c_last = ws.acts[L].c;
    std::vector<T> d_gap(std::size_t(c_last), T(0));
    for (int o = 0; o < cfg.head_hidden; ++o) {
        const T d = ws.fc1_pre[std::size_t(o)] > T(0) ? d_post[std::size_t(o)] : T(0);
        if (d == T(0)) continue;
        T* gw = gbuf(gi_fc1w).data() + std::size_t(o) * c_last;
        const T* wr = model.fc1_w.data() + std::size_t(o) * c_last;
        for (int i = 0; i < c_last; ++i) {
            gw[i] += d * ws.gap[std::size_t(i)];
            d_gap[std::size_t(i)] += d * wr[i];
        }
        gbuf(gi_fc1b)[std::size_t(o)] += d;
    }
    // GAP
    const auto& last = ws.acts[L];
    Tensor3<T> d_act;
    d_act.resize(last.c, last.h, last.w);
    const T inv_hw = T(1) / T(last.h * last.w);
    for (int c = 0; c < last.c; ++c) {
        T* p = d_act.plane(c);
        const T d = d_gap[std::size_t(c)] * inv_hw;
        for (int i = 0; i < last.h * last.w; ++i) p[i] = d;
    }
    // conv stack in reverse
    Tensor3<T> d_prev;
    for (std::size_t l = L; l-- > 0;) {
        // relu mask on the block output
        for (std::size_t i = 0; i < d_act.v.size(); ++i)
            if (ws.pre[l].v[i] <= T(0)) d_act.v[i] = T(0);
        detail::conv_backward(model.conv_w[l], cfg.conv_blocks[l], ws.acts[l], d_act, d_prev,
                              gbuf(2 * l), gbuf(2 * l + 1));
        std::swap(d_act, d_prev);
    }
}

// --- AdamW + one-cycle schedule ---

struct OneCycleSchedule {
    double max_lr = 1e-3;
    int total_steps = 1;
    double pct_start = 0.3;
    double div_factor = 25.0;
    double final_div = 1e4;

    double initial_lr() const { return max_lr / div_factor; }
    double min_lr() const { return initial_lr() / final_div; }
    int peak_step() const { return int(pct_start * total_steps); }

    double lr_at(int step) const {
        const int s1 = peak_step();
        if (step <= s1) {
            const double t = s1 > 0 ? double(step) / s1 : 1.0;
            return initial_lr() + (max_lr - initial_lr()) * 0.5 * (1.0 - std::cos(M_PI * t));
        }
        const int rem = total_steps - s1;
        const double t = rem > 0 ? double(step - s1) / rem : 1.0;
        return min_lr() + (max_lr - min_lr()) * 0.5 * (1.0 + std::cos(M_PI * std::min(t, 1.0)));
    }
};

template <class T>
struct AdamW {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double weight_decay = 1e-4;
    OneCycleSchedule schedule;
    int step_count = 0;
    std::vector<std::vector<double>> m, v;

    void step(Model<T>& model, const Grads<T>& grads) {
        if (m.empty()) {
            model.for_each_param([&](const std::string&, std::vector<T>& w) {
                m.emplace_back(w.size(), 0.0);
                v.emplace_back(w.size(), 0.0);
            });
        }
        for (std::size_t i = 0; i < grads.bufs.size(); ++i)
            for (T gval : grads.bufs[i])
                if (!std::isfinite(double(gval)))
                    throw AsdError("non-finite gradient in parameter " + grads.names[i]);

        const double lr = schedule.lr_at(step_count);
        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, step_count);
        const double bc2 = 1.0 - std::pow(beta2, step_count);
        std::size_t idx = 0;
        model.for_each_param([&](const std::string&, std::vector<T>& w) {
            auto& mi = m[idx];
            auto& vi = v[idx];
            const auto& gi = grads.bufs[idx];
            for (std::size_t j = 0; j < w.size(); ++j) {
                const double gd = double(gi[j]);
                mi[j] = beta1 * mi[j] + (1.0 - beta1) * gd;
                vi[j] = beta2 * vi[j] + (1.0 - beta2) * gd * gd;
                const double mhat = mi[j] / bc1, vhat = vi[j] / bc2;
                double wd = double(w[j]);
                wd -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * wd);
                w[j] = T(wd);
            }
            ++idx;
        });
    }
};

// --- Checkpoints ---

struct CheckpointMeta {
    int epoch = -1;
    double val_loss = 0.0;
    std::string norm_stats_json;  // embedded NormStats, may be empty
    std::string run_config_json;  // effective run config, may be empty
};

template <class T>
void checkpoint_save(const Model<T>& model_in, const std::filesystem::path& path,
                     const CheckpointMeta& meta = {}) {
    auto& model = const_cast<Model<T>&>(model_in);
    nlohmann::json header;
    header["encoder"] = model.cfg.to_json();
    header["config_hash"] = hex64(model.cfg.hash());
    header["scalar_bytes"] = int(sizeof(T));
    header["epoch"] = meta.epoch;
    header["val_loss"] = meta.val_loss;
    if (!meta.norm_stats_json.empty())
        header["norm_stats"] = nlohmann::json::parse(meta.norm_stats_json);
    if (!meta.run_config_json.empty())
        header["run_config"] = nlohmann::json::parse(meta.run_config_json);
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw AsdError("cannot write checkpoint: " + path.string());
    out.write("ASDCKPT1", 8);
    std::uint32_t hl = std::uint32_t(hs.size());
    out.write(reinterpret_cast<const char*>(&hl), 4);
    out.write(hs.data(), std::streamsize(hs.size()));
    model.for_each_param([&](const std::string&, std::vector<T>& w) {
        out.write(reinterpret_cast<const char*>(w.data()), std::streamsize(w.size() * sizeof(T)));
    });
    if (!out) throw AsdError("checkpoint write failed: " + path.string());
}

template <class T>
Model<T> checkpoint_load(const std::filesystem::path& path, CheckpointMeta* meta = nullptr,
                         nlohmann::json* header_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AsdError("cannot read checkpoint: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, "ASDCKPT1", 8) != 0)
        throw AsdError("not a checkpoint file: " + path.string());
    std::uint32_t hl = 0;
    in.read(reinterpret_cast<char*>(&hl), 4);
    std::string hs(hl, '\0');
    in.read(hs.data(), hl);
    nlohmann::json header = nlohmann::json::parse(hs);
    if (header.at("scalar_bytes").get<int>() != int(sizeof(T)))
        throw AsdError("checkpoint scalar width mismatch");
    EncoderConfig cfg = EncoderConfig::from_json(header.at("encoder"));
    if (hex64(cfg.hash()) != header.at("config_hash").get<std::string>())
        throw AsdError("checkpoint config hash mismatch");
    Model<T> model = Model<T>::init(cfg, 0);
    model.for_each_param([&](const std::string& name, std::vector<T>& w) {
        in.read(reinterpret_cast<char*>(w.data()), std::streamsize(w.size() * sizeof(T)));
        if (!in) throw AsdError("checkpoint truncated at " + name);
    });
    if (meta) {
        meta->epoch = header.value("epoch", -1);
        meta->val_loss = header.value("val_loss", 0.0);
        if (header.contains("norm_stats")) meta->norm_stats_json = header["norm_stats"].dump();
        if (header.contains("run_config")) meta->run_config_json = header["run_config"].dump();
    }
    if (header_out) *header_out = header;
    return model;
}

// Load and require a specific encoder configuration.
template <class T>
Model<T> checkpoint_load_expect(const std::filesystem::path& path, const EncoderConfig& expected,
                                CheckpointMeta* meta = nullptr) {
    Model<T> model = checkpoint_load<T>(path, meta);
    if (model.cfg.hash() != expected.hash())
        throw AsdError("checkpoint encoder config does not match expected config");
    return model;
}

}  // namespace asd
