#pragma once

// Full-covariance Gaussian mixture fitted by EM. k-means++ seeding,
// diagonal jitter scaled by the data variance, log-sum-exp scoring.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "asd/common.hpp"

namespace asd {

struct GmmModel {
    int n_components = 0;
    int dim = 0;
    Eigen::VectorXd weights;
    Eigen::MatrixXd means;                   // p x dim
    std::vector<Eigen::MatrixXd> covariances;  // dim x dim, SPD after jitter
    double jitter = 0.0;

    // Cached per-component Cholesky factors and log-normalizers.
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llt;
    std::vector<double> log_norm;

    void refresh_cache() {
        llt.clear();
        log_norm.clear();
        for (const auto& cov : covariances) {
            Eigen::LLT<Eigen::MatrixXd> f(cov);
            if (f.info() != Eigen::Success)
                throw AsdError("gmm: covariance not SPD even after jitter");
            double logdet = 0.0;
            for (int i = 0; i < dim; ++i) logdet += 2.0 * std::log(f.matrixL()(i, i));
            log_norm.push_back(-0.5 * (dim * std::log(2.0 * M_PI) + logdet));
            llt.push_back(std::move(f));
        }
    }

    // log N(x; mu_j, Sigma_j)
    double component_logpdf(int j, const Eigen::VectorXd& x) const {
        Eigen::VectorXd d = x - means.row(j).transpose();
        Eigen::VectorXd z = llt[std::size_t(j)].matrixL().solve(d);
        return log_norm[std::size_t(j)] - 0.5 * z.squaredNorm();
    }

    double log_density(const Eigen::VectorXd& x) const {
        double mx = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(static_cast<std::size_t>(n_components), 0.0);
        for (int j = 0; j < n_components; ++j) {
            terms[std::size_t(j)] = std::log(weights(j)) + component_logpdf(j, x);
            mx = std::max(mx, terms[std::size_t(j)]);
        }
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - mx);
        return mx + std::log(acc);
    }
};

// Negative log-likelihood; higher = more anomalous.
inline double gmm_score(const GmmModel& model, const Eigen::VectorXd& e) {
    return -model.log_density(e);
}

namespace detail {

inline std::vector<int> kmeanspp_init(const Eigen::MatrixXd& X, int p, std::mt19937_64& rng) {
    const int M = int(X.rows());
    std::vector<int> centers;
    std::uniform_int_distribution<int> first(0, M - 1);
    centers.push_back(first(rng));
    Eigen::VectorXd d2 = (X.rowwise() - X.row(centers[0])).rowwise().squaredNorm();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    while (int(centers.size()) < p) {
        double total = d2.sum();
        int pick = 0;
        if (total <= 0.0) {
            pick = first(rng);
        } else {
            double r = uni(rng) * total, acc = 0.0;
            for (int i = 0; i < M; ++i) {
                acc += d2(i);
                if (acc >= r) { pick = i; break; }
            }
        }
        centers.push_back(pick);
        d2 = d2.cwiseMin((X.rowwise() - X.row(pick)).rowwise().squaredNorm());
    }
    return centers;
}

}  // namespace detail

struct GmmFitInfo {
    int iterations = 0;
    std::vector<double> avg_loglik;  // per EM iteration
    bool reseeded = false;
};

inline GmmModel gmm_fit(const Eigen::MatrixXd& embeddings, int p, std::uint64_t seed,
                        GmmFitInfo* info = nullptr, int max_iters = 200, double tol = 1e-6) {
    const int M = int(embeddings.rows());
    const int dim = int(embeddings.cols());
    if (M < p) throw AsdError("gmm_fit: fewer points than components");
    if (p < 1) throw AsdError("gmm_fit: need p >= 1");

    // Jitter scale from the average per-dimension variance.
    Eigen::RowVectorXd mean = embeddings.colwise().mean();
    double avg_var =
        (embeddings.rowwise() - mean).array().square().colwise().mean().mean();
    const double jitter = 1e-6 * std::max(avg_var, 1e-12);

    for (int attempt = 0; attempt < 2; ++attempt) {
        auto rng = make_rng(seed + std::uint64_t(attempt) * 0x9e3779b97f4a7c15ULL, "gmm");
        GmmModel model;
        model.n_components = p;
        model.dim = dim;
        model.jitter = jitter;
        model.weights = Eigen::VectorXd::Constant(p, 1.0 / p);
        model.means.resize(p, dim);
        auto centers = detail::kmeanspp_init(embeddings, p, rng);
        for (int j = 0; j < p; ++j) model.means.row(j) = embeddings.row(centers[std::size_t(j)]);
        Eigen::MatrixXd base_cov =
            (embeddings.rowwise() - mean).transpose() * (embeddings.rowwise() - mean) / double(M);
        base_cov.diagonal().array() += jitter;
        model.covariances.assign(std::size_t(p), base_cov);
        model.refresh_cache();

        GmmFitInfo local;
        bool collapsed = false;
        double prev_avg_ll = -std::numeric_limits<double>::infinity();
        Eigen::MatrixXd resp(M, p);
        for (int it = 0; it < max_iters; ++it) {
            // E-step
            double total_ll = 0.0;
            for (int i = 0; i < M; ++i) {
                Eigen::VectorXd x = embeddings.row(i).transpose();
                double mx = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < p; ++j) {
                    resp(i, j) = std::log(model.weights(j)) + model.component_logpdf(j, x);
                    mx = std::max(mx, resp(i, j));
                }
                double acc = 0.0;
                for (int j = 0; j < p; ++j) acc += std::exp(resp(i, j) - mx);
                const double ll = mx + std::log(acc);
                total_ll += ll;
                for (int j = 0; j < p; ++j) resp(i, j) = std::exp(resp(i, j) - ll);
            }
            const double avg_ll = total_ll / M;
            local.avg_loglik.push_back(avg_ll);
            local.iterations = it + 1;

            // M-step
            Eigen::VectorXd nk = resp.colwise().sum().transpose();
            if (nk.minCoeff() < 1e-12 * M) { collapsed = true; break; }
            model.weights = nk / double(M);
            for (int j = 0; j < p; ++j) {
                Eigen::RowVectorXd mu = (resp.col(j).transpose() * embeddings) / nk(j);
                model.means.row(j) = mu;
                Eigen::MatrixXd centered = embeddings.rowwise() - mu;
                Eigen::MatrixXd cov =
                    centered.transpose() * (centered.array().colwise() * resp.col(j).array()).matrix() /
                    nk(j);
                cov.diagonal().array() += jitter;
                model.covariances[std::size_t(j)] = cov;
            }
            model.refresh_cache();

            if (it > 0 && avg_ll - prev_avg_ll < tol) break;
            prev_avg_ll = avg_ll;
        }
        if (!collapsed) {
            if (info) {
                info->iterations = local.iterations;
                info->avg_loglik = local.avg_loglik;
                info->reseeded = attempt > 0;
            }
            return model;
        }
        if (attempt == 1) throw AsdError("gmm_fit: component collapsed after reseed");
    }
    throw AsdError("unreachable");
}

}  // namespace asd
