#pragma once

// Local outlier factor over a fixed reference set, exact brute-force
// neighbors. Neighborhoods are exactly k points; distance ties are broken
// by index order.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "asd/common.hpp"

namespace asd {

struct LofModel {
    Eigen::MatrixXd reference_points;  // M x dim
    int k = 0;
    std::vector<std::vector<int>> neighbors;  // k indices per reference point
    std::vector<double> k_distance;
    std::vector<double> lrd;
    bool degenerate = false;  // duplicate-point guard triggered

    static constexpr double lrd_eps = 1e-12;
};

namespace detail {

// Indices of the k nearest rows of X to q, excluding `exclude` (pass -1 to
// keep all). Ties broken by smaller index.
inline std::vector<int> knn_indices(const Eigen::MatrixXd& X, const Eigen::VectorXd& q, int k,
                                    int exclude) {
    std::vector<std::pair<double, int>> d;
    d.reserve(std::size_t(X.rows()));
    for (int i = 0; i < X.rows(); ++i) {
        if (i == exclude) continue;
        d.emplace_back((X.row(i).transpose() - q).norm(), i);
    }
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    std::vector<int> out(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k; ++i) out[std::size_t(i)] = d[std::size_t(i)].second;
    return out;
}

}  // namespace detail

inline LofModel lof_fit(const Eigen::MatrixXd& embeddings, int k) {
    const int M = int(embeddings.rows());
    if (k < 1) throw AsdError("lof_fit: need k >= 1");
    if (M <= k) throw AsdError("lof_fit: need more points than neighbors");

    LofModel model;
    model.reference_points = embeddings;
    model.k = k;
    model.neighbors.resize(std::size_t(M));
    model.k_distance.resize(std::size_t(M));
    model.lrd.resize(std::size_t(M));

    for (int i = 0; i < M; ++i) {
        auto nn = detail::knn_indices(embeddings, embeddings.row(i).transpose(), k, i);
        model.k_distance[std::size_t(i)] =
            (embeddings.row(nn.back()) - embeddings.row(i)).norm();
        model.neighbors[std::size_t(i)] = std::move(nn);
    }
    for (int i = 0; i < M; ++i) {
        double acc = 0.0;
        for (int o : model.neighbors[std::size_t(i)]) {
            const double dist = (embeddings.row(o) - embeddings.row(i)).norm();
            acc += std::max(model.k_distance[std::size_t(o)], dist);
        }
        const double mean_reach = acc / k;
        if (mean_reach < LofModel::lrd_eps) model.degenerate = true;
        model.lrd[std::size_t(i)] = 1.0 / std::max(mean_reach, LofModel::lrd_eps);
    }
    return model;
}

// LOF of a query point against the reference set. The query is not a member
// of the set, so no exclusion applies; >> 1 means outlying.
inline double lof_score(const LofModel& model, const Eigen::VectorXd& e) {
    if (model.k == 0) throw AsdError("lof_score: model not fitted");
    auto nn = detail::knn_indices(model.reference_points, e, model.k, -1);
    double acc = 0.0, lrd_sum = 0.0;
    for (int o : nn) {
        const double dist = (model.reference_points.row(o).transpose() - e).norm();
        acc += std::max(model.k_distance[std::size_t(o)], dist);
        lrd_sum += model.lrd[std::size_t(o)];
    }
    const double mean_reach = acc / model.k;
    const double lrd_q = 1.0 / std::max(mean_reach, LofModel::lrd_eps);
    return lrd_sum / model.k / lrd_q;
}

}  // namespace asd
