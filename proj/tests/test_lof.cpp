#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "asd/inlier/io.hpp"

using namespace asd;
namespace fs = std::filesystem;

namespace {

// Independent quadratic-time LOF reference. Same conventions: exactly k
// neighbors with index tie-break, query scored against the full set.
struct LofRef {
    Eigen::MatrixXd X;
    int k;
    std::vector<std::vector<int>> nn;
    std::vector<double> kdist, lrd;

    static std::vector<int> knn(const Eigen::MatrixXd& X, const Eigen::VectorXd& q, int k,
                                int exclude) {
        std::vector<std::pair<double, int>> d;
        for (int i = 0; i < X.rows(); ++i)
            if (i != exclude) d.emplace_back((X.row(i).transpose() - q).norm(), i);
        std::sort(d.begin(), d.end());
        std::vector<int> out;
        for (int i = 0; i < k; ++i) out.push_back(d[std::size_t(i)].second);
        return out;
    }

    LofRef(const Eigen::MatrixXd& pts, int kk) : X(pts), k(kk) {
        const int M = int(X.rows());
        nn.resize(std::size_t(M));
        kdist.resize(std::size_t(M));
        lrd.resize(std::size_t(M));
        for (int i = 0; i < M; ++i) {
            nn[std::size_t(i)] = knn(X, X.row(i).transpose(), k, i);
            kdist[std::size_t(i)] = (X.row(nn[std::size_t(i)].back()) - X.row(i)).norm();
        }
        for (int i = 0; i < M; ++i) {
            double acc = 0.0;
            for (int o : nn[std::size_t(i)])
                acc += std::max(kdist[std::size_t(o)], (X.row(o) - X.row(i)).norm());
            lrd[std::size_t(i)] = 1.0 / std::max(acc / k, 1e-12);
        }
    }

    double score(const Eigen::VectorXd& q) const {
        auto ns = knn(X, q, k, -1);
        double acc = 0.0, ls = 0.0;
        for (int o : ns) {
            acc += std::max(kdist[std::size_t(o)], (X.row(o).transpose() - q).norm());
            ls += lrd[std::size_t(o)];
        }
        return (ls / k) / (1.0 / std::max(acc / k, 1e-12));
    }
};

}  // namespace

TEST_CASE("lof matches the reference implementation on random datasets") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> msz(8, 40);
    std::uniform_int_distribution<int> dsz(1, 5);
    for (int trial = 0; trial < 50; ++trial) {
        const int M = msz(rng), dim = dsz(rng);
        std::uniform_int_distribution<int> ksz(1, std::min(M - 1, 8));
        const int k = ksz(rng);
        Eigen::MatrixXd X(M, dim);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < dim; ++j) X(i, j) = g(rng);
        LofModel model = lof_fit(X, k);
        LofRef ref(X, k);
        for (int i = 0; i < M; ++i)
            CHECK(model.lrd[std::size_t(i)] ==
                  doctest::Approx(ref.lrd[std::size_t(i)]).epsilon(1e-12));
        for (int q = 0; q < 10; ++q) {
            Eigen::VectorXd query(dim);
            for (int j = 0; j < dim; ++j) query(j) = 2.0 * g(rng);
            CHECK(lof_score(model, query) == doctest::Approx(ref.score(query)).epsilon(1e-12));
        }
    }
}

TEST_CASE("interior points score near 1, a far outlier scores much higher") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd X(400, 2);
    for (int i = 0; i < 400; ++i) { X(i, 0) = u(rng); X(i, 1) = u(rng); }
    LofModel model = lof_fit(X, 10);
    Eigen::Vector2d inside(0.5, 0.5), outside(8.0, 8.0);
    CHECK(lof_score(model, inside) == doctest::Approx(1.0).epsilon(0.15));
    CHECK(lof_score(model, outside) > 3.0);
}

TEST_CASE("distance ties are broken by index order") {
    // Four corners of a square around the origin: all equidistant.
    Eigen::MatrixXd X(5, 2);
    X << 0, 0, 1, 0, -1, 0, 0, 1, 0, -1;
    LofModel model = lof_fit(X, 2);
    CHECK(model.neighbors[0] == std::vector<int>{1, 2});
    Eigen::Vector2d origin(0.0, 0.0);
    auto nn = detail::knn_indices(X, origin, 3, -1);
    CHECK(nn == std::vector<int>{0, 1, 2});
}

TEST_CASE("duplicate points trigger the degenerate guard but stay finite") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(10, 2);
    LofModel model = lof_fit(X, 3);
    CHECK(model.degenerate);
    Eigen::Vector2d q(0.1, 0.0);
    CHECK(std::isfinite(lof_score(model, q)));
}

TEST_CASE("argument validation") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 2);
    CHECK_THROWS_AS(lof_fit(X, 0), AsdError);
    CHECK_THROWS_AS(lof_fit(X, 5), AsdError);  // need more points than neighbors
    CHECK_NOTHROW(lof_fit(X, 4));
}

TEST_CASE("save/load round trip preserves scores exactly") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Eigen::MatrixXd X(60, 3);
    for (int i = 0; i < 60; ++i)
        for (int j = 0; j < 3; ++j) X(i, j) = g(rng);
    InlierModel im;
    im.model = lof_fit(X, 6);
    im.fit_set_hash = "beef";
    auto path = fs::temp_directory_path() / "asd_lof_rt.im";
    save_inlier_model(im, path);
    InlierModel back = load_inlier_model(path);
    CHECK(!back.is_gmm());
    for (int q = 0; q < 30; ++q) {
        Eigen::VectorXd query(3);
        for (int j = 0; j < 3; ++j) query(j) = 2.0 * g(rng);
        CHECK(back.score(query) == im.score(query));
    }
    fs::remove(path);
}
