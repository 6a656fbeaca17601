#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "asd/inlier/io.hpp"

using namespace asd;
namespace fs = std::filesystem;

namespace {
Eigen::MatrixXd gaussian_blobs(int per_blob, const std::vector<Eigen::Vector2d>& centers,
                               double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    Eigen::MatrixXd X(per_blob * int(centers.size()), 2);
    int r = 0;
    for (const auto& c : centers)
        for (int i = 0; i < per_blob; ++i, ++r) {
            X(r, 0) = c(0) + g(rng);
            X(r, 1) = c(1) + g(rng);
        }
    return X;
}
}  // namespace

TEST_CASE("single component on unit-variance data: closed-form NLL at the mean") {
    // Data {-1, +1} repeated: mean 0, variance exactly 1, so the fitted
    // Gaussian is N(0, 1 + jitter) and -log density at 0 is 0.5*log(2*pi*var).
    Eigen::MatrixXd X(40, 1);
    for (int i = 0; i < 40; ++i) X(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
    GmmModel m = gmm_fit(X, 1, 1);
    Eigen::VectorXd at_mean = Eigen::VectorXd::Zero(1);
    CHECK(gmm_score(m, at_mean) == doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-4));
    // Farther from the mean is more anomalous.
    Eigen::VectorXd far = Eigen::VectorXd::Constant(1, 5.0);
    CHECK(gmm_score(m, far) > gmm_score(m, at_mean));
}

TEST_CASE("average log-likelihood is non-decreasing across EM iterations") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        auto X = gaussian_blobs(120, {{0, 0}, {4, 1}, {-2, 3}}, 0.7, seed);
        GmmFitInfo info;
        gmm_fit(X, 3, seed, &info);
        REQUIRE(info.avg_loglik.size() >= 2);
        for (std::size_t i = 1; i < info.avg_loglik.size(); ++i)
            CHECK(info.avg_loglik[i] >= info.avg_loglik[i - 1] - 1e-9);
    }
}

TEST_CASE("two well-separated components are recovered") {
    const Eigen::Vector2d c0(0.0, 0.0), c1(6.0, 6.0);
    auto X = gaussian_blobs(1000, {c0, c1}, 0.5, 42);
    GmmModel m = gmm_fit(X, 2, 7);
    // match fitted means to the true centers
    int j0 = m.means(0, 0) < m.means(1, 0) ? 0 : 1;
    int j1 = 1 - j0;
    CHECK((m.means.row(j0).transpose() - c0).norm() < 0.1);
    CHECK((m.means.row(j1).transpose() - c1).norm() < 0.1);
    CHECK(m.weights(j0) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(m.weights(j1) == doctest::Approx(0.5).epsilon(0.1));
    // density is higher at a center than in the gap
    Eigen::Vector2d mid = 0.5 * (c0 + c1);
    CHECK(m.log_density(c0) > m.log_density(mid));
}

TEST_CASE("score is deterministic in the seed") {
    auto X = gaussian_blobs(200, {{0, 0}, {3, 3}}, 0.6, 9);
    GmmModel a = gmm_fit(X, 2, 11);
    GmmModel b = gmm_fit(X, 2, 11);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(1.0, 2.0);
    for (int i = 0; i < 20; ++i) {
        Eigen::Vector2d q(g(rng), g(rng));
        CHECK(gmm_score(a, q) == gmm_score(b, q));
    }
}

TEST_CASE("degenerate inputs") {
    Eigen::MatrixXd tiny(2, 3);
    tiny.setZero();
    CHECK_THROWS_AS(gmm_fit(tiny, 4, 1), AsdError);  // fewer points than components
    CHECK_THROWS_AS(gmm_fit(tiny, 0, 1), AsdError);

    // All-identical points: jitter keeps the single-component fit finite.
    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(20, 2, 1.5);
    GmmModel m = gmm_fit(flat, 1, 1);
    Eigen::Vector2d q(1.5, 1.5);
    CHECK(std::isfinite(gmm_score(m, q)));
}

TEST_CASE("save/load round trip preserves scores exactly") {
    auto X = gaussian_blobs(150, {{0, 0}, {5, -2}}, 0.8, 21);
    InlierModel im;
    im.model = gmm_fit(X, 2, 3);
    im.fit_set_hash = "cafe";
    auto path = fs::temp_directory_path() / "asd_gmm_rt.im";
    save_inlier_model(im, path);
    InlierModel back = load_inlier_model(path);
    CHECK(back.is_gmm());
    CHECK(back.fit_set_hash == "cafe");
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        Eigen::Vector2d q(g(rng), g(rng));
        CHECK(back.score(q) == im.score(q));
    }
    fs::remove(path);
}

TEST_CASE("corrupt model files are rejected") {
    auto path = fs::temp_directory_path() / "asd_gmm_junk.im";
    std::ofstream(path) << "garbage";
    CHECK_THROWS_AS(load_inlier_model(path), AsdError);
    fs::remove(path);
}
