#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "asd/metrics.hpp"

using namespace asd;

namespace {
// Exhaustive pair-counting oracle with half-credit ties.
double auc_oracle(const std::vector<double>& normals, const std::vector<double>& anomalies) {
    double acc = 0.0;
    for (double a : anomalies)
        for (double n : normals) acc += a > n ? 1.0 : (a == n ? 0.5 : 0.0);
    return acc / (double(normals.size()) * double(anomalies.size()));
}
}  // namespace

TEST_CASE("auc: pinned examples") {
    CHECK(auc({0.1, 0.2}, {0.8, 0.9}) == 1.0);
    CHECK(auc({0.1, 0.9}, {0.5, 0.8}) == 0.5);  // 2 of 4 pairs correct
    CHECK(auc({0.3, 0.3, 0.3}, {0.3, 0.3}) == 0.5);
    CHECK_THROWS_AS(auc({}, {1.0}), AsdError);
}

TEST_CASE("auc matches pair counting on random score sets") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> nsz(1, 40);
    std::uniform_int_distribution<int> level(0, 9);  // coarse levels force ties
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> normals, anomalies;
        for (int i = 0, n = nsz(rng); i < n; ++i) normals.push_back(level(rng) * 0.1);
        for (int i = 0, n = nsz(rng); i < n; ++i) anomalies.push_back(level(rng) * 0.1 + 0.05 * level(rng));
        CHECK(auc(normals, anomalies) == doctest::Approx(auc_oracle(normals, anomalies)).epsilon(1e-12));
    }
}

TEST_CASE("auc invariances") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> normals(30), anomalies(20);
    for (auto& v : normals) v = g(rng);
    for (auto& v : anomalies) v = g(rng) + 0.5;
    const double base = auc(normals, anomalies);
    // strictly increasing transform
    auto tf = [](std::vector<double> v) {
        for (auto& x : v) x = std::exp(0.3 * x) + 2.0;
        return v;
    };
    CHECK(auc(tf(normals), tf(anomalies)) == doctest::Approx(base).epsilon(1e-12));
    // complement symmetry
    CHECK(auc(anomalies, normals) == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("pauc: pinned behaviors") {
    CHECK(pauc({0.1, 0.2, 0.3}, {0.8, 0.9}, 0.1) == 1.0);
    // identical multisets -> 0.5 under the tie convention
    CHECK(pauc({0.4, 0.4, 0.4}, {0.4, 0.4, 0.4}, 0.1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(pauc({0.1}, {0.2}, 0.0), AsdError);
    CHECK_THROWS_AS(pauc({}, {0.2}, 0.1), AsdError);
}

TEST_CASE("pauc(p=1) equals auc") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> level(0, 6);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> normals, anomalies;
        for (int i = 0; i < 25; ++i) normals.push_back(level(rng) * 1.0);
        for (int i = 0; i < 15; ++i) anomalies.push_back(level(rng) * 1.0 + 0.5 * level(rng));
        CHECK(pauc(normals, anomalies, 1.0) ==
              doctest::Approx(auc(normals, anomalies)).epsilon(1e-12));
    }
}

TEST_CASE("pauc against a dense trapezoidal oracle") {
    // Oracle: explicit ROC over unique thresholds, trapezoid on [0, p], then
    // the same standardization.
    auto oracle = [](const std::vector<double>& normals, const std::vector<double>& anomalies,
                     double p) {
        std::vector<double> thr = anomalies;
        thr.insert(thr.end(), normals.begin(), normals.end());
        std::sort(thr.begin(), thr.end(), std::greater<>());
        thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
        std::vector<std::pair<double, double>> roc{{0.0, 0.0}};
        for (double t : thr) {
            double tp = 0, fp = 0;
            for (double a : anomalies) tp += a >= t;
            for (double n : normals) fp += n >= t;
            roc.emplace_back(fp / double(normals.size()), tp / double(anomalies.size()));
        }
        double area = 0.0;
        for (std::size_t i = 1; i < roc.size(); ++i) {
            auto [f0, t0] = roc[i - 1];
            auto [f1, t1] = roc[i];
            if (f0 >= p) break;
            if (f1 > p) {
                t1 = t0 + (t1 - t0) * (p - f0) / (f1 - f0);
                f1 = p;
            }
            area += 0.5 * (t0 + t1) * (f1 - f0);
        }
        if (roc.back().first < p) area += (p - roc.back().first) * roc.back().second;
        return 0.5 * (1.0 + (area - 0.5 * p * p) / (p - 0.5 * p * p * 2.0 / 1.0 * 0.5));
    };
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> level(0, 8);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> normals, anomalies;
        for (int i = 0; i < 30; ++i) normals.push_back(level(rng) * 0.25);
        for (int i = 0; i < 20; ++i) anomalies.push_back(level(rng) * 0.25 + 0.125 * level(rng));
        for (double p : {0.1, 0.3, 1.0})
            CHECK(pauc(normals, anomalies, p) ==
                  doctest::Approx(oracle(normals, anomalies, p)).epsilon(1e-9));
    }
}

TEST_CASE("harmonic rollup") {
    CHECK(harmonic_mean({1.0, 0.5}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(harmonic_mean({0.7, 0.7, 0.7}) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(harmonic_mean({0.5, 0.0}) == 0.0);

    std::vector<EvalCell> cells;
    const char* machines[] = {"fan", "gearbox", "pump", "valve", "slider", "ToyCar", "ToyTrain"};
    for (const char* m : machines)
        for (int id = 3; id <= 5; ++id) cells.push_back({m, id, 0.8, 0.6});
    EvalReport rep = harmonic_rollup(cells);
    CHECK(rep.per_machine_hm.size() == 7);
    for (const auto& [m, hm] : rep.per_machine_hm)
        CHECK(hm == doctest::Approx(harmonic_mean({0.8, 0.6})).epsilon(1e-12));
    CHECK(rep.overall_hm == doctest::Approx(harmonic_mean({0.8, 0.6})).epsilon(1e-12));
    // HM <= arithmetic mean
    CHECK(rep.overall_hm <= 0.7);
    // text table mirrors machines x ids layout
    auto text = format_report(rep);
    for (const char* m : machines) CHECK(text.find(m) != std::string::npos);
    CHECK(text.find("All/Har-mean") != std::string::npos);
}
