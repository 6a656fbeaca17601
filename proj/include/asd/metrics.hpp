#pragma once

// AUC (Mann-Whitney, ties counted half), partial AUC with the DCASE/sklearn
// standardization onto [0,1], and harmonic-mean roll-ups over per-ID cells.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asd/common.hpp"

namespace asd {

inline double auc(const std::vector<double>& normal_scores,
                  const std::vector<double>& anomaly_scores) {
    if (normal_scores.empty() || anomaly_scores.empty())
        throw AsdError("auc: need at least one score per class");
    // Rank-based Mann-Whitney with midranks for ties.
    struct Item { double s; bool anomaly; };
    std::vector<Item> all;
    all.reserve(normal_scores.size() + anomaly_scores.size());
    for (double s : normal_scores) all.push_back({s, false});
    for (double s : anomaly_scores) all.push_back({s, true});
    std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.s < b.s; });
    double rank_sum_anom = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].s == all[i].s) ++j;
        const double midrank = 0.5 * double(i + 1 + j);  // average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (all[k].anomaly) rank_sum_anom += midrank;
        i = j;
    }
    const double na = double(anomaly_scores.size()), nn = double(normal_scores.size());
    return (rank_sum_anom - na * (na + 1.0) / 2.0) / (na * nn);
}

// Partial AUC over FPR in [0, p], standardized onto [0,1] so that a random
// ranking scores 0.5 and pauc(p=1) equals auc. Tied scores are processed as
// one ROC step (diagonal segment).
inline double pauc(const std::vector<double>& normal_scores,
                   const std::vector<double>& anomaly_scores, double p = 0.1) {
    if (normal_scores.empty() || anomaly_scores.empty())
        throw AsdError("pauc: need at least one score per class");
    if (!(p > 0.0 && p <= 1.0)) throw AsdError("pauc: p must be in (0, 1]");

    struct Item { double s; bool anomaly; };
    std::vector<Item> all;
    all.reserve(normal_scores.size() + anomaly_scores.size());
    for (double s : normal_scores) all.push_back({s, false});
    for (double s : anomaly_scores) all.push_back({s, true});
    std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.s > b.s; });

    const double na = double(anomaly_scores.size()), nn = double(normal_scores.size());
    double area = 0.0;
    double fpr = 0.0, tpr = 0.0;
    std::size_t i = 0;
    bool cut = false;
    while (i < all.size() && !cut) {
        std::size_t j = i;
        int tp = 0, fp = 0;
        while (j < all.size() && all[j].s == all[i].s) {
            if (all[j].anomaly) ++tp; else ++fp;
            ++j;
        }
        double nfpr = fpr + fp / nn;
        double ntpr = tpr + tp / na;
        if (nfpr > p) {
            // Linear interpolation of the segment at FPR = p.
            const double frac = (p - fpr) / (nfpr - fpr);
            ntpr = tpr + frac * (ntpr - tpr);
            nfpr = p;
            cut = true;
        }
        area += 0.5 * (tpr + ntpr) * (nfpr - fpr);
        fpr = nfpr;
        tpr = ntpr;
        i = j;
    }
    if (fpr < p) area += (p - fpr) * tpr;  // flat tail (all positives exhausted)

    const double min_area = 0.5 * p * p;  // diagonal
    const double max_area = p;
    return 0.5 * (1.0 + (area - min_area) / (max_area - min_area));
}

inline double harmonic_mean(const std::vector<double>& values) {
    if (values.empty()) throw AsdError("harmonic mean of nothing");
    double acc = 0.0;
    for (double v : values) {
        if (v <= 0.0) return 0.0;  // undefined; reported as 0, caller warns
        acc += 1.0 / v;
    }
    return double(values.size()) / acc;
}

struct EvalCell {
    std::string machine_type;
    int product_id = 0;
    double auc = 0.0;
    double pauc = 0.0;
};

struct EvalReport {
    std::vector<EvalCell> cells;
    std::map<std::string, double> per_machine_hm;
    double overall_hm = 0.0;
    bool has_zero_cell = false;
};

inline EvalReport harmonic_rollup(const std::vector<EvalCell>& cells) {
    EvalReport rep;
    rep.cells = cells;
    std::map<std::string, std::vector<double>> per_machine;
    std::vector<double> all;
    for (const auto& c : cells) {
        per_machine[c.machine_type].push_back(c.auc);
        per_machine[c.machine_type].push_back(c.pauc);
        all.push_back(c.auc);
        all.push_back(c.pauc);
        if (c.auc <= 0.0 || c.pauc <= 0.0) rep.has_zero_cell = true;
    }
    for (const auto& [machine, vals] : per_machine)
        rep.per_machine_hm[machine] = harmonic_mean(vals);
    rep.overall_hm = harmonic_mean(all);
    return rep;
}

inline nlohmann::json to_json(const EvalReport& rep) {
    nlohmann::json j;
    auto& cells = j["cells"] = nlohmann::json::array();
    for (const auto& c : rep.cells)
        cells.push_back({{"machine_type", c.machine_type},
                         {"product_id", c.product_id},
                         {"auc", c.auc},
                         {"pauc", c.pauc}});
    j["per_machine_harmonic_mean"] = rep.per_machine_hm;
    j["overall_harmonic_mean"] = rep.overall_hm;
    j["has_zero_cell"] = rep.has_zero_cell;
    return j;
}

// Aligned text table, percentages with two decimals.
inline std::string format_report(const EvalReport& rep) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << std::left << std::setw(12) << "machine" << std::setw(6) << "id" << std::setw(10)
       << "AUC[%]" << std::setw(10) << "pAUC[%]" << "\n";
    for (const auto& c : rep.cells)
        os << std::left << std::setw(12) << c.machine_type << std::setw(6) << c.product_id
           << std::setw(10) << 100.0 * c.auc << std::setw(10) << 100.0 * c.pauc << "\n";
    os << "--\n";
    for (const auto& [machine, hm] : rep.per_machine_hm)
        os << std::left << std::setw(18) << (machine + " hm") << 100.0 * hm << "\n";
    os << std::left << std::setw(18) << "All/Har-mean" << 100.0 * rep.overall_hm << "\n";
    if (rep.has_zero_cell) os << "warning: zero-valued cell, harmonic mean reported as 0\n";
    return os.str();
}

}  // namespace asd
