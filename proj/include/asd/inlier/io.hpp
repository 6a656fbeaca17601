#pragma once

// Inlier model container (GMM or LOF) and its on-disk format: JSON header
// followed by a raw double blob.

#include <cstring>
#include <filesystem>
#include <fstream>
#include <variant>

#include <json.hpp>

#include "asd/common.hpp"
#include "asd/inlier/gmm.hpp"
#include "asd/inlier/lof.hpp"

namespace asd {

struct InlierModel {
    std::variant<GmmModel, LofModel> model;
    std::string fit_set_hash;

    bool is_gmm() const { return std::holds_alternative<GmmModel>(model); }

    double score(const Eigen::VectorXd& e) const {
        if (is_gmm()) return gmm_score(std::get<GmmModel>(model), e);
        return lof_score(std::get<LofModel>(model), e);
    }
};

namespace detail {

inline void write_blob(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double)));
}
inline void read_blob(std::ifstream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), std::streamsize(n * sizeof(double)));
    if (!in) throw AsdError("inlier model blob truncated");
}

}  // namespace detail

inline void save_inlier_model(const InlierModel& im, const std::filesystem::path& path) {
    nlohmann::json header;
    header["fit_set_hash"] = im.fit_set_hash;
    if (im.is_gmm()) {
        const auto& g = std::get<GmmModel>(im.model);
        header["type"] = "gmm";
        header["p"] = g.n_components;
        header["dim"] = g.dim;
        header["jitter"] = g.jitter;
    } else {
        const auto& l = std::get<LofModel>(im.model);
        header["type"] = "lof";
        header["p"] = l.k;
        header["dim"] = int(l.reference_points.cols());
        header["n_points"] = int(l.reference_points.rows());
        header["degenerate"] = l.degenerate;
    }
    const std::string hs = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw AsdError("cannot write inlier model: " + path.string());
    out.write("ASDIM001", 8);
    std::uint32_t hl = std::uint32_t(hs.size());
    out.write(reinterpret_cast<const char*>(&hl), 4);
    out.write(hs.data(), std::streamsize(hs.size()));
    if (im.is_gmm()) {
        const auto& g = std::get<GmmModel>(im.model);
        detail::write_blob(out, g.weights.data(), std::size_t(g.n_components));
        detail::write_blob(out, g.means.data(), std::size_t(g.n_components) * g.dim);
        for (const auto& c : g.covariances)
            detail::write_blob(out, c.data(), std::size_t(g.dim) * g.dim);
    } else {
        const auto& l = std::get<LofModel>(im.model);
        detail::write_blob(out, l.reference_points.data(),
                           std::size_t(l.reference_points.size()));
        detail::write_blob(out, l.k_distance.data(), l.k_distance.size());
        detail::write_blob(out, l.lrd.data(), l.lrd.size());
    }
    if (!out) throw AsdError("inlier model write failed: " + path.string());
}

inline InlierModel load_inlier_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AsdError("cannot read inlier model: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, "ASDIM001", 8) != 0)
        throw AsdError("not an inlier model file: " + path.string());
    std::uint32_t hl = 0;
    in.read(reinterpret_cast<char*>(&hl), 4);
    std::string hs(hl, '\0');
    in.read(hs.data(), hl);
    nlohmann::json header = nlohmann::json::parse(hs);

    InlierModel im;
    im.fit_set_hash = header.value("fit_set_hash", "");
    const std::string type = header.at("type").get<std::string>();
    const int dim = header.at("dim").get<int>();
    if (type == "gmm") {
        GmmModel g;
        g.n_components = header.at("p").get<int>();
        g.dim = dim;
        g.jitter = header.value("jitter", 0.0);
        g.weights.resize(g.n_components);
        detail::read_blob(in, g.weights.data(), std::size_t(g.n_components));
        g.means.resize(g.n_components, dim);
        detail::read_blob(in, g.means.data(), std::size_t(g.n_components) * dim);
        g.covariances.assign(std::size_t(g.n_components), Eigen::MatrixXd(dim, dim));
        for (auto& c : g.covariances) detail::read_blob(in, c.data(), std::size_t(dim) * dim);
        g.refresh_cache();
        im.model = std::move(g);
    } else if (type == "lof") {
        LofModel l;
        l.k = header.at("p").get<int>();
        const int M = header.at("n_points").get<int>();
        l.degenerate = header.value("degenerate", false);
        l.reference_points.resize(M, dim);
        detail::read_blob(in, l.reference_points.data(), std::size_t(M) * dim);
        l.k_distance.resize(std::size_t(M));
        detail::read_blob(in, l.k_distance.data(), std::size_t(M));
        l.lrd.resize(std::size_t(M));
        detail::read_blob(in, l.lrd.data(), std::size_t(M));
        im.model = std::move(l);
    } else {
        throw AsdError("unknown inlier model type: " + type);
    }
    return im;
}

}  // namespace asd
