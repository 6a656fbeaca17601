// asd: anomalous sound detection pipeline CLI.
//
//   asd synth     --spec spec.json --out corpus/
//   asd scan      --root corpus/ --layout dcase2021 --out manifest.json
//   asd train     --config run.json [--machine fan] [--seed N] [--desk]
//   asd fit-inlier --config run.json --machine fan
//   asd score     --config run.json --machine fan [--split eval-test]
//   asd evaluate  --scores scores.csv [--out report.json]
//   asd ablate    --config run.json --arm no_mixup|no_h|ids_only
//   asd pipeline  --config run.json [--desk]
//   asd export    --config run.json --machine fan [--split eval-test] --out emb.csv

#include <CLI11.hpp>
#include <iostream>

#include "asd/config.hpp"
#include "asd/embed_export.hpp"
#include "asd/metrics.hpp"
#include "asd/pipeline.hpp"
#include "asd/synth.hpp"

using namespace asd;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string machine;
    std::int64_t seed = -1;
    bool desk = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_machine) {
    cmd->add_option("--config", o.config_path, "run config JSON")->required();
    auto* m = cmd->add_option("--machine", o.machine, "machine type");
    if (need_machine) m->required();
    cmd->add_option("--seed", o.seed, "override seed");
    cmd->add_flag("--desk", o.desk, "desk-scale preset (small encoder, few epochs)");
}

RunConfig load_config(const CommonOpts& o) {
    RunConfig cfg = load_run_config(o.config_path);
    if (!o.machine.empty()) {
        cfg.machine_type = o.machine;
        if (cfg.use_machine_defaults) cfg.apply_machine_defaults();
    }
    if (o.desk) cfg.apply_desk_preset();
    if (o.seed >= 0) cfg.seed = std::uint64_t(o.seed);
    if (!cfg.manifest_path.is_absolute()) {
        auto base = std::filesystem::path(o.config_path).parent_path();
        cfg.manifest_path = base / cfg.manifest_path;
    }
    return cfg;
}

struct LoadedRun {
    Manifest manifest;
    std::unique_ptr<MelCache> cache;
};

LoadedRun open_run(const RunConfig& cfg) {
    LoadedRun lr;
    lr.manifest = load_manifest(cfg.manifest_path);
    auto stats = fit_all_norm_stats(lr.manifest);
    lr.cache = std::make_unique<MelCache>(lr.manifest, MelConfig{}, std::move(stats));
    return lr;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, std::int64_t seed) {
    SynthSpec spec = load_synth_spec(spec_path);
    if (seed >= 0) spec.seed = std::uint64_t(seed);
    Manifest m = generate_synthetic(spec, out_dir);
    save_manifest(m, std::filesystem::path(out_dir) / "manifest.json");
    std::cout << "wrote " << m.records.size() << " clips under " << out_dir << "\n";
    return 0;
}

int cmd_scan(const std::string& root, const std::string& layout, const std::string& out,
             std::int64_t seed) {
    Manifest m = scan_corpus(root, layout, seed >= 0 ? std::uint64_t(seed) : 0);
    save_manifest(m, out);
    std::cout << "manifest: " << m.records.size() << " records, "
              << m.machine_types.size() << " machine types, K=" << m.ids_per_type << "\n";
    return 0;
}

int cmd_train(const CommonOpts& o, const std::string& arm_name) {
    RunConfig cfg = load_config(o);
    cfg.validate();
    auto run = open_run(cfg);
    std::vector<int> train_side;
    for (std::size_t i = 0; i < run.manifest.records.size(); ++i) {
        auto s = run.manifest.records[i].split;
        if (s == Split::train || s == Split::train_val) train_side.push_back(int(i));
    }
    run.cache->precompute(train_side, num_workers());
    TrainArm arm = TrainArm::from_name(arm_name, cfg);
    TrainResult res = train_model<float>(cfg, run.manifest, *run.cache, arm);
    std::ofstream log(cfg.out_dir / (cfg.machine_type + "_" + arm.name + "_train_log.json"));
    log << train_log_json(res).dump(2) << "\n";
    std::cout << "best epoch " << res.best_epoch << " val loss " << res.best_val_loss
              << " -> " << res.checkpoint_path.string() << "\n";
    return 0;
}

int cmd_fit_inlier(const CommonOpts& o, const std::string& arm_name) {
    RunConfig cfg = load_config(o);
    cfg.validate();
    auto run = open_run(cfg);
    auto ckpt = cfg.out_dir / (cfg.machine_type + "_" + arm_name + ".ckpt");
    Model<float> model = checkpoint_load<float>(ckpt);
    std::vector<int> ids;
    for (int id = 0; id < run.manifest.ids_per_type; ++id) ids.push_back(id);
    auto models = fit_inlier_models(cfg, run.manifest, model, *run.cache, cfg.h_param, ids);
    for (const auto& [id, im] : models) {
        auto path = cfg.out_dir / (cfg.machine_type + "_" + arm_name + "_id" +
                                   std::to_string(id) + ".im");
        save_inlier_model(im, path);
        std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
}

int cmd_score(const CommonOpts& o, const std::string& split_name, const std::string& arm_name) {
    RunConfig cfg = load_config(o);
    cfg.validate();
    auto run = open_run(cfg);
    auto ckpt = cfg.out_dir / (cfg.machine_type + "_" + arm_name + ".ckpt");
    Model<float> model = checkpoint_load<float>(ckpt);
    const Split split = split_from_string(split_name);
    std::map<int, InlierModel> inliers;
    const bool no_h = arm_name == "no_h";
    if (!no_h)
        for (int id = 0; id < run.manifest.ids_per_type; ++id) {
            auto path = cfg.out_dir / (cfg.machine_type + "_" + arm_name + "_id" +
                                       std::to_string(id) + ".im");
            if (std::filesystem::exists(path)) inliers.emplace(id, load_inlier_model(path));
        }
    auto scores = score_split(cfg, run.manifest, model, *run.cache, inliers, split, no_h);
    auto out_path = cfg.out_dir / (cfg.machine_type + "_" + arm_name + "_scores.csv");
    std::ofstream csv(out_path);
    csv << score_table_csv(scores, cfg.segments);
    std::cout << "wrote " << scores.size() << " rows to " << out_path.string() << "\n";
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& score_files, const std::string& out_path) {
    std::vector<ClipScore> scores;
    for (const auto& f : score_files) {
        std::ifstream in(f);
        if (!in) throw AsdError("cannot read scores: " + f);
        auto part = parse_score_table_csv(in);
        scores.insert(scores.end(), part.begin(), part.end());
    }
    auto cells = evaluate_scores(scores);
    if (cells.empty()) throw AsdError("no (normal, anomaly) labelled groups in scores");
    EvalReport rep = harmonic_rollup(cells);
    for (const auto& c : rep.cells)
        if (!std::isfinite(c.auc) || !std::isfinite(c.pauc)) throw AsdError("NaN metric");
    std::cout << format_report(rep);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << to_json(rep).dump(2) << "\n";
    }
    return 0;
}

int cmd_pipeline(const CommonOpts& o, const std::string& arm) {
    RunConfig cfg = load_config(o);
    if (cfg.machine_type.empty()) cfg.machine_type = "(per-type)";
    auto manifest = load_manifest(cfg.manifest_path);
    PipelineResult res = run_pipeline<float>(cfg, manifest, arm);
    std::cout << format_report(res.report);
    nlohmann::json j = to_json(res.report);
    j["provenance"] = res.provenance;
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir / ("report_" + arm + ".json"));
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_export(const CommonOpts& o, const std::string& split_name, const std::string& out_path,
               const std::string& arm_name) {
    RunConfig cfg = load_config(o);
    cfg.validate();
    auto run = open_run(cfg);
    auto ckpt = cfg.out_dir / (cfg.machine_type + "_" + arm_name + ".ckpt");
    Model<float> model = checkpoint_load<float>(ckpt);
    std::vector<int> recs;
    const Split split = split_from_string(split_name);
    for (std::size_t i = 0; i < run.manifest.records.size(); ++i)
        if (run.manifest.records[i].split == split) recs.push_back(int(i));
    auto rows = export_embeddings(run.manifest, recs, model, *run.cache, cfg.segments,
                                  cfg.segment_s, out_path);
    std::cout << "wrote " << rows << " rows to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anomalous sound detection: outlier-exposure training + inlier modeling"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, root, layout = "dcase2021", out_file = "manifest.json";
    std::int64_t seed = -1;
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("--spec", spec_path, "synthesis spec JSON")->required();
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--seed", seed);

    auto* scan = app.add_subcommand("scan", "scan a corpus tree into a manifest");
    scan->add_option("--root", root)->required();
    scan->add_option("--layout", layout);
    scan->add_option("--out", out_file);
    scan->add_option("--seed", seed);

    CommonOpts train_o, fit_o, score_o, abl_o, pipe_o, exp_o;
    std::string score_split_name = "eval-test", abl_arm, exp_split = "eval-test", exp_out;
    std::string eval_out;
    std::vector<std::string> eval_scores;

    auto* train = app.add_subcommand("train", "train the embedding for one machine type");
    add_common(train, train_o, true);

    auto* fit = app.add_subcommand("fit-inlier", "fit per-ID inlier models");
    add_common(fit, fit_o, true);

    auto* score = app.add_subcommand("score", "score clips of a split");
    add_common(score, score_o, true);
    score->add_option("--split", score_split_name);

    auto* eval = app.add_subcommand("evaluate", "AUC/pAUC report from score CSVs");
    eval->add_option("--scores", eval_scores, "score CSV files")->required();
    eval->add_option("--out", eval_out, "report JSON path");

    auto* ablate = app.add_subcommand("ablate", "run an ablation arm end to end");
    add_common(ablate, abl_o, false);
    ablate->add_option("--arm", abl_arm, "no_mixup | no_h | ids_only")->required();

    auto* pipeline = app.add_subcommand("pipeline", "full serial method over all machine types");
    add_common(pipeline, pipe_o, false);

    auto* exp = app.add_subcommand("export", "export per-segment embeddings as CSV");
    add_common(exp, exp_o, true);
    exp->add_option("--split", exp_split);
    exp->add_option("--out", exp_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(spec_path, out_dir, seed);
        if (scan->parsed()) return cmd_scan(root, layout, out_file, seed);
        if (train->parsed()) return cmd_train(train_o, "proposed");
        if (fit->parsed()) return cmd_fit_inlier(fit_o, "proposed");
        if (score->parsed()) return cmd_score(score_o, score_split_name, "proposed");
        if (eval->parsed()) return cmd_evaluate(eval_scores, eval_out);
        if (ablate->parsed()) return cmd_pipeline(abl_o, abl_arm);
        if (pipeline->parsed()) return cmd_pipeline(pipe_o, "proposed");
        if (exp->parsed()) return cmd_export(exp_o, exp_split, exp_out, "proposed");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
