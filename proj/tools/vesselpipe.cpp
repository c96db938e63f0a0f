#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "vesselpipe/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> dataset, variant, out, root;
    std::optional<std::uint64_t> seed;
    std::optional<int> support, resistance, epochs1, epochs2;
    int fold = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_fold = true) {
    cmd->add_option("--config", f.config_path, "experiment config file (key = value lines)");
    cmd->add_option("--dataset", f.dataset, "dataset tag (DRIVE, STARE, CHASE_DB, ...)");
    cmd->add_option("--root", f.root, "dataset root directory");
    cmd->add_option("--variant", f.variant,
                    "pipeline variant (dynamic+targeted, dynamic-only, fixed-only, "
                    "fixed+targeted)");
    cmd->add_option("--seed", f.seed, "experiment seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--support", f.support, "SRS support threshold (0-255)");
    cmd->add_option("--resistance", f.resistance, "SRS resistance threshold (0-255)");
    cmd->add_option("--epochs1", f.epochs1, "stage-1 training epochs");
    cmd->add_option("--epochs2", f.epochs2, "stage-2 training epochs");
    if (with_fold) cmd->add_option("--fold", f.fold, "fold index (default 0)");
}

vesselpipe::ExperimentConfig build_config(const CommonFlags& f) {
    using vesselpipe::ExperimentConfig;
    ExperimentConfig cfg = f.config_path.empty() ? ExperimentConfig::defaults()
                                                 : ExperimentConfig::from_file(f.config_path);
    if (f.dataset) cfg.set("dataset", *f.dataset);
    if (f.root) cfg.set("root", *f.root);
    if (f.variant) cfg.set("variant", *f.variant);
    if (f.seed) cfg.set("seed", std::to_string(*f.seed));
    if (f.out) cfg.set("out", *f.out);
    if (f.support) cfg.set("srs.support", std::to_string(*f.support));
    if (f.resistance) cfg.set("srs.resistance", std::to_string(*f.resistance));
    if (f.epochs1) cfg.set("stage1.epochs", std::to_string(*f.epochs1));
    if (f.epochs2) cfg.set("stage2.epochs", std::to_string(*f.epochs2));
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vesselpipe: two-stage retinal vessel segmentation pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string table = "T7";
    std::string scale = "smoke";
    bool experiment_all_folds = false;

    auto* preprocess = app.add_subcommand("preprocess", "green channel + CLAHE into the cache");
    auto* train1 = app.add_subcommand("train1", "train the stage-1 U-net");
    auto* infer = app.add_subcommand("infer", "write likelihood maps for the fold");
    auto* srs = app.add_subcommand("srs", "support-resistance partitions");
    auto* train2 = app.add_subcommand("train2", "train the stage-2 mini U-net");
    auto* predict = app.add_subcommand("predict", "final segmentations for the test set");
    auto* evaluate = app.add_subcommand("evaluate", "metrics tables for the test set");
    auto* reproduce = app.add_subcommand("reproduce", "re-run a published results table");
    auto* experiment =
        app.add_subcommand("experiment", "run every stage across the full fold plan");

    for (CLI::App* cmd : {preprocess, train1, infer, srs, train2, predict, evaluate, experiment})
        add_common(cmd, flags, cmd != preprocess && cmd != experiment);
    add_common(reproduce, flags, false);
    reproduce->add_option("table", table, "table id (T1..T8)");
    reproduce->add_option("--scale", scale, "smoke or full");
    (void)experiment_all_folds;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const vesselpipe::ExperimentConfig cfg = build_config(flags);
        if (preprocess->parsed()) vesselpipe::cmd_preprocess(cfg);
        else if (train1->parsed()) vesselpipe::cmd_train1(cfg, flags.fold);
        else if (infer->parsed()) vesselpipe::cmd_infer(cfg, flags.fold);
        else if (srs->parsed()) vesselpipe::cmd_srs(cfg, flags.fold);
        else if (train2->parsed()) vesselpipe::cmd_train2(cfg, flags.fold);
        else if (predict->parsed()) vesselpipe::cmd_predict(cfg, flags.fold);
        else if (evaluate->parsed()) vesselpipe::cmd_evaluate(cfg, flags.fold);
        else if (reproduce->parsed()) vesselpipe::cmd_reproduce(cfg, table, scale);
        else if (experiment->parsed()) vesselpipe::run_experiment(cfg);
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
