#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "support/synthetic.hpp"
#include "vesselpipe/cache.hpp"
#include "vesselpipe/experiment.hpp"

using namespace vesselpipe;
namespace fs = std::filesystem;

namespace {

fs::path scratch_root() {
    return fs::temp_directory_path() / "vesselpipe_pipeline_test";
}

// Tiny dataset + tiny networks: the whole pipeline in seconds.
ExperimentConfig micro_config(const std::string& out_name) {
    static bool dataset_ready = false;
    const fs::path data_dir = scratch_root() / "data";
    if (!dataset_ready) {
        fs::remove_all(data_dir);
        testsupport::write_synthetic_custom(data_dir.string(), 6, 64, 64, 5);
        dataset_ready = true;
    }

    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.dataset = DatasetTag::CUSTOM;
    cfg.root = data_dir.string();
    cfg.variant = PipelineVariant::DynamicTargeted;
    cfg.seed = 21;
    cfg.folds = 2;
    cfg.out_dir = (scratch_root() / out_name).string();
    cfg.set("stage1.depth", "2");
    cfg.set("stage1.input", "92");  // 92 -> 52
    cfg.set("stage1.base", "4");
    cfg.set("stage1.epochs", "2");
    cfg.set("stage1.batch", "2");
    cfg.set("stage2.input", "60");
    cfg.set("stage2.base", "4");
    cfg.set("stage2.epochs", "2");
    cfg.set("patch.p", "20");
    cfg.set("patch.context", "60");
    fs::remove_all(cfg.out_dir);
    return cfg;
}

std::vector<fs::path> artifact_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        if (e.path().filename() == "cache_manifest.json") continue;
        files.push_back(fs::relative(e.path(), dir));
    }
    std::sort(files.begin(), files.end());
    return files;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VESSELPIPE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("run_experiment produces a full artifact tree and sane metrics") {
    const ExperimentConfig cfg = micro_config("exp_main");
    const ExperimentResult result = run_experiment(cfg);

    REQUIRE(result.per_fold.size() == 2);
    CHECK(result.aggregate.rows.size() == 6);  // every image tested once
    CHECK(result.aggregate.mean_precision >= 0.0);
    CHECK(result.aggregate.mean_precision <= 1.0);
    CHECK(result.aggregate.f1 >= 0.0);
    CHECK(result.aggregate.f1 <= 1.0);

    const StagePaths paths = StagePaths::at(cfg, 0);
    CHECK(fs::exists(paths.stage1_best));
    CHECK(fs::exists(paths.stage1_final));
    CHECK(fs::exists(paths.trace_csv));
    CHECK(fs::exists(paths.plot_png));
    CHECK(fs::exists(paths.metrics_csv));
    CHECK(fs::exists(paths.summary_json));
    CHECK(fs::exists(cfg.out_dir + "/summary.json"));
    CHECK(fs::exists(cfg.out_dir + "/config.effective"));

    const PreparedDataset data = prepare_dataset(cfg);
    for (const auto& id : data.plan.folds[0].test_ids) {
        CHECK(fs::exists(paths.likelihood_dir + "/" + id + ".png"));
        CHECK(fs::exists(paths.partition_dir + "/" + id + ".png"));
        CHECK(fs::exists(paths.seg_dir + "/" + id + ".png"));
    }
}

TEST_CASE("subcommand composition equals run_experiment bit for bit") {
    const ExperimentConfig whole = micro_config("exp_whole");
    run_experiment(whole);

    const ExperimentConfig staged = micro_config("exp_staged");
    fs::create_directories(staged.out_dir);
    staged.echo(staged.out_dir + "/config.effective");
    const PreparedDataset data = prepare_dataset(staged);
    std::vector<MetricsReport> reports;
    for (int fold = 0; fold < 2; ++fold) {
        cmd_train1(staged, fold);
        cmd_infer(staged, fold);
        cmd_srs(staged, fold);
        cmd_train2(staged, fold);
        cmd_predict(staged, fold);
        reports.push_back(cmd_evaluate(staged, fold));
    }

    const auto whole_files = artifact_files(whole.out_dir);
    auto staged_files = artifact_files(staged.out_dir);
    // The staged run lacks only the whole-run aggregate outputs.
    std::vector<fs::path> filtered;
    for (const auto& f : whole_files)
        if (f != "metrics_all_folds.csv" && f != "summary.json") filtered.push_back(f);
    CHECK(filtered == staged_files);

    for (const auto& rel : staged_files) {
        const auto a = hash_file((fs::path(whole.out_dir) / rel).string());
        const auto b = hash_file((fs::path(staged.out_dir) / rel).string());
        INFO("artifact differs: " << rel.string());
        CHECK(a == b);
    }
}

TEST_CASE("stages are idempotent via content-hash caching") {
    const ExperimentConfig cfg = micro_config("exp_idem");
    cmd_train1(cfg, 0);
    const fs::path ckpt = StagePaths::at(cfg, 0).stage1_best;
    const auto t0 = fs::last_write_time(ckpt);
    cmd_train1(cfg, 0);  // second run must skip retraining
    CHECK(fs::last_write_time(ckpt) == t0);

    cmd_infer(cfg, 0);
    const PreparedDataset data = prepare_dataset(cfg);
    const std::string some_map = StagePaths::at(cfg, 0).likelihood_dir + "/" +
                                 data.plan.folds[0].test_ids[0] + ".png";
    const auto m0 = fs::last_write_time(some_map);
    cmd_infer(cfg, 0);
    CHECK(fs::last_write_time(some_map) == m0);
}

TEST_CASE("missing upstream artifacts name the prior subcommand") {
    const ExperimentConfig cfg = micro_config("exp_missing");
    CHECK_THROWS_WITH_AS(cmd_infer(cfg, 0),
                         doctest::Contains("run `train1` first"), std::runtime_error);
    CHECK_THROWS_WITH_AS(cmd_srs(cfg, 0), doctest::Contains("run `infer` first"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(cmd_evaluate(cfg, 0), doctest::Contains("run `predict` first"),
                         std::runtime_error);
}

TEST_CASE("cli: usage and configuration errors exit with code 2") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("bogus-subcommand") == 2);
    CHECK(run_cli("srs --support 250 --resistance 200 --root /tmp --out /tmp/vp_cli_x") == 2);
    CHECK(run_cli("reproduce T9") == 2);
}

TEST_CASE("cli: preprocess caches rasters and is idempotent") {
    const fs::path data_dir = scratch_root() / "data";  // built by micro_config
    micro_config("exp_cli_seed_dataset");               // ensure dataset exists
    const fs::path out = scratch_root() / "cli_pre";
    fs::remove_all(out);

    const std::string args = "preprocess --dataset CUSTOM --root " + data_dir.string() +
                             " --out " + out.string();
    CHECK(run_cli(args) == 0);
    int cached = 0;
    for (const auto& e : fs::recursive_directory_iterator(out))
        if (e.path().extension() == ".png") ++cached;
    CHECK(cached == 6);
    CHECK(run_cli(args) == 0);

    // Runtime failure (missing dataset) exits 1.
    CHECK(run_cli("preprocess --dataset CUSTOM --root /nonexistent --out " + out.string()) == 1);
}
