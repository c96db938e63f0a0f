#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vesselpipe/config.hpp"
#include "vesselpipe/eval.hpp"

namespace vesselpipe {

// Loads the dataset, fills `green` with the CLAHE-equalized green
// channel (through the preprocess cache when artifacts are fresh), and
// derives the fold plan from the experiment seed.
struct PreparedDataset {
    std::vector<FundusSample> samples;
    FoldPlan plan;
};

PreparedDataset prepare_dataset(const ExperimentConfig& cfg);

struct FoldSets {
    std::vector<FundusSample> train, val, test;
};

FoldSets split_fold(const PreparedDataset& data, int fold);

// Artifact locations for one fold under the experiment output directory.
struct StagePaths {
    std::string fold_dir;
    std::string stage1_best, stage1_final;
    std::string trace_csv, draws_csv, plot_png;
    std::string likelihood_dir, partition_dir, seg_dir;
    std::string stage2_ckpt;
    std::string metrics_csv, summary_json;

    static StagePaths at(const ExperimentConfig& cfg, int fold);
};

// Pipeline stages. Each consumes the previous stage's files, skips work
// whose content hashes are unchanged, and throws std::runtime_error
// naming the missing prior subcommand when inputs are absent.
void cmd_preprocess(const ExperimentConfig& cfg);
void cmd_train1(const ExperimentConfig& cfg, int fold);
void cmd_infer(const ExperimentConfig& cfg, int fold);
void cmd_srs(const ExperimentConfig& cfg, int fold);
void cmd_train2(const ExperimentConfig& cfg, int fold);
void cmd_predict(const ExperimentConfig& cfg, int fold);
MetricsReport cmd_evaluate(const ExperimentConfig& cfg, int fold);

struct ExperimentResult {
    std::vector<MetricsReport> per_fold;
    MetricsReport aggregate;  // pooled test rows across folds
};

// Runs the configured pipeline variant across the fold plan by invoking
// the stage commands in sequence, then aggregates the test metrics.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// --- Table reproduction ------------------------------------------------

struct PublishedRow {
    std::string label;
    std::array<double, 4> values;  // precision, recall, f1, accuracy
};

struct ReproduceRowResult {
    std::string label;
    std::array<double, 4> published;
    std::optional<MetricsReport> obtained;  // empty when dataset missing
};

struct ReproduceResult {
    std::string table;
    std::vector<ReproduceRowResult> rows;
};

// Applies the smoke or full scale preset, runs each row configuration of
// the requested table (T1..T8), and returns obtained-vs-published values.
ReproduceResult cmd_reproduce(const ExperimentConfig& base, const std::string& table,
                              const std::string& scale);

void apply_scale_preset(ExperimentConfig& cfg, const std::string& scale);

std::uint64_t fold_stage_seed(std::uint64_t seed, int fold, std::uint64_t stage_tag);

}  // namespace vesselpipe
