#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agidet/autoenc.hpp"
#include "agidet/core.hpp"
#include "agidet/decide.hpp"
#include "agidet/eval.hpp"
#include "agidet/model.hpp"
#include "agidet/resample.hpp"

namespace agidet::eval {

struct StrategySpec {
    resample::Strategy kind = resample::Strategy::RUS;
    double proportion = 1.0;           // rus / wrus
    double k = 1.5;                    // aef_iqr
    resample::WrusParams wrus;         // wrus
    autoenc::AeTrainConfig ae;         // aef_iqr
};

struct RunConfig {
    StrategySpec strategy;
    model::HyperGrid grid;
    model::CostSpec costs;
    model::TrainControls controls;
    int n_folds = 2;
    std::uint64_t fold_seed = 1;                  // keeps CV partitions fixed
    std::vector<std::uint64_t> sample_seeds = {1};  // resampling repetitions
    bool collect_scores = false;
};

// One (fold, sampling-seed) cell of the experiment.
struct CellReport {
    int fold = 0;
    std::uint64_t sample_seed = 0;
    double auroc = 0.0;
    double tune_ms = 0.0;
    double fit_ms = 0.0;
    int n_trees = 0;
    int n_predictors = 0;
    std::size_t rebuilt_size = 0;
    std::size_t test_size = 0;
    std::size_t retained_normals = 0;
    std::size_t agitations = 0;
    double realized_proportion = 0.0;
};

// Out-of-fold scores for one sampling seed, pooled over folds and grouped by
// participant-day in chronological order (ready for CCR sweeps).
struct SeedScores {
    std::uint64_t sample_seed = 0;
    std::vector<decide::DaySeries> days;
};

struct RunResult {
    core::SplitPlan plan;
    std::vector<CellReport> cells;  // ordered by (sample_seed, fold)
    double mean_auroc = 0.0;
    double mean_fit_ms = 0.0;
    double mean_tune_ms = 0.0;
    std::vector<SeedScores> scores;  // filled when collect_scores
};

// The comparison-experiment protocol: resample the training fold only, tune
// on it internally, train, score the untouched test fold. `eval_truth`, when
// given, must hold the same instances as `data` (same participant / day /
// minute sequence) and supplies the labels used for test metrics — training
// still sees `data`'s labels.
RunResult run_cv_experiment(const core::LabeledDataset& data, const RunConfig& config,
                            const core::LabeledDataset* eval_truth = nullptr);

}  // namespace agidet::eval
