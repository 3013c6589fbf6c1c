#include "agidet/experiment.hpp"

#include <algorithm>
#include <map>

namespace agidet::eval {

namespace {

resample::RebuiltTrainingSet apply_strategy(const core::LabeledDataset& train,
                                            const StrategySpec& spec,
                                            std::uint64_t sample_seed) {
    switch (spec.kind) {
        case resample::Strategy::NONE:
            return resample::no_resampling(train);
        case resample::Strategy::RUS:
            return resample::rus(train, spec.proportion, sample_seed);
        case resample::Strategy::WRUS:
            return resample::wrus(train, train.annotations, spec.proportion, spec.wrus,
                                  sample_seed);
        case resample::Strategy::AEF_IQR:
            return resample::aef_iqr(train, spec.k, spec.ae, sample_seed);
    }
    throw ConfigError("unknown resampling strategy");
}

}  // namespace

RunResult run_cv_experiment(const core::LabeledDataset& data, const RunConfig& config,
                            const core::LabeledDataset* eval_truth) {
    if (config.sample_seeds.empty())
        throw ConfigError("run_cv_experiment: need at least one sampling seed");
    if (eval_truth) {
        if (eval_truth->instances.size() != data.instances.size())
            throw DataError("run_cv_experiment: truth dataset has different instance count");
        for (std::size_t i = 0; i < data.instances.size(); ++i) {
            const auto& a = data.instances[i];
            const auto& b = eval_truth->instances[i];
            if (a.participant_id != b.participant_id || a.day != b.day ||
                a.minute_index != b.minute_index)
                throw DataError("run_cv_experiment: truth dataset misaligned at row " +
                                std::to_string(i + 1));
        }
    }

    RunResult result;
    result.plan = core::make_folds(data, config.n_folds, config.fold_seed);

    // Per-fold training sets and (instances, truth) test sets, built once.
    struct FoldData {
        core::LabeledDataset train;
        std::vector<core::WindowInstance> test;
        std::vector<int> test_truth;
        std::vector<std::size_t> test_rows;  // rows in `data` for score grouping
    };
    std::vector<FoldData> folds(static_cast<std::size_t>(config.n_folds));
    for (auto& f : folds) f.train.annotations = data.annotations;
    for (std::size_t row = 0; row < data.instances.size(); ++row) {
        const auto& w = data.instances[row];
        const int fold = result.plan.fold_of.at(core::DayKey{w.participant_id, w.day});
        for (int f = 0; f < config.n_folds; ++f) {
            if (f == fold) {
                folds[static_cast<std::size_t>(f)].test.push_back(w);
                folds[static_cast<std::size_t>(f)].test_truth.push_back(
                    eval_truth ? eval_truth->instances[row].label : w.label);
                folds[static_cast<std::size_t>(f)].test_rows.push_back(row);
            } else {
                folds[static_cast<std::size_t>(f)].train.instances.push_back(w);
            }
        }
    }

    if (config.collect_scores)
        result.scores.resize(config.sample_seeds.size());

    for (std::size_t s = 0; s < config.sample_seeds.size(); ++s) {
        const std::uint64_t sample_seed = config.sample_seeds[s];
        std::vector<double> oof_scores;
        if (config.collect_scores) oof_scores.assign(data.instances.size(), 0.0);

        for (int f = 0; f < config.n_folds; ++f) {
            const FoldData& fd = folds[static_cast<std::size_t>(f)];
            const resample::RebuiltTrainingSet rebuilt =
                apply_strategy(fd.train, config.strategy, sample_seed);

            const model::TuneResult tuned = model::tune_hyperparams(
                rebuilt, config.grid, config.costs,
                derive_seed(sample_seed, 0x70e, static_cast<std::uint64_t>(f)),
                config.controls);
            const model::ForestModel forest = model::train_rfc(
                rebuilt, tuned.n_trees, tuned.n_predictors, config.costs,
                derive_seed(sample_seed, 0xf17, static_cast<std::uint64_t>(f)),
                config.controls);

            const std::vector<double> scores =
                model::predict_scores(forest, fd.test, config.controls.threads);

            CellReport cell;
            cell.fold = f;
            cell.sample_seed = sample_seed;
            cell.auroc = auroc(scores, fd.test_truth);
            cell.tune_ms = tuned.wall_ms;
            cell.fit_ms = forest.train_wall_ms;
            cell.n_trees = tuned.n_trees;
            cell.n_predictors = tuned.n_predictors;
            cell.rebuilt_size = rebuilt.instances.size();
            cell.test_size = fd.test.size();
            cell.retained_normals = rebuilt.retained_normal_count;
            cell.agitations = rebuilt.agitation_count;
            cell.realized_proportion = rebuilt.proportion;
            result.cells.push_back(cell);

            if (config.collect_scores)
                for (std::size_t i = 0; i < fd.test_rows.size(); ++i)
                    oof_scores[fd.test_rows[i]] = scores[i];
        }

        if (config.collect_scores) {
            SeedScores ss;
            ss.sample_seed = sample_seed;
            decide::DaySeries* cur = nullptr;
            for (std::size_t row = 0; row < data.instances.size(); ++row) {
                const auto& w = data.instances[row];
                if (!cur || cur->participant_id != w.participant_id || cur->day != w.day) {
                    ss.days.emplace_back();
                    cur = &ss.days.back();
                    cur->participant_id = w.participant_id;
                    cur->day = w.day;
                }
                cur->scores.push_back(oof_scores[row]);
                cur->truth.push_back(eval_truth ? eval_truth->instances[row].label : w.label);
            }
            result.scores[s] = std::move(ss);
        }
    }

    for (const auto& c : result.cells) {
        result.mean_auroc += c.auroc;
        result.mean_fit_ms += c.fit_ms;
        result.mean_tune_ms += c.tune_ms;
    }
    const double n_cells = static_cast<double>(result.cells.size());
    result.mean_auroc /= n_cells;
    result.mean_fit_ms /= n_cells;
    result.mean_tune_ms /= n_cells;
    return result;
}

}  // namespace agidet::eval
