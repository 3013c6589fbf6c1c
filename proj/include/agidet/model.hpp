#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agidet/core.hpp"
#include "agidet/resample.hpp"

namespace agidet::model {

// Misclassification cost of a false negative (agitation called normal)
// relative to a unit false positive. 0 = resolve at train time to the
// training set's normal:agitation ratio (inverse-frequency costing).
struct CostSpec {
    double cost_fn = 0.0;
};

struct HyperGrid {
    std::vector<int> n_trees_options = {30, 50, 70, 90, 110};
    std::vector<int> n_predictors_options = {1, 4, 7, 10, 13, 16, 19, 22, 25, 28, 31, 34};
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double w0 = 0.0;  // cost-weighted class tallies at the leaf
    double w1 = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // node 0 is the root
};

struct TrainControls {
    int max_depth = 0;      // 0 = grow to purity
    int min_node_size = 1;  // in-bag samples per leaf
    int max_bins = 256;     // candidate-threshold resolution per feature
    int threads = 0;        // 0 = library default
};

struct ForestModel {
    std::vector<Tree> trees;
    int n_predictors = 0;
    double cost_fn = 1.0;  // resolved value actually used
    std::uint64_t seed = 0;
    // training metadata
    std::string provenance;
    std::size_t train_size = 0;
    double train_wall_ms = 0.0;  // measured, excluded from serialization
};

// Grows n_trees bootstrap trees with cost-weighted Gini splits over
// n_predictors randomly drawn features per node. Deterministic for a fixed
// seed regardless of thread count.
ForestModel train_rfc(const resample::RebuiltTrainingSet& train, int n_trees,
                      int n_predictors, CostSpec costs, std::uint64_t seed,
                      const TrainControls& controls = {});

// Cost-weighted mean over trees of the leaf class-1 weight fraction.
double predict_score(const ForestModel& model, std::span<const double> features);

std::vector<double> predict_scores(const ForestModel& model,
                                   const std::vector<core::WindowInstance>& instances,
                                   int threads = 0);

// Internal two-fold CV over the grid; mean AUROC argmax, ties broken toward
// fewer trees then fewer predictors. A singleton grid is returned directly.
struct TuneResult {
    int n_trees = 0;
    int n_predictors = 0;
    double best_auroc = 0.0;
    double wall_ms = 0.0;
};
TuneResult tune_hyperparams(const resample::RebuiltTrainingSet& train, const HyperGrid& grid,
                            CostSpec costs, std::uint64_t seed,
                            const TrainControls& controls = {});

void save_forest(const ForestModel& model, const std::string& path);
ForestModel load_forest(const std::string& path);

}  // namespace agidet::model
