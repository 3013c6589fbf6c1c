#include "agidet/model.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "agidet/eval.hpp"

namespace agidet::model {

namespace {

// Per-fit feature quantization. Each feature gets up to max_bins-1 candidate
// cut values; bin b holds values v with cuts[b-1] < v <= cuts[b], and the
// split "bin <= b" is exactly "v <= cuts[b]". When a feature has few distinct
// values every one becomes its own bin, so small problems split exactly.
struct BinnedData {
    std::size_t n = 0;
    int n_bins = 0;                      // max over features
    std::vector<std::uint8_t> bins;      // feature-major: bins[f*n + i]
    std::vector<std::vector<double>> cuts;  // per feature, ascending
    std::vector<std::uint8_t> labels;
    std::vector<double> sample_weight;   // 1 or cost_fn
};

BinnedData bin_dataset(const std::vector<core::WindowInstance>& data, double cost_fn,
                       int max_bins, int threads) {
    BinnedData out;
    out.n = data.size();
    out.bins.resize(static_cast<std::size_t>(kFeatureCount) * out.n);
    out.cuts.resize(kFeatureCount);
    out.labels.resize(out.n);
    out.sample_weight.resize(out.n);
    for (std::size_t i = 0; i < out.n; ++i) {
        out.labels[i] = static_cast<std::uint8_t>(data[i].label);
        out.sample_weight[i] = data[i].label == 1 ? cost_fn : 1.0;
    }

    parallel_for(kFeatureCount, threads, [&](std::size_t f) {
        std::vector<double> sorted(out.n);
        for (std::size_t i = 0; i < out.n; ++i) sorted[i] = data[i].features[f];
        std::sort(sorted.begin(), sorted.end());

        std::vector<double>& cuts = out.cuts[f];
        std::vector<double> distinct;
        distinct.reserve(std::min<std::size_t>(out.n, 512));
        for (std::size_t i = 0; i < out.n; ++i)
            if (i == 0 || sorted[i] != sorted[i - 1]) distinct.push_back(sorted[i]);

        if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
            // all but the largest value become cuts: exact splits
            cuts.assign(distinct.begin(), distinct.end() - (distinct.empty() ? 0 : 1));
        } else {
            cuts.reserve(static_cast<std::size_t>(max_bins) - 1);
            for (int j = 1; j < max_bins; ++j) {
                const std::size_t pos =
                    static_cast<std::size_t>(static_cast<double>(j) *
                                             static_cast<double>(out.n) / max_bins);
                const double v = sorted[std::min(pos, out.n - 1)];
                if (v < distinct.back() && (cuts.empty() || v > cuts.back()))
                    cuts.push_back(v);
            }
        }

        for (std::size_t i = 0; i < out.n; ++i) {
            const double v = data[i].features[f];
            const std::size_t b =
                static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), v) -
                                         cuts.begin());
            out.bins[f * out.n + i] = static_cast<std::uint8_t>(b);
        }
    });

    int nb = 1;
    for (const auto& c : out.cuts) nb = std::max(nb, static_cast<int>(c.size()) + 1);
    out.n_bins = nb;
    return out;
}

struct NodeTask {
    int node_id;
    std::size_t begin, end;  // range in the per-tree index array
    int depth;
    double w0, w1;
    std::uint64_t in_bag;  // bootstrap-multiplicity sample count
};

Tree grow_tree(const BinnedData& d, int n_predictors, std::uint64_t tree_seed,
               const TrainControls& controls) {
    Rng rng(tree_seed);
    const std::size_t n = d.n;

    // bootstrap: multiplicity per sample; the node index arrays hold distinct
    // in-bag samples only
    std::vector<std::uint16_t> mult(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(n));
        if (mult[j] < 65535) mult[j]++;
    }
    std::vector<std::uint32_t> idx;
    idx.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (mult[i] > 0) idx.push_back(static_cast<std::uint32_t>(i));

    Tree tree;
    if (idx.empty()) {
        tree.nodes.push_back(TreeNode{});
        return tree;
    }

    std::vector<std::uint32_t> scratch(idx.size());
    std::vector<double> hist0(static_cast<std::size_t>(d.n_bins));
    std::vector<double> hist1(static_cast<std::size_t>(d.n_bins));
    std::vector<int> feature_pool(kFeatureCount);
    for (int f = 0; f < kFeatureCount; ++f) feature_pool[static_cast<std::size_t>(f)] = f;

    auto node_weights = [&](std::size_t begin, std::size_t end) {
        double w0 = 0, w1 = 0;
        std::uint64_t in_bag = 0;
        for (std::size_t p = begin; p < end; ++p) {
            const std::uint32_t i = idx[p];
            const double w = d.sample_weight[i] * mult[i];
            if (d.labels[i]) w1 += w; else w0 += w;
            in_bag += mult[i];
        }
        return std::tuple<double, double, std::uint64_t>{w0, w1, in_bag};
    };

    tree.nodes.emplace_back();
    auto [rw0, rw1, rbag] = node_weights(0, idx.size());
    std::vector<NodeTask> stack;
    stack.push_back({0, 0, idx.size(), 0, rw0, rw1, rbag});

    while (!stack.empty()) {
        NodeTask task = stack.back();
        stack.pop_back();
        TreeNode& node = tree.nodes[static_cast<std::size_t>(task.node_id)];
        node.w0 = task.w0;
        node.w1 = task.w1;

        const bool pure = task.w0 == 0.0 || task.w1 == 0.0;
        const bool too_small =
            task.in_bag < 2 * static_cast<std::uint64_t>(std::max(1, controls.min_node_size));
        const bool too_deep = controls.max_depth > 0 && task.depth >= controls.max_depth;
        if (pure || too_small || too_deep) continue;

        // draw n_predictors distinct candidate features
        const int mtry = std::min(n_predictors, kFeatureCount);
        for (int j = 0; j < mtry; ++j) {
            const int pick = j + static_cast<int>(rng.below(
                                     static_cast<std::uint64_t>(kFeatureCount - j)));
            std::swap(feature_pool[static_cast<std::size_t>(j)],
                      feature_pool[static_cast<std::size_t>(pick)]);
        }

        const double parent = task.w0 * task.w1 / (task.w0 + task.w1);
        double best_gain = 1e-12;
        int best_feature = -1;
        int best_bin = -1;
        for (int j = 0; j < mtry; ++j) {
            const int f = feature_pool[static_cast<std::size_t>(j)];
            const int nb = static_cast<int>(d.cuts[static_cast<std::size_t>(f)].size()) + 1;
            if (nb < 2) continue;
            std::fill(hist0.begin(), hist0.begin() + nb, 0.0);
            std::fill(hist1.begin(), hist1.begin() + nb, 0.0);
            const std::uint8_t* bins = &d.bins[static_cast<std::size_t>(f) * n];
            for (std::size_t p = task.begin; p < task.end; ++p) {
                const std::uint32_t i = idx[p];
                const double w = d.sample_weight[i] * mult[i];
                if (d.labels[i]) hist1[bins[i]] += w; else hist0[bins[i]] += w;
            }
            double l0 = 0, l1 = 0;
            for (int b = 0; b + 1 < nb; ++b) {
                l0 += hist0[static_cast<std::size_t>(b)];
                l1 += hist1[static_cast<std::size_t>(b)];
                const double lsum = l0 + l1;
                const double r0 = task.w0 - l0, r1 = task.w1 - l1;
                const double rsum = r0 + r1;
                if (lsum <= 0.0 || rsum <= 0.0) continue;
                // weighted Gini impurity after the split, additive form
                const double child = l0 * l1 / lsum + r0 * r1 / rsum;
                const double gain = parent - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_bin = b;
                }
            }
        }
        if (best_feature < 0) continue;  // unsplittable with the drawn features

        // partition the range: bins <= best_bin to the left, stable
        const std::uint8_t* bins = &d.bins[static_cast<std::size_t>(best_feature) * n];
        std::size_t nl = 0, nr = 0;
        for (std::size_t p = task.begin; p < task.end; ++p) {
            const std::uint32_t i = idx[p];
            if (bins[i] <= best_bin)
                idx[task.begin + nl++] = i;
            else
                scratch[nr++] = i;
        }
        std::memcpy(&idx[task.begin + nl], scratch.data(), nr * sizeof(std::uint32_t));

        const int left_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const int right_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        // re-fetch: emplace may have reallocated
        TreeNode& parent_node = tree.nodes[static_cast<std::size_t>(task.node_id)];
        parent_node.feature = best_feature;
        parent_node.threshold =
            d.cuts[static_cast<std::size_t>(best_feature)][static_cast<std::size_t>(best_bin)];
        parent_node.left = left_id;
        parent_node.right = right_id;

        const std::size_t mid = task.begin + nl;
        auto [lw0, lw1, lbag] = node_weights(task.begin, mid);
        auto [rw0b, rw1b, rbagb] = node_weights(mid, task.end);
        stack.push_back({right_id, mid, task.end, task.depth + 1, rw0b, rw1b, rbagb});
        stack.push_back({left_id, task.begin, mid, task.depth + 1, lw0, lw1, lbag});
    }
    return tree;
}

double tree_score(const Tree& tree, std::span<const double> x) {
    int cur = 0;
    for (;;) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(cur)];
        if (node.feature < 0) {
            const double total = node.w0 + node.w1;
            return total > 0.0 ? node.w1 / total : 0.0;
        }
        cur = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                          : node.right;
    }
}

}  // namespace

ForestModel train_rfc(const resample::RebuiltTrainingSet& train, int n_trees,
                      int n_predictors, CostSpec costs, std::uint64_t seed,
                      const TrainControls& controls) {
    if (n_trees < 1) throw DataError("train_rfc: n_trees must be >= 1");
    if (n_predictors < 1 || n_predictors > kFeatureCount)
        throw DataError("train_rfc: n_predictors must be in [1, " +
                        std::to_string(kFeatureCount) + "]");
    std::size_t n0 = 0, n1 = 0;
    for (const auto& w : train.instances) (w.label == 1 ? n1 : n0)++;
    if (n0 == 0 || n1 == 0)
        throw DataError("train_rfc: training set must contain both classes");

    double cost = costs.cost_fn;
    if (cost == 0.0) cost = std::max(1.0, static_cast<double>(n0) / static_cast<double>(n1));
    if (cost < 1.0) throw DataError("train_rfc: cost_fn must be >= 1");

    const auto t0 = std::chrono::steady_clock::now();
    const BinnedData binned = bin_dataset(train.instances, cost,
                                          std::clamp(controls.max_bins, 2, 256),
                                          controls.threads);

    ForestModel model;
    model.trees.resize(static_cast<std::size_t>(n_trees));
    model.n_predictors = n_predictors;
    model.cost_fn = cost;
    model.seed = seed;
    model.train_size = train.instances.size();

    parallel_for(static_cast<std::size_t>(n_trees), controls.threads, [&](std::size_t t) {
        model.trees[t] =
            grow_tree(binned, n_predictors, derive_seed(seed, 0x7ee, t), controls);
    });

    const auto t1 = std::chrono::steady_clock::now();
    model.train_wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    return model;
}

double predict_score(const ForestModel& model, std::span<const double> features) {
    if (features.size() != static_cast<std::size_t>(kFeatureCount))
        throw DataError("predict_score: expected " + std::to_string(kFeatureCount) +
                        " features");
    if (model.trees.empty()) throw DataError("predict_score: empty forest");
    double acc = 0.0;
    for (const auto& tree : model.trees) acc += tree_score(tree, features);
    return acc / static_cast<double>(model.trees.size());
}

std::vector<double> predict_scores(const ForestModel& model,
                                   const std::vector<core::WindowInstance>& instances,
                                   int threads) {
    std::vector<double> out(instances.size());
    parallel_for(instances.size(), threads,
                 [&](std::size_t i) { out[i] = predict_score(model, instances[i].features); });
    return out;
}

TuneResult tune_hyperparams(const resample::RebuiltTrainingSet& train, const HyperGrid& grid,
                            CostSpec costs, std::uint64_t seed,
                            const TrainControls& controls) {
    if (grid.n_trees_options.empty() || grid.n_predictors_options.empty())
        throw DataError("tune_hyperparams: empty grid");
    for (int p : grid.n_predictors_options)
        if (p < 1 || p > kFeatureCount) throw DataError("tune_hyperparams: bad n_predictors");
    for (int t : grid.n_trees_options)
        if (t < 1) throw DataError("tune_hyperparams: bad n_trees");

    const auto t0 = std::chrono::steady_clock::now();
    TuneResult result;

    if (grid.n_trees_options.size() == 1 && grid.n_predictors_options.size() == 1) {
        // singleton grid: the argmax is forced, skip the internal CV cost
        result.n_trees = grid.n_trees_options[0];
        result.n_predictors = grid.n_predictors_options[0];
        result.best_auroc = 0.0;
        return result;
    }

    core::LabeledDataset as_dataset;
    as_dataset.instances = train.instances;
    const core::SplitPlan plan =
        core::make_folds(as_dataset, 2, derive_seed(seed, 0x1f01d));

    // materialize the two internal splits once
    std::array<resample::RebuiltTrainingSet, 2> inner_train;
    std::array<std::vector<core::WindowInstance>, 2> inner_test;
    for (int f = 0; f < 2; ++f) {
        for (const auto& w : train.instances) {
            const int fold = plan.fold_of.at(core::DayKey{w.participant_id, w.day});
            if (fold == f)
                inner_test[static_cast<std::size_t>(f)].push_back(w);
            else
                inner_train[static_cast<std::size_t>(f)].instances.push_back(w);
        }
    }

    // ascending order makes "first strict improvement wins" the tie rule:
    // fewer trees first, then fewer predictors
    std::vector<int> trees_sorted = grid.n_trees_options;
    std::vector<int> preds_sorted = grid.n_predictors_options;
    std::sort(trees_sorted.begin(), trees_sorted.end());
    std::sort(preds_sorted.begin(), preds_sorted.end());

    double best = -1.0;
    for (int nt : trees_sorted) {
        for (int np : preds_sorted) {
            double mean_auc = 0.0;
            for (int f = 0; f < 2; ++f) {
                const ForestModel m =
                    train_rfc(inner_train[static_cast<std::size_t>(f)], nt, np, costs,
                              derive_seed(seed, 0x2cf, static_cast<std::uint64_t>(f)),
                              controls);
                const auto scores =
                    predict_scores(m, inner_test[static_cast<std::size_t>(f)], controls.threads);
                std::vector<int> truth;
                truth.reserve(inner_test[static_cast<std::size_t>(f)].size());
                for (const auto& w : inner_test[static_cast<std::size_t>(f)])
                    truth.push_back(w.label);
                mean_auc += eval::auroc(scores, truth);
            }
            mean_auc /= 2.0;
            // strict improvement only: ties stay with fewer trees / predictors
            if (mean_auc > best + 1e-12) {
                best = mean_auc;
                result.n_trees = nt;
                result.n_predictors = np;
            }
        }
    }
    result.best_auroc = best;
    const auto t1 = std::chrono::steady_clock::now();
    result.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return result;
}

void save_forest(const ForestModel& model, const std::string& path) {
    std::ostringstream ss;
    ss << "schema agidet.forest.v1\n";
    ss << "n_trees " << model.trees.size() << "\n";
    ss << "n_predictors " << model.n_predictors << "\n";
    ss << "cost_fn " << format_g17(model.cost_fn) << "\n";
    ss << "seed " << model.seed << "\n";
    ss << "train_size " << model.train_size << "\n";
    ss << "provenance " << (model.provenance.empty() ? "-" : model.provenance) << "\n";
    for (const auto& tree : model.trees) {
        ss << "tree " << tree.nodes.size() << "\n";
        for (const auto& n : tree.nodes)
            ss << n.feature << ' ' << format_g17(n.threshold) << ' ' << n.left << ' '
               << n.right << ' ' << format_g17(n.w0) << ' ' << format_g17(n.w1) << "\n";
    }
    write_file_atomic(path, ss.str());
}

ForestModel load_forest(const std::string& path) {
    std::istringstream ss(read_file(path));
    std::string tok, schema;
    if (!(ss >> tok >> schema) || tok != "schema" || schema != "agidet.forest.v1")
        throw DataError(path + ": not an agidet forest file");
    ForestModel m;
    std::size_t n_trees = 0;
    if (!(ss >> tok >> n_trees) || tok != "n_trees") throw DataError(path + ": bad n_trees");
    if (!(ss >> tok >> m.n_predictors) || tok != "n_predictors")
        throw DataError(path + ": bad n_predictors");
    if (!(ss >> tok >> m.cost_fn) || tok != "cost_fn") throw DataError(path + ": bad cost_fn");
    if (!(ss >> tok >> m.seed) || tok != "seed") throw DataError(path + ": bad seed");
    if (!(ss >> tok >> m.train_size) || tok != "train_size")
        throw DataError(path + ": bad train_size");
    if (!(ss >> tok >> m.provenance) || tok != "provenance")
        throw DataError(path + ": bad provenance");
    if (m.provenance == "-") m.provenance.clear();
    m.trees.resize(n_trees);
    for (auto& tree : m.trees) {
        std::size_t n_nodes = 0;
        if (!(ss >> tok >> n_nodes) || tok != "tree") throw DataError(path + ": bad tree header");
        tree.nodes.resize(n_nodes);
        for (auto& n : tree.nodes)
            if (!(ss >> n.feature >> n.threshold >> n.left >> n.right >> n.w0 >> n.w1))
                throw DataError(path + ": truncated tree");
    }
    return m;
}

}  // namespace agidet::model
