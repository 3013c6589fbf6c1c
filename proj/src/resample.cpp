#include "agidet/resample.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace agidet::resample {

namespace {

constexpr double kMinWeight = 1e-12;

// Fenwick tree over weights: O(log n) draw + removal, so the sequential
// without-replacement semantics stay exact even for large pools.
class WeightTree {
public:
    explicit WeightTree(std::span<const double> weights)
        : n_(weights.size()), tree_(weights.size() + 1, 0.0), leaf_(weights.begin(), weights.end()) {
        for (std::size_t i = 0; i < n_; ++i) {
            std::size_t j = i + 1;
            tree_[j] += weights[i];
            const std::size_t parent = j + (j & (~j + 1));
            if (parent <= n_) tree_[parent] += tree_[j];
        }
        total_ = 0.0;
        for (std::size_t i = 0; i < n_; ++i) total_ += weights[i];
    }

    double total() const { return total_; }

    // Index of the first leaf whose cumulative weight exceeds target.
    std::size_t find(double target) const {
        std::size_t idx = 0;
        std::size_t mask = 1;
        while ((mask << 1) <= n_) mask <<= 1;
        for (; mask != 0; mask >>= 1) {
            const std::size_t next = idx + mask;
            if (next <= n_ && tree_[next] <= target) {
                target -= tree_[next];
                idx = next;
            }
        }
        return idx;  // 0-based leaf index
    }

    void remove(std::size_t i) {
        const double w = leaf_[i];
        leaf_[i] = 0.0;
        total_ -= w;
        for (std::size_t j = i + 1; j <= n_; j += j & (~j + 1)) tree_[j] -= w;
    }

    double leaf(std::size_t i) const { return leaf_[i]; }

private:
    std::size_t n_;
    std::vector<double> tree_;
    std::vector<double> leaf_;
    double total_ = 0.0;
};

// Canonical chronological order shared by every strategy output.
void sort_canonical(std::vector<core::WindowInstance>& v) {
    std::sort(v.begin(), v.end(), [](const core::WindowInstance& a, const core::WindowInstance& b) {
        if (a.participant_id != b.participant_id) return a.participant_id < b.participant_id;
        if (a.day != b.day) return a.day < b.day;
        return a.minute_index < b.minute_index;
    });
}

RebuiltTrainingSet assemble(const core::LabeledDataset& train,
                            const std::vector<std::size_t>& normal_idx,
                            const std::vector<std::size_t>& picked) {
    RebuiltTrainingSet out;
    for (const auto& w : train.instances)
        if (w.label == 1) out.instances.push_back(w);
    out.agitation_count = out.instances.size();
    for (std::size_t p : picked)
        out.instances.push_back(train.instances[normal_idx[p]]);
    out.retained_normal_count = picked.size();
    sort_canonical(out.instances);
    return out;
}

std::vector<std::size_t> normal_indices(const core::LabeledDataset& train) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < train.instances.size(); ++i)
        if (train.instances[i].label == 0) idx.push_back(i);
    return idx;
}

}  // namespace

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::NONE: return "none";
        case Strategy::RUS: return "rus";
        case Strategy::AEF_IQR: return "aef_iqr";
        case Strategy::WRUS: return "wrus";
    }
    return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "none") return Strategy::NONE;
    if (name == "rus") return Strategy::RUS;
    if (name == "aef_iqr") return Strategy::AEF_IQR;
    if (name == "wrus") return Strategy::WRUS;
    throw ConfigError("unknown strategy: '" + name + "'");
}

std::vector<std::size_t> weighted_sample_without_replacement(
    std::span<const double> weights, std::size_t m, std::uint64_t seed) {
    std::size_t positive = 0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w))
            throw DataError("weighted sampler: weights must be finite and >= 0");
        if (w > 0.0) ++positive;
    }
    if (m > positive)
        throw DataError("weighted sampler: requested " + std::to_string(m) +
                        " draws but only " + std::to_string(positive) +
                        " items have positive weight");

    WeightTree tree(weights);
    Rng rng(derive_seed(seed, 0x5a3d));
    std::vector<std::size_t> picked;
    picked.reserve(m);
    for (std::size_t d = 0; d < m; ++d) {
        const double target = rng.uniform() * tree.total();
        std::size_t i = tree.find(target);
        // Numeric guard: skip already-removed leaves if rounding lands on one.
        while (i < weights.size() && tree.leaf(i) == 0.0) ++i;
        if (i >= weights.size()) {
            i = weights.size();
            while (i-- > 0 && tree.leaf(i) == 0.0) {
            }
        }
        picked.push_back(i);
        tree.remove(i);
    }
    return picked;
}

RebuiltTrainingSet rus(const core::LabeledDataset& train, double proportion,
                       std::uint64_t seed) {
    if (!(proportion > 0.0) || proportion > 1.0)
        throw DataError("rus: proportion must be in (0, 1]");
    const auto normals = normal_indices(train);
    const std::size_t keep = static_cast<std::size_t>(
        std::llround(proportion * static_cast<double>(normals.size())));
    const std::vector<double> weights(normals.size(), 1.0);
    const auto picked = weighted_sample_without_replacement(weights, keep, seed);
    RebuiltTrainingSet out = assemble(train, normals, picked);
    out.strategy = Strategy::RUS;
    out.proportion = proportion;
    out.seed = seed;
    return out;
}

double wrus_weight(double gap_minutes, const WrusParams& params) {
    if (!(params.lambda1 > 0.0)) throw DataError("wrus: lambda1 must be > 0");
    if (std::isinf(gap_minutes)) return 1.0;
    const double base = std::exp(1.0) / params.lambda1;
    const double w =
        1.0 / (1.0 + std::pow(base, params.lambda2 * (params.pivot_minutes - gap_minutes)));
    return std::max(w, kMinWeight);
}

std::vector<double> wrus_weights(const core::LabeledDataset& train,
                                 const std::vector<core::EpisodeAnnotation>& annotations,
                                 const WrusParams& params) {
    std::vector<double> weights;
    for (const auto& w : train.instances) {
        if (w.label != 0) continue;
        weights.push_back(wrus_weight(core::min_time_gap(w, annotations), params));
    }
    return weights;
}

RebuiltTrainingSet wrus(const core::LabeledDataset& train,
                        const std::vector<core::EpisodeAnnotation>& annotations,
                        double proportion, const WrusParams& params, std::uint64_t seed) {
    if (!(proportion > 0.0) || proportion > 1.0)
        throw DataError("wrus: proportion must be in (0, 1]");
    const auto normals = normal_indices(train);
    const std::size_t keep = static_cast<std::size_t>(
        std::llround(proportion * static_cast<double>(normals.size())));
    const auto weights = wrus_weights(train, annotations, params);
    const auto picked = weighted_sample_without_replacement(weights, keep, seed);
    RebuiltTrainingSet out = assemble(train, normals, picked);
    out.strategy = Strategy::WRUS;
    out.proportion = proportion;
    out.seed = seed;
    return out;
}

IqrFence iqr_fence(std::span<const double> scores, double k) {
    if (scores.size() < 4) throw DataError("iqr_fence: need at least 4 scores");
    if (k < 0.0) throw DataError("iqr_fence: k must be >= 0");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };
    IqrFence f;
    f.q1 = quantile(0.25);
    f.q3 = quantile(0.75);
    f.k = k;
    const double iqr = f.q3 - f.q1;
    f.lower = f.q1 - k * iqr;
    f.upper = f.q3 + k * iqr;
    return f;
}

RebuiltTrainingSet aef_iqr(const core::LabeledDataset& train, double k,
                           const autoenc::AeTrainConfig& ae_config, std::uint64_t seed) {
    const auto normals = normal_indices(train);
    if (normals.empty()) throw DataError("aef_iqr: no normal instances");

    std::vector<std::vector<double>> features;
    features.reserve(normals.size());
    for (std::size_t i : normals) features.push_back(train.instances[i].features);

    autoenc::AeTrainConfig cfg = ae_config;
    cfg.seed = derive_seed(ae_config.seed, seed);
    const autoenc::AutoencoderModel model = autoenc::train_autoencoder(features, cfg);

    std::vector<double> scores(normals.size());
    for (std::size_t i = 0; i < normals.size(); ++i)
        scores[i] = autoenc::reconstruction_score(model, features[i]);

    const IqrFence fence = iqr_fence(scores, k);
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < normals.size(); ++i)
        if (fence.accepts(scores[i])) picked.push_back(i);

    RebuiltTrainingSet out = assemble(train, normals, picked);
    out.strategy = Strategy::AEF_IQR;
    out.proportion =
        static_cast<double>(picked.size()) / static_cast<double>(normals.size());
    out.seed = seed;
    out.k = k;
    return out;
}

RebuiltTrainingSet no_resampling(const core::LabeledDataset& train) {
    RebuiltTrainingSet out;
    out.instances = train.instances;
    sort_canonical(out.instances);
    out.strategy = Strategy::NONE;
    out.proportion = 1.0;
    for (const auto& w : out.instances)
        if (w.label == 1)
            out.agitation_count++;
        else
            out.retained_normal_count++;
    return out;
}

void save_rebuilt(const RebuiltTrainingSet& rebuilt,
                  const std::vector<core::EpisodeAnnotation>& annotations,
                  const std::string& prefix) {
    core::LabeledDataset ds;
    ds.instances = rebuilt.instances;
    ds.annotations = annotations;
    core::save_dataset(ds, prefix);

    std::ostringstream ss;
    ss << "strategy = " << strategy_name(rebuilt.strategy) << "\n";
    ss << "proportion = " << format_g9(rebuilt.proportion) << "\n";
    ss << "seed = " << rebuilt.seed << "\n";
    ss << "k = " << format_g9(rebuilt.k) << "\n";
    ss << "retained_normal_count = " << rebuilt.retained_normal_count << "\n";
    ss << "agitation_count = " << rebuilt.agitation_count << "\n";
    write_file_atomic(prefix + ".provenance.txt", ss.str());
}

}  // namespace agidet::resample
