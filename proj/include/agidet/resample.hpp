#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agidet/autoenc.hpp"
#include "agidet/core.hpp"

namespace agidet::resample {

enum class Strategy { NONE, RUS, AEF_IQR, WRUS };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// Output of any undersampler. Every agitation instance of the source
// training set is retained; only normals are subsampled.
struct RebuiltTrainingSet {
    std::vector<core::WindowInstance> instances;  // canonical chronological order
    Strategy strategy = Strategy::NONE;
    double proportion = 1.0;  // requested for RUS/WRUS, realized for AEF-IQR
    std::uint64_t seed = 0;
    std::size_t retained_normal_count = 0;
    std::size_t agitation_count = 0;
    // AEF-IQR provenance
    double k = 0.0;
};

// Deformed-sigmoid selection weights (defaults follow the published
// constants: lambda1 = 1.5, lambda2 = 1.2, pivot 10 minutes).
struct WrusParams {
    double lambda1 = 1.5;
    double lambda2 = 1.2;
    double pivot_minutes = 10.0;
};

// Tukey fence over reconstruction scores: [q1 - k*iqr, q3 + k*iqr].
struct IqrFence {
    double q1 = 0.0;
    double q3 = 0.0;
    double k = 0.0;
    double lower = 0.0;
    double upper = 0.0;

    // Strict inequalities on both sides; boundary scores are rejected.
    bool accepts(double score) const { return score > lower && score < upper; }
};

// Uniform undersampling of normals to round(proportion * n_normals).
// Deterministic per seed.
RebuiltTrainingSet rus(const core::LabeledDataset& train, double proportion,
                       std::uint64_t seed);

// Weight for one gap value; gap may be +infinity (no episode that day), in
// which case the weight is exactly 1.
double wrus_weight(double gap_minutes, const WrusParams& params);

// Weight per normal instance of `train`, in instance order (label-1
// instances get no entry). Weights are clamped below at 1e-12.
std::vector<double> wrus_weights(const core::LabeledDataset& train,
                                 const std::vector<core::EpisodeAnnotation>& annotations,
                                 const WrusParams& params);

// Sequential draws proportional to remaining weights, without replacement.
// Returns selected indices into `weights`, in draw order. All weights must be
// > 0 and m must not exceed the item count.
std::vector<std::size_t> weighted_sample_without_replacement(
    std::span<const double> weights, std::size_t m, std::uint64_t seed);

RebuiltTrainingSet wrus(const core::LabeledDataset& train,
                        const std::vector<core::EpisodeAnnotation>& annotations,
                        double proportion, const WrusParams& params, std::uint64_t seed);

// Quartiles by linear interpolation at position p*(n-1). Requires >= 4 scores.
IqrFence iqr_fence(std::span<const double> scores, double k);

// Autoencoder filter: train on the fold's normals, score them, keep the ones
// strictly inside the k-fence, keep all agitations. `proportion` in the
// result is the realized retained fraction.
RebuiltTrainingSet aef_iqr(const core::LabeledDataset& train, double k,
                           const autoenc::AeTrainConfig& ae_config, std::uint64_t seed);

// No resampling: the training set itself, canonically ordered.
RebuiltTrainingSet no_resampling(const core::LabeledDataset& train);

// Dataset files plus a `<prefix>.provenance.txt` sidecar.
void save_rebuilt(const RebuiltTrainingSet& rebuilt,
                  const std::vector<core::EpisodeAnnotation>& annotations,
                  const std::string& prefix);

}  // namespace agidet::resample
