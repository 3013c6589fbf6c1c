#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agidet/common.hpp"

namespace agidet::core {

// One annotated agitation episode. Minutes are offsets from the start of the
// calendar day; end_minute is inclusive.
struct EpisodeAnnotation {
    std::string participant_id;
    std::string day;  // ISO date, e.g. "2024-03-01"
    int start_minute = 0;
    int end_minute = 0;

    bool operator==(const EpisodeAnnotation&) const = default;
};

// One 1-minute feature window. `category` tags the synthetic normal-behaviour
// regime a normal minute was drawn from; -1 means untagged (all agitation
// instances are untagged).
struct WindowInstance {
    std::string participant_id;
    std::string day;
    int minute_index = 0;
    std::vector<double> features;  // exactly kFeatureCount entries
    int label = 0;                 // 0 = normal, 1 = agitation
    int category = -1;

    bool operator==(const WindowInstance&) const = default;
};

struct LabeledDataset {
    std::vector<WindowInstance> instances;
    std::vector<EpisodeAnnotation> annotations;
    // Free-form provenance line (config hash, seeds). Round-trips through
    // save/load so derived files stay traceable.
    std::string provenance;

    bool operator==(const LabeledDataset&) const = default;
};

// (participant, day) — the unit of fold splitting and decision-window scoping.
struct DayKey {
    std::string participant_id;
    std::string day;

    auto operator<=>(const DayKey&) const = default;
};

struct SplitPlan {
    std::map<DayKey, int> fold_of;
    int n_folds = 0;

    bool operator==(const SplitPlan&) const = default;
};

// Throws DataError describing the first violated invariant (duplicate or
// out-of-order minutes, wrong feature count, non-finite features,
// label/annotation inconsistency). Row numbers refer to instance order.
void validate_dataset(const LabeledDataset& dataset);

// Dataset files live in pairs: `<prefix>.data.csv` (instances) and
// `<prefix>.ann.csv` (annotations). See README for the column layout.
LabeledDataset load_dataset(const std::string& prefix);
void save_dataset(const LabeledDataset& dataset, const std::string& prefix);

// Day-level stratified split: all minutes of a participant-day land in one
// fold, agitation days are spread greedily so per-fold class-1 minute counts
// stay balanced. Deterministic per seed.
SplitPlan make_folds(const LabeledDataset& dataset, int n_folds, std::uint64_t seed);

// Minimum whole-minute distance from a normal instance to any annotated
// minute of the same participant-day; +infinity when the day has no episode.
// Throws DataError when called on a label-1 instance.
double min_time_gap(const WindowInstance& instance,
                    const std::vector<EpisodeAnnotation>& annotations);

// True iff `minute` falls inside some episode of (participant, day).
bool minute_is_annotated(const std::vector<EpisodeAnnotation>& annotations,
                         const std::string& participant_id, const std::string& day,
                         int minute);

// Labels every instance from the given annotations (1 inside an episode of
// its participant-day, else 0). Used when re-deriving labels after jitter.
void relabel_from_annotations(LabeledDataset& dataset,
                              const std::vector<EpisodeAnnotation>& annotations);

// ISO-date helper for the synthetic cohort: date `days` after `base`.
std::string add_days(const std::string& base_iso, int days);

}  // namespace agidet::core
