#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agidet/core.hpp"
#include "agidet/signal.hpp"

namespace agidet::synth {

struct CohortConfig {
    int n_participants = 12;
    int days_per_participant = 30;
    double agitation_day_fraction = 0.4;
    int episodes_per_day_min = 1;
    int episodes_per_day_max = 3;
    double episode_duration_mean = 8.6;  // minutes
    double episode_duration_sd = 2.5;
    int episode_duration_min = 3;
    int episode_duration_max = 18;
    double target_prevalence = 0.013;
    int n_normal_categories = 5;
    // Scales how strongly agitation minutes separate from normal ones in
    // acceleration variance and EDA level. 1.0 gives a deliberately
    // imperfect (mid-0.8s AUROC) detection problem.
    double effect_size = 1.0;
    int minutes_per_day = 480;  // wear time per day; >= 480 keeps the 8 h contract
    int start_minute = 600;     // wristband put on at 10:00
    std::string first_day = "2024-03-01";
    std::uint64_t seed = 7;
};

void validate_config(const CohortConfig& config);

// Minute-level plan for one participant-day. Episode minutes carry an
// intensity (> 0, ramping up/down at episode edges); normal minutes carry a
// behaviour-category tag.
struct DayPlan {
    std::string participant_id;
    std::string day;
    int start_minute = 0;
    int minutes = 0;
    std::vector<core::EpisodeAnnotation> episodes;
    std::vector<int> minute_category;      // per in-frame minute; -1 where agitated
    std::vector<double> minute_intensity;  // per in-frame minute; 0 where normal
    std::uint64_t render_seed = 0;
};

struct CohortPlan {
    std::vector<DayPlan> days;
    long long total_minutes = 0;
    long long agitation_minutes = 0;
    int n_episodes = 0;
    double realized_prevalence = 0.0;
    double mean_episode_minutes = 0.0;
};

// Places episodes so the realized prevalence lands within 0.4 percentage
// points of the target and the realized mean episode duration within 1.5
// minutes of the configured mean. Deterministic per seed. Throws DataError
// when the config cannot meet those targets.
CohortPlan plan_cohort(const CohortConfig& config);

// Heavy step: synthesizes the six raw channels for one planned day at
// device-like rates (acc 32 Hz, bvp 64 Hz, eda/temp 4 Hz).
signal::SignalFrame render_day(const DayPlan& plan, const CohortConfig& config);

struct GeneratedCohort {
    std::vector<signal::SignalFrame> frames;  // one per participant-day
    std::vector<core::EpisodeAnnotation> annotations;
    CohortPlan plan;
};

// Plan + render everything. Materializes all frames, so intended for small
// configs and tests; cmd_synth streams day by day instead.
GeneratedCohort generate_cohort(const CohortConfig& config);

// Shrinks each episode inward by independent uniform shifts in
// [0, max_shift] per end, modelling agitation missed near transitions.
// Episodes whose span collapses (start > end) are dropped and counted.
struct JitterResult {
    std::vector<core::EpisodeAnnotation> annotations;
    int dropped = 0;
};
JitterResult inject_boundary_jitter(const std::vector<core::EpisodeAnnotation>& annotations,
                                    int max_shift_minutes, std::uint64_t seed);

// Full pipeline: plan, render, filter, window, extract, label. Streams one
// day at a time; deterministic and independent of thread count.
core::LabeledDataset build_dataset(const CohortConfig& config, int threads = 0,
                                   double cutoff_hz = signal::kDefaultCutoffHz);

}  // namespace agidet::synth
