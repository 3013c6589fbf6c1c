#include "agidet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace agidet::synth {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// Category parameter ramps. frac in [0,1] positions a category between the
// calmest and the most active normal regime.
struct MinuteParams {
    double acc_sigma;
    double acc_move_hz;
    double acc_move_amp;
    double eda_level;
    double eda_scr_rate;  // expected skin-conductance responses per minute
    double bvp_hz;
    double bvp_amp;
    double temp_level;
};

// Continuous position along the normal activity spectrum; categories sit at
// frac = c / (C-1).
MinuteParams normal_at(double frac) {
    MinuteParams p;
    p.acc_sigma = 0.05 + 0.16 * frac;
    p.acc_move_hz = 0.4 + 0.8 * frac;
    p.acc_move_amp = 0.6 * p.acc_sigma;
    p.eda_level = 0.30 + 1.00 * frac;
    p.eda_scr_rate = 0.08 + 0.22 * frac;
    p.bvp_hz = 1.00 + 0.30 * frac;
    p.bvp_amp = 0.80 + 0.25 * frac;
    p.temp_level = 31.5 + 0.40 * frac;
    return p;
}

MinuteParams normal_params(int category, int n_categories, double /*effect*/) {
    const double frac =
        n_categories > 1 ? static_cast<double>(category) / (n_categories - 1) : 0.0;
    return normal_at(frac);
}

// Agitation minutes sit on an intensity spectrum. Weak (transition) minutes
// reproduce one of the two most active normal categories exactly — on the
// discrete category grid, so per-minute detection has an irreducible error
// floor no amount of training data removes. Separability appears gradually
// above lift ~ 1.1. Episodes stay temporally contiguous, which is what the
// decision-window postprocessing exploits.
MinuteParams agitation_params(double intensity, double effect, int n_categories) {
    const double lift = intensity * effect;
    const int top = n_categories - 1;
    const int mimic = lift < 0.5 ? std::max(0, top - 1) : top;
    const MinuteParams look = normal_params(mimic, n_categories, effect);
    const double t = std::clamp((lift - 0.95) / 1.2, 0.0, 1.0);
    if (t == 0.0) return look;

    MinuteParams hot;
    hot.acc_sigma = 0.21 + 0.07 * (lift - 0.95);
    hot.acc_move_hz = 1.4 + 0.4 * std::min(lift, 2.5);
    hot.acc_move_amp = 0.8 * hot.acc_sigma;
    hot.eda_level = 1.30 + 0.40 * (lift - 0.95);
    hot.eda_scr_rate = 0.40 + 0.30 * std::min(lift, 2.5);
    hot.bvp_hz = 1.30 + 0.12 * std::min(lift, 2.5);
    hot.bvp_amp = 1.05 + 0.12 * std::min(lift, 2.5);
    hot.temp_level = 31.9 + 0.12 * (lift - 0.95);

    MinuteParams p;
    p.acc_sigma = look.acc_sigma + t * (hot.acc_sigma - look.acc_sigma);
    p.acc_move_hz = look.acc_move_hz + t * (hot.acc_move_hz - look.acc_move_hz);
    p.acc_move_amp = look.acc_move_amp + t * (hot.acc_move_amp - look.acc_move_amp);
    p.eda_level = look.eda_level + t * (hot.eda_level - look.eda_level);
    p.eda_scr_rate = look.eda_scr_rate + t * (hot.eda_scr_rate - look.eda_scr_rate);
    p.bvp_hz = look.bvp_hz + t * (hot.bvp_hz - look.bvp_hz);
    p.bvp_amp = look.bvp_amp + t * (hot.bvp_amp - look.bvp_amp);
    p.temp_level = look.temp_level + t * (hot.temp_level - look.temp_level);
    return p;
}

}  // namespace

void validate_config(const CohortConfig& c) {
    if (c.n_participants < 1 || c.days_per_participant < 1)
        throw DataError("cohort config: participants and days must be >= 1");
    if (c.agitation_day_fraction < 0.0 || c.agitation_day_fraction > 1.0)
        throw DataError("cohort config: agitation_day_fraction must be in [0,1]");
    if (c.target_prevalence < 0.0 || c.target_prevalence > 1.0)
        throw DataError("cohort config: target_prevalence must be in [0,1]");
    if (c.episodes_per_day_min < 1 || c.episodes_per_day_max < c.episodes_per_day_min)
        throw DataError("cohort config: bad episodes_per_day range");
    if (!(c.episode_duration_mean > 0))
        throw DataError("cohort config: episode_duration_mean must be > 0");
    if (c.episode_duration_min < 1 || c.episode_duration_max < c.episode_duration_min)
        throw DataError("cohort config: bad episode duration bounds");
    if (c.n_normal_categories < 1)
        throw DataError("cohort config: n_normal_categories must be >= 1");
    if (c.minutes_per_day < 1) throw DataError("cohort config: minutes_per_day must be >= 1");
    if (c.start_minute < 0 || c.start_minute + c.minutes_per_day > 24 * 60)
        throw DataError("cohort config: day window exceeds the calendar day");
}

CohortPlan plan_cohort(const CohortConfig& config) {
    validate_config(config);
    Rng rng(derive_seed(config.seed, 0x9'1a7));

    const int n_days = config.n_participants * config.days_per_participant;
    const long long total_minutes =
        static_cast<long long>(n_days) * config.minutes_per_day;

    CohortPlan plan;
    plan.total_minutes = total_minutes;
    plan.days.resize(static_cast<std::size_t>(n_days));
    for (int p = 0; p < config.n_participants; ++p) {
        for (int d = 0; d < config.days_per_participant; ++d) {
            auto& day = plan.days[static_cast<std::size_t>(p * config.days_per_participant + d)];
            char pid[16];
            std::snprintf(pid, sizeof(pid), "P%02d", p + 1);
            day.participant_id = pid;
            day.day = core::add_days(config.first_day, d);
            day.start_minute = config.start_minute;
            day.minutes = config.minutes_per_day;
            day.render_seed = derive_seed(config.seed, 0xda1ULL,
                                          static_cast<std::uint64_t>(p * 1000 + d));
        }
    }

    // Pick agitation days deterministically: a seeded shuffle, then the first
    // round(fraction * n) day slots.
    std::vector<int> day_order(static_cast<std::size_t>(n_days));
    std::iota(day_order.begin(), day_order.end(), 0);
    rng.shuffle(day_order);
    const int n_ag_days =
        static_cast<int>(std::llround(config.agitation_day_fraction * n_days));
    std::vector<int> ag_days(day_order.begin(), day_order.begin() + n_ag_days);
    std::sort(ag_days.begin(), ag_days.end());

    const long long target_total =
        config.agitation_day_fraction == 0.0
            ? 0
            : std::llround(config.target_prevalence * static_cast<double>(total_minutes));

    // Draw episode durations per agitation day, then adjust globally until
    // the total agitated minutes hit the prevalence target.
    struct Episode {
        int day_idx;
        int duration;
    };
    std::vector<Episode> episodes;
    if (n_ag_days > 0 && target_total > 0) {
        auto draw_duration = [&]() {
            const int d = static_cast<int>(
                std::llround(rng.normal(config.episode_duration_mean, config.episode_duration_sd)));
            return std::clamp(d, config.episode_duration_min, config.episode_duration_max);
        };
        for (int idx : ag_days) {
            const int n_ep = rng.uniform_int(config.episodes_per_day_min,
                                             config.episodes_per_day_max);
            for (int e = 0; e < n_ep; ++e) episodes.push_back({idx, draw_duration()});
        }
        auto total_of = [&]() {
            long long t = 0;
            for (const auto& e : episodes) t += e.duration;
            return t;
        };

        long long t = total_of();
        // Too long: drop whole episodes from the back while that overshoots
        // less, then trim single minutes round-robin. Dropping whole episodes
        // keeps the duration mean near the configured one.
        std::size_t guard = 0;
        const std::size_t guard_max = 1'000'000;
        while (t > target_total && ++guard < guard_max) {
            bool dropped = false;
            for (std::size_t i = episodes.size(); i-- > 0;) {
                if (episodes.size() > 1 && t - episodes[i].duration >= target_total) {
                    t -= episodes[i].duration;
                    episodes.erase(episodes.begin() + static_cast<std::ptrdiff_t>(i));
                    dropped = true;
                    break;
                }
            }
            if (dropped) continue;
            bool trimmed = false;
            for (auto& e : episodes) {
                if (t <= target_total) break;
                if (e.duration > config.episode_duration_min) {
                    e.duration--;
                    t--;
                    trimmed = true;
                }
            }
            if (!trimmed) break;
        }
        // Too short: extend round-robin, then add fresh episodes.
        while (t < target_total && ++guard < guard_max) {
            bool grown = false;
            for (auto& e : episodes) {
                if (t >= target_total) break;
                if (e.duration < config.episode_duration_max) {
                    e.duration++;
                    t++;
                    grown = true;
                }
            }
            if (t >= target_total || grown) continue;
            const int day_idx = ag_days[static_cast<std::size_t>(
                rng.below(static_cast<std::uint64_t>(ag_days.size())))];
            episodes.push_back({day_idx, draw_duration()});
            t += episodes.back().duration;
        }

        plan.agitation_minutes = total_of();
    }

    // Place episodes inside their days: >= 2 minutes from the frame edges and
    // >= 12 minutes apart, so ambiguous-interval bands never touch.
    constexpr int kEdgeGap = 2;
    constexpr int kEpisodeGap = 12;
    std::vector<std::vector<int>> day_durations(static_cast<std::size_t>(n_days));
    for (const auto& e : episodes)
        day_durations[static_cast<std::size_t>(e.day_idx)].push_back(e.duration);

    plan.n_episodes = 0;
    long long duration_sum = 0;
    for (int idx = 0; idx < n_days; ++idx) {
        auto& day = plan.days[static_cast<std::size_t>(idx)];
        day.minute_category.assign(static_cast<std::size_t>(day.minutes), -1);
        day.minute_intensity.assign(static_cast<std::size_t>(day.minutes), 0.0);

        auto durations = day_durations[static_cast<std::size_t>(idx)];
        std::sort(durations.begin(), durations.end(), std::greater<int>());
        std::vector<std::pair<int, int>> placed;  // [begin, end] in frame minutes
        for (int dur : durations) {
            bool ok = false;
            for (int attempt = 0; attempt < 500 && !ok; ++attempt) {
                const int hi = day.minutes - kEdgeGap - dur;
                if (hi < kEdgeGap)
                    throw DataError("plan_cohort: day too short for episode of " +
                                    std::to_string(dur) + " minutes");
                const int begin = rng.uniform_int(kEdgeGap, hi);
                const int end = begin + dur - 1;
                ok = true;
                for (const auto& [b, e] : placed) {
                    if (begin <= e + kEpisodeGap && b <= end + kEpisodeGap) {
                        ok = false;
                        break;
                    }
                }
                if (ok) placed.emplace_back(begin, end);
            }
            if (!ok)
                throw DataError("plan_cohort: could not place episodes for " +
                                day.participant_id + " " + day.day +
                                " (too many agitation minutes per day)");
        }
        std::sort(placed.begin(), placed.end());

        for (const auto& [b, e] : placed) {
            core::EpisodeAnnotation a;
            a.participant_id = day.participant_id;
            a.day = day.day;
            a.start_minute = day.start_minute + b;
            a.end_minute = day.start_minute + e;
            day.episodes.push_back(a);
            plan.n_episodes++;
            duration_sum += e - b + 1;

            // Episodes are bursty: each minute is either a "hot" burst at the
            // episode's lognormal level or a lull whose intensity keeps it
            // statistically identical to active normal behaviour at any
            // sample size. Lulls inside episodes are what the decision-window
            // vote can rescue; bursts near the boundaries are what annotation
            // jitter turns into genuinely misleading normal labels.
            const double level = std::exp(rng.normal(0.25, 0.35));
            for (int m = b; m <= e; ++m) {
                const bool burst = rng.uniform() < 0.5;
                day.minute_intensity[static_cast<std::size_t>(m)] =
                    burst ? level : rng.uniform(0.05, 0.9);
            }
        }

        for (int m = 0; m < day.minutes; ++m) {
            if (day.minute_intensity[static_cast<std::size_t>(m)] == 0.0)
                day.minute_category[static_cast<std::size_t>(m)] =
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(
                        config.n_normal_categories)));
        }
    }

    plan.realized_prevalence =
        static_cast<double>(plan.agitation_minutes) / static_cast<double>(total_minutes);
    plan.mean_episode_minutes =
        plan.n_episodes > 0 ? static_cast<double>(duration_sum) / plan.n_episodes : 0.0;

    if (config.agitation_day_fraction > 0.0 && config.target_prevalence > 0.0) {
        if (std::abs(plan.realized_prevalence - config.target_prevalence) > 0.004)
            throw DataError("plan_cohort: infeasible config, realized prevalence " +
                            format_g9(plan.realized_prevalence) + " vs target " +
                            format_g9(config.target_prevalence));
        if (std::abs(plan.mean_episode_minutes - config.episode_duration_mean) > 1.5)
            throw DataError("plan_cohort: infeasible config, mean episode duration " +
                            format_g9(plan.mean_episode_minutes) + " vs target " +
                            format_g9(config.episode_duration_mean));
    }
    return plan;
}

signal::SignalFrame render_day(const DayPlan& plan, const CohortConfig& config) {
    Rng rng(plan.render_seed);

    signal::SignalFrame frame;
    frame.participant_id = plan.participant_id;
    frame.day = plan.day;
    frame.start_minute = plan.start_minute;

    const int acc_rate = 32, bvp_rate = 64, slow_rate = 4;
    const int minutes = plan.minutes;
    auto make_channel = [&](int rate) {
        signal::Channel ch;
        ch.sample_rate_hz = rate;
        ch.samples.resize(static_cast<std::size_t>(minutes) * 60u * static_cast<unsigned>(rate));
        return ch;
    };
    signal::Channel acc_x = make_channel(acc_rate);
    signal::Channel acc_y = make_channel(acc_rate);
    signal::Channel acc_z = make_channel(acc_rate);
    signal::Channel bvp = make_channel(bvp_rate);
    signal::Channel eda = make_channel(slow_rate);
    signal::Channel temp = make_channel(slow_rate);

    // Persistent participant signature: physiology and movement baselines
    // differ between people and stay put across their days. Poisoned labels
    // near episode boundaries therefore concentrate inside each
    // participant's own feature region.
    Rng pid_rng(derive_seed(derive_seed(config.seed, 0x9e55), fnv1a(plan.participant_id)));
    const double pid_acc_mult = std::exp(pid_rng.normal(0.0, 0.30));
    const double pid_eda_shift = pid_rng.normal(0.0, 0.30);
    const double pid_temp_shift = pid_rng.normal(0.0, 0.25);
    const double pid_bvp_mult = std::exp(pid_rng.normal(0.0, 0.10));

    // Day-level context shifts both normal and agitated minutes together, so
    // between-day variability does not wash out the within-day contrast.
    const double day_acc_mult = pid_acc_mult * std::exp(rng.normal(0.0, 0.10));
    const double day_eda_shift = pid_eda_shift + rng.normal(0.0, 0.08);
    const double day_temp_shift = pid_temp_shift + rng.normal(0.0, 0.12);

    double bvp_phase = 0.0;
    double move_phase = 0.0;
    double eda_walk = 0.0;
    double temp_walk = 0.0;

    for (int m = 0; m < minutes; ++m) {
        const double intensity = plan.minute_intensity[static_cast<std::size_t>(m)];
        const bool agitated = intensity > 0.0;
        MinuteParams p = agitated
                             ? agitation_params(intensity, config.effect_size, config.n_normal_categories)
                             : normal_params(plan.minute_category[static_cast<std::size_t>(m)],
                                             config.n_normal_categories, config.effect_size);
        // Minute-level wobble keeps adjacent minutes from being carbon copies
        // and gives the classifier honest per-minute noise.
        const double wobble = std::exp(rng.normal(0.0, 0.30));
        const double acc_sigma = p.acc_sigma * wobble * day_acc_mult;
        const double eda_level = p.eda_level * wobble + day_eda_shift;

        // acceleration, 32 Hz
        {
            const std::size_t base = static_cast<std::size_t>(m) * 60u * acc_rate;
            const double amp = p.acc_move_amp * wobble * day_acc_mult;
            for (std::size_t i = 0; i < 60u * acc_rate; ++i) {
                move_phase += kTwoPi * p.acc_move_hz / acc_rate;
                const double sway = amp * std::sin(move_phase);
                acc_x.samples[base + i] = sway + acc_sigma * rng.normal();
                acc_y.samples[base + i] = 0.6 * sway + acc_sigma * rng.normal();
                acc_z.samples[base + i] = 1.0 + acc_sigma * rng.normal();
            }
        }
        // blood volume pulse, 64 Hz
        {
            const std::size_t base = static_cast<std::size_t>(m) * 60u * bvp_rate;
            for (std::size_t i = 0; i < 60u * bvp_rate; ++i) {
                bvp_phase += kTwoPi * p.bvp_hz / bvp_rate;
                const double amp = p.bvp_amp * pid_bvp_mult;
                bvp.samples[base + i] = amp * std::sin(bvp_phase) +
                                        0.3 * amp * std::sin(2.0 * bvp_phase) +
                                        0.25 * rng.normal();
            }
        }
        // EDA and temperature, 4 Hz
        {
            const std::size_t base = static_cast<std::size_t>(m) * 60u * slow_rate;
            const std::size_t n = 60u * slow_rate;
            // occasional skin-conductance responses: sharp rise, slow decay
            thread_local std::vector<double> scr;
            scr.assign(n, 0.0);
            int n_scr = 0;
            double acc_p = p.eda_scr_rate;
            while (acc_p > 0.0) {
                if (rng.uniform() < std::min(acc_p, 1.0)) ++n_scr;
                acc_p -= 1.0;
            }
            for (int s = 0; s < n_scr; ++s) {
                const std::size_t at = rng.below(n);
                const double height = 0.15 + 0.1 * rng.uniform();
                for (std::size_t i = at; i < std::min(at + 16, n); ++i)
                    scr[i] += height * std::exp(-static_cast<double>(i - at) / 6.0);
            }
            for (std::size_t i = 0; i < n; ++i) {
                eda_walk = 0.98 * eda_walk + 0.01 * rng.normal();
                temp_walk = 0.995 * temp_walk + 0.004 * rng.normal();
                eda.samples[base + i] =
                    std::max(0.01, eda_level + eda_walk + scr[i] + 0.02 * rng.normal());
                temp.samples[base + i] =
                    p.temp_level + day_temp_shift + temp_walk + 0.01 * rng.normal();
            }
        }
    }

    frame.channels.emplace("acc_x", std::move(acc_x));
    frame.channels.emplace("acc_y", std::move(acc_y));
    frame.channels.emplace("acc_z", std::move(acc_z));
    frame.channels.emplace("bvp", std::move(bvp));
    frame.channels.emplace("eda", std::move(eda));
    frame.channels.emplace("temp", std::move(temp));
    return frame;
}

GeneratedCohort generate_cohort(const CohortConfig& config) {
    GeneratedCohort out;
    out.plan = plan_cohort(config);
    out.frames.reserve(out.plan.days.size());
    for (const auto& day : out.plan.days) {
        out.frames.push_back(render_day(day, config));
        for (const auto& a : day.episodes) out.annotations.push_back(a);
    }
    return out;
}

JitterResult inject_boundary_jitter(const std::vector<core::EpisodeAnnotation>& annotations,
                                    int max_shift_minutes, std::uint64_t seed) {
    if (max_shift_minutes < 0)
        throw DataError("inject_boundary_jitter: max_shift must be >= 0");
    JitterResult out;
    Rng rng(derive_seed(seed, 0x717e5));
    for (const auto& a : annotations) {
        const int u1 = max_shift_minutes > 0 ? rng.uniform_int(0, max_shift_minutes) : 0;
        const int u2 = max_shift_minutes > 0 ? rng.uniform_int(0, max_shift_minutes) : 0;
        core::EpisodeAnnotation j = a;
        j.start_minute = a.start_minute + u1;
        j.end_minute = a.end_minute - u2;
        if (j.start_minute > j.end_minute) {
            out.dropped++;  // whole episode missed by the annotator
            continue;
        }
        out.annotations.push_back(j);
    }
    return out;
}

core::LabeledDataset build_dataset(const CohortConfig& config, int threads, double cutoff_hz) {
    const CohortPlan plan = plan_cohort(config);
    const auto& catalog = signal::FeatureCatalog::v1();

    std::vector<std::vector<core::WindowInstance>> per_day(plan.days.size());
    parallel_for(plan.days.size(), threads, [&](std::size_t d) {
        const DayPlan& day = plan.days[d];
        const signal::SignalFrame frame = render_day(day, config);
        const auto feats = signal::frame_to_features(frame, catalog, cutoff_hz, 1);
        auto& list = per_day[d];
        list.reserve(feats.size());
        for (const auto& wf : feats) {
            core::WindowInstance w;
            w.participant_id = day.participant_id;
            w.day = day.day;
            w.minute_index = wf.minute_index;
            w.features = wf.features;
            const int offset = wf.minute_index - day.start_minute;
            const double intensity = day.minute_intensity[static_cast<std::size_t>(offset)];
            w.label = intensity > 0.0 ? 1 : 0;
            w.category =
                w.label == 1 ? -1 : day.minute_category[static_cast<std::size_t>(offset)];
            list.push_back(std::move(w));
        }
    });

    core::LabeledDataset ds;
    for (const auto& day : plan.days)
        for (const auto& a : day.episodes) ds.annotations.push_back(a);
    for (auto& list : per_day)
        for (auto& w : list) ds.instances.push_back(std::move(w));
    return ds;
}

}  // namespace agidet::synth
