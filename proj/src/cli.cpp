#include "agidet/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace agidet::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

bool Config::has(const std::string& key) const { return values.count(key) > 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        return parse_double(it->second, key);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

long long Config::get_int(const std::string& key, long long fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        return parse_int(it->second, key);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    std::vector<double> out;
    for (const auto& tok : split(it->second, ',')) {
        const std::string t = trim(tok);
        if (t.empty()) continue;
        try {
            out.push_back(parse_double(t, key));
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

std::vector<long long> Config::get_ints(const std::string& key,
                                        const std::vector<long long>& fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    std::vector<long long> out;
    for (const auto& tok : split(it->second, ',')) {
        const std::string t = trim(tok);
        if (t.empty()) continue;
        try {
            out.push_back(parse_int(t, key));
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

std::string Config::hash() const { return to_hex(fnv1a(canonical)); }

Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream ss(text);
    std::string line;
    std::size_t row = 0;
    while (std::getline(ss, line)) {
        ++row;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || (t[0] == '[' && t.back() == ']')) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(row) +
                              ": expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(row) + ": empty key");
        cfg.values[key] = value;
    }
    std::ostringstream canon;
    for (const auto& [k, v] : cfg.values) canon << k << "=" << v << "\n";
    cfg.canonical = canon.str();
    return cfg;
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    for (const auto& o : overrides) text += "\n" + o + "\n";
    return parse_config_text(text);
}

synth::CohortConfig cohort_config_from(const Config& c) {
    synth::CohortConfig out;
    out.n_participants = static_cast<int>(c.get_int("synth.participants", 12));
    out.days_per_participant = static_cast<int>(c.get_int("synth.days", 30));
    out.agitation_day_fraction = c.get_double("synth.agitation_day_fraction", 0.4);
    out.episodes_per_day_min = static_cast<int>(c.get_int("synth.episodes_min", 1));
    out.episodes_per_day_max = static_cast<int>(c.get_int("synth.episodes_max", 3));
    out.episode_duration_mean = c.get_double("synth.duration_mean", 8.6);
    out.episode_duration_sd = c.get_double("synth.duration_sd", 2.5);
    out.episode_duration_min = static_cast<int>(c.get_int("synth.duration_min", 3));
    out.episode_duration_max = static_cast<int>(c.get_int("synth.duration_max", 18));
    out.target_prevalence = c.get_double("synth.prevalence", 0.013);
    out.n_normal_categories = static_cast<int>(c.get_int("synth.categories", 5));
    out.effect_size = c.get_double("synth.effect_size", 1.0);
    out.minutes_per_day = static_cast<int>(c.get_int("synth.minutes_per_day", 480));
    out.start_minute = static_cast<int>(c.get_int("synth.start_minute", 600));
    out.first_day = c.get("synth.first_day", "2024-03-01");
    out.seed = static_cast<std::uint64_t>(c.get_int("synth.seed", 7));
    return out;
}

eval::RunConfig run_config_from(const Config& c) {
    eval::RunConfig run;
    run.strategy.kind = resample::strategy_from_name(c.get("strategy", "rus"));
    run.strategy.proportion = c.get_double("proportion", 0.2);
    run.strategy.k = c.get_double("k", 1.5);
    run.strategy.wrus.lambda1 = c.get_double("lambda1", 1.5);
    run.strategy.wrus.lambda2 = c.get_double("lambda2", 1.2);
    run.strategy.wrus.pivot_minutes = c.get_double("pivot_minutes", 10.0);
    run.strategy.ae.epochs = static_cast<int>(c.get_int("ae.epochs", 60));
    run.strategy.ae.learning_rate = c.get_double("ae.lr", 0.05);
    run.strategy.ae.batch_size = static_cast<int>(c.get_int("ae.batch", 256));
    run.strategy.ae.seed = static_cast<std::uint64_t>(c.get_int("ae.seed", 1));

    model::HyperGrid grid;
    grid.n_trees_options.clear();
    for (long long v : c.get_ints("n_trees", {30, 50, 70, 90, 110}))
        grid.n_trees_options.push_back(static_cast<int>(v));
    grid.n_predictors_options.clear();
    for (long long v : c.get_ints("n_predictors", {1, 4, 7, 10, 13, 16, 19, 22, 25, 28, 31, 34}))
        grid.n_predictors_options.push_back(static_cast<int>(v));
    run.grid = grid;

    run.costs.cost_fn = c.get_double("cost_fn", 0.0);
    run.controls.max_depth = static_cast<int>(c.get_int("max_depth", 0));
    run.controls.min_node_size = static_cast<int>(c.get_int("min_node_size", 1));
    run.controls.max_bins = static_cast<int>(c.get_int("max_bins", 256));
    run.controls.threads = static_cast<int>(c.get_int("threads", 0));
    run.n_folds = static_cast<int>(c.get_int("n_folds", 2));
    run.fold_seed = static_cast<std::uint64_t>(c.get_int("seed1", 1));
    run.sample_seeds.clear();
    for (long long v : c.get_ints("seed2", {1, 2, 3, 4, 5}))
        run.sample_seeds.push_back(static_cast<std::uint64_t>(v));

    if (c.has("k") && run.strategy.kind != resample::Strategy::AEF_IQR)
        throw ConfigError("config key 'k' only applies to strategy aef_iqr");
    return run;
}

namespace {

std::vector<double> threshold_grid_from(const Config& c) {
    const double start = c.get_double("threshold_start", 0.01);
    const double stop = c.get_double("threshold_stop", 0.99);
    const double step = c.get_double("threshold_step", 0.01);
    if (!(step > 0) || !(start > 0) || !(stop < 1) || start > stop)
        throw ConfigError("bad threshold grid: need 0 < start <= stop < 1 and step > 0");
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        const double th = start + i * step;
        if (th > stop + 1e-12) break;
        grid.push_back(th);
    }
    return grid;
}

std::string out_dir_of(const Config& c) {
    const std::string dir = c.get("out_dir", "out");
    fs::create_directories(dir);
    return dir;
}

std::string provenance_line(const Config& c, const char* command) {
    std::ostringstream ss;
    ss << "command=" << command << " config_hash=" << c.hash();
    return ss.str();
}

void append_run_index(const std::string& dir, const std::string& row) {
    const std::string path = dir + "/run_index.csv";
    std::string existing;
    if (fs::exists(path)) existing = read_file(path);
    if (existing.empty())
        existing =
            "config_hash,strategy,proportion,k,seed1,seed2,fold,auroc,n_trees,n_predictors,"
            "rebuilt_size,test_size\n";
    existing += row;
    write_file_atomic(path, existing);
}

// Deterministic body: everything except wall-clock timings.
std::string run_report_text(const Config& c, const std::string& strategy,
                            double proportion, const eval::RunResult& result) {
    std::ostringstream ss;
    ss << "schema = agidet.run.v1\n";
    ss << "config_hash = " << c.hash() << "\n";
    ss << "strategy = " << strategy << "\n";
    ss << "proportion = " << format_g9(proportion) << "\n";
    ss << "seed1 = " << c.get_int("seed1", 1) << "\n";
    ss << "seed2 = " << c.get("seed2", "1,2,3,4,5") << "\n";
    ss << "n_folds = " << result.plan.n_folds << "\n";
    ss << "[cells]\n";
    ss << "seed2,fold,auroc,n_trees,n_predictors,rebuilt_size,retained_normals,agitations,"
          "realized_proportion,test_size\n";
    for (const auto& cell : result.cells)
        ss << cell.sample_seed << ',' << cell.fold << ',' << format_g9(cell.auroc) << ','
           << cell.n_trees << ',' << cell.n_predictors << ',' << cell.rebuilt_size << ','
           << cell.retained_normals << ',' << cell.agitations << ','
           << format_g9(cell.realized_proportion) << ',' << cell.test_size << "\n";
    ss << "[summary]\n";
    ss << "mean_auroc = " << format_g9(result.mean_auroc) << "\n";
    return ss.str();
}

// Timings go to a sidecar so the main report stays byte-deterministic.
std::string run_timing_text(const Config& c, double proportion,
                            const eval::RunResult& result) {
    std::ostringstream ss;
    ss << "schema = agidet.run-timing.v1\n";
    ss << "config_hash = " << c.hash() << "\n";
    ss << "proportion = " << format_g9(proportion) << "\n";
    ss << "seed2,fold,tune_ms,fit_ms\n";
    for (const auto& cell : result.cells)
        ss << cell.sample_seed << ',' << cell.fold << ',' << format_g9(cell.tune_ms) << ','
           << format_g9(cell.fit_ms) << "\n";
    ss << "mean_fit_ms = " << format_g9(result.mean_fit_ms) << "\n";
    ss << "mean_tune_ms = " << format_g9(result.mean_tune_ms) << "\n";
    return ss.str();
}

std::string proportion_tag(double p) {
    std::string s = format_g9(p);
    for (auto& ch : s)
        if (ch == '.') ch = 'p';
    return s;
}

}  // namespace

int cmd_synth(const Config& config) {
    const synth::CohortConfig cohort = cohort_config_from(config);
    const int threads = static_cast<int>(config.get_int("threads", 0));
    const double cutoff = config.get_double("cutoff_hz", signal::kDefaultCutoffHz);
    const std::string dir = out_dir_of(config);
    const std::string prefix = dir + "/" + config.get("dataset_name", "cohort");

    core::LabeledDataset truth = synth::build_dataset(cohort, threads, cutoff);
    truth.provenance = provenance_line(config, "synth") + " seed=" +
                       std::to_string(cohort.seed);

    const int max_shift = static_cast<int>(config.get_int("synth.max_shift", 0));
    synth::JitterResult jitter;
    if (max_shift > 0) {
        const std::uint64_t jseed =
            static_cast<std::uint64_t>(config.get_int("synth.jitter_seed", 11));
        jitter = synth::inject_boundary_jitter(truth.annotations, max_shift, jseed);
        core::LabeledDataset observed = truth;
        observed.provenance = truth.provenance + " labels=jittered max_shift=" +
                              std::to_string(max_shift);
        core::relabel_from_annotations(observed, jitter.annotations);
        core::save_dataset(observed, prefix);
        core::save_dataset(truth, prefix + "_truth");
    } else {
        core::save_dataset(truth, prefix);
    }

    long long pos = 0;
    for (const auto& w : truth.instances) pos += w.label;
    std::ostringstream manifest;
    manifest << "schema = agidet.synth-manifest.v1\n";
    manifest << "config_hash = " << config.hash() << "\n";
    manifest << "seed = " << cohort.seed << "\n";
    manifest << "participants = " << cohort.n_participants << "\n";
    manifest << "days_per_participant = " << cohort.days_per_participant << "\n";
    manifest << "minutes_per_day = " << cohort.minutes_per_day << "\n";
    manifest << "instances = " << truth.instances.size() << "\n";
    manifest << "agitation_minutes = " << pos << "\n";
    manifest << "episodes = " << truth.annotations.size() << "\n";
    manifest << "realized_prevalence = "
             << format_g9(static_cast<double>(pos) /
                          static_cast<double>(truth.instances.size()))
             << "\n";
    manifest << "max_shift = " << max_shift << "\n";
    if (max_shift > 0) manifest << "episodes_dropped_by_jitter = " << jitter.dropped << "\n";
    manifest << "dataset = " << prefix << "\n";
    write_file_atomic(prefix + ".manifest.txt", manifest.str());

    std::cout << "wrote " << prefix << ".data.csv (" << truth.instances.size()
              << " instances, prevalence "
              << format_g9(static_cast<double>(pos) /
                           static_cast<double>(truth.instances.size()))
              << ")\n";
    return 0;
}

int cmd_features(const Config& config) {
    const std::string signals = config.get("signals", "");
    const std::string ann_path = config.get("annotations", "");
    if (signals.empty()) throw ConfigError("cmd_features: missing 'signals' (file list)");
    if (ann_path.empty()) throw ConfigError("cmd_features: missing 'annotations' (csv path)");
    const double cutoff = config.get_double("cutoff_hz", signal::kDefaultCutoffHz);
    const int threads = static_cast<int>(config.get_int("threads", 0));
    const std::string dir = out_dir_of(config);
    const std::string prefix = dir + "/" + config.get("dataset_name", "features");

    // annotations come in the dataset annotation format
    std::vector<core::EpisodeAnnotation> annotations;
    {
        std::ifstream f(ann_path);
        if (!f) throw DataError("missing file: " + ann_path);
        std::string line;
        bool header = false;
        while (std::getline(f, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (!header) {
                header = true;
                continue;
            }
            auto cols = split(line, ',');
            if (cols.size() != 4) throw DataError(ann_path + ": expected 4 columns");
            annotations.push_back(core::EpisodeAnnotation{
                cols[0], cols[1], static_cast<int>(parse_int(cols[2], ann_path)),
                static_cast<int>(parse_int(cols[3], ann_path))});
        }
    }

    core::LabeledDataset ds;
    ds.annotations = annotations;
    const auto& catalog = signal::FeatureCatalog::v1();
    for (const auto& tok : split(signals, ',')) {
        const std::string path = trim(tok);
        if (path.empty()) continue;
        const signal::SignalFrame frame = signal::load_frame(path);
        const auto feats = signal::frame_to_features(frame, catalog, cutoff, threads);
        for (const auto& wf : feats) {
            core::WindowInstance w;
            w.participant_id = frame.participant_id;
            w.day = frame.day;
            w.minute_index = wf.minute_index;
            w.features = wf.features;
            w.label = core::minute_is_annotated(annotations, frame.participant_id,
                                                frame.day, wf.minute_index)
                          ? 1
                          : 0;
            ds.instances.push_back(std::move(w));
        }
    }
    ds.provenance = provenance_line(config, "features");
    core::save_dataset(ds, prefix);
    std::cout << "wrote " << prefix << ".data.csv (" << ds.instances.size()
              << " instances)\n";
    return 0;
}

int cmd_run(const Config& config) {
    eval::RunConfig run = run_config_from(config);  // config errors before file I/O
    const std::string dataset_prefix = config.get("dataset", "");
    if (dataset_prefix.empty()) throw ConfigError("cmd_run: missing 'dataset' (prefix)");
    const core::LabeledDataset data = core::load_dataset(dataset_prefix);

    core::LabeledDataset truth;
    const core::LabeledDataset* truth_ptr = nullptr;
    if (config.has("truth_dataset")) {
        truth = core::load_dataset(config.get("truth_dataset", ""));
        truth_ptr = &truth;
    }
    const std::vector<double> proportions =
        config.get_doubles("proportions", {run.strategy.proportion});
    const std::string dir = out_dir_of(config);
    const std::string strategy = resample::strategy_name(run.strategy.kind);

    for (double p : proportions) {
        run.strategy.proportion = p;
        const eval::RunResult result = eval::run_cv_experiment(data, run, truth_ptr);

        const std::string stem = dir + "/run_" + strategy + "_" + proportion_tag(p);
        write_file_atomic(stem + ".txt", run_report_text(config, strategy, p, result));
        write_file_atomic(stem + ".timing.txt", run_timing_text(config, p, result));

        std::ostringstream rows;
        for (const auto& cell : result.cells)
            rows << config.hash() << ',' << strategy << ',' << format_g9(p) << ','
                 << format_g9(run.strategy.k) << ',' << run.fold_seed << ','
                 << cell.sample_seed << ',' << cell.fold << ',' << format_g9(cell.auroc)
                 << ',' << cell.n_trees << ',' << cell.n_predictors << ','
                 << cell.rebuilt_size << ',' << cell.test_size << "\n";
        append_run_index(dir, rows.str());

        std::cout << "strategy " << strategy << " proportion " << format_g9(p)
                  << ": mean AUROC " << format_g9(result.mean_auroc) << " over "
                  << result.cells.size() << " cells (report " << stem << ".txt)\n";
    }
    return 0;
}

int cmd_sweep(const Config& config) {
    const std::vector<double> grid = threshold_grid_from(config);
    if (!config.has("model")) run_config_from(config);  // surface config errors early
    const std::string dataset_prefix = config.get("dataset", "");
    if (dataset_prefix.empty()) throw ConfigError("cmd_sweep: missing 'dataset' (prefix)");
    const core::LabeledDataset data = core::load_dataset(dataset_prefix);
    const int win = static_cast<int>(config.get_int("win", 5));
    const std::string dir = out_dir_of(config);

    std::vector<decide::SweepRow> mean_rows(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) mean_rows[i].threshold = grid[i];
    std::size_t n_sweeps = 0;

    if (config.has("model")) {
        // score the whole dataset with a saved forest
        const model::ForestModel forest = model::load_forest(config.get("model", ""));
        std::vector<decide::DaySeries> days;
        decide::DaySeries* cur = nullptr;
        for (const auto& w : data.instances) {
            if (!cur || cur->participant_id != w.participant_id || cur->day != w.day) {
                days.emplace_back();
                cur = &days.back();
                cur->participant_id = w.participant_id;
                cur->day = w.day;
            }
            cur->scores.push_back(model::predict_score(forest, w.features));
            cur->truth.push_back(w.label);
        }
        const auto rows = decide::sweep_thresholds(days, grid, win);
        mean_rows = rows;
        n_sweeps = 1;
    } else {
        eval::RunConfig run = run_config_from(config);
        run.strategy.proportion = config.get_double("proportion", 0.2);
        run.collect_scores = true;
        core::LabeledDataset truth;
        const core::LabeledDataset* truth_ptr = nullptr;
        if (config.has("truth_dataset")) {
            truth = core::load_dataset(config.get("truth_dataset", ""));
            truth_ptr = &truth;
        }
        const eval::RunResult result = eval::run_cv_experiment(data, run, truth_ptr);
        for (const auto& seed_scores : result.scores) {
            const auto rows = decide::sweep_thresholds(seed_scores.days, grid, win);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                mean_rows[i].p_orig += rows[i].p_orig;
                mean_rows[i].r_orig += rows[i].r_orig;
                mean_rows[i].f1_orig += rows[i].f1_orig;
                mean_rows[i].p_ccr += rows[i].p_ccr;
                mean_rows[i].r_ccr += rows[i].r_ccr;
                mean_rows[i].f1_ccr += rows[i].f1_ccr;
            }
            ++n_sweeps;
        }
        for (auto& r : mean_rows) {
            r.p_orig /= static_cast<double>(n_sweeps);
            r.r_orig /= static_cast<double>(n_sweeps);
            r.f1_orig /= static_cast<double>(n_sweeps);
            r.p_ccr /= static_cast<double>(n_sweeps);
            r.r_ccr /= static_cast<double>(n_sweeps);
            r.f1_ccr /= static_cast<double>(n_sweeps);
        }
    }

    const decide::ThresholdRange range = decide::effective_threshold_range(mean_rows);
    double best_orig = 0, best_ccr = 0, arg_orig = grid.front(), arg_ccr = grid.front();
    for (const auto& r : mean_rows) {
        if (r.f1_orig > best_orig) {
            best_orig = r.f1_orig;
            arg_orig = r.threshold;
        }
        if (r.f1_ccr > best_ccr) {
            best_ccr = r.f1_ccr;
            arg_ccr = r.threshold;
        }
    }

    std::ostringstream table;
    table << "# config_hash=" << config.hash() << " sweeps=" << n_sweeps << "\n";
    table << "threshold,p_orig,r_orig,f1_orig,p_ccr,r_ccr,f1_ccr\n";
    for (const auto& r : mean_rows)
        table << format_g9(r.threshold) << ',' << format_g9(r.p_orig) << ','
              << format_g9(r.r_orig) << ',' << format_g9(r.f1_orig) << ','
              << format_g9(r.p_ccr) << ',' << format_g9(r.r_ccr) << ','
              << format_g9(r.f1_ccr) << "\n";

    std::ostringstream summary;
    summary << "schema = agidet.sweep.v1\n";
    summary << "config_hash = " << config.hash() << "\n";
    summary << "win = " << win << "\n";
    summary << "best_f1_original = " << format_g9(best_orig) << " at " << format_g9(arg_orig)
            << "\n";
    summary << "best_f1_ccr = " << format_g9(best_ccr) << " at " << format_g9(arg_ccr)
            << "\n";
    summary << "effective_range = ";
    if (range.empty)
        summary << "empty\n";
    else
        summary << "[" << format_g9(range.lo) << ", " << format_g9(range.hi) << "]\n";
    summary << "all_runs =";
    for (const auto& [lo, hi] : range.runs)
        summary << " [" << format_g9(lo) << ", " << format_g9(hi) << "]";
    summary << "\n";

    write_file_atomic(dir + "/sweep.csv", table.str());
    write_file_atomic(dir + "/sweep_summary.txt", summary.str());
    std::cout << summary.str();
    return 0;
}

int cmd_report(const Config& config) {
    const std::string dir = config.get("out_dir", "out");
    const std::string path = dir + "/run_index.csv";
    if (!fs::exists(path)) throw DataError("cmd_report: no run index at " + path);
    const std::string content = read_file(path);
    std::istringstream ss(content);
    std::string line;
    std::getline(ss, line);  // header

    struct Agg {
        double auroc_sum = 0;
        int n = 0;
    };
    std::map<std::pair<std::string, std::string>, Agg> by_key;  // (strategy, proportion)
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() < 12) continue;
        auto& agg = by_key[{cols[1], cols[2]}];
        agg.auroc_sum += parse_double(cols[7], "run_index auroc");
        agg.n++;
    }
    std::cout << "strategy,proportion,cells,mean_auroc\n";
    for (const auto& [key, agg] : by_key)
        std::cout << key.first << ',' << key.second << ',' << agg.n << ','
                  << format_g9(agg.auroc_sum / agg.n) << "\n";
    return 0;
}

}  // namespace agidet::cli
