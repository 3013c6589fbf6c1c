#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "agidet/cli.hpp"
#include "agidet/signal.hpp"
#include "agidet/core.hpp"

using namespace agidet;
using namespace agidet::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / "agidet_cli_tests" / tag;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const std::string& name,
                         const std::string& body) {
    const fs::path path = dir / name;
    std::ofstream f(path);
    f << body;
    return path.string();
}

// tiny cohort that a run can chew through in seconds
std::string synth_body(const fs::path& dir, int max_shift = 0) {
    std::string body =
        "synth.participants = 2\n"
        "synth.days = 4\n"
        "synth.minutes_per_day = 90\n"
        "synth.agitation_day_fraction = 0.5\n"
        "synth.prevalence = 0.04\n"
        "synth.seed = 7\n"
        "threads = 2\n";
    body += "out_dir = " + (dir / "out").string() + "\n";
    if (max_shift > 0) body += "synth.max_shift = " + std::to_string(max_shift) + "\n";
    return body;
}

std::string run_body(const fs::path& dir) {
    return synth_body(dir) +
           "dataset = " + (dir / "out" / "cohort").string() +
           "\n"
           "strategy = rus\n"
           "proportion = 0.4\n"
           "n_trees = 10\n"
           "n_predictors = 7\n"
           "seed1 = 1\n"
           "seed2 = 1,2\n";
}

}  // namespace

TEST_CASE("config parsing: values, lists, comments, hash stability") {
    const Config a = parse_config_text("# comment\nstrategy = rus\nseed2 = 1, 2,3\n");
    CHECK(a.get("strategy", "") == "rus");
    CHECK(a.get_ints("seed2", {}) == std::vector<long long>{1, 2, 3});
    const Config b = parse_config_text("seed2 = 1, 2,3\nstrategy = rus\n");
    CHECK(a.hash() == b.hash());  // canonical ordering
    CHECK_THROWS_AS(parse_config_text("not a key value line\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("seed1 = abc\n").get_int("seed1", 0), ConfigError);
}

TEST_CASE("cmd_synth writes dataset + manifest; rerun is byte-identical") {
    const fs::path dir = fresh_dir("synth");
    const Config config = parse_config_text(synth_body(dir));
    CHECK(cmd_synth(config) == 0);

    const std::string prefix = (dir / "out" / "cohort").string();
    const core::LabeledDataset ds = core::load_dataset(prefix);
    CHECK(!ds.instances.empty());
    const std::string manifest = read_file(prefix + ".manifest.txt");
    CHECK(manifest.find("realized_prevalence") != std::string::npos);
    CHECK(manifest.find("config_hash = " + config.hash()) != std::string::npos);

    const std::string data_before = read_file(prefix + ".data.csv");
    CHECK(cmd_synth(config) == 0);
    CHECK(read_file(prefix + ".data.csv") == data_before);
}

TEST_CASE("cmd_synth with jitter writes observed and truth datasets") {
    const fs::path dir = fresh_dir("synth_jitter");
    const Config config = parse_config_text(synth_body(dir, 3));
    CHECK(cmd_synth(config) == 0);
    const std::string prefix = (dir / "out" / "cohort").string();
    const auto observed = core::load_dataset(prefix);
    const auto truth = core::load_dataset(prefix + "_truth");
    REQUIRE(observed.instances.size() == truth.instances.size());
    long long obs_pos = 0, truth_pos = 0;
    for (std::size_t i = 0; i < truth.instances.size(); ++i) {
        obs_pos += observed.instances[i].label;
        truth_pos += truth.instances[i].label;
    }
    CHECK(obs_pos < truth_pos);  // jitter only removes agitation labels
}

TEST_CASE("cmd_run produces reports, run index, and deterministic bytes") {
    const fs::path dir = fresh_dir("run");
    Config synth_cfg = parse_config_text(synth_body(dir));
    REQUIRE(cmd_synth(synth_cfg) == 0);

    const Config run_cfg = parse_config_text(run_body(dir));
    CHECK(cmd_run(run_cfg) == 0);

    const std::string report_path = (dir / "out" / "run_rus_0p4.txt").string();
    const std::string report = read_file(report_path);
    CHECK(report.find("schema = agidet.run.v1") != std::string::npos);
    CHECK(report.find("config_hash = " + run_cfg.hash()) != std::string::npos);
    CHECK(report.find("mean_auroc = ") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "run_rus_0p4.timing.txt"));
    CHECK(fs::exists(dir / "out" / "run_index.csv"));

    // rerun with a different thread count: report bytes identical
    Config run_cfg2 = parse_config_text(run_body(dir) + "threads = 1\n");
    CHECK(cmd_run(run_cfg2) == 0);
    const std::string report2 = read_file(report_path);
    // strip the config_hash line (thread count is part of the config text)
    auto strip_hash = [](std::string s) {
        const auto at = s.find("config_hash = ");
        const auto end = s.find('\n', at);
        return s.erase(at, end - at);
    };
    CHECK(strip_hash(report) == strip_hash(report2));
}

TEST_CASE("cmd_sweep writes a plottable table and a summary") {
    const fs::path dir = fresh_dir("sweep");
    Config synth_cfg = parse_config_text(synth_body(dir));
    REQUIRE(cmd_synth(synth_cfg) == 0);

    const Config sweep_cfg = parse_config_text(
        run_body(dir) + "threshold_start = 0.05\nthreshold_stop = 0.95\nthreshold_step = 0.05\n");
    CHECK(cmd_sweep(sweep_cfg) == 0);
    const std::string table = read_file((dir / "out" / "sweep.csv").string());
    CHECK(table.find("threshold,p_orig,r_orig,f1_orig,p_ccr,r_ccr,f1_ccr") !=
          std::string::npos);
    // 19 grid rows + header + comment
    CHECK(std::count(table.begin(), table.end(), '\n') == 21);
    const std::string summary = read_file((dir / "out" / "sweep_summary.txt").string());
    CHECK(summary.find("best_f1_ccr") != std::string::npos);
    CHECK(summary.find("effective_range") != std::string::npos);
}

TEST_CASE("cmd_sweep single-threshold grid gives one row") {
    const fs::path dir = fresh_dir("sweep1");
    Config synth_cfg = parse_config_text(synth_body(dir));
    REQUIRE(cmd_synth(synth_cfg) == 0);
    const Config sweep_cfg = parse_config_text(
        run_body(dir) + "threshold_start = 0.5\nthreshold_stop = 0.5\n");
    CHECK(cmd_sweep(sweep_cfg) == 0);
    const std::string table = read_file((dir / "out" / "sweep.csv").string());
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
}

TEST_CASE("cmd_features converts raw frames + annotations into a dataset") {
    const fs::path dir = fresh_dir("features");

    // two minutes of flat signals at device-like rates
    signal::SignalFrame frame;
    frame.participant_id = "P09";
    frame.day = "2024-05-01";
    frame.start_minute = 600;
    for (const auto& name : signal::channel_names()) {
        signal::Channel ch;
        ch.sample_rate_hz = name == "bvp" ? 64.0 : 4.0;
        ch.samples.assign(static_cast<std::size_t>(ch.sample_rate_hz) * 120, 0.5);
        frame.channels.emplace(name, ch);
    }
    const std::string frame_path = (dir / "p09.sig").string();
    signal::save_frame(frame, frame_path);

    const std::string ann_path = (dir / "ann.csv").string();
    write_file_atomic(ann_path,
                      "participant_id,day,start_minute,end_minute\nP09,2024-05-01,601,601\n");

    const Config config = parse_config_text(
        "signals = " + frame_path + "\nannotations = " + ann_path + "\nout_dir = " +
        (dir / "out").string() + "\n");
    CHECK(cmd_features(config) == 0);

    const auto ds = core::load_dataset((dir / "out" / "features").string());
    REQUIRE(ds.instances.size() == 2);
    CHECK(ds.instances[0].minute_index == 600);
    CHECK(ds.instances[0].label == 0);
    CHECK(ds.instances[1].minute_index == 601);
    CHECK(ds.instances[1].label == 1);
}

TEST_CASE("configuration errors are ConfigError") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), ConfigError);
    const Config bad = parse_config_text("strategy = smote\n");
    CHECK_THROWS_AS(run_config_from(bad), ConfigError);
    const Config k_misuse = parse_config_text("strategy = rus\nk = 1.5\n");
    CHECK_THROWS_AS(run_config_from(k_misuse), ConfigError);
}

#ifdef AGIDET_BIN
namespace {

int run_binary(const std::string& args) {
    const std::string cmd = std::string(AGIDET_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("binary exit codes: usage, config, data errors") {
    const fs::path dir = fresh_dir("binary");
    CHECK(run_binary("definitely-not-a-command") == 1);   // CLI parse error
    CHECK(run_binary("run") == 1);                        // missing --config
    CHECK(run_binary("run -c /nonexistent.cfg") == 1);    // missing config file

    // unknown strategy -> config error (1)
    const std::string bad = write_config(dir, "bad.cfg",
                                         "dataset = nowhere\nstrategy = smote\n");
    CHECK(run_binary("run -c " + bad) == 1);

    // valid config but missing dataset files -> data error (2)
    const std::string missing =
        write_config(dir, "missing.cfg", "dataset = " + (dir / "nope").string() + "\n");
    CHECK(run_binary("run -c " + missing) == 2);
}

TEST_CASE("binary synth + run end to end with overrides") {
    const fs::path dir = fresh_dir("binary_e2e");
    const std::string cfg = write_config(dir, "all.cfg", run_body(dir));
    CHECK(run_binary("synth -c " + cfg) == 0);
    CHECK(run_binary("run -c " + cfg + " -s 'proportion = 0.5'") == 0);
    CHECK(fs::exists(dir / "out" / "run_rus_0p5.txt"));
    CHECK(run_binary("report -c " + cfg) == 0);
}
#endif
