#pragma once

#include <map>
#include <string>
#include <vector>

#include "agidet/experiment.hpp"
#include "agidet/synth.hpp"

namespace agidet::cli {

// Flat `key = value` experiment configuration ('#' comments allowed). All
// defaults mirror the published constants (win 5, lambda 1.5/1.2, the tree
// and predictor grids); see README for the full key list.
struct Config {
    std::map<std::string, std::string> values;
    std::string canonical;  // normalized text the config hash is taken over

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const;
    std::vector<long long> get_ints(const std::string& key,
                                    const std::vector<long long>& fallback) const;

    std::string hash() const;  // fnv1a over the canonical text, hex
};

Config parse_config_text(const std::string& text);
Config load_config(const std::string& path,
                   const std::vector<std::string>& overrides = {});

synth::CohortConfig cohort_config_from(const Config& config);
eval::RunConfig run_config_from(const Config& config);

// Commands. Each returns 0 on success and throws on failure; the binary
// maps exceptions to exit codes (1 usage, 2 data, 3 numeric).
int cmd_synth(const Config& config);
int cmd_features(const Config& config);
int cmd_run(const Config& config);
int cmd_sweep(const Config& config);
int cmd_report(const Config& config);

}  // namespace agidet::cli
