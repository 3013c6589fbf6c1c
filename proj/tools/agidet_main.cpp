#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agidet/cli.hpp"
#include "agidet/common.hpp"

namespace {

// Exit codes: 0 ok, 1 usage/config error, 2 data error, 3 numeric failure.
int dispatch(const std::string& command, const std::string& config_path,
             const std::vector<std::string>& overrides) {
    const agidet::cli::Config config = agidet::cli::load_config(config_path, overrides);
    agidet::set_max_threads(static_cast<int>(config.get_int("threads", 0)));
    if (command == "synth") return agidet::cli::cmd_synth(config);
    if (command == "features") return agidet::cli::cmd_features(config);
    if (command == "run") return agidet::cli::cmd_run(config);
    if (command == "sweep") return agidet::cli::cmd_sweep(config);
    if (command == "report") return agidet::cli::cmd_report(config);
    throw agidet::ConfigError("unknown command: " + command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agitation-detection experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string picked;
    for (const char* name : {"synth", "features", "run", "sweep", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("-c,--config", config_path, "config file (key = value lines)")
            ->required();
        sub->add_option("-s,--set", overrides, "override a config key, e.g. -s 'seed1 = 2'");
        sub->callback([&picked, name] { picked = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints usage/message
        return 1;
    }

    try {
        return dispatch(picked, config_path, overrides);
    } catch (const agidet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const agidet::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const agidet::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
