// saltlyap command-line entry point.
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error, 3 I/O error.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "saltlyap/cli/commands.hpp"
#include "saltlyap/cli/config.hpp"

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace saltlyap;
    using namespace saltlyap::cli;

    CLI::App app{"Lyapunov exponents of deterministic and stochastic Lorenz 63 systems"};
    app.require_subcommand(1);

    std::string config_file;
    bool print_config = false;
    std::map<std::string, std::string> overrides;

    app.add_option("-c,--config", config_file, "key = value configuration file");
    app.add_flag("--print-config", print_config, "echo the fully resolved configuration");
    for (const auto& key : RunConfig::keys()) {
        app.add_option_function<std::string>(
            flag_name(key), [&overrides, key](const std::string& v) { overrides[key] = v; },
            "override '" + key + "'");
    }

    auto* simulate = app.add_subcommand("simulate", "integrate one trajectory and write it as CSV");
    auto* nle = app.add_subcommand("nle", "compute numerical Lyapunov exponents");
    auto* sweep = app.add_subcommand("sweep", "exponent sums for SALT and FD noise over a beta grid");
    auto* reproduce = app.add_subcommand("reproduce", "run a pinned reference configuration");
    std::string target;
    reproduce->add_option("target", target, "table1|table2|fig-sweep-fresh|fig-sweep-fixed")->required();
    for (auto* sub : {simulate, nle, sweep, reproduce}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        RunConfig cfg;
        if (!config_file.empty()) apply_config_file(cfg, config_file);
        if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') cfg.output_dir = env;
        for (const auto& [key, value] : overrides) cfg.set(key, value);
        if (reproduce->parsed()) cfg = reproduction_config(target, cfg);
        cfg.validate();

        if (print_config) {
            std::cout << "# config_hash=" << config_hash(cfg) << " generator_id=" << kGeneratorId << '\n'
                      << cfg.to_text();
        }

        if (simulate->parsed()) {
            cmd_simulate(cfg, std::cout);
        } else if (nle->parsed()) {
            cmd_nle(cfg, std::cout);
        } else if (sweep->parsed()) {
            cmd_sweep(cfg, std::cout);
        } else if (reproduce->parsed()) {
            cmd_reproduce(target, cfg, std::cout);
        }
    } catch (const ArgumentError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    }
    return 0;
}
