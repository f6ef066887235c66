#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "decohist/runner.hpp"

namespace {

// Precedence: --threads flag, then DECOHIST_THREADS, then one worker.
int resolve_threads(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("DECOHIST_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"decohist: seeded experiments over the history-space library"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = ".";
    int threads = 0;
    bool validate_only = false;

    CLI::App* run = app.add_subcommand("run", "validate a JSON config and run its experiment");
    run->add_option("config", config, "experiment configuration (JSON)")->required();
    run->add_option("--out", out_dir, "directory for output files (created if missing)");
    run->add_option("--threads", threads, "worker threads (default: DECOHIST_THREADS or 1)");
    run->add_flag("--validate-only", validate_only, "check the config and exit without running");

    CLI11_PARSE(app, argc, argv);

    if (validate_only) {
        const decohist::ValidationReport report = decohist::validate_config_file(config);
        for (const std::string& violation : report.violations)
            std::cout << violation << '\n';
        return report.valid() ? decohist::exit_ok : decohist::exit_config_error;
    }

    const decohist::RunOutcome outcome =
        decohist::run_config_file(config, out_dir, resolve_threads(threads));
    if (outcome.exit_code == decohist::exit_ok)
        std::cout << outcome.message << '\n';
    else
        std::cerr << outcome.message << '\n';
    return outcome.exit_code;
}
