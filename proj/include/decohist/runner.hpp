#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace decohist {

// Batch front-end: one JSON experiment configuration in, machine-readable
// results out. Configurations carry a `kind` selecting the experiment, a
// single master seed from which every stochastic module derives its
// sub-seeds, and an `output` filename; runs are deterministic given the
// configuration, so repeated runs produce byte-identical outputs.

struct ValidationReport {
    // One entry per violation, each naming the offending field. Empty means
    // the configuration is schema-valid.
    std::vector<std::string> violations;
    bool valid() const { return violations.empty(); }
};

// Exit codes shared by the library entry points and the CLI.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;   // unreadable/invalid configuration
inline constexpr int exit_numerical = 3;      // solver failure, overflow, I/O failure
inline constexpr int exit_cap = 4;            // a module size cap was exceeded

struct RunOutcome {
    int exit_code = exit_ok;
    std::vector<std::string> outputs;  // files written, as resolved paths
    std::string message;               // diagnostics on failure, summary on success
};

// Schema check only — no computation. Every violation found is listed, not
// just the first.
ValidationReport validate_config(const std::string& config_text);

// Same, reading the configuration from a file; an unreadable file is itself
// reported as a violation.
ValidationReport validate_config_file(const std::filesystem::path& path);

// Parses, validates, runs the experiment, and writes its outputs atomically
// under out_dir (created if missing). threads < 1 means one worker; modules
// without internal parallelism ignore it.
RunOutcome run_config_file(const std::filesystem::path& path,
                           const std::filesystem::path& out_dir, int threads);

} // namespace decohist
