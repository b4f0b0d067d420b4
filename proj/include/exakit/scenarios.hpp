#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace exakit {

/// One pinned CLI invocation of the reproduction corpus.
///
/// `config` is relative to the corpus directory. `args` are extra flags
/// after the generated --config/--seed/--out. `digest` is the SHA-256 of
/// the payload (see payload_digest).
struct Scenario {
    std::string name;
    std::string subcommand;
    std::string config;
    std::vector<std::string> args;
    std::optional<std::uint64_t> seed;
    int expect_exit = 0;
    std::string digest;
    std::string covers;
};

struct ScenarioOutcome {
    std::string name;
    bool passed = false;
    std::string detail;
    std::string digest;
};

/// Reads `index.json` in `dir`.
std::vector<Scenario> load_scenario_index(const std::filesystem::path& dir);
void save_scenario_index(const std::filesystem::path& dir, const std::vector<Scenario>& scenarios);

/// SHA-256 over every regular file in `out_dir` except manifest.json, in
/// sorted relative-path order; each file contributes
/// "<path>\n<size>\n<bytes>".
std::string payload_digest(const std::filesystem::path& out_dir);

/// Runs every scenario whose name contains `filter` (empty matches all).
/// Standard output of each run is captured into stdout.txt inside its
/// output directory and so is part of the payload. With `bless`, stored
/// digests are replaced by the observed ones and the index is rewritten.
std::vector<ScenarioOutcome> run_scenarios(const std::filesystem::path& dir, const std::string& filter,
                                           bool bless);

}  // namespace exakit
