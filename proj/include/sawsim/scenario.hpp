#pragma once

// Runs a parsed config and writes its artifacts:
//   traces.csv   waveforms (per scenario)
//   metrics.txt  `key = value` summary
//   manifest.txt config echo plus the hash of every trace CSV written
// plus s21.csv / s21.s2p / iv.csv (characterize), thermal.csv (thermal),
// sweep.csv and point_NN/ directories (sweep).

#include "sawsim/config.hpp"
#include "sawsim/error.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sawsim {

using Metrics = std::vector<std::pair<std::string, double>>;

struct ScenarioReport {
    Metrics metrics;
    std::uint64_t trace_hash = 0;
};

/// `jobs` sizes the worker pool for sweeps; single runs ignore it.
ScenarioReport run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir, int jobs = 1);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hash_hex(std::uint64_t h);

/// Process exit code for an error category: 2 config, 3 solver, 4 metric.
int exit_code(ErrorKind kind);

}  // namespace sawsim
