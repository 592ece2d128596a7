#pragma once

// Batch front-end. Each subcommand reads an optional JSON config (validated
// before any compute), writes its artifacts under the output directory and
// a manifest.json listing them with content hashes, versions and timings.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vortexlab::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kNumericalFailure = 3,  // a diagnostic.json is written to the output directory
  kIoError = 4,
};

struct Options {
  std::string subcommand;
  std::optional<fs::path> config;
  fs::path out = "vortexlab-out";
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  bool quiet = false;
};

/// Subcommand names in help order.
std::vector<std::string> subcommands();

/// Runs one subcommand; never throws.
int run(const Options& options);

/// argv front-end (CLI11).
int main(int argc, char** argv);

struct SelftestReport {
  int passed = 0;
  int failed = 0;
  nlohmann::json checks = nlohmann::json::array();
};

/// Fast invariant suite over every module.
SelftestReport selftest(std::uint64_t seed, int stability_trials = 12);

}  // namespace vortexlab::cli
