#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace cdyson::cli {

using json = nlohmann::json;

/// Where and how a subcommand runs. `hash` and `seed` end up in every artifact header.
struct RunContext {
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string hash;
};

struct Outcome {
  json report;
  bool check_passed = true;
  std::vector<std::filesystem::path> artifacts;
};

const std::vector<std::string>& subcommands();

/// Full default config of a subcommand. Every key a config file may set is present here.
json default_config(const std::string& subcommand);

/// Defaults overlaid with `file_config`; unknown keys are a config error.
json effective_config(const std::string& subcommand, const json& file_config);

/// FNV-1a 64 of the compact dump with ensemble.master_seed removed, as 16 hex digits.
std::string config_hash(const json& config);

/// Runs one subcommand and writes its artifacts into ctx.out.
Outcome run_subcommand(const std::string& subcommand, const json& config, const RunContext& ctx);

/// Whole command line: parse, run, exit code (0 ok, 2 config, 3 numerical, 4 check failed).
/// Errors are reported as one JSON object on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cdyson::cli
