#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "experiments.hpp"

namespace cdyson::testing {

using cli::json;

/// Seconds-scale config for every subcommand, overlaid on the defaults.
inline json small_config(const std::string& sub) {
  json c;
  if (sub == "traces") {
    c = {{"integrator", {{"T", 400.0}, {"burn_in", 8.0}}}, {"ensemble", {{"replicas", 2}}}};
  } else if (sub == "matrix") {
    c = {{"model", {{"N", 8}}}, {"integrator", {{"T", 0.2}, {"record_every", 5}}}, {"ensemble", {{"replicas", 2}}}};
  } else if (sub == "eigen") {
    c = {{"model", {{"N", 8}}}, {"integrator", {{"T", 0.1}, {"record_every", 20}}}, {"ensemble", {{"replicas", 2}}}};
  } else if (sub == "semicircle-check") {
    c = {{"model", {{"N", 20}}}, {"integrator", {{"T", 1.0}, {"dt", 0.01}}}, {"ensemble", {{"replicas", 2}}}};
  } else if (sub == "burgers") {
    c = {{"contour", {{"L", 4.0}, {"h", 0.05}}},
         {"times", {0.1}},
         {"oracle_window", 2.0},
         {"monte_carlo", {{"enabled", true}, {"N", 10}, {"replicas", 2}}}};
  } else if (sub == "instanton") {
    c = {{"steps", 200}};
  } else if (sub == "rate-sweep") {
    c = {{"grid", {{"points", 11}}}, {"phase", {{"count", 9}}}};
  } else if (sub == "volume") {
    c = {{"model", {{"N", 5}}}, {"integrator", {{"T", 0.1}, {"record_every", 10}}}, {"ensemble", {{"replicas", 2}}}};
  } else if (sub == "sff") {
    c = {{"model", {{"N", 20}}}, {"grid", {{"points", 20}}}, {"late", {{"points", 50}}}};
  }
  return cli::effective_config(sub, c);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / "coupled_dyson_tests" / name;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace cdyson::testing
