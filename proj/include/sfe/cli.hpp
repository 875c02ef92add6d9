#pragma once

#include "sfe/pipeline.hpp"

#include <string>
#include <vector>

namespace sfe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;
inline constexpr int kExitNoAdmissibleModel = 4;

/// Parse a config document (strict: unknown keys are rejected) into the
/// benchmark configuration. Throws ConfigError.
BenchmarkConfig config_from_json(const std::string& text);

/// Fully resolved configuration, suitable for byte-identical reruns.
std::string config_to_json(const BenchmarkConfig& config);

/// Apply one dotted-path override, e.g. "noise.sigma_e=1e-3" or
/// "sensors.preset=medium13", onto the raw JSON document.
std::string apply_override(const std::string& json_text, const std::string& spec);

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  long seed = -1;  // -1: keep the config's seed
  int jobs = 1;
};

BenchmarkConfig load_config(const CommonOptions& options);

int cmd_forward(const CommonOptions& options);
int cmd_generate_data(const CommonOptions& options);
int cmd_discover(const CommonOptions& options, const std::string& mode);
int cmd_benchmark_suite(const CommonOptions& options);
int cmd_metrics(const CommonOptions& options, const std::string& model_path);

/// Entry point used by the binary; returns the process exit code.
int run(int argc, char** argv);

}  // namespace sfe::cli
