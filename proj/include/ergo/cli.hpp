#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ergo::cli {

inline constexpr const char* kVersion = "0.1.0";

// Fully-resolved run configuration: defaults filled, every key validated.
// The raw JSON view is what gets echoed into the manifest, so
// parse_config(manifest["config"]) reproduces the same RunConfig.
struct RunConfig {
  nlohmann::json doc;
  std::string subcommand;
  std::filesystem::path output_dir;
};

// Validates and normalizes a config document; throws std::invalid_argument
// with key context on malformed input, unknown keys, or bad parameters.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);

// Runs the configured subcommand, writing manifest.json, report.json and
// CSVs into output_dir. Returns the process exit status (0 ok, 1 runtime
// error). Usage errors surface as exceptions before dispatch.
int dispatch(const RunConfig& config);

// Entry point used by the binary: arg parsing, env overrides, exit codes
// (0 success, 1 runtime error, 2 usage error).
int run_main(int argc, char** argv);

std::string format_csv_value(double v);  // 17 significant digits, '.' decimal

}  // namespace ergo::cli
