#pragma once

#include <string>

namespace etm {

// Library version reported by the CLI and recorded in run manifests.
std::string version_string();

// Executes the scenario described by the JSON config at config_path: parses
// and validates it, runs the task list in order, and writes one artifact
// file per task plus manifest.json into the scenario's output_dir (created
// if absent; paths resolve relative to the config file). Returns the CLI
// exit status: 0 on success, 2 on a validation error, 3 on a numerical
// failure. Every error is also appended to errors.log in the output
// directory (or next to the config when the output directory is unknown).
// Reruns with an unchanged config and seed produce byte-identical numeric
// artifacts; manifest.json and errors.log carry timings and are exempt.
int run_scenario(const std::string& config_path);

// Parses and validates the config without executing tasks or writing any
// file. Returns 0 when the scenario is runnable, 2 otherwise; the failure
// reason is printed to stderr.
int validate_scenario(const std::string& config_path);

}  // namespace etm
