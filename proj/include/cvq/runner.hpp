// Copyright 2026 The cvq Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace cvq {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalInconsistency : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum ExitCode { kExitOk = 0, kExitFailure = 1, kExitValidation = 2, kExitOracleCap = 3, kExitInconsistent = 4 };

struct RunOptions {
  std::string out;  // overrides the config's "output"
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
  bool verify = false;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::string out_dir;
  std::vector<std::string> artifacts;  // file names inside out_dir
  nlohmann::json report;               // verify tables
};

// Kinds: spectrum, correlate-1pt, correlate-3pt, correlate-4pt, phase-reconstruct,
// phase-link, mbqc-verify, fig1.
const std::vector<std::string>& experiment_kinds();

// Throws ConfigError naming the offending key.
void validate_config(const nlohmann::json& cfg);

// 64-bit FNV-1a of the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& cfg);

// Never throws; failures are mapped onto the exit-code contract.
RunOutcome run_experiment(const nlohmann::json& cfg, const RunOptions& opt);
RunOutcome run_config_file(const std::string& path, const RunOptions& opt);

}  // namespace cvq
