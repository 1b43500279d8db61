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

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cvq/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cvq: lattice field and CV quantum simulation experiments"};
  app.require_subcommand(1);
  std::string config, out;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--threads", threads, "worker threads for frequency scans")->check(CLI::PositiveNumber);
    sub->add_option("--seed-override", seed, "replace every seed in the config");
    sub->add_flag("-q,--quiet", quiet, "suppress the summary line");
  };
  CLI::App* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  CLI::App* verify = app.add_subcommand("verify", "run an experiment and check it against independent oracles");
  add_common(run);
  add_common(verify);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cvq::kExitValidation;
  }
  cvq::RunOptions opt;
  opt.out = out;
  opt.threads = threads;
  opt.seed_override = seed;
  opt.verify = verify->parsed();
  const cvq::RunOutcome r = cvq::run_config_file(config, opt);
  if (r.exit_code != cvq::kExitOk)
    std::fprintf(stderr, "%s\n", r.message.c_str());
  else if (!quiet)
    std::printf("%s: %zu artifacts in %s\n", opt.verify ? "verified" : "done", r.artifacts.size(), r.out_dir.c_str());
  if (opt.verify && !quiet && !r.report.is_null()) std::printf("%s\n", r.report.dump(2).c_str());
  return r.exit_code;
}
