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

// Prints one PASS/FAIL line per acceptance criterion. Exit status is 0 only
// when every selected criterion passes.

#include <cstdio>
#include <fstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvq/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  std::string json_path;
  app.add_option("--only", only, "criterion ids to run (default all)")->check(CLI::Range(1, 9));
  app.add_option("--json", json_path, "write the measured values to this file");
  CLI11_PARSE(app, argc, argv);
  if (only.empty())
    for (int i = 1; i <= 9; ++i) only.push_back(i);
  bool all = true;
  nlohmann::json report = nlohmann::json::array();
  for (int id : only) {
    const cvq::CriterionResult r = cvq::run_criterion(id);
    std::printf("%s\n", cvq::format_line(r).c_str());
    std::fflush(stdout);
    all = all && r.pass;
    report.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail},
                      {"metrics", r.metrics}, {"seconds", r.seconds}});
  }
  if (!json_path.empty()) std::ofstream(json_path) << report.dump(2) << "\n";
  return all ? 0 : 1;
}
