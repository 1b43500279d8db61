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

#include <string>
#include <vector>

#include <json.hpp>

namespace cvq {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // one line, measured values against thresholds
  nlohmann::json metrics;
  double seconds = 0.0;
};

// Toy-model peaks and transform agreement.
CriterionResult acceptance_fig1();
// First-order Trotter slope, L = 2, K = 6.
CriterionResult acceptance_trotter();
// P_int circuit against exp(-i dt h_int) and the three h_int forms.
CriterionResult acceptance_pint();
// G^+ q_b G, the two-mode squeezing matrix of each momentum pair, charge conservation.
CriterionResult acceptance_gtransform();
CriterionResult acceptance_reconstruction();
CriterionResult acceptance_linking();
CriterionResult acceptance_three_point();
CriterionResult acceptance_mbqc();
CriterionResult acceptance_sampling();

CriterionResult run_criterion(int id);
std::string format_line(const CriterionResult& r);

}  // namespace cvq
