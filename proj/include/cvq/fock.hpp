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
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvq/linalg.hpp"

namespace cvq {

// Dense amplitudes over num_modes qumodes, each holding 0..cutoff photons.
// Mode 0 is the slowest index.
struct FockState {
  int num_modes = 1;
  int cutoff = 1;
  Vec amps;

  FockState() = default;
  FockState(int modes, int k);

  static FockState vacuum(int modes, int k);
  static FockState basis(const std::vector<int>& counts, int k);

  int dim1() const { return cutoff + 1; }
  long size() const { return long(amps.size()); }
  long index(const std::vector<int>& counts) const;
  std::vector<int> counts(long index) const;
  double norm2() const { return amps.squaredNorm(); }
  cplx amp(const std::vector<int>& counts) const { return amps(index(counts)); }
};

long register_size(int num_modes, int d);

struct ModeOperator {
  int arity = 1;
  int cutoff = 1;
  Mat m;
  bool hermitian = false;

  ModeOperator() = default;
  // Throws if `herm` is claimed and the matrix is not Hermitian within 1e-12.
  ModeOperator(int arity, int cutoff, Mat m, bool herm = false);
};

ModeOperator ladder_lower(int k);
ModeOperator ladder_raise(int k);
ModeOperator number_op(int k);
std::pair<ModeOperator, ModeOperator> quadratures(int k);

// Applies `op` (row-major over `targets`, first target slowest) to every
// column of `cols`, which holds register states of `num_modes` modes at
// per-mode dimension d.
void apply_columns(const Mat& op, const std::vector<int>& targets, int num_modes, int d, Mat& cols);
void apply_inplace(const Mat& op, const std::vector<int>& targets, FockState& st);

FockState embed(const ModeOperator& op, const std::vector<int>& targets, const FockState& st);
FockState expm_apply(const ModeOperator& gen, cplx scale, const std::vector<int>& targets,
                     const FockState& st);

cplx inner(const FockState& a, const FockState& b);
cplx expectation(const ModeOperator& op, const std::vector<int>& targets, const FockState& st);

// Reduced single-mode density matrix.
Mat reduced_density(const FockState& st, int mode);

struct PnrOutcome {
  std::vector<int> counts;
  double probability = 0.0;
};

std::vector<PnrOutcome> pnr_distribution(const FockState& st, double floor = 1e-15);

using Histogram = std::map<std::vector<int>, std::int64_t>;
Histogram sample_pnr(const FockState& st, std::int64_t shots, std::uint64_t seed);
// Multinomial draw over an explicit probability list (index -> count).
std::vector<std::int64_t> multinomial(const std::vector<double>& probs, std::int64_t shots,
                                      std::uint64_t seed);

nlohmann::json to_json(const FockState& st);
FockState state_from_json(const nlohmann::json& j);
void save_state(const FockState& st, const std::string& path);
FockState load_state(const std::string& path);

// Renormalization is reported through this hook; default writes to stderr.
void set_warning_sink(void (*sink)(const std::string&));
void warn(const std::string& msg);

}  // namespace cvq
