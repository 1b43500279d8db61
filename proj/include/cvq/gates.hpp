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

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvq/fock.hpp"

namespace cvq {

// Interferometer is a dense passive multi-mode transformation used for the
// lattice Fourier transform when L > 2.
enum class GateKind {
  Rotate,
  Displace,
  Shear,
  Squeeze1,
  Squeeze2,
  BeamSplitter5050,
  CZ,
  QuarticPhase,
  CurrentUnitary,
  ControlledN,
  ControlledQ,
  TranslateQ,
  TranslateP,
  Interferometer,
};

std::string kind_name(GateKind k);
GateKind kind_from_name(const std::string& s);
int param_count(GateKind k);

// params per kind:
//   Rotate {theta}               e^{i theta N}
//   Displace {re xi, im xi}      e^{xi a^+ - xi^* a}
//   Shear {kappa}                e^{i kappa Q^2}
//   Squeeze1 {r}                 e^{r (a^+2 - a^2)/2}
//   Squeeze2 {r}                 e^{r (a1^+ a2^+ - a1 a2)}
//   BeamSplitter5050 {}          e^{(pi/4)(a1^+ a2 - a1 a2^+)}
//   CZ {g}                       e^{i g Q1 Q2}
//   QuarticPhase {gamma}         e^{i (gamma/6) Q^4}
//   CurrentUnitary {zeta, x, L, m}  e^{i zeta J(x)} on the 2L lattice modes
//   ControlledN {dt}             e^{-i dt N_anc (x) H}, H in payload
//   ControlledQ {tau}            e^{-i tau Q_anc (x) H}, H in payload
//   TranslateQ {s}               X(s) = e^{-i s P}
//   TranslateP {t}               Z(t) = e^{i t Q}
//   Interferometer {}            passive map U^+ a_i U = sum_j M_ij a_j, M in payload
struct GateSpec {
  GateKind kind = GateKind::Rotate;
  std::vector<int> targets;
  std::vector<double> params;
  std::shared_ptr<const Mat> payload;
};

GateSpec rotation(int mode, double theta);
GateSpec displacement(int mode, cplx xi);
GateSpec shear(int mode, double kappa);
GateSpec squeeze1(int mode, double r);
GateSpec squeeze2(int m1, int m2, double r);
GateSpec beamsplitter(int m1, int m2);
GateSpec cz(int m1, int m2, double g = 1.0);
GateSpec quartic_phase(int mode, double gamma);
GateSpec current_unitary(const std::vector<int>& lattice_modes, double zeta, int x, int L, double m);
GateSpec controlled_n(int ancilla, const std::vector<int>& system, double dt, const Mat& h);
GateSpec controlled_q(int ancilla, const std::vector<int>& system, double tau, const Mat& h);
GateSpec translate_q(int mode, double s);
GateSpec translate_p(int mode, double t);
GateSpec interferometer(const std::vector<int>& modes, const Mat& m);

GateSpec inverse(const GateSpec& g);
void validate(const GateSpec& g, int num_modes);

struct GateOptions {
  // Extra levels per mode used while building and exponentiating generators;
  // the result is projected back to the state cutoff. 0 keeps gates exactly
  // unitary on the truncated space.
  int pad = 0;
};

// Matrix of the gate on its targets (row-major over targets) at cutoff k.
Mat gate_matrix(const GateSpec& g, int k, const GateOptions& opt = {});

struct Circuit {
  int num_modes = 1;
  std::vector<GateSpec> gates;

  Circuit() = default;
  explicit Circuit(int modes) : num_modes(modes) {}
  Circuit& add(GateSpec g);
  Circuit& append(const Circuit& c);
  Circuit inverse() const;
};

nlohmann::json to_json(const GateSpec& g);
GateSpec gate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Circuit& c);
Circuit circuit_from_json(const nlohmann::json& j);
void save_circuit(const Circuit& c, const std::string& path);
Circuit load_circuit(const std::string& path);

struct GateError : std::runtime_error {
  size_t gate_index;
  GateError(size_t idx, const std::string& what)
      : std::runtime_error("gate " + std::to_string(idx) + ": " + what), gate_index(idx) {}
};

struct CircuitResult {
  FockState state;
  std::vector<double> leakage_per_gate;
  double leakage = 0.0;
  // Largest single-mode population in the top Fock level after the circuit.
  double boundary_population = 0.0;
};

CircuitResult apply_circuit(const Circuit& c, const FockState& st, const GateOptions& opt = {});

// Gate matrices built once; consecutive gates on at most two modes that share
// a target set are multiplied together.
struct CompiledCircuit {
  int num_modes = 1;
  int cutoff = 1;
  std::vector<std::pair<std::vector<int>, Mat>> ops;

  void apply(Mat& cols) const;
  FockState apply(const FockState& st) const;
  Mat dense() const;
};

CompiledCircuit compile(const Circuit& c, int k, const GateOptions& opt = {}, bool fuse = true);

double boundary_population(const FockState& st);

}  // namespace cvq
