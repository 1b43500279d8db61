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

#include <array>
#include <vector>

#include "cvq/gates.hpp"

namespace cvq {

struct ModelParams {
  int L = 2;
  double m = 1.0;
  double dm = 0.0;   // counterterm m0^2 - m^2
  double lam = 0.0;  // quartic coupling
  int K = 8;
  double dt = 0.0;   // 0 selects 0.1 / omega_max
  int steps = 1;

  void validate() const;
  double omega_max() const;
  double time_step() const;
};

// Modes 0..L-1 carry b(k), modes L..2L-1 carry c(k).
struct ModeLayout {
  int L = 1;
  explicit ModeLayout(int l);
  int num_modes() const { return 2 * L; }
  int b(int k) const { return k; }
  int c(int k) const { return L + k; }
  // Squeezer pairs {b(k), c((L-k) mod L)} indexed by k.
  std::vector<std::array<int, 2>> pairing() const;
};

double dispersion(int k, const ModelParams& p);
double squeezing_parameter(int k, const ModelParams& p);
// Energy of one quantum in each register mode.
std::vector<double> mode_energies(const ModelParams& p);
// Diagonal of H0 over the 2L-mode register at per-mode dimension d.
RVec h0_diagonal(const ModelParams& p, int d);
// Diagonal of N_b - N_c and of sum_k k (N_b(k) - N_c(k)) mod L.
RVec charge_diagonal(int L, int d);
RVec momentum_diagonal(int L, int d);

// Heisenberg matrices of the lattice Fourier transform:
// U^+ b(x) U = sum_k M_xk b(k) and likewise for c with the conjugate phase.
Mat dft_matrix(int L, bool particle);
Circuit build_G(const ModelParams& p);

// Two-mode (b, c) operators at per-mode dimension d.
Mat hint_position(const ModelParams& p, int d);
// The three rewritten forms of h_int (beam splitter frame with p_c, then
// quarter-turn frame with q_c, then the quartic split), in that order.
std::array<Mat, 3> hint_rewrites(const ModelParams& p, int d);
// The Hermitian operator realized by the P_int circuit's pieces at dimension
// d, V^+ (D1 + D2 + W^+ D2 W) V, built from the same truncated gates.
Mat hint_circuit_generator(const ModelParams& p, int d);

Circuit build_Pint_circuit(int k, const ModelParams& p);
// Same gate sequence on a bare two-mode register (modes 0 = b, 1 = c).
Circuit pint_two_mode(const ModelParams& p);
Circuit build_trotter_step(const ModelParams& p);
Circuit build_trotter_circuit(const ModelParams& p, int n_steps);

enum class HintForm { Direct, Circuit };

struct OracleCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense H = H0 + G^+ (sum_k h_int(k)) G on the 2L-mode register at cutoff K.
Mat exact_hamiltonian(const ModelParams& p, HintForm form = HintForm::Direct, long cap = 65536);

// H applied to column blocks at per-mode dimension d without forming the
// dense matrix: H0 diagonal plus G^-1 (sum_k h_int(k)) G with compiled gates.
class HamiltonianAction {
 public:
  HamiltonianAction(const ModelParams& p, HintForm form, int d);
  Mat operator()(const Mat& cols) const;
  // Interval guaranteed to contain the spectrum.
  std::pair<double, double> bounds() const { return bounds_; }
  int dim() const { return d_; }
  int num_modes() const { return 2 * p_.L; }

 private:
  ModelParams p_;
  int d_;
  CompiledCircuit g_, ginv_;
  Mat h2_;
  RVec h0_;
  std::pair<double, double> bounds_;
};

// exp(-i t H) on the given columns via Chebyshev propagation.
Mat evolve_exact(const HamiltonianAction& h, double t, const Mat& cols);

// Field operators on the 2L-mode register at per-mode dimension d.
struct LatticeFields {
  int L;
  double m;
  int d;
  std::vector<SpMat> b, c;  // lowering operators per k

  LatticeFields(int l, double mass, int dim);
  SpMat phi(int x) const;
  SpMat pi(int x) const;
  SpMat B(int x) const;
  SpMat C(int x) const;
  SpMat QB(int x) const;
  SpMat PB(int x) const;
  SpMat QC(int x) const;
  SpMat PC(int x) const;
  // Conserved U(1) current density i[pi phi - phi^+ pi^+].
  SpMat current(int x) const;
};

}  // namespace cvq
