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
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "cvq/linalg.hpp"

namespace cvq {

enum class MeasKind { Homodyne, Pnr, SubtractionPnr };

struct MeasurementRecord {
  int node = 0;
  MeasKind kind = MeasKind::Homodyne;
  double theta = 0.0;  // homodyne angle of P_theta = -Q sin(theta) + P cos(theta)
  double m = 0.0;      // homodyne outcome
  int n = 0;           // PNR outcome
  double beta = 0.0;   // subtraction strength
  bool postselected = false;
  double weight = 0.0;  // probability (PNR) or probability density (homodyne)
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const MeasurementRecord& r);
MeasurementRecord record_from_json(const nlohmann::json& j);
nlohmann::json transcript_json(const std::vector<MeasurementRecord>& t);
std::vector<MeasurementRecord> transcript_from_json(const nlohmann::json& j);

struct ZeroProbability : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bare cluster chain of p-squeezed nodes joined by CZ, tracked as a Gaussian
// state: means and covariance in (q_1..q_n, p_1..p_n) order.
struct ClusterChain {
  std::vector<int> nodes;  // labels of the live nodes
  std::vector<double> r;
  std::vector<std::array<int, 2>> edges;
  RVec mean;
  RMat cov;

  int num_modes() const { return int(nodes.size()); }
  int position(int node) const;
};

ClusterChain build_chain(int length, double r);
double quadrature_mean(const ClusterChain& c, int node, double theta);
double quadrature_variance(const ClusterChain& c, int node, double theta);
// Var(P_i - Q_j).
double nullifier_variance(const ClusterChain& c, int i, int j);

struct ChainHomodyne {
  ClusterChain chain;
  MeasurementRecord record;
};
// Measures P_theta on `node`; m given or drawn from the exact Gaussian marginal.
ChainHomodyne homodyne_project(const ClusterChain& c, int node, double theta, std::optional<double> m,
                               std::uint64_t seed = 0);

struct MbqcOptions {
  int cutoff = 40;            // Fock cutoff of teleported states
  double grid_half_width = 8.0;
  int grid_points = 4096;
  double tail_sigmas = 7.0;   // node envelope range for marginals
  double node_step = 0.1;     // node quadrature step for marginals
  int max_subtracted = 4;
  int rus_budget = 200;
  double prob_floor = 1e-12;
};

// q-wavefunction of a p-squeezed node S(r)|0>, normalized.
double node_wavefunction(double r, double q);

// kappa of the ideal teleport map R(pi/2) P(kappa) realized at homodyne angle theta.
double theta_for_kappa(double kappa);
double kappa_for_theta(double theta);

// One-node gadget <m_theta|_1 K_1 CZ_12 |in>_1 |node r>_2 with the X(m/cos theta)
// byproduct removed. K is the subtraction Kraus for `subtracted` >= 0, identity otherwise.
struct GadgetOutcome {
  Vec state;          // unnormalized Fock amplitudes, cutoff opt.cutoff
  double density = 0; // squared norm: probability density of m (times P(n))
  double shift = 0;   // removed byproduct X(shift)
  double leakage = 0; // grid norm lost in the Fock projection
};
GadgetOutcome teleport_gadget(const Vec& in, double theta, double m, double r, const MbqcOptions& opt,
                              int subtracted = -1, double beta = 0.0);

// Marginal density of m on a grid for the gadget above.
struct Marginal {
  RVec m;
  RVec density;
  double total = 0;  // integral of the density
};
Marginal gadget_marginal(const Vec& in, double theta, double r, const MbqcOptions& opt, int subtracted = -1,
                         double beta = 0.0);
// Probabilities of n subtracted photons, n = 0..opt.max_subtracted.
// PNR statistics of the tap after the CZ, for n <= max_subtracted; these depend on r.
std::vector<double> subtraction_probabilities(const Vec& in, double beta, double r, const MbqcOptions& opt);
double sample_marginal(const Marginal& mg, std::uint64_t seed);

struct Teleported {
  Vec state;  // normalized
  MeasurementRecord record;
  double shift = 0;
  double leakage = 0;
};
Teleported teleport_state(const Vec& in, double theta, double r, std::optional<double> m, std::uint64_t seed,
                          const MbqcOptions& opt = {});

// Kraus columns for inputs |0>..|in_levels-1>.
Mat gadget_kraus(double theta, double m, double r, int in_levels, const MbqcOptions& opt, int subtracted = -1,
                 double beta = 0.0);

// |Tr(U_b^+ N_b)|^2 / (|N_b|^2 |U_b|^2) over input columns 0..block.
double map_fidelity(const Mat& net, const Mat& ideal, int block);
// min_c |c N_b - U_b| / |U_b| over input columns 0..block.
double map_relative_error(const Mat& net, const Mat& ideal, int block);

struct TeleportGateResult {
  Mat net;
  Mat ideal;
  double fidelity = 0;
  std::vector<MeasurementRecord> transcript;
};
// Chain of teleport steps with angles from kappas; outcomes given (one per
// step) or sampled with `seed` when empty. Fidelity on the n <= block inputs.
TeleportGateResult teleport_gate(const std::vector<double>& kappas, double r, const std::vector<double>& outcomes,
                                 std::uint64_t seed = 0, int block = 4, const MbqcOptions& opt = {});
Mat ideal_teleport_map(const std::vector<double>& kappas, int cutoff);
// Four kappas with T(k4)T(k3)T(k2)T(k1) = target symplectic (rows act on (Q, P)).
std::array<double, 4> solve_kappas(const RMat& target);
RMat squeeze_symplectic(double r);

struct Injection {
  Vec state;  // normalized
  double probability = 0;
  double fidelity = 0;  // |<n|state>|^2
  int attempts = 1;
  MeasurementRecord record;
};
// Two-node chain, PNR outcome n on node 1 (post-selected).
Injection inject_fock(int n, double r, const MbqcOptions& opt = {});
std::vector<double> injection_probabilities(double r, int nmax, const MbqcOptions& opt = {});
// Repeat-until-success: fresh pairs until n is observed.
Injection inject_fock_rus(int n, double r, std::uint64_t seed, const MbqcOptions& opt = {});

// S_n = (-1)^n (n! e^{n beta})^{-1/2} (2 sinh beta)^{n/2} e^{-beta N} a^n on dimension d.
Mat subtraction_kraus(double beta, int n, int d);
// |S_n / ((-1)^n (2 sinh beta)^{n/2} e^{-n beta/2}) - a^n/sqrt(n!)| on the n <= block levels.
double subtraction_block_error(double beta, int n, int block);

struct Subtracted {
  Vec state;  // normalized
  MeasurementRecord record;
  double probability_n = 0;
};
// Subtraction then theta = 0 teleport; n and m given or sampled.
Subtracted photon_subtract(const Vec& in, double beta, double r, std::optional<int> n, std::optional<double> m,
                           std::uint64_t seed, const MbqcOptions& opt = {});

// Polynomial P_n(Q) with <m_p| a^n = <m_p| P_n(Q), coefficients in ascending powers.
std::vector<cplx> subtraction_polynomial(int n, double m);
Mat polynomial_in_q(const std::vector<cplx>& coeffs, int cutoff);

struct PolynomialResult {
  std::vector<MeasurementRecord> transcript;
  std::vector<double> m;  // outcomes of the successful (n = 1) steps
  Mat net;
  Mat ideal;
  double rel_error = 0;
  double fidelity = 0;
  int attempts = 0;
};
// Repeats subtraction gadgets until k single-photon events; byproducts
// X(m) and R(pi/2) are undone after every step.
PolynomialResult polynomial_gate_sequence(int k, double beta, double r, std::uint64_t seed, int block = 4,
                                          const MbqcOptions& opt = {});
// Net map of a recorded transcript.
PolynomialResult replay_polynomial(const std::vector<MeasurementRecord>& transcript, double r, int block = 4,
                                   const MbqcOptions& opt = {});

struct GateTeleportResult {
  double fidelity = 0;  // to f(Q) X(m) |psi>
  double m = 0;
  MeasurementRecord record;
};
// Resource f(Q) S(r)|0>, input pre-rotated by R(-pi/2), theta = 0 homodyne on the input.
GateTeleportResult gate_teleport(const std::function<cplx(double)>& f, const Vec& in, double r,
                                 std::optional<double> m, std::uint64_t seed, const MbqcOptions& opt = {});

}  // namespace cvq
