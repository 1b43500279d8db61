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

#include "cvq/fock.hpp"

namespace cvq {

using Outcome = std::vector<int>;

// One measurement setting: displacement `value` on `mode`; mode -1 is the
// undisplaced setting.
struct DisplacementSetting {
  int mode = -1;
  cplx value = 0.0;
};

// PNR distributions over the register, one per setting. Settings are ordered
// {0} then {xi e_j, i xi e_j} for each probed mode j.
struct ProbabilityTable {
  int num_modes = 1;
  int cutoff = 1;
  double xi = 1e-3;
  std::vector<int> probed_modes;
  std::vector<DisplacementSetting> settings;
  std::vector<RVec> probs;
  std::int64_t shots = 0;  // 0 for exact probabilities

  size_t zero_setting() const { return 0; }
  size_t setting_index(int mode, bool imaginary) const;
  double prob(size_t setting, const Outcome& n) const;
};

constexpr double kXiGuard = 1e-2;

// PNR distributions of `evolved` after each displacement setting. shots = 0
// gives exact probabilities, otherwise a seeded multinomial draw per setting.
ProbabilityTable measure_probabilities(const FockState& evolved, double xi, const std::vector<int>& modes,
                                       std::int64_t shots = 0, std::uint64_t seed = 0,
                                       bool allow_large_xi = false);

struct ReconEntry {
  cplx value;
  double sigma_re = 0.0;
  double sigma_im = 0.0;
  int component = 0;  // outcomes sharing a component share one unknown phase
};

struct ReconstructionResult {
  int num_modes = 1;
  Outcome reference;
  std::map<Outcome, ReconEntry> entries;
  double residual_norm = 0.0;
  int components = 1;
  // Outcomes with significant probability whose phase could not be tied to the
  // reference outcome; each seeds its own component with phase 0.
  std::vector<Outcome> unreachable;

  cplx value(const Outcome& n) const;
};

struct ReconOptions {
  int max_total = 4;        // reconstruct outcomes with total photon number <= max_total
  double seed_floor = 1e-8; // minimum |C_ref|^2 to start the cascade
  double negligible = 1e-10;// probabilities below this are treated as zero amplitudes
  bool propagate_errors = true;
  // Cascade start; empty means the all-zeros outcome.
  Outcome reference;
};

struct DegenerateSeed : std::runtime_error {
  Outcome suggested;
  DegenerateSeed(const std::string& w, Outcome s) : std::runtime_error(w), suggested(std::move(s)) {}
};

struct InconsistentProbabilities : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cascade through the first-order displacement equations starting from the
// all-zeros outcome, one displaced mode at a time; least squares where paths meet.
ReconstructionResult reconstruct_multimode(const ProbabilityTable& t, const ReconOptions& opt = {});
ReconstructionResult reconstruct_single_mode(const ProbabilityTable& t, const ReconOptions& opt = {});
// 2 C(xi/2) - C(xi); the two tables must differ only in xi.
ReconstructionResult richardson(const ReconstructionResult& at_xi, const ReconstructionResult& at_half);

// exp(-i alpha) applied to `rec` minimizing sum |rec e^{i alpha} - truth|^2,
// separately for each component. Returns max |difference| after alignment.
struct Alignment {
  double max_error = 0.0;
  std::map<Outcome, cplx> aligned;
};
Alignment align_to(const ReconstructionResult& rec, const std::map<Outcome, cplx>& truth);

// <n|U|psi> over the register for every outcome with total photons <= max_total.
std::map<Outcome, cplx> amplitudes(const FockState& st, int max_total);

// Photon-number-controlled Mach-Zehnder: ancillas |1,0> through BS, system
// evolved by Ua, controlled exp(-i N_a0 G), BS, PNR. A second run with R(pi/2)
// on a0 before the last BS gives the sine. Per outcome n:
//   P_{n,a0} = |C_a + (-1)^{a0} C_b|^2 / 4,  C_b = <n|e^{-iG} Ua|m>.
struct LinkOutcome {
  Outcome outcome;
  double p0 = 0.0, p1 = 0.0;  // cosine setting, a0 = 0 / 1
  double q0 = 0.0, q1 = 0.0;  // sine setting
  double cos_est = 0.0, sin_est = 0.0;
  double dphi = 0.0;          // arg C_b - arg C_a
  bool defined = false;
};

struct LinkOptions {
  double magnitude_floor = 1e-6;  // |C_a C_b| below this leaves the phase undefined
  double cos_tolerance = 1e-6;    // allowed excess of |cos| over 1 (exact mode)
  std::int64_t shots = 0;
  std::uint64_t seed = 0;
};

struct PhaseInconsistency : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// mags_a / mags_b hold |C_a(n)|, |C_b(n)| for the requested outcomes.
std::vector<LinkOutcome> link_phases_interferometer(const FockState& m, const Mat& ua, const Mat& g,
                                                    const std::vector<Outcome>& outcomes,
                                                    const std::map<Outcome, double>& mags_a,
                                                    const std::map<Outcome, double>& mags_b,
                                                    const LinkOptions& opt = {});
// Time linking: Ua = exp(-i t_a H), G = (t_b - t_a) H.
std::vector<LinkOutcome> link_phases_photon_control(const FockState& m, const Mat& h, double t_a, double t_b,
                                                    const std::vector<Outcome>& outcomes,
                                                    const std::map<Outcome, double>& mags_a,
                                                    const std::map<Outcome, double>& mags_b,
                                                    const LinkOptions& opt = {});

// Quadrature-controlled linking with a two-peak ancilla (equal superposition of
// q-squeezed states at s_a = t_a / tau and s_b = t_b / tau, squeezing r_anc).
struct QuadLinkOptions {
  double r_anc = 2.0;
  int anc_cutoff = 200;
  double grid_half_width = 8.0;
  int grid_points = 4096;
  double min_visibility = 0.05;
};

struct QuadLinkOutcome {
  Outcome outcome;
  double dphi = 0.0;
  double visibility = 0.0;  // fitted fringe amplitude over offset
  double weight = 0.0;      // probability of the system outcome
};

struct LowVisibility : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<QuadLinkOutcome> link_phases_quadrature_control(const FockState& m, const Mat& h, double t_a, double t_b,
                                                            double tau, const std::vector<Outcome>& outcomes,
                                                            const QuadLinkOptions& opt = {});

// dC/dt = -i H C for C_n = <n|e^{-iHt}|m>.
Vec phase_ode_rhs(const Vec& c, const Mat& h);
Vec rk4_propagate(const Vec& c, const Mat& h, double t0, double t1, double step);
// Phase carrying rec_a (complete table at t_a) onto the phase-free table rec_b
// at t_b: returns arg <rec_b | propagated>.
double link_phases_ode(const Vec& rec_a, const Vec& rec_b, const Mat& h, double t_a, double t_b, double step);

// Three-point correlator <n| e^{i t_f H} J e^{-i t_i H} |m> from the +-zeta runs.
struct ThreePointSetup {
  Mat h;                       // system Hamiltonian on the register
  Mat j;                       // Hermitian current on the register
  FockState initial;
  double t_i = -0.5;
  double t_f = 0.5;
  double xi = 1e-3;
  std::vector<int> probed_modes;  // empty: all modes
  ReconOptions recon;
};

struct ThreePointResult {
  ReconstructionResult plus, minus;
  std::map<Outcome, cplx> c3;  // phase fixed per component of `plus`
  std::map<Outcome, int> component;
  std::vector<double> link_phase;  // arg C_ref(-zeta) - arg C_ref(+zeta) per component
};

struct LinearityFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ThreePointResult three_point_via_current(const ThreePointSetup& s, double zeta);
// Compares the estimates at zeta and zeta/2; throws LinearityFailure when they
// differ by more than `tol` relative on entries above `floor`.
ThreePointResult three_point_checked(const ThreePointSetup& s, double zeta, double tol = 0.05, double floor = 0.05);
std::map<Outcome, cplx> three_point_oracle(const ThreePointSetup& s);

nlohmann::json to_json(const ReconstructionResult& r);
std::string probability_csv(const ProbabilityTable& t);

}  // namespace cvq
