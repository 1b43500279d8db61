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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cvq/gates.hpp"
#include "cvq/lattice.hpp"
#include "cvq/tomography.hpp"

using namespace cvq;

namespace {

// e^{-0.7 i H}|0> with H = N + (0.1/6) Q^4 + 0.3 Q, built with padding.
FockState anharmonic(int k = 12) {
  const int d = k + 1;
  const Mat q = quad_q(d + 20), n = number(d + 20);
  const Mat h = (n + (0.1 / 6.0) * q * q * q * q + 0.3 * q).topLeftCorner(d, d);
  FockState st = FockState::vacuum(1, k);
  st.amps = expm(h, cplx(0.0, -0.7), true) * st.amps;
  return st;
}

FockState coherent(int k, cplx alpha) {
  FockState st = FockState::vacuum(1, k);
  st.amps = gate_matrix(displacement(0, alpha), k) * st.amps;
  st.amps.normalize();
  return st;
}

// Truth rotated so the reference amplitude is real positive.
std::map<Outcome, cplx> gauge(std::map<Outcome, cplx> t, const Outcome& ref) {
  const cplx ph = std::conj(t.at(ref)) / std::abs(t.at(ref));
  for (auto& [n, v] : t) v *= ph;
  return t;
}

double worst_sigma(const ReconstructionResult& r, const std::map<Outcome, cplx>& truth) {
  double w = 0.0;
  for (const auto& [n, e] : r.entries) w = std::max(w, std::abs(e.value - truth.at(n)) / std::hypot(e.sigma_re, e.sigma_im));
  return w;
}

double max_error(const ReconstructionResult& r, const std::map<Outcome, cplx>& truth) {
  double w = 0.0;
  for (const auto& [n, e] : r.entries) w = std::max(w, std::abs(e.value - truth.at(n)));
  return w;
}

}  // namespace

TEST_CASE("measured probabilities", "[tomography]") {
  const FockState st = anharmonic(8);
  const ProbabilityTable t = measure_probabilities(st, 1e-3, {0});
  REQUIRE(t.settings.size() == 3);
  for (const auto& o : pnr_distribution(st)) CHECK(std::abs(t.prob(0, o.counts) - o.probability) < 1e-14);

  // Free evolution only changes phases.
  FockState one = FockState::basis({1}, 6);
  one.amps = expm(2.0 * number(7), cplx(0.0, -0.9), true) * one.amps;
  CHECK(std::abs(measure_probabilities(one, 1e-3, {0}).prob(0, {1}) - 1.0) < 1e-14);

  const std::int64_t shots = 100000;
  const ProbabilityTable s = measure_probabilities(st, 1e-2, {0}, shots, 3);
  for (size_t k = 0; k < t.settings.size(); ++k)
    for (int n = 0; n <= 8; ++n) {
      const double p = t.prob(k, {n});
      const double sig = std::sqrt(p * (1.0 - p) / double(shots));
      CHECK(std::abs(s.prob(k, {n}) - p) <= 5.0 * sig + 1e-12);
    }
  CHECK_THROWS(measure_probabilities(st, 0.05, {0}));
}

TEST_CASE("single-mode reconstruction", "[tomography]") {
  // Vacuum under H = N stays the vacuum.
  // Zero up to the O(xi) bias of the first-order expansion.
  const auto vac = reconstruct_single_mode(measure_probabilities(FockState::vacuum(1, 6), 1e-3, {0}));
  CHECK(std::abs(std::abs(vac.value({0})) - 1.0) < 1e-6);
  for (int n = 1; n <= 4; ++n) CHECK(std::abs(vac.value({n})) < 1e-3);
  CHECK(vac.value({0}).imag() == 0.0);

  const FockState st = anharmonic();
  const auto truth = amplitudes(st, 4);
  const auto rec = reconstruct_single_mode(measure_probabilities(st, 1e-3, {0}));
  CHECK(align_to(rec, truth).max_error <= 1e-2);
  CHECK(rec.value({0}).imag() == 0.0);
  CHECK(rec.value({0}).real() > 0.0);
  CHECK(reconstruct_multimode(measure_probabilities(st, 1e-3, {0})).entries.size() == rec.entries.size());

  const auto sampled = reconstruct_single_mode(measure_probabilities(st, 1e-3, {0}, 1000000, 11));
  CHECK(worst_sigma(sampled, gauge(truth, {0})) <= 3.0);
}

TEST_CASE("reconstruction is invariant under a global phase", "[tomography][property]") {
  FockState st = anharmonic();
  const auto a = reconstruct_single_mode(measure_probabilities(st, 1e-3, {0}));
  st.amps *= std::exp(cplx(0.0, 1.234));
  const auto b = reconstruct_single_mode(measure_probabilities(st, 1e-3, {0}));
  for (const auto& [n, e] : a.entries) CHECK(std::abs(e.value - b.value(n)) < 1e-9);
}

TEST_CASE("finite displacement bias is first order", "[tomography][property]") {
  const FockState st = anharmonic();
  const auto truth = amplitudes(st, 4);
  const auto full = reconstruct_single_mode(measure_probabilities(st, 1e-3, {0}));
  const auto half = reconstruct_single_mode(measure_probabilities(st, 5e-4, {0}));
  const double ef = align_to(full, truth).max_error, eh = align_to(half, truth).max_error;
  CHECK(std::log(ef / eh) / std::log(2.0) >= 0.9);
  CHECK(align_to(richardson(full, half), truth).max_error < eh);
}

TEST_CASE("shot noise falls as one over root shots", "[tomography][property]") {
  const FockState st = anharmonic();
  const auto truth = gauge(amplitudes(st, 3), {0});
  ReconOptions o;
  o.max_total = 3;
  std::vector<double> err;
  for (std::int64_t shots : {10000, 100000, 1000000}) {
    double acc = 0.0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed)
      acc += max_error(reconstruct_single_mode(measure_probabilities(st, 1e-2, {0}, shots, seed), o), truth);
    err.push_back(acc / 4.0);
  }
  for (size_t i = 1; i < err.size(); ++i) {
    const double ratio = err[i - 1] / err[i];
    CHECK(ratio >= std::sqrt(10.0) / 2.0);
    CHECK(ratio <= std::sqrt(10.0) * 2.0);
  }
}

TEST_CASE("degenerate and inconsistent inputs are reported", "[tomography]") {
  const FockState one = FockState::basis({1}, 6);
  try {
    reconstruct_single_mode(measure_probabilities(one, 1e-3, {0}));
    FAIL("expected DegenerateSeed");
  } catch (const DegenerateSeed& e) {
    CHECK(e.suggested == Outcome{1});
  }
  ReconOptions o;
  o.reference = {1};
  const auto r = reconstruct_single_mode(measure_probabilities(one, 1e-3, {0}), o);
  CHECK(std::abs(r.value({1}) - 1.0) < 1e-12);
  ProbabilityTable bad = measure_probabilities(anharmonic(), 1e-3, {0});
  bad.probs[1](1) = -0.5;
  CHECK_THROWS_AS(reconstruct_single_mode(bad), InconsistentProbabilities);
}

TEST_CASE("multi-mode reconstruction", "[tomography]") {
  // Product of two single-mode states factorizes.
  const FockState a = anharmonic(6), b = coherent(6, cplx(0.4, 0.2));
  FockState prod(2, 6);
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; j <= 6; ++j) prod.amps(prod.index({i, j})) = a.amps(i) * b.amps(j);
  const auto rp = reconstruct_multimode(measure_probabilities(prod, 1e-3, {0, 1}));
  const auto ra = reconstruct_single_mode(measure_probabilities(a, 1e-3, {0}));
  const auto rb = reconstruct_single_mode(measure_probabilities(b, 1e-3, {0}));
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j <= 2; ++j) CHECK(std::abs(rp.value({i, j}) - ra.value({i}) * rb.value({j})) < 1e-2);

  const auto vac = reconstruct_multimode(measure_probabilities(FockState::vacuum(3, 3), 1e-3, {0, 1, 2}));
  CHECK(std::abs(vac.value({0, 0, 0}) - 1.0) < 1e-12);
  for (const auto& [n, e] : vac.entries)
    if (n != Outcome{0, 0, 0}) CHECK(std::abs(e.value) < 1e-3);

  // L = 2 free theory acting on a G-dressed initial state. A coherent b(0)
  // amplitude mixes charge sectors so single-mode steps connect all outcomes.
  ModelParams p;
  p.L = 2;
  p.K = 3;
  p.m = 0.8;
  Circuit prep(4);
  prep.add(displacement(0, cplx(0.5, 0.2)));
  prep.append(build_G(p));
  FockState st = apply_circuit(prep, FockState::vacuum(4, p.K)).state;
  st.amps = expm(exact_hamiltonian(p), cplx(0.0, -0.6), true) * st.amps;
  ReconOptions o;
  o.max_total = 3;
  const auto rec = reconstruct_multimode(measure_probabilities(st, 1e-3, {0, 1, 2, 3}), o);
  CHECK(rec.components == 1);
  CHECK(align_to(rec, amplitudes(st, 3)).max_error <= 1e-2);

  // A charge eigenstate leaves every outcome in its own component.
  FockState q = apply_circuit(build_G(p), FockState::basis({1, 0, 0, 0}, p.K)).state;
  o.reference = {1, 0, 0, 0};
  const auto split = reconstruct_multimode(measure_probabilities(q, 1e-3, {0, 1, 2, 3}), o);
  CHECK(split.components > 1);
  CHECK(align_to(split, amplitudes(q, 3)).max_error <= 1e-2);
}

TEST_CASE("photon-controlled phase linking", "[tomography]") {
  const int k = 8;
  const FockState m = coherent(k, cplx(0.8, 0.3));
  const Mat h = number(k + 1);
  std::vector<Outcome> outs;
  for (int n = 0; n <= 4; ++n) outs.push_back({n});
  auto mags = [&](double t) {
    const Vec c = expm(h, cplx(0.0, -t), true) * m.amps;
    std::map<Outcome, double> r;
    for (const auto& n : outs) r[n] = std::abs(c(n[0]));
    return r;
  };
  const auto ma = mags(0.2), mb = mags(0.9);
  for (const auto& x : link_phases_photon_control(m, h, 0.2, 0.9, outs, ma, mb)) {
    CHECK(std::abs(std::remainder(x.dphi + x.outcome[0] * 0.7, 2.0 * kPi)) < 1e-6);
    CHECK(std::abs(x.p0 + x.p1 - 0.5 * (std::pow(ma.at(x.outcome), 2) + std::pow(mb.at(x.outcome), 2))) < 1e-10);
  }
  for (const auto& x : link_phases_photon_control(m, h, 0.4, 0.4, outs, mags(0.4), mags(0.4))) {
    CHECK(std::abs(x.dphi) < 1e-7);
    CHECK(std::abs(x.p0 - x.p1 - std::pow(mags(0.4).at(x.outcome), 2)) < 1e-12);
  }
  // An outcome with no amplitude has no defined phase.
  const FockState vac = FockState::vacuum(1, k);
  std::map<Outcome, double> z{{{1}, 0.0}};
  const auto und = link_phases_photon_control(vac, h, 0.2, 0.9, {{1}}, z, z);
  REQUIRE(und.size() == 1);
  CHECK(!und[0].defined);
}

TEST_CASE("quadrature-controlled phase linking", "[tomography]") {
  const int k = 8;
  const FockState m = coherent(k, cplx(0.8, 0.3));
  const Mat h = number(k + 1);
  std::vector<Outcome> outs{{0}, {1}, {2}};
  const auto same = link_phases_quadrature_control(m, h, 0.5, 0.5, 0.5, outs);
  for (const auto& x : same) CHECK(std::abs(x.dphi) < 1e-6);
  const auto q = link_phases_quadrature_control(m, h, 0.2, 0.9, 0.5, outs);
  for (const auto& x : q) CHECK(std::abs(std::remainder(x.dphi + x.outcome[0] * 0.7, 2.0 * kPi)) < 2e-2);
  QuadLinkOptions weak;
  weak.r_anc = 0.5;
  const auto w = link_phases_quadrature_control(m, h, 0.2, 0.9, 0.5, {{1}}, weak);
  const auto s = link_phases_quadrature_control(m, h, 0.2, 0.9, 0.5, {{1}});
  CHECK(w[0].visibility < s[0].visibility);
}

TEST_CASE("phase propagation by the Schrodinger equation", "[tomography]") {
  const int d = 9;
  Vec c = Vec::Zero(d);
  for (int n = 0; n < d; ++n) c(n) = cplx(1.0 / (n + 1.0), 0.2 * n);
  RVec e(d);
  for (int n = 0; n < d; ++n) e(n) = 0.5 + n;
  const Mat hd = e.cast<cplx>().asDiagonal();
  const Vec rhs = phase_ode_rhs(c, hd);
  for (int n = 0; n < d; ++n) CHECK(std::abs(rhs(n) + I1 * e(n) * c(n)) < 1e-14);
  CHECK((rk4_propagate(c, Mat::Zero(d, d), 0.0, 1.0, 0.01) - c).norm() == 0.0);
  const Mat h = (number(d) + 0.1 * quad_q(d) * quad_q(d) * quad_q(d) * quad_q(d) / 6.0);
  const Vec exact = expm(h, cplx(0.0, -1.0), true) * c;
  CHECK((rk4_propagate(c, h, 0.0, 1.0, 1e-3) - exact).norm() < 1e-6);
  // Linking a phase-free table at t_b back to the table at t_a.
  const Vec cb = exact * std::exp(cplx(0.0, -0.8));
  CHECK(std::abs(std::remainder(link_phases_ode(c, cb, h, 0.0, 1.0, 1e-3) - 0.8, 2.0 * kPi)) < 1e-6);
}

TEST_CASE("three-point correlator through the current", "[tomography]") {
  ModelParams p;
  p.L = 2;
  p.K = 2;
  p.lam = 0.2;
  p.dm = 0.05;
  ThreePointSetup s;
  s.h = exact_hamiltonian(p);
  s.j = Mat(LatticeFields(2, p.m, p.K + 1).current(0));
  s.initial = FockState::basis({1, 0, 0, 0}, p.K);
  s.recon.max_total = 4;
  s.recon.reference = {1, 0, 0, 0};
  const auto oracle = three_point_oracle(s);
  const auto res = three_point_via_current(s, 1e-3);
  std::map<int, cplx> ov;
  for (const auto& [n, v] : res.c3)
    if (res.component.at(n) >= 0) ov[res.component.at(n)] += std::conj(v) * oracle.at(n);
  int count = 0;
  for (const auto& [n, v] : res.c3) {
    if (std::abs(oracle.at(n)) <= 0.05) continue;
    ++count;
    const cplx ph = ov[res.component.at(n)] / std::abs(ov[res.component.at(n)]);
    CHECK(std::abs(v * ph - oracle.at(n)) <= 5e-2 * std::abs(oracle.at(n)));
  }
  CHECK(count > 0);
  // Charge is conserved: outcomes with a different N_b - N_c carry nothing.
  for (const auto& [n, v] : oracle)
    if (n[0] + n[1] - n[2] - n[3] != 1) CHECK(std::abs(v) <= 1e-8);

  // J is bilinear in the fields: from the vacuum only even, neutral outcomes appear.
  ModelParams f = p;
  f.lam = 0.0;
  f.dm = 0.0;
  ThreePointSetup z = s;
  z.h = exact_hamiltonian(f);
  z.initial = FockState::vacuum(4, p.K);
  z.recon.reference = {0, 0, 0, 0};
  for (const auto& [n, v] : three_point_oracle(z))
    if ((n[0] + n[1] + n[2] + n[3]) % 2 == 1 || n[0] + n[1] != n[2] + n[3]) CHECK(std::abs(v) <= 1e-12);
}
