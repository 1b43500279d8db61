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
#include <filesystem>

#include "cvq/gates.hpp"
#include "cvq/lattice.hpp"

using namespace cvq;

namespace {

std::vector<long> low(int modes, int d, int nmax) { return block_per_mode(modes, d, nmax); }

double block_err(const Mat& a, const Mat& b, const std::vector<long>& idx) { return opnorm(restrict(a - b, idx)); }

Mat ident(long n) { return Mat::Identity(n, n); }

}  // namespace

TEST_CASE("rotation gate", "[gates]") {
  const int k = 8, d = k + 1;
  CHECK((gate_matrix(rotation(0, 0.0), k) - ident(d)).norm() == 0.0);
  const Mat r = gate_matrix(rotation(0, kPi / 2), k);
  CHECK(block_err(r * quad_q(d) * r.adjoint(), quad_p(d), low(1, d, k - 1)) < 1e-13);
  const Mat par = gate_matrix(rotation(0, kPi), k);
  for (int n = 0; n <= k; ++n) CHECK(std::abs(par(n, n) - (n % 2 ? -1.0 : 1.0)) < 1e-14);
}

TEST_CASE("displacement gate", "[gates]") {
  CHECK((gate_matrix(displacement(0, 0.0), 6) - ident(7)).norm() < 1e-15);
  const cplx xi(0.3, -0.4);
  const Mat d40 = gate_matrix(displacement(0, xi), 40);
  CHECK(std::abs(d40(0, 0) - std::exp(-0.5 * std::norm(xi))) < 1e-12);
  // Coherent amplitudes e^{-|xi|^2/2} xi^n / sqrt(n!).
  for (int n = 0; n < 10; ++n)
    CHECK(std::abs(d40(n, 0) - std::exp(-0.5 * std::norm(xi)) * std::pow(xi, n) / std::sqrt(std::tgamma(n + 1.0))) < 1e-12);
  const cplx small = std::polar(1e-3, 0.7);
  const int k = 12, d = k + 1;
  const Mat gen = small * raise(d) - std::conj(small) * lower(d);
  const Mat res = gate_matrix(displacement(0, small), k) - ident(d) - gen;
  CHECK(opnorm(restrict(res, low(1, d, 1))) <= 2.0 * std::norm(small));
  // On n <= 4 the residual is the second-order term gen^2/2 up to O(|xi|^3).
  const double second = opnorm(restrict(Mat(0.5 * gen * gen), low(1, d, 4)));
  CHECK(std::abs(opnorm(restrict(res, low(1, d, 4))) - second) <= 10.0 * std::pow(std::abs(small), 3));
}

TEST_CASE("displacements compose with a phase", "[gates][property]") {
  const int k = 30, d = k + 1;
  const cplx x1(0.07, 0.02), x2(-0.03, 0.06);
  const Mat lhs = gate_matrix(displacement(0, x1), k) * gate_matrix(displacement(0, x2), k);
  const Mat rhs = std::exp(I1 * std::imag(x1 * std::conj(x2))) * gate_matrix(displacement(0, x1 + x2), k);
  CHECK(block_err(lhs, rhs, low(1, d, 6)) < 1e-8);
}

TEST_CASE("two-mode squeezer reproduces the Bogoliubov map", "[gates]") {
  const int k = 16, d = k + 1;
  const double r = 0.3;
  const Mat s = gate_matrix(squeeze2(0, 1, r), k, {8});
  const Mat a1 = kron(lower(d), ident(d)), a2d = kron(ident(d), raise(d));
  const Mat lhs = s.adjoint() * a1 * s, rhs = std::cosh(r) * a1 + std::sinh(r) * a2d;
  CHECK(block_err(lhs, rhs, block_total(2, d, 3)) < 1e-8);
  CHECK(std::abs(std::cosh(r) * std::cosh(r) - std::sinh(r) * std::sinh(r) - 1.0) < 1e-15);
  CHECK((gate_matrix(squeeze2(0, 1, 0.0), 4) - ident(25)).norm() < 1e-14);
}

TEST_CASE("50:50 beam splitter", "[gates]") {
  const int k = 4, d = k + 1;
  const Mat b = gate_matrix(beamsplitter(0, 1), k);
  const FockState in = FockState::basis({1, 0}, k);
  FockState out = in;
  out.amps = b * in.amps;
  // Sign fixed by the generator a1^+ a2 - a1 a2^+.
  CHECK(std::abs(out.amp({1, 0}) - 1.0 / std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(out.amp({0, 1}) + 1.0 / std::sqrt(2.0)) < 1e-14);
  const Mat ntot = kron(number(d), ident(d)) + kron(ident(d), number(d));
  CHECK((b * ntot - ntot * b).norm() < 1e-12);
  const Mat gen = kron(raise(d), lower(d)) - kron(lower(d), raise(d));
  CHECK((b * b - expm(gen, kPi / 2, false)).norm() < 1e-12);
  // Heisenberg map a1 -> (a1 - a2)/sqrt2 on the low block.
  const Mat a1 = kron(lower(d), ident(d)), a2 = kron(ident(d), lower(d));
  CHECK(block_err(b * a1 * b.adjoint(), (a1 - a2) / std::sqrt(2.0), block_total(2, d, k - 1)) < 1e-12);
}

TEST_CASE("quartic phase gate", "[gates]") {
  const int k = 20, d = k + 1;
  CHECK((gate_matrix(quartic_phase(0, 0.0), k) - ident(d)).norm() < 1e-14);
  const Mat p4 = gate_matrix(quartic_phase(0, 0.1), k);
  const Mat q = quad_q(d);
  CHECK(block_err(p4 * q, q * p4, low(1, d, k - 4)) < 1e-10);
  // Power series to order 20 with scaling and squaring; the plain series does
  // not converge at this cutoff since |gamma Q^4 / 6| is about 27.
  const int sq = 10;
  const Mat q4 = q * q * q * q * (I1 * 0.1 / 6.0 / std::pow(2.0, sq));
  Mat series = ident(d), term = ident(d);
  for (int j = 1; j <= 20; ++j) {
    term = term * q4 / double(j);
    series += term;
  }
  for (int i = 0; i < sq; ++i) series = series * series;
  CHECK(block_err(p4, series, low(1, d, 4)) < 1e-10);
}

TEST_CASE("controlled-Z gate", "[gates]") {
  const int k = 6, d = k + 1;
  const Mat c01 = gate_matrix(cz(0, 1), k), c10 = gate_matrix(cz(1, 0), k);
  CHECK((c01 - c10).norm() < 1e-12);
  const Mat q1 = kron(quad_q(d), ident(d)), q2 = kron(ident(d), quad_q(d));
  CHECK((c01 * q1 - q1 * c01).norm() < 1e-10);
  CHECK((c01 * q2 - q2 * c01).norm() < 1e-10);

  // Var(P1 - Q2) after CZ on two squeezed inputs equals e^{-2r}/2.
  const int kk = 24, dd = kk + 1;
  const Mat p1 = kron(quad_p(dd), ident(dd)), qq2 = kron(ident(dd), quad_q(dd));
  const Mat x = p1 - qq2;
  double prev = 1e9;
  for (double r : {0.2, 0.4, 0.6}) {
    Circuit c(2);
    c.add(squeeze1(0, r)).add(squeeze1(1, r)).add(cz(0, 1));
    const FockState st = apply_circuit(c, FockState::vacuum(2, kk), {8}).state;
    const cplx mean = st.amps.dot(x * st.amps);
    const double var = std::real(st.amps.dot(x * (x * st.amps))) - std::norm(mean);
    CHECK(var < prev);
    CHECK(std::abs(var - 0.5 * std::exp(-2.0 * r)) < 1e-4);
    prev = var;
  }
}

TEST_CASE("current unitary", "[gates]") {
  const int L = 2, k = 2, d = k + 1;
  const std::vector<int> modes = {0, 1, 2, 3};
  const long n = register_size(2 * L, d);
  CHECK((gate_matrix(current_unitary(modes, 0.0, 0, L, 1.0), k) - ident(n)).norm() < 1e-12);
  const Mat j(LatticeFields(L, 1.0, d).current(0));
  CHECK(hermiticity_defect(j) <= 1e-12);
  const double z = 1e-3;
  const Mat u = gate_matrix(current_unitary(modes, z, 0, L, 1.0), k);
  const double jn = opnorm(j);
  CHECK(block_err(u, ident(n) + I1 * z * j, block_total(2 * L, d, 2)) <= 2.0 * z * z * jn * jn);
  const RVec q = charge_diagonal(L, d);
  const Mat qm = q.cast<cplx>().asDiagonal();
  CHECK((j * qm - qm * j).norm() <= 1e-10);
}

TEST_CASE("photon-number controlled evolution", "[gates]") {
  const int k = 3, d = k + 1;
  Mat h = Mat::Random(d, d);
  h = 0.5 * (h + h.adjoint());
  const double dt = 0.4;
  const Mat g = gate_matrix(controlled_n(0, {1}, dt, h), k);
  // Ancilla-major ordering: block n is rows/cols n*d .. n*d + d - 1.
  CHECK((g.block(0, 0, d, d) - ident(d)).norm() < 1e-12);
  CHECK((g.block(d, d, d, d) - expm(h, cplx(0.0, -dt), true)).norm() < 1e-12);
  CHECK((g.block(2 * d, 2 * d, d, d) - expm(h, cplx(0.0, -2.0 * dt), true)).norm() < 1e-12);
  CHECK(g.block(0, d, d, d).norm() < 1e-14);
  // Ancilla (|0> + |1>)/sqrt2 times a system state keeps both branches.
  Vec psi = Vec::Zero(d);
  psi(1) = 1.0;
  Vec in = Vec::Zero(d * d);
  in.segment(0, d) = psi / std::sqrt(2.0);
  in.segment(d, d) = psi / std::sqrt(2.0);
  const Vec out = g * in;
  CHECK((out.segment(0, d) - psi / std::sqrt(2.0)).norm() < 1e-12);
  CHECK((out.segment(d, d) - expm(h, cplx(0.0, -dt), true) * psi / std::sqrt(2.0)).norm() < 1e-12);
}

TEST_CASE("quadrature controlled evolution", "[gates]") {
  const int k = 5, d = k + 1;
  Mat h = Mat::Random(d, d);
  h = 0.5 * (h + h.adjoint());
  CHECK((gate_matrix(controlled_q(0, {1}, 0.0, h), k) - ident(d * d)).norm() < 1e-12);
  const double tau = 0.3;
  const Mat g = gate_matrix(controlled_q(0, {1}, tau, h), k);
  CHECK((g.adjoint() * g - ident(d * d)).norm() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Mat> es(quad_q(d));
  const Vec e = es.eigenvectors().col(2);
  const double s = es.eigenvalues()(2);
  Vec psi = Vec::Zero(d);
  psi(0) = 0.6;
  psi(2) = cplx(0.0, 0.8);
  const Vec in = kron(e, psi);
  const Vec want = kron(e, expm(h, cplx(0.0, -s * tau), true) * psi);
  CHECK((g * in - want).norm() < 1e-10);
}

TEST_CASE("every gate kind is unitary below the boundary", "[gates][property]") {
  const int k = 8, d = k + 1;
  Mat h = Mat::Random(d, d);
  h = 0.5 * (h + h.adjoint());
  const std::vector<GateSpec> one = {rotation(0, 0.3), displacement(0, {0.2, 0.1}), shear(0, 0.4), squeeze1(0, 0.2),
                                     quartic_phase(0, 0.1), translate_q(0, 0.3), translate_p(0, -0.2)};
  const std::vector<GateSpec> two = {squeeze2(0, 1, 0.2), beamsplitter(0, 1), cz(0, 1), controlled_n(0, {1}, 0.2, h),
                                     controlled_q(0, {1}, 0.2, h)};
  for (const auto& g : one) {
    const Mat u = gate_matrix(g, k);
    CHECK(block_err(u.adjoint() * u, ident(d), low(1, d, k - 2)) < 1e-10);
  }
  for (const auto& g : two) {
    const Mat u = gate_matrix(g, k);
    CHECK(block_err(u.adjoint() * u, ident(d * d), low(2, d, k - 2)) < 1e-10);
  }
}

TEST_CASE("circuits apply gates in order", "[gates]") {
  const int k = 4;
  FockState st(2, k);
  for (long i = 0; i < st.size(); ++i) st.amps(i) = cplx(1.0 / (1.0 + double(i)), 0.0);
  st.amps.normalize();
  CHECK(apply_circuit(Circuit(2), st).state.amps == st.amps);
  Circuit c(2);
  c.add(rotation(1, 0.5));
  const FockState r = apply_circuit(c, FockState::basis({0, 2}, k)).state;
  CHECK(std::abs(r.amp({0, 2}) - std::exp(cplx(0.0, 1.0))) < 1e-14);

  ModelParams p;
  p.L = 2;
  p.K = 3;
  p.lam = 0.2;
  const Circuit g = build_G(p);
  const FockState vac = FockState::vacuum(4, p.K);
  const FockState out = apply_circuit(g, vac).state;
  Mat dense = Mat::Identity(vac.size(), vac.size());
  for (const auto& gate : g.gates) {
    Mat full = Mat::Identity(vac.size(), vac.size());
    apply_columns(gate_matrix(gate, p.K), gate.targets, 4, p.K + 1, full);
    dense = full * dense;
  }
  CHECK((out.amps - dense * vac.amps).norm() < 1e-12);
  CHECK((compile(g, p.K).dense() - dense).norm() < 1e-10);

  Circuit bad(2);
  bad.add(rotation(0, 0.1));
  CHECK_THROWS(bad.add(rotation(3, 0.1)));
  bad.gates.push_back(rotation(3, 0.1));
  try {
    apply_circuit(bad, st);
    FAIL("expected GateError");
  } catch (const GateError& e) {
    CHECK(e.gate_index == 1);
  }
}

TEST_CASE("h_int rewrites agree", "[gates]") {
  ModelParams p;
  p.lam = 0.3;
  p.dm = 0.1;
  p.K = 6;
  // Built with 12 padding levels and compared on the K = 6 levels.
  const int dp = 7 + 12;
  const auto forms = hint_rewrites(p, dp);
  const Mat base = hint_position(p, dp);
  const auto lm = level_map(2, dp, 7);
  for (const auto& f : forms) CHECK((restrict(f, lm) - restrict(base, lm)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("circuit json round trip", "[gates]") {
  Mat h = Mat::Random(3, 3);
  h = 0.5 * (h + h.adjoint());
  Circuit c(3);
  c.add(rotation(0, 0.1234567890123)).add(displacement(1, {0.1, -0.2})).add(squeeze2(0, 2, 0.3)).add(beamsplitter(1, 2));
  c.add(cz(0, 1, 0.7)).add(quartic_phase(2, -0.05)).add(controlled_n(0, {1}, 0.2, h)).add(translate_p(2, 1.5));
  const auto path = std::filesystem::temp_directory_path() / "cvq_circuit_roundtrip.json";
  save_circuit(c, path.string());
  const Circuit back = load_circuit(path.string());
  std::filesystem::remove(path);
  REQUIRE(back.gates.size() == c.gates.size());
  CHECK(to_json(back) == to_json(c));
  for (size_t i = 0; i < c.gates.size(); ++i) CHECK((gate_matrix(back.gates[i], 2) - gate_matrix(c.gates[i], 2)).norm() == 0.0);
}
