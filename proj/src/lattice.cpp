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

#include "cvq/lattice.hpp"

#include <cmath>

namespace cvq {

void ModelParams::validate() const {
  if (L < 1) throw std::invalid_argument("ModelParams: L must be >= 1");
  if (!(m > 0.0)) throw std::invalid_argument("ModelParams: mass must be positive");
  if (K < 2) throw std::invalid_argument("ModelParams: cutoff K must be >= 2");
  if (dt < 0.0) throw std::invalid_argument("ModelParams: dt must be >= 0");
  if (steps < 1) throw std::invalid_argument("ModelParams: steps must be >= 1");
}

double ModelParams::omega_max() const {
  double w = 0.0;
  for (int k = 0; k < L; ++k) w = std::max(w, dispersion(k, *this));
  return w;
}

double ModelParams::time_step() const { return dt > 0.0 ? dt : 0.1 / omega_max(); }

ModeLayout::ModeLayout(int l) : L(l) {
  if (l < 1) throw std::invalid_argument("ModeLayout: L must be >= 1");
}

std::vector<std::array<int, 2>> ModeLayout::pairing() const {
  std::vector<std::array<int, 2>> out;
  for (int k = 0; k < L; ++k) out.push_back({b(k), c((L - k) % L)});
  return out;
}

double dispersion(int k, const ModelParams& p) {
  if (k < 0 || k >= p.L) throw std::out_of_range("dispersion: k outside [0, L)");
  double s = std::sin(kPi * k / p.L);
  return std::sqrt(p.m * p.m + 4.0 * s * s);
}

double squeezing_parameter(int k, const ModelParams& p) { return -0.5 * std::log(dispersion(k, p)); }

std::vector<double> mode_energies(const ModelParams& p) {
  std::vector<double> e(size_t(2 * p.L));
  for (int k = 0; k < p.L; ++k) e[size_t(k)] = e[size_t(p.L + k)] = dispersion(k, p);
  return e;
}

namespace {

template <class F>
RVec register_diagonal(int modes, int d, F f) {
  long n = register_size(modes, d);
  RVec out(n);
  std::vector<int> c(static_cast<size_t>(modes));
  for (long i = 0; i < n; ++i) {
    long r = i;
    for (int j = modes - 1; j >= 0; --j) {
      c[size_t(j)] = int(r % d);
      r /= d;
    }
    out(i) = f(c);
  }
  return out;
}

Mat two_mode(const Mat& a, int slot_idx, int d) { return embed_dense(a, slot_idx, 2, d); }

}  // namespace

RVec h0_diagonal(const ModelParams& p, int d) {
  auto e = mode_energies(p);
  return register_diagonal(2 * p.L, d, [&](const std::vector<int>& c) {
    double s = 0.0;
    for (size_t j = 0; j < c.size(); ++j) s += e[j] * c[j];
    return s;
  });
}

RVec charge_diagonal(int L, int d) {
  return register_diagonal(2 * L, d, [L](const std::vector<int>& c) {
    double s = 0.0;
    for (int k = 0; k < L; ++k) s += c[size_t(k)] - c[size_t(L + k)];
    return s;
  });
}

// b^+(k) and c^+(k) both add lattice momentum k: the pair b(k), c(L-k)
// created by the squeezers carries zero total momentum.
RVec momentum_diagonal(int L, int d) {
  return register_diagonal(2 * L, d, [L](const std::vector<int>& c) {
    long s = 0;
    for (int k = 0; k < L; ++k) s += long(k) * (c[size_t(k)] + c[size_t(L + k)]);
    return double(s % L);
  });
}

Mat dft_matrix(int L, bool particle) {
  Mat m(L, L);
  double sgn = particle ? 1.0 : -1.0;
  for (int x = 0; x < L; ++x)
    for (int k = 0; k < L; ++k) m(x, k) = std::polar(1.0 / std::sqrt(double(L)), sgn * 2.0 * kPi * k * x / L);
  return m;
}

Circuit build_G(const ModelParams& p) {
  p.validate();
  ModeLayout lay(p.L);
  Circuit c(lay.num_modes());
  auto pairs = lay.pairing();
  for (int k = 0; k < p.L; ++k) c.add(squeeze2(pairs[size_t(k)][0], pairs[size_t(k)][1], squeezing_parameter(k, p)));
  if (p.L == 2) {
    c.add(beamsplitter(lay.b(0), lay.b(1)));
    c.add(rotation(lay.b(1), kPi));
    c.add(beamsplitter(lay.c(0), lay.c(1)));
    c.add(rotation(lay.c(1), kPi));
  } else if (p.L > 2) {
    std::vector<int> bm, cm;
    for (int k = 0; k < p.L; ++k) {
      bm.push_back(lay.b(k));
      cm.push_back(lay.c(k));
    }
    c.add(interferometer(bm, dft_matrix(p.L, true)));
    c.add(interferometer(cm, dft_matrix(p.L, false)));
  }
  return c;
}

Mat hint_position(const ModelParams& p, int d) {
  Mat q = quad_q(d), pp = quad_p(d);
  Mat s = two_mode(q, 0, d) + two_mode(q, 1, d);
  Mat t = two_mode(pp, 0, d) - two_mode(pp, 1, d);
  Mat x = s * s + t * t;
  return p.dm / 2.0 * x + p.lam / 16.0 * x * x;
}

std::array<Mat, 3> hint_rewrites(const ModelParams& p, int d) {
  const int k = d - 1;
  Mat bs = gate_matrix(beamsplitter(0, 1), k);
  Mat rc = two_mode(gate_matrix(rotation(0, kPi / 2.0), k), 1, d);
  Mat q = quad_q(d), pp = quad_p(d);
  Mat qb = two_mode(q, 0, d), qc = two_mode(q, 1, d), pc = two_mode(pp, 1, d);
  Mat y1 = qb * qb + pc * pc;
  Mat form1 = bs.adjoint() * (p.dm * y1 + p.lam / 4.0 * y1 * y1) * bs;
  Mat y2 = qb * qb + qc * qc;
  Mat v = rc * bs;
  Mat form2 = v.adjoint() * (p.dm * y2 + p.lam / 4.0 * y2 * y2) * v;
  Mat sp = qb + qc, sm = qb - qc;
  Mat quart = 4.0 * qb * qb * qb * qb + 4.0 * qc * qc * qc * qc + sp * sp * sp * sp + sm * sm * sm * sm;
  Mat form3 = v.adjoint() * (p.dm * y2 + p.lam / 24.0 * quart) * v;
  return {form1, form2, form3};
}

Mat hint_circuit_generator(const ModelParams& p, int d) {
  const int k = d - 1;
  Mat bs = gate_matrix(beamsplitter(0, 1), k);
  Mat v = two_mode(gate_matrix(rotation(0, kPi / 2.0), k), 1, d) * bs;
  Mat q = quad_q(d);
  Mat q2 = q * q, q4 = q2 * q2;
  Mat d1 = p.dm * (two_mode(q2, 0, d) + two_mode(q2, 1, d));
  Mat d2 = p.lam / 6.0 * (two_mode(q4, 0, d) + two_mode(q4, 1, d));
  Mat h = v.adjoint() * (d1 + d2 + bs.adjoint() * d2 * bs) * v;
  return 0.5 * (h + h.adjoint());
}

namespace {

void add_pint(Circuit& c, int b, int cc, const ModelParams& p) {
  const double dt = p.time_step();
  c.add(beamsplitter(b, cc));
  c.add(rotation(cc, kPi / 2.0));
  c.add(shear(b, -p.dm * dt));
  c.add(shear(cc, -p.dm * dt));
  c.add(quartic_phase(b, -p.lam * dt));
  c.add(quartic_phase(cc, -p.lam * dt));
  c.add(beamsplitter(b, cc));
  c.add(quartic_phase(b, -p.lam * dt));
  c.add(quartic_phase(cc, -p.lam * dt));
  c.add(beamsplitter(cc, b));
  c.add(rotation(cc, -kPi / 2.0));
  c.add(beamsplitter(cc, b));
}

}  // namespace

Circuit build_Pint_circuit(int k, const ModelParams& p) {
  p.validate();
  ModeLayout lay(p.L);
  if (k < 0 || k >= p.L) throw std::out_of_range("build_Pint_circuit: k outside [0, L)");
  Circuit c(lay.num_modes());
  add_pint(c, lay.b(k), lay.c(k), p);
  return c;
}

Circuit pint_two_mode(const ModelParams& p) {
  Circuit c(2);
  add_pint(c, 0, 1, p);
  return c;
}

Circuit build_trotter_step(const ModelParams& p) {
  p.validate();
  ModeLayout lay(p.L);
  Circuit g = build_G(p);
  Circuit c(lay.num_modes());
  c.append(g);
  for (int k = 0; k < p.L; ++k) add_pint(c, lay.b(k), lay.c(k), p);
  c.append(g.inverse());
  const double dt = p.time_step();
  for (int k = 0; k < p.L; ++k) {
    c.add(rotation(lay.b(k), -dispersion(k, p) * dt));
    c.add(rotation(lay.c(k), -dispersion(k, p) * dt));
  }
  return c;
}

Circuit build_trotter_circuit(const ModelParams& p, int n_steps) {
  Circuit step = build_trotter_step(p);
  Circuit c(step.num_modes);
  for (int i = 0; i < n_steps; ++i) c.append(step);
  return c;
}

Mat exact_hamiltonian(const ModelParams& p, HintForm form, long cap) {
  p.validate();
  ModeLayout lay(p.L);
  const int d = p.K + 1;
  const long n = register_size(lay.num_modes(), d);
  if (n > cap)
    throw OracleCapExceeded("exact_hamiltonian: dimension " + std::to_string(n) + " exceeds oracle cap " +
                            std::to_string(cap));
  Circuit g = build_G(p);
  Mat m = compile(g, p.K).dense();
  Mat h2 = form == HintForm::Direct ? hint_position(p, d) : hint_circuit_generator(p, d);
  Mat t = Mat::Zero(n, n);
  for (int k = 0; k < p.L; ++k) {
    Mat mk = m;
    apply_columns(h2, {lay.b(k), lay.c(k)}, lay.num_modes(), d, mk);
    t += mk;
  }
  compile(g.inverse(), p.K).apply(t);
  t.diagonal() += h0_diagonal(p, d).cast<cplx>();
  return 0.5 * (t + t.adjoint());
}

HamiltonianAction::HamiltonianAction(const ModelParams& p, HintForm form, int d) : p_(p), d_(d) {
  p.validate();
  if (d < 2) throw std::invalid_argument("HamiltonianAction: dimension below 2");
  Circuit g = build_G(p);
  g_ = compile(g, d - 1);
  ginv_ = compile(g.inverse(), d - 1);
  ModelParams pd = p;
  pd.K = d - 1;
  h2_ = form == HintForm::Direct ? hint_position(pd, d) : hint_circuit_generator(pd, d);
  h0_ = h0_diagonal(p, d);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h2_ + h2_.adjoint()), Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  bounds_ = {h0_.minCoeff() + p.L * std::min(lo, 0.0), h0_.maxCoeff() + p.L * std::max(hi, 0.0)};
}

Mat HamiltonianAction::operator()(const Mat& cols) const {
  ModeLayout lay(p_.L);
  Mat gc = cols;
  g_.apply(gc);
  Mat acc = Mat::Zero(gc.rows(), gc.cols());
  for (int k = 0; k < p_.L; ++k) {
    Mat t = gc;
    apply_columns(h2_, {lay.b(k), lay.c(k)}, lay.num_modes(), d_, t);
    acc += t;
  }
  ginv_.apply(acc);
  acc += h0_.cast<cplx>().asDiagonal() * cols;
  return acc;
}

Mat evolve_exact(const HamiltonianAction& h, double t, const Mat& cols) {
  auto [lo, hi] = h.bounds();
  return chebyshev_propagate([&h](const Mat& v) -> Mat { return h(v); }, t, cols, lo, hi);
}

LatticeFields::LatticeFields(int l, double mass, int dim) : L(l), m(mass), d(dim) {
  Mat a = lower(d);
  for (int k = 0; k < L; ++k) {
    b.push_back(embed_sparse(a, k, 2 * L, d));
    c.push_back(embed_sparse(a, L + k, 2 * L, d));
  }
}

SpMat LatticeFields::phi(int x) const {
  ModelParams p;
  p.L = L;
  p.m = m;
  SpMat out(b[0].rows(), b[0].cols());
  for (int k = 0; k < L; ++k) {
    double w = dispersion(k, p);
    cplx e = std::polar(1.0, 2.0 * kPi * k * x / L);
    out += (SpMat(b[size_t(k)] * e) + SpMat(SpMat(c[size_t(k)].adjoint()) * std::conj(e))) / std::sqrt(2.0 * w);
  }
  return out / std::sqrt(double(L));
}

SpMat LatticeFields::pi(int x) const {
  ModelParams p;
  p.L = L;
  p.m = m;
  SpMat out(b[0].rows(), b[0].cols());
  for (int k = 0; k < L; ++k) {
    double w = dispersion(k, p);
    cplx e = std::polar(1.0, 2.0 * kPi * k * x / L);
    out += (SpMat(SpMat(b[size_t(k)].adjoint()) * std::conj(e)) - SpMat(c[size_t(k)] * e)) * std::sqrt(w / 2.0);
  }
  return out * (I1 / std::sqrt(double(L)));
}

SpMat LatticeFields::B(int x) const { return (phi(x) + SpMat(SpMat(pi(x).adjoint()) * I1)) / std::sqrt(2.0); }
SpMat LatticeFields::C(int x) const { return (SpMat(phi(x).adjoint()) + SpMat(pi(x) * I1)) / std::sqrt(2.0); }

SpMat LatticeFields::QB(int x) const {
  SpMat o = B(x);
  return (o + SpMat(o.adjoint())) / std::sqrt(2.0);
}
SpMat LatticeFields::PB(int x) const {
  SpMat o = B(x);
  return (o - SpMat(o.adjoint())) / cplx(0.0, std::sqrt(2.0));
}
SpMat LatticeFields::QC(int x) const {
  SpMat o = C(x);
  return (o + SpMat(o.adjoint())) / std::sqrt(2.0);
}
SpMat LatticeFields::PC(int x) const {
  SpMat o = C(x);
  return (o - SpMat(o.adjoint())) / cplx(0.0, std::sqrt(2.0));
}

SpMat LatticeFields::current(int x) const {
  SpMat f = phi(x), q = pi(x);
  SpMat fd = f.adjoint(), qd = q.adjoint();
  SpMat j = SpMat(q * f) - SpMat(fd * qd);
  return j * I1;
}

}  // namespace cvq
