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

#include "cvq/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "cvq/gates.hpp"

namespace cvq {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

long outcome_index(const Outcome& n, int d) {
  long idx = 0;
  for (int v : n) {
    if (v < 0 || v >= d) return -1;
    idx = idx * d + v;
  }
  return idx;
}

// All outcomes of `modes` modes with per-mode count < d and total <= max_total,
// ordered by total photon number.
std::vector<Outcome> outcomes_by_total(int modes, int d, int max_total) {
  std::vector<Outcome> all;
  for (long i : block_total(modes, d, max_total)) {
    Outcome n(static_cast<size_t>(modes));
    long r = i;
    for (int j = modes - 1; j >= 0; --j) {
      n[size_t(j)] = int(r % d);
      r /= d;
    }
    all.push_back(n);
  }
  std::stable_sort(all.begin(), all.end(), [](const Outcome& a, const Outcome& b) {
    int sa = 0, sb = 0;
    for (int v : a) sa += v;
    for (int v : b) sb += v;
    return sa < sb;
  });
  return all;
}

}  // namespace

size_t ProbabilityTable::setting_index(int mode, bool imaginary) const {
  for (size_t k = 0; k < probed_modes.size(); ++k)
    if (probed_modes[k] == mode) return 1 + 2 * k + (imaginary ? 1 : 0);
  throw std::out_of_range("mode " + std::to_string(mode) + " was not probed");
}

double ProbabilityTable::prob(size_t setting, const Outcome& n) const {
  long idx = outcome_index(n, cutoff + 1);
  return idx < 0 ? 0.0 : probs[setting](idx);
}

ProbabilityTable measure_probabilities(const FockState& evolved, double xi, const std::vector<int>& modes,
                                       std::int64_t shots, std::uint64_t seed, bool allow_large_xi) {
  if (!(xi > 0.0)) throw std::invalid_argument("displacement xi must be positive");
  if (xi > kXiGuard && !allow_large_xi)
    throw std::invalid_argument("xi above the first-order guard " + std::to_string(kXiGuard));
  if (shots < 0) throw std::invalid_argument("shots must be non-negative");
  ProbabilityTable t;
  t.num_modes = evolved.num_modes;
  t.cutoff = evolved.cutoff;
  t.xi = xi;
  t.probed_modes = modes;
  t.shots = shots;
  t.settings.push_back({-1, 0.0});
  for (int j : modes) {
    if (j < 0 || j >= evolved.num_modes) throw std::out_of_range("probed mode outside register");
    t.settings.push_back({j, cplx(xi, 0.0)});
    t.settings.push_back({j, cplx(0.0, xi)});
  }
  double n2 = evolved.norm2();
  if (std::abs(n2 - 1.0) > 1e-8) warn("measure_probabilities: state norm " + std::to_string(n2) + ", renormalizing");
  for (size_t s = 0; s < t.settings.size(); ++s) {
    FockState st = evolved;
    if (t.settings[s].mode >= 0)
      apply_inplace(gate_matrix(displacement(0, t.settings[s].value), st.cutoff), {t.settings[s].mode}, st);
    RVec p = st.amps.cwiseAbs2() / n2;
    if (shots > 0) {
      std::vector<double> pv(p.data(), p.data() + p.size());
      auto counts = multinomial(pv, shots, splitmix(seed ^ splitmix(s + 1)));
      for (long i = 0; i < p.size(); ++i) p(i) = double(counts[size_t(i)]) / double(shots);
    }
    t.probs.push_back(p);
  }
  return t;
}

cplx ReconstructionResult::value(const Outcome& n) const {
  auto it = entries.find(n);
  if (it == entries.end()) throw std::out_of_range("outcome not reconstructed");
  return it->second.value;
}

namespace {

struct Core {
  std::map<Outcome, ReconEntry> entries;
  double residual2 = 0.0;
  int components = 0;
  std::vector<Outcome> unreachable;
};

// Probability accessor that can be perturbed for the error Jacobian.
using ProbFn = std::function<double(size_t, const Outcome&)>;

Core cascade(const ProbabilityTable& t, const ProbFn& prob, const ReconOptions& opt) {
  const int d = t.cutoff + 1;
  Core out;
  std::map<Outcome, bool> small;  // negligible amplitude
  const Outcome ref = opt.reference.empty() ? Outcome(size_t(t.num_modes), 0) : opt.reference;
  if (int(ref.size()) != t.num_modes) throw std::invalid_argument("reference outcome has the wrong mode count");
  auto order = outcomes_by_total(t.num_modes, d, opt.max_total);
  auto rit = std::find(order.begin(), order.end(), ref);
  if (rit == order.end()) throw std::invalid_argument("reference outcome outside the reconstructed set");
  std::rotate(order.begin(), rit, rit + 1);
  for (const Outcome& u : order) {
    double pu = prob(0, u);
    small[u] = pu < opt.negligible;
    if (u == ref) {
      if (pu < opt.seed_floor) {
        // Point at the most probable outcome as the place to restart from.
        Outcome best = u;
        double bp = -1.0;
        for (const Outcome& v : outcomes_by_total(t.num_modes, d, opt.max_total))
          if (prob(0, v) > bp) {
            bp = prob(0, v);
            best = v;
          }
        throw DegenerateSeed("reference outcome has probability " + std::to_string(pu) + " below the seed floor",
                             best);
      }
      out.entries[u] = {cplx(std::sqrt(std::max(pu, 0.0)), 0.0), 0.0, 0.0, 0};
      out.components = 1;
      continue;
    }
    // Rows a C_u = b from the equations at n = u - e_j, grouped by component.
    std::map<int, std::vector<std::pair<cplx, cplx>>> rows;
    for (int j : t.probed_modes) {
      if (u[size_t(j)] == 0) continue;
      Outcome n = u;
      --n[size_t(j)];
      auto itn = out.entries.find(n);
      if (itn == out.entries.end() || small[n] || itn->second.component < 0) continue;
      const cplx cn = itn->second.value;
      const int comp = itn->second.component;
      cplx lower = 0.0;
      const int nj = n[size_t(j)];
      if (nj > 0) {
        Outcome l = n;
        --l[size_t(j)];
        if (!small[l]) {
          auto itl = out.entries.find(l);
          if (itl == out.entries.end() || itl->second.component != comp) continue;
          lower = cn * std::conj(itl->second.value);
        }
      }
      double p0 = prob(0, n);
      double a = (prob(t.setting_index(j, false), n) - p0) / (2.0 * t.xi);
      double b = (prob(t.setting_index(j, true), n) - p0) / (2.0 * t.xi);
      double s1 = std::sqrt(double(nj) + 1.0), s0 = std::sqrt(double(nj));
      cplx w((s0 * lower.real() - a) / s1, (b - s0 * lower.imag()) / s1);  // w = C_n C_u^*
      rows[comp].emplace_back(std::conj(cn), std::conj(w));
    }
    int best = -1;
    double bw = 0.0;
    for (auto& [comp, rs] : rows) {
      double wsum = 0.0;
      for (auto& r : rs) wsum += std::norm(r.first);
      if (wsum > bw) {
        bw = wsum;
        best = comp;
      }
    }
    if (best >= 0) {
      cplx num = 0.0;
      for (auto& r : rows[best]) num += std::conj(r.first) * r.second;
      cplx cu = num / bw;
      for (auto& r : rows[best]) out.residual2 += std::norm(r.first * cu - r.second);
      out.residual2 += std::pow(std::norm(cu) - pu, 2);
      out.entries[u] = {cu, 0.0, 0.0, best};
    } else if (small[u]) {
      out.entries[u] = {0.0, 0.0, 0.0, -1};
    } else {
      out.entries[u] = {cplx(std::sqrt(pu), 0.0), 0.0, 0.0, out.components++};
      out.unreachable.push_back(u);
    }
  }
  return out;
}

}  // namespace

ReconstructionResult reconstruct_multimode(const ProbabilityTable& t, const ReconOptions& opt) {
  if (t.probs.size() != t.settings.size() || t.settings.empty())
    throw std::invalid_argument("probability table is incomplete");
  for (const RVec& p : t.probs)
    if (!p.allFinite() || p.minCoeff() < -1e-12 || p.maxCoeff() > 1.0 + 1e-9)
      throw InconsistentProbabilities("probability outside [0, 1] in the table");
  ProbFn base = [&t](size_t s, const Outcome& n) { return t.prob(s, n); };
  Core core = cascade(t, base, opt);
  ReconstructionResult r;
  r.num_modes = t.num_modes;
  r.reference = opt.reference.empty() ? Outcome(size_t(t.num_modes), 0) : opt.reference;
  r.entries = core.entries;
  r.residual_norm = std::sqrt(core.residual2);
  r.components = core.components;
  r.unreachable = core.unreachable;
  if (t.shots > 0 && opt.propagate_errors) {
    // Linear propagation of multinomial noise through a numerical Jacobian.
    const int d = t.cutoff + 1;
    auto outs = outcomes_by_total(t.num_modes, d, std::min(opt.max_total + 1, t.num_modes * t.cutoff));
    std::map<Outcome, std::pair<double, double>> var;
    const double h = 1e-7;
    for (size_t s = 0; s < t.settings.size(); ++s) {
      std::map<Outcome, std::vector<std::pair<double, double>>> jac;  // per entry, per perturbed outcome
      std::vector<double> pv;
      for (const Outcome& v : outs) {
        pv.push_back(t.prob(s, v));
        auto shifted = [&](double eps) {
          ProbFn f = [&](size_t ss, const Outcome& n) { return t.prob(ss, n) + (ss == s && n == v ? eps : 0.0); };
          return cascade(t, f, opt);
        };
        Core up = shifted(h), dn = shifted(-h);
        for (auto& [n, e] : core.entries) {
          auto iu = up.entries.find(n), id = dn.entries.find(n);
          cplx g = (iu->second.value - id->second.value) / (2.0 * h);
          jac[n].emplace_back(g.real(), g.imag());
        }
      }
      for (auto& [n, g] : jac) {
        double sre = 0.0, sim = 0.0, mre = 0.0, mim = 0.0;
        for (size_t k = 0; k < g.size(); ++k) {
          sre += g[k].first * g[k].first * pv[k];
          sim += g[k].second * g[k].second * pv[k];
          mre += g[k].first * pv[k];
          mim += g[k].second * pv[k];
        }
        var[n].first += (sre - mre * mre) / double(t.shots);
        var[n].second += (sim - mim * mim) / double(t.shots);
      }
    }
    for (auto& [n, e] : r.entries) {
      e.sigma_re = std::sqrt(std::max(var[n].first, 0.0));
      e.sigma_im = std::sqrt(std::max(var[n].second, 0.0));
    }
  }
  return r;
}

ReconstructionResult reconstruct_single_mode(const ProbabilityTable& t, const ReconOptions& opt) {
  if (t.num_modes != 1) throw std::invalid_argument("single-mode reconstruction needs a one-mode table");
  return reconstruct_multimode(t, opt);
}

ReconstructionResult richardson(const ReconstructionResult& full, const ReconstructionResult& half) {
  ReconstructionResult r = half;
  for (auto& [n, e] : r.entries) {
    auto it = full.entries.find(n);
    if (it == full.entries.end() || it->second.component != e.component)
      throw std::invalid_argument("richardson: reconstructions differ in structure");
    e.value = 2.0 * e.value - it->second.value;
    e.sigma_re = std::hypot(2.0 * e.sigma_re, it->second.sigma_re);
    e.sigma_im = std::hypot(2.0 * e.sigma_im, it->second.sigma_im);
  }
  r.residual_norm = std::hypot(full.residual_norm, half.residual_norm);
  return r;
}

Alignment align_to(const ReconstructionResult& rec, const std::map<Outcome, cplx>& truth) {
  std::map<int, cplx> overlap;
  for (auto& [n, e] : rec.entries) {
    auto it = truth.find(n);
    if (it != truth.end()) overlap[e.component] += std::conj(e.value) * it->second;
  }
  Alignment a;
  for (auto& [n, e] : rec.entries) {
    cplx ov = overlap[e.component];
    cplx ph = std::abs(ov) > 0.0 ? ov / std::abs(ov) : cplx(1.0);
    a.aligned[n] = e.value * ph;
    auto it = truth.find(n);
    if (it != truth.end()) a.max_error = std::max(a.max_error, std::abs(a.aligned[n] - it->second));
  }
  return a;
}

std::map<Outcome, cplx> amplitudes(const FockState& st, int max_total) {
  std::map<Outcome, cplx> out;
  for (const Outcome& n : outcomes_by_total(st.num_modes, st.cutoff + 1, max_total)) out[n] = st.amp(n);
  return out;
}

namespace {

std::vector<int> range_modes(int a, int n) {
  std::vector<int> v;
  for (int i = 0; i < n; ++i) v.push_back(a + i);
  return v;
}

}  // namespace

std::vector<LinkOutcome> link_phases_interferometer(const FockState& m, const Mat& ua, const Mat& g,
                                                    const std::vector<Outcome>& outcomes,
                                                    const std::map<Outcome, double>& mags_a,
                                                    const std::map<Outcome, double>& mags_b,
                                                    const LinkOptions& opt) {
  const int ns = m.num_modes, k = m.cutoff;
  if (ua.rows() != m.size() || g.rows() != m.size()) throw std::invalid_argument("link: operator size mismatch");
  const int a0 = ns, a1 = ns + 1;
  auto sys = range_modes(0, ns);
  std::vector<int> ctrl_targets{a0};
  for (int s : sys) ctrl_targets.push_back(s);
  Mat bs = gate_matrix(beamsplitter(a0, a1), k);
  Mat cu = gate_matrix(controlled_n(a0, sys, 1.0, g), k);
  Mat rq = gate_matrix(rotation(a0, kPi / 2.0), k);

  auto run = [&](bool sine) {
    FockState st(ns + 2, k);
    for (long i = 0; i < m.size(); ++i) {
      Outcome c = m.counts(i);
      c.push_back(1);
      c.push_back(0);
      st.amps(st.index(c)) = m.amps(i);
    }
    apply_inplace(bs, {a0, a1}, st);
    apply_inplace(ua, sys, st);
    apply_inplace(cu, ctrl_targets, st);
    if (sine) apply_inplace(rq, {a0}, st);
    apply_inplace(bs, {a0, a1}, st);
    RVec p = st.amps.cwiseAbs2();
    if (opt.shots > 0) {
      std::vector<double> pv(p.data(), p.data() + p.size());
      auto counts = multinomial(pv, opt.shots, splitmix(opt.seed ^ (sine ? 0x5151u : 0xC05Eu)));
      for (long i = 0; i < p.size(); ++i) p(i) = double(counts[size_t(i)]) / double(opt.shots);
    }
    return std::make_pair(st, p);
  };
  auto [sc, pc] = run(false);
  auto [ss, ps] = run(true);

  std::vector<LinkOutcome> out;
  for (const Outcome& n : outcomes) {
    LinkOutcome r;
    r.outcome = n;
    Outcome n10 = n, n01 = n;
    n10.push_back(1);
    n10.push_back(0);
    n01.push_back(0);
    n01.push_back(1);
    r.p1 = pc(sc.index(n10));
    r.p0 = pc(sc.index(n01));
    r.q1 = ps(ss.index(n10));
    r.q0 = ps(ss.index(n01));
    auto ia = mags_a.find(n), ib = mags_b.find(n);
    if (ia == mags_a.end() || ib == mags_b.end()) throw std::invalid_argument("link: missing magnitudes for outcome");
    double prod = ia->second * ib->second;
    if (prod < opt.magnitude_floor) {
      out.push_back(r);
      continue;
    }
    // a0 = 1 leaves the photon in a1's detector after the second splitter.
    r.cos_est = (r.p0 - r.p1) / prod;
    r.sin_est = -(r.q0 - r.q1) / prod;
    if (std::abs(r.cos_est) > 1.0 + opt.cos_tolerance || std::abs(r.sin_est) > 1.0 + opt.cos_tolerance)
      throw PhaseInconsistency("link: |cos| or |sin| estimate exceeds 1 (" + std::to_string(r.cos_est) + ", " +
                               std::to_string(r.sin_est) + ")");
    r.dphi = std::atan2(r.sin_est, r.cos_est);
    r.defined = true;
    out.push_back(r);
  }
  return out;
}

std::vector<LinkOutcome> link_phases_photon_control(const FockState& m, const Mat& h, double t_a, double t_b,
                                                    const std::vector<Outcome>& outcomes,
                                                    const std::map<Outcome, double>& mags_a,
                                                    const std::map<Outcome, double>& mags_b,
                                                    const LinkOptions& opt) {
  if (!(t_b >= t_a)) throw std::invalid_argument("link: need t_b >= t_a");
  return link_phases_interferometer(m, expm(h, cplx(0.0, -t_a), true), (t_b - t_a) * h, outcomes, mags_a, mags_b,
                                    opt);
}

std::vector<QuadLinkOutcome> link_phases_quadrature_control(const FockState& m, const Mat& h, double t_a, double t_b,
                                                            double tau, const std::vector<Outcome>& outcomes,
                                                            const QuadLinkOptions& opt) {
  if (!(tau > 0.0)) throw std::invalid_argument("quadrature link: tau must be positive");
  if (h.rows() != m.size()) throw std::invalid_argument("quadrature link: Hamiltonian size mismatch");
  const int da = opt.anc_cutoff + 1;
  const double sa = t_a / tau, sb = t_b / tau;
  // Two q-squeezed peaks; Squeeze1 with negative r narrows q.
  Mat sq = gate_matrix(squeeze1(0, -opt.r_anc), da - 1);
  Vec vac = Vec::Zero(da);
  vac(0) = 1.0;
  Vec peak = sq * vac;
  Vec anc = gate_matrix(displacement(0, cplx(sa / std::sqrt(2.0), 0.0)), da - 1) * peak +
            gate_matrix(displacement(0, cplx(sb / std::sqrt(2.0), 0.0)), da - 1) * peak;
  anc.normalize();

  Eigen::SelfAdjointEigenSolver<Mat> eq(quad_q(da));
  Eigen::SelfAdjointEigenSolver<Mat> eh(0.5 * (h + h.adjoint()));
  const Mat& v = eq.eigenvectors();
  const Mat& w = eh.eigenvectors();
  // Joint amplitudes psi(anc level, system index), controlled exp(-i tau q H).
  Mat psi = (v.adjoint() * anc) * m.amps.transpose();
  Mat y = psi * w.conjugate();
  for (long j = 0; j < y.rows(); ++j)
    for (long k = 0; k < y.cols(); ++k) y(j, k) *= std::exp(-I1 * tau * eq.eigenvalues()(j) * eh.eigenvalues()(k));
  psi = v * (y * w.transpose());

  RVec grid = RVec::LinSpaced(opt.grid_points, -opt.grid_half_width, opt.grid_half_width);
  RMat hf = hermite_functions(da - 1, grid);
  Mat pbasis(da, grid.size());  // <p|k>
  cplx ph = 1.0;
  for (int k = 0; k < da; ++k) {
    pbasis.row(k) = ph * hf.row(k).cast<cplx>();
    ph *= -I1;
  }
  const double ds = sb - sa;
  const double dx = grid(1) - grid(0);
  // Fringe fit on a Gaussian p-envelope; the controlled gate shifts the
  // envelope by tau * E, so the shift is optimized as well.
  struct Fit {
    double resid;
    RVec c;
  };
  auto fit = [&](const RVec& dens, double mu) {
    RMat basis(grid.size(), 3);
    for (long i = 0; i < grid.size(); ++i) {
      double x = grid(i) + mu;
      double e = std::exp(-x * x * std::exp(-2.0 * opt.r_anc));
      basis(i, 0) = e;
      basis(i, 1) = e * std::cos(grid(i) * ds);
      basis(i, 2) = e * std::sin(grid(i) * ds);
    }
    RVec c = basis.colPivHouseholderQr().solve(dens);
    return Fit{(basis * c - dens).norm(), c};
  };

  std::vector<QuadLinkOutcome> out;
  for (const Outcome& n : outcomes) {
    long idx = m.index(n);
    RVec dens = (pbasis.transpose() * psi.col(idx)).cwiseAbs2();
    if (std::abs(ds) < 1e-12) {
      // Coincident peaks: one branch, flat fringe, no phase difference.
      out.push_back(QuadLinkOutcome{n, 0.0, 1.0, dens.sum() * dx});
      continue;
    }
    const double span = opt.grid_half_width;
    double best_mu = 0.0, best = fit(dens, 0.0).resid;
    for (int i = -40; i <= 40; ++i) {
      double mu = span * i / 40.0, f = fit(dens, mu).resid;
      if (f < best) {
        best = f;
        best_mu = mu;
      }
    }
    double lo = best_mu - span / 40.0, hi = best_mu + span / 40.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
      double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
      if (fit(dens, m1).resid < fit(dens, m2).resid)
        hi = m2;
      else
        lo = m1;
    }
    RVec c = fit(dens, 0.5 * (lo + hi)).c;
    QuadLinkOutcome r;
    r.outcome = n;
    r.weight = dens.sum() * dx;
    r.visibility = c(0) > 0.0 ? std::hypot(c(1), c(2)) / c(0) : 0.0;
    if (r.visibility < opt.min_visibility)
      throw LowVisibility("quadrature link: fringe visibility " + std::to_string(r.visibility) + " below threshold");
    r.dphi = std::atan2(c(2), c(1));
    out.push_back(r);
  }
  return out;
}

Vec phase_ode_rhs(const Vec& c, const Mat& h) {
  if (h.cols() != c.size()) throw std::invalid_argument("phase ODE: table size does not match H");
  return -I1 * (h * c);
}

Vec rk4_propagate(const Vec& c, const Mat& h, double t0, double t1, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("RK4 step must be positive");
  long n = std::max(1L, long(std::ceil(std::abs(t1 - t0) / step - 1e-12)));
  double dt = (t1 - t0) / double(n);
  Vec y = c;
  for (long i = 0; i < n; ++i) {
    Vec k1 = phase_ode_rhs(y, h);
    Vec k2 = phase_ode_rhs(y + 0.5 * dt * k1, h);
    Vec k3 = phase_ode_rhs(y + 0.5 * dt * k2, h);
    Vec k4 = phase_ode_rhs(y + dt * k3, h);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

double link_phases_ode(const Vec& rec_a, const Vec& rec_b, const Mat& h, double t_a, double t_b, double step) {
  Vec prop = rk4_propagate(rec_a, h, t_a, t_b, step);
  return std::arg(rec_b.dot(prop));
}

namespace {

struct Runs {
  Mat up, um;
};

Runs three_point_unitaries(const ThreePointSetup& s, double zeta) {
  Mat ef = expm(s.h, cplx(0.0, s.t_f), true), ei = expm(s.h, cplx(0.0, -s.t_i), true);
  return {ef * expm(s.j, cplx(0.0, zeta), true) * ei, ef * expm(s.j, cplx(0.0, -zeta), true) * ei};
}

ReconstructionResult reconstruct_run(const ThreePointSetup& s, const FockState& st) {
  std::vector<int> modes = s.probed_modes;
  if (modes.empty()) modes = range_modes(0, st.num_modes);
  auto full = reconstruct_multimode(measure_probabilities(st, s.xi, modes), s.recon);
  auto half = reconstruct_multimode(measure_probabilities(st, s.xi / 2.0, modes), s.recon);
  return richardson(full, half);
}

}  // namespace

ThreePointResult three_point_via_current(const ThreePointSetup& s, double zeta) {
  if (!(zeta > 0.0)) throw std::invalid_argument("zeta must be positive");
  if (!(s.t_f >= 0.0 && s.t_i <= 0.0)) throw std::invalid_argument("three-point needs t_f >= 0 >= t_i");
  if (s.h.rows() != s.initial.size() || s.j.rows() != s.initial.size())
    throw std::invalid_argument("three-point: operator size mismatch");
  Runs u = three_point_unitaries(s, zeta);
  FockState sp = s.initial, sm = s.initial;
  sp.amps = u.up * s.initial.amps;
  sm.amps = u.um * s.initial.amps;
  ThreePointResult r;
  r.plus = reconstruct_run(s, sp);
  r.minus = reconstruct_run(s, sm);

  // Interferometric link between the runs: exp(-iG) U(+zeta) = U(-zeta).
  Mat wf = expm(s.h, cplx(0.0, s.t_f), true);
  Mat g = 2.0 * zeta * wf * s.j * wf.adjoint();
  std::vector<Outcome> outs;
  std::map<Outcome, double> ma, mb;
  for (auto& [n, e] : r.plus.entries) {
    if (e.component < 0) continue;
    outs.push_back(n);
    ma[n] = std::abs(e.value);
    mb[n] = std::abs(r.minus.value(n));
  }
  LinkOptions lo;
  lo.cos_tolerance = 1e-3;
  auto links = link_phases_interferometer(s.initial, u.up, g, outs, ma, mb, lo);
  std::map<int, cplx> acc;
  for (const auto& l : links) {
    if (!l.defined) continue;
    const auto& ep = r.plus.entries.at(l.outcome);
    const auto& em = r.minus.entries.at(l.outcome);
    if (em.component != ep.component) continue;
    double w = ma[l.outcome] * mb[l.outcome];
    acc[ep.component] += w * std::exp(I1 * (l.dphi - std::arg(em.value) + std::arg(ep.value)));
  }
  r.link_phase.assign(size_t(std::max(r.plus.components, 0)), 0.0);
  for (auto& [c, z] : acc) r.link_phase[size_t(c)] = std::arg(z);
  for (auto& [n, e] : r.plus.entries) {
    r.component[n] = e.component;
    if (e.component < 0) {
      r.c3[n] = 0.0;
      continue;
    }
    cplx cm = r.minus.value(n) * std::exp(I1 * r.link_phase[size_t(e.component)]);
    r.c3[n] = (e.value - cm) / (2.0 * I1 * zeta);
  }
  return r;
}

std::map<Outcome, cplx> three_point_oracle(const ThreePointSetup& s) {
  Mat ef = expm(s.h, cplx(0.0, s.t_f), true), ei = expm(s.h, cplx(0.0, -s.t_i), true);
  FockState st = s.initial;
  st.amps = ef * s.j * ei * s.initial.amps;
  return amplitudes(st, s.recon.max_total);
}

ThreePointResult three_point_checked(const ThreePointSetup& s, double zeta, double tol, double floor) {
  ThreePointResult a = three_point_via_current(s, zeta);
  ThreePointResult b = three_point_via_current(s, zeta / 2.0);
  std::map<int, cplx> ov;
  for (auto& [n, v] : a.c3) ov[a.component[n]] += std::conj(b.c3[n]) * v;
  for (auto& [n, v] : a.c3) {
    if (std::abs(v) < floor) continue;
    cplx z = ov[a.component[n]];
    cplx ph = std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0);
    if (std::abs(b.c3[n] * ph - v) > tol * std::abs(v))
      throw LinearityFailure("three-point estimates at zeta and zeta/2 disagree");
  }
  return a;
}

nlohmann::json to_json(const ReconstructionResult& r) {
  nlohmann::json j;
  j["reference_outcome"] = r.reference;
  j["residual_norm"] = r.residual_norm;
  j["components"] = r.components;
  j["unreachable"] = r.unreachable;
  auto es = nlohmann::json::array();
  for (auto& [n, e] : r.entries)
    es.push_back({{"outcome", n},
                  {"re", e.value.real()},
                  {"im", e.value.imag()},
                  {"sigma", std::hypot(e.sigma_re, e.sigma_im)},
                  {"component", e.component}});
  j["entries"] = es;
  return j;
}

std::string probability_csv(const ProbabilityTable& t) {
  std::string out;
  for (int j = 0; j < t.num_modes; ++j) out += "n" + std::to_string(j) + ",";
  out += "setting_mode,setting_value_re,setting_value_im,probability,shots\n";
  const int d = t.cutoff + 1;
  char buf[160];
  for (size_t s = 0; s < t.settings.size(); ++s)
    for (long i = 0; i < t.probs[s].size(); ++i) {
      if (t.probs[s](i) == 0.0) continue;
      long r = i;
      Outcome n(size_t(t.num_modes));
      for (int j = t.num_modes - 1; j >= 0; --j) {
        n[size_t(j)] = int(r % d);
        r /= d;
      }
      for (int v : n) out += std::to_string(v) + ",";
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%lld\n", t.settings[s].mode, t.settings[s].value.real(),
                    t.settings[s].value.imag(), t.probs[s](i), static_cast<long long>(t.shots));
      out += buf;
    }
  return out;
}

}  // namespace cvq
