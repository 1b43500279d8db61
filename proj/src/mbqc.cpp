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

#include "cvq/mbqc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <unsupported/Eigen/FFT>

#include "cvq/gates.hpp"

namespace cvq {

namespace {

const char* kind_label(MeasKind k) {
  switch (k) {
    case MeasKind::Homodyne:
      return "homodyne";
    case MeasKind::Pnr:
      return "pnr";
    case MeasKind::SubtractionPnr:
      return "subtraction-pnr";
  }
  return "?";
}

MeasKind kind_from_label(const std::string& s) {
  if (s == "homodyne") return MeasKind::Homodyne;
  if (s == "pnr") return MeasKind::Pnr;
  if (s == "subtraction-pnr") return MeasKind::SubtractionPnr;
  throw std::invalid_argument("unknown measurement kind '" + s + "'");
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double uniform01(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

size_t draw_index(const std::vector<double>& p, std::uint64_t seed) {
  double tot = 0.0;
  for (double v : p) tot += v;
  double u = uniform01(seed) * tot, acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

// Periodic grid x_j = -W + j dx and the Hermite functions on it.
struct Grid {
  int n;
  double w, dx;
  RVec x;
  Grid(double half, int points) : n(points), w(half), dx(2.0 * half / points), x(points) {
    if (points < 16 || half <= 0.0) throw std::invalid_argument("mbqc grid too small");
    for (int j = 0; j < n; ++j) x(j) = -w + j * dx;
  }
  double k(int j) const { return 2.0 * kPi / (n * dx) * (j < n / 2 ? j : j - n); }
};

Vec to_grid(const RMat& herm, const Vec& c) { return herm.topRows(c.size()).transpose().cast<cplx>() * c; }

Vec to_fock(const RMat& herm, const Vec& f, int cutoff, double dx) {
  return herm.topRows(cutoff + 1).cast<cplx>() * f * dx;
}

// exp(-beta N(q2)) with N(q2) = Z(q2)^+ N Z(q2), split-step on the grid.
struct Damping {
  const Grid& g;
  double beta;
  RVec ex;
  mutable Eigen::FFT<double> fft;
  Damping(const Grid& grid, double b) : g(grid), beta(b), ex(grid.n) {
    for (int j = 0; j < g.n; ++j) ex(j) = std::exp(-beta * g.x(j) * g.x(j) / 4.0);
  }
  Vec apply(const Vec& v, double q2) const {
    if (beta == 0.0) return v;
    std::vector<cplx> a(size_t(g.n)), b;
    for (int j = 0; j < g.n; ++j) a[size_t(j)] = ex(j) * v(j);
    fft.fwd(b, a);
    for (int j = 0; j < g.n; ++j) {
      double p = g.k(j) + q2;
      b[size_t(j)] *= std::exp(-beta * p * p / 2.0);
    }
    fft.inv(a, b);
    Vec out(g.n);
    const double s = std::exp(beta / 2.0);
    for (int j = 0; j < g.n; ++j) out(j) = s * ex(j) * a[size_t(j)];
    return out;
  }
};

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double subtraction_prefactor(double beta, int n) {
  double f = std::tgamma(n + 1.0) * std::exp(n * beta);
  return (n % 2 ? -1.0 : 1.0) * std::pow(2.0 * std::sinh(beta), n / 2.0) / std::sqrt(f);
}

// Frame-removed input of the gadget: h(q2) = c_n e^{-beta N(q2)} (a + i q2/sqrt2)^n f,
// so that the physical mode-1 function is e^{i x q2} h(q2).
struct Frame {
  const Grid& g;
  int n;
  double beta, pref;
  std::vector<Vec> powers;  // grid images of a^k f
  Damping damp;
  Frame(const Grid& grid, const RMat& herm, const Vec& in, int subtracted, double b)
      : g(grid), n(std::max(subtracted, 0)), beta(subtracted >= 0 ? b : 0.0),
        pref(subtracted >= 0 ? subtraction_prefactor(b, subtracted) : 1.0), damp(grid, beta) {
    Vec c = in;
    const long d = in.size();
    for (int k = 0; k <= n; ++k) {
      powers.push_back(to_grid(herm, c));
      Vec next = Vec::Zero(d);
      for (long i = 1; i < d; ++i) next(i - 1) = std::sqrt(double(i)) * c(i);
      c = next;
    }
  }
  bool constant() const { return n == 0 && beta == 0.0; }
  Vec at(double q2) const {
    Vec h = Vec::Zero(g.n);
    const cplx shift(0.0, q2 / std::sqrt(2.0));
    for (int k = 0; k <= n; ++k) h += binomial(n, k) * std::pow(shift, n - k) * powers[size_t(k)];
    return pref * damp.apply(h, q2);
  }
};

struct Setup {
  Grid g;
  RMat herm;
  Setup(const MbqcOptions& opt, int levels)
      : g(opt.grid_half_width, opt.grid_points), herm(hermite_functions(std::max(levels, opt.cutoff + 1), g.x)) {}
};

Vec chirp(const Grid& g, double theta) {
  Vec c(g.n);
  const double t = std::tan(theta);
  for (int j = 0; j < g.n; ++j) c(j) = std::exp(cplx(0.0, -t * g.x(j) * g.x(j) / 2.0));
  return c;
}

void check_theta(double theta) {
  if (std::abs(std::cos(theta)) < 1e-9) throw std::invalid_argument("homodyne angle pi/2 does not teleport");
}

Vec apply_rotation(const Vec& v, double theta) {
  Vec out = v;
  for (long k = 0; k < v.size(); ++k) out(k) *= std::exp(cplx(0.0, theta * double(k)));
  return out;
}

}  // namespace

nlohmann::json to_json(const MeasurementRecord& r) {
  return {{"node", r.node},     {"kind", kind_label(r.kind)}, {"theta", r.theta},
          {"m", r.m},           {"n", r.n},                   {"beta", r.beta},
          {"postselected", r.postselected}, {"weight", r.weight}, {"seed", r.seed}};
}

MeasurementRecord record_from_json(const nlohmann::json& j) {
  MeasurementRecord r;
  r.node = j.at("node").get<int>();
  r.kind = kind_from_label(j.at("kind").get<std::string>());
  r.theta = j.value("theta", 0.0);
  r.m = j.value("m", 0.0);
  r.n = j.value("n", 0);
  r.beta = j.value("beta", 0.0);
  r.postselected = j.value("postselected", false);
  r.weight = j.value("weight", 0.0);
  r.seed = j.value("seed", std::uint64_t(0));
  if (!std::isfinite(r.m)) throw std::invalid_argument("record: homodyne outcome must be finite");
  if (r.n < 0) throw std::invalid_argument("record: PNR outcome must be non-negative");
  return r;
}

nlohmann::json transcript_json(const std::vector<MeasurementRecord>& t) {
  auto a = nlohmann::json::array();
  for (const auto& r : t) a.push_back(to_json(r));
  return {{"records", a}};
}

std::vector<MeasurementRecord> transcript_from_json(const nlohmann::json& j) {
  std::vector<MeasurementRecord> out;
  for (const auto& r : j.at("records")) out.push_back(record_from_json(r));
  return out;
}

int ClusterChain::position(int node) const {
  auto it = std::find(nodes.begin(), nodes.end(), node);
  if (it == nodes.end()) throw std::out_of_range("node " + std::to_string(node) + " is not live");
  return int(it - nodes.begin());
}

ClusterChain build_chain(int length, double r) {
  if (length < 1) throw std::invalid_argument("chain length must be >= 1");
  if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("node squeezing must be finite and >= 0");
  ClusterChain c;
  const int n = length;
  c.r.assign(size_t(n), r);
  for (int i = 0; i < n; ++i) c.nodes.push_back(i);
  for (int i = 0; i + 1 < n; ++i) c.edges.push_back({i, i + 1});
  c.mean = RVec::Zero(2 * n);
  c.cov = RMat::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    c.cov(i, i) = std::exp(2.0 * r) / 2.0;
    c.cov(n + i, n + i) = std::exp(-2.0 * r) / 2.0;
  }
  // CZ = exp(i Q_i Q_j): P_i -> P_i + Q_j, P_j -> P_j + Q_i.
  for (auto [i, j] : c.edges) {
    RMat s = RMat::Identity(2 * n, 2 * n);
    s(n + i, j) = 1.0;
    s(n + j, i) = 1.0;
    c.cov = s * c.cov * s.transpose();
    c.mean = s * c.mean;
  }
  return c;
}

namespace {

RVec quadrature_vector(const ClusterChain& c, int node, double theta) {
  const int n = c.num_modes(), k = c.position(node);
  RVec v = RVec::Zero(2 * n);
  v(k) = -std::sin(theta);
  v(n + k) = std::cos(theta);
  return v;
}

}  // namespace

double quadrature_mean(const ClusterChain& c, int node, double theta) {
  return quadrature_vector(c, node, theta).dot(c.mean);
}

double quadrature_variance(const ClusterChain& c, int node, double theta) {
  RVec v = quadrature_vector(c, node, theta);
  return v.dot(c.cov * v);
}

double nullifier_variance(const ClusterChain& c, int i, int j) {
  const int n = c.num_modes();
  RVec v = RVec::Zero(2 * n);
  v(n + c.position(i)) = 1.0;
  v(c.position(j)) -= 1.0;
  return v.dot(c.cov * v);
}

ChainHomodyne homodyne_project(const ClusterChain& c, int node, double theta, std::optional<double> m,
                               std::uint64_t seed) {
  const int n = c.num_modes(), k = c.position(node);
  RVec v = quadrature_vector(c, node, theta);
  const double mu = v.dot(c.mean), var = v.dot(c.cov * v);
  if (!(var > 0.0)) throw ZeroProbability("homodyne: degenerate quadrature");
  double val;
  if (m) {
    val = *m;
  } else {
    std::mt19937_64 rng(seed);
    val = std::normal_distribution<double>(mu, std::sqrt(var))(rng);
  }
  const double density = std::exp(-(val - mu) * (val - mu) / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
  if (!(density > 0.0)) throw ZeroProbability("homodyne: outcome has zero probability density");
  // Gaussian conditioning on v.x = val, then drop the measured node.
  RVec cv = c.cov * v;
  RVec mean = c.mean + cv * ((val - mu) / var);
  RMat cov = c.cov - cv * cv.transpose() / var;
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (i != k) keep.push_back(i);
  for (int i = 0; i < n; ++i)
    if (i != k) keep.push_back(n + i);
  ChainHomodyne out;
  out.chain.nodes = c.nodes;
  out.chain.nodes.erase(out.chain.nodes.begin() + k);
  out.chain.r = c.r;
  for (auto e : c.edges)
    if (e[0] != node && e[1] != node) out.chain.edges.push_back(e);
  out.chain.mean = RVec(keep.size());
  out.chain.cov = RMat(keep.size(), keep.size());
  for (size_t a = 0; a < keep.size(); ++a) {
    out.chain.mean(long(a)) = mean(keep[a]);
    for (size_t b = 0; b < keep.size(); ++b) out.chain.cov(long(a), long(b)) = cov(keep[a], keep[b]);
  }
  out.record = {node, MeasKind::Homodyne, theta, val, 0, 0.0, m.has_value(), density, seed};
  return out;
}

double node_wavefunction(double r, double q) {
  const double s2 = std::exp(2.0 * r);
  return std::pow(kPi * s2, -0.25) * std::exp(-q * q / (2.0 * s2));
}

double theta_for_kappa(double kappa) { return -std::atan(2.0 * kappa); }
double kappa_for_theta(double theta) { return -std::tan(theta) / 2.0; }

GadgetOutcome teleport_gadget(const Vec& in, double theta, double m, double r, const MbqcOptions& opt,
                              int subtracted, double beta) {
  check_theta(theta);
  if (subtracted >= 0 && !(beta > 0.0)) throw std::invalid_argument("subtraction needs beta > 0");
  Setup su(opt, int(in.size()));
  const Grid& g = su.g;
  const double c = std::cos(theta), s = m / c;
  Frame fr(g, su.herm, in, subtracted, beta);
  Vec ch = chirp(g, theta) * (g.dx / std::sqrt(2.0 * kPi * std::abs(c)));
  // A(u) = <m_theta| Z(s+u) h(s+u)> = sum_j e^{i u x_j} chirp_j h_j dx / sqrt(2 pi |c|).
  Vec out(g.n);
  Vec hc = fr.constant() ? Vec(ch.cwiseProduct(fr.at(0.0))) : Vec();
  for (int i = 0; i < g.n; ++i) {
    const double u = g.x(i), q2 = s + u;
    Vec w = fr.constant() ? hc : Vec(ch.cwiseProduct(fr.at(q2)));
    const cplx step = std::exp(cplx(0.0, u * g.dx));
    cplx ph = std::exp(cplx(0.0, u * g.x(0))), acc = 0.0;
    for (int j = 0; j < g.n; ++j) {
      acc += ph * w(j);
      ph *= step;
    }
    out(i) = node_wavefunction(r, q2) * acc;
  }
  GadgetOutcome res;
  res.shift = s;
  res.density = out.squaredNorm() * g.dx;
  res.state = to_fock(su.herm, out, opt.cutoff, g.dx);
  res.leakage = std::max(0.0, res.density - res.state.squaredNorm());
  return res;
}

Marginal gadget_marginal(const Vec& in, double theta, double r, const MbqcOptions& opt, int subtracted,
                         double beta) {
  check_theta(theta);
  Setup su(opt, int(in.size()));
  const Grid& g = su.g;
  const double c = std::cos(theta);
  Frame fr(g, su.herm, in, subtracted, beta);
  Vec ch = chirp(g, theta);
  const int pad = 2, mlen = pad * g.n;
  const double dw = 2.0 * kPi / (mlen * g.dx);
  const int kappa = std::max(1, int(std::lround(opt.node_step / dw)));
  const double sigma = std::exp(r) / std::sqrt(2.0);
  const int lmax = int(std::ceil((opt.tail_sigmas * sigma + g.w) / (kappa * dw)));
  // Density indexed by m / c = idx * dw with idx in [-(mlen/2 + kappa lmax), ...].
  const int off = mlen / 2 + kappa * lmax;
  RVec dens = RVec::Zero(2 * off + 1);
  Eigen::FFT<double> fft;
  std::vector<cplx> buf(static_cast<size_t>(mlen));
  std::vector<cplx> spec;
  RVec absg;
  auto transform = [&](const Vec& h) {
    std::fill(buf.begin(), buf.end(), cplx(0.0));
    for (int j = 0; j < g.n; ++j) buf[size_t(j)] = ch(j) * h(j);
    fft.fwd(spec, buf);
    absg = RVec(mlen);
    for (int k = 0; k < mlen; ++k) absg(k) = std::norm(spec[size_t(k)]) * g.dx * g.dx / (2.0 * kPi * std::abs(c));
  };
  if (fr.constant()) transform(fr.at(0.0));
  const double step = kappa * dw;
  for (int l = -lmax; l <= lmax; ++l) {
    const double q2 = l * step;
    const double wq = std::pow(node_wavefunction(r, q2), 2) * step;
    if (wq < 1e-300) continue;
    if (!fr.constant()) transform(fr.at(q2));
    for (int k = 0; k < mlen; ++k) {
      int kk = k < mlen / 2 ? k : k - mlen;
      dens(kk + kappa * l + off) += wq * absg(k);
    }
  }
  Marginal mg;
  mg.m = RVec(dens.size());
  for (long i = 0; i < dens.size(); ++i) mg.m(i) = c * double(i - off) * dw;
  mg.density = dens;
  if (c < 0) {
    mg.m.reverseInPlace();
    mg.density.reverseInPlace();
  }
  mg.total = dens.sum() * std::abs(c) * dw;
  return mg;
}

std::vector<double> subtraction_probabilities(const Vec& in, double beta, double r, const MbqcOptions& opt) {
  if (!(beta > 0.0)) throw std::invalid_argument("subtraction needs beta > 0");
  Setup su(opt, int(in.size()));
  const Grid& g = su.g;
  const double sigma = std::exp(r) / std::sqrt(2.0);
  const double step = std::max(opt.node_step, sigma / 16.0);  // smooth in q2 on the node width
  const int lmax = int(std::ceil(opt.tail_sigmas * sigma / step));
  std::vector<double> p;
  for (int n = 0; n <= opt.max_subtracted; ++n) {
    Frame fr(g, su.herm, in, n, beta);
    double acc = 0.0;
    for (int l = -lmax; l <= lmax; ++l) {
      const double q2 = l * step;
      acc += std::pow(node_wavefunction(r, q2), 2) * step * fr.at(q2).squaredNorm() * g.dx;
    }
    p.push_back(acc);
  }
  return p;
}

double sample_marginal(const Marginal& mg, std::uint64_t seed) {
  const long n = mg.m.size();
  if (n < 2) throw ZeroProbability("homodyne marginal is empty");
  RVec cdf(n);
  cdf(0) = 0.0;
  for (long i = 1; i < n; ++i) cdf(i) = cdf(i - 1) + 0.5 * (mg.density(i) + mg.density(i - 1)) * (mg.m(i) - mg.m(i - 1));
  if (!(cdf(n - 1) > 0.0)) throw ZeroProbability("homodyne marginal underflows on the grid");
  const double u = uniform01(seed) * cdf(n - 1);
  long i = std::upper_bound(cdf.data(), cdf.data() + n, u) - cdf.data();
  i = std::clamp(i, 1L, n - 1);
  // Inverse of the piecewise-linear density within the cell.
  const double a = mg.density(i - 1), b = mg.density(i), h = mg.m(i) - mg.m(i - 1), t = u - cdf(i - 1);
  double x;
  if (std::abs(b - a) < 1e-14 * std::max(a, b) || a + b == 0.0) {
    x = a + b > 0 ? t / (0.5 * (a + b)) : 0.0;
  } else {
    const double slope = (b - a) / h;
    x = (-a + std::sqrt(std::max(0.0, a * a + 2.0 * slope * t))) / slope;
  }
  return mg.m(i - 1) + std::clamp(x, 0.0, h);
}

Teleported teleport_state(const Vec& in, double theta, double r, std::optional<double> m, std::uint64_t seed,
                          const MbqcOptions& opt) {
  double val = m ? *m : sample_marginal(gadget_marginal(in, theta, r, opt), seed);
  GadgetOutcome o = teleport_gadget(in, theta, val, r, opt);
  if (!(o.density > opt.prob_floor)) throw ZeroProbability("teleport: outcome density underflows");
  Teleported t;
  t.state = o.state / o.state.norm();
  t.shift = o.shift;
  t.leakage = o.leakage / o.density;
  t.record = {0, MeasKind::Homodyne, theta, val, 0, 0.0, m.has_value(), o.density, seed};
  return t;
}

Mat gadget_kraus(double theta, double m, double r, int in_levels, const MbqcOptions& opt, int subtracted,
                 double beta) {
  Mat k(opt.cutoff + 1, in_levels);
  for (int j = 0; j < in_levels; ++j) {
    Vec e = Vec::Zero(in_levels);
    e(j) = 1.0;
    k.col(j) = teleport_gadget(e, theta, m, r, opt, subtracted, beta).state;
  }
  return k;
}

double map_fidelity(const Mat& net, const Mat& ideal, int block) {
  const long rows = std::min(net.rows(), ideal.rows());
  Mat nb = net.topLeftCorner(rows, block + 1), ub = ideal.topLeftCorner(rows, block + 1);
  const double den = nb.squaredNorm() * ub.squaredNorm();
  return den > 0.0 ? std::norm((ub.adjoint() * nb).trace()) / den : 0.0;
}

double map_relative_error(const Mat& net, const Mat& ideal, int block) {
  const long rows = std::min(net.rows(), ideal.rows());
  Mat nb = net.topLeftCorner(rows, block + 1), ub = ideal.topLeftCorner(rows, block + 1);
  const double nn = nb.squaredNorm();
  if (!(nn > 0.0)) return 1.0;
  cplx scale = (nb.adjoint() * ub).trace() / nn;
  return (scale * nb - ub).norm() / ub.norm();
}

Mat ideal_teleport_map(const std::vector<double>& kappas, int cutoff) {
  GateOptions go;
  go.pad = 80;
  Mat rot = gate_matrix(rotation(0, kPi / 2.0), cutoff);
  Mat u = Mat::Identity(cutoff + 1, cutoff + 1);
  for (double k : kappas) u = rot * gate_matrix(shear(0, k), cutoff, go) * u;
  return u;
}

TeleportGateResult teleport_gate(const std::vector<double>& kappas, double r, const std::vector<double>& outcomes,
                                 std::uint64_t seed, int block, const MbqcOptions& opt) {
  if (!outcomes.empty() && outcomes.size() != kappas.size())
    throw std::invalid_argument("teleport_gate: one outcome per step required");
  if (block < 0 || block > opt.cutoff) throw std::invalid_argument("teleport_gate: block outside cutoff");
  TeleportGateResult res;
  std::vector<Vec> cols;
  for (int j = 0; j <= block; ++j) {
    Vec e = Vec::Zero(opt.cutoff + 1);
    e(j) = 1.0;
    cols.push_back(e);
  }
  for (size_t s = 0; s < kappas.size(); ++s) {
    const double theta = theta_for_kappa(kappas[s]);
    double m;
    std::uint64_t sd = mix(seed + s);
    if (outcomes.empty()) {
      // Outcome statistics of the maximally mixed input on the block.
      Marginal avg;
      double tot = 0.0;
      for (const Vec& v : cols) {
        Marginal mg = gadget_marginal(v, theta, r, opt);
        if (avg.m.size() == 0) {
          avg = mg;
        } else {
          avg.density += mg.density;
        }
        tot += mg.total;
      }
      if (!(tot > 0.0)) throw ZeroProbability("teleport_gate: marginal vanishes");
      m = sample_marginal(avg, sd);
    } else {
      m = outcomes[s];
    }
    double weight = 0.0;
    for (Vec& v : cols) {
      GadgetOutcome o = teleport_gadget(v, theta, m, r, opt);
      v = o.state;
      weight += o.density;
    }
    res.transcript.push_back({int(s), MeasKind::Homodyne, theta, m, 0, 0.0, !outcomes.empty(),
                              weight / double(block + 1), sd});
  }
  res.net = Mat(opt.cutoff + 1, block + 1);
  for (int j = 0; j <= block; ++j) res.net.col(j) = cols[size_t(j)];
  res.ideal = ideal_teleport_map(kappas, opt.cutoff);
  res.fidelity = map_fidelity(res.net, res.ideal, block);
  return res;
}

RMat squeeze_symplectic(double r) {
  RMat m = RMat::Zero(2, 2);
  m(0, 0) = std::exp(r);
  m(1, 1) = std::exp(-r);
  return m;
}

namespace {

// Heisenberg matrix of R(pi/2) P(kappa) on (Q, P).
RMat teleport_symplectic(double kappa) {
  RMat rot(2, 2), sh(2, 2);
  rot << 0.0, -1.0, 1.0, 0.0;
  sh << 1.0, 0.0, 2.0 * kappa, 1.0;
  return rot * sh;
}

RMat chain_symplectic(const std::array<double, 4>& k) {
  RMat m = RMat::Identity(2, 2);
  for (double v : k) m = teleport_symplectic(v) * m;
  return m;
}

}  // namespace

std::array<double, 4> solve_kappas(const RMat& target) {
  if (target.rows() != 2 || target.cols() != 2 || std::abs(target.determinant() - 1.0) > 1e-9)
    throw std::invalid_argument("solve_kappas: target must be a 2x2 symplectic matrix");
  auto residual = [&](const std::array<double, 4>& k) {
    RMat d = chain_symplectic(k) - target;
    return Eigen::Map<RVec>(d.data(), 4).eval();
  };
  // Continuant form with a_i = -2 kappa_i: a2 is free when D != 0.
  const double b = target(0, 1), c = target(1, 0), d = target(1, 1);
  if (std::abs(d) > 1e-6) {
    auto from_a2 = [&](double a2) {
      const double a3 = (1.0 - d) / a2, a4 = (b - a2) / d, a1 = -(c + a3) / d;
      return std::array<double, 4>{-a1 / 2.0, -a2 / 2.0, -a3 / 2.0, -a4 / 2.0};
    };
    auto cost = [](const std::array<double, 4>& k) { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + k[3] * k[3]; };
    std::array<double, 4> best{};
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = -600; i <= 600; ++i) {
      if (i == 0) continue;
      const double a2 = (i < 0 ? -1.0 : 1.0) * std::pow(10.0, (std::abs(i) - 300) / 100.0);
      const auto k = from_a2(a2);
      if (cost(k) < best_cost) {
        best_cost = cost(k);
        best = k;
      }
    }
    if (residual(best).norm() < 1e-10) return best;
  }
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int start = 0; start < 200; ++start) {
    std::array<double, 4> k{};
    for (double& v : k) v = start == 0 ? 0.1 : nd(rng);
    for (int it = 0; it < 100; ++it) {
      RVec f = residual(k);
      if (f.norm() < 1e-14) break;
      RMat jac(4, 4);
      for (int c = 0; c < 4; ++c) {
        auto kp = k, km = k;
        kp[size_t(c)] += 1e-7;
        km[size_t(c)] -= 1e-7;
        jac.col(c) = (residual(kp) - residual(km)) / 2e-7;
      }
      RVec dk = jac.completeOrthogonalDecomposition().solve(-f);
      for (int c = 0; c < 4; ++c) k[size_t(c)] += dk(c);
    }
    if (residual(k).norm() < 1e-12) return k;
  }
  throw std::runtime_error("solve_kappas: no solution found");
}

std::vector<double> injection_probabilities(double r, int nmax, const MbqcOptions& opt) {
  std::vector<double> p;
  for (int n = 0; n <= nmax; ++n) p.push_back(inject_fock(n, r, opt).probability);
  return p;
}

Injection inject_fock(int n, double r, const MbqcOptions& opt) {
  if (n < 0 || n > opt.cutoff) throw std::invalid_argument("inject_fock: n outside cutoff");
  Setup su(opt, n + 1);
  const Grid& g = su.g;
  // out(q2) = w(q2) int psi_n(x) e^{i x q2} w(x) dx
  Vec src(g.n);
  for (int j = 0; j < g.n; ++j) src(j) = su.herm(n, j) * node_wavefunction(r, g.x(j)) * g.dx;
  Vec out(g.n);
  for (int i = 0; i < g.n; ++i) {
    const double q2 = g.x(i);
    const cplx step = std::exp(cplx(0.0, q2 * g.dx));
    cplx ph = std::exp(cplx(0.0, q2 * g.x(0))), acc = 0.0;
    for (int j = 0; j < g.n; ++j) {
      acc += ph * src(j);
      ph *= step;
    }
    out(i) = node_wavefunction(r, q2) * acc;
  }
  Injection res;
  res.probability = out.squaredNorm() * g.dx;
  if (!(res.probability > opt.prob_floor))
    throw ZeroProbability("inject_fock: outcome " + std::to_string(n) + " below the probability floor");
  Vec st = to_fock(su.herm, out, opt.cutoff, g.dx);
  res.state = st / st.norm();
  res.fidelity = std::norm(res.state(n));
  res.record = {0, MeasKind::Pnr, 0.0, 0.0, n, 0.0, true, res.probability, 0};
  return res;
}

Injection inject_fock_rus(int n, double r, std::uint64_t seed, const MbqcOptions& opt) {
  const int nmax = std::max(n, 8);
  std::vector<double> p = injection_probabilities(r, nmax, opt);
  double tot = 0.0;
  for (double v : p) tot += v;
  p.push_back(std::max(0.0, 1.0 - tot));  // outcomes above nmax
  if (p[size_t(n)] < opt.prob_floor) throw ZeroProbability("inject_fock: target outcome unreachable at this r");
  for (int a = 1; a <= opt.rus_budget; ++a) {
    std::uint64_t sd = mix(seed ^ std::uint64_t(a));
    if (int(draw_index(p, sd)) == n) {
      Injection res = inject_fock(n, r, opt);
      res.attempts = a;
      res.record.postselected = false;
      res.record.seed = sd;
      res.record.node = 2 * (a - 1);
      return res;
    }
  }
  throw BudgetExhausted("inject_fock: repeat-until-success budget exhausted");
}

Mat subtraction_kraus(double beta, int n, int d) {
  Mat a = lower(d), an = Mat::Identity(d, d);
  for (int i = 0; i < n; ++i) an = an * a;
  Vec damp(d);
  for (int k = 0; k < d; ++k) damp(k) = std::exp(-beta * k);
  return subtraction_prefactor(beta, n) * damp.asDiagonal() * an;
}

double subtraction_block_error(double beta, int n, int block) {
  const int d = block + 1;
  Mat s = subtraction_kraus(beta, n, d + n);
  Mat a = lower(d + n), an = Mat::Identity(d + n, d + n);
  for (int i = 0; i < n; ++i) an = an * a;
  an /= std::sqrt(std::tgamma(n + 1.0));
  const double norm = (n % 2 ? -1.0 : 1.0) * std::pow(2.0 * std::sinh(beta), n / 2.0) * std::exp(-n * beta / 2.0);
  Mat diff = (s / norm - an).topLeftCorner(d, d);
  return opnorm(diff);
}

Subtracted photon_subtract(const Vec& in, double beta, double r, std::optional<int> n, std::optional<double> m,
                           std::uint64_t seed, const MbqcOptions& opt) {
  if (!(beta > 0.0)) throw std::invalid_argument("photon_subtract: beta must be positive");
  Subtracted res;
  int count;
  std::vector<double> pn;
  if (n && *n < 0) throw std::invalid_argument("photon_subtract: n must be non-negative");
  pn = subtraction_probabilities(in, beta, r, opt);
  count = n ? *n : int(draw_index(pn, mix(seed)));
  double val = m ? *m : sample_marginal(gadget_marginal(in, 0.0, r, opt, count, beta), mix(seed + 1));
  GadgetOutcome o = teleport_gadget(in, 0.0, val, r, opt, count, beta);
  if (!(o.density > opt.prob_floor)) throw ZeroProbability("photon_subtract: outcome density underflows");
  res.state = o.state / o.state.norm();
  res.probability_n = size_t(count) < pn.size() ? pn[size_t(count)] / in.squaredNorm() : 0.0;
  res.record = {0, MeasKind::SubtractionPnr, 0.0, val, count, beta, n.has_value() && m.has_value(), o.density,
                seed};
  return res;
}

std::vector<cplx> subtraction_polynomial(int n, double m) {
  // P_{k+1} = ((Q + i m) P_k - P_k') / sqrt2
  std::vector<cplx> p{1.0};
  for (int k = 0; k < n; ++k) {
    std::vector<cplx> q(p.size() + 1, 0.0);
    for (size_t i = 0; i < p.size(); ++i) {
      q[i + 1] += p[i];
      q[i] += cplx(0.0, m) * p[i];
      if (i > 0) q[i - 1] -= double(i) * p[i];
    }
    for (auto& v : q) v /= std::sqrt(2.0);
    p = q;
  }
  return p;
}

Mat polynomial_in_q(const std::vector<cplx>& coeffs, int cutoff) {
  const int d = cutoff + 1 + int(coeffs.size());
  Mat q = quad_q(d), acc = Mat::Zero(d, d), pw = Mat::Identity(d, d);
  for (const cplx& c : coeffs) {
    acc += c * pw;
    pw = pw * q;
  }
  return acc.topLeftCorner(cutoff + 1, cutoff + 1);
}

namespace {

PolynomialResult finish_polynomial(const std::vector<MeasurementRecord>& tr, double r, int block,
                                   const MbqcOptions& opt) {
  PolynomialResult res;
  res.transcript = tr;
  std::vector<Vec> cols;
  for (int j = 0; j <= block; ++j) {
    Vec e = Vec::Zero(opt.cutoff + 1);
    e(j) = 1.0;
    cols.push_back(e);
  }
  Mat ideal = Mat::Identity(opt.cutoff + 1, opt.cutoff + 1);
  for (const auto& rec : tr) {
    if (rec.n != 1) continue;
    for (Vec& v : cols) v = apply_rotation(teleport_gadget(v, 0.0, rec.m, r, opt, rec.n, rec.beta).state, -kPi / 2.0);
    ideal = polynomial_in_q(subtraction_polynomial(rec.n, rec.m), opt.cutoff) * ideal;
    res.m.push_back(rec.m);
  }
  res.net = Mat(opt.cutoff + 1, block + 1);
  for (int j = 0; j <= block; ++j) res.net.col(j) = cols[size_t(j)];
  res.ideal = ideal;
  res.rel_error = map_relative_error(res.net, ideal, block);
  res.fidelity = map_fidelity(res.net, ideal, block);
  res.attempts = int(tr.size());
  return res;
}

}  // namespace

PolynomialResult polynomial_gate_sequence(int k, double beta, double r, std::uint64_t seed, int block,
                                          const MbqcOptions& opt) {
  if (k < 0) throw std::invalid_argument("polynomial degree must be >= 0");
  if (!(beta > 0.0)) throw std::invalid_argument("polynomial_gate_sequence: beta must be positive");
  std::vector<Vec> cols;
  for (int j = 0; j <= block; ++j) {
    Vec e = Vec::Zero(opt.cutoff + 1);
    e(j) = 1.0;
    cols.push_back(e);
  }
  std::vector<MeasurementRecord> tr;
  int attempts = 0;
  for (int factor = 0; factor < k; ++factor) {
    // Attempts run on fresh resources; only the n = 1 outcome is routed to the data mode.
    std::vector<double> pn(size_t(opt.max_subtracted + 1), 0.0);
    for (const Vec& v : cols) {
      auto p = subtraction_probabilities(v, beta, r, opt);
      for (size_t i = 0; i < p.size(); ++i) pn[i] += p[i];
    }
    double tot = 0.0;
    for (double v : pn) tot += v;
    pn.push_back(std::max(0.0, double(block + 1) - tot));  // more than max_subtracted photons
    int n = -1;
    for (int a = 0; a < opt.rus_budget && n != 1; ++a) {
      const std::uint64_t sd = mix(seed + std::uint64_t(++attempts));
      n = int(draw_index(pn, sd));
      if (n != 1)
        tr.push_back({attempts - 1, MeasKind::SubtractionPnr, 0.0, 0.0, n, beta, false, pn[size_t(n)] / double(block + 1), sd});
    }
    if (n != 1) throw BudgetExhausted("polynomial_gate_sequence: no single-photon subtraction within the budget");
    const std::uint64_t sd = mix(seed + std::uint64_t(attempts));
    Marginal avg;
    for (const Vec& v : cols) {
      Marginal mg = gadget_marginal(v, 0.0, r, opt, 1, beta);
      if (avg.m.size() == 0)
        avg = mg;
      else
        avg.density += mg.density;
    }
    const double m = sample_marginal(avg, mix(sd + 1));
    double weight = 0.0;
    for (Vec& v : cols) {
      GadgetOutcome o = teleport_gadget(v, 0.0, m, r, opt, 1, beta);
      weight += o.density;
      v = apply_rotation(o.state, -kPi / 2.0);
    }
    tr.push_back({attempts - 1, MeasKind::SubtractionPnr, 0.0, m, 1, beta, false, weight / double(block + 1), sd});
  }
  return finish_polynomial(tr, r, block, opt);
}

PolynomialResult replay_polynomial(const std::vector<MeasurementRecord>& transcript, double r, int block,
                                   const MbqcOptions& opt) {
  for (const auto& rec : transcript)
    if (rec.kind != MeasKind::SubtractionPnr) throw std::invalid_argument("replay: transcript is not a subtraction run");
  return finish_polynomial(transcript, r, block, opt);
}

GateTeleportResult gate_teleport(const std::function<cplx(double)>& f, const Vec& in, double r,
                                 std::optional<double> m, std::uint64_t seed, const MbqcOptions& opt) {
  Setup su(opt, int(in.size()));
  const Grid& g = su.g;
  if (int(in.size()) > opt.cutoff + 1) throw std::invalid_argument("gate_teleport: input exceeds cutoff");
  // Resource f(Q) S(r)|0>.
  Vec res(g.n);
  for (int j = 0; j < g.n; ++j) res(j) = f(g.x(j)) * node_wavefunction(r, g.x(j));
  const double rn = res.squaredNorm() * g.dx;
  if (!(rn > 0.0)) throw ZeroProbability("gate_teleport: resource vanishes on the grid");
  res /= std::sqrt(rn);
  Vec rot = apply_rotation(in, -kPi / 2.0);
  Vec src = to_grid(su.herm, rot) * (g.dx / std::sqrt(2.0 * kPi));
  // out(q2) = res(q2) <m_p| Z(q2) R(-pi/2) psi>
  auto output = [&](double mv) {
    Vec out(g.n);
    for (int i = 0; i < g.n; ++i) {
      const double w = g.x(i) - mv;
      const cplx step = std::exp(cplx(0.0, w * g.dx));
      cplx ph = std::exp(cplx(0.0, w * g.x(0))), acc = 0.0;
      for (int j = 0; j < g.n; ++j) {
        acc += ph * src(j);
        ph *= step;
      }
      out(i) = res(i) * acc;
    }
    return out;
  };
  double val;
  if (m) {
    val = *m;
  } else {
    // p(m) = int |res(q)|^2 |psi(q - m)|^2 dq on the grid of shifts.
    Marginal mg;
    mg.m = g.x;
    mg.density = RVec(g.n);
    Vec psi0 = to_grid(su.herm, in);
    for (int i = 0; i < g.n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < g.n; ++j) {
        int k = j - i + g.n / 2;
        if (k >= 0 && k < g.n) acc += std::norm(res(j)) * std::norm(psi0(k));
      }
      mg.density(i) = acc * g.dx;
    }
    val = sample_marginal(mg, seed);
  }
  Vec out = output(val);
  const double density = out.squaredNorm() * g.dx;
  if (!(density > opt.prob_floor)) throw ZeroProbability("gate_teleport: outcome density underflows");
  // Target f(Q) X(m) psi on the grid.
  RMat hs = hermite_functions(int(in.size()) - 1, (g.x.array() - val).matrix());
  Vec target = hs.transpose().cast<cplx>() * in;
  for (int j = 0; j < g.n; ++j) target(j) *= f(g.x(j));
  GateTeleportResult gt;
  gt.m = val;
  gt.fidelity = std::norm(target.dot(out)) / (target.squaredNorm() * out.squaredNorm());
  gt.record = {0, MeasKind::Homodyne, 0.0, val, 0, 0.0, m.has_value(), density, seed};
  return gt;
}

}  // namespace cvq
