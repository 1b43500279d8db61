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

#include "cvq/gates.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <Eigen/Eigenvalues>

#include "cvq/lattice.hpp"

namespace cvq {

namespace {

struct KindInfo {
  GateKind kind;
  const char* name;
  int nparams;
};

constexpr KindInfo kKinds[] = {
    {GateKind::Rotate, "Rotate", 1},
    {GateKind::Displace, "Displace", 2},
    {GateKind::Shear, "Shear", 1},
    {GateKind::Squeeze1, "Squeeze1", 1},
    {GateKind::Squeeze2, "Squeeze2", 1},
    {GateKind::BeamSplitter5050, "BeamSplitter5050", 0},
    {GateKind::CZ, "CZ", 1},
    {GateKind::QuarticPhase, "QuarticPhase", 1},
    {GateKind::CurrentUnitary, "CurrentUnitary", 4},
    {GateKind::ControlledN, "ControlledN", 1},
    {GateKind::ControlledQ, "ControlledQ", 1},
    {GateKind::TranslateQ, "TranslateQ", 1},
    {GateKind::TranslateP, "TranslateP", 1},
    {GateKind::Interferometer, "Interferometer", 0},
};

const KindInfo& info(GateKind k) {
  for (const auto& i : kKinds)
    if (i.kind == k) return i;
  throw std::invalid_argument("unknown gate kind");
}

GateSpec make(GateKind k, std::vector<int> t, std::vector<double> p) {
  GateSpec g;
  g.kind = k;
  g.targets = std::move(t);
  g.params = std::move(p);
  return g;
}

// exp(-i H) for Hermitian H.
Mat unitary_from(const Mat& h) { return expm(h, cplx(0.0, -1.0), true); }

Mat quad_function(const Mat& q, const std::function<cplx(double)>& f) { return hermitian_function(q, f); }

// Single-mode operator on slot j of an n-mode register at dimension d.
Mat slot(const Mat& op, int j, int n, int d) { return embed_dense(op, j, n, d); }

Mat interferometer_generator(const Mat& m, int d) {
  const int n = int(m.rows());
  Eigen::ComplexSchur<Mat> schur(m);
  Mat t = schur.matrixT();
  Mat z = schur.matrixU();
  Vec logd(n);
  for (int i = 0; i < n; ++i) logd(i) = std::log(t(i, i));
  Mat h = I1 * (z * logd.asDiagonal() * z.adjoint());
  Mat a = lower(d);
  long dim = register_size(n, d);
  Mat gen = Mat::Zero(dim, dim);
  std::vector<Mat> ai(static_cast<size_t>(n)), adi(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    ai[size_t(i)] = slot(a, i, n, d);
    adi[size_t(i)] = ai[size_t(i)].adjoint();
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(h(i, j)) > 0.0) gen += h(i, j) * adi[size_t(i)] * ai[size_t(j)];
  return gen;
}

Mat exp_sparse(const SpMat& g, cplx scale) {
  const long n = g.rows();
  double nrm = 0.0;
  for (int k = 0; k < g.outerSize(); ++k) {
    double col = 0.0;
    for (SpMat::InnerIterator it(g, k); it; ++it) col += std::abs(it.value());
    nrm = std::max(nrm, col);
  }
  nrm *= std::abs(scale);
  if (nrm > 1.0) return expm(Mat(g), scale, true);
  Mat out = Mat::Identity(n, n);
  Mat term = Mat::Identity(n, n);
  for (int k = 1; k < 60; ++k) {
    term = (g * term) * (scale / double(k));
    out += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  return out;
}

Mat controlled_matrix(const GateSpec& g, int k, int pad) {
  const Mat& h = *g.payload;
  const int d = k + 1;
  const double c = g.params[0];
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
  const Mat& v = es.eigenvectors();
  const RVec& e = es.eigenvalues();
  const long ds = h.rows();
  Mat out = Mat::Zero(d * ds, d * ds);
  auto block_for = [&](double s) {
    Vec ph(ds);
    for (long i = 0; i < ds; ++i) ph(i) = std::exp(cplx(0.0, -s * c * e(i)));
    return Mat(v * ph.asDiagonal() * v.adjoint());
  };
  if (g.kind == GateKind::ControlledN) {
    for (int n = 0; n < d; ++n) out.block(n * ds, n * ds, ds, ds) = block_for(double(n));
    return out;
  }
  const int dp = d + pad;
  Eigen::SelfAdjointEigenSolver<Mat> qs(quad_q(dp));
  for (int j = 0; j < dp; ++j) {
    Vec w = qs.eigenvectors().col(j).head(d);
    out += kron(Mat(w * w.adjoint()), block_for(qs.eigenvalues()(j)));
  }
  return out;
}

}  // namespace

std::string kind_name(GateKind k) { return info(k).name; }

GateKind kind_from_name(const std::string& s) {
  for (const auto& i : kKinds)
    if (s == i.name) return i.kind;
  throw std::invalid_argument("unknown gate kind '" + s + "'");
}

int param_count(GateKind k) { return info(k).nparams; }

GateSpec rotation(int mode, double theta) { return make(GateKind::Rotate, {mode}, {theta}); }
GateSpec displacement(int mode, cplx xi) { return make(GateKind::Displace, {mode}, {xi.real(), xi.imag()}); }
GateSpec shear(int mode, double kappa) { return make(GateKind::Shear, {mode}, {kappa}); }
GateSpec squeeze1(int mode, double r) { return make(GateKind::Squeeze1, {mode}, {r}); }
GateSpec squeeze2(int m1, int m2, double r) { return make(GateKind::Squeeze2, {m1, m2}, {r}); }
GateSpec beamsplitter(int m1, int m2) { return make(GateKind::BeamSplitter5050, {m1, m2}, {}); }
GateSpec cz(int m1, int m2, double g) { return make(GateKind::CZ, {m1, m2}, {g}); }
GateSpec quartic_phase(int mode, double gamma) { return make(GateKind::QuarticPhase, {mode}, {gamma}); }
GateSpec translate_q(int mode, double s) { return make(GateKind::TranslateQ, {mode}, {s}); }
GateSpec translate_p(int mode, double t) { return make(GateKind::TranslateP, {mode}, {t}); }

GateSpec current_unitary(const std::vector<int>& lattice_modes, double zeta, int x, int L, double m) {
  return make(GateKind::CurrentUnitary, lattice_modes, {zeta, double(x), double(L), m});
}

GateSpec controlled_n(int ancilla, const std::vector<int>& system, double dt, const Mat& h) {
  std::vector<int> t{ancilla};
  t.insert(t.end(), system.begin(), system.end());
  GateSpec g = make(GateKind::ControlledN, t, {dt});
  g.payload = std::make_shared<const Mat>(h);
  return g;
}

GateSpec controlled_q(int ancilla, const std::vector<int>& system, double tau, const Mat& h) {
  std::vector<int> t{ancilla};
  t.insert(t.end(), system.begin(), system.end());
  GateSpec g = make(GateKind::ControlledQ, t, {tau});
  g.payload = std::make_shared<const Mat>(h);
  return g;
}

GateSpec interferometer(const std::vector<int>& modes, const Mat& m) {
  GateSpec g = make(GateKind::Interferometer, modes, {});
  g.payload = std::make_shared<const Mat>(m);
  return g;
}

GateSpec inverse(const GateSpec& g) {
  GateSpec out = g;
  switch (g.kind) {
    case GateKind::BeamSplitter5050:
      std::swap(out.targets[0], out.targets[1]);
      break;
    case GateKind::Displace:
      out.params = {-g.params[0], -g.params[1]};
      break;
    case GateKind::Interferometer:
      out.payload = std::make_shared<const Mat>(g.payload->adjoint());
      break;
    default:
      out.params[0] = -g.params[0];
      break;
  }
  return out;
}

void validate(const GateSpec& g, int num_modes) {
  const auto& in = info(g.kind);
  if (int(g.params.size()) != in.nparams)
    throw std::invalid_argument(std::string(in.name) + ": expected " + std::to_string(in.nparams) + " params");
  for (double p : g.params)
    if (!std::isfinite(p)) throw std::invalid_argument(std::string(in.name) + ": non-finite parameter");
  std::set<int> seen;
  for (int t : g.targets) {
    if (t < 0 || t >= num_modes) throw std::out_of_range(std::string(in.name) + ": target out of range");
    if (!seen.insert(t).second) throw std::invalid_argument(std::string(in.name) + ": duplicate target");
  }
  size_t want = 0;
  switch (g.kind) {
    case GateKind::Squeeze2:
    case GateKind::BeamSplitter5050:
    case GateKind::CZ:
      want = 2;
      break;
    case GateKind::CurrentUnitary:
      want = size_t(2 * int(g.params[2]));
      break;
    case GateKind::ControlledN:
    case GateKind::ControlledQ:
    case GateKind::Interferometer:
      if (!g.payload) throw std::invalid_argument(std::string(in.name) + ": missing matrix payload");
      want = g.targets.size();
      if (g.targets.size() < (g.kind == GateKind::Interferometer ? 1u : 2u))
        throw std::invalid_argument(std::string(in.name) + ": too few targets");
      break;
    default:
      want = 1;
  }
  if (g.targets.size() != want) throw std::invalid_argument(std::string(in.name) + ": wrong number of targets");
  if (g.kind == GateKind::CurrentUnitary) {
    int L = int(g.params[2]);
    if (L < 1 || g.params[1] < 0 || int(g.params[1]) >= L)
      throw std::invalid_argument("CurrentUnitary: site outside lattice");
  }
  if (g.kind == GateKind::Interferometer && g.payload->rows() != long(g.targets.size()))
    throw std::invalid_argument("Interferometer: matrix size does not match targets");
}

Mat gate_matrix(const GateSpec& g, int k, const GateOptions& opt) {
  const int d = k + 1;
  const int dp = d + std::max(0, opt.pad);
  const int n = int(g.targets.size());
  const auto& p = g.params;
  Mat a = lower(dp), ad = raise(dp);
  Mat u;
  switch (g.kind) {
    case GateKind::Rotate: {
      Mat r = Mat::Zero(d, d);
      for (int j = 0; j < d; ++j) r(j, j) = std::exp(cplx(0.0, p[0] * j));
      return r;
    }
    case GateKind::Displace: {
      cplx xi(p[0], p[1]);
      u = unitary_from(I1 * (xi * ad - std::conj(xi) * a));
      break;
    }
    case GateKind::Shear:
      u = quad_function(quad_q(dp), [&](double x) { return std::exp(cplx(0.0, p[0] * x * x)); });
      break;
    case GateKind::QuarticPhase:
      u = quad_function(quad_q(dp), [&](double x) { return std::exp(cplx(0.0, p[0] / 6.0 * x * x * x * x)); });
      break;
    case GateKind::TranslateP:
      u = quad_function(quad_q(dp), [&](double x) { return std::exp(cplx(0.0, p[0] * x)); });
      break;
    case GateKind::TranslateQ:
      u = quad_function(quad_p(dp), [&](double x) { return std::exp(cplx(0.0, -p[0] * x)); });
      break;
    case GateKind::Squeeze1:
      u = unitary_from(I1 * (p[0] / 2.0) * (ad * ad - a * a));
      break;
    case GateKind::Squeeze2: {
      Mat a1 = slot(a, 0, 2, dp), a2 = slot(a, 1, 2, dp);
      u = unitary_from(I1 * p[0] * (a1.adjoint() * a2.adjoint() - a1 * a2));
      break;
    }
    case GateKind::BeamSplitter5050: {
      Mat a1 = slot(a, 0, 2, dp), a2 = slot(a, 1, 2, dp);
      u = unitary_from(I1 * (kPi / 4.0) * (a1.adjoint() * a2 - a1 * a2.adjoint()));
      break;
    }
    case GateKind::CZ: {
      Eigen::SelfAdjointEigenSolver<Mat> es(quad_q(dp));
      Mat v = kron(es.eigenvectors(), es.eigenvectors());
      Vec ph(dp * dp);
      for (int i = 0; i < dp; ++i)
        for (int j = 0; j < dp; ++j)
          ph(i * dp + j) = std::exp(cplx(0.0, p[0] * es.eigenvalues()(i) * es.eigenvalues()(j)));
      u = v * ph.asDiagonal() * v.adjoint();
      break;
    }
    case GateKind::Interferometer:
      u = unitary_from(interferometer_generator(*g.payload, dp));
      break;
    case GateKind::CurrentUnitary: {
      LatticeFields f(int(p[2]), p[3], dp);
      u = exp_sparse(f.current(int(p[1])), cplx(0.0, p[0]));
      break;
    }
    case GateKind::ControlledN:
    case GateKind::ControlledQ: {
      long ds = register_size(n - 1, d);
      if (g.payload->rows() != ds || g.payload->cols() != ds)
        throw std::invalid_argument(kind_name(g.kind) + ": Hamiltonian size does not match system targets");
      return controlled_matrix(g, k, std::max(0, opt.pad));
    }
  }
  return project_levels(u, n, dp, d);
}

Circuit& Circuit::add(GateSpec g) {
  validate(g, num_modes);
  gates.push_back(std::move(g));
  return *this;
}

Circuit& Circuit::append(const Circuit& c) {
  if (c.num_modes != num_modes) throw std::invalid_argument("append: mode count mismatch");
  for (const auto& g : c.gates) gates.push_back(g);
  return *this;
}

Circuit Circuit::inverse() const {
  Circuit out(num_modes);
  for (auto it = gates.rbegin(); it != gates.rend(); ++it) out.gates.push_back(cvq::inverse(*it));
  return out;
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto data = nlohmann::json::array();
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) data.push_back({m(r, c).real(), m(r, c).imag()});
  j["data"] = data;
  return j;
}

Mat mat_from_json(const nlohmann::json& j) {
  long rows = j.at("rows").get<long>(), cols = j.at("cols").get<long>();
  const auto& data = j.at("data");
  if (long(data.size()) != rows * cols) throw std::invalid_argument("matrix payload: wrong entry count");
  Mat m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) {
      const auto& e = data[size_t(r * cols + c)];
      m(r, c) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
    }
  return m;
}

}  // namespace

nlohmann::json to_json(const GateSpec& g) {
  nlohmann::json j;
  j["kind"] = kind_name(g.kind);
  j["targets"] = g.targets;
  j["params"] = g.params;
  if (g.payload) j["matrix"] = mat_to_json(*g.payload);
  return j;
}

GateSpec gate_from_json(const nlohmann::json& j) {
  GateSpec g;
  g.kind = kind_from_name(j.at("kind").get<std::string>());
  g.targets = j.at("targets").get<std::vector<int>>();
  g.params = j.value("params", std::vector<double>{});
  if (j.contains("matrix")) g.payload = std::make_shared<const Mat>(mat_from_json(j["matrix"]));
  return g;
}

nlohmann::json to_json(const Circuit& c) {
  nlohmann::json j;
  j["num_modes"] = c.num_modes;
  auto gates = nlohmann::json::array();
  for (const auto& g : c.gates) gates.push_back(to_json(g));
  j["gates"] = gates;
  return j;
}

Circuit circuit_from_json(const nlohmann::json& j) {
  const auto& list = j.is_array() ? j : j.at("gates");
  int modes = 0;
  if (j.is_object() && j.contains("num_modes")) {
    modes = j["num_modes"].get<int>();
  } else {
    for (const auto& g : list)
      for (int t : g.at("targets").get<std::vector<int>>()) modes = std::max(modes, t + 1);
  }
  Circuit c(std::max(modes, 1));
  for (const auto& g : list) c.add(gate_from_json(g));
  return c;
}

void save_circuit(const Circuit& c, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_json(c).dump(1) << "\n";
}

Circuit load_circuit(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return circuit_from_json(nlohmann::json::parse(f));
}

double boundary_population(const FockState& st) {
  double worst = 0.0;
  for (int mode = 0; mode < st.num_modes; ++mode) {
    double pop = 0.0;
    for (long i = 0; i < st.size(); ++i)
      if (st.counts(i)[size_t(mode)] == st.cutoff) pop += std::norm(st.amps(i));
    worst = std::max(worst, pop);
  }
  return worst;
}

CircuitResult apply_circuit(const Circuit& c, const FockState& st, const GateOptions& opt) {
  if (c.num_modes != st.num_modes) throw std::invalid_argument("apply_circuit: mode count mismatch");
  CircuitResult res;
  res.state = st;
  for (size_t i = 0; i < c.gates.size(); ++i) {
    try {
      validate(c.gates[i], c.num_modes);
      double before = res.state.norm2();
      apply_inplace(gate_matrix(c.gates[i], st.cutoff, opt), c.gates[i].targets, res.state);
      double leak = before - res.state.norm2();
      res.leakage_per_gate.push_back(leak);
      res.leakage += leak;
    } catch (const GateError&) {
      throw;
    } catch (const std::exception& e) {
      throw GateError(i, e.what());
    }
  }
  res.boundary_population = boundary_population(res.state);
  return res;
}

namespace {

// Re-expresses `op` on `from` targets as an operator on `to` targets, where
// `from` is a subset of `to` and |to| <= 2.
Mat lift(const Mat& op, const std::vector<int>& from, const std::vector<int>& to, int d) {
  if (from == to) return op;
  if (from.size() == 1) {
    int slot_idx = from[0] == to[0] ? 0 : 1;
    return embed_dense(op, slot_idx, 2, d);
  }
  Mat swap = Mat::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) swap(j * d + i, i * d + j) = 1.0;
  return swap * op * swap;
}

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
  for (int x : a)
    if (std::find(b.begin(), b.end(), x) == b.end()) return false;
  return true;
}

}  // namespace

CompiledCircuit compile(const Circuit& c, int k, const GateOptions& opt, bool fuse) {
  CompiledCircuit out;
  out.num_modes = c.num_modes;
  out.cutoff = k;
  const int d = k + 1;
  for (size_t i = 0; i < c.gates.size(); ++i) {
    const auto& g = c.gates[i];
    Mat m;
    try {
      validate(g, c.num_modes);
      m = gate_matrix(g, k, opt);
    } catch (const std::exception& e) {
      throw GateError(i, e.what());
    }
    if (fuse && !out.ops.empty() && g.targets.size() <= 2) {
      auto& last = out.ops.back();
      if (last.first.size() <= 2 && subset(g.targets, last.first)) {
        last.second = lift(m, g.targets, last.first, d) * last.second;
        continue;
      }
      if (last.first.size() == 1 && g.targets.size() == 2 && subset(last.first, g.targets)) {
        last.second = m * lift(last.second, last.first, g.targets, d);
        last.first = g.targets;
        continue;
      }
    }
    out.ops.emplace_back(g.targets, std::move(m));
  }
  return out;
}

void CompiledCircuit::apply(Mat& cols) const {
  for (const auto& [t, m] : ops) apply_columns(m, t, num_modes, cutoff + 1, cols);
}

FockState CompiledCircuit::apply(const FockState& st) const {
  FockState out = st;
  Mat cols = st.amps;
  apply(cols);
  out.amps = cols.col(0);
  return out;
}

Mat CompiledCircuit::dense() const {
  Mat cols = Mat::Identity(register_size(num_modes, cutoff + 1), register_size(num_modes, cutoff + 1));
  apply(cols);
  return cols;
}

}  // namespace cvq
