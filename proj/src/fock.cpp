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

#include "cvq/fock.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <stdexcept>

namespace cvq {

namespace {

void default_sink(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }
void (*g_sink)(const std::string&) = default_sink;

}  // namespace

void set_warning_sink(void (*sink)(const std::string&)) { g_sink = sink ? sink : default_sink; }
void warn(const std::string& msg) { g_sink(msg); }

long register_size(int num_modes, int d) {
  long n = 1;
  for (int j = 0; j < num_modes; ++j) n *= d;
  return n;
}

FockState::FockState(int modes, int k) : num_modes(modes), cutoff(k) {
  if (modes < 1) throw std::invalid_argument("FockState: need at least one mode");
  if (k < 1) throw std::invalid_argument("FockState: cutoff must be >= 1");
  amps = Vec::Zero(register_size(modes, k + 1));
}

FockState FockState::vacuum(int modes, int k) {
  FockState s(modes, k);
  s.amps(0) = 1.0;
  return s;
}

FockState FockState::basis(const std::vector<int>& counts, int k) {
  FockState s(int(counts.size()), k);
  s.amps(s.index(counts)) = 1.0;
  return s;
}

long FockState::index(const std::vector<int>& c) const {
  if (int(c.size()) != num_modes) throw std::invalid_argument("FockState::index: wrong mode count");
  long idx = 0;
  for (int v : c) {
    if (v < 0 || v > cutoff) throw std::out_of_range("FockState::index: occupation beyond cutoff");
    idx = idx * (cutoff + 1) + v;
  }
  return idx;
}

std::vector<int> FockState::counts(long idx) const {
  std::vector<int> c(size_t(num_modes), 0);
  for (int j = num_modes - 1; j >= 0; --j) {
    c[size_t(j)] = int(idx % (cutoff + 1));
    idx /= (cutoff + 1);
  }
  return c;
}

ModeOperator::ModeOperator(int ar, int k, Mat mat, bool herm)
    : arity(ar), cutoff(k), m(std::move(mat)), hermitian(herm) {
  if (m.rows() != register_size(ar, k + 1) || m.cols() != m.rows())
    throw std::invalid_argument("ModeOperator: matrix size does not match arity and cutoff");
  if (herm && hermiticity_defect(m) > 1e-12) throw std::invalid_argument("ModeOperator: not Hermitian");
}

ModeOperator ladder_lower(int k) { return ModeOperator(1, k, lower(k + 1)); }
ModeOperator ladder_raise(int k) { return ModeOperator(1, k, raise(k + 1)); }
ModeOperator number_op(int k) { return ModeOperator(1, k, number(k + 1), true); }

std::pair<ModeOperator, ModeOperator> quadratures(int k) {
  return {ModeOperator(1, k, quad_q(k + 1), true), ModeOperator(1, k, quad_p(k + 1), true)};
}

void apply_columns(const Mat& op, const std::vector<int>& targets, int num_modes, int d, Mat& cols) {
  const int nt = int(targets.size());
  std::vector<long> stride(size_t(num_modes), 1);
  for (int j = num_modes - 2; j >= 0; --j) stride[size_t(j)] = stride[size_t(j + 1)] * d;
  std::set<int> seen;
  for (int t : targets) {
    if (t < 0 || t >= num_modes) throw std::out_of_range("target mode out of range");
    if (!seen.insert(t).second) throw std::invalid_argument("duplicate target mode");
  }
  const long dl = register_size(nt, d);
  if (op.rows() != dl || op.cols() != dl) throw std::invalid_argument("operator arity does not match targets");
  if (cols.rows() != register_size(num_modes, d)) throw std::invalid_argument("state size mismatch");

  std::vector<long> off(size_t(dl), 0);
  for (long l = 0; l < dl; ++l) {
    long r = l, o = 0;
    for (int i = nt - 1; i >= 0; --i) {
      o += (r % d) * stride[size_t(targets[size_t(i)])];
      r /= d;
    }
    off[size_t(l)] = o;
  }
  std::vector<int> rest;
  for (int j = 0; j < num_modes; ++j)
    if (!seen.count(j)) rest.push_back(j);
  const long nb = register_size(int(rest.size()), d);
  Mat blk(dl, cols.cols()), res(dl, cols.cols());
  for (long b = 0; b < nb; ++b) {
    long r = b, base = 0;
    for (int i = int(rest.size()) - 1; i >= 0; --i) {
      base += (r % d) * stride[size_t(rest[size_t(i)])];
      r /= d;
    }
    for (long l = 0; l < dl; ++l) blk.row(l) = cols.row(base + off[size_t(l)]);
    res.noalias() = op * blk;
    for (long l = 0; l < dl; ++l) cols.row(base + off[size_t(l)]) = res.row(l);
  }
}

void apply_inplace(const Mat& op, const std::vector<int>& targets, FockState& st) {
  Mat cols = st.amps;
  apply_columns(op, targets, st.num_modes, st.cutoff + 1, cols);
  st.amps = cols.col(0);
}

FockState embed(const ModeOperator& op, const std::vector<int>& targets, const FockState& st) {
  if (int(targets.size()) != op.arity) throw std::invalid_argument("embed: arity/target mismatch");
  if (op.cutoff != st.cutoff) throw std::invalid_argument("embed: cutoff mismatch");
  FockState out = st;
  apply_inplace(op.m, targets, out);
  return out;
}

FockState expm_apply(const ModeOperator& gen, cplx scale, const std::vector<int>& targets,
                     const FockState& st) {
  ModeOperator u(gen.arity, gen.cutoff, expm(gen.m, scale, gen.hermitian));
  return embed(u, targets, st);
}

cplx inner(const FockState& a, const FockState& b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner: size mismatch");
  return a.amps.dot(b.amps);
}

cplx expectation(const ModeOperator& op, const std::vector<int>& targets, const FockState& st) {
  return inner(st, embed(op, targets, st));
}

Mat reduced_density(const FockState& st, int mode) {
  const int d = st.cutoff + 1;
  Mat rho = Mat::Zero(d, d);
  for (long i = 0; i < st.size(); ++i) {
    if (st.amps(i) == cplx(0.0)) continue;
    auto ci = st.counts(i);
    for (int n = 0; n < d; ++n) {
      auto cj = ci;
      cj[size_t(mode)] = n;
      rho(ci[size_t(mode)], n) += st.amps(i) * std::conj(st.amps(st.index(cj)));
    }
  }
  return rho;
}

std::vector<PnrOutcome> pnr_distribution(const FockState& st, double floor) {
  double n2 = st.norm2();
  if (!(n2 > 0.0)) throw std::invalid_argument("pnr_distribution: zero state");
  if (std::abs(n2 - 1.0) > 1e-8) {
    warn("pnr_distribution: renormalizing state with norm^2 = " + std::to_string(n2));
  }
  std::vector<PnrOutcome> out;
  for (long i = 0; i < st.size(); ++i) {
    double p = std::norm(st.amps(i)) / n2;
    if (p > floor) out.push_back({st.counts(i), p});
  }
  return out;
}

std::vector<std::int64_t> multinomial(const std::vector<double>& probs, std::int64_t shots,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::int64_t> out(probs.size(), 0);
  double rest = 0.0;
  for (double p : probs) rest += p;
  std::int64_t left = shots;
  for (size_t i = 0; i < probs.size() && left > 0; ++i) {
    if (i + 1 == probs.size()) {
      out[i] = left;
      break;
    }
    double q = rest > 0.0 ? std::clamp(probs[i] / rest, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::int64_t> bin(left, q);
    out[i] = bin(rng);
    left -= out[i];
    rest -= probs[i];
  }
  return out;
}

Histogram sample_pnr(const FockState& st, std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample_pnr: shots must be >= 1");
  auto dist = pnr_distribution(st);
  std::vector<double> p;
  for (auto& o : dist) p.push_back(o.probability);
  auto draw = multinomial(p, shots, seed);
  Histogram h;
  for (size_t i = 0; i < dist.size(); ++i)
    if (draw[i] > 0) h[dist[i].counts] = draw[i];
  return h;
}

nlohmann::json to_json(const FockState& st) {
  nlohmann::json j;
  j["layout"] = "mode-major";
  j["num_modes"] = st.num_modes;
  j["cutoff"] = st.cutoff;
  auto arr = nlohmann::json::array();
  for (long i = 0; i < st.size(); ++i) arr.push_back({st.amps(i).real(), st.amps(i).imag()});
  j["amplitudes"] = arr;
  return j;
}

FockState state_from_json(const nlohmann::json& j) {
  if (j.contains("layout") && j["layout"] != "mode-major")
    throw std::invalid_argument("state file: unsupported layout");
  FockState st(j.at("num_modes").get<int>(), j.at("cutoff").get<int>());
  const auto& arr = j.at("amplitudes");
  if (long(arr.size()) != st.size()) throw std::invalid_argument("state file: amplitude count mismatch");
  for (long i = 0; i < st.size(); ++i)
    st.amps(i) = cplx(arr[size_t(i)].at(0).get<double>(), arr[size_t(i)].at(1).get<double>());
  return st;
}

void save_state(const FockState& st, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_json(st).dump(1) << "\n";
}

FockState load_state(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return state_from_json(nlohmann::json::parse(f));
}

}  // namespace cvq
