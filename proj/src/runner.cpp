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

#include "cvq/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "cvq/correlator.hpp"
#include "cvq/gates.hpp"
#include "cvq/lattice.hpp"
#include "cvq/mbqc.hpp"
#include "cvq/tomography.hpp"

namespace cvq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kVersion = "0.1.0";

std::string num(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"model", {"L", "m", "lambda", "dm", "K", "dt", "steps", "levels", "oracle_cap"}},
      {"source", {"occupation"}},
      {"current", {"x"}},
      {"toy", {"m", "n"}},
      {"system", {"type", "K", "t", "omega", "alpha", "quartic", "linear"}},
      {"scan", {"omega_min", "omega_max", "points", "omega_im", "T", "dt", "t_i", "t_c", "omega_i"}},
      {"tomography", {"xi", "zeta", "shots", "seed", "max_total", "richardson", "t", "reference"}},
      {"link", {"t_a", "t_b", "method", "tau", "max_total", "shots", "seed"}},
      {"mbqc", {"r", "beta", "budget", "kappas", "seed", "nmax", "block", "grid_points", "cutoff"}},
      {"verify", {"t", "steps", "tolerance"}},
  };
  return s;
}

const std::map<std::string, std::vector<std::string>>& required_blocks() {
  static const std::map<std::string, std::vector<std::string>> r = {
      {"spectrum", {"model"}},
      {"correlate-1pt", {"scan"}},
      {"correlate-3pt", {"model", "scan"}},
      {"correlate-4pt", {"model", "scan"}},
      {"phase-reconstruct", {"system", "tomography"}},
      {"phase-link", {"system", "link"}},
      {"mbqc-verify", {"mbqc"}},
      {"fig1", {}},
  };
  return r;
}

const json& block(const json& cfg, const std::string& name) {
  static const json empty = json::object();
  return cfg.contains(name) ? cfg.at(name) : empty;
}

double getd(const json& b, const std::string& key, double def) {
  if (!b.contains(key)) return def;
  if (!b.at(key).is_number()) throw ConfigError("'" + key + "' must be a number");
  return b.at(key).get<double>();
}

long long geti(const json& b, const std::string& key, long long def) {
  if (!b.contains(key)) return def;
  if (!b.at(key).is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return b.at(key).get<long long>();
}

std::vector<double> getv(const json& b, const std::string& key, std::vector<double> def) {
  if (!b.contains(key)) return def;
  const json& v = b.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) throw ConfigError("'" + key + "' must be a number or a non-empty list");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("'" + key + "' entries must be numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<int> get_counts(const json& b, const std::string& key, std::vector<int> def) {
  if (!b.contains(key)) return def;
  std::vector<int> out;
  for (const auto& x : b.at(key)) {
    if (!x.is_number_integer() || x.get<int>() < 0) throw ConfigError("'" + key + "' must hold non-negative integers");
    out.push_back(x.get<int>());
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Ctx {
  json cfg;
  RunOptions opt;
  std::string hash;
  fs::path dir;
  RunOutcome* out = nullptr;
  json leakage = json::object();
  json runtimes = json::object();

  std::string header() const { return "# lattice units, a = 1\n# config " + hash + "\n"; }
  void write(const std::string& name, const std::string& body, bool csv = true) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    if (csv) f << header();
    f << body;
    out->artifacts.push_back(name);
  }
  void write_json(const std::string& name, json j) {
    j["config_hash"] = hash;
    j["units"] = "lattice units, a = 1";
    write(name, j.dump(2) + "\n", false);
  }
  std::uint64_t seed(const json& b) const {
    if (opt.seed_override) return *opt.seed_override;
    return std::uint64_t(geti(b, "seed", 0));
  }
};

void check(bool ok, const std::string& what) {
  if (!ok) throw NumericalInconsistency(what);
}

ModelParams model_params(const json& cfg) {
  const json& b = block(cfg, "model");
  ModelParams p;
  p.L = int(geti(b, "L", 2));
  p.m = getd(b, "m", 1.0);
  p.lam = getd(b, "lambda", 0.0);
  p.dm = getd(b, "dm", 0.0);
  p.K = int(geti(b, "K", 4));
  p.dt = getd(b, "dt", 0.0);
  p.steps = int(geti(b, "steps", 1));
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return p;
}

Mat lattice_hamiltonian(const json& cfg, const ModelParams& p) {
  return exact_hamiltonian(p, HintForm::Direct, long(geti(block(cfg, "model"), "oracle_cap", 65536)));
}

FockState lattice_source(const json& cfg, const ModelParams& p) {
  auto occ = get_counts(block(cfg, "source"), "occupation", std::vector<int>(size_t(2 * p.L), 0));
  if (int(occ.size()) != 2 * p.L) throw ConfigError("source.occupation needs 2L entries");
  for (int v : occ)
    if (v > p.K) throw ConfigError("source.occupation exceeds the cutoff K");
  return FockState::basis(occ, p.K);
}

// exp(-i t H) psi by eigendecomposition, for states on small registers.
struct Propagator {
  Eigen::SelfAdjointEigenSolver<Mat> es;
  explicit Propagator(const Mat& h) : es(0.5 * (h + h.adjoint())) {}
  Vec operator()(const Vec& v, double t) const {
    Vec c = es.eigenvectors().adjoint() * v;
    for (long i = 0; i < c.size(); ++i) c(i) *= std::exp(cplx(0.0, -t * es.eigenvalues()(i)));
    return es.eigenvectors() * c;
  }
};

std::vector<double> omega_grid(const json& scan, double m) {
  const double a = getd(scan, "omega_min", 0.5 * m), b = getd(scan, "omega_max", 1.5 * m);
  const long long n = geti(scan, "points", 1001);
  if (!(b > a) || n < 3) throw ConfigError("scan: need omega_max > omega_min and points >= 3");
  return linspace(a, b, size_t(n));
}

// Evaluates `f` on contiguous chunks of the grid in parallel; results are
// stitched in grid order, so the output does not depend on the thread count.
FrequencyScan parallel_scan(const std::function<FrequencyScan(const std::vector<double>&)>& f,
                            const std::vector<double>& grid, int threads) {
  const size_t nt = size_t(std::max(1, std::min<int>(threads, int(grid.size()))));
  std::vector<FrequencyScan> parts(nt);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nt);
  const size_t chunk = (grid.size() + nt - 1) / nt;
  for (size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      try {
        const size_t lo = t * chunk, hi = std::min(grid.size(), lo + chunk);
        if (lo < hi) parts[t] = f(std::vector<double>(grid.begin() + long(lo), grid.begin() + long(hi)));
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  FrequencyScan out;
  out.omega_im = parts[0].omega_im;
  for (auto& p : parts) {
    out.omega_re.insert(out.omega_re.end(), p.omega_re.begin(), p.omega_re.end());
    out.values.insert(out.values.end(), p.values.begin(), p.values.end());
  }
  return out;
}

std::string peaks_csv(const std::vector<std::pair<std::string, std::vector<Peak>>>& rows) {
  std::string s = "label,omega,height,half_width,prominence\n";
  for (const auto& [label, peaks] : rows)
    for (const auto& p : peaks)
      s += label + "," + num(p.omega) + "," + num(p.height) + "," + num(p.half_width) + "," + num(p.prominence) + "\n";
  return s;
}

std::string series_csv(const std::vector<double>& t, const std::vector<cplx>& v, const std::string& tname = "t") {
  std::string s = tname + ",re,im\n";
  for (size_t i = 0; i < t.size(); ++i) s += num(t[i]) + "," + num(v[i].real()) + "," + num(v[i].imag()) + "\n";
  return s;
}

double tolerance(const json& cfg, double def) { return getd(block(cfg, "verify"), "tolerance", def); }

// ---- fig1 -----------------------------------------------------------------

void run_fig1(Ctx& c) {
  const json& toy = block(c.cfg, "toy");
  const double m = getd(toy, "m", 1.0);
  const SpectralModel model = toy_model_fig1(m, int(geti(toy, "n", 90)));
  const json& scan = block(c.cfg, "scan");
  const auto grid = omega_grid(scan, m);
  const double im = getd(scan, "omega_im", m / 100.0), dt = getd(scan, "dt", 0.1 / m);
  std::vector<std::pair<std::string, std::vector<Peak>>> peaks;
  json table = json::array();
  for (double mult : {10.0, 100.0}) {
    const double T = mult / m;
    const auto disc = parallel_scan([&](const std::vector<double>& g) { return scan_discrete(model, g, im, dt, T); },
                                    grid, c.opt.threads);
    const std::string tag = "T" + std::to_string(int(mult));
    c.write("scan_" + tag + ".csv", scan_csv(disc));
    auto pk = dominant_peak(disc);
    peaks.push_back({tag, pk ? std::vector<Peak>{*pk} : std::vector<Peak>{}});
    if (c.opt.verify) {
      const auto cont = parallel_scan([&](const std::vector<double>& g) { return scan_continuous(model, g, im, T); },
                                      grid, c.opt.threads);
      for (double step : {dt, dt / 5.0}) {
        const auto d2 = scan_discrete(model, grid, im, step, T);
        double top = 0.0, diff = 0.0;
        for (size_t i = 0; i < grid.size(); ++i) {
          top = std::max(top, std::abs(cont.values[i]));
          diff = std::max(diff, std::abs(cont.values[i] - d2.values[i]));
        }
        table.push_back({{"T", T}, {"dt", step}, {"sup_rel_cont_vs_disc", diff / top}});
      }
      // Closed-form geometric sum against the explicit sum over samples.
      double worst = 0.0;
      for (size_t i = 0; i < grid.size(); i += 50) {
        const cplx om(grid[i], im);
        const cplx direct = ft_discrete([&](double t) { return c1pt(model, t); }, om, dt, T).value;
        worst = std::max(worst, std::abs(direct - disc.values[i]));
      }
      table.push_back({{"T", T}, {"closed_form_vs_sum", worst}});
      check(worst <= tolerance(c.cfg, 1e-8), "fig1: closed-form discrete transform disagrees with the sample sum");
    }
  }
  c.write("peaks.csv", peaks_csv(peaks));
  if (c.opt.verify) c.out->report["fig1"] = table;
}

// ---- spectrum -------------------------------------------------------------

void run_spectrum(Ctx& c) {
  const ModelParams p = model_params(c.cfg);
  const Mat h = lattice_hamiltonian(c.cfg, p);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const RVec q = charge_diagonal(p.L, p.K + 1), k = momentum_diagonal(p.L, p.K + 1);
  const long levels = std::min<long>(geti(block(c.cfg, "model"), "levels", 10), h.rows());
  std::string s = "level,energy,charge,momentum,top_level_population\n";
  double boundary = 0.0;
  for (long i = 0; i < levels; ++i) {
    Vec v = es.eigenvectors().col(i);
    double qc = 0.0, kc = 0.0;
    for (long j = 0; j < v.size(); ++j) {
      qc += std::norm(v(j)) * q(j);
      kc += std::norm(v(j)) * k(j);
    }
    FockState st(2 * p.L, p.K);
    st.amps = v;
    const double bp = boundary_population(st);
    boundary = std::max(boundary, bp);
    s += std::to_string(i) + "," + num(es.eigenvalues()(i)) + "," + num(qc) + "," + num(kc) + "," + num(bp) + "\n";
  }
  c.write("spectrum.csv", s);
  c.leakage["max_top_level_population"] = boundary;
  if (!c.opt.verify) return;
  // Trotter error against exact evolution at step halvings.
  const json& vb = block(c.cfg, "verify");
  const double t = getd(vb, "t", 1.0);
  auto steps = getv(vb, "steps", {10, 20, 40});
  const int d = p.K + 1;
  const auto blk = block_per_mode(2 * p.L, d, std::min(2, p.K));
  Mat c0 = Mat::Zero(register_size(2 * p.L, d), long(blk.size()));
  for (size_t j = 0; j < blk.size(); ++j) c0(blk[j], long(j)) = 1.0;
  std::vector<long> cols(blk.size());
  for (size_t j = 0; j < blk.size(); ++j) cols[j] = long(j);
  HamiltonianAction ha(p, HintForm::Circuit, d);
  const Mat ue = restrict(evolve_exact(ha, t, c0), blk, cols);
  std::string tab = "steps,dt,error\n";
  std::vector<double> errs;
  for (double n : steps) {
    ModelParams pq = p;
    pq.dt = t / n;
    const CompiledCircuit st = compile(build_trotter_step(pq), p.K);
    Mat cc = c0;
    for (int i = 0; i < int(n); ++i) st.apply(cc);
    errs.push_back(opnorm(restrict(cc, blk, cols) - ue));
    tab += num(n) + "," + num(t / n) + "," + num(errs.back()) + "\n";
  }
  c.write("trotter.csv", tab);
  double slope = 0.0;
  if (steps.size() >= 2) slope = -std::log(errs.back() / errs.front()) / std::log(steps.back() / steps.front());
  c.out->report["trotter"] = {{"steps", steps}, {"errors", errs}, {"slope", slope}};
  check(std::abs(slope - 1.0) <= tolerance(c.cfg, 0.2), "spectrum: Trotter slope " + num(slope) + " is not first order");
}

// ---- correlators ----------------------------------------------------------

struct LatticeModel {
  ModelParams p;
  Mat h;
  FockState source;
  Mat j;
};

LatticeModel lattice_model(const Ctx& c, bool with_current) {
  LatticeModel lm;
  lm.p = model_params(c.cfg);
  lm.h = lattice_hamiltonian(c.cfg, lm.p);
  lm.source = lattice_source(c.cfg, lm.p);
  if (with_current) {
    const int x = int(geti(block(c.cfg, "current"), "x", 0));
    if (x < 0 || x >= lm.p.L) throw ConfigError("current.x outside the lattice");
    lm.j = Mat(LatticeFields(lm.p.L, lm.p.m, lm.p.K + 1).current(x));
  }
  return lm;
}

std::vector<double> time_grid(double t0, double dt, double T) {
  const long n = step_count(dt, T - t0);
  std::vector<double> t;
  for (long i = 0; i <= n; ++i) t.push_back(t0 + double(i) * dt);
  return t;
}

void run_correlate_1pt(Ctx& c) {
  const json& scan = block(c.cfg, "scan");
  SpectralModel model;
  double m = 1.0;
  std::optional<LatticeModel> lm;
  if (c.cfg.contains("model")) {
    lm = lattice_model(c, false);
    model = diagonalize(lm->h, lm->source.amps, lm->source.amps);
    m = lm->p.m;
  } else {
    const json& toy = block(c.cfg, "toy");
    m = getd(toy, "m", 1.0);
    model = toy_model_fig1(m, int(geti(toy, "n", 90)));
  }
  const double dt = getd(scan, "dt", 0.1 / m), T = getd(scan, "T", 100.0 / m), im = getd(scan, "omega_im", m / 100.0);
  const auto times = time_grid(0.0, dt, T);
  const CorrelatorSeries series = c1pt_series(model, times);
  c.write("series.csv", series_csv(series.times, series.values));
  const auto grid = omega_grid(scan, m);
  const auto disc =
      parallel_scan([&](const std::vector<double>& g) { return scan_discrete(model, g, im, dt, T); }, grid, c.opt.threads);
  const auto cont =
      parallel_scan([&](const std::vector<double>& g) { return scan_continuous(model, g, im, T); }, grid, c.opt.threads);
  c.write("scan_discrete.csv", scan_csv(disc));
  c.write("scan_continuous.csv", scan_csv(cont));
  c.write("peaks.csv", peaks_csv({{"discrete", extract_peaks(disc)}, {"continuous", extract_peaks(cont)}}));
  if (!c.opt.verify) return;
  double series_err = 0.0;
  if (lm) {
    // Independent oracle: Chebyshev propagation of the source.
    const auto b = gershgorin_bounds(lm->h);
    Mat v = lm->source.amps;
    for (size_t i = 0; i < times.size(); ++i) {
      if (i > 0) v = chebyshev_propagate(lm->h, times[i] - times[i - 1], v, b.first, b.second);
      series_err = std::max(series_err, std::abs(lm->source.amps.dot(v.col(0)) - series.values[i]));
    }
  }
  double free_err = 0.0;
  if (lm && lm->p.lam == 0.0) {
    // Free theory: a Fock source only picks up the phase of its mode energies.
    const auto occ = get_counts(block(c.cfg, "source"), "occupation", std::vector<int>(size_t(2 * lm->p.L), 0));
    const auto w = mode_energies(lm->p);
    double e = 0.0;
    for (size_t j = 0; j < occ.size(); ++j) e += occ[j] * w[j];
    for (size_t i = 0; i < times.size(); ++i)
      free_err = std::max(free_err, std::abs(std::exp(cplx(0.0, -e * times[i])) - series.values[i]));
    c.out->report["correlate-1pt_free_phase"] = free_err;
  }
  double sum_err = 0.0;
  for (size_t i = 0; i < grid.size(); i += std::max<size_t>(1, grid.size() / 20))
    sum_err = std::max(sum_err, std::abs(ft_discrete(series, cplx(grid[i], im), dt, T).value - disc.values[i]));
  c.out->report["correlate-1pt"] = {{"series_vs_propagation", series_err}, {"closed_form_vs_sum", sum_err}};
  check(free_err <= 1e-10, "correlate-1pt: free series departs from the analytic phases");
  check(series_err <= tolerance(c.cfg, 1e-8) && sum_err <= tolerance(c.cfg, 1e-8),
        "correlate-1pt: spectral series disagrees with the oracle");
}

void run_correlate_npt(Ctx& c, bool four) {
  LatticeModel lm = lattice_model(c, true);
  const SpectralModel model = diagonalize(lm.h, lm.source.amps, lm.source.amps, &lm.j);
  const json& scan = block(c.cfg, "scan");
  const double m = lm.p.m;
  const double dt = getd(scan, "dt", 0.1 / m), T = getd(scan, "T", 10.0 / m), im = getd(scan, "omega_im", m / 100.0);
  const double ti = getd(scan, "t_i", 0.0), tc = getd(scan, "t_c", four ? 0.5 * T : 0.0);
  if (ti > 0.0) throw ConfigError("scan.t_i must be <= 0");
  if (four && (tc < 0.0 || tc > T)) throw ConfigError("scan.t_c must lie in [0, T]");
  const auto times = time_grid(four ? tc : 0.0, dt, T);
  std::vector<cplx> vals;
  for (double tf : times) vals.push_back(four ? c4pt(model, tf, tc, ti) : c3pt(model, tf, ti));
  const std::string tag = four ? "c4pt" : "c3pt";
  c.write(tag + ".csv", series_csv(times, vals, "t_f"));
  const auto grid = omega_grid(scan, m);
  const cplx wi(getd(scan, "omega_i", grid.front()), im);
  FrequencyScan ft = parallel_scan(
      [&](const std::vector<double>& g) {
        FrequencyScan s;
        s.omega_re = g;
        s.omega_im = im;
        for (double w : g)
          s.values.push_back(four ? ft_c4pt(model, cplx(w, im), wi, tc, T, T) : ft_c3pt(model, cplx(w, im), wi, T, T));
        return s;
      },
      grid, c.opt.threads);
  c.write(tag + "_scan.csv", scan_csv(ft));
  if (!c.opt.verify) return;
  // Dense oracle: <l| e^{-iH t_f} [e^{iH t_c} J e^{-iH t_c}] J e^{iH t_i} |l>.
  Propagator u(lm.h);
  const Vec& l = lm.source.amps;
  double worst = 0.0;
  for (size_t i = 0; i < times.size(); i += std::max<size_t>(1, times.size() / 25)) {
    Vec v = u(l, -ti);
    v = lm.j * v;
    if (four) v = u(lm.j * u(v, tc), -tc);
    v = u(v, times[i]);
    worst = std::max(worst, std::abs(l.dot(v) - vals[i]));
  }
  c.out->report[tag] = {{"max_error_vs_dense", worst}};
  check(worst <= tolerance(c.cfg, 1e-8), tag + ": spectral sum disagrees with the dense oracle");
}

// ---- tomography -----------------------------------------------------------

struct System {
  Mat h;
  FockState initial;
  Outcome reference;
};

System build_system(const Ctx& c) {
  const json& s = block(c.cfg, "system");
  const std::string type = s.value("type", "anharmonic");
  System sys;
  if (type == "anharmonic") {
    const int k = int(geti(s, "K", 12)), d = k + 1;
    const Mat q = quad_q(d + 20), n = number(d + 20);
    sys.h = (n + (getd(s, "quartic", 0.1) / 6.0) * q * q * q * q + getd(s, "linear", 0.3) * q).topLeftCorner(d, d);
    sys.initial = FockState::vacuum(1, k);
  } else if (type == "free") {
    const int k = int(geti(s, "K", 8));
    sys.h = getd(s, "omega", 1.0) * number(k + 1);
    auto a = getv(s, "alpha", {0.8, 0.3});
    if (a.size() != 2) throw ConfigError("system.alpha must be [re, im]");
    sys.initial = FockState::vacuum(1, k);
    sys.initial.amps = gate_matrix(displacement(0, cplx(a[0], a[1])), k) * sys.initial.amps;
    sys.initial.amps.normalize();
  } else if (type == "lattice") {
    const ModelParams p = model_params(c.cfg);
    sys.h = lattice_hamiltonian(c.cfg, p);
    sys.initial = lattice_source(c.cfg, p);
  } else {
    throw ConfigError("system.type must be anharmonic, free or lattice");
  }
  return sys;
}

std::string outcome_label(const Outcome& n) {
  std::string s;
  for (size_t i = 0; i < n.size(); ++i) s += (i ? "-" : "") + std::to_string(n[i]);
  return s;
}

void run_phase_reconstruct(Ctx& c) {
  const json& tb = block(c.cfg, "tomography");
  System sys = build_system(c);
  const double t = getd(tb, "t", 0.7), xi = getd(tb, "xi", 1e-3);
  const long long shots = geti(tb, "shots", 0);
  if (shots < 0) throw ConfigError("tomography.shots must be >= 0");
  if (shots > 0 && !tb.contains("seed") && !c.opt.seed_override) throw ConfigError("tomography.seed is required when shots > 0");
  if (!(xi > 0.0) || xi > kXiGuard) throw ConfigError("tomography.xi must lie in (0, 0.01]");
  FockState st = sys.initial;
  st.amps = Propagator(sys.h)(st.amps, t);
  c.leakage["top_level_population"] = boundary_population(st);
  std::vector<int> modes;
  for (int i = 0; i < st.num_modes; ++i) modes.push_back(i);
  ReconOptions ro;
  ro.max_total = int(geti(tb, "max_total", 4));
  ro.reference = get_counts(tb, "reference", {});
  const std::uint64_t seed = c.seed(tb);
  const auto table = measure_probabilities(st, xi, modes, shots, seed);
  c.write("probabilities.csv", probability_csv(table));
  auto reconstruct = [&](const ProbabilityTable& t) {
    return st.num_modes == 1 ? reconstruct_single_mode(t, ro) : reconstruct_multimode(t, ro);
  };
  ReconstructionResult rec = reconstruct(table);
  if (tb.value("richardson", false)) rec = richardson(rec, reconstruct(measure_probabilities(st, xi / 2.0, modes, shots, seed + 1)));
  c.write_json("reconstruction.json", to_json(rec));
  if (!c.opt.verify) return;
  auto truth = amplitudes(st, ro.max_total);
  const Alignment al = align_to(rec, truth);
  // errors.csv is in the reconstruction's own gauge (reference amplitude real).
  const Outcome ref = ro.reference.empty() ? Outcome(size_t(st.num_modes), 0) : ro.reference;
  const cplx ph = std::conj(truth.at(ref)) / std::abs(truth.at(ref));
  for (auto& [n, v] : truth) v *= ph;
  std::string s = "outcome,re,im,true_re,true_im,abs_error,sigma\n";
  double worst_sigma = 0.0;
  for (const auto& [n, e] : rec.entries) {
    const cplx v = e.value, tr = truth.at(n);
    const double sig = std::hypot(e.sigma_re, e.sigma_im);
    if (sig > 0.0) worst_sigma = std::max(worst_sigma, std::abs(v - tr) / sig);
    s += outcome_label(n) + "," + num(v.real()) + "," + num(v.imag()) + "," + num(tr.real()) + "," + num(tr.imag()) + "," +
         num(std::abs(v - tr)) + "," + num(sig) + "\n";
  }
  c.write("errors.csv", s);
  c.out->report["phase-reconstruct"] = {{"max_aligned_error", al.max_error}, {"components", rec.components}};
  if (shots == 0)
    check(al.max_error <= tolerance(c.cfg, 1e-2), "phase-reconstruct: aligned error " + num(al.max_error));
  else {
    c.out->report["phase-reconstruct"]["worst_sigma"] = worst_sigma;
    check(worst_sigma <= tolerance(c.cfg, 5.0), "phase-reconstruct: sampled estimate off by " + num(worst_sigma) + " sigma");
  }
}

void run_phase_link(Ctx& c) {
  const json& lb = block(c.cfg, "link");
  System sys = build_system(c);
  const double ta = getd(lb, "t_a", 0.2), tbt = getd(lb, "t_b", 0.9);
  const int max_total = int(geti(lb, "max_total", 4));
  const std::string method = lb.value("method", "photon");
  Propagator u(sys.h);
  const Vec ca = u(sys.initial.amps, ta), cb = u(sys.initial.amps, tbt);
  std::vector<Outcome> outs;
  std::map<Outcome, double> ma, mb;
  for (long i : block_total(sys.initial.num_modes, sys.initial.dim1(), max_total)) {
    if (std::abs(ca(i)) * std::abs(cb(i)) <= 1e-6) continue;
    Outcome n = sys.initial.counts(i);
    outs.push_back(n);
    ma[n] = std::abs(ca(i));
    mb[n] = std::abs(cb(i));
  }
  if (outs.empty()) throw NumericalInconsistency("phase-link: no outcome with both amplitudes above 1e-6");
  std::map<Outcome, double> dphi;
  std::string s;
  double sum_rule = 0.0;
  if (method == "photon") {
    LinkOptions lo;
    lo.shots = geti(lb, "shots", 0);
    if (lo.shots > 0 && !lb.contains("seed") && !c.opt.seed_override) throw ConfigError("link.seed is required when shots > 0");
    lo.seed = c.seed(lb);
    if (lo.shots > 0) lo.cos_tolerance = 1.0;
    s = "outcome,p0,p1,q0,q1,dphi\n";
    for (const auto& x : link_phases_photon_control(sys.initial, sys.h, ta, tbt, outs, ma, mb, lo)) {
      dphi[x.outcome] = x.dphi;
      sum_rule = std::max(sum_rule, std::abs(x.p0 + x.p1 - 0.5 * (std::pow(ma[x.outcome], 2) + std::pow(mb[x.outcome], 2))));
      s += outcome_label(x.outcome) + "," + num(x.p0) + "," + num(x.p1) + "," + num(x.q0) + "," + num(x.q1) + "," +
           num(x.dphi) + "\n";
    }
  } else if (method == "quadrature") {
    s = "outcome,visibility,dphi\n";
    for (const auto& x : link_phases_quadrature_control(sys.initial, sys.h, ta, tbt, getd(lb, "tau", 0.5), outs)) {
      dphi[x.outcome] = x.dphi;
      s += outcome_label(x.outcome) + "," + num(x.visibility) + "," + num(x.dphi) + "\n";
    }
  } else {
    throw ConfigError("link.method must be photon or quadrature");
  }
  c.write("link.csv", s);
  if (!c.opt.verify) return;
  double worst = 0.0;
  for (const auto& [n, v] : dphi) {
    const long i = sys.initial.index(n);
    worst = std::max(worst, std::abs(std::remainder(v - std::arg(cb(i) / ca(i)), 2.0 * kPi)));
  }
  c.out->report["phase-link"] = {{"max_phase_error", worst}, {"sum_rule", sum_rule}};
  const bool exact = geti(lb, "shots", 0) == 0;
  const double tol = tolerance(c.cfg, method == "photon" ? 1e-6 : 1e-2);
  if (exact) check(worst <= tol && sum_rule <= 1e-10, "phase-link: phase error " + num(worst));
}

// ---- mbqc -----------------------------------------------------------------

bool increasing(const std::vector<double>& v) {
  for (size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

void run_mbqc(Ctx& c) {
  const json& b = block(c.cfg, "mbqc");
  if (!b.contains("seed") && !c.opt.seed_override) throw ConfigError("mbqc.seed is required (outcomes are sampled)");
  auto rs = getv(b, "r", {1.5, 2.0, 3.0});
  std::sort(rs.begin(), rs.end());
  for (double r : rs)
    if (!(r > 0.0) || r > 4.0) throw ConfigError("mbqc.r values must lie in (0, 4]");
  const double beta = getd(b, "beta", 1e-3);
  if (!(beta > 0.0)) throw ConfigError("mbqc.beta must be positive");
  const auto kappas = getv(b, "kappas", {0.0, 0.5});
  const int nmax = int(geti(b, "nmax", 3)), blk = int(geti(b, "block", 4));
  MbqcOptions opt;
  opt.rus_budget = int(geti(b, "budget", 200));
  opt.grid_points = int(geti(b, "grid_points", opt.grid_points));
  opt.cutoff = int(geti(b, "cutoff", opt.cutoff));
  if (blk < 0 || blk >= opt.cutoff || nmax < 0 || nmax > opt.cutoff) throw ConfigError("mbqc: block/nmax outside the cutoff");
  const std::uint64_t seed = c.seed(b);
  std::string s = "quantity,parameter,r,value\n";
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (int n = 0; n <= nmax; ++n) {
    std::vector<double> f;
    for (double r : rs) f.push_back(inject_fock(n, r, opt).fidelity);
    rows.push_back({"inject_fidelity,n=" + std::to_string(n), f});
  }
  for (double k : kappas) {
    std::vector<double> f;
    for (double r : rs) f.push_back(teleport_gate({k}, r, {}, seed, blk, opt).fidelity);
    rows.push_back({"teleport_gate_fidelity,kappa=" + num(k), f});
  }
  {
    Vec one = Vec::Zero(opt.cutoff + 1);
    one(1) = 1.0;
    std::vector<double> f, leak;
    for (double r : rs) {
      f.push_back(gate_teleport([](double q) { return cplx(q, 0.5); }, one, r, std::nullopt, seed, opt).fidelity);
      leak.push_back(teleport_state(one, 0.0, r, std::nullopt, seed, opt).leakage);
    }
    rows.push_back({"gate_teleport_fidelity,f=Q+0.5i", f});
    c.leakage["teleport_leakage"] = leak;
  }
  bool mono = true;
  for (const auto& [label, v] : rows) {
    mono = mono && increasing(v);
    for (size_t i = 0; i < rs.size(); ++i) s += label + "," + num(rs[i]) + "," + num(v[i]) + "\n";
  }
  for (int n = 0; n <= 4; ++n)
    s += "subtraction_block_error,n=" + std::to_string(n) + ",," + num(subtraction_block_error(beta, n, blk)) + "\n";
  const PolynomialResult poly = polynomial_gate_sequence(1, beta, rs.back(), seed, blk, opt);
  s += "polynomial_k1_fidelity,m=" + num(poly.m.at(0)) + "," + num(rs.back()) + "," + num(poly.fidelity) + "\n";
  s += "polynomial_k1_rel_error,m=" + num(poly.m.at(0)) + "," + num(rs.back()) + "," + num(poly.rel_error) + "\n";
  c.write("fidelity_vs_r.csv", s);
  c.write_json("transcript.json", transcript_json(poly.transcript));
  if (!c.opt.verify) return;
  const PolynomialResult replay = replay_polynomial(poly.transcript, rs.back(), blk, opt);
  c.out->report["mbqc"] = {{"monotone_in_r", mono}, {"replay_fidelity", replay.fidelity}};
  check(std::abs(replay.fidelity - poly.fidelity) < 1e-10, "mbqc: transcript replay differs from the recorded run");
  check(mono, "mbqc: a fidelity is not increasing in r");
}

void dispatch(Ctx& c) {
  const std::string kind = c.cfg.at("kind");
  if (kind == "fig1") return run_fig1(c);
  if (kind == "spectrum") return run_spectrum(c);
  if (kind == "correlate-1pt") return run_correlate_1pt(c);
  if (kind == "correlate-3pt") return run_correlate_npt(c, false);
  if (kind == "correlate-4pt") return run_correlate_npt(c, true);
  if (kind == "phase-reconstruct") return run_phase_reconstruct(c);
  if (kind == "phase-link") return run_phase_link(c);
  if (kind == "mbqc-verify") return run_mbqc(c);
  throw ConfigError("unknown kind '" + kind + "'");
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"spectrum",          "correlate-1pt", "correlate-3pt", "correlate-4pt",
                                             "phase-reconstruct", "phase-link",    "mbqc-verify",   "fig1"};
  return k;
}

void validate_config(const json& cfg) {
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  if (!cfg.contains("kind") || !cfg.at("kind").is_string()) throw ConfigError("missing string field 'kind'");
  const std::string kind = cfg.at("kind");
  const auto& req = required_blocks();
  if (!req.count(kind)) throw ConfigError("unknown kind '" + kind + "'");
  for (const auto& [key, val] : cfg.items()) {
    if (key == "kind" || key == "output") continue;
    auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError("unknown top-level key '" + key + "'");
    if (!val.is_object()) throw ConfigError("block '" + key + "' must be an object");
    for (const auto& [k, v] : val.items()) {
      (void)v;
      if (!it->second.count(k)) throw ConfigError("unknown key '" + key + "." + k + "'");
    }
  }
  if (cfg.contains("output") && !cfg.at("output").is_string()) throw ConfigError("'output' must be a string");
  for (const auto& b : req.at(kind))
    if (!cfg.contains(b)) throw ConfigError("kind '" + kind + "' requires block '" + b + "'");
  if (kind == "correlate-1pt" && !cfg.contains("model") && !cfg.contains("toy"))
    throw ConfigError("correlate-1pt requires a 'model' or a 'toy' block");
  if (kind == "phase-link" || kind == "phase-reconstruct") {
    if (block(cfg, "system").value("type", "anharmonic") == "lattice" && !cfg.contains("model"))
      throw ConfigError("lattice system requires block 'model'");
  }
}

std::string config_hash(const json& cfg) {
  char b[20];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.dump())));
  return b;
}

RunOutcome run_experiment(const json& cfg, const RunOptions& opt) {
  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Ctx c;
  c.cfg = cfg;
  c.opt = opt;
  c.out = &out;
  try {
    validate_config(cfg);
    if (opt.threads < 1) throw ConfigError("--threads must be >= 1");
    c.hash = config_hash(cfg);
    const std::string dir = !opt.out.empty() ? opt.out : cfg.value("output", std::string("out"));
    c.dir = dir;
    out.out_dir = dir;
    fs::create_directories(c.dir);
    dispatch(c);
    out.exit_code = kExitOk;
    out.message = "ok";
  } catch (const ConfigError& e) {
    out.exit_code = kExitValidation;
    out.message = std::string("validation failure: ") + e.what();
  } catch (const nlohmann::json::exception& e) {
    out.exit_code = kExitValidation;
    out.message = std::string("validation failure: ") + e.what();
  } catch (const OracleCapExceeded& e) {
    out.exit_code = kExitOracleCap;
    out.message = std::string("oracle cap exceeded: ") + e.what();
  } catch (const NumericalInconsistency& e) {
    out.exit_code = kExitInconsistent;
    out.message = std::string("numerical inconsistency: ") + e.what();
  } catch (const PhaseInconsistency& e) {
    out.exit_code = kExitInconsistent;
    out.message = std::string("numerical inconsistency: ") + e.what();
  } catch (const InconsistentProbabilities& e) {
    out.exit_code = kExitInconsistent;
    out.message = std::string("numerical inconsistency: ") + e.what();
  } catch (const LinearityFailure& e) {
    out.exit_code = kExitInconsistent;
    out.message = std::string("numerical inconsistency: ") + e.what();
  } catch (const BudgetExhausted& e) {
    out.exit_code = kExitInconsistent;
    out.message = std::string("numerical inconsistency: ") + e.what();
  } catch (const std::invalid_argument& e) {
    out.exit_code = kExitValidation;
    out.message = std::string("validation failure: ") + e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitFailure;
    out.message = std::string("error: ") + e.what();
  }
  if (!c.dir.empty() && fs::exists(c.dir)) {
    json m;
    m["config_hash"] = c.hash;
    m["kind"] = cfg.is_object() ? cfg.value("kind", std::string()) : std::string();
    m["mode"] = opt.verify ? "verify" : "run";
    m["versions"] = {{"cvq", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
    m["threads"] = opt.threads;
    if (opt.seed_override) m["seed_override"] = *opt.seed_override;
    m["artifacts"] = out.artifacts;
    m["leakage"] = c.leakage;
    m["exit_code"] = out.exit_code;
    m["message"] = out.message;
    if (!out.report.is_null()) m["report"] = out.report;
    m["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m["units"] = "lattice units, a = 1";
    std::ofstream(c.dir / "manifest.json") << m.dump(2) << "\n";
    if (!out.report.is_null()) {
      json r = out.report;
      r["config_hash"] = c.hash;
      std::ofstream(c.dir / "report.json") << r.dump(2) << "\n";
    }
  }
  return out;
}

RunOutcome run_config_file(const std::string& path, const RunOptions& opt) {
  std::ifstream f(path);
  if (!f) {
    RunOutcome out;
    out.exit_code = kExitValidation;
    out.message = "validation failure: cannot open " + path;
    return out;
  }
  json cfg;
  try {
    cfg = json::parse(f);
  } catch (const json::parse_error& e) {
    RunOutcome out;
    out.exit_code = kExitValidation;
    out.message = std::string("validation failure: ") + e.what();
    return out;
  }
  return run_experiment(cfg, opt);
}

}  // namespace cvq
