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

#include "cvq/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cvq {

void SpectralModel::validate() const {
  if (overlaps_in.size() != energies.size() || overlaps_out.size() != energies.size())
    throw std::invalid_argument("SpectralModel: energies and overlaps differ in length");
  for (double e : energies)
    if (!std::isfinite(e)) throw std::invalid_argument("SpectralModel: non-finite energy");
  if (current && (current->rows() != long(size()) || current->cols() != long(size())))
    throw std::invalid_argument("SpectralModel: current matrix has the wrong size");
}

void CorrelatorSeries::validate() const {
  if (values.size() != times.size()) throw std::invalid_argument("CorrelatorSeries: length mismatch");
  if (!var_re.empty() && (var_re.size() != times.size() || var_im.size() != times.size()))
    throw std::invalid_argument("CorrelatorSeries: variance length mismatch");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("CorrelatorSeries: times not increasing");
}

cplx c1pt(const SpectralModel& model, double t) {
  cplx s = 0.0;
  for (size_t n = 0; n < model.size(); ++n)
    s += std::exp(-I1 * t * model.energies[n]) * model.overlaps_out[n] * model.overlaps_in[n];
  return s;
}

CorrelatorSeries c1pt_series(const SpectralModel& model, const std::vector<double>& times) {
  model.validate();
  CorrelatorSeries s;
  s.times = times;
  for (double t : times) s.values.push_back(c1pt(model, t));
  s.validate();
  return s;
}

namespace {

void check_omega(cplx omega) {
  if (!std::isfinite(omega.real()) || !std::isfinite(omega.imag()))
    throw std::invalid_argument("non-finite frequency");
}

cplx overlap(const SpectralModel& m, size_t n) { return m.overlaps_out[n] * m.overlaps_in[n]; }

}  // namespace

cplx kernel_continuous(cplx dw, double T) {
  if (dw == cplx(0.0)) throw PoleError("frequency coincides with a model energy on the real axis");
  cplx x = I1 * T * dw;
  if (std::abs(x) < 1e-4) return T * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0);
  return I1 * (1.0 - std::exp(x)) / dw;
}

cplx kernel_window(cplx dw, double t0, double T) {
  if (T < t0) throw std::invalid_argument("integration window ends before it starts");
  if (T == t0) return 0.0;
  return std::exp(I1 * dw * t0) * kernel_continuous(dw, T - t0);
}

long step_count(double dt, double T) {
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("need dt > 0 and T >= 0");
  double r = T / dt;
  long n = std::lround(r);
  if (std::abs(r - double(n)) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument("T / dt = " + std::to_string(r) + " is not an integer");
  return n;
}

cplx kernel_discrete(cplx dw, double dt, double T) {
  long n = step_count(dt, T);
  cplx z = std::exp(I1 * dw * dt);
  if (std::abs(1.0 - z) < 1e-6) {
    cplx s = 0.0, zn = 1.0;
    for (long k = 1; k <= n; ++k) {
      zn *= z;
      s += zn;
    }
    return dt * s;
  }
  return dt * z * (1.0 - std::exp(I1 * dw * (double(n) * dt))) / (1.0 - z);
}

cplx ft_continuous(const SpectralModel& model, cplx omega, double T) {
  model.validate();
  check_omega(omega);
  if (T < 0.0) throw std::invalid_argument("T must be non-negative");
  cplx s = 0.0;
  for (size_t n = 0; n < model.size(); ++n) {
    cplx dw = omega - model.energies[n];
    if (dw == cplx(0.0)) throw PoleError("frequency coincides with a model energy on the real axis");
    s += overlap(model, n) * kernel_continuous(dw, T);
  }
  return s;
}

cplx ft_discrete(const SpectralModel& model, cplx omega, double dt, double T) {
  model.validate();
  check_omega(omega);
  cplx s = 0.0;
  for (size_t n = 0; n < model.size(); ++n) s += overlap(model, n) * kernel_discrete(omega - model.energies[n], dt, T);
  return s;
}

namespace {

struct Panel {
  double a, b;
  cplx fa, fm, fb, s;
};

cplx simpson(double a, double b, cplx fa, cplx fm, cplx fb) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

void adapt(const std::function<cplx(double)>& f, const Panel& p, double tol, int depth, QuadratureResult& acc) {
  double m = 0.5 * (p.a + p.b);
  double lm = 0.5 * (p.a + m), rm = 0.5 * (m + p.b);
  cplx flm = f(lm), frm = f(rm);
  cplx left = simpson(p.a, m, p.fa, flm, p.fm), right = simpson(m, p.b, p.fm, frm, p.fb);
  cplx delta = left + right - p.s;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    acc.value += left + right + delta / 15.0;
    acc.error += std::abs(delta) / 15.0;
    return;
  }
  adapt(f, {p.a, m, p.fa, flm, p.fm, left}, tol / 2.0, depth - 1, acc);
  adapt(f, {m, p.b, p.fm, frm, p.fb, right}, tol / 2.0, depth - 1, acc);
}

}  // namespace

QuadratureResult integrate(const std::function<cplx(double)>& f, double a, double b, double rel_tol,
                           int max_depth) {
  QuadratureResult out{0.0, 0.0};
  if (b == a) return out;
  // Seed panels resolve oscillations before the adaptive test can be fooled.
  const int seeds = 64;
  std::vector<double> x(seeds * 2 + 1);
  std::vector<cplx> fx(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = a + (b - a) * double(i) / double(x.size() - 1);
    fx[i] = f(x[i]);
  }
  cplx coarse = 0.0;
  double scale = 0.0;
  for (int k = 0; k < seeds; ++k) {
    coarse += simpson(x[2 * k], x[2 * k + 2], fx[2 * k], fx[2 * k + 1], fx[2 * k + 2]);
    scale += std::abs(fx[2 * k + 1]) * (x[2 * k + 2] - x[2 * k]);
  }
  double tol = rel_tol * std::max(std::abs(coarse), 1e-3 * scale);
  if (tol == 0.0) tol = 1e-300;
  for (int k = 0; k < seeds; ++k) {
    Panel p{x[2 * k], x[2 * k + 2], fx[2 * k], fx[2 * k + 1], fx[2 * k + 2], 0.0};
    p.s = simpson(p.a, p.b, p.fa, p.fm, p.fb);
    adapt(f, p, tol / seeds, max_depth, out);
  }
  return out;
}

QuadratureResult ft_continuous(const std::function<cplx(double)>& corr, cplx omega, double T, double rel_tol) {
  check_omega(omega);
  if (T < 0.0) throw std::invalid_argument("T must be non-negative");
  return integrate([&](double t) { return std::exp(I1 * omega * t) * corr(t); }, 0.0, T, rel_tol);
}

FtValue ft_discrete(const std::function<cplx(double)>& corr, cplx omega, double dt, double T) {
  check_omega(omega);
  long n = step_count(dt, T);
  FtValue out{0.0, 0.0, 0.0};
  for (long k = 1; k <= n; ++k) {
    double t = double(k) * dt;
    out.value += dt * std::exp(I1 * omega * t) * corr(t);
  }
  return out;
}

FtValue ft_discrete(const CorrelatorSeries& series, cplx omega, double dt, double T) {
  series.validate();
  check_omega(omega);
  long n = step_count(dt, T);
  const double tol = 1e-9 * std::max(1.0, T);
  FtValue out{0.0, 0.0, 0.0};
  size_t j = 0;
  for (long k = 1; k <= n; ++k) {
    double t = double(k) * dt;
    while (j < series.times.size() && series.times[j] < t - tol) ++j;
    if (j == series.times.size() || std::abs(series.times[j] - t) > tol)
      throw std::invalid_argument("series has no sample at t = " + std::to_string(t));
    cplx w = dt * std::exp(I1 * omega * t);
    out.value += w * series.values[j];
    if (series.has_variance()) {
      // Re(w C) = Re w Re C - Im w Im C, Im(w C) = Im w Re C + Re w Im C.
      out.var_re += w.real() * w.real() * series.var_re[j] + w.imag() * w.imag() * series.var_im[j];
      out.var_im += w.imag() * w.imag() * series.var_re[j] + w.real() * w.real() * series.var_im[j];
    }
  }
  return out;
}

FrequencyScan scan_continuous(const SpectralModel& model, const std::vector<double>& omega_re, double omega_im,
                              double T) {
  if (!(omega_im > 0.0)) throw std::invalid_argument("Im omega must be positive");
  FrequencyScan s{omega_re, omega_im, {}};
  for (double w : omega_re) s.values.push_back(ft_continuous(model, cplx(w, omega_im), T));
  return s;
}

FrequencyScan scan_discrete(const SpectralModel& model, const std::vector<double>& omega_re, double omega_im,
                            double dt, double T) {
  if (!(omega_im > 0.0)) throw std::invalid_argument("Im omega must be positive");
  FrequencyScan s{omega_re, omega_im, {}};
  for (double w : omega_re) s.values.push_back(ft_discrete(model, cplx(w, omega_im), dt, T));
  return s;
}

SpectralModel toy_model_fig1(double m, int n) {
  if (!(m > 0.0) || n < 1) throw std::invalid_argument("toy model needs m > 0 and n >= 1");
  SpectralModel s;
  const double c = 1.0 / std::sqrt(double(n));
  for (int j = 0; j < n; ++j) {
    s.energies.push_back(j == 0 ? m : 2.0 * m + (j - 1) * m / 5.0);
    s.overlaps_in.push_back(c);
    s.overlaps_out.push_back(c);
  }
  return s;
}

namespace {

const Mat& current_of(const SpectralModel& m) {
  if (!m.current) throw std::invalid_argument("model carries no current matrix elements");
  return *m.current;
}

Mat pair_of(const SpectralModel& m, double tc) {
  if (m.current_pair) return m.current_pair(tc);
  const Mat& j = current_of(m);
  Vec ph(long(m.size()));
  for (size_t n = 0; n < m.size(); ++n) ph(long(n)) = std::exp(I1 * tc * m.energies[n]);
  return ph.asDiagonal() * j * ph.conjugate().asDiagonal() * j;
}

cplx double_sum(const SpectralModel& m, const Mat& el, const Vec& wf, const Vec& wi) {
  cplx s = 0.0;
  for (size_t f = 0; f < m.size(); ++f)
    for (size_t i = 0; i < m.size(); ++i)
      s += wf(long(f)) * m.overlaps_out[f] * el(long(f), long(i)) * m.overlaps_in[i] * wi(long(i));
  return s;
}

}  // namespace

cplx c3pt(const SpectralModel& model, double t_f, double t_i) {
  model.validate();
  Vec wf(long(model.size())), wi(long(model.size()));
  for (size_t n = 0; n < model.size(); ++n) {
    wf(long(n)) = std::exp(-I1 * t_f * model.energies[n]);
    wi(long(n)) = std::exp(I1 * t_i * model.energies[n]);
  }
  return double_sum(model, current_of(model), wf, wi);
}

cplx ft_c3pt(const SpectralModel& model, cplx omega_f, cplx omega_i, double T_f, double T_i) {
  model.validate();
  check_omega(omega_f);
  check_omega(omega_i);
  Vec wf(long(model.size())), wi(long(model.size()));
  for (size_t n = 0; n < model.size(); ++n) {
    wf(long(n)) = kernel_continuous(omega_f - model.energies[n], T_f);
    wi(long(n)) = kernel_continuous(omega_i - model.energies[n], T_i);
  }
  return double_sum(model, current_of(model), wf, wi);
}

cplx c4pt(const SpectralModel& model, double t_f, double t_c, double t_i) {
  model.validate();
  if (!(t_f >= t_c && t_c >= 0.0 && t_i <= 0.0))
    throw std::invalid_argument("c4pt needs t_f >= t_c >= 0 >= t_i");
  Vec wf(long(model.size())), wi(long(model.size()));
  for (size_t n = 0; n < model.size(); ++n) {
    wf(long(n)) = std::exp(-I1 * t_f * model.energies[n]);
    wi(long(n)) = std::exp(I1 * t_i * model.energies[n]);
  }
  return double_sum(model, pair_of(model, t_c), wf, wi);
}

cplx ft_c4pt(const SpectralModel& model, cplx omega_f, cplx omega_i, double t_c, double T_f, double T_i) {
  model.validate();
  check_omega(omega_f);
  check_omega(omega_i);
  if (t_c < 0.0 || T_f < t_c) throw std::invalid_argument("ft_c4pt needs T_f >= t_c >= 0");
  Vec wf(long(model.size())), wi(long(model.size()));
  for (size_t n = 0; n < model.size(); ++n) {
    wf(long(n)) = kernel_window(omega_f - model.energies[n], t_c, T_f);
    wi(long(n)) = kernel_continuous(omega_i - model.energies[n], T_i);
  }
  return double_sum(model, pair_of(model, t_c), wf, wi);
}

SpectralModel diagonalize(const Mat& h, const Vec& l_in, const Vec& l_out, const Mat* current) {
  if (h.rows() != l_in.size() || h.rows() != l_out.size()) throw std::invalid_argument("diagonalize: size mismatch");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
  if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver failed");
  const Mat& v = es.eigenvectors();
  SpectralModel m;
  Vec in = v.adjoint() * l_in;
  Vec out = l_out.adjoint() * v;
  for (long n = 0; n < h.rows(); ++n) {
    m.energies.push_back(es.eigenvalues()(n));
    m.overlaps_in.push_back(in(n));
    m.overlaps_out.push_back(out(n));
  }
  if (current) m.current = Mat(v.adjoint() * (*current) * v);
  return m;
}

std::vector<Peak> extract_peaks(const FrequencyScan& scan) {
  const size_t n = scan.values.size();
  if (n < 3 || scan.omega_re.size() != n) throw std::invalid_argument("extract_peaks: need at least 3 grid points");
  std::vector<double> a(n);
  for (size_t i = 0; i < n; ++i) a[i] = std::abs(scan.values[i]);
  std::vector<Peak> out;
  for (size_t i = 1; i + 1 < n; ++i) {
    if (!(a[i] > a[i - 1] && a[i] >= a[i + 1])) continue;
    Peak p;
    p.index = i;
    double h = 0.5 * (scan.omega_re[i + 1] - scan.omega_re[i - 1]);
    double ym = a[i - 1], y0 = a[i], yp = a[i + 1];
    double curv = ym - 2.0 * y0 + yp;
    if (curv < 0.0) {
      double off = 0.5 * (ym - yp) / curv;
      p.omega = scan.omega_re[i] + off * h;
      p.height = y0 - 0.125 * (ym - yp) * (ym - yp) / curv;
      double a2 = curv / (2.0 * h * h);
      p.half_width = std::sqrt(p.height / (-2.0 * a2));
    } else {
      p.omega = scan.omega_re[i];
      p.height = y0;
      p.half_width = std::numeric_limits<double>::infinity();
    }
    size_t l = i, r = i;
    double lmin = y0, rmin = y0;
    while (l > 0 && a[l - 1] <= y0) lmin = std::min(lmin, a[--l]);
    while (r + 1 < n && a[r + 1] <= y0) rmin = std::min(rmin, a[++r]);
    p.prominence = y0 - std::max(lmin, rmin);
    out.push_back(p);
  }
  return out;
}

std::vector<Peak> prominent_peaks(const FrequencyScan& scan, double rel) {
  std::vector<Peak> out;
  for (const Peak& p : extract_peaks(scan))
    if (p.prominence >= rel * p.height) out.push_back(p);
  return out;
}

std::optional<Peak> dominant_peak(const FrequencyScan& scan) {
  std::optional<Peak> best;
  for (const Peak& p : extract_peaks(scan))
    if (!best || p.height > best->height) best = p;
  return best;
}

std::vector<double> linspace(double a, double b, size_t n) {
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
  return x;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_series_csv(const CorrelatorSeries& s, const std::string& path) {
  s.validate();
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "# lattice units, a = 1\n";
  f << (s.has_variance() ? "t,re,im,var_re,var_im\n" : "t,re,im\n");
  for (size_t i = 0; i < s.times.size(); ++i) {
    f << num(s.times[i]) << ',' << num(s.values[i].real()) << ',' << num(s.values[i].imag());
    if (s.has_variance()) f << ',' << num(s.var_re[i]) << ',' << num(s.var_im[i]);
    f << '\n';
  }
}

CorrelatorSeries read_series_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  CorrelatorSeries s;
  std::string line;
  bool header = false;
  size_t cols = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!header) {
      header = true;
      cols = cells.size();
      if (cols != 3 && cols != 5) throw std::runtime_error("series CSV: expected 3 or 5 columns");
      continue;
    }
    if (cells.size() != cols) throw std::runtime_error("series CSV: ragged row");
    s.times.push_back(std::stod(cells[0]));
    s.values.emplace_back(std::stod(cells[1]), std::stod(cells[2]));
    if (cols == 5) {
      s.var_re.push_back(std::stod(cells[3]));
      s.var_im.push_back(std::stod(cells[4]));
    }
  }
  s.validate();
  return s;
}

std::string scan_csv(const FrequencyScan& s) {
  std::string out = "re_omega,im_omega,re_val,im_val,abs_val\n";
  for (size_t i = 0; i < s.values.size(); ++i)
    out += num(s.omega_re[i]) + ',' + num(s.omega_im) + ',' + num(s.values[i].real()) + ',' +
           num(s.values[i].imag()) + ',' + num(std::abs(s.values[i])) + '\n';
  return out;
}

void write_scan_csv(const FrequencyScan& s, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "# lattice units, a = 1\n" << scan_csv(s);
}

}  // namespace cvq
