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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cvq/linalg.hpp"

namespace cvq {

// Spectral data behind a correlator. overlaps_in[n] = <n|l_i>,
// overlaps_out[n] = <l_f|n>.
struct SpectralModel {
  std::vector<double> energies;
  std::vector<cplx> overlaps_in;
  std::vector<cplx> overlaps_out;
  // <n_f|J|n_i>, size N x N when present.
  std::optional<Mat> current;
  // <n_f|J(t_c) J(0)|n_i> for a given t_c.
  std::function<Mat(double)> current_pair;

  size_t size() const { return energies.size(); }
  void validate() const;
};

struct CorrelatorSeries {
  std::vector<double> times;
  std::vector<cplx> values;
  std::vector<double> var_re, var_im;  // empty when noiseless

  void validate() const;
  bool has_variance() const { return !var_re.empty(); }
};

struct FrequencyScan {
  std::vector<double> omega_re;
  double omega_im = 0.01;
  std::vector<cplx> values;
};

// Variance of the real and imaginary parts of a transformed value.
struct FtValue {
  cplx value;
  double var_re = 0.0;
  double var_im = 0.0;
};

struct PoleError : std::domain_error {
  using std::domain_error::domain_error;
};

cplx c1pt(const SpectralModel& model, double t);
CorrelatorSeries c1pt_series(const SpectralModel& model, const std::vector<double>& times);

// int_0^T e^{i w t} C(t) dt in closed form.
cplx ft_continuous(const SpectralModel& model, cplx omega, double T);

struct QuadratureResult {
  cplx value;
  double error = 0.0;
};
// Adaptive Simpson on [a, b] with the Richardson-corrected panel estimate.
QuadratureResult integrate(const std::function<cplx(double)>& f, double a, double b, double rel_tol = 1e-10,
                           int max_depth = 40);
// Quadrature variant for a correlator given as a function of time.
QuadratureResult ft_continuous(const std::function<cplx(double)>& corr, cplx omega, double T,
                               double rel_tol = 1e-10);

// Number of steps T / dt; throws unless it is an integer to 1e-9.
long step_count(double dt, double T);
// dt sum_{n=1}^{N_t} e^{i n dt w} C(n dt); the series must hold the samples n dt.
FtValue ft_discrete(const CorrelatorSeries& series, cplx omega, double dt, double T);
FtValue ft_discrete(const std::function<cplx(double)>& corr, cplx omega, double dt, double T);
// Geometric-sum closed form of the same sum.
cplx ft_discrete(const SpectralModel& model, cplx omega, double dt, double T);

// Kernels of the transforms for one frequency difference dw = w - E.
cplx kernel_continuous(cplx dw, double T);
cplx kernel_window(cplx dw, double t0, double T);  // int_{t0}^{T} e^{i dw t} dt
cplx kernel_discrete(cplx dw, double dt, double T);

FrequencyScan scan_continuous(const SpectralModel& model, const std::vector<double>& omega_re, double omega_im,
                              double T);
FrequencyScan scan_discrete(const SpectralModel& model, const std::vector<double>& omega_re, double omega_im,
                            double dt, double T);

// N = 90 states, overlaps 1/sqrt(N), E_0 = m, E_j = 2m + (j - 1) m / 5.
SpectralModel toy_model_fig1(double m = 1.0, int n = 90);

cplx c3pt(const SpectralModel& model, double t_f, double t_i);
cplx ft_c3pt(const SpectralModel& model, cplx omega_f, cplx omega_i, double T_f, double T_i);
// Requires t_f > t_c > 0 > t_i.
cplx c4pt(const SpectralModel& model, double t_f, double t_c, double t_i);
// t_f integrated over [t_c, T_f], t_i over [-T_i, 0].
cplx ft_c4pt(const SpectralModel& model, cplx omega_f, cplx omega_i, double t_c, double T_f, double T_i);

// Eigen-decomposition of H packaged as a model for <l_f| ... |l_i>. The current,
// when given, is rotated into the eigenbasis and J(t_c)J(0) is formed within it.
SpectralModel diagonalize(const Mat& h, const Vec& l_in, const Vec& l_out, const Mat* current = nullptr);

struct Peak {
  double omega = 0.0;       // refined location
  double height = 0.0;      // refined |value|
  double half_width = 0.0;  // from the local parabola, where it falls to half height
  double prominence = 0.0;
  size_t index = 0;         // grid point of the local maximum
};

// Local maxima of |value| (3-point test), parabola-refined.
std::vector<Peak> extract_peaks(const FrequencyScan& scan);
// Peaks whose prominence is at least `rel` of their height.
std::vector<Peak> prominent_peaks(const FrequencyScan& scan, double rel);
// Tallest local maximum; nullopt for a monotone scan.
std::optional<Peak> dominant_peak(const FrequencyScan& scan);

std::vector<double> linspace(double a, double b, size_t n);

void write_series_csv(const CorrelatorSeries& s, const std::string& path);
CorrelatorSeries read_series_csv(const std::string& path);
void write_scan_csv(const FrequencyScan& s, const std::string& path);
std::string scan_csv(const FrequencyScan& s);

}  // namespace cvq
