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

#include "cvq/correlator.hpp"
#include "cvq/lattice.hpp"

using namespace cvq;

namespace {

SpectralModel single(double e, cplx ov = 1.0) {
  SpectralModel m;
  m.energies = {e};
  m.overlaps_in = {ov};
  m.overlaps_out = {1.0};
  return m;
}

SpectralModel two_state() {
  SpectralModel m;
  m.energies = {1.0, 2.5};
  m.overlaps_in = {cplx(0.8, 0.1), cplx(0.3, -0.5)};
  m.overlaps_out = {cplx(0.7, -0.2), cplx(0.4, 0.3)};
  Mat j(2, 2);
  j << 0.9, cplx(0.2, 0.3), cplx(0.2, -0.3), -0.4;
  m.current = j;
  return m;
}

// int_{a}^{b} dt_f int_{-Ti}^{0} dt_i e^{i wf t_f} e^{-i wi t_i} f(t_f, t_i) by nested adaptive quadrature.
cplx double_integral(const std::function<cplx(double, double)>& f, cplx wf, cplx wi, double a, double b, double ti) {
  return integrate(
             [&](double tf) {
               return std::exp(I1 * wf * tf) *
                      integrate([&](double t) { return std::exp(-I1 * wi * t) * f(tf, t); }, -ti, 0.0, 1e-11).value;
             },
             a, b, 1e-10)
      .value;
}

}  // namespace

TEST_CASE("one-point correlator from the spectrum", "[correlator]") {
  const SpectralModel toy = toy_model_fig1();
  cplx s = 0.0;
  for (size_t n = 0; n < toy.size(); ++n) s += toy.overlaps_out[n] * toy.overlaps_in[n];
  CHECK(std::abs(c1pt(toy, 0.0) - s) < 1e-14);
  for (double t : {0.0, 1.3, 17.0}) CHECK(std::abs(std::abs(c1pt(single(0.7), t)) - 1.0) < 1e-15);
  cplx direct = 0.0;
  for (int n = 0; n < 90; ++n) {
    const double e = n == 0 ? 1.0 : 2.0 + (n - 1) / 5.0;
    direct += std::exp(cplx(0.0, -e)) / 90.0;
  }
  CHECK(std::abs(c1pt(toy, 1.0) - direct) < 1e-14);
}

TEST_CASE("toy model of the single stable particle", "[correlator]") {
  const double m = 1.7;
  const SpectralModel t = toy_model_fig1(m);
  REQUIRE(t.size() == 90);
  double norm = 0.0;
  for (auto o : t.overlaps_out) norm += std::norm(o);
  CHECK(std::abs(norm - 1.0) < 1e-14);
  CHECK(t.energies[0] == Catch::Approx(m));
  CHECK(t.energies[1] == Catch::Approx(2.0 * m));
  CHECK(std::abs(t.energies[89] - (2.0 * m + 88.0 * m / 5.0)) < 1e-12);
}

TEST_CASE("continuous transform", "[correlator]") {
  const double T = 10.0;
  const SpectralModel s = single(1.0);
  for (double dw : {1e-3, 1e-4}) {
    const cplx v = ft_continuous(s, cplx(1.0 + dw, 1e-6), T);
    CHECK(std::abs(v - T) <= T * T * (dw + 1e-6));
  }
  CHECK(std::abs(ft_continuous(s, cplx(1.2, 0.01), 0.0)) == 0.0);
  CHECK_THROWS_AS(ft_continuous(s, cplx(1.0, 0.0), T), PoleError);
  const SpectralModel toy = toy_model_fig1();
  for (double w : {0.8, 1.0, 2.3}) {
    const cplx om(w, 0.01);
    const auto q = ft_continuous([&](double t) { return c1pt(toy, t); }, om, T, 1e-10);
    CHECK(std::abs(q.value - ft_continuous(toy, om, T)) < 1e-6);
  }
}

TEST_CASE("discrete transform", "[correlator]") {
  const SpectralModel s = single(1.0);
  const cplx om(0.9, 0.01);
  // Geometric-sum identity against the explicit sum.
  const cplx closed = ft_discrete(s, om, 0.1, 10.0);
  const cplx sum = ft_discrete([&](double t) { return c1pt(s, t); }, om, 0.1, 10.0).value;
  CHECK(std::abs(closed - sum) < 1e-10);
  const cplx z = 0.1 * std::exp(I1 * 0.1 * om) * c1pt(s, 0.1);
  CHECK(std::abs(ft_discrete(s, om, 0.1, 0.1) - z) < 1e-15);
  CHECK_THROWS(ft_discrete(s, om, 0.3, 1.0));
  // Convergence to the continuous transform, first order in dt.
  const SpectralModel toy = toy_model_fig1();
  const cplx cont = ft_continuous(toy, om, 10.0);
  std::vector<double> err;
  for (double dt : {0.04, 0.02, 0.01}) err.push_back(std::abs(ft_discrete(toy, om, dt, 10.0) - cont));
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
  CHECK(std::log(err[0] / err[2]) / std::log(4.0) >= 0.9);
}

TEST_CASE("series input and csv round trip", "[correlator]") {
  const SpectralModel toy = toy_model_fig1();
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(0.1 * i);
  CorrelatorSeries s = c1pt_series(toy, t);
  const cplx om(1.1, 0.01);
  CHECK(std::abs(ft_discrete(s, om, 0.1, 10.0).value - ft_discrete(toy, om, 0.1, 10.0)) < 1e-12);
  s.var_re.assign(t.size(), 1e-4);
  s.var_im.assign(t.size(), 2e-4);
  const FtValue v = ft_discrete(s, om, 0.1, 10.0);
  double w = 0.0;
  for (int n = 1; n <= 100; ++n) w += 0.01 * std::exp(-2.0 * 0.01 * 0.1 * n);
  CHECK(v.var_re + v.var_im == Catch::Approx(w * 3e-4).epsilon(1e-12));
  const auto path = std::filesystem::temp_directory_path() / "cvq_series.csv";
  write_series_csv(s, path.string());
  const CorrelatorSeries back = read_series_csv(path.string());
  std::filesystem::remove(path);
  REQUIRE(back.times.size() == s.times.size());
  for (size_t i = 0; i < s.times.size(); ++i) {
    CHECK(back.times[i] == s.times[i]);
    CHECK(back.values[i] == s.values[i]);
  }
}

TEST_CASE("transforms are linear in the overlaps", "[correlator][property]") {
  SpectralModel a = toy_model_fig1(), b = a, sum = a;
  for (size_t n = 0; n < a.size(); ++n) {
    b.overlaps_in[n] = cplx(std::sin(double(n)), std::cos(3.0 * double(n))) / 90.0;
    sum.overlaps_in[n] = 2.0 * a.overlaps_in[n] - cplx(0.0, 1.5) * b.overlaps_in[n];
  }
  const cplx om(1.3, 0.02);
  CHECK(std::abs(ft_continuous(sum, om, 7.0) - (2.0 * ft_continuous(a, om, 7.0) - cplx(0.0, 1.5) * ft_continuous(b, om, 7.0))) <
        1e-12);
  CHECK(std::abs(ft_discrete(sum, om, 0.1, 7.0) -
                 (2.0 * ft_discrete(a, om, 0.1, 7.0) - cplx(0.0, 1.5) * ft_discrete(b, om, 0.1, 7.0))) < 1e-12);
}

TEST_CASE("three-point correlator", "[correlator]") {
  SpectralModel m = two_state();
  const cplx wf(1.1, 0.05), wi(0.9, 0.05);
  // Identity current factorizes into two one-point kernels.
  SpectralModel id = m;
  id.current = Mat::Identity(2, 2);
  cplx fact = 0.0;
  for (size_t n = 0; n < 2; ++n)
    fact += m.overlaps_out[n] * m.overlaps_in[n] * kernel_continuous(wf - m.energies[n], 3.0) *
            kernel_continuous(wi - m.energies[n], 2.0);
  CHECK(std::abs(ft_c3pt(id, wf, wi, 3.0, 2.0) - fact) < 1e-12);
  const cplx q = double_integral([&](double tf, double ti) { return c3pt(m, tf, ti); }, wf, wi, 0.0, 3.0, 2.0);
  CHECK(std::abs(ft_c3pt(m, wf, wi, 3.0, 2.0) - q) < 1e-6);

  // Peak near (E0, E0) for a well-gapped model.
  SpectralModel g = m;
  g.energies = {1.0, 4.0};
  double best = 0.0, bf = 0.0, bi = 0.0;
  for (double f = 0.5; f <= 1.5001; f += 0.05)
    for (double i = 0.5; i <= 1.5001; i += 0.05) {
      const double v = std::abs(ft_c3pt(g, cplx(f, 0.02), cplx(i, 0.02), 30.0, 30.0));
      if (v > best) {
        best = v;
        bf = f;
        bi = i;
      }
    }
  CHECK(std::abs(bf - 1.0) < 0.051);
  CHECK(std::abs(bi - 1.0) < 0.051);
}

TEST_CASE("four-point correlator", "[correlator]") {
  SpectralModel m = two_state();
  const Mat j = *m.current;
  const cplx wf(1.2, 0.05), wi(0.8, 0.05);
  // t_c -> 0: J(0) J(0) = J^2 in the three-point kernel with window [0, T_f].
  SpectralModel sq = m;
  sq.current = Mat(j * j);
  CHECK(std::abs(ft_c4pt(m, wf, wi, 0.0, 3.0, 2.0) - ft_c3pt(sq, wf, wi, 3.0, 2.0)) < 1e-12);
  CHECK(std::abs(c4pt(m, 1.0, 0.0, -0.5) - c3pt(sq, 1.0, -0.5)) < 1e-12);
  // J(t_c) = e^{i t_c E} J e^{-i t_c E} in the energy basis.
  const double tc = 0.7;
  const cplx q = double_integral([&](double tf, double ti) { return c4pt(m, tf, tc, ti); }, wf, wi, tc, 3.0, 2.0);
  CHECK(std::abs(ft_c4pt(m, wf, wi, tc, 3.0, 2.0) - q) < 1e-6);
  CHECK(std::abs(ft_c4pt(m, wf, wi, 2.0, 2.0, 2.0)) < 1e-15);
  CHECK_THROWS(c4pt(m, 0.5, 0.7, -0.1));
}

TEST_CASE("peak extraction", "[correlator]") {
  const auto grid = linspace(0.5, 1.5, 201);
  const FrequencyScan s = scan_continuous(single(1.013), grid, 0.01, 50.0);
  const auto peaks = extract_peaks(s);
  REQUIRE(!peaks.empty());
  const auto top = dominant_peak(s);
  REQUIRE(top);
  CHECK(std::abs(top->omega - 1.013) < grid[1] - grid[0]);

  const SpectralModel toy = toy_model_fig1();
  const auto fine = linspace(0.5, 1.5, 1001);
  const auto p100 = dominant_peak(scan_discrete(toy, fine, 0.01, 0.1, 100.0));
  const auto p10 = dominant_peak(scan_discrete(toy, fine, 0.01, 0.1, 10.0));
  REQUIRE(p100);
  REQUIRE(p10);
  CHECK(std::abs(p100->omega - 1.0) < 0.02);
  CHECK(p100->half_width < p10->half_width);

  FrequencyScan mono;
  mono.omega_re = {0.0, 1.0, 2.0, 3.0};
  mono.values = {1.0, 2.0, 3.0, 4.0};
  CHECK(extract_peaks(mono).empty());
  CHECK(!dominant_peak(mono));
  FrequencyScan tiny;
  tiny.omega_re = {0.0, 1.0};
  tiny.values = {1.0, 2.0};
  CHECK_THROWS(extract_peaks(tiny));
}

TEST_CASE("spectral correlator agrees with direct evolution", "[correlator][property]") {
  ModelParams p;
  p.L = 2;
  p.K = 2;
  p.lam = 0.3;
  p.dm = 0.05;
  const Mat h = exact_hamiltonian(p);
  const FockState src = FockState::basis({1, 0, 0, 1}, p.K);
  const SpectralModel sm = diagonalize(h, src.amps, src.amps);
  for (double t : {0.3, 1.7, 5.0}) {
    const Vec v = expm(h, cplx(0.0, -t), true) * src.amps;
    CHECK(std::abs(src.amps.dot(v) - c1pt(sm, t)) < 1e-8);
  }
}
