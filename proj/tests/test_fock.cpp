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
#include <cstdio>
#include <filesystem>

#include "cvq/fock.hpp"

using namespace cvq;
using Catch::Approx;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

TEST_CASE("ladder operator acts on number states", "[fock]") {
  const ModeOperator a = ladder_lower(4);
  FockState one = FockState::basis({1}, 4);
  const FockState r = embed(a, {0}, one);
  CHECK(std::abs(r.amp({0}) - 1.0) < 1e-15);
  CHECK(r.amps.norm() == Approx(1.0));
  const FockState z = embed(a, {0}, FockState::vacuum(1, 4));
  CHECK(z.amps.norm() == 0.0);
  const ModeOperator n = number_op(4);
  CHECK(std::abs(expectation(n, {0}, FockState::basis({3}, 4)) - 3.0) < 1e-14);
}

TEST_CASE("quadratures are canonical below the cutoff", "[fock]") {
  const int k = 10;
  auto [q, p] = quadratures(k);
  CHECK(q.hermitian);
  CHECK(hermiticity_defect(p.m) < 1e-15);
  const Mat c = q.m * p.m - p.m * q.m;
  const Mat blk = c.topLeftCorner(k, k);
  CHECK((blk - I1 * Mat::Identity(k, k)).norm() < 1e-13);
  CHECK(std::abs((q.m * q.m)(0, 0) - 0.5) < 1e-15);
  CHECK(std::abs(q.m(1, 0) - 1.0 / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("embed applies operators on the chosen modes", "[fock]") {
  const int k = 3;
  FockState st = FockState::basis({0, 2}, k);
  Mat id = Mat::Identity(k + 1, k + 1);
  const FockState same = embed(ModeOperator(1, k, id), {1}, st);
  CHECK(same.amps == st.amps);
  const FockState r = embed(ladder_lower(k), {1}, st);
  CHECK(std::abs(r.amp({0, 1}) - std::sqrt(2.0)) < 1e-14);
  // a^+ (x) a on |1,1> against a dense Kronecker oracle.
  const Mat op2 = kron(raise(k + 1), lower(k + 1));
  const FockState r2 = embed(ModeOperator(2, k, op2), {0, 1}, FockState::basis({1, 1}, k));
  const Vec dense = kron(raise(k + 1), lower(k + 1)) * FockState::basis({1, 1}, k).amps;
  CHECK((r2.amps - dense).norm() < 1e-14);
  CHECK(std::abs(r2.amp({2, 0}) - std::sqrt(2.0)) < 1e-14);
  // Reversed targets swap the factor order.
  const FockState r3 = embed(ModeOperator(2, k, op2), {1, 0}, FockState::basis({1, 1}, k));
  CHECK(std::abs(r3.amp({0, 2}) - std::sqrt(2.0)) < 1e-14);
  CHECK_THROWS(embed(ladder_lower(k), {2}, st));
  CHECK_THROWS(embed(ModeOperator(2, k, op2), {0}, st));
  CHECK_THROWS(embed(ModeOperator(2, k, op2), {1, 1}, st));
}

TEST_CASE("expm_apply matches closed forms", "[fock]") {
  const int k = 6;
  const FockState st = FockState::basis({3}, k);
  CHECK(expm_apply(number_op(k), 0.0, {0}, st).amps == st.amps);
  const double th = 0.37;
  const FockState r = expm_apply(number_op(k), cplx(0.0, -th), {0}, st);
  CHECK(std::abs(r.amp({3}) - std::exp(cplx(0.0, -3.0 * th))) < 1e-12);

  // Single-mode squeezed vacuum series at K = 40:
  // c_{2n} = tanh^n r sqrt((2n)!) / (2^n n! sqrt(cosh r)); Var Q = e^{2r}/2.
  const int kk = 40;
  const double sr = 0.3;
  const Mat a = lower(kk + 1), ad = raise(kk + 1);
  const ModeOperator g(1, kk, 0.5 * (ad * ad - a * a));
  const FockState sq = expm_apply(g, sr, {0}, FockState::vacuum(1, kk));
  double worst = 0.0;
  for (int n = 0; 2 * n <= 20; ++n) {
    const double c = std::pow(std::tanh(sr), n) * std::sqrt(factorial(2 * n)) /
                     (std::pow(2.0, n) * factorial(n) * std::sqrt(std::cosh(sr)));
    worst = std::max(worst, std::abs(sq.amp({2 * n}) - c));
    CHECK(std::abs(sq.amp({2 * n + 1})) < 1e-12);
  }
  CHECK(worst < 1e-10);
  const Mat q = quad_q(kk + 1);
  CHECK(std::abs(sq.amps.dot(q * q * sq.amps) - 0.5 * std::exp(2.0 * sr)) < 1e-10);
}

TEST_CASE("pnr distribution of simple states", "[fock]") {
  auto d = pnr_distribution(FockState::basis({2}, 4));
  REQUIRE(d.size() == 1);
  CHECK(d[0].counts == std::vector<int>{2});
  CHECK(d[0].probability == Approx(1.0));

  FockState bell(2, 2);
  bell.amps(bell.index({0, 1})) = 1.0 / std::sqrt(2.0);
  bell.amps(bell.index({1, 0})) = 1.0 / std::sqrt(2.0);
  d = pnr_distribution(bell);
  REQUIRE(d.size() == 2);
  for (const auto& o : d) CHECK(o.probability == Approx(0.5).epsilon(1e-14));

  // Two-mode squeezed vacuum from its Schmidt series, P(n,n) = tanh^{2n} r / cosh^2 r.
  const int k = 30;
  const double r = 0.5;
  FockState tms(2, k);
  for (int n = 0; n <= k; ++n) tms.amps(tms.index({n, n})) = std::pow(std::tanh(r), n) / std::cosh(r);
  tms.amps.normalize();
  double total = 0.0;
  for (const auto& o : pnr_distribution(tms)) {
    total += o.probability;
    REQUIRE(o.counts[0] == o.counts[1]);
    const int n = o.counts[0];
    CHECK(std::abs(o.probability - std::pow(std::tanh(r), 2 * n) / std::pow(std::cosh(r), 2)) < 1e-12);
  }
  CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("sampling is deterministic and binomially distributed", "[fock]") {
  const Histogram h = sample_pnr(FockState::basis({3}, 4), 100, 1);
  REQUIRE(h.size() == 1);
  CHECK(h.at({3}) == 100);

  FockState u(1, 2);
  u.amps(0) = u.amps(1) = 1.0 / std::sqrt(2.0);
  const Histogram big = sample_pnr(u, 1000000, 42);
  CHECK(std::abs(double(big.at({0})) - 5e5) <= 5.0 * 500.0);
  CHECK(big.at({0}) + big.at({1}) == 1000000);
  CHECK(sample_pnr(u, 1000000, 42) == big);
  CHECK(sample_pnr(u, 1000000, 43) != big);
}

TEST_CASE("sampled histogram converges in total variation", "[fock]") {
  FockState st(1, 6);
  for (int n = 0; n <= 6; ++n) st.amps(n) = cplx(1.0 / (n + 1.0), 0.1 * n);
  st.amps.normalize();
  const auto dist = pnr_distribution(st);
  for (std::int64_t shots : {1000, 100000}) {
    const Histogram h = sample_pnr(st, shots, 9);
    double tv = 0.0;
    for (const auto& o : dist) {
      auto it = h.find(o.counts);
      tv += std::abs(o.probability - (it == h.end() ? 0.0 : double(it->second) / double(shots)));
    }
    CHECK(0.5 * tv <= 3.0 * std::sqrt(double(dist.size()) / double(shots)));
  }
}

TEST_CASE("state json round trip", "[fock]") {
  FockState st(2, 3);
  for (long i = 0; i < st.size(); ++i) st.amps(i) = cplx(std::sin(double(i)), std::cos(2.0 * double(i)));
  const auto j = to_json(st);
  CHECK(j.at("layout") == "mode-major");
  const FockState back = state_from_json(j);
  CHECK(back.num_modes == 2);
  CHECK(back.cutoff == 3);
  CHECK(back.amps == st.amps);
  const auto path = std::filesystem::temp_directory_path() / "cvq_state_roundtrip.json";
  save_state(st, path.string());
  CHECK(load_state(path.string()).amps == st.amps);
  std::filesystem::remove(path);
}

TEST_CASE("pnr probabilities sum to one below the cutoff", "[fock][property]") {
  for (int seed = 0; seed < 5; ++seed) {
    FockState st(2, 4);
    for (long i = 0; i < st.size(); ++i) st.amps(i) = cplx(std::sin(1.3 * double(i + seed)), std::cos(0.7 * double(i * seed)));
    st.amps.normalize();
    double s = 0.0;
    for (const auto& o : pnr_distribution(st)) s += o.probability;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}
