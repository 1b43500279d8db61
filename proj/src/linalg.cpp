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

#include "cvq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace cvq {

Mat lower(int d) {
  Mat a = Mat::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

Mat raise(int d) { return lower(d).adjoint(); }

Mat number(int d) {
  Mat n = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k) n(k, k) = double(k);
  return n;
}

Mat quad_q(int d) {
  Mat a = lower(d);
  return (a + a.adjoint()) / std::sqrt(2.0);
}

Mat quad_p(int d) {
  Mat a = lower(d);
  return I1 * (a.adjoint() - a) / std::sqrt(2.0);
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

SpMat kron(const SpMat& a, const SpMat& b) {
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(size_t(a.nonZeros() * b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (SpMat::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (SpMat::InnerIterator ib(b, kb); ib; ++ib)
          trip.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                            ia.value() * ib.value());
  SpMat out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SpMat sparse_identity(long n) {
  SpMat id(n, n);
  id.setIdentity();
  return id;
}

Mat embed_dense(const Mat& op, int mode, int num_modes, int d) {
  Mat out = Mat::Identity(1, 1);
  for (int j = 0; j < num_modes; ++j) out = kron(out, j == mode ? op : Mat(Mat::Identity(d, d)));
  return out;
}

SpMat embed_sparse(const Mat& op, int mode, int num_modes, int d) {
  SpMat out = sparse_identity(1);
  SpMat sop = op.sparseView(0.0, 0.0);
  for (int j = 0; j < num_modes; ++j) out = kron(out, j == mode ? sop : sparse_identity(d));
  return out;
}

Mat hermitian_function(const Mat& h, const std::function<cplx(double)>& f) {
  Mat hs = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(hs);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Vec fv(hs.rows());
  for (long i = 0; i < fv.size(); ++i) fv(i) = f(es.eigenvalues()(i));
  return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().adjoint();
}

Mat expm(const Mat& g, cplx scale, bool hermitian) {
  if (!g.allFinite() || !std::isfinite(scale.real()) || !std::isfinite(scale.imag()))
    throw std::invalid_argument("expm: non-finite entries");
  if (scale == cplx(0.0)) return Mat::Identity(g.rows(), g.cols());
  if (hermitian) return hermitian_function(g, [scale](double x) { return std::exp(scale * x); });
  Mat s = scale * g;
  return s.exp();
}

Mat chebyshev_propagate(const Mat& h, double t, const Mat& cols, double emin, double emax,
                        double tol) {
  return chebyshev_propagate([&h](const Mat& v) -> Mat { return h * v; }, t, cols, emin, emax, tol);
}

Mat chebyshev_propagate(const MatAction& h, double t, const Mat& cols, double emin, double emax,
                        double tol) {
  if (t == 0.0) return cols;
  double half = 0.5 * (emax - emin), mid = 0.5 * (emax + emin);
  if (half <= 0.0) return std::exp(-I1 * t * mid) * cols;
  double z = half * std::abs(t);
  // T_k of the rescaled H, weighted by (-i)^k J_k(z); sign of t folds into i^k.
  cplx step = t > 0 ? -I1 : I1;
  auto scaled = [&](const Mat& v) -> Mat { return (h(v) - mid * v) / half; };
  Mat t0 = cols, t1 = scaled(cols);
  Mat out = std::cyl_bessel_j(0.0, z) * t0 + 2.0 * step * std::cyl_bessel_j(1.0, z) * t1;
  cplx phase = step;
  for (int k = 2;; ++k) {
    Mat t2 = 2.0 * scaled(t1) - t0;
    phase *= step;
    double jk = std::cyl_bessel_j(double(k), z);
    out += 2.0 * phase * jk * t2;
    t0.swap(t1);
    t1.swap(t2);
    if (k > z && std::abs(jk) < tol) break;
    if (k > 10 * z + 200) throw std::runtime_error("chebyshev_propagate: no convergence");
  }
  return std::exp(-I1 * t * mid) * out;
}

std::pair<double, double> gershgorin_bounds(const Mat& h) {
  double lo = 1e300, hi = -1e300;
  for (long i = 0; i < h.rows(); ++i) {
    double r = h.row(i).cwiseAbs().sum() - std::abs(h(i, i));
    lo = std::min(lo, h(i, i).real() - r);
    hi = std::max(hi, h(i, i).real() + r);
  }
  return {lo, hi};
}

RMat hermite_functions(int nmax, const RVec& x) {
  RMat h(nmax + 1, x.size());
  const double c0 = std::pow(kPi, -0.25);
  for (long i = 0; i < x.size(); ++i) {
    double xi = x(i);
    double p0 = c0 * std::exp(-0.5 * xi * xi);
    h(0, i) = p0;
    if (nmax == 0) continue;
    double p1 = std::sqrt(2.0) * xi * p0;
    h(1, i) = p1;
    for (int n = 2; n <= nmax; ++n) {
      double p2 = std::sqrt(2.0 / n) * xi * p1 - std::sqrt((n - 1.0) / n) * p0;
      h(n, i) = p2;
      p0 = p1;
      p1 = p2;
    }
  }
  return h;
}

double opnorm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

double hermiticity_defect(const Mat& a) { return (a - a.adjoint()).cwiseAbs().maxCoeff(); }

namespace {

template <class Pred>
std::vector<long> select_states(int num_modes, int d, Pred keep) {
  long total = 1;
  for (int j = 0; j < num_modes; ++j) total *= d;
  std::vector<long> out;
  std::vector<int> digits(size_t(num_modes), 0);
  for (long i = 0; i < total; ++i) {
    long r = i;
    for (int j = num_modes - 1; j >= 0; --j) {
      digits[size_t(j)] = int(r % d);
      r /= d;
    }
    if (keep(digits)) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<long> block_per_mode(int num_modes, int d, int nmax) {
  return select_states(num_modes, d, [nmax](const std::vector<int>& n) {
    for (int v : n)
      if (v > nmax) return false;
    return true;
  });
}

std::vector<long> block_total(int num_modes, int d, int nmax) {
  return select_states(num_modes, d, [nmax](const std::vector<int>& n) {
    int s = 0;
    for (int v : n) s += v;
    return s <= nmax;
  });
}

Mat restrict(const Mat& a, const std::vector<long>& idx) { return restrict(a, idx, idx); }

Mat restrict(const Mat& a, const std::vector<long>& rows, const std::vector<long>& cols) {
  Mat out(long(rows.size()), long(cols.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) out(long(i), long(j)) = a(rows[i], cols[j]);
  return out;
}

std::vector<long> level_map(int num_modes, int dp, int d) { return block_per_mode(num_modes, dp, d - 1); }

Mat project_levels(const Mat& a, int num_modes, int dp, int d) {
  if (dp == d) return a;
  return restrict(a, level_map(num_modes, dp, d));
}

}  // namespace cvq
