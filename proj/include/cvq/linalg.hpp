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

#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cvq {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<cplx>;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I1{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// Single-mode operators at Hilbert dimension d (cutoff d-1).
Mat lower(int d);
Mat raise(int d);
Mat number(int d);
Mat quad_q(int d);
Mat quad_p(int d);

Mat kron(const Mat& a, const Mat& b);
SpMat kron(const SpMat& a, const SpMat& b);
SpMat sparse_identity(long n);

// Places a single-mode matrix on `mode` of an M-mode register, identity elsewhere.
Mat embed_dense(const Mat& op, int mode, int num_modes, int d);
SpMat embed_sparse(const Mat& op, int mode, int num_modes, int d);

// f(H) for Hermitian H through its eigendecomposition.
Mat hermitian_function(const Mat& h, const std::function<cplx(double)>& f);
// exp(scale * g). Hermitian g goes through the eigendecomposition, anything
// else through scaling and squaring.
Mat expm(const Mat& g, cplx scale, bool hermitian);

// exp(-i t H) applied to the columns of `cols` by a Chebyshev expansion.
// [emin, emax] must enclose the spectrum of H.
using MatAction = std::function<Mat(const Mat&)>;
Mat chebyshev_propagate(const MatAction& h, double t, const Mat& cols, double emin, double emax,
                        double tol = 1e-13);
Mat chebyshev_propagate(const Mat& h, double t, const Mat& cols, double emin, double emax,
                        double tol = 1e-13);
// Gershgorin enclosure of the spectrum of a Hermitian matrix.
std::pair<double, double> gershgorin_bounds(const Mat& h);

// psi_n(x) = <q = x|n> for n = 0..nmax on the given points, rows indexed by n.
// <p = x|n> = (-i)^n psi_n(x).
RMat hermite_functions(int nmax, const RVec& x);

double opnorm(const Mat& a);
double hermiticity_defect(const Mat& a);

// Basis indices of an M-mode register with every mode occupation <= nmax.
std::vector<long> block_per_mode(int num_modes, int d, int nmax);
// Basis indices with total photon number <= nmax.
std::vector<long> block_total(int num_modes, int d, int nmax);
Mat restrict(const Mat& a, const std::vector<long>& idx);
Mat restrict(const Mat& a, const std::vector<long>& rows, const std::vector<long>& cols);

// Keeps the first `d` levels of every mode of an operator built at dimension `dp`.
Mat project_levels(const Mat& a, int num_modes, int dp, int d);
// Embeds a d-level operator into a dp-level register (zero outside).
std::vector<long> level_map(int num_modes, int dp, int d);

}  // namespace cvq
