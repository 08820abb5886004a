// Copyright 2026 The qctrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file linalg.hpp
 * @brief Dense Hermitian / unitary helpers shared by every module.
 *
 * Conventions used across the library:
 *  - hbar = 1.
 *  - Hermitian matrices are vectorized in the orthonormal basis
 *      { E_ii } ++ { (E_ij + E_ji)/sqrt2, i(E_ij - E_ji)/sqrt2 : i < j, row-major },
 *    so that Tr(AB) = vec(A) . vec(B) for Hermitian A, B.
 *  - log_unitary(U) returns the Hermitian H with U = exp(iH) and spectrum in (-pi, pi].
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "qctrack/errors.hpp"

namespace qctrack {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Checks

inline double hermiticity_defect(const Mat& m) {
  if (m.rows() != m.cols()) return kInf;
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Mat& m, double tol = 1e-12) {
  return hermiticity_defect(m) <= tol;
}

inline double unitarity_defect(const Mat& u) {
  if (u.rows() != u.cols()) return kInf;
  return (u.adjoint() * u - Mat::Identity(u.rows(), u.cols())).norm();
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline void require_square(const Mat& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(std::string(what) + " must be a non-empty square matrix");
  }
}

inline void require_same_dim(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

inline Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

inline Mat hermitian_part(const Mat& m) { return 0.5 * (m + m.adjoint()); }

// ---------------------------------------------------------------------------
// Spectral decompositions

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
struct HermitianEigen {
  RVec values;
  Mat vectors;  // columns
};

inline HermitianEigen hermitian_eigen(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(hermitian_part(h));
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("Hermitian eigendecomposition did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Same as hermitian_eigen but eigenvalues sorted descending (stable on ties).
inline HermitianEigen hermitian_eigen_descending(const Mat& h) {
  const auto asc = hermitian_eigen(h);
  const Eigen::Index n = asc.values.size();
  HermitianEigen out{RVec(n), Mat(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = asc.values(n - 1 - k);
    out.vectors.col(k) = asc.vectors.col(n - 1 - k);
  }
  return out;
}

/// exp(-i h t) for Hermitian h.
inline Mat expi_hermitian(const Mat& h, double t) {
  const auto eig = hermitian_eigen(h);
  CVec phases(eig.values.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::exp(-kI * eig.values(k) * t);
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

/// exp(i a) for Hermitian a.
inline Mat exp_i(const Mat& a) { return expi_hermitian(a, -1.0); }

/// Principal logarithm of a unitary, as a Hermitian generator.
struct UnitaryLog {
  Mat generator;                    // H with U = exp(iH), eigenvalues in (-pi, pi]
  bool branch_cut_warning = false;  // an eigenvalue of U sat within 1e-10 of -1
};

inline UnitaryLog log_unitary(const Mat& u, double unitarity_tol = 1e-8) {
  require_square(u, "log_unitary input");
  if (unitarity_defect(u) >= unitarity_tol) {
    throw InvalidInput("log_unitary requires a unitary matrix (||U^dag U - I||_F = " +
                       std::to_string(unitarity_defect(u)) + ")");
  }
  // A unitary matrix is normal, so its complex Schur form is diagonal up to rounding
  // and the Schur vectors form an orthonormal eigenbasis even for repeated eigenvalues.
  Eigen::ComplexSchur<Mat> schur(u);
  if (schur.info() != Eigen::Success) throw NumericalFailure("Schur decomposition failed");
  const Mat& t = schur.matrixT();
  const Mat& z = schur.matrixU();
  UnitaryLog out;
  RVec angles(u.rows());
  for (Eigen::Index k = 0; k < u.rows(); ++k) {
    const cplx lambda = t(k, k) / std::abs(t(k, k));
    double theta = std::arg(lambda);
    if (std::abs(lambda + 1.0) < 1e-10) {
      out.branch_cut_warning = true;
      theta = kPi;
    }
    if (theta <= -kPi) theta = kPi;
    angles(k) = theta;
  }
  out.generator = hermitian_part(z * angles.cast<cplx>().asDiagonal() * z.adjoint());
  return out;
}

/// Bi-invariant geodesic distance ||log(U^dag V)||_F.
inline double geodesic_distance(const Mat& u, const Mat& v) {
  return log_unitary(u.adjoint() * v).generator.norm();
}

// ---------------------------------------------------------------------------
// Hermitian vectorization

inline Eigen::Index hermitian_vec_size(Eigen::Index n) { return n * n; }

/// Real coordinates of a Hermitian matrix in the orthonormal trace basis.
inline RVec vec_hermitian(const Mat& m, double tol = 1e-10) {
  require_square(m, "vec_hermitian input");
  if (hermiticity_defect(m) > tol) {
    throw InvalidInput("vec_hermitian: matrix is not Hermitian (defect " +
                       std::to_string(hermiticity_defect(m)) + ")");
  }
  const Eigen::Index n = m.rows();
  RVec v(n * n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = m(i, i).real();
  Eigen::Index k = n;
  const double r2 = std::numbers::sqrt2;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const cplx avg = 0.5 * (m(i, j) + std::conj(m(j, i)));
      v(k++) = r2 * avg.real();
      v(k++) = r2 * avg.imag();
    }
  }
  return v;
}

inline Mat unvec_hermitian(const RVec& v) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (n * n != v.size() || n == 0) {
    throw DimensionError("unvec_hermitian: length " + std::to_string(v.size()) +
                         " is not a positive square");
  }
  Mat m = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = v(i);
  Eigen::Index k = n;
  const double r2 = std::numbers::sqrt2;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const cplx z{v(k) / r2, v(k + 1) / r2};
      m(i, j) = z;
      m(j, i) = std::conj(z);
      k += 2;
    }
  }
  return m;
}

/// The orthonormal Hermitian basis whose coordinates vec_hermitian returns.
inline std::vector<Mat> hermitian_basis(Eigen::Index n) {
  std::vector<Mat> basis;
  basis.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index k = 0; k < n * n; ++k) {
    RVec e = RVec::Zero(n * n);
    e(k) = 1.0;
    basis.push_back(unvec_hermitian(e));
  }
  return basis;
}

/// vec(X) for X = i[a, b] with a, b Hermitian (the result is Hermitian).
inline RVec vec_i_commutator(const Mat& a, const Mat& b) {
  return vec_hermitian(hermitian_part(kI * commutator(a, b)));
}

// ---------------------------------------------------------------------------
// Symmetric PSD systems: singular values, condition numbers, pseudo-inverse

/// Condition numbers are reported as infinite below this relative singular value.
inline constexpr double kRankTolerance = 1e-12;
/// Default relative cutoff used when pseudo-inverting Gram matrices.
inline constexpr double kPinvCutoff = 1e-10;

inline RVec singular_values(const RMat& a) {
  if (a.size() == 0) return RVec();
  Eigen::JacobiSVD<RMat> svd(a);
  return svd.singularValues();
}

/// sigma_max / sigma_min of a descending singular value list; infinite when
/// sigma_min < kRankTolerance * sigma_max.
inline double condition_from_singular_values(const RVec& sv) {
  if (sv.size() == 0 || !(sv(0) > 0.0)) {
    throw InvalidInput("condition number of a zero matrix is undefined");
  }
  const double smin = sv(sv.size() - 1);
  if (smin < kRankTolerance * sv(0)) return kInf;
  return sv(0) / smin;
}

inline double condition_number(const RMat& a) { return condition_from_singular_values(singular_values(a)); }

/// Moore-Penrose pseudo-inverse with relative singular value cutoff.
struct Pseudoinverse {
  RMat inverse;
  Eigen::Index rank = 0;
  Eigen::Index dim = 0;
  bool truncated() const { return rank < dim; }
};

inline Pseudoinverse pseudo_inverse(const RMat& a, double rel_cutoff = kPinvCutoff) {
  Eigen::JacobiSVD<RMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& s = svd.singularValues();
  Pseudoinverse out;
  out.dim = std::min(a.rows(), a.cols());
  RVec inv = RVec::Zero(s.size());
  const double cut = s.size() > 0 ? rel_cutoff * s(0) : 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > cut && s(k) > 0.0) {
      inv(k) = 1.0 / s(k);
      ++out.rank;
    }
  }
  out.inverse = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Small constructors used by tests, examples and the harness

inline Mat pauli_x() { Mat m(2, 2); m << 0, 1, 1, 0; return m; }
inline Mat pauli_y() { Mat m(2, 2); m << 0, -kI, kI, 0; return m; }
inline Mat pauli_z() { Mat m(2, 2); m << 1, 0, 0, -1; return m; }

inline Mat diag_matrix(const RVec& d) { return d.cast<cplx>().asDiagonal(); }

inline Mat projector(const CVec& psi) {
  const CVec n = psi / psi.norm();
  return n * n.adjoint();
}

}  // namespace qctrack
