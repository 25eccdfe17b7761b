//
// Copyright 2026 The dppmt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Dense symmetric-matrix utilities: eigendecomposition-backed roots and
// inverses, and the conditioning diagnostics used throughout the estimators.

#ifndef DPPMT_SPECTRA_HPP_
#define DPPMT_SPECTRA_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "dppmt/errors.hpp"

namespace dppmt {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// A dense symmetric matrix. The constructor stores (M + M^T) / 2 and mirrors
// the upper triangle onto the lower one, so m(i, j) == m(j, i) bit-exactly.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const MatrixXd& m) {
    if (m.rows() != m.cols()) {
      throw InvalidInput("SymmetricMatrix: matrix is " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
    }
    if (m.rows() < 1) throw InvalidInput("SymmetricMatrix: empty matrix");
    if (!m.allFinite()) {
      throw InvalidInput("SymmetricMatrix: non-finite entry");
    }
    const Index d = m.rows();
    m_.resize(d, d);
    for (Index j = 0; j < d; ++j) {
      for (Index i = 0; i <= j; ++i) {
        const double v = 0.5 * (m(i, j) + m(j, i));
        m_(i, j) = v;
        m_(j, i) = v;
      }
    }
  }

  static SymmetricMatrix identity(Index d) {
    return SymmetricMatrix(MatrixXd::Identity(d, d));
  }

  static SymmetricMatrix diagonal(const VectorXd& diag) {
    return SymmetricMatrix(MatrixXd(diag.asDiagonal()));
  }

  Index dim() const { return m_.rows(); }
  const MatrixXd& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  SymmetricMatrix operator+(const SymmetricMatrix& other) const {
    check_same_dim(other);
    return SymmetricMatrix(m_ + other.m_);
  }
  SymmetricMatrix scaled(double c) const { return SymmetricMatrix(c * m_); }

 private:
  void check_same_dim(const SymmetricMatrix& other) const {
    if (other.dim() != dim()) {
      throw InvalidInput("SymmetricMatrix: dimension mismatch");
    }
  }

  MatrixXd m_;
};

struct EigenDecomposition {
  VectorXd values;   // ascending
  MatrixXd vectors;  // orthonormal columns, vectors.col(i) pairs values(i)
};

inline EigenDecomposition eig_sym(const SymmetricMatrix& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw InvalidInput("eig_sym: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace detail {

// V * diag(f) * V^T
inline SymmetricMatrix reassemble(const EigenDecomposition& e,
                                  const VectorXd& f) {
  return SymmetricMatrix(e.vectors * f.asDiagonal() * e.vectors.transpose());
}

}  // namespace detail

struct InvSqrtResult {
  SymmetricMatrix matrix;
  std::size_t clamped = 0;  // eigenvalues raised to the floor
};

// V * diag(max(lambda_i, floor)^(-1/2)) * V^T.
inline InvSqrtResult inv_sqrt(const SymmetricMatrix& m, double floor) {
  if (!(floor > 0.0) || !std::isfinite(floor)) {
    throw InvalidInput("inv_sqrt: floor must be positive and finite");
  }
  const EigenDecomposition e = eig_sym(m);
  if (e.values.maxCoeff() <= 0.0) {
    throw SingularMatrix("inv_sqrt: spectrum is entirely nonpositive",
                         e.values.minCoeff(), e.values.maxCoeff());
  }
  std::size_t clamped = 0;
  VectorXd f(e.values.size());
  for (Index i = 0; i < e.values.size(); ++i) {
    double lambda = e.values(i);
    if (lambda < floor) {
      lambda = floor;
      ++clamped;
    }
    f(i) = 1.0 / std::sqrt(lambda);
  }
  return {detail::reassemble(e, f), clamped};
}

inline constexpr double kRelativeEigenFloor = 1e-10;

// Floor defaults to 1e-10 * lambda_max.
inline InvSqrtResult inv_sqrt(const SymmetricMatrix& m) {
  const EigenDecomposition e = eig_sym(m);
  const double lambda_max = e.values.maxCoeff();
  if (lambda_max <= 0.0) {
    throw SingularMatrix("inv_sqrt: spectrum is entirely nonpositive",
                         e.values.minCoeff(), lambda_max);
  }
  return inv_sqrt(m, kRelativeEigenFloor * lambda_max);
}

inline SymmetricMatrix sqrt_sym(const SymmetricMatrix& m) {
  const EigenDecomposition e = eig_sym(m);
  const double lambda_max = e.values.maxCoeff();
  const double tol = 1e-10 * std::max(lambda_max, 0.0);
  VectorXd f(e.values.size());
  for (Index i = 0; i < e.values.size(); ++i) {
    const double lambda = e.values(i);
    if (lambda < -tol || (lambda < 0.0 && lambda_max <= 0.0)) {
      throw InvalidInput("sqrt_sym: matrix is not positive semidefinite "
                         "(eigenvalue " + std::to_string(lambda) + ")");
    }
    f(i) = std::sqrt(std::max(lambda, 0.0));
  }
  return detail::reassemble(e, f);
}

inline constexpr double kSingularThreshold = 1e-12;

// Inverse through the eigendecomposition; refuses near-singular input.
inline SymmetricMatrix stable_inverse(const SymmetricMatrix& m) {
  const EigenDecomposition e = eig_sym(m);
  const double lo = e.values.minCoeff();
  const double hi = e.values.maxCoeff();
  if (lo <= kSingularThreshold * hi || hi <= 0.0) {
    throw SingularMatrix("stable_inverse: lambda_min=" + std::to_string(lo) +
                             " lambda_max=" + std::to_string(hi),
                         lo, hi);
  }
  return detail::reassemble(e, e.values.cwiseInverse());
}

struct SpectralDiagnostics {
  VectorXd eigenvalues;  // ascending
  double trace = 0.0;
  double avg_trace = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double cond = kInfinity;      // lambda_max / lambda_min
  double avg_cond = kInfinity;  // mean_i(lambda_i / lambda_min)
};

inline SpectralDiagnostics diagnostics_from_eigenvalues(const VectorXd& ev) {
  SpectralDiagnostics out;
  out.eigenvalues = ev;
  const double d = static_cast<double>(ev.size());
  out.trace = ev.sum();
  out.avg_trace = out.trace / d;
  out.lambda_min = ev.minCoeff();
  out.lambda_max = ev.maxCoeff();
  if (out.lambda_min > 0.0) {
    out.cond = out.lambda_max / out.lambda_min;
    double acc = 0.0;
    for (Index i = 0; i < ev.size(); ++i) acc += ev(i) / out.lambda_min;
    out.avg_cond = acc / d;
  }
  return out;
}

inline SpectralDiagnostics diagnostics(const SymmetricMatrix& m) {
  return diagnostics_from_eigenvalues(eig_sym(m).values);
}

// Brackets L * I <= S^(-1/2) Sigma S^(-1/2) <= U * I for a public estimate S
// from n_pub samples, with the unknown absolute constants set to 1.
struct TheoryBounds {
  double lower_L = 0.0;
  double upper_U = kInfinity;
  std::size_t n_pub = 0;
  double eta = 0.0;
};

inline TheoryBounds theory_bracket(std::size_t d, std::size_t n_pub,
                                   double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidInput("theory_bracket: eta must lie in (0,1)");
  }
  if (d < 1) throw InvalidInput("theory_bracket: d must be positive");
  if (n_pub <= d) {
    throw InsufficientPublicData("theory_bracket: n_pub=" +
                                 std::to_string(n_pub) +
                                 " must exceed d=" + std::to_string(d));
  }
  const double n = static_cast<double>(n_pub);
  const double slack = std::sqrt(static_cast<double>(d)) +
                       std::sqrt(2.0 * std::log(1.0 / eta));
  TheoryBounds b;
  b.n_pub = n_pub;
  b.eta = eta;
  const double hi = std::sqrt(n) + slack;
  b.lower_L = n / (hi * hi);
  const double lo = std::sqrt(n) - slack;
  b.upper_U = lo > 0.0 ? n / (lo * lo) : kInfinity;
  return b;
}

}  // namespace dppmt

#endif  // DPPMT_SPECTRA_HPP_
