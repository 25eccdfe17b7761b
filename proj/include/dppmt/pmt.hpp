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

// Public-moment transformation and norm truncation of private samples.
//
// Rows are preconditioned by the inverse square root of a public second
// moment and then clipped to the ball of radius sqrt(d (1 + log(2n/eta))).
// Responses go through the same code path with d = 1.

#ifndef DPPMT_PMT_HPP_
#define DPPMT_PMT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "dppmt/errors.hpp"
#include "dppmt/spectra.hpp"

namespace dppmt {

class TruncationPolicy {
 public:
  TruncationPolicy(std::size_t dim, std::size_t n, double eta)
      : dim_(dim), n_(n), eta_(eta) {
    if (dim < 1 || n < 1) {
      throw InvalidInput("TruncationPolicy: dim and n must be positive");
    }
    if (!(eta > 0.0 && eta < 1.0)) {
      throw InvalidInput("TruncationPolicy: eta must lie in (0,1)");
    }
    radius_ = std::sqrt(static_cast<double>(dim) *
                        (1.0 + std::log(2.0 * static_cast<double>(n) / eta)));
  }

  std::size_t dim() const { return dim_; }
  std::size_t n() const { return n_; }
  double eta() const { return eta_; }
  double radius() const { return radius_; }

 private:
  std::size_t dim_;
  std::size_t n_;
  double eta_;
  double radius_;
};

inline TruncationPolicy scalar_policy(std::size_t n, double eta) {
  return TruncationPolicy(1, n, eta);
}

struct TruncationReport {
  std::size_t total = 0;
  std::size_t truncated = 0;
  double max_norm_seen = 0.0;  // largest input row norm

  double fraction() const {
    return total == 0 ? 0.0
                      : static_cast<double>(truncated) /
                            static_cast<double>(total);
  }
};

struct TruncatedSamples {
  MatrixXd samples;
  TruncationReport report;
};

// Row i of the result is preconditioner * row i of `samples`.
inline MatrixXd transform(const MatrixXd& samples,
                          const SymmetricMatrix& preconditioner_inv_sqrt) {
  if (samples.cols() != preconditioner_inv_sqrt.dim()) {
    throw InvalidInput("transform: samples have " +
                       std::to_string(samples.cols()) +
                       " columns, preconditioner is " +
                       std::to_string(preconditioner_inv_sqrt.dim()) + "x" +
                       std::to_string(preconditioner_inv_sqrt.dim()));
  }
  // (P x)^T = x^T P for symmetric P.
  return samples * preconditioner_inv_sqrt.matrix();
}

// Rescales every row with norm >= radius onto the sphere of that radius.
// Rows strictly inside pass through untouched. The output norm never exceeds
// the radius, which makes the operation idempotent.
inline TruncatedSamples truncate_to_radius(const MatrixXd& samples,
                                           double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidInput("truncate: radius must be positive and finite");
  }
  TruncatedSamples out{samples, {}};
  out.report.total = static_cast<std::size_t>(samples.rows());
  for (Index i = 0; i < samples.rows(); ++i) {
    const double norm = samples.row(i).norm();
    out.report.max_norm_seen = std::max(out.report.max_norm_seen, norm);
    if (norm < radius) continue;
    ++out.report.truncated;
    double scale = radius / norm;
    out.samples.row(i) = samples.row(i) * scale;
    while (out.samples.row(i).norm() > radius) {
      scale = std::nextafter(scale, 0.0);
      out.samples.row(i) = samples.row(i) * scale;
    }
  }
  return out;
}

inline TruncatedSamples truncate(const MatrixXd& samples,
                                 const TruncationPolicy& policy) {
  if (static_cast<std::size_t>(samples.cols()) != policy.dim()) {
    throw InvalidInput("truncate: samples have " +
                       std::to_string(samples.cols()) +
                       " columns, policy expects " +
                       std::to_string(policy.dim()));
  }
  return truncate_to_radius(samples, policy.radius());
}

struct PmtResult {
  MatrixXd samples;
  TruncationReport report;
  SymmetricMatrix inv_sqrt;  // preconditioner actually applied
  std::size_t clamped = 0;   // eigenvalues of the public moment floored
};

// truncate(transform(samples, inv_sqrt(public_moment)),
//          TruncationPolicy(d, n, eta)) with n = samples.rows().
inline PmtResult pmt_pipeline(const MatrixXd& samples,
                              const SymmetricMatrix& public_moment,
                              double eta) {
  if (samples.rows() < 1) throw InvalidInput("pmt_pipeline: no samples");
  const InvSqrtResult root = inv_sqrt(public_moment);
  const TruncationPolicy policy(static_cast<std::size_t>(samples.cols()),
                                static_cast<std::size_t>(samples.rows()), eta);
  TruncatedSamples t = truncate(transform(samples, root.matrix), policy);
  return {std::move(t.samples), t.report, root.matrix, root.clamped};
}

}  // namespace dppmt

#endif  // DPPMT_PMT_HPP_
