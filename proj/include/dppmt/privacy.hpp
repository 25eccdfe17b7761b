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

// zCDP budgets, Gaussian-mechanism calibration and sampling, and budget
// composition. All logarithms are natural.

#ifndef DPPMT_PRIVACY_HPP_
#define DPPMT_PRIVACY_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dppmt/errors.hpp"
#include "dppmt/random.hpp"
#include "dppmt/spectra.hpp"

namespace dppmt {

// A rho-zCDP budget, rho > 0.
class PrivacyBudget {
 public:
  explicit PrivacyBudget(double rho) : rho_(rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      throw InvalidInput("PrivacyBudget: rho must be positive and finite");
    }
  }
  double rho() const { return rho_; }

 private:
  double rho_;
};

struct DpGuarantee {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct NoiseScales {
  double sigma1 = 0.0;  // per-entry std of the matrix noise
  double sigma2 = 0.0;  // per-coordinate std of the vector noise
};

// (rho + 2 sqrt(rho log(1/delta)), delta)-DP.
inline DpGuarantee zcdp_to_dp(const PrivacyBudget& budget, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidInput("zcdp_to_dp: delta must lie in (0,1)");
  }
  const double rho = budget.rho();
  return {rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta)), delta};
}

// Std of the Gaussian mechanism achieving rho-zCDP for L2 sensitivity
// `sensitivity`.
inline double gaussian_sigma(double sensitivity, const PrivacyBudget& budget) {
  return sensitivity / std::sqrt(2.0 * budget.rho());
}

namespace detail {

inline void check_scale_args(const char* who, std::size_t d, std::size_t n,
                             double eta) {
  if (d < 1 || n < 1) {
    throw InvalidInput(std::string(who) + ": d and n must be positive");
  }
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidInput(std::string(who) + ": eta must lie in (0,1)");
  }
}

inline double log_term(std::size_t n, double eta) {
  return 1.0 + std::log(2.0 * static_cast<double>(n) / eta);
}

}  // namespace detail

// Frobenius sensitivity of (1/n) sum x x^T over rows clipped to the radius
// sqrt(d (1 + log(2n/eta))).
inline double matrix_sensitivity(std::size_t d, std::size_t n, double eta) {
  detail::check_scale_args("matrix_sensitivity", d, n, eta);
  return 2.0 * static_cast<double>(d) * detail::log_term(n, eta) /
         static_cast<double>(n);
}

// L2 sensitivity of (1/n) sum x y with x clipped to sqrt(d (1 + log(2n/eta)))
// and y to sqrt(1 + log(2n/eta)).
inline double vector_sensitivity(std::size_t d, std::size_t n, double eta) {
  detail::check_scale_args("vector_sensitivity", d, n, eta);
  return 2.0 * std::sqrt(static_cast<double>(d)) * detail::log_term(n, eta) /
         static_cast<double>(n);
}

inline double matrix_noise_scale(std::size_t d, std::size_t n, double eta,
                                 const PrivacyBudget& budget) {
  return gaussian_sigma(matrix_sensitivity(d, n, eta), budget);
}

inline double vector_noise_scale(std::size_t d, std::size_t n, double eta,
                                 const PrivacyBudget& budget) {
  return gaussian_sigma(vector_sensitivity(d, n, eta), budget);
}

// Upper-triangle entries (diagonal included) drawn i.i.d. N(0, sigma^2) in
// column-major order over j, i <= j; the lower triangle is mirrored.
inline SymmetricMatrix sample_symmetric_gaussian(Index d, double sigma,
                                                 RandomStream& rng) {
  if (d < 1) throw InvalidInput("sample_symmetric_gaussian: d must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidInput("sample_symmetric_gaussian: sigma must be >= 0");
  }
  MatrixXd w(d, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double v = sigma * rng.normal();
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return SymmetricMatrix(w);
}

// sigma == 0 is allowed and yields zeros; the stream advances either way.
inline VectorXd sample_gaussian_vector(Index d, double sigma,
                                       RandomStream& rng) {
  if (d < 1) throw InvalidInput("sample_gaussian_vector: d must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidInput("sample_gaussian_vector: sigma must be >= 0");
  }
  VectorXd g(d);
  for (Index i = 0; i < d; ++i) g(i) = sigma * rng.normal();
  return g;
}

// Append-only record of zCDP spending. A value type: compose() returns a new
// ledger and leaves the receiver untouched.
class BudgetLedger {
 public:
  struct Entry {
    std::string label;
    double rho_spent;
  };

  const std::vector<Entry>& entries() const { return entries_; }

  // Sum in insertion order.
  double total() const {
    double t = 0.0;
    for (const Entry& e : entries_) t += e.rho_spent;
    return t;
  }

  BudgetLedger compose(std::string label, double rho) const {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      throw InvalidInput("compose: rho must be positive and finite");
    }
    BudgetLedger next = *this;
    next.entries_.push_back({std::move(label), rho});
    return next;
  }

  friend bool operator==(const BudgetLedger& a, const BudgetLedger& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
      if (a.entries_[i].label != b.entries_[i].label ||
          a.entries_[i].rho_spent != b.entries_[i].rho_spent) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Entry> entries_;
};

inline BudgetLedger compose(const BudgetLedger& ledger, std::string label,
                            double rho) {
  return ledger.compose(std::move(label), rho);
}

}  // namespace dppmt

#endif  // DPPMT_PRIVACY_HPP_
