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

// Ordinary least squares and its sufficient-statistics-perturbation variants:
//
//   * olse               non-private reference, (X^T X / n)^-1 X^T y / n
//   * dp_pmt_second_moment
//                        private second moment of publicly preconditioned rows
//   * dp_pmtolse         private OLS on rows preconditioned by the public second
//                        moment, mapped back to the original coordinates
//   * dp_olse_baseline   private OLS that only looks at the private data
//
// Each private estimator spends rho on the matrix statistic and rho on the
// cross moment, 2 rho in total.

#ifndef DPPMT_ESTIMATORS_HPP_
#define DPPMT_ESTIMATORS_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dppmt/errors.hpp"
#include "dppmt/pmt.hpp"
#include "dppmt/privacy.hpp"
#include "dppmt/random.hpp"
#include "dppmt/spectra.hpp"

namespace dppmt {

struct LabeledDataset {
  MatrixXd features;  // n x d
  VectorXd responses;  // n
  std::vector<std::string> feature_names;  // optional, d entries when present
  std::string response_name;

  LabeledDataset() = default;
  LabeledDataset(MatrixXd x, VectorXd y, std::vector<std::string> names = {},
                 std::string response = {})
      : features(std::move(x)),
        responses(std::move(y)),
        feature_names(std::move(names)),
        response_name(std::move(response)) {
    validate();
  }

  Index n() const { return features.rows(); }
  Index d() const { return features.cols(); }

  std::string feature_name(Index j) const {
    if (static_cast<std::size_t>(j) < feature_names.size()) {
      return feature_names[static_cast<std::size_t>(j)];
    }
    return "x" + std::to_string(j);
  }

  void validate() const {
    if (features.rows() < 1 || features.cols() < 1) {
      throw InvalidInput("LabeledDataset: need n >= 1 and d >= 1");
    }
    if (features.rows() != responses.size()) {
      throw InvalidInput("LabeledDataset: " + std::to_string(features.rows()) +
                         " feature rows but " +
                         std::to_string(responses.size()) + " responses");
    }
    if (!feature_names.empty() &&
        feature_names.size() != static_cast<std::size_t>(features.cols())) {
      throw InvalidInput("LabeledDataset: feature name count mismatch");
    }
    if (!features.allFinite() || !responses.allFinite()) {
      throw InvalidInput("LabeledDataset: values must be finite");
    }
  }

  LabeledDataset subset(const std::vector<Index>& rows) const {
    MatrixXd x(static_cast<Index>(rows.size()), d());
    VectorXd y(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      x.row(static_cast<Index>(k)) = features.row(rows[k]);
      y(static_cast<Index>(k)) = responses(rows[k]);
    }
    return LabeledDataset(std::move(x), std::move(y), feature_names,
                          response_name);
  }
};

struct PublicMoments {
  SymmetricMatrix feature_moment;  // B^T B / n_B
  double response_moment = 0.0;    // sqrt(sum y_B^2 / n_B)
  std::size_t n_pub = 0;
};

enum class Method { kOlse, kDpOlse, kDpPmtOlse };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::kOlse:
      return "OLSE";
    case Method::kDpOlse:
      return "DP_OLSE";
    case Method::kDpPmtOlse:
      return "DP_PMTOLSE";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "OLSE") return Method::kOlse;
  if (s == "DP_OLSE") return Method::kDpOlse;
  if (s == "DP_PMTOLSE") return Method::kDpPmtOlse;
  throw InvalidInput("unknown method '" + std::string(s) + "'");
}

struct EstimatorOptions {
  // Test hook: forces sigma1 = sigma2 = 0 while running the full pipeline.
  // Output produced with this flag set carries no privacy guarantee.
  bool zero_noise = false;
};

struct EstimatorOutput {
  VectorXd beta;
  Method method = Method::kOlse;
  double rho_total = 0.0;
  BudgetLedger ledger;
  NoiseScales noise;
  TruncationReport feature_truncation;
  TruncationReport response_truncation;
  SpectralDiagnostics pre_diag;   // second moment before noise
  SpectralDiagnostics post_diag;  // after noise
  std::size_t clamp_count = 0;
  bool noise_disabled = false;
  std::vector<std::string> caveats;
};

// Raised when the perturbed second moment is too close to singular to solve.
class UnstableInversion : public SingularMatrix {
 public:
  UnstableInversion(const std::string& what, SpectralDiagnostics post)
      : SingularMatrix(what, post.lambda_min, post.lambda_max),
        post_diag_(std::move(post)) {}
  const SpectralDiagnostics& post_diag() const { return post_diag_; }

 private:
  SpectralDiagnostics post_diag_;
};

namespace detail {

struct SpectralSolve {
  VectorXd x;
  SpectralDiagnostics diag;
};

// Solves m x = b through the eigendecomposition of m. m may be indefinite;
// the solve is refused when min |lambda| <= 1e-12 max |lambda|.
inline SpectralSolve solve_symmetric(const SymmetricMatrix& m,
                                     const VectorXd& b, bool* singular) {
  const EigenDecomposition e = eig_sym(m);
  SpectralSolve out;
  out.diag = diagnostics_from_eigenvalues(e.values);
  const VectorXd mag = e.values.cwiseAbs();
  *singular = !(mag.minCoeff() > kSingularThreshold * mag.maxCoeff());
  if (*singular) return out;
  const VectorXd coeff = (e.vectors.transpose() * b).cwiseQuotient(e.values);
  out.x = e.vectors * coeff;
  return out;
}

inline SymmetricMatrix gram(const MatrixXd& x) {
  return SymmetricMatrix((x.transpose() * x) / static_cast<double>(x.rows()));
}

inline VectorXd cross(const MatrixXd& x, const VectorXd& y) {
  return (x.transpose() * y) / static_cast<double>(x.rows());
}

inline void check_eta(const char* who, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidInput(std::string(who) + ": eta must lie in (0,1)");
  }
}

// Shared tail of both private estimators: perturb, guard, solve.
inline void perturbed_solve(const SymmetricMatrix& moment, const VectorXd& xy,
                            const NoiseScales& scales, RandomStream& rng,
                            EstimatorOutput& out, VectorXd& solution) {
  const Index d = moment.dim();
  const SymmetricMatrix g_mat = sample_symmetric_gaussian(d, scales.sigma1, rng);
  const VectorXd g_vec = sample_gaussian_vector(d, scales.sigma2, rng);
  out.pre_diag = diagnostics(moment);
  bool singular = false;
  SpectralSolve s = solve_symmetric(moment + g_mat, xy + g_vec, &singular);
  out.post_diag = s.diag;
  if (singular) {
    throw UnstableInversion(
        "perturbed second moment is numerically singular (lambda_min=" +
            std::to_string(s.diag.lambda_min) +
            ", lambda_max=" + std::to_string(s.diag.lambda_max) + ")",
        s.diag);
  }
  solution = std::move(s.x);
}

}  // namespace detail

inline EstimatorOutput olse(const LabeledDataset& data) {
  data.validate();
  const SymmetricMatrix moment = detail::gram(data.features);
  const VectorXd xy = detail::cross(data.features, data.responses);
  EstimatorOutput out;
  out.method = Method::kOlse;
  out.pre_diag = diagnostics(moment);
  out.post_diag = out.pre_diag;
  if (!(out.pre_diag.lambda_min >
        kSingularThreshold * out.pre_diag.lambda_max)) {
    throw SingularMatrix("olse: singular design (lambda_min=" +
                             std::to_string(out.pre_diag.lambda_min) + ")",
                         out.pre_diag.lambda_min, out.pre_diag.lambda_max);
  }
  out.beta = moment.matrix().ldlt().solve(xy);
  return out;
}

struct PrivateSecondMoment {
  SymmetricMatrix moment;           // noise-free statistic + G
  SymmetricMatrix noise_free;       // (1/n) sum of transformed outer products
  TruncationReport report;
  std::size_t clamp_count = 0;
  double sigma = 0.0;
  BudgetLedger ledger;
};

// Private second moment of the rows of `samples` after public-moment
// transformation and truncation. Spends exactly `budget`.
inline PrivateSecondMoment dp_pmt_second_moment(
    const MatrixXd& samples, const SymmetricMatrix& public_moment, double eta,
    const PrivacyBudget& budget, RandomStream& rng,
    const EstimatorOptions& options = {}) {
  const PmtResult pmt = pmt_pipeline(samples, public_moment, eta);
  const auto d = static_cast<std::size_t>(samples.cols());
  const auto n = static_cast<std::size_t>(samples.rows());
  const double sigma =
      options.zero_noise ? 0.0 : matrix_noise_scale(d, n, eta, budget);
  const SymmetricMatrix noise_free = detail::gram(pmt.samples);
  const SymmetricMatrix g =
      sample_symmetric_gaussian(samples.cols(), sigma, rng);
  return {noise_free + g,
          noise_free,
          pmt.report,
          pmt.clamped,
          sigma,
          BudgetLedger{}.compose("feature_second_moment", budget.rho())};
}

inline EstimatorOutput dp_pmtolse(const LabeledDataset& data,
                                  const PublicMoments& pub, double eta,
                                  const PrivacyBudget& budget_per_stat,
                                  RandomStream& rng,
                                  const EstimatorOptions& options = {}) {
  data.validate();
  detail::check_eta("dp_pmtolse", eta);
  const Index d = data.d();
  const auto n = static_cast<std::size_t>(data.n());
  if (pub.feature_moment.dim() != d) {
    throw InvalidInput("dp_pmtolse: public moment dimension mismatch");
  }
  if (pub.n_pub <= static_cast<std::size_t>(d)) {
    throw InsufficientPublicData("dp_pmtolse: n_pub=" +
                                 std::to_string(pub.n_pub) +
                                 " must exceed d=" + std::to_string(d));
  }
  if (data.n() <= d) {
    throw InvalidInput("dp_pmtolse: need more private rows than features");
  }
  if (!(pub.response_moment > 0.0) || !std::isfinite(pub.response_moment)) {
    throw InvalidInput("dp_pmtolse: public response moment must be positive");
  }

  EstimatorOutput out;
  out.method = Method::kDpPmtOlse;
  out.noise_disabled = options.zero_noise;

  const PmtResult x = pmt_pipeline(data.features, pub.feature_moment, eta);
  const MatrixXd y_col = data.responses;
  const SymmetricMatrix y_moment(MatrixXd::Constant(
      1, 1, pub.response_moment * pub.response_moment));
  const PmtResult y = pmt_pipeline(y_col, y_moment, eta);
  out.feature_truncation = x.report;
  out.response_truncation = y.report;
  out.clamp_count = x.clamped + y.clamped;

  const auto du = static_cast<std::size_t>(d);
  if (!options.zero_noise) {
    out.noise.sigma1 = matrix_noise_scale(du, n, eta, budget_per_stat);
    out.noise.sigma2 = vector_noise_scale(du, n, eta, budget_per_stat);
  }

  const SymmetricMatrix moment = detail::gram(x.samples);
  const VectorXd xy = detail::cross(x.samples, y.samples.col(0));
  VectorXd beta_transformed;
  detail::perturbed_solve(moment, xy, out.noise, rng, out, beta_transformed);

  // Back to original coordinates: beta = sigma_B * S_B^(-1/2) * beta~.
  out.beta = pub.response_moment * (x.inv_sqrt.matrix() * beta_transformed);
  out.ledger = BudgetLedger{}
                   .compose("feature_second_moment", budget_per_stat.rho())
                   .compose("cross_moment", budget_per_stat.rho());
  out.rho_total = out.ledger.total();
  if (options.zero_noise) {
    out.caveats.emplace_back("zero-noise test hook: output is not private");
  }
  return out;
}

// Truncation radii and noise scales of the private-data-only estimator.
struct BaselineCalibration {
  double feature_radius = 0.0;   // sqrt(Tr(S_A) + d log(2n/eta))
  double response_radius = 0.0;  // sqrt(sigma_A^2 + log(2n/eta))
  NoiseScales noise;
};

inline BaselineCalibration baseline_calibration(double trace_a,
                                                double response_sq_a,
                                                std::size_t d, std::size_t n,
                                                double eta,
                                                const PrivacyBudget& budget) {
  detail::check_eta("baseline_calibration", eta);
  const double lg = std::log(2.0 * static_cast<double>(n) / eta);
  const double fx = trace_a + static_cast<double>(d) * lg;
  const double fy = response_sq_a + lg;
  const double denom = std::sqrt(2.0 * budget.rho()) * static_cast<double>(n);
  BaselineCalibration c;
  c.feature_radius = std::sqrt(fx);
  c.response_radius = std::sqrt(fy);
  c.noise.sigma1 = 2.0 * fx / denom;
  c.noise.sigma2 = 2.0 * std::sqrt(fx * fy) / denom;
  return c;
}

inline EstimatorOutput dp_olse_baseline(const LabeledDataset& data, double eta,
                                        const PrivacyBudget& budget_per_stat,
                                        RandomStream& rng,
                                        const EstimatorOptions& options = {}) {
  data.validate();
  detail::check_eta("dp_olse_baseline", eta);
  const Index d = data.d();
  if (data.n() <= d) {
    throw InvalidInput("dp_olse_baseline: need more private rows than features");
  }
  const auto n = static_cast<std::size_t>(data.n());

  // Radii come from the untruncated, unprivatized private statistics.
  const double trace_a =
      data.features.squaredNorm() / static_cast<double>(data.n());
  const double response_sq_a =
      data.responses.squaredNorm() / static_cast<double>(data.n());
  const BaselineCalibration cal =
      baseline_calibration(trace_a, response_sq_a, static_cast<std::size_t>(d),
                           n, eta, budget_per_stat);

  EstimatorOutput out;
  out.method = Method::kDpOlse;
  out.noise_disabled = options.zero_noise;
  const TruncatedSamples x = truncate_to_radius(data.features, cal.feature_radius);
  const MatrixXd y_col = data.responses;
  const TruncatedSamples y = truncate_to_radius(y_col, cal.response_radius);
  out.feature_truncation = x.report;
  out.response_truncation = y.report;
  if (!options.zero_noise) out.noise = cal.noise;

  const SymmetricMatrix moment = detail::gram(x.samples);
  const VectorXd xy = detail::cross(x.samples, y.samples.col(0));
  detail::perturbed_solve(moment, xy, out.noise, rng, out, out.beta);

  out.ledger = BudgetLedger{}
                   .compose("feature_second_moment", budget_per_stat.rho())
                   .compose("cross_moment", budget_per_stat.rho());
  out.rho_total = out.ledger.total();
  out.caveats.emplace_back(
      "truncation radii and noise scales use the unprivatized private trace "
      "and response second moment");
  if (options.zero_noise) {
    out.caveats.emplace_back("zero-noise test hook: output is not private");
  }
  return out;
}

// Left-hand side of the stable-regime condition for the preconditioned
// estimator, O-constants set to 1. Values <= 0.5 are in the stable regime.
inline double stability_ratio(std::size_t d, std::size_t n_priv, double eta,
                              const PrivacyBudget& budget,
                              const TheoryBounds& bounds) {
  detail::check_eta("stability_ratio", eta);
  if (d < 1 || n_priv < 1) {
    throw InvalidInput("stability_ratio: d and n_priv must be positive");
  }
  if (!std::isfinite(bounds.lower_L) || !(bounds.lower_L > 0.0)) {
    throw InvalidInput("stability_ratio: bounds must be finite");
  }
  const double dd = static_cast<double>(d);
  const double n = static_cast<double>(n_priv);
  const double shrink =
      1.0 - (std::sqrt(dd) + std::sqrt(std::log(1.0 / eta))) / std::sqrt(n);
  if (shrink <= 0.0) return kInfinity;
  const double num =
      std::pow(dd, 1.5) * (1.0 + std::log(2.0 * n / eta)) * std::log(1.0 / eta);
  return num / (std::sqrt(budget.rho()) * n * bounds.lower_L * shrink * shrink);
}

}  // namespace dppmt

#endif  // DPPMT_ESTIMATORS_HPP_
