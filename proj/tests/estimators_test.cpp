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

#include "dppmt/estimators.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace dppmt {
namespace {

LabeledDataset gaussian_data(Index n, Index d, std::mt19937_64& gen,
                             double scale = 1.0, double noise = 0.1) {
  std::normal_distribution<double> z;
  MatrixXd x(n, d);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = scale * z(gen);
  VectorXd beta(d);
  for (Index j = 0; j < d; ++j) beta(j) = z(gen);
  VectorXd y = x * beta;
  for (Index i = 0; i < n; ++i) y(i) += noise * z(gen);
  return LabeledDataset(x, y);
}

PublicMoments moments_of(const LabeledDataset& d) {
  const double n = static_cast<double>(d.n());
  return {SymmetricMatrix(d.features.transpose() * d.features / n),
          std::sqrt(d.responses.squaredNorm() / n),
          static_cast<std::size_t>(d.n())};
}

TEST(LabeledDatasetTest, Validation) {
  EXPECT_THROW(LabeledDataset(MatrixXd::Zero(3, 2), VectorXd::Zero(2)),
               InvalidInput);
  MatrixXd bad = MatrixXd::Zero(3, 2);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(LabeledDataset(bad, VectorXd::Zero(3)), InvalidInput);
  EXPECT_THROW(LabeledDataset(MatrixXd::Zero(3, 2), VectorXd::Zero(3), {"a"}),
               InvalidInput);
  const LabeledDataset ok(MatrixXd::Zero(3, 2), VectorXd::Zero(3), {"a", "b"});
  EXPECT_EQ(ok.feature_name(1), "b");
}

TEST(MethodTest, NamesRoundTrip) {
  for (Method m : {Method::kOlse, Method::kDpOlse, Method::kDpPmtOlse}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_EQ(method_name(Method::kDpPmtOlse), "DP_PMTOLSE");
  EXPECT_THROW(parse_method("nope"), InvalidInput);
}

TEST(OlseTest, HandCases) {
  const EstimatorOutput a =
      olse(LabeledDataset(MatrixXd::Identity(2, 2), (VectorXd(2) << 1, 2).finished()));
  EXPECT_NEAR(a.beta(0), 1.0, 1e-14);
  EXPECT_NEAR(a.beta(1), 2.0, 1e-14);
  MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 1, 1;
  const EstimatorOutput b = olse(LabeledDataset(x, (VectorXd(3) << 1, 2, 3).finished()));
  EXPECT_NEAR(b.beta(0), 1.0, 1e-14);
  EXPECT_NEAR(b.beta(1), 2.0, 1e-14);
  EXPECT_EQ(b.rho_total, 0.0);
  EXPECT_TRUE(b.ledger.entries().empty());
}

TEST(OlseTest, MatchesGaussianEliminationOracle) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    const LabeledDataset d = gaussian_data(40 + trial, 1 + trial % 8, gen);
    const VectorXd got = olse(d).beta;
    const auto want = oracle::least_squares(d.features, d.responses);
    for (Index j = 0; j < got.size(); ++j) {
      EXPECT_NEAR(got(j), want[static_cast<std::size_t>(j)], 1e-10);
    }
  }
}

TEST(OlseTest, NoiselessRecoveryAndSingular) {
  std::mt19937_64 gen(5);
  const LabeledDataset d = gaussian_data(30, 5, gen, 1.0, 0.0);
  const VectorXd beta0 = olse(d).beta;
  EXPECT_LT((d.features * beta0 - d.responses).norm(), 1e-10);
  MatrixXd x(3, 2);
  x << 1, 1, 2, 2, 3, 3;
  EXPECT_THROW(olse(LabeledDataset(x, VectorXd::Ones(3))), SingularMatrix);
}

TEST(DpPmtSecondMomentTest, ZeroNoiseIdentityPreconditioner) {
  RandomStream rng(1);
  EstimatorOptions quiet;
  quiet.zero_noise = true;
  const PrivateSecondMoment m =
      dp_pmt_second_moment(MatrixXd::Identity(2, 2), SymmetricMatrix::identity(2),
                           0.05, PrivacyBudget(1.0), rng, quiet);
  EXPECT_LT((m.moment.matrix() - 0.5 * MatrixXd::Identity(2, 2)).norm(), 1e-15);
  EXPECT_EQ(m.sigma, 0.0);
  EXPECT_EQ(m.ledger.total(), 1.0);
}

TEST(DpPmtSecondMomentTest, NoiseIsAdditiveAndCalibrated) {
  std::mt19937_64 gen(2);
  const LabeledDataset d = gaussian_data(1000, 10, gen);
  const PrivacyBudget b(2.0);
  RandomStream rng(77);
  const PrivateSecondMoment m =
      dp_pmt_second_moment(d.features, SymmetricMatrix::identity(10), 0.05, b, rng);
  EXPECT_NEAR(m.sigma, oracle::kSigma1D10N1000Rho2, 1e-15);
  RandomStream replay(77);
  const SymmetricMatrix g = sample_symmetric_gaussian(10, m.sigma, replay);
  EXPECT_TRUE((m.moment.matrix() - m.noise_free.matrix()).isApprox(g.matrix(), 1e-12));
  EXPECT_TRUE(m.moment.matrix() == m.moment.matrix().transpose());
}

TEST(DpPmtolseTest, ScalarWalkThrough) {
  const LabeledDataset data(MatrixXd::Ones(2, 1), VectorXd::Constant(2, 2.0));
  const PublicMoments pub{SymmetricMatrix::identity(1), 2.0, 2};
  RandomStream rng(0);
  EstimatorOptions quiet;
  quiet.zero_noise = true;
  const EstimatorOutput out = dp_pmtolse(data, pub, 0.05, PrivacyBudget(1.0), rng, quiet);
  ASSERT_EQ(out.beta.size(), 1);
  EXPECT_NEAR(out.beta(0), 2.0, 1e-14);
  EXPECT_TRUE(out.noise_disabled);
  EXPECT_FALSE(out.caveats.empty());
}

TEST(DpPmtolseTest, ZeroNoiseEqualsOlse) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 1 + trial % 6;
    // Private rows a third the public scale, and a public response moment
    // above every private response, keep both radii slack.
    const LabeledDataset priv = gaussian_data(200, d, gen, 0.3, 0.05);
    PublicMoments pub = moments_of(gaussian_data(50, d, gen, 1.0, 0.05));
    pub.response_moment = 2.0 * priv.responses.cwiseAbs().maxCoeff();
    RandomStream rng(static_cast<std::uint64_t>(trial));
    EstimatorOptions quiet;
    quiet.zero_noise = true;
    const EstimatorOutput dp =
        dp_pmtolse(priv, pub, 0.05, PrivacyBudget(1.0), rng, quiet);
    const VectorXd ref = olse(priv).beta;
    ASSERT_EQ(dp.feature_truncation.truncated, 0u);
    ASSERT_EQ(dp.response_truncation.truncated, 0u);
    EXPECT_LT((dp.beta - ref).norm() / ref.norm(), 1e-8);
  }
}

TEST(DpPmtolseTest, BudgetLedgerAndDeterminism) {
  std::mt19937_64 gen(8);
  const LabeledDataset priv = gaussian_data(500, 4, gen);
  const PublicMoments pub = moments_of(gaussian_data(30, 4, gen));
  RandomStream a(3), b(3);
  const EstimatorOutput x = dp_pmtolse(priv, pub, 0.05, PrivacyBudget(0.75), a);
  const EstimatorOutput y = dp_pmtolse(priv, pub, 0.05, PrivacyBudget(0.75), b);
  EXPECT_TRUE(x.beta == y.beta);
  EXPECT_EQ(x.rho_total, 1.5);
  ASSERT_EQ(x.ledger.entries().size(), 2u);
  EXPECT_EQ(x.ledger.entries()[0].rho_spent, 0.75);
  EXPECT_EQ(x.ledger.entries()[1].rho_spent, 0.75);
  EXPECT_EQ(x.method, Method::kDpPmtOlse);
  EXPECT_NEAR(x.noise.sigma1, matrix_noise_scale(4, 500, 0.05, PrivacyBudget(0.75)),
              0.0);
  EXPECT_TRUE(std::isfinite(x.pre_diag.avg_cond));
}

TEST(DpPmtolseTest, RejectsInsufficientPublicDataAndBadInputs) {
  std::mt19937_64 gen(8);
  const LabeledDataset priv = gaussian_data(100, 4, gen);
  RandomStream rng(0);
  PublicMoments pub = moments_of(gaussian_data(4, 4, gen));
  EXPECT_THROW(dp_pmtolse(priv, pub, 0.05, PrivacyBudget(1.0), rng),
               InsufficientPublicData);
  pub = moments_of(gaussian_data(10, 4, gen));
  EXPECT_THROW(dp_pmtolse(priv, pub, 1.5, PrivacyBudget(1.0), rng), InvalidInput);
  PublicMoments zero = pub;
  zero.response_moment = 0.0;
  EXPECT_THROW(dp_pmtolse(priv, zero, 0.05, PrivacyBudget(1.0), rng), InvalidInput);
  const PublicMoments wrong = moments_of(gaussian_data(10, 3, gen));
  EXPECT_THROW(dp_pmtolse(priv, wrong, 0.05, PrivacyBudget(1.0), rng), InvalidInput);
}

TEST(DpPmtolseTest, DegenerateDesignReportsUnstableInversion) {
  std::mt19937_64 gen(8);
  const PublicMoments pub = moments_of(gaussian_data(10, 3, gen));
  const LabeledDataset flat(MatrixXd::Zero(20, 3), VectorXd::Ones(20));
  RandomStream rng(0);
  EstimatorOptions quiet;
  quiet.zero_noise = true;
  try {
    dp_pmtolse(flat, pub, 0.05, PrivacyBudget(1.0), rng, quiet);
    FAIL() << "expected UnstableInversion";
  } catch (const UnstableInversion& e) {
    EXPECT_LE(e.post_diag().lambda_max, 1e-12);
  }
}

TEST(DpOlseBaselineTest, CalibrationFrozenValues) {
  // Tr = 10, d = 10, n = 1000, rho = 2, eta = 0.05.
  const BaselineCalibration c =
      baseline_calibration(10.0, 4.0, 10, 1000, 0.05, PrivacyBudget(2.0));
  EXPECT_NEAR(c.noise.sigma1, oracle::kSigma1D10N1000Rho2, 1e-15);
  const double lg = std::log(40000.0);
  EXPECT_NEAR(c.feature_radius, std::sqrt(10.0 + 10.0 * lg), 1e-13);
  EXPECT_NEAR(c.response_radius, std::sqrt(4.0 + lg), 1e-13);
  EXPECT_NEAR(c.noise.sigma2,
              2.0 * std::sqrt((10.0 + 10.0 * lg) * (4.0 + lg)) / (2.0 * 1000.0),
              1e-15);
}

TEST(DpOlseBaselineTest, ZeroNoiseEqualsOlseAndBudget) {
  std::mt19937_64 gen(13);
  // A response offset keeps every |y| close to its root mean square, well
  // inside sqrt(mean y^2 + log(2n/eta)).
  LabeledDataset priv = gaussian_data(300, 5, gen, 0.2, 0.05);
  priv.responses.array() += 3.0;
  RandomStream rng(1);
  EstimatorOptions quiet;
  quiet.zero_noise = true;
  const EstimatorOutput z = dp_olse_baseline(priv, 0.05, PrivacyBudget(1.0), rng, quiet);
  const VectorXd ref = olse(priv).beta;
  ASSERT_EQ(z.feature_truncation.truncated, 0u);
  ASSERT_EQ(z.response_truncation.truncated, 0u);
  EXPECT_LT((z.beta - ref).norm() / ref.norm(), 1e-8);

  const EstimatorOutput n = dp_olse_baseline(priv, 0.05, PrivacyBudget(2.0), rng);
  EXPECT_EQ(n.rho_total, 4.0);
  EXPECT_EQ(n.ledger.entries().size(), 2u);
  EXPECT_EQ(n.method, Method::kDpOlse);
  EXPECT_FALSE(n.caveats.empty());
}

TEST(StabilityRatioTest, FrozenAndMonotone) {
  TheoryBounds b;
  b.lower_L = 0.99;
  EXPECT_NEAR(stability_ratio(10, 1000000, 0.05, PrivacyBudget(2.0), b) /
                  oracle::kStabilityRatioRegression,
              1.0, 1e-12);
  double prev = kInfinity;
  for (std::size_t n : {1000u, 3000u, 10000u, 100000u, 1000000u}) {
    const double r = stability_ratio(10, n, 0.05, PrivacyBudget(2.0), b);
    EXPECT_LT(r, prev);
    prev = r;
  }
  EXPECT_LT(stability_ratio(10, 10000, 0.05, PrivacyBudget(1e12), b), 1e-6);
  EXPECT_THROW(stability_ratio(10, 100, 0.05, PrivacyBudget(1.0), TheoryBounds{}),
               InvalidInput);
}

}  // namespace
}  // namespace dppmt
