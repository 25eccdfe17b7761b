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

#include "dppmt/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "dppmt/estimators.hpp"

namespace dppmt {
namespace {

const std::string kDataDir = DPPMT_TEST_DATA_DIR;

TEST(SyntheticTest, DefaultsAreIllConditioned) {
  const SyntheticModelSpec s = default_synthetic();
  EXPECT_EQ(s.d(), 10);
  EXPECT_EQ(s.noise_std, 0.05);
  EXPECT_FALSE(s.coefficients.has_value());
  EXPECT_GE(diagnostics(s.second_moment()).avg_cond, 10.0);
  EXPECT_NO_THROW(s.validate());
}

TEST(SyntheticTest, GeometricLadder) {
  const VectorXd v = geometric_ladder(5, 0.2, 2.0);
  EXPECT_DOUBLE_EQ(v(0), 0.2);
  EXPECT_NEAR(v(4), 2.0, 1e-15);
  for (Index i = 1; i < 5; ++i) EXPECT_NEAR(v(i) / v(i - 1), std::pow(10.0, 0.25), 1e-13);
  EXPECT_THROW(geometric_ladder(0, 1, 2), InvalidInput);
  EXPECT_THROW(geometric_ladder(3, -1, 2), InvalidInput);
}

TEST(SyntheticTest, ValidationRejectsMismatches) {
  SyntheticModelSpec s = default_synthetic();
  s.mean = VectorXd::Zero(3);
  EXPECT_THROW(s.validate(), InvalidInput);
  s = default_synthetic();
  s.covariance = SymmetricMatrix(-MatrixXd::Identity(10, 10));
  EXPECT_THROW(s.validate(), InvalidInput);
  s = default_synthetic();
  s.coefficients = VectorXd::Zero(2);
  EXPECT_THROW(s.validate(), InvalidInput);
  RandomStream rng(0);
  EXPECT_THROW(generate(default_synthetic(), 10, rng), InvalidInput);
}

TEST(SyntheticTest, EmpiricalSecondMomentConcentrates) {
  SyntheticModelSpec s;
  s.mean = VectorXd::Zero(4);
  s.covariance = SymmetricMatrix::identity(4);
  s.noise_std = 0.0;
  s.coefficients = VectorXd::Ones(4);
  RandomStream rng(10);
  const LabeledDataset d = generate(s, 100000, rng);
  const MatrixXd m = d.features.transpose() * d.features / 100000.0;
  EXPECT_LT((m - MatrixXd::Identity(4, 4)).norm() / 2.0, 0.05);
}

TEST(SyntheticTest, NoiselessRecoversCoefficientsAndIsDeterministic) {
  SyntheticModelSpec s = default_synthetic();
  s.noise_std = 0.0;
  RandomStream rng(4);
  s = with_drawn_coefficients(s, rng);
  RandomStream a(12), b(12);
  const LabeledDataset x = generate(s, 50, a);
  const LabeledDataset y = generate(s, 50, b);
  EXPECT_TRUE(x.features == y.features);
  EXPECT_TRUE(x.responses == y.responses);
  EXPECT_LT((olse(x).beta - *s.coefficients).norm(), 1e-8);
}

TEST(SyntheticTest, NoiseLevelMatches) {
  SyntheticModelSpec s = default_synthetic();
  s.coefficients = VectorXd::Zero(10);
  RandomStream rng(6);
  const LabeledDataset d = generate(s, 40000, rng);
  EXPECT_NEAR(std::sqrt(d.responses.squaredNorm() / 40000.0), 0.05, 0.002);
}

TEST(IngestCsvTest, FixtureParsesExactly) {
  const LabeledDataset d = ingest_csv(kDataDir + "/small.csv", ';', "quality");
  ASSERT_EQ(d.n(), 3);
  ASSERT_EQ(d.d(), 3);
  MatrixXd want(3, 3);
  want << 1.5, 2, -3, 4, 5.25, 0.5, 7, 8, 0.1;
  EXPECT_TRUE(d.features == want);
  EXPECT_EQ(d.responses(0), 5.0);
  EXPECT_EQ(d.responses(2), 7.0);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(d.response_name, "quality");
}

TEST(IngestCsvTest, ShortRowNamesLine) {
  try {
    ingest_csv(kDataDir + "/malformed.csv", ';', "quality");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find(":4:"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("10 cells"), std::string::npos);
  }
}

TEST(IngestCsvTest, BadNumberNamesColumn) {
  try {
    ingest_csv(kDataDir + "/bad_number.csv", ',', "y");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), "y");
  }
}

TEST(IngestCsvTest, MissingFileAndColumn) {
  EXPECT_THROW(ingest_csv(kDataDir + "/does_not_exist.csv", ';', "quality"),
               IoError);
  EXPECT_THROW(ingest_csv(kDataDir + "/small.csv", ';', "nope"), ParseError);
}

TEST(NormalizeTest, PopulationConvention) {
  MatrixXd x(3, 1);
  x << 1, 2, 3;
  const NormalizedDataset n =
      normalize(LabeledDataset(x, (VectorXd(3) << 2, 4, 9).finished()));
  EXPECT_NEAR(n.data.features(0, 0), -std::sqrt(1.5), 1e-15);
  EXPECT_NEAR(n.data.features(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(n.data.features(2, 0), std::sqrt(1.5), 1e-15);
  EXPECT_NEAR(n.record.feature_shift(0), 2.0, 1e-15);
  EXPECT_NEAR(n.record.feature_scale(0), std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(n.data.responses.mean(), 0.0, 1e-15);
  EXPECT_NEAR(n.data.responses.squaredNorm() / 3.0, 1.0, 1e-14);
}

TEST(NormalizeTest, IdempotentRoundTripAndZeroVariance) {
  const LabeledDataset raw = ingest_csv(kDataDir + "/small.csv", ';', "quality");
  const NormalizedDataset once = normalize(raw);
  const NormalizedDataset twice = normalize(once.data);
  EXPECT_LT((once.data.features - twice.data.features).cwiseAbs().maxCoeff(), 1e-12);
  const LabeledDataset back = denormalize(once.data, once.record);
  EXPECT_LT((back.features - raw.features).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((back.responses - raw.responses).cwiseAbs().maxCoeff(), 1e-12);

  MatrixXd flat(3, 2);
  flat << 1, 5, 2, 5, 3, 5;
  try {
    normalize(LabeledDataset(flat, VectorXd::LinSpaced(3, 0, 1), {"p", "const"}));
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("const"), std::string::npos);
  }
}

LabeledDataset indexed(Index n) {
  MatrixXd x(n, 2);
  for (Index i = 0; i < n; ++i) x.row(i) << static_cast<double>(i), 1.0;
  return LabeledDataset(x, VectorXd::LinSpaced(n, 0, static_cast<double>(n - 1)));
}

TEST(SplitTest, PartitionProperty) {
  const LabeledDataset d = indexed(100);
  const SplitResult s = split(d, SplitSpec{30, 70, 5});
  EXPECT_EQ(s.pub.n(), 30);
  EXPECT_EQ(s.priv.n(), 70);
  std::set<Index> all(s.pub_rows.begin(), s.pub_rows.end());
  for (Index r : s.priv_rows) EXPECT_TRUE(all.insert(r).second);
  EXPECT_EQ(all.size(), 100u);
  for (std::size_t i = 0; i < s.pub_rows.size(); ++i) {
    EXPECT_EQ(s.pub.features(static_cast<Index>(i), 0),
              static_cast<double>(s.pub_rows[i]));
  }
}

TEST(SplitTest, DeterministicAndSeedSensitive) {
  const LabeledDataset d = indexed(200);
  const SplitResult a = split(d, SplitSpec{20, 100, 9});
  const SplitResult b = split(d, SplitSpec{20, 100, 9});
  const SplitResult c = split(d, SplitSpec{20, 100, 10});
  EXPECT_EQ(a.pub_rows, b.pub_rows);
  EXPECT_EQ(a.priv_rows, b.priv_rows);
  EXPECT_NE(a.pub_rows, c.pub_rows);
}

TEST(SplitTest, HeadModeAndOverflow) {
  const LabeledDataset d = indexed(10);
  const SplitResult h = split(d, SplitSpec{3, 5, 0, SplitMode::kHeadTail});
  EXPECT_EQ(h.pub_rows, (std::vector<Index>{0, 1, 2}));
  EXPECT_EQ(h.priv_rows, (std::vector<Index>{3, 4, 5, 6, 7}));
  EXPECT_THROW(split(d, SplitSpec{5, 6, 0}), InvalidInput);
  EXPECT_THROW(split(d, SplitSpec{0, 6, 0}), InvalidInput);
}

TEST(PublicMomentsTest, HandCases) {
  const PublicMoments m = public_moments(
      LabeledDataset(MatrixXd::Identity(2, 2), (VectorXd(2) << 3, 4).finished()));
  EXPECT_TRUE(m.feature_moment.matrix().isApprox(0.5 * MatrixXd::Identity(2, 2)));
  EXPECT_NEAR(m.response_moment, std::sqrt(12.5), 1e-15);
  EXPECT_EQ(m.n_pub, 2u);
  MatrixXd b(1, 3);
  b << 1, 2, 3;
  const PublicMoments one = public_moments(LabeledDataset(b, VectorXd::Ones(1)));
  EXPECT_TRUE(one.feature_moment.matrix() == b.transpose() * b);
}

}  // namespace
}  // namespace dppmt
