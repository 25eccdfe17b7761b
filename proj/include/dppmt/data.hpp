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

#ifndef DPPMT_DATA_HPP_
#define DPPMT_DATA_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dppmt/errors.hpp"
#include "dppmt/estimators.hpp"
#include "dppmt/random.hpp"
#include "dppmt/spectra.hpp"

namespace dppmt {

// Gaussian design x ~ N(mean, covariance), y = x^T beta + N(0, noise_std^2).
struct SyntheticModelSpec {
  VectorXd mean;
  SymmetricMatrix covariance = SymmetricMatrix::identity(1);
  std::optional<VectorXd> coefficients;  // drawn per experiment unless pinned
  double noise_std = 0.05;

  Index d() const { return covariance.dim(); }

  // Sigma = Psi + mu mu^T
  SymmetricMatrix second_moment() const {
    return SymmetricMatrix(covariance.matrix() + mean * mean.transpose());
  }

  void validate() const {
    if (mean.size() != covariance.dim()) {
      throw InvalidInput("SyntheticModelSpec: mean has " +
                         std::to_string(mean.size()) + " entries, covariance is " +
                         std::to_string(covariance.dim()) + "x" +
                         std::to_string(covariance.dim()));
    }
    if (!mean.allFinite()) {
      throw InvalidInput("SyntheticModelSpec: mean must be finite");
    }
    if (!(eig_sym(covariance).values.minCoeff() > 0.0)) {
      throw InvalidInput("SyntheticModelSpec: covariance must be SPD");
    }
    if (!(eig_sym(second_moment()).values.minCoeff() > 0.0)) {
      throw InvalidInput("SyntheticModelSpec: second moment must be SPD");
    }
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
      throw InvalidInput("SyntheticModelSpec: noise_std must be >= 0");
    }
    if (coefficients && coefficients->size() != d()) {
      throw InvalidInput("SyntheticModelSpec: coefficient length mismatch");
    }
  }
};

// Geometric ladder lo, lo*r, ..., hi with d rungs.
inline VectorXd geometric_ladder(Index d, double lo, double hi) {
  if (d < 1 || !(lo > 0.0) || !(hi > 0.0)) {
    throw InvalidInput("geometric_ladder: need d >= 1 and positive ends");
  }
  VectorXd v(d);
  if (d == 1) {
    v(0) = lo;
    return v;
  }
  const double step = std::log(hi / lo) / static_cast<double>(d - 1);
  for (Index i = 0; i < d; ++i) {
    v(i) = lo * std::exp(step * static_cast<double>(i));
  }
  v(d - 1) = hi;
  return v;
}

struct SyntheticDefaults {
  Index d = 10;
  double mu_scale = 2.0;
  double psi_lo = 0.2;
  double psi_hi = 2.0;
  double noise_std = 0.05;
};

// mu = mu_scale * 1, Psi = diag(geometric ladder psi_lo .. psi_hi). The mean
// pushes one eigenvalue of Psi + mu mu^T far above the rest.
inline SyntheticModelSpec default_synthetic(const SyntheticDefaults& cfg = {}) {
  SyntheticModelSpec s;
  s.mean = VectorXd::Constant(cfg.d, cfg.mu_scale);
  s.covariance =
      SymmetricMatrix::diagonal(geometric_ladder(cfg.d, cfg.psi_lo, cfg.psi_hi));
  s.noise_std = cfg.noise_std;
  s.validate();
  return s;
}

inline SyntheticModelSpec with_drawn_coefficients(SyntheticModelSpec spec,
                                                  RandomStream& rng) {
  VectorXd beta(spec.d());
  for (Index i = 0; i < beta.size(); ++i) beta(i) = rng.normal();
  spec.coefficients = std::move(beta);
  return spec;
}

// Draws the n x d design row by row (d standard normals each), then the n
// response noises. Requires pinned coefficients.
inline LabeledDataset generate(const SyntheticModelSpec& spec, Index n,
                               RandomStream& rng) {
  spec.validate();
  if (!spec.coefficients) {
    throw InvalidInput("generate: coefficients are not pinned");
  }
  if (n < 1) throw InvalidInput("generate: n must be positive");
  const Index d = spec.d();
  const MatrixXd root = sqrt_sym(spec.covariance).matrix();
  MatrixXd z(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  }
  MatrixXd x = z * root;  // rows: (root z_i)^T, root symmetric
  x.rowwise() += spec.mean.transpose();
  VectorXd y = x * *spec.coefficients;
  for (Index i = 0; i < n; ++i) y(i) += spec.noise_std * rng.normal();
  return LabeledDataset(std::move(x), std::move(y));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_cells(std::string_view line,
                                                 char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  bool quoted = false;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i < line.size() && line[i] == '"') quoted = !quoted;
    if (i == line.size() || (line[i] == delim && !quoted)) {
      cells.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return cells;
}

inline std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

}  // namespace detail

// Reads a delimited text file with one header row. Every non-response column
// becomes a feature, in header order.
inline LabeledDataset ingest_csv(const std::string& path, char delimiter,
                                 const std::string& response_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'", path);

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) {
    throw ParseError(path + ": missing header row", line_no, "");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);  // UTF-8 BOM
  }
  for (std::string_view cell : detail::split_cells(line, delimiter)) {
    header.push_back(detail::unquote(cell));
  }
  const auto it = std::find(header.begin(), header.end(), response_column);
  if (it == header.end()) {
    throw ParseError(path + ": no column named '" + response_column + "'",
                     line_no, response_column);
  }
  const std::size_t response_idx =
      static_cast<std::size_t>(it - header.begin());
  const std::size_t width = header.size();
  if (width < 2) {
    throw ParseError(path + ": need at least one feature column", line_no, "");
  }

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_cells(line, delimiter);
    if (cells.size() != width) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": row has " +
                           std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(width),
                       line_no, "");
    }
    for (std::size_t c = 0; c < width; ++c) {
      const std::string_view cell = cells[c];
      double v = 0.0;
      const auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": column '" +
                             header[c] + "' is not a number: '" +
                             std::string(cell) + "'",
                         line_no, header[c]);
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(path + ": no data rows", line_no, "");

  const auto n = static_cast<Index>(rows);
  const auto d = static_cast<Index>(width - 1);
  MatrixXd x(n, d);
  VectorXd y(n);
  std::vector<std::string> names;
  for (std::size_t c = 0; c < width; ++c) {
    if (c != response_idx) names.push_back(header[c]);
  }
  for (Index i = 0; i < n; ++i) {
    Index j = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const double v = values[static_cast<std::size_t>(i) * width + c];
      if (c == response_idx) {
        y(i) = v;
      } else {
        x(i, j++) = v;
      }
    }
  }
  return LabeledDataset(std::move(x), std::move(y), std::move(names),
                        response_column);
}

// Per-column standardization constants: z = (v - shift) / scale.
struct NormalizationRecord {
  VectorXd feature_shift;
  VectorXd feature_scale;
  double response_shift = 0.0;
  double response_scale = 1.0;
};

struct NormalizedDataset {
  LabeledDataset data;
  NormalizationRecord record;
};

namespace detail {

// Population mean and standard deviation.
inline std::pair<double, double> mean_std(const VectorXd& v) {
  const double n = static_cast<double>(v.size());
  const double mean = v.sum() / n;
  const double var = (v.array() - mean).square().sum() / n;
  return {mean, std::sqrt(var)};
}

}  // namespace detail

// Zero mean, unit population variance for every feature and the response.
inline NormalizedDataset normalize(const LabeledDataset& data) {
  data.validate();
  NormalizedDataset out{data, {}};
  const Index d = data.d();
  out.record.feature_shift.resize(d);
  out.record.feature_scale.resize(d);
  for (Index j = 0; j < d; ++j) {
    const auto [mean, sd] = detail::mean_std(data.features.col(j));
    if (!(sd > 0.0)) {
      throw InvalidInput("normalize: column '" + data.feature_name(j) +
                         "' has zero variance");
    }
    out.record.feature_shift(j) = mean;
    out.record.feature_scale(j) = sd;
    out.data.features.col(j) = (data.features.col(j).array() - mean) / sd;
  }
  const auto [mean, sd] = detail::mean_std(data.responses);
  if (!(sd > 0.0)) {
    throw InvalidInput("normalize: response '" +
                       (data.response_name.empty() ? std::string("y")
                                                   : data.response_name) +
                       "' has zero variance");
  }
  out.record.response_shift = mean;
  out.record.response_scale = sd;
  out.data.responses = (data.responses.array() - mean) / sd;
  return out;
}

inline LabeledDataset denormalize(const LabeledDataset& data,
                                  const NormalizationRecord& rec) {
  LabeledDataset out = data;
  for (Index j = 0; j < data.d(); ++j) {
    out.features.col(j) =
        data.features.col(j).array() * rec.feature_scale(j) + rec.feature_shift(j);
  }
  out.responses =
      data.responses.array() * rec.response_scale + rec.response_shift;
  return out;
}

enum class SplitMode { kRandomWithoutReplacement, kHeadTail };

struct SplitSpec {
  std::size_t n_pub = 0;
  std::size_t n_priv = 0;
  std::uint64_t seed = 0;
  SplitMode mode = SplitMode::kRandomWithoutReplacement;
};

struct SplitResult {
  LabeledDataset pub;
  LabeledDataset priv;
  std::vector<Index> pub_rows;
  std::vector<Index> priv_rows;
};

inline SplitResult split(const LabeledDataset& data, const SplitSpec& spec,
                         RandomStream& rng) {
  data.validate();
  const auto n = static_cast<std::size_t>(data.n());
  if (spec.n_pub < 1 || spec.n_priv < 1 || spec.n_pub + spec.n_priv > n) {
    throw InvalidInput("split: n_pub=" + std::to_string(spec.n_pub) +
                       " + n_priv=" + std::to_string(spec.n_priv) +
                       " does not fit in " + std::to_string(n) + " rows");
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  if (spec.mode == SplitMode::kRandomWithoutReplacement) {
    std::shuffle(order.begin(), order.end(), rng.engine());
  }
  SplitResult out;
  out.pub_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.n_pub));
  out.priv_rows.assign(
      order.begin() + static_cast<std::ptrdiff_t>(spec.n_pub),
      order.begin() + static_cast<std::ptrdiff_t>(spec.n_pub + spec.n_priv));
  out.pub = data.subset(out.pub_rows);
  out.priv = data.subset(out.priv_rows);
  return out;
}

// Seeds the shuffle from spec.seed.
inline SplitResult split(const LabeledDataset& data, const SplitSpec& spec) {
  RandomStream rng(spec.seed);
  return split(data, spec, rng);
}

// Sigma_B = B^T B / n_B and sigma_B = sqrt(sum y^2 / n_B), no centering.
inline PublicMoments public_moments(const LabeledDataset& pub) {
  pub.validate();
  const double n = static_cast<double>(pub.n());
  return {SymmetricMatrix((pub.features.transpose() * pub.features) / n),
          std::sqrt(pub.responses.squaredNorm() / n),
          static_cast<std::size_t>(pub.n())};
}

}  // namespace dppmt

#endif  // DPPMT_DATA_HPP_
