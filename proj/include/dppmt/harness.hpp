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

// Multi-trial sweeps over (method, rho, n_priv, n_pub) cells.
//
// Every trial draws from streams keyed by (seed, ...), never from shared
// state, and per-trial outcomes are reduced in trial-index order. Results are
// therefore independent of thread count and scheduling.

#ifndef DPPMT_HARNESS_HPP_
#define DPPMT_HARNESS_HPP_

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include "dppmt/data.hpp"
#include "dppmt/errors.hpp"
#include "dppmt/estimators.hpp"
#include "dppmt/random.hpp"

namespace dppmt {

enum class Reference { kTrueBeta, kNonprivateOlse };

inline Reference parse_reference(std::string_view s) {
  if (s == "TRUE_BETA" || s == "true") return Reference::kTrueBeta;
  if (s == "NONPRIVATE_OLSE" || s == "olse") return Reference::kNonprivateOlse;
  throw InvalidInput("unknown reference '" + std::string(s) + "'");
}

struct ExperimentGrid {
  std::vector<Method> methods{Method::kDpOlse, Method::kDpPmtOlse};
  std::vector<double> rho_values;
  std::vector<std::size_t> n_priv_values;
  std::vector<std::size_t> n_pub_values;
  double eta = 0.05;
  std::size_t trials = 300;
  std::uint64_t seed = 0;
  Reference reference = Reference::kTrueBeta;
};

struct CellResult {
  Method method = Method::kDpPmtOlse;
  double rho = 0.0;
  std::size_t n_priv = 0;
  std::size_t n_pub = 0;
  std::size_t trials_ok = 0;
  std::size_t trials_failed = 0;
  double mean_err = 0.0;
  double std_err = 0.0;
  double mean_truncated_frac = 0.0;
  double mean_avg_cond_pre = 0.0;
};

using DataSource = std::variant<SyntheticModelSpec, LabeledDataset>;

struct RunOptions {
  EstimatorOptions estimator;
  SplitMode split_mode = SplitMode::kRandomWithoutReplacement;
  unsigned threads = 1;
  // When set, trials are executed in an order shuffled by this seed. Results
  // must not change; exposed for testing that property.
  std::optional<std::uint64_t> execution_order_seed;
};

namespace detail {

// Stream-key tags.
inline constexpr std::uint64_t kBetaStream = 0x62657461;   // "beta"
inline constexpr std::uint64_t kDataStream = 0x64617461;   // "data"
inline constexpr std::uint64_t kNoiseStream = 0x6e6f6973;  // "nois"

struct TrialOutcome {
  bool ok = false;
  double err = 0.0;
  double truncated_frac = 0.0;
  double avg_cond_pre = 0.0;
};

struct Cell {
  Method method;
  double rho;
  std::size_t n_priv;
  std::size_t n_pub;
};

inline std::vector<Cell> enumerate_cells(const ExperimentGrid& g) {
  std::vector<Cell> cells;
  for (Method m : g.methods) {
    for (double rho : g.rho_values) {
      for (std::size_t np : g.n_priv_values) {
        for (std::size_t nb : g.n_pub_values) cells.push_back({m, rho, np, nb});
      }
    }
  }
  return cells;
}

inline void validate_grid(const ExperimentGrid& g, const DataSource& source) {
  if (g.methods.empty() || g.rho_values.empty() || g.n_priv_values.empty() ||
      g.n_pub_values.empty()) {
    throw InvalidInput("grid: every list must be non-empty");
  }
  if (g.trials < 1) throw InvalidInput("grid: trials must be >= 1");
  if (!(g.eta > 0.0 && g.eta < 1.0)) {
    throw InvalidInput("grid: eta must lie in (0,1)");
  }
  for (Method m : g.methods) {
    if (m == Method::kOlse) {
      throw InvalidInput("grid: methods must be DP_OLSE and/or DP_PMTOLSE");
    }
  }
  for (double rho : g.rho_values) PrivacyBudget{rho};

  Index d = 0;
  if (const auto* spec = std::get_if<SyntheticModelSpec>(&source)) {
    spec->validate();
    d = spec->d();
  } else {
    const auto& data = std::get<LabeledDataset>(source);
    data.validate();
    d = data.d();
    if (g.reference == Reference::kTrueBeta) {
      throw InvalidInput("grid: TRUE_BETA reference needs a synthetic source");
    }
    const std::size_t need =
        *std::max_element(g.n_pub_values.begin(), g.n_pub_values.end()) +
        *std::max_element(g.n_priv_values.begin(), g.n_priv_values.end());
    if (need > static_cast<std::size_t>(data.n())) {
      throw InvalidInput("grid: max(n_pub) + max(n_priv) = " +
                         std::to_string(need) + " exceeds dataset size " +
                         std::to_string(data.n()));
    }
  }
  const auto du = static_cast<std::size_t>(d);
  for (std::size_t nb : g.n_pub_values) {
    if (nb <= du) {
      throw InsufficientPublicData("grid: n_pub=" + std::to_string(nb) +
                                   " must exceed d=" + std::to_string(d));
    }
  }
  for (std::size_t np : g.n_priv_values) {
    if (np <= du) {
      throw InvalidInput("grid: n_priv=" + std::to_string(np) +
                         " must exceed d=" + std::to_string(d));
    }
  }
}

struct TrialData {
  LabeledDataset pub;
  LabeledDataset priv;
  VectorXd reference;
};

// Public and private samples for one trial. Depends on (n_priv, n_pub, t)
// but not on the method or rho, so every method sees the same draws.
inline TrialData draw_trial_data(const ExperimentGrid& g,
                                 const DataSource& source,
                                 const std::optional<VectorXd>& beta,
                                 const Cell& cell, std::size_t t,
                                 std::size_t max_n_priv,
                                 const RunOptions& opts) {
  RandomStream rng = RandomStream(g.seed).child(
      {kDataStream, cell.n_priv, cell.n_pub, static_cast<std::uint64_t>(t)});
  TrialData out;
  if (const auto* spec = std::get_if<SyntheticModelSpec>(&source)) {
    SyntheticModelSpec pinned = *spec;
    pinned.coefficients = *beta;
    out.pub = generate(pinned, static_cast<Index>(cell.n_pub), rng);
    out.priv = generate(pinned, static_cast<Index>(cell.n_priv), rng);
    if (g.reference == Reference::kTrueBeta) {
      out.reference = *beta;
    } else {
      out.reference = olse(out.priv).beta;
    }
    return out;
  }
  const auto& data = std::get<LabeledDataset>(source);
  SplitSpec spec{cell.n_pub, max_n_priv, 0, opts.split_mode};
  SplitResult s = split(data, spec, rng);
  // The reference is fit on the whole private pool; the estimator sees an
  // n_priv-row subset of it.
  out.reference = olse(s.priv).beta;
  std::vector<Index> rows(static_cast<std::size_t>(s.priv.n()));
  std::iota(rows.begin(), rows.end(), Index{0});
  if (opts.split_mode == SplitMode::kRandomWithoutReplacement) {
    std::shuffle(rows.begin(), rows.end(), rng.engine());
  }
  rows.resize(cell.n_priv);
  out.pub = std::move(s.pub);
  out.priv = s.priv.subset(rows);
  return out;
}

inline TrialOutcome run_trial(const ExperimentGrid& g, const DataSource& source,
                              const std::optional<VectorXd>& beta,
                              const Cell& cell, std::size_t cell_index,
                              std::size_t t, std::size_t max_n_priv,
                              const RunOptions& opts) {
  TrialOutcome r;
  try {
    const TrialData data =
        draw_trial_data(g, source, beta, cell, t, max_n_priv, opts);
    RandomStream noise = RandomStream(g.seed).child(
        {kNoiseStream, static_cast<std::uint64_t>(cell_index),
         static_cast<std::uint64_t>(t)});
    const PrivacyBudget budget(cell.rho);
    EstimatorOutput est;
    if (cell.method == Method::kDpPmtOlse) {
      est = dp_pmtolse(data.priv, public_moments(data.pub), g.eta, budget,
                       noise, opts.estimator);
    } else {
      est = dp_olse_baseline(data.priv, g.eta, budget, noise, opts.estimator);
    }
    r.err = (est.beta - data.reference).norm();
    r.truncated_frac = est.feature_truncation.fraction();
    r.avg_cond_pre = est.pre_diag.avg_cond;
    r.ok = std::isfinite(r.err);
  } catch (const SingularMatrix&) {
    r.ok = false;
  }
  return r;
}

inline CellResult aggregate(const Cell& cell,
                            const std::vector<TrialOutcome>& trials) {
  CellResult c;
  c.method = cell.method;
  c.rho = cell.rho;
  c.n_priv = cell.n_priv;
  c.n_pub = cell.n_pub;
  double sum = 0.0, trunc = 0.0, cond = 0.0;
  for (const TrialOutcome& t : trials) {
    if (!t.ok) {
      ++c.trials_failed;
      continue;
    }
    ++c.trials_ok;
    sum += t.err;
    trunc += t.truncated_frac;
    cond += t.avg_cond_pre;
  }
  if (c.trials_ok == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    c.mean_err = c.std_err = c.mean_truncated_frac = c.mean_avg_cond_pre = nan;
    return c;
  }
  const double k = static_cast<double>(c.trials_ok);
  c.mean_err = sum / k;
  c.mean_truncated_frac = trunc / k;
  c.mean_avg_cond_pre = cond / k;
  if (c.trials_ok > 1) {
    double ss = 0.0;
    for (const TrialOutcome& t : trials) {
      if (t.ok) ss += (t.err - c.mean_err) * (t.err - c.mean_err);
    }
    c.std_err = std::sqrt(ss / (k - 1.0));
  }
  return c;
}

}  // namespace detail

// Runs every (method, rho, n_priv, n_pub) cell for grid.trials trials.
// Configuration errors are raised before any trial runs.
inline std::vector<CellResult> run_grid(const ExperimentGrid& grid,
                                        const DataSource& source,
                                        const RunOptions& opts = {}) {
  detail::validate_grid(grid, source);
  const std::vector<detail::Cell> cells = detail::enumerate_cells(grid);

  std::optional<VectorXd> beta;
  if (const auto* spec = std::get_if<SyntheticModelSpec>(&source)) {
    if (spec->coefficients) {
      beta = *spec->coefficients;
    } else {
      RandomStream rng = RandomStream(grid.seed).child({detail::kBetaStream});
      beta = *with_drawn_coefficients(*spec, rng).coefficients;
    }
  }
  const std::size_t max_n_priv = *std::max_element(grid.n_priv_values.begin(),
                                                   grid.n_priv_values.end());

  const std::size_t total = cells.size() * grid.trials;
  std::vector<detail::TrialOutcome> outcomes(total);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (opts.execution_order_seed) {
    RandomStream rng(*opts.execution_order_seed);
    std::shuffle(order.begin(), order.end(), rng.engine());
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(total);
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const std::size_t job = order[k];
      const std::size_t c = job / grid.trials;
      const std::size_t t = job % grid.trials;
      try {
        outcomes[job] = detail::run_trial(grid, source, beta, cells[c], c, t,
                                          max_n_priv, opts);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, opts.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<CellResult> results;
  results.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto first = outcomes.begin() + static_cast<std::ptrdiff_t>(c * grid.trials);
    results.push_back(detail::aggregate(
        cells[c], std::vector<detail::TrialOutcome>(
                      first, first + static_cast<std::ptrdiff_t>(grid.trials))));
  }
  return results;
}

inline constexpr std::string_view kCsvHeader =
    "method,rho,n_priv,n_pub,trials_ok,trials_failed,mean_err,std_err,"
    "mean_truncated_frac,mean_avg_cond_pre";

// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void sort_results(std::vector<CellResult>& results) {
  std::stable_sort(results.begin(), results.end(),
                   [](const CellResult& a, const CellResult& b) {
                     return std::make_tuple(method_name(a.method), a.rho,
                                            a.n_priv, a.n_pub) <
                            std::make_tuple(method_name(b.method), b.rho,
                                            b.n_priv, b.n_pub);
                   });
}

inline std::string results_to_csv(std::vector<CellResult> results) {
  sort_results(results);
  std::string out(kCsvHeader);
  out += '\n';
  for (const CellResult& r : results) {
    out += method_name(r.method);
    out += ',' + format_double(r.rho);
    out += ',' + std::to_string(r.n_priv);
    out += ',' + std::to_string(r.n_pub);
    out += ',' + std::to_string(r.trials_ok);
    out += ',' + std::to_string(r.trials_failed);
    out += ',' + format_double(r.mean_err);
    out += ',' + format_double(r.std_err);
    out += ',' + format_double(r.mean_truncated_frac);
    out += ',' + format_double(r.mean_avg_cond_pre);
    out += '\n';
  }
  return out;
}

// Writes through a sibling temporary file, so a failed write leaves no
// partial output at `path`.
inline void emit_csv(const std::vector<CellResult>& results,
                     const std::string& path) {
  if (results.empty()) throw InvalidInput("emit_csv: no results");
  const std::string body = results_to_csv(results);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'", path);
    out << body;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed for '" + path + "'", path);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot write '" + path + "'", path);
  }
}

namespace detail {

template <typename T>
T parse_csv_number(std::string_view cell, std::size_t line,
                   const char* column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw ParseError("results csv: bad " + std::string(column) + " '" +
                         std::string(cell) + "'",
                     line, column);
  }
  return v;
}

}  // namespace detail

inline std::vector<CellResult> parse_results_csv(std::string_view text) {
  std::vector<CellResult> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ParseError("results csv: unexpected header", 1, "");
  }
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_cells(line, ',');
    if (cells.size() != 10) {
      throw ParseError("results csv: expected 10 cells", line_no, "");
    }
    CellResult r;
    r.method = parse_method(cells[0]);
    r.rho = detail::parse_csv_number<double>(cells[1], line_no, "rho");
    r.n_priv = detail::parse_csv_number<std::size_t>(cells[2], line_no, "n_priv");
    r.n_pub = detail::parse_csv_number<std::size_t>(cells[3], line_no, "n_pub");
    r.trials_ok = detail::parse_csv_number<std::size_t>(cells[4], line_no, "trials_ok");
    r.trials_failed =
        detail::parse_csv_number<std::size_t>(cells[5], line_no, "trials_failed");
    r.mean_err = detail::parse_csv_number<double>(cells[6], line_no, "mean_err");
    r.std_err = detail::parse_csv_number<double>(cells[7], line_no, "std_err");
    r.mean_truncated_frac =
        detail::parse_csv_number<double>(cells[8], line_no, "mean_truncated_frac");
    r.mean_avg_cond_pre =
        detail::parse_csv_number<double>(cells[9], line_no, "mean_avg_cond_pre");
    out.push_back(r);
  }
  return out;
}

}  // namespace dppmt

#endif  // DPPMT_HARNESS_HPP_
