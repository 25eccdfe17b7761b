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

// Experiment driver.
//
//   dppmt synth    --n-pub 20 --rho 2,10 --n-priv 3000,10000 --out r.csv
//   dppmt real     --data winequality-white.csv --n-pub 249 --n-priv 4649 ...
//   dppmt diagnose [--data file] [--target private|transformed|public]
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
// Errors are reported as a single line on stderr:
//   error: <usage|runtime>: <message>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dppmt/dppmt.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
std::vector<T> parse_list(const std::string& flag, const std::string& text) {
  std::vector<T> out;
  std::string_view rest = text;
  while (true) {
    const std::size_t comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    T v{};
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
      throw UsageError("cannot parse " + flag + " list '" + text + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<dppmt::Method> parse_methods(const std::string& text) {
  std::vector<dppmt::Method> out;
  std::string_view rest = text;
  while (true) {
    const std::size_t comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    try {
      out.push_back(dppmt::parse_method(item));
    } catch (const dppmt::InvalidInput& e) {
      throw UsageError(e.what());
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

char parse_delimiter(const std::string& s) {
  if (s == "\\t" || s == "tab") return '\t';
  if (s.size() != 1) throw UsageError("delimiter must be a single character");
  return s[0];
}

dppmt::SplitMode parse_split(const std::string& s) {
  if (s == "random") return dppmt::SplitMode::kRandomWithoutReplacement;
  if (s == "head") return dppmt::SplitMode::kHeadTail;
  throw UsageError("--split must be 'random' or 'head'");
}

struct GridFlags {
  std::string n_priv;
  std::string n_pub;
  std::string rho;
  double eta = 0.05;
  std::size_t trials = 300;
  std::uint64_t seed = 0;
  std::string methods = "DP_OLSE,DP_PMTOLSE";
  std::string reference;
  std::string out;
  bool zero_noise = false;
  unsigned threads = 1;
};

struct SyntheticFlags {
  long d = 10;
  double mu_scale = 2.0;
  std::string psi_spec = "0.2:2.0";
};

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
  cmd->add_option("--n-priv", g.n_priv, "private sample counts (comma list)")
      ->required();
  cmd->add_option("--n-pub", g.n_pub, "public sample counts (comma list)")
      ->required();
  cmd->add_option("--rho", g.rho, "per-statistic zCDP budgets (comma list)")
      ->required();
  cmd->add_option("--eta", g.eta, "failure probability")->capture_default_str();
  cmd->add_option("--trials", g.trials, "trials per cell")->capture_default_str();
  cmd->add_option("--seed", g.seed, "root seed")->capture_default_str();
  cmd->add_option("--methods", g.methods, "DP_OLSE,DP_PMTOLSE")
      ->capture_default_str();
  cmd->add_option("--reference", g.reference, "TRUE_BETA or NONPRIVATE_OLSE");
  cmd->add_option("--out", g.out, "output CSV path")->required();
  cmd->add_flag("--zero-noise", g.zero_noise,
                "test hook: disable noise (output is NOT private)");
  cmd->add_option("--threads", g.threads, "worker threads")->capture_default_str();
}

void add_synthetic_flags(CLI::App* cmd, SyntheticFlags& s) {
  cmd->add_option("--d", s.d, "feature dimension")->capture_default_str();
  cmd->add_option("--mu-scale", s.mu_scale, "mean = mu_scale * ones")
      ->capture_default_str();
  cmd->add_option("--psi-spec", s.psi_spec,
                  "covariance diagonal: 'lo:hi' geometric ladder or comma list")
      ->capture_default_str();
}

dppmt::SyntheticModelSpec build_synthetic(const SyntheticFlags& s) {
  if (s.d < 1) throw UsageError("--d must be positive");
  dppmt::SyntheticModelSpec spec;
  const auto d = static_cast<dppmt::Index>(s.d);
  dppmt::VectorXd diag;
  const std::size_t colon = s.psi_spec.find(':');
  if (colon != std::string::npos) {
    const auto lo = parse_list<double>("--psi-spec", s.psi_spec.substr(0, colon));
    const auto hi = parse_list<double>("--psi-spec", s.psi_spec.substr(colon + 1));
    if (lo.size() != 1 || hi.size() != 1) {
      throw UsageError("--psi-spec ladder must be 'lo:hi'");
    }
    diag = dppmt::geometric_ladder(d, lo[0], hi[0]);
  } else {
    const auto vals = parse_list<double>("--psi-spec", s.psi_spec);
    if (vals.size() != static_cast<std::size_t>(d)) {
      throw UsageError("--psi-spec needs " + std::to_string(d) + " entries");
    }
    diag = Eigen::Map<const dppmt::VectorXd>(vals.data(), d);
  }
  spec.mean = dppmt::VectorXd::Constant(d, s.mu_scale);
  spec.covariance = dppmt::SymmetricMatrix::diagonal(diag);
  spec.noise_std = 0.05;
  spec.validate();
  return spec;
}

dppmt::ExperimentGrid build_grid(const GridFlags& g,
                                 dppmt::Reference default_reference) {
  dppmt::ExperimentGrid grid;
  grid.methods = parse_methods(g.methods);
  grid.rho_values = parse_list<double>("--rho", g.rho);
  grid.n_priv_values = parse_list<std::size_t>("--n-priv", g.n_priv);
  grid.n_pub_values = parse_list<std::size_t>("--n-pub", g.n_pub);
  grid.eta = g.eta;
  grid.trials = g.trials;
  grid.seed = g.seed;
  grid.reference = default_reference;
  if (!g.reference.empty()) {
    try {
      grid.reference = dppmt::parse_reference(g.reference);
    } catch (const dppmt::InvalidInput& e) {
      throw UsageError(e.what());
    }
  }
  return grid;
}

int run_and_emit(const dppmt::ExperimentGrid& grid,
                 const dppmt::DataSource& source, const GridFlags& g,
                 dppmt::SplitMode mode) {
  dppmt::RunOptions opts;
  opts.estimator.zero_noise = g.zero_noise;
  opts.split_mode = mode;
  opts.threads = g.threads;
  const auto results = dppmt::run_grid(grid, source, opts);
  dppmt::emit_csv(results, g.out);
  std::cout << "wrote " << results.size() << " cells to " << g.out << "\n";
  return 0;
}

dppmt::LabeledDataset load_normalized(const std::string& path, char delim,
                                      const std::string& response) {
  if (!std::filesystem::is_regular_file(path)) {
    throw UsageError("data file not found: " + path);
  }
  return dppmt::normalize(dppmt::ingest_csv(path, delim, response)).data;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json diagnostics_json(const dppmt::SpectralDiagnostics& s,
                                const dppmt::TheoryBounds& b) {
  nlohmann::json j;
  std::vector<double> ev(s.eigenvalues.data(),
                         s.eigenvalues.data() + s.eigenvalues.size());
  j["eigenvalues"] = ev;
  j["trace"] = finite_or_null(s.trace);
  j["avg_trace"] = finite_or_null(s.avg_trace);
  j["lambda_min"] = finite_or_null(s.lambda_min);
  j["lambda_max"] = finite_or_null(s.lambda_max);
  j["cond"] = finite_or_null(s.cond);
  j["avg_cond"] = finite_or_null(s.avg_cond);
  j["L"] = finite_or_null(b.lower_L);
  j["U"] = finite_or_null(b.upper_U);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private least squares with a public "
               "second-moment preconditioner"};
  app.require_subcommand(1);

  GridFlags synth_grid;
  SyntheticFlags synth_model;
  CLI::App* synth = app.add_subcommand("synth", "sweep on synthetic data");
  add_grid_flags(synth, synth_grid);
  add_synthetic_flags(synth, synth_model);

  GridFlags real_grid;
  std::string real_data, real_delim = ";", real_response = "quality",
                         real_split = "random";
  CLI::App* real = app.add_subcommand("real", "sweep on a CSV dataset");
  real->add_option("--data", real_data, "input CSV")->required();
  real->add_option("--delimiter", real_delim, "cell delimiter")
      ->capture_default_str();
  real->add_option("--response", real_response, "response column")
      ->capture_default_str();
  real->add_option("--split", real_split, "random|head")->capture_default_str();
  add_grid_flags(real, real_grid);

  SyntheticFlags diag_model;
  std::string diag_data, diag_delim = ";", diag_response = "quality",
                         diag_split = "random", diag_target = "private";
  std::size_t diag_n_pub = 0, diag_n_priv = 2000;
  std::uint64_t diag_seed = 0;
  double diag_eta = 0.05;
  CLI::App* diagnose =
      app.add_subcommand("diagnose", "print spectral diagnostics as JSON");
  diagnose->add_option("--data", diag_data, "input CSV (default: synthetic)");
  diagnose->add_option("--delimiter", diag_delim, "cell delimiter")
      ->capture_default_str();
  diagnose->add_option("--response", diag_response, "response column")
      ->capture_default_str();
  diagnose->add_option("--split", diag_split, "random|head")->capture_default_str();
  diagnose->add_option("--n-pub", diag_n_pub,
                       "public rows (default 249 for --data, else 20)");
  diagnose->add_option("--n-priv", diag_n_priv,
                       "private rows (synthetic; --data uses the rest)")
      ->capture_default_str();
  diagnose->add_option("--seed", diag_seed, "seed")->capture_default_str();
  diagnose->add_option("--eta", diag_eta, "failure probability")
      ->capture_default_str();
  diagnose->add_option("--target", diag_target,
                       "private|transformed|public|population")
      ->capture_default_str();
  add_synthetic_flags(diagnose, diag_model);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }

    if (*synth) {
      const dppmt::SyntheticModelSpec spec = build_synthetic(synth_model);
      const dppmt::ExperimentGrid grid =
          build_grid(synth_grid, dppmt::Reference::kTrueBeta);
      return run_and_emit(grid, spec, synth_grid,
                          dppmt::SplitMode::kRandomWithoutReplacement);
    }
    if (*real) {
      const dppmt::SplitMode mode = parse_split(real_split);
      const dppmt::ExperimentGrid grid =
          build_grid(real_grid, dppmt::Reference::kNonprivateOlse);
      const dppmt::LabeledDataset data =
          load_normalized(real_data, parse_delimiter(real_delim), real_response);
      return run_and_emit(grid, data, real_grid, mode);
    }

    // diagnose
    dppmt::LabeledDataset pub, priv;
    std::optional<dppmt::SymmetricMatrix> population;
    if (!diag_data.empty()) {
      const dppmt::LabeledDataset data = load_normalized(
          diag_data, parse_delimiter(diag_delim), diag_response);
      const std::size_t n_pub = diag_n_pub ? diag_n_pub : 249;
      if (n_pub >= static_cast<std::size_t>(data.n())) {
        throw UsageError("--n-pub leaves no private rows");
      }
      dppmt::SplitSpec spec{n_pub, static_cast<std::size_t>(data.n()) - n_pub,
                            diag_seed, parse_split(diag_split)};
      dppmt::SplitResult s = dppmt::split(data, spec);
      pub = std::move(s.pub);
      priv = std::move(s.priv);
    } else {
      dppmt::SyntheticModelSpec spec = build_synthetic(diag_model);
      dppmt::RandomStream rng(diag_seed);
      spec = dppmt::with_drawn_coefficients(spec, rng);
      pub = dppmt::generate(spec, static_cast<dppmt::Index>(diag_n_pub ? diag_n_pub : 20), rng);
      priv = dppmt::generate(spec, static_cast<dppmt::Index>(diag_n_priv), rng);
      population = spec.second_moment();
    }
    const dppmt::PublicMoments moments = dppmt::public_moments(pub);
    const auto d = static_cast<std::size_t>(priv.d());
    const dppmt::TheoryBounds bounds =
        dppmt::theory_bracket(d, moments.n_pub, diag_eta);
    const dppmt::SymmetricMatrix raw(
        (priv.features.transpose() * priv.features) /
        static_cast<double>(priv.n()));

    dppmt::SpectralDiagnostics diag;
    if (diag_target == "private") {
      diag = dppmt::diagnostics(raw);
    } else if (diag_target == "public") {
      diag = dppmt::diagnostics(moments.feature_moment);
    } else if (diag_target == "transformed") {
      const dppmt::MatrixXd p = dppmt::inv_sqrt(moments.feature_moment).matrix.matrix();
      diag = dppmt::diagnostics(dppmt::SymmetricMatrix(p * raw.matrix() * p));
    } else if (diag_target == "population" && population) {
      diag = dppmt::diagnostics(*population);
    } else {
      throw UsageError("unsupported --target '" + diag_target + "'");
    }
    nlohmann::json j = diagnostics_json(diag, bounds);
    j["target"] = diag_target;
    j["d"] = d;
    j["n_pub"] = moments.n_pub;
    j["n_priv"] = priv.n();
    std::cout << j.dump() << "\n";
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dppmt::IoError& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const dppmt::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dppmt::InvalidInput& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return kExitRuntime;
  }
}
