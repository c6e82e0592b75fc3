/*
 * Copyright 2026 The gdgpirt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gdgpirt_cli/cli.hpp"

#include "gdgpirt/data_model.hpp"
#include "gdgpirt/error.hpp"
#include "gdgpirt/gibbs.hpp"
#include "gdgpirt/io.hpp"
#include "gdgpirt/metrics.hpp"
#include "gdgpirt/posterior.hpp"
#include "gdgpirt/synthetic.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

namespace gdgpirt::cli {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void require_valid(const ResponseDataset& dataset) {
  const auto issues = validate_dataset(dataset);
  if (issues.empty()) return;
  std::string msg = "invalid dataset:";
  const std::size_t shown = std::min<std::size_t>(issues.size(), 10);
  for (std::size_t k = 0; k < shown; ++k) msg += "\n  " + issues[k].message;
  if (issues.size() > shown) msg += "\n  ... " + std::to_string(issues.size() - shown) + " more";
  throw DataError(msg);
}

/// Keeps periods 1..keep and shrinks the shape accordingly.
ResponseDataset leading_periods(const ResponseDataset& d, int keep) {
  ResponseDataset out = d;
  out.n_periods = keep;
  out.observations.clear();
  for (const auto& o : d.observations)
    if (o.period < keep) out.observations.push_back(o);
  return out;
}

ResponseDataset trailing_periods(const ResponseDataset& d, int from) {
  ResponseDataset out = d;
  out.observations.clear();
  for (const auto& o : d.observations)
    if (o.period >= from) out.observations.push_back(o);
  return out;
}

/// Reads held-out responses and checks them against a fitted shape.
/// Periods are only bounded when `max_period` is positive.
std::vector<Observation> read_targets(const fs::path& path, const ModelShape& shape, int max_period) {
  // Categories are checked against the fitted shape below, not taken from
  // the file, so held-out data may cover any subset of items.
  CsvOptions opts;
  opts.items_shared = shape.items_shared;
  const auto data = read_dataset_csv(path, opts);
  for (const auto& o : data.observations) {
    const std::string where = "held-out row (" + std::to_string(o.respondent + 1) + "," + std::to_string(o.item + 1) +
                              "," + std::to_string(o.period + 1) + ")";
    if (o.respondent >= shape.n_respondents) throw DataError(where + ": respondent not in the fitted model");
    if (o.item >= shape.n_items) throw DataError(where + ": item not in the fitted model");
    if (max_period > 0 && o.period >= max_period) throw DataError(where + ": period not in the fitted model");
    if (o.response > shape.categories_per_item[static_cast<std::size_t>(o.item)])
      throw DataError(where + ": response exceeds the item's categories");
  }
  return data.observations;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    int v = 0;
    const auto* b = part.data();
    const auto res = std::from_chars(b, b + part.size(), v);
    if (part.empty() || res.ec != std::errc() || res.ptr != b + part.size())
      throw ConfigError(what + " expects a comma-separated list of integers");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(what + " is empty");
  return out;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool shared = false;
  std::optional<double> test_fraction;
  int forecast_holdout = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimConfig cfg;
  double test_fraction = 0.2;
  if (!a.config.empty()) cfg = sim_config_from(parse_key_values(read_text(a.config)), cfg, &test_fraction);
  if (a.seed) cfg.seed = *a.seed;
  if (a.shared) cfg.items_shared = true;
  if (a.test_fraction) test_fraction = *a.test_fraction;
  cfg.validate();
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in [0, 1)");
  if (a.forecast_holdout < 0 || a.forecast_holdout >= cfg.T)
    throw ConfigError("forecast holdout must lie in [0, T)");

  const HyperParams hyper;
  const auto sim = generate(cfg, DenseGrid(hyper));
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_dataset_csv(dir / "data.csv", sim.dataset);
  write_truth(dir / "truth", sim.truth, ModelShape::from(sim.dataset, hyper));

  auto [train, test] = test_fraction > 0.0 ? train_test_split(sim.dataset, 1.0 - test_fraction, cfg.seed)
                                           : std::pair{sim.dataset, sim.dataset};
  if (test_fraction == 0.0) test.observations.clear();
  write_dataset_csv(dir / "train.csv", train);
  write_dataset_csv(dir / "test.csv", test);

  std::ostringstream manifest;
  manifest << "seed = " << cfg.seed << "\n"
           << "test_fraction = " << num(test_fraction) << "\n"
           << "observations = " << sim.dataset.size() << "\n"
           << "train_file = train.csv\n"
           << "train_rows = " << train.size() << "\n"
           << "test_file = test.csv\n"
           << "test_rows = " << test.size() << "\n";
  if (a.forecast_holdout > 0) {
    const int keep = cfg.T - a.forecast_holdout;
    const auto fit_part = leading_periods(sim.dataset, keep);
    const auto future = trailing_periods(sim.dataset, keep);
    write_dataset_csv(dir / "forecast_fit.csv", fit_part);
    write_dataset_csv(dir / "forecast_holdout.csv", future);
    manifest << "forecast_fit_file = forecast_fit.csv\n"
             << "forecast_fit_periods = " << keep << "\n"
             << "forecast_holdout_file = forecast_holdout.csv\n"
             << "forecast_holdout_rows = " << future.size() << "\n";
  }
  write_text(dir / "split.txt", manifest.str());

  std::ostringstream resolved;
  resolved << "n = " << cfg.n << "\nm = " << cfg.m << "\nT = " << cfg.T << "\nC = " << cfg.C
           << "\nlen_scale_t = " << num(cfg.len_scale_t) << "\nlen_scale_x = " << num(cfg.len_scale_x)
           << "\nvar_intercept = " << num(cfg.var_intercept) << "\nvar_slope = " << num(cfg.var_slope)
           << "\nthreshold_low = " << num(cfg.threshold_low) << "\nthreshold_high = " << num(cfg.threshold_high)
           << "\nitems_shared = " << (cfg.items_shared ? "true" : "false") << "\nseed = " << cfg.seed
           << "\ntest_fraction = " << num(test_fraction) << "\n";
  write_text(dir / "simulation.conf", resolved.str());

  out << "simulated " << sim.dataset.size() << " responses into " << dir.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains, burnin, iters, thin, threads;
  std::optional<std::string> time_kernel;
  bool shared = false;
  std::optional<long> sparse_threshold;
  bool strict = false;
  bool no_timestamp = false;
  bool verbose = false;
  int irf_stride = 1;
};

std::string diagnostics_verdict(const std::vector<BlockDiagnostics>& rows, bool* failed) {
  int rhat_bad = 0, ess_bad = 0;
  double max_rhat = 0.0, min_ess = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    rhat_bad += r.n_rhat_flagged;
    ess_bad += r.n_ess_flagged;
    if (r.n_params > 0) {
      max_rhat = std::max(max_rhat, r.max_rhat);
      min_ess = std::min(min_ess, r.min_ess);
    }
  }
  *failed = rhat_bad > 0 || ess_bad > 0;
  std::ostringstream s;
  s << "max_rhat = " << num(max_rhat) << "\nmin_ess = " << num(min_ess) << "\nrhat_flagged = " << rhat_bad
    << "\ness_flagged = " << ess_bad << "\nconverged = " << (*failed ? "false" : "true") << "\n";
  return s.str();
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  FitConfig cfg;
  if (!a.config.empty()) cfg = fit_config_from(parse_key_values(read_text(a.config)), cfg);
  auto& s = cfg.sampler;
  auto& h = cfg.hyper;
  if (a.seed) s.seed = *a.seed;
  if (a.chains) s.n_chains = *a.chains;
  if (a.burnin) s.burn_in = *a.burnin;
  if (a.iters) s.n_iterations = *a.iters;
  if (a.thin) s.thin = *a.thin;
  if (a.threads) s.threads = *a.threads;
  if (a.time_kernel) h.time_kernel = parse_time_kernel(*a.time_kernel);
  if (a.sparse_threshold) h.sparse_threshold = *a.sparse_threshold;
  if (a.shared) cfg.items_shared = true;
  if (a.irf_stride < 1) throw ConfigError("--irf-stride must be at least 1");
  h.validate();
  s.validate();

  CsvOptions opts;
  opts.categories = cfg.categories;
  opts.items_shared = cfg.items_shared;
  const auto data = read_dataset_csv(a.data, opts);
  require_valid(data);

  std::mutex log_mutex;
  std::function<void(int, int)> progress;
  if (a.verbose) {
    progress = [&](int chain, int iteration) {
      if (iteration % 100 != 0) return;
      std::lock_guard lock(log_mutex);
      err << "chain " << chain + 1 << " iteration " << iteration << "\n";
    };
  }
  const auto started = std::chrono::steady_clock::now();
  const auto samples = align_signs(gdgpirt::run(data, h, s, progress));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_posterior(dir / "posterior", samples);
  write_dataset_csv(dir / "data.csv", data);
  write_trait_summary(dir / "traits.csv", summarize_traits(samples));
  write_icc_exports(dir / "icc", samples.shape, summarize_icc(samples));

  DiagnosticsOptions dopts;
  dopts.irf_stride = a.irf_stride;
  const auto diag = diagnose(samples, dopts);
  write_text(dir / "diagnostics.csv", format_diagnostics_csv(diag));

  bool failed = false;
  std::ostringstream report;
  report << "command = fit\n";
  if (!a.no_timestamp) report << "generated = " << timestamp() << "\nelapsed_seconds = " << num(seconds) << "\n";
  report << "respondents = " << data.n_respondents << "\nitems = " << data.n_items << "\nperiods = " << data.n_periods
         << "\nobservations = " << data.size() << "\nitems_shared = " << (data.items_shared_across_time ? "true" : "false")
         << "\ntime_kernel = " << to_string(h.time_kernel) << "\nchains = " << s.n_chains << "\nburn_in = " << s.burn_in
         << "\niterations = " << s.n_iterations << "\nthin = " << s.thin << "\nseed = " << s.seed << "\n"
         << diagnostics_verdict(diag, &failed);
  write_text(dir / "report.txt", report.str());

  out << "fit " << data.size() << " responses; draws written to " << (dir / "posterior").string() << "\n";
  if (failed) {
    err << "convergence checks flagged parameters (see " << (dir / "diagnostics.csv").string() << ")\n";
    if (a.strict) return kDiagnostics;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::string fit;
  std::string out;
  bool strict = false;
  int irf_stride = 1;
};

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out, std::ostream& err) {
  if (a.irf_stride < 1) throw ConfigError("--irf-stride must be at least 1");
  const auto samples = load_posterior(fs::path(a.fit) / "posterior");
  DiagnosticsOptions dopts;
  dopts.irf_stride = a.irf_stride;
  const auto diag = diagnose(samples, dopts);
  const auto csv = format_diagnostics_csv(diag);
  bool failed = false;
  const auto verdict = diagnostics_verdict(diag, &failed);
  if (a.out.empty()) {
    out << csv;
  } else {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "diagnostics.csv", csv);
  }
  err << verdict;
  return failed && a.strict ? kDiagnostics : kOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string fit;
  std::string data;
  std::string out;
};

std::string scores_csv(const Prediction& pred, std::span<const Observation> targets) {
  std::vector<int> responses;
  responses.reserve(targets.size());
  for (const auto& o : targets) responses.push_back(o.response);
  const auto sc = predictive_scores(pred.probs, responses);
  return "metric,value\naccuracy," + num(sc.accuracy) + "\nmean_loglik," + num(sc.mean_loglik) + "\nauc," +
         num(sc.auc) + "\nn," + std::to_string(targets.size()) + "\n";
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const auto samples = load_posterior(fs::path(a.fit) / "posterior");
  const auto targets = read_targets(a.data, samples.shape, samples.shape.n_periods);
  if (targets.empty()) throw DataError("no held-out responses in " + a.data);
  const auto pred = predict_responses(samples, targets);

  std::string rows = "respondent,item,time,response,predicted,prob_response\n";
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto& o = targets[k];
    rows += std::to_string(o.respondent + 1) + ',' + std::to_string(o.item + 1) + ',' + std::to_string(o.period + 1) +
            ',' + std::to_string(o.response) + ',' + std::to_string(pred.point[k]) + ',' +
            num(pred.probs[k][static_cast<std::size_t>(o.response - 1)]) + '\n';
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_text(dir / "predictions.csv", rows);
  const auto scores = scores_csv(pred, targets);
  write_text(dir / "scores.csv", scores);
  out << scores;
  return kOk;
}

// ---------------------------------------------------------------------------

struct ForecastArgs {
  std::string fit;
  std::string horizons;
  std::string data;
  std::string out;
};

int cmd_forecast(const ForecastArgs& a, std::ostream& out) {
  const auto samples = load_posterior(fs::path(a.fit) / "posterior");
  const int T = samples.shape.n_periods;
  auto periods = parse_int_list(a.horizons, "--horizons");
  std::sort(periods.begin(), periods.end());
  periods.erase(std::unique(periods.begin(), periods.end()), periods.end());
  for (int p : periods)
    if (p <= T)
      throw ConfigError("forecast horizon " + std::to_string(p) + " must exceed the fitted periods (T = " +
                        std::to_string(T) + ")");

  const auto targets = read_targets(a.data, samples.shape, 0);
  CsvOptions topts;
  topts.items_shared = samples.shape.items_shared;
  topts.categories = samples.shape.categories_per_item;
  const auto modes = marginal_modes(read_dataset_csv(fs::path(a.fit) / "data.csv", topts));
  const auto forecast = forecast_traits(samples, periods);

  std::string csv = "horizon,period,n,accuracy,mean_loglik,auc,baseline_accuracy,trait_variance\n";
  for (std::size_t k = 0; k < periods.size(); ++k) {
    const int p = periods[k];
    TraitForecast one;
    one.periods = {p};
    one.mean = {forecast.mean[k]};
    one.variance = {forecast.variance[k]};
    one.weights_sum = {forecast.weights_sum[k]};
    std::vector<Observation> at;
    for (const auto& o : targets)
      if (o.period + 1 == p) at.push_back(o);
    csv += std::to_string(p - T) + ',' + std::to_string(p) + ',' + std::to_string(at.size()) + ',';
    if (at.empty()) {
      csv += "nan,nan,nan,nan," + num(forecast.variance[k]) + '\n';
      continue;
    }
    const auto pred = forecast_responses(samples, one, at);
    std::vector<int> responses;
    for (const auto& o : at) responses.push_back(o.response);
    const auto sc = predictive_scores(pred.probs, responses);
    csv += num(sc.accuracy) + ',' + num(sc.mean_loglik) + ',' + num(sc.auc) + ',' +
           num(marginal_mode_accuracy(modes, at)) + ',' + num(forecast.variance[k]) + '\n';
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_text(dir / "forecast_scores.csv", csv);
  out << csv;
  return kOk;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string fit;
  std::string out;
};

int cmd_export_icc(const ExportArgs& a, std::ostream& out) {
  const auto samples = load_posterior(fs::path(a.fit) / "posterior");
  fs::create_directories(a.out);
  write_icc_exports(a.out, samples.shape, summarize_icc(samples));
  out << "wrote " << samples.shape.n_blocks() << " ICC files to " << a.out << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized dynamic Gaussian-process item response theory"};
  app.name("gdgpirt");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset with ground truth");
  simulate->add_option("--config", sim.config, "Simulation config (key = value)")->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_flag("--shared-items", sim.shared, "Reuse items across periods");
  simulate->add_option("--test-fraction", sim.test_fraction, "Held-out share of responses (default 0.2)");
  simulate->add_option("--forecast-holdout", sim.forecast_holdout, "Hold out the last K periods for forecasting");

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Run the MCMC sampler");
  fitc->add_option("--data", fit.data, "Response CSV")->required()->check(CLI::ExistingFile);
  fitc->add_option("--config", fit.config, "Fit config (key = value)")->check(CLI::ExistingFile);
  fitc->add_option("--out", fit.out, "Output directory")->required();
  fitc->add_option("--seed", fit.seed, "Random seed");
  fitc->add_option("--chains", fit.chains, "Number of chains");
  fitc->add_option("--burnin", fit.burnin, "Burn-in iterations per chain");
  fitc->add_option("--iters", fit.iters, "Post burn-in iterations per chain");
  fitc->add_option("--thin", fit.thin, "Keep every k-th iteration");
  fitc->add_option("--threads", fit.threads, "Worker threads");
  fitc->add_option("--time-kernel", fit.time_kernel, "matern52, wiener or static")
      ->check(CLI::IsMember({"matern52", "wiener", "static"}));
  fitc->add_flag("--shared-items", fit.shared, "Items are the same in every period");
  fitc->add_option("--sparse-threshold", fit.sparse_threshold, "n*T above which shared items use inducing points");
  fitc->add_flag("--strict", fit.strict, "Exit with code 4 when convergence checks fail");
  fitc->add_flag("--no-timestamp", fit.no_timestamp, "Omit run-time lines from report.txt");
  fitc->add_flag("--verbose", fit.verbose, "Report progress on stderr");
  fitc->add_option("--irf-stride", fit.irf_stride, "Monitor every k-th grid node of each IRF");

  DiagnoseArgs dg;
  auto* diag = app.add_subcommand("diagnose", "Recompute convergence diagnostics for a fit");
  diag->add_option("--fit", dg.fit, "Fit output directory")->required()->check(CLI::ExistingDirectory);
  diag->add_option("--out", dg.out, "Output directory (default: stdout)");
  diag->add_flag("--strict", dg.strict, "Exit with code 4 when convergence checks fail");
  diag->add_option("--irf-stride", dg.irf_stride, "Monitor every k-th grid node of each IRF");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Score held-out responses");
  predict->add_option("--fit", pr.fit, "Fit output directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--data", pr.data, "Held-out response CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pr.out, "Output directory")->required();

  ForecastArgs fc;
  auto* forecast = app.add_subcommand("forecast", "Score responses in periods after the fitted range");
  forecast->add_option("--fit", fc.fit, "Fit output directory")->required()->check(CLI::ExistingDirectory);
  forecast->add_option("--horizons", fc.horizons, "Comma-separated target periods, each greater than T")->required();
  forecast->add_option("--data", fc.data, "Held-out response CSV")->required()->check(CLI::ExistingFile);
  forecast->add_option("--out", fc.out, "Output directory")->required();

  ExportArgs ex;
  auto* exporter = app.add_subcommand("export-icc", "Write ICC curves with 90% bands");
  exporter->add_option("--fit", ex.fit, "Fit output directory")->required()->check(CLI::ExistingDirectory);
  exporter->add_option("--out", ex.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (fitc->parsed()) return cmd_fit(fit, out, err);
    if (diag->parsed()) return cmd_diagnose(dg, out, err);
    if (predict->parsed()) return cmd_predict(pr, out);
    if (forecast->parsed()) return cmd_forecast(fc, out);
    if (exporter->parsed()) return cmd_export_icc(ex, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}

}  // namespace gdgpirt::cli
