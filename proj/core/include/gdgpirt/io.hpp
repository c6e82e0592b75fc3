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

#pragma once

#include "gdgpirt/data_model.hpp"
#include "gdgpirt/metrics.hpp"
#include "gdgpirt/posterior.hpp"
#include "gdgpirt/synthetic.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gdgpirt {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Response CSV

struct CsvOptions {
  /// Categories per item; when empty they are inferred as max(observed, 2).
  /// A single entry applies to every item.
  std::vector<int> categories;
  std::optional<bool> items_shared;
  /// Lower bounds on the inferred shape (used when reading held-out data
  /// against a fitted model).
  int min_respondents = 0;
  int min_items = 0;
  int min_periods = 0;
};

/// Parses the long format `respondent,item,time,response` (1-based). An
/// optional leading `# shape` comment written by write_dataset_csv restores
/// the exact shape and categories. Malformed rows throw DataError with the
/// line number. The result is not validated.
ResponseDataset parse_dataset_csv(const std::string& text, const CsvOptions& options = {});
ResponseDataset read_dataset_csv(const fs::path& path, const CsvOptions& options = {});

std::string format_dataset_csv(const ResponseDataset& dataset);
void write_dataset_csv(const fs::path& path, const ResponseDataset& dataset);

// ---------------------------------------------------------------------------
// Flat key = value configuration

/// Parses `key = value` lines; `#` starts a comment, values may be quoted.
/// Section headers are rejected so the format stays flat.
std::map<std::string, std::string> parse_key_values(const std::string& text);

struct FitConfig {
  HyperParams hyper;
  SamplerConfig sampler;
  std::optional<bool> items_shared;
  std::vector<int> categories;
};

/// Applies recognised keys to the config; unknown keys throw ConfigError.
FitConfig fit_config_from(const std::map<std::string, std::string>& values, FitConfig base = {});
SimConfig sim_config_from(const std::map<std::string, std::string>& values, SimConfig base = {},
                          double* test_fraction = nullptr);
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

// ---------------------------------------------------------------------------
// Posterior storage

/// Writes manifest.json plus one binary draws file per chain.
void save_posterior(const fs::path& dir, const PosteriorSamples& samples);
PosteriorSamples load_posterior(const fs::path& dir);

// ---------------------------------------------------------------------------
// Plot-ready exports

void write_trait_summary(const fs::path& path, const TraitSummary& summary);
/// One CSV per IRF block with columns x,icc_mean,icc_q05,icc_q95.
void write_icc_exports(const fs::path& dir, const ModelShape& shape, const std::vector<IccSummary>& iccs);
std::string icc_file_name(const ModelShape& shape, int block);

std::string format_diagnostics_csv(const std::vector<BlockDiagnostics>& rows);

/// Truth sidecars: traits, per-block true ICC grids, cutpoints and lines.
void write_truth(const fs::path& dir, const GroundTruth& truth, const ModelShape& shape);

struct MetricRow {
  std::string variant;
  std::string metric;
  double value = 0.0;
  double std_error = 0.0;
};
std::string format_metrics_csv(const std::vector<MetricRow>& rows);

}  // namespace gdgpirt
