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

#include "gdgpirt/io.hpp"

#include "gdgpirt/error.hpp"
#include "gdgpirt/ordinal.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace gdgpirt {
namespace {

using json = nlohmann::json;

constexpr char kDrawMagic[8] = {'G', 'D', 'G', 'P', 'D', 'R', 'W', '1'};
constexpr const char* kShapeTag = "# shape";

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

int parse_int_field(const std::string& s, std::size_t line, const char* what) {
  int v = 0;
  if (!parse_number(s, v))
    throw DataError("line " + std::to_string(line) + ": " + what + " '" + s + "' is not an integer");
  return v;
}

// `# shape n=.. m=.. T=.. shared=0|1 categories=a;b;c`
void apply_shape_comment(const std::string& line, ResponseDataset& d, std::vector<int>& categories,
                         std::optional<bool>& shared) {
  std::istringstream in(line.substr(std::strlen(kShapeTag)));
  std::string field;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw DataError("malformed shape comment field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    int v = 0;
    if (key == "categories") {
      categories.clear();
      for (const auto& c : split(value, ';')) {
        if (!parse_number(c, v)) throw DataError("malformed shape comment categories");
        categories.push_back(v);
      }
      continue;
    }
    if (!parse_number(value, v)) throw DataError("malformed shape comment value '" + field + "'");
    if (key == "n") d.n_respondents = v;
    else if (key == "m") d.n_items = v;
    else if (key == "T") d.n_periods = v;
    else if (key == "shared") shared = v != 0;
    else throw DataError("unknown shape comment field '" + key + "'");
  }
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

double to_double(const std::map<std::string, std::string>::value_type& kv) {
  double v = 0.0;
  if (!parse_number(kv.second, v)) throw ConfigError("config key '" + kv.first + "' expects a number");
  return v;
}

long to_long(const std::map<std::string, std::string>::value_type& kv) {
  long v = 0;
  if (!parse_number(kv.second, v)) throw ConfigError("config key '" + kv.first + "' expects an integer");
  return v;
}

int to_int(const std::map<std::string, std::string>::value_type& kv) { return static_cast<int>(to_long(kv)); }

bool to_bool(const std::map<std::string, std::string>::value_type& kv) {
  if (kv.second == "true" || kv.second == "1") return true;
  if (kv.second == "false" || kv.second == "0") return false;
  throw ConfigError("config key '" + kv.first + "' expects true or false");
}

std::vector<int> to_int_list(const std::map<std::string, std::string>::value_type& kv) {
  std::string s = kv.second;
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<int> out;
  for (const auto& part : split(s, ',')) {
    int v = 0;
    if (!parse_number(part, v)) throw ConfigError("config key '" + kv.first + "' expects a list of integers");
    out.push_back(v);
  }
  return out;
}

json hyper_to_json(const HyperParams& h) {
  return {{"len_scale_x", h.len_scale_x},
          {"len_scale_t", h.len_scale_t},
          {"var_slope", h.var_slope},
          {"var_intercept", h.var_intercept},
          {"var_log_padding", h.var_log_padding},
          {"var_first_threshold", h.var_first_threshold},
          {"grid_min", h.grid_min},
          {"grid_max", h.grid_max},
          {"grid_points", h.grid_points},
          {"jitter", h.jitter},
          {"time_kernel", to_string(h.time_kernel)},
          {"wiener_anchor_var", h.wiener_anchor_var},
          {"wiener_diffusion_var", h.wiener_diffusion_var},
          {"threshold_scope", to_string(h.threshold_scope)},
          {"sparse_inducing_count", h.sparse_inducing_count},
          {"knn_k", h.knn_k},
          {"sparse_threshold", h.sparse_threshold},
          {"init", to_string(h.init)},
          {"frozen_trait_sweeps", h.frozen_trait_sweeps},
          {"trait_steps", h.trait_steps},
          {"irf_steps", h.irf_steps},
          {"beta_steps", h.beta_steps},
          {"auxiliary_moves", h.auxiliary_moves}};
}

HyperParams hyper_from_json(const json& j) {
  HyperParams h;
  h.len_scale_x = j.at("len_scale_x");
  h.len_scale_t = j.at("len_scale_t");
  h.var_slope = j.at("var_slope");
  h.var_intercept = j.at("var_intercept");
  h.var_log_padding = j.at("var_log_padding");
  h.var_first_threshold = j.at("var_first_threshold");
  h.grid_min = j.at("grid_min");
  h.grid_max = j.at("grid_max");
  h.grid_points = j.at("grid_points");
  h.jitter = j.at("jitter");
  h.time_kernel = parse_time_kernel(j.at("time_kernel"));
  h.wiener_anchor_var = j.at("wiener_anchor_var");
  h.wiener_diffusion_var = j.at("wiener_diffusion_var");
  h.threshold_scope = parse_threshold_scope(j.at("threshold_scope"));
  h.sparse_inducing_count = j.at("sparse_inducing_count");
  h.knn_k = j.at("knn_k");
  h.sparse_threshold = j.at("sparse_threshold");
  h.init = parse_init_strategy(j.at("init"));
  h.frozen_trait_sweeps = j.at("frozen_trait_sweeps");
  h.trait_steps = j.at("trait_steps");
  h.irf_steps = j.at("irf_steps");
  h.beta_steps = j.at("beta_steps");
  h.auxiliary_moves = j.at("auxiliary_moves");
  return h;
}

void put(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

double get(std::istream& in) {
  double v = 0.0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::string chain_file(int c) { return "draws_chain" + std::to_string(c + 1) + ".bin"; }

}  // namespace

// ---------------------------------------------------------------------------

ResponseDataset parse_dataset_csv(const std::string& text, const CsvOptions& options) {
  ResponseDataset d;
  std::vector<int> categories = options.categories;
  std::optional<bool> shared = options.items_shared;
  bool shape_given = false;
  bool header_seen = false;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  int max_i = 0;
  int max_j = 0;
  int max_t = 0;
  std::vector<int> max_response;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!header_seen && line.rfind(kShapeTag, 0) == 0) {
        std::optional<bool> comment_shared;
        std::vector<int> comment_categories;
        apply_shape_comment(line, d, comment_categories, comment_shared);
        if (categories.empty()) categories = comment_categories;
        if (!shared) shared = comment_shared;
        shape_given = true;
      }
      continue;
    }
    if (!header_seen) {
      const auto cols = split(line, ',');
      if (cols != std::vector<std::string>{"respondent", "item", "time", "response"})
        throw DataError("line " + std::to_string(line_no) + ": expected header respondent,item,time,response");
      header_seen = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 4)
      throw DataError("line " + std::to_string(line_no) + ": expected 4 fields, found " + std::to_string(cols.size()));
    const int i = parse_int_field(cols[0], line_no, "respondent");
    const int j = parse_int_field(cols[1], line_no, "item");
    const int t = parse_int_field(cols[2], line_no, "time");
    const int y = parse_int_field(cols[3], line_no, "response");
    if (i < 1 || j < 1 || t < 1) throw DataError("line " + std::to_string(line_no) + ": indices are 1-based");
    if (y < 1) throw DataError("line " + std::to_string(line_no) + ": responses are 1-based categories");
    max_i = std::max(max_i, i);
    max_j = std::max(max_j, j);
    max_t = std::max(max_t, t);
    if (static_cast<int>(max_response.size()) < j) max_response.resize(static_cast<std::size_t>(j), 0);
    max_response[static_cast<std::size_t>(j - 1)] = std::max(max_response[static_cast<std::size_t>(j - 1)], y);
    d.observations.push_back({i - 1, j - 1, t - 1, y});
  }
  if (!header_seen) throw DataError("missing header respondent,item,time,response");

  if (!shape_given) {
    d.n_respondents = max_i;
    d.n_items = max_j;
    d.n_periods = max_t;
  }
  d.n_respondents = std::max(d.n_respondents, options.min_respondents);
  d.n_items = std::max(d.n_items, options.min_items);
  d.n_periods = std::max(d.n_periods, options.min_periods);
  max_response.resize(static_cast<std::size_t>(std::max(d.n_items, 0)), 0);
  if (categories.size() == 1 && d.n_items > 1) categories.assign(static_cast<std::size_t>(d.n_items), categories[0]);
  if (categories.empty()) {
    for (int r : max_response) d.categories_per_item.push_back(std::max(r, 2));
  } else {
    if (static_cast<int>(categories.size()) != d.n_items)
      throw DataError("category list has " + std::to_string(categories.size()) + " entries for " +
                      std::to_string(d.n_items) + " items");
    d.categories_per_item = categories;
  }
  d.items_shared_across_time = shared.value_or(false);
  return d;
}

ResponseDataset read_dataset_csv(const fs::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return parse_dataset_csv(read_text(path), options);
}

std::string format_dataset_csv(const ResponseDataset& d) {
  std::string out = std::string(kShapeTag) + " n=" + std::to_string(d.n_respondents) + " m=" + std::to_string(d.n_items) +
                    " T=" + std::to_string(d.n_periods) + " shared=" + (d.items_shared_across_time ? "1" : "0") +
                    " categories=";
  for (std::size_t j = 0; j < d.categories_per_item.size(); ++j)
    out += (j ? ";" : "") + std::to_string(d.categories_per_item[j]);
  out += "\nrespondent,item,time,response\n";
  for (const auto& o : d.observations)
    out += std::to_string(o.respondent + 1) + ',' + std::to_string(o.item + 1) + ',' + std::to_string(o.period + 1) +
           ',' + std::to_string(o.response) + '\n';
  return out;
}

void write_dataset_csv(const fs::path& path, const ResponseDataset& dataset) {
  write_text(path, format_dataset_csv(dataset));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path, true);
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (line[k] == '"') quoted = !quoted;
      if (line[k] == '#' && !quoted) {
        line.resize(k);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') throw ConfigError("line " + std::to_string(line_no) + ": sections are not supported");
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, value).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key);
  }
  return out;
}

FitConfig fit_config_from(const std::map<std::string, std::string>& values, FitConfig c) {
  for (const auto& kv : values) {
    const auto& k = kv.first;
    auto& h = c.hyper;
    auto& s = c.sampler;
    if (k == "len_scale_x") h.len_scale_x = to_double(kv);
    else if (k == "len_scale_t") h.len_scale_t = to_double(kv);
    else if (k == "var_slope") h.var_slope = to_double(kv);
    else if (k == "var_intercept") h.var_intercept = to_double(kv);
    else if (k == "var_log_padding") h.var_log_padding = to_double(kv);
    else if (k == "var_first_threshold") h.var_first_threshold = to_double(kv);
    else if (k == "grid_min") h.grid_min = to_double(kv);
    else if (k == "grid_max") h.grid_max = to_double(kv);
    else if (k == "grid_points") h.grid_points = to_int(kv);
    else if (k == "jitter") h.jitter = to_double(kv);
    else if (k == "time_kernel") h.time_kernel = parse_time_kernel(kv.second);
    else if (k == "wiener_anchor_var") h.wiener_anchor_var = to_double(kv);
    else if (k == "wiener_diffusion_var") h.wiener_diffusion_var = to_double(kv);
    else if (k == "threshold_scope") h.threshold_scope = parse_threshold_scope(kv.second);
    else if (k == "sparse_inducing_count") h.sparse_inducing_count = to_int(kv);
    else if (k == "knn_k") h.knn_k = to_int(kv);
    else if (k == "sparse_threshold") h.sparse_threshold = to_long(kv);
    else if (k == "init") h.init = parse_init_strategy(kv.second);
    else if (k == "frozen_trait_sweeps") h.frozen_trait_sweeps = to_int(kv);
    else if (k == "trait_steps") h.trait_steps = to_int(kv);
    else if (k == "irf_steps") h.irf_steps = to_int(kv);
    else if (k == "beta_steps") h.beta_steps = to_int(kv);
    else if (k == "auxiliary_moves") h.auxiliary_moves = to_bool(kv);
    else if (k == "chains") s.n_chains = to_int(kv);
    else if (k == "burn_in") s.burn_in = to_int(kv);
    else if (k == "iterations") s.n_iterations = to_int(kv);
    else if (k == "thin") s.thin = to_int(kv);
    else if (k == "seed") s.seed = static_cast<std::uint64_t>(to_long(kv));
    else if (k == "threads") s.threads = to_int(kv);
    else if (k == "items_shared") c.items_shared = to_bool(kv);
    else if (k == "categories") c.categories = to_int_list(kv);
    else throw ConfigError("unknown config key '" + k + "'");
  }
  return c;
}

SimConfig sim_config_from(const std::map<std::string, std::string>& values, SimConfig c, double* test_fraction) {
  for (const auto& kv : values) {
    const auto& k = kv.first;
    if (k == "n") c.n = to_int(kv);
    else if (k == "m") c.m = to_int(kv);
    else if (k == "T") c.T = to_int(kv);
    else if (k == "C") c.C = to_int(kv);
    else if (k == "len_scale_t") c.len_scale_t = to_double(kv);
    else if (k == "len_scale_x") c.len_scale_x = to_double(kv);
    else if (k == "var_intercept") c.var_intercept = to_double(kv);
    else if (k == "var_slope") c.var_slope = to_double(kv);
    else if (k == "threshold_low") c.threshold_low = to_double(kv);
    else if (k == "threshold_high") c.threshold_high = to_double(kv);
    else if (k == "items_shared") c.items_shared = to_bool(kv);
    else if (k == "seed") c.seed = static_cast<std::uint64_t>(to_long(kv));
    else if (k == "test_fraction" && test_fraction) *test_fraction = to_double(kv);
    else throw ConfigError("unknown simulation config key '" + k + "'");
  }
  return c;
}

// ---------------------------------------------------------------------------

void save_posterior(const fs::path& dir, const PosteriorSamples& s) {
  fs::create_directories(dir);
  const auto& shape = s.shape;
  json manifest;
  manifest["format"] = "gdgpirt-posterior-1";
  manifest["shape"] = {{"n_respondents", shape.n_respondents},
                       {"n_items", shape.n_items},
                       {"n_periods", shape.n_periods},
                       {"items_shared", shape.items_shared},
                       {"categories_per_item", shape.categories_per_item}};
  manifest["hyper"] = hyper_to_json(shape.hyper);
  manifest["sampler"] = {{"n_chains", s.n_chains()}, {"burn_in", s.burn_in}, {"n_kept", s.n_kept},
                         {"thin", s.thin},           {"seed", s.seed}};
  json stats = json::array();
  for (const auto& st : s.stats) stats.push_back({{"max_shrinks", st.max_shrinks}});
  manifest["chain_stats"] = stats;
  json files = json::array();
  for (int c = 0; c < s.n_chains(); ++c) files.push_back(chain_file(c));
  manifest["draw_files"] = files;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  for (int c = 0; c < s.n_chains(); ++c) {
    auto out = open_out(dir / chain_file(c), true);
    out.write(kDrawMagic, sizeof kDrawMagic);
    const auto& chain = s.chains[static_cast<std::size_t>(c)];
    put(out, static_cast<double>(chain.size()));
    for (const auto& d : chain) {
      put(out, d.iteration);
      for (Eigen::Index k = 0; k < d.traits.size(); ++k) put(out, d.traits.data()[k]);
      for (const auto& f : d.irf_grid)
        for (Eigen::Index g = 0; g < f.size(); ++g) put(out, f[g]);
      for (Eigen::Index b = 0; b < d.slopes.size(); ++b) put(out, d.slopes[b]);
      for (Eigen::Index b = 0; b < d.intercepts.size(); ++b) put(out, d.intercepts[b]);
      for (const auto& ts : d.thresholds) {
        put(out, ts.first);
        for (double p : ts.log_paddings) put(out, p);
      }
    }
    if (!out) throw ConfigError("failed writing draws for chain " + std::to_string(c + 1));
  }
}

PosteriorSamples load_posterior(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "manifest.json")) throw DataError("no posterior manifest in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw DataError("unreadable posterior manifest in " + dir.string() + ": " + e.what());
  }
  PosteriorSamples s;
  try {
    const auto& sh = manifest.at("shape");
    s.shape.n_respondents = sh.at("n_respondents");
    s.shape.n_items = sh.at("n_items");
    s.shape.n_periods = sh.at("n_periods");
    s.shape.items_shared = sh.at("items_shared");
    s.shape.categories_per_item = sh.at("categories_per_item").get<std::vector<int>>();
    s.shape.hyper = hyper_from_json(manifest.at("hyper"));
    const auto& sm = manifest.at("sampler");
    s.burn_in = sm.at("burn_in");
    s.n_kept = sm.at("n_kept");
    s.thin = sm.at("thin");
    s.seed = sm.at("seed");
    for (const auto& st : manifest.at("chain_stats")) s.stats.push_back({st.at("max_shrinks").get<int>(), 0.0});
    const int chains = sm.at("n_chains");
    s.chains.resize(static_cast<std::size_t>(chains));
  } catch (const json::exception& e) {
    throw DataError("malformed posterior manifest: " + std::string(e.what()));
  }

  const auto& shape = s.shape;
  const int points = shape.hyper.grid_points;
  for (int c = 0; c < s.n_chains(); ++c) {
    std::ifstream in(dir / chain_file(c), std::ios::binary);
    char magic[sizeof kDrawMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kDrawMagic, sizeof magic) != 0)
      throw DataError("missing or corrupt draws file " + chain_file(c));
    const auto n = static_cast<std::size_t>(get(in));
    auto& chain = s.chains[static_cast<std::size_t>(c)];
    chain.resize(n);
    for (auto& d : chain) {
      d.iteration = static_cast<int>(get(in));
      d.traits.resize(shape.n_respondents, shape.n_periods);
      for (Eigen::Index k = 0; k < d.traits.size(); ++k) d.traits.data()[k] = get(in);
      d.irf_grid.assign(static_cast<std::size_t>(shape.n_blocks()), Eigen::VectorXd(points));
      for (auto& f : d.irf_grid)
        for (int g = 0; g < points; ++g) f[g] = get(in);
      d.slopes.resize(shape.n_blocks());
      d.intercepts.resize(shape.n_blocks());
      for (int b = 0; b < shape.n_blocks(); ++b) d.slopes[b] = get(in);
      for (int b = 0; b < shape.n_blocks(); ++b) d.intercepts[b] = get(in);
      d.thresholds.resize(static_cast<std::size_t>(shape.n_threshold_sets()));
      for (int set = 0; set < shape.n_threshold_sets(); ++set) {
        auto& ts = d.thresholds[static_cast<std::size_t>(set)];
        ts.first = get(in);
        ts.log_paddings.resize(static_cast<std::size_t>(shape.set_categories(set) - 2));
        for (auto& p : ts.log_paddings) p = get(in);
      }
    }
    if (!in) throw DataError("truncated draws file " + chain_file(c));
  }
  return s;
}

// ---------------------------------------------------------------------------

void write_trait_summary(const fs::path& path, const TraitSummary& summary) {
  std::string out = "respondent,time,mean,sd\n";
  for (Eigen::Index i = 0; i < summary.mean.rows(); ++i)
    for (Eigen::Index t = 0; t < summary.mean.cols(); ++t)
      out += std::to_string(i + 1) + ',' + std::to_string(t + 1) + ',' + num(summary.mean(i, t)) + ',' +
             num(summary.sd(i, t)) + '\n';
  write_text(path, out);
}

std::string icc_file_name(const ModelShape& shape, int block) {
  if (shape.items_shared) return "icc_item" + std::to_string(block + 1) + ".csv";
  return "icc_item" + std::to_string(block / shape.n_periods + 1) + "_time" + std::to_string(block % shape.n_periods + 1) +
         ".csv";
}

void write_icc_exports(const fs::path& dir, const ModelShape& shape, const std::vector<IccSummary>& iccs) {
  const DenseGrid grid(shape.hyper);
  for (std::size_t b = 0; b < iccs.size(); ++b) {
    const auto& s = iccs[b];
    std::string out = "x,icc_mean,icc_q05,icc_q95\n";
    for (int g = 0; g < grid.size(); ++g)
      out += num(grid[g]) + ',' + num(s.mean[g]) + ',' + num(s.q05[g]) + ',' + num(s.q95[g]) + '\n';
    write_text(dir / icc_file_name(shape, static_cast<int>(b)), out);
  }
}

std::string format_diagnostics_csv(const std::vector<BlockDiagnostics>& rows) {
  std::string out = "block,n_params,max_rhat,min_ess,n_rhat_flagged,n_ess_flagged\n";
  for (const auto& r : rows)
    out += r.block + ',' + std::to_string(r.n_params) + ',' + num(r.max_rhat) + ',' + num(r.min_ess) + ',' +
           std::to_string(r.n_rhat_flagged) + ',' + std::to_string(r.n_ess_flagged) + '\n';
  return out;
}

void write_truth(const fs::path& dir, const GroundTruth& truth, const ModelShape& shape) {
  std::string traits = "respondent,time,trait\n";
  for (Eigen::Index i = 0; i < truth.true_traits.rows(); ++i)
    for (Eigen::Index t = 0; t < truth.true_traits.cols(); ++t)
      traits += std::to_string(i + 1) + ',' + std::to_string(t + 1) + ',' + num(truth.true_traits(i, t)) + '\n';
  write_text(dir / "truth_traits.csv", traits);

  std::string cuts = "item,cutpoint,value\n";
  for (std::size_t j = 0; j < truth.true_thresholds.size(); ++j)
    for (std::size_t c = 0; c < truth.true_thresholds[j].size(); ++c)
      cuts += std::to_string(j + 1) + ',' + std::to_string(c + 1) + ',' + num(truth.true_thresholds[j][c]) + '\n';
  write_text(dir / "truth_thresholds.csv", cuts);

  std::string lines = "block,intercept,slope\n";
  for (Eigen::Index b = 0; b < truth.true_slopes_intercepts.rows(); ++b)
    lines += std::to_string(b + 1) + ',' + num(truth.true_slopes_intercepts(b, 0)) + ',' +
             num(truth.true_slopes_intercepts(b, 1)) + '\n';
  write_text(dir / "truth_lines.csv", lines);

  const DenseGrid grid(shape.hyper);
  for (std::size_t b = 0; b < truth.true_irf_grid.size(); ++b) {
    const int item = shape.items_shared ? static_cast<int>(b) : static_cast<int>(b) / shape.n_periods;
    std::vector<double> ext{-std::numeric_limits<double>::infinity()};
    const auto& tc = truth.true_thresholds[static_cast<std::size_t>(item)];
    ext.insert(ext.end(), tc.begin(), tc.end());
    ext.push_back(std::numeric_limits<double>::infinity());
    const auto& f = truth.true_irf_grid[b];
    std::string out = "x,f,icc\n";
    for (int g = 0; g < grid.size(); ++g) out += num(grid[g]) + ',' + num(f[g]) + ',' + num(icc(f[g], ext)) + '\n';
    write_text(dir / "truth_icc" / icc_file_name(shape, static_cast<int>(b)), out);
  }
}

std::string format_metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = "variant,metric,value,std_error\n";
  for (const auto& r : rows) out += r.variant + ',' + r.metric + ',' + num(r.value) + ',' + num(r.std_error) + '\n';
  return out;
}

}  // namespace gdgpirt
