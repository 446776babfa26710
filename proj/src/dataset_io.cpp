#include "dmp/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dmp/error.hpp"

namespace dmp {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& cell, std::size_t line) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    parse_fail(line, "cannot parse number '" + cell + "'");
  }
  return value;
}

void check_time_order(double previous, double current, std::size_t line, bool have_previous) {
  if (!have_previous) return;
  if (current == previous) {
    throw Error(ErrorKind::DuplicateTimestamp,
                "line " + std::to_string(line) + ": duplicate timestamp");
  }
  if (current < previous) {
    throw Error(ErrorKind::NonMonotoneTime,
                "line " + std::to_string(line) + ": timestamp is smaller than the previous one");
  }
}

struct Rows {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> lines;  // (line no, cells)
};

Rows tokenize(const std::string& text) {
  Rows rows;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    rows.lines.emplace_back(number, split_row(line));
  }
  return rows;
}

MultiSeriesDataset parse_wide(const Rows& rows) {
  const auto& header = rows.lines.front().second;
  if (header.size() < 2) parse_fail(rows.lines.front().first, "wide header needs time and >= 1 series");
  const std::vector<std::string> names(header.begin() + 1, header.end());
  const std::size_t p = names.size();
  std::vector<double> times;
  std::vector<std::vector<double>> cells;
  for (std::size_t r = 1; r < rows.lines.size(); ++r) {
    const auto& [line, row] = rows.lines[r];
    if (row.size() != p + 1) parse_fail(line, "expected " + std::to_string(p + 1) + " fields");
    const double t = parse_number(row[0], line);
    check_time_order(times.empty() ? 0.0 : times.back(), t, line, !times.empty());
    times.push_back(t);
    std::vector<double> v(p);
    for (std::size_t j = 0; j < p; ++j) v[j] = row[j + 1].empty() ? kNaN : parse_number(row[j + 1], line);
    cells.push_back(std::move(v));
  }
  const auto n = static_cast<Eigen::Index>(times.size());
  Matrix values(n, static_cast<Eigen::Index>(p));
  Mask mask(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < p; ++j) {
      const double v = cells[static_cast<std::size_t>(k)][j];
      values(k, static_cast<Eigen::Index>(j)) = v;
      mask(k, static_cast<Eigen::Index>(j)) = !std::isnan(v);
    }
  }
  return MultiSeriesDataset(std::move(times), std::move(values), std::move(mask), names);
}

MultiSeriesDataset parse_long(const Rows& rows) {
  std::vector<std::string> names;
  std::vector<double> times;
  std::vector<std::vector<std::pair<std::size_t, double>>> entries;
  std::vector<std::set<std::size_t>> seen;
  for (std::size_t r = 1; r < rows.lines.size(); ++r) {
    const auto& [line, row] = rows.lines[r];
    if (row.size() != 3) parse_fail(line, "expected time,series,value");
    const double t = parse_number(row[0], line);
    if (row[1].empty()) parse_fail(line, "empty series label");
    std::size_t j = 0;
    while (j < names.size() && names[j] != row[1]) ++j;
    if (j == names.size()) names.push_back(row[1]);
    if (times.empty() || t > times.back()) {
      times.push_back(t);
      entries.emplace_back();
      seen.emplace_back();
    } else if (t < times.back()) {
      throw Error(ErrorKind::NonMonotoneTime,
                  "line " + std::to_string(line) + ": timestamp is smaller than the previous one");
    }
    if (!seen.back().insert(j).second) {
      throw Error(ErrorKind::DuplicateTimestamp,
                  "line " + std::to_string(line) + ": duplicate (time, series) entry");
    }
    entries.back().emplace_back(j, row[2].empty() ? kNaN : parse_number(row[2], line));
  }
  const auto n = static_cast<Eigen::Index>(times.size());
  const auto p = static_cast<Eigen::Index>(names.size());
  if (p == 0) throw Error(ErrorKind::EmptyData, "long CSV has no rows");
  Matrix values = Matrix::Constant(n, p, kNaN);
  Mask mask = Mask::Constant(n, p, false);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (const auto& [j, v] : entries[static_cast<std::size_t>(k)]) {
      values(k, static_cast<Eigen::Index>(j)) = v;
      mask(k, static_cast<Eigen::Index>(j)) = !std::isnan(v);
    }
  }
  return MultiSeriesDataset(std::move(times), std::move(values), std::move(mask), names);
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.at(0).size());
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows.at(static_cast<std::size_t>(i)).size()) != p) {
      throw Error(ErrorKind::ParseError, "ragged matrix in JSON");
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      m(i, j) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
    }
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
  return v;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::ParseError, where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorKind::ParseError, where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read_key(const json& obj, const char* key, T& target, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::ParseError, where + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

MultiSeriesDataset parse_dataset(const std::string& text, CsvLayout layout) {
  const Rows rows = tokenize(text);
  if (rows.lines.empty()) throw Error(ErrorKind::EmptyData, "dataset file is empty");
  const auto& header = rows.lines.front().second;
  if (header.empty() || header.front() != "time") {
    parse_fail(rows.lines.front().first, "header must start with 'time'");
  }
  if (layout == CsvLayout::Auto) {
    layout = header.size() == 3 && header[1] == "series" && header[2] == "value"
                 ? CsvLayout::Long
                 : CsvLayout::Wide;
  }
  if (layout == CsvLayout::Long) {
    if (header.size() != 3 || header[1] != "series" || header[2] != "value") {
      parse_fail(rows.lines.front().first, "long header must be time,series,value");
    }
    return parse_long(rows);
  }
  return parse_wide(rows);
}

MultiSeriesDataset read_dataset(const std::filesystem::path& path, CsvLayout layout) {
  return parse_dataset(read_text(path), layout);
}

std::string format_dataset(const MultiSeriesDataset& data, bool include_unobserved) {
  std::string out = "time";
  for (const auto& name : data.names) out += "," + name;
  out += "\n";
  for (std::size_t k = 0; k < data.size(); ++k) {
    out += format_double(data.times[k]);
    for (std::size_t j = 0; j < data.series_count(); ++j) {
      out += ",";
      const double v = data.value(k, j);
      if ((data.is_observed(k, j) || include_unobserved) && std::isfinite(v)) out += format_double(v);
    }
    out += "\n";
  }
  return out;
}

void write_dataset(const MultiSeriesDataset& data, const std::filesystem::path& path,
                   bool include_unobserved) {
  write_text(path, format_dataset(data, include_unobserved));
}

MultiSeriesDataset merge_truth(const MultiSeriesDataset& data, const MultiSeriesDataset& truth) {
  if (truth.names != data.names) {
    throw Error(ErrorKind::InvalidArgument, "truth file series do not match the dataset");
  }
  MultiSeriesDataset out = data;
  std::size_t t = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    while (t < truth.size() && truth.times[t] < data.times[k]) ++t;
    if (t == truth.size() || truth.times[t] != data.times[k]) continue;
    for (std::size_t j = 0; j < data.series_count(); ++j) {
      if (!data.is_observed(k, j) && truth.is_observed(t, j)) {
        out.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = truth.value(t, j);
      }
    }
  }
  return out;
}

std::string format_predictions(std::span<const Prediction> preds,
                               std::span<const std::string> names) {
  std::string out = "time,series,mean,var_latent,var_predictive,observed_truth\n";
  for (const auto& p : preds) {
    const std::string name = p.series < names.size() ? names[p.series] : std::to_string(p.series);
    out += format_double(p.time) + "," + name + "," + format_double(p.mean) + "," +
           format_double(p.var_latent) + "," + format_double(p.var_predictive) + "," +
           (p.truth ? format_double(*p.truth) : std::string()) + "\n";
  }
  return out;
}

void write_predictions(std::span<const Prediction> preds, std::span<const std::string> names,
                       const std::filesystem::path& path) {
  write_text(path, format_predictions(preds, names));
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path,
                                         std::span<const std::string> names) {
  const Rows rows = tokenize(read_text(path));
  if (rows.lines.empty()) throw Error(ErrorKind::ParseError, "prediction file is empty");
  std::vector<Prediction> out;
  for (std::size_t r = 1; r < rows.lines.size(); ++r) {
    const auto& [line, row] = rows.lines[r];
    if (row.size() != 6) parse_fail(line, "expected 6 prediction fields");
    Prediction p;
    p.time = parse_number(row[0], line);
    std::size_t j = 0;
    while (j < names.size() && names[j] != row[1]) ++j;
    if (j == names.size()) parse_fail(line, "unknown series '" + row[1] + "'");
    p.series = j;
    p.mean = parse_number(row[2], line);
    p.var_latent = parse_number(row[3], line);
    p.var_predictive = parse_number(row[4], line);
    if (!row[5].empty()) p.truth = parse_number(row[5], line);
    out.push_back(p);
  }
  return out;
}

SmseReport compute_smse(std::span<const Prediction> preds) {
  std::map<std::size_t, std::vector<std::pair<double, double>>> by_series;
  for (const auto& p : preds) {
    if (p.truth) by_series[p.series].emplace_back(p.mean, *p.truth);
  }
  if (by_series.empty()) throw Error(ErrorKind::EmptyData, "compute_smse: no truth values");
  SmseReport report;
  for (const auto& [series, pairs] : by_series) {
    double mean_truth = 0.0;
    for (const auto& [pred, truth] : pairs) mean_truth += truth;
    mean_truth /= static_cast<double>(pairs.size());
    double var = 0.0;
    double mse = 0.0;
    for (const auto& [pred, truth] : pairs) {
      var += (truth - mean_truth) * (truth - mean_truth);
      mse += (pred - truth) * (pred - truth);
    }
    if (!(var > 0.0)) {
      throw Error(ErrorKind::DegenerateTruth, "compute_smse: test values have zero variance");
    }
    report.per_series.emplace_back(series, mse / var);
    report.aggregate += mse / var;
  }
  report.aggregate /= static_cast<double>(report.per_series.size());
  return report;
}

double interval_coverage(std::span<const Prediction> preds, double width) {
  std::size_t total = 0;
  std::size_t inside = 0;
  for (const auto& p : preds) {
    if (!p.truth) continue;
    ++total;
    if (std::abs(*p.truth - p.mean) <= width * std::sqrt(p.var_predictive)) ++inside;
  }
  if (total == 0) throw Error(ErrorKind::EmptyData, "interval_coverage: no truth values");
  return static_cast<double>(inside) / static_cast<double>(total);
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("config: ") + e.what());
  }
  reject_unknown(root, {"stage1", "stage2", "priors", "prediction"}, "config");
  RunConfig cfg;
  if (root.contains("stage1")) {
    const json& s = root["stage1"];
    reject_unknown(s, {"restarts", "max_iterations", "tolerance"}, "stage1");
    read_key(s, "restarts", cfg.stage1.restarts, "stage1");
    read_key(s, "max_iterations", cfg.stage1.max_iterations, "stage1");
    read_key(s, "tolerance", cfg.stage1.tolerance, "stage1");
  }
  if (root.contains("stage2")) {
    const json& s = root["stage2"];
    reject_unknown(s, {"chain_length", "burn_in", "thin", "loading_step", "log_tau2_step",
                       "adapt", "seed"},
                   "stage2");
    read_key(s, "chain_length", cfg.stage2.chain_length, "stage2");
    read_key(s, "burn_in", cfg.stage2.burn_in, "stage2");
    read_key(s, "thin", cfg.stage2.thin, "stage2");
    read_key(s, "loading_step", cfg.stage2.loading_step, "stage2");
    read_key(s, "log_tau2_step", cfg.stage2.log_tau2_step, "stage2");
    read_key(s, "adapt", cfg.stage2.adapt, "stage2");
    read_key(s, "seed", cfg.stage2.seed, "stage2");
  }
  if (root.contains("priors")) {
    const json& s = root["priors"];
    reject_unknown(s, {"loading_scale_factor", "tau2_center_fraction", "log_tau2_sd"}, "priors");
    read_key(s, "loading_scale_factor", cfg.priors.loading_scale_factor, "priors");
    read_key(s, "tau2_center_fraction", cfg.priors.tau2_center_fraction, "priors");
    read_key(s, "log_tau2_sd", cfg.priors.log_tau2_sd, "priors");
  }
  if (root.contains("prediction")) {
    const json& s = root["prediction"];
    reject_unknown(s, {"use_last_sample"}, "prediction");
    read_key(s, "use_last_sample", cfg.use_last_sample, "prediction");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string config_json(const RunConfig& c) {
  json root;
  root["stage1"] = {{"restarts", c.stage1.restarts},
                    {"max_iterations", c.stage1.max_iterations},
                    {"tolerance", c.stage1.tolerance}};
  root["stage2"] = {{"chain_length", c.stage2.chain_length},
                    {"burn_in", c.stage2.burn_in},
                    {"thin", c.stage2.thin},
                    {"loading_step", c.stage2.loading_step},
                    {"log_tau2_step", c.stage2.log_tau2_step},
                    {"adapt", c.stage2.adapt},
                    {"seed", c.stage2.seed}};
  root["priors"] = {{"loading_scale_factor", c.priors.loading_scale_factor},
                    {"tau2_center_fraction", c.priors.tau2_center_fraction},
                    {"log_tau2_sd", c.priors.log_tau2_sd}};
  root["prediction"] = {{"use_last_sample", c.use_last_sample}};
  return root.dump();
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : config_json(config)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_artifacts(const RunArtifacts& a) {
  json root;
  root["provenance"] = {{"command", a.command},
                        {"seed", a.seed},
                        {"config_hash", a.config_hash},
                        {"version", a.version}};
  root["model"] = {{"nu", a.nu}, {"R", a.sources}, {"series", a.series}};
  if (a.standardization) {
    root["standardization"] = {{"offset", vector_to_json(a.standardization->offset)},
                               {"scale", vector_to_json(a.standardization->scale)}};
  }
  json fits = json::array();
  for (std::size_t j = 0; j < a.fits.size(); ++j) {
    const auto& f = a.fits[j];
    fits.push_back({{"ell", f.ell},
                    {"marginal_variance", f.marginal_variance},
                    {"tau2", f.tau2},
                    {"loglik", f.loglik},
                    {"weakly_identified", f.weakly_identified},
                    {"warning", f.warning}});
  }
  root["stage1"] = fits;
  if (a.posterior) {
    const auto& p = *a.posterior;
    json post = {{"draws", p.draws},
                 {"mean_C", matrix_to_json(p.mean_c)},
                 {"mean_rho", matrix_to_json(p.mean_rho)},
                 {"rho_lower", matrix_to_json(p.rho_lower)},
                 {"rho_upper", matrix_to_json(p.rho_upper)},
                 {"mean_tau2", vector_to_json(p.mean_tau2)},
                 {"last_L", matrix_to_json(p.last_loading)},
                 {"last_tau2", vector_to_json(p.last_tau2)}};
    post["acceptance_rate"] = p.acceptance_rate ? json(*p.acceptance_rate) : json(nullptr);
    root["posterior"] = std::move(post);
  }
  root["metrics"] = a.metrics;
  return root.dump(2) + "\n";
}

RunArtifacts parse_artifacts(const std::string& text) {
  RunArtifacts a;
  try {
    const json root = json::parse(text);
    const json& prov = root.at("provenance");
    a.command = prov.at("command").get<std::string>();
    a.seed = prov.at("seed").get<std::uint64_t>();
    a.config_hash = prov.at("config_hash").get<std::string>();
    a.version = prov.at("version").get<std::string>();
    const json& model = root.at("model");
    a.nu = model.at("nu").get<double>();
    a.sources = model.at("R").get<Eigen::Index>();
    a.series = model.at("series").get<std::vector<std::string>>();
    if (root.contains("standardization")) {
      a.standardization = Standardization{vector_from_json(root["standardization"].at("offset")),
                                          vector_from_json(root["standardization"].at("scale"))};
    }
    for (const json& f : root.at("stage1")) {
      SeriesFit fit;
      fit.ell = f.at("ell").get<double>();
      fit.marginal_variance = f.at("marginal_variance").get<double>();
      fit.tau2 = f.at("tau2").get<double>();
      fit.loglik = f.at("loglik").get<double>();
      fit.weakly_identified = f.at("weakly_identified").get<bool>();
      fit.warning = f.at("warning").get<std::string>();
      a.fits.push_back(std::move(fit));
    }
    if (root.contains("posterior")) {
      const json& p = root["posterior"];
      PosteriorSummary s;
      s.draws = p.at("draws").get<std::size_t>();
      if (!p.at("acceptance_rate").is_null()) s.acceptance_rate = p["acceptance_rate"].get<double>();
      s.mean_c = matrix_from_json(p.at("mean_C"));
      s.mean_rho = matrix_from_json(p.at("mean_rho"));
      s.rho_lower = matrix_from_json(p.at("rho_lower"));
      s.rho_upper = matrix_from_json(p.at("rho_upper"));
      s.mean_tau2 = vector_from_json(p.at("mean_tau2"));
      s.last_loading = matrix_from_json(p.at("last_L"));
      s.last_tau2 = vector_from_json(p.at("last_tau2"));
      a.posterior = std::move(s);
    }
    a.metrics = root.at("metrics").get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("artifacts: ") + e.what());
  }
  return a;
}

void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& path) {
  write_text(path, format_artifacts(artifacts));
}

RunArtifacts read_artifacts(const std::filesystem::path& path) {
  return parse_artifacts(read_text(path));
}

}  // namespace dmp
