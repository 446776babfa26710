#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmp/dataset.hpp"
#include "dmp/filter_smoother.hpp"
#include "dmp/inference.hpp"

namespace dmp {

inline constexpr const char* kVersion = "0.1.0";

enum class CsvLayout { Auto, Long, Wide };

/// Reads `time,series,value` (long) or `time,<name>,<name>,...` (wide) CSV.
/// Empty cells are missing observations.
MultiSeriesDataset read_dataset(const std::filesystem::path& path,
                                CsvLayout layout = CsvLayout::Auto);
MultiSeriesDataset parse_dataset(const std::string& text, CsvLayout layout = CsvLayout::Auto);

/// Wide CSV. Unobserved cells are left empty unless `include_unobserved`
/// is set, in which case any finite stored value (e.g. a held-out truth) is written.
void write_dataset(const MultiSeriesDataset& data, const std::filesystem::path& path,
                   bool include_unobserved = false);
std::string format_dataset(const MultiSeriesDataset& data, bool include_unobserved = false);

/// Attaches held-out truths: unobserved cells of `data` take the value from
/// `truth` at the same (time, series) when present.
MultiSeriesDataset merge_truth(const MultiSeriesDataset& data, const MultiSeriesDataset& truth);

/// `time,series,mean,var_latent,var_predictive,observed_truth`, series by name.
void write_predictions(std::span<const Prediction> preds, std::span<const std::string> names,
                       const std::filesystem::path& path);
std::string format_predictions(std::span<const Prediction> preds,
                               std::span<const std::string> names);
std::vector<Prediction> read_predictions(const std::filesystem::path& path,
                                         std::span<const std::string> names);

struct SmseReport {
  double aggregate = 0.0;                          // mean over series
  std::vector<std::pair<std::size_t, double>> per_series;
};

/// Mean squared error over the population variance of the truths, per
/// series, averaged across series. Only predictions carrying a truth count.
SmseReport compute_smse(std::span<const Prediction> preds);

/// Fraction of truths inside mean +/- width * sqrt(var_predictive).
double interval_coverage(std::span<const Prediction> preds, double width = 2.0);

/// `%.17g`, which reads back to the same double.
std::string format_double(double value);

struct RunConfig {
  Stage1Options stage1;
  Stage2Options stage2;
  PriorOptions priors;
  bool use_last_sample = false;
};

/// Strict JSON config: sections stage1, stage2, priors, prediction.
/// Unknown sections or keys are ParseError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_json(const RunConfig& config);
/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const RunConfig& config);

struct RunArtifacts {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version = kVersion;
  double nu = 0.5;
  Eigen::Index sources = 0;
  std::vector<std::string> series;
  std::optional<Standardization> standardization;
  std::vector<SeriesFit> fits;
  std::optional<PosteriorSummary> posterior;
  std::map<std::string, double> metrics;
};

std::string format_artifacts(const RunArtifacts& artifacts);
RunArtifacts parse_artifacts(const std::string& text);
void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& path);
RunArtifacts read_artifacts(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dmp
