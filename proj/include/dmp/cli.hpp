#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dmp/dataset_io.hpp"
#include "dmp/error.hpp"

namespace dmp::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kNumeric = 3, kIo = 4 };

int exit_code(ErrorCategory category) noexcept;

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`, diagnostics and progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

enum class Engine { StateSpace, Dense };

/// Stage 1 + stage 2 + prediction on standardized data; predictions are
/// reported on the original scale.
struct PipelineResult {
  Standardization standardization;
  std::vector<SeriesFit> fits;
  PosteriorSummary summary;
  std::vector<Prediction> predictions;
};

struct PipelineOptions {
  Smoothness nu = Smoothness::Half;
  Eigen::Index sources = 1;
  RunConfig config;
  Engine engine = Engine::StateSpace;
};

PipelineResult run_pipeline(const MultiSeriesDataset& data, const PipelineOptions& options,
                            std::ostream& log);

/// Predictions for the unobserved entries of `data` from stored inference
/// results, mapped back through `standardization`.
std::vector<Prediction> predict_with(const MultiSeriesDataset& data,
                                     const Standardization& standardization,
                                     const PredictiveParameters& params, Engine engine);

struct BenchOptions {
  std::uint64_t seed = 7;
  std::size_t chain_length = 10000;
  std::size_t burn_in = 2500;
  std::filesystem::path out_dir;
};

struct BenchReport {
  PipelineResult pipeline;
  double smse = 0.0;
  double coverage = 0.0;
  double seconds = 0.0;
};

/// End-to-end synthetic benchmark (nu = 1/2, R = 2). Writes data.csv,
/// truth.csv, predictions.csv and report.json into out_dir when set.
BenchReport bench_synth(const BenchOptions& options, std::ostream& log);

}  // namespace dmp::cli
