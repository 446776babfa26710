#include "dmp/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "dmp/filter_smoother.hpp"
#include "dmp/inference.hpp"
#include "dmp/oracle.hpp"
#include "dmp/simulate.hpp"

namespace dmp::cli {

namespace {

constexpr std::size_t kDenseLimit = 500;

Matrix parse_loading(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream in(text);
  std::string row;
  while (std::getline(in, row, ';')) {
    std::vector<double> values;
    std::stringstream cells(row);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidArgument, "cannot parse loading entry '" + cell + "'");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty() || rows.front().empty()) {
    throw Error(ErrorKind::InvalidArgument, "empty loading matrix");
  }
  Matrix l(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw Error(ErrorKind::InvalidArgument, "loading rows differ in length");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return l;
}

std::string matrix_text(const Matrix& m, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << (j ? "  " : "") << std::setw(precision + 4) << m(i, j);
    }
    os << "\n";
  }
  return os.str();
}

void print_correlation(std::ostream& out, const PosteriorSummary& s,
                       const std::vector<std::string>& names) {
  out << "posterior mean correlation (" << s.draws << " draws)\n";
  out << matrix_text(s.mean_rho);
  out << "95% credible intervals\n";
  for (Eigen::Index a = 0; a < s.mean_rho.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < s.mean_rho.cols(); ++b) {
      out << "  rho(" << names[static_cast<std::size_t>(a)] << ","
          << names[static_cast<std::size_t>(b)] << ") = " << format_double(s.mean_rho(a, b))
          << "  [" << format_double(s.rho_lower(a, b)) << ", "
          << format_double(s.rho_upper(a, b)) << "]\n";
    }
  }
}

Prediction to_original_scale(Prediction p, const Standardization& st) {
  const auto j = static_cast<Eigen::Index>(p.series);
  const double scale = st.scale(j);
  p.mean = p.mean * scale + st.offset(j);
  p.var_latent *= scale * scale;
  p.var_predictive *= scale * scale;
  return p;
}

Smoothness require_nu(double nu) { return smoothness_from_nu(nu); }

RunArtifacts base_artifacts(const std::string& command, std::uint64_t seed,
                            const RunConfig& cfg, double nu, Eigen::Index sources,
                            const MultiSeriesDataset& data) {
  RunArtifacts a;
  a.command = command;
  a.seed = seed;
  a.config_hash = config_hash(cfg);
  a.nu = nu;
  a.sources = sources;
  a.series = data.names;
  return a;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

}  // namespace

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Validation: return kValidation;
    case ErrorCategory::Numeric: return kNumeric;
    case ErrorCategory::Io: return kIo;
  }
  return kValidation;
}

std::vector<Prediction> predict_with(const MultiSeriesDataset& data,
                                     const Standardization& standardization,
                                     const PredictiveParameters& params, Engine engine) {
  const MultiSeriesDataset z = standardization.apply(data);
  std::vector<Prediction> preds;
  if (engine == Engine::Dense) {
    if (z.observed_count() > kDenseLimit) {
      throw Error(ErrorKind::InvalidArgument,
                  "dense engine refuses more than 500 observed points (" +
                      std::to_string(z.observed_count()) + ")");
    }
    preds = dense_predict_missing(z, params.hypers, params.coupling, params.tau2);
  } else {
    const JointStateSpaceModel model(params.hypers, params.coupling);
    preds = predict_missing(model, z, params.tau2);
  }
  for (auto& p : preds) {
    p = to_original_scale(p, standardization);
    const double raw = data.value(static_cast<std::size_t>(
                                      std::lower_bound(data.times.begin(), data.times.end(), p.time) -
                                      data.times.begin()),
                                  p.series);
    if (std::isfinite(raw)) {
      p.truth = raw;
    } else {
      p.truth.reset();
    }
  }
  return preds;
}

PipelineResult run_pipeline(const MultiSeriesDataset& data, const PipelineOptions& options,
                            std::ostream& log) {
  PipelineResult result;
  result.standardization = Standardization::fit(data);
  const MultiSeriesDataset z = result.standardization.apply(data);
  result.fits = fit_lengthscales(z, options.nu, options.config.stage1);
  for (std::size_t j = 0; j < result.fits.size(); ++j) {
    log << "stage 1: " << data.names[j] << " ell=" << format_double(result.fits[j].ell)
        << " var=" << format_double(result.fits[j].marginal_variance)
        << " tau2=" << format_double(result.fits[j].tau2) << "\n";
    if (result.fits[j].weakly_identified) log << "warning: " << result.fits[j].warning << "\n";
  }
  const PosteriorSamples samples = mh_sample(z, result.fits, options.nu, options.sources,
                                             options.config.stage2, options.config.priors);
  result.summary = summarize(samples);
  if (result.summary.acceptance_rate) {
    log << "stage 2: acceptance " << format_double(*result.summary.acceptance_rate) << "\n";
  }
  const PredictiveParameters params = predictive_parameters(
      result.fits, result.summary, options.nu, options.config.use_last_sample);
  result.predictions = predict_with(data, result.standardization, params, options.engine);
  return result;
}

BenchReport bench_synth(const BenchOptions& options, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const MultiSeriesDataset data = synth_benchmark(options.seed);
  PipelineOptions po;
  po.nu = Smoothness::Half;
  po.sources = 2;
  po.config.stage2.chain_length = options.chain_length;
  po.config.stage2.burn_in = options.burn_in;
  po.config.stage2.seed = options.seed;
  InferenceConfig{po.nu, po.sources, po.config.stage1, po.config.stage2, po.config.priors}.validate();

  BenchReport report;
  report.pipeline = run_pipeline(data, po, log);
  report.smse = compute_smse(report.pipeline.predictions).aggregate;
  report.coverage = interval_coverage(report.pipeline.predictions, 2.0);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!options.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + options.out_dir.string());
    write_dataset(data, options.out_dir / "data.csv");
    write_dataset(data, options.out_dir / "truth.csv", true);
    write_predictions(report.pipeline.predictions, data.names,
                      options.out_dir / "predictions.csv");
    RunArtifacts a = base_artifacts("bench-synth", options.seed, po.config, 0.5, 2, data);
    a.standardization = report.pipeline.standardization;
    a.fits = report.pipeline.fits;
    a.posterior = report.pipeline.summary;
    a.metrics["smse"] = report.smse;
    a.metrics["coverage_2sd"] = report.coverage;
    a.metrics["withheld"] = static_cast<double>(report.pipeline.predictions.size());
    write_artifacts(a, options.out_dir / "report.json");
  }
  return report;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dependent Matern process models for multivariate time series", "dmp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a dataset from the model or the synthetic benchmark");
  bool sim_synth = false;
  std::uint64_t sim_seed = 1;
  double sim_nu = 0.5;
  std::vector<double> sim_ell;
  std::string sim_loading;
  std::vector<double> sim_tau2;
  std::size_t sim_n = 100;
  double sim_dt = 1.0;
  std::string sim_out;
  std::string sim_truth_out;
  sim->add_flag("--synth", sim_synth, "Two-series cosine benchmark with 41 withheld points");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--nu", sim_nu, "Smoothness 0.5, 1.5 or 2.5");
  sim->add_option("--ell", sim_ell, "Length-scales, one per series")->delimiter(',');
  sim->add_option("--loading", sim_loading, "Loading matrix L, rows separated by ';'");
  sim->add_option("--tau2", sim_tau2, "Observation noise variances")->delimiter(',');
  sim->add_option("--n", sim_n, "Number of timestamps");
  sim->add_option("--dt", sim_dt, "Grid spacing");
  sim->add_option("--out", sim_out, "Output CSV (stdout when omitted)");
  sim->add_option("--truth-out", sim_truth_out, "Also write held-out values (synthetic benchmark)");

  // shared inference flags
  std::string data_path;
  std::string config_path;
  double nu = 0.5;
  Eigen::Index sources = 0;

  auto* fit = app.add_subcommand("fit", "Stage 1: per-series length-scale estimation");
  std::string fit_out;
  fit->add_option("--data", data_path, "Dataset CSV")->required();
  fit->add_option("--nu", nu, "Smoothness 0.5, 1.5 or 2.5")->required();
  fit->add_option("--config", config_path, "JSON config file");
  fit->add_option("--out", fit_out, "Report JSON (stdout when omitted)");

  auto* sample = app.add_subcommand("sample", "Stage 2: Metropolis-Hastings over the coupling");
  std::string fit_in;
  std::string sample_out;
  std::string draws_out;
  std::optional<std::size_t> chain_length;
  std::optional<std::size_t> burn_in;
  std::optional<std::size_t> thin;
  std::optional<std::uint64_t> seed;
  sample->add_option("--data", data_path, "Dataset CSV")->required();
  sample->add_option("--nu", nu, "Smoothness 0.5, 1.5 or 2.5")->required();
  sample->add_option("--R", sources, "Number of latent noise sources")->required();
  sample->add_option("--fit", fit_in, "Stage-1 report from `fit` (re-fitted when omitted)");
  sample->add_option("--config", config_path, "JSON config file");
  sample->add_option("--chain-length", chain_length, "Total iterations including burn-in");
  sample->add_option("--burn-in", burn_in, "Adaptive burn-in iterations");
  sample->add_option("--thin", thin, "Keep every k-th draw");
  sample->add_option("--seed", seed, "RNG seed");
  sample->add_option("--out", sample_out, "Summary JSON (stdout when omitted)");
  sample->add_option("--draws", draws_out, "Optional CSV of retained draws");

  auto* predict = app.add_subcommand("predict", "Posterior predictions at missing entries");
  std::string summary_path;
  std::string engine_name = "ssm";
  std::string truth_path;
  std::string pred_out;
  std::string report_out;
  bool use_last = false;
  predict->add_option("--data", data_path, "Dataset CSV")->required();
  predict->add_option("--nu", nu, "Smoothness 0.5, 1.5 or 2.5")->required();
  predict->add_option("--R", sources, "Number of latent noise sources")->required();
  predict->add_option("--summary", summary_path, "Summary JSON from `sample`")->required();
  predict->add_option("--engine", engine_name, "ssm (Kalman) or dense (O(N^3) oracle)")
      ->check(CLI::IsMember({"ssm", "dense"}));
  predict->add_option("--truth", truth_path, "CSV with held-out values for SMSE");
  predict->add_flag("--use-last-sample", use_last, "Use the last MH draw instead of posterior means");
  predict->add_option("--config", config_path, "JSON config file");
  predict->add_option("--out", pred_out, "Predictions CSV (stdout when omitted)");
  predict->add_option("--report", report_out, "Metrics JSON");

  auto* corr = app.add_subcommand("corr", "Print the posterior correlation matrix");
  corr->add_option("--summary", summary_path, "Summary JSON from `sample`")->required();

  auto* bench = app.add_subcommand("bench-synth", "End-to-end synthetic benchmark");
  BenchOptions bench_opts;
  std::string bench_dir;
  bench->add_option("--seed", bench_opts.seed, "RNG seed");
  bench->add_option("--chain-length", bench_opts.chain_length, "MH iterations including burn-in");
  bench->add_option("--burn-in", bench_opts.burn_in, "Adaptive burn-in iterations");
  bench->add_option("--out-dir", bench_dir, "Directory for output files");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error[validation:Usage] " << e.what() << "\n";
    return kValidation;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);

    if (*sim) {
      MultiSeriesDataset data;
      if (sim_synth) {
        data = synth_benchmark(sim_seed);
      } else {
        const Smoothness s = require_nu(sim_nu);
        if (sim_ell.empty()) throw Error(ErrorKind::InvalidArgument, "--ell is required");
        std::vector<MaternHyper> hypers;
        for (double l : sim_ell) hypers.emplace_back(s, l);
        const Matrix l = sim_loading.empty()
                             ? Matrix(Matrix::Identity(static_cast<Eigen::Index>(hypers.size()),
                                                       static_cast<Eigen::Index>(hypers.size())))
                             : parse_loading(sim_loading);
        Vector tau2 = Vector::Zero(static_cast<Eigen::Index>(hypers.size()));
        if (!sim_tau2.empty()) {
          if (sim_tau2.size() != hypers.size()) {
            throw Error(ErrorKind::InvalidArgument, "--tau2 needs one value per series");
          }
          tau2 = Eigen::Map<const Vector>(sim_tau2.data(), static_cast<Eigen::Index>(sim_tau2.size()));
        }
        if (!(sim_dt > 0.0) || sim_n == 0) {
          throw Error(ErrorKind::InvalidArgument, "--n and --dt must be positive");
        }
        std::vector<double> times(sim_n);
        for (std::size_t k = 0; k < sim_n; ++k) times[k] = static_cast<double>(k) * sim_dt;
        data = sample_path(JointStateSpaceModel(hypers, CouplingMatrix(l)), times, tau2, sim_seed);
      }
      emit(format_dataset(data), sim_out, out);
      if (!sim_truth_out.empty()) write_dataset(data, sim_truth_out, true);
      return kOk;
    }

    if (*fit) {
      const Smoothness s = require_nu(nu);
      InferenceConfig{s, 1, cfg.stage1, Stage2Options{1, 0}, cfg.priors}.validate();
      const MultiSeriesDataset data = read_dataset(data_path);
      const Standardization st = Standardization::fit(data);
      RunArtifacts a = base_artifacts("fit", 0, cfg, nu, 0, data);
      a.standardization = st;
      a.fits = fit_lengthscales(st.apply(data), s, cfg.stage1);
      for (const auto& f : a.fits) {
        if (f.weakly_identified) err << "warning: " << f.warning << "\n";
      }
      emit(format_artifacts(a), fit_out, out);
      return kOk;
    }

    if (*sample) {
      const Smoothness s = require_nu(nu);
      if (chain_length) cfg.stage2.chain_length = *chain_length;
      if (burn_in) cfg.stage2.burn_in = *burn_in;
      if (thin) cfg.stage2.thin = *thin;
      if (seed) cfg.stage2.seed = *seed;
      InferenceConfig{s, sources, cfg.stage1, cfg.stage2, cfg.priors}.validate();
      const MultiSeriesDataset data = read_dataset(data_path);
      RunArtifacts a = base_artifacts("sample", cfg.stage2.seed, cfg, nu, sources, data);
      if (!fit_in.empty()) {
        const RunArtifacts prior = read_artifacts(fit_in);
        if (prior.series != data.names || !prior.standardization || prior.nu != nu) {
          throw Error(ErrorKind::InvalidArgument, "--fit report does not match this dataset/nu");
        }
        a.standardization = prior.standardization;
        a.fits = prior.fits;
      } else {
        a.standardization = Standardization::fit(data);
        a.fits = fit_lengthscales(a.standardization->apply(data), s, cfg.stage1);
      }
      const MultiSeriesDataset z = a.standardization->apply(data);
      err << "sampling " << cfg.stage2.chain_length << " iterations\n";
      const PosteriorSamples samples = mh_sample(z, a.fits, s, sources, cfg.stage2, cfg.priors);
      a.posterior = summarize(samples);
      if (a.posterior->acceptance_rate) {
        a.metrics["acceptance_rate"] = *a.posterior->acceptance_rate;
      }
      if (!draws_out.empty()) {
        std::string text = "draw";
        const Eigen::Index p = samples.loadings.front().rows();
        const Eigen::Index r = samples.loadings.front().cols();
        for (Eigen::Index i = 0; i < p; ++i)
          for (Eigen::Index c = 0; c < r; ++c)
            text += ",L" + std::to_string(i + 1) + "_" + std::to_string(c + 1);
        for (Eigen::Index i = 0; i < p; ++i) text += ",tau2_" + std::to_string(i + 1);
        text += "\n";
        for (std::size_t d = 0; d < samples.loadings.size(); ++d) {
          text += std::to_string(d);
          for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index c = 0; c < r; ++c) text += "," + format_double(samples.loadings[d](i, c));
          for (Eigen::Index i = 0; i < p; ++i) text += "," + format_double(samples.tau2[d](i));
          text += "\n";
        }
        write_text(draws_out, text);
      }
      emit(format_artifacts(a), sample_out, out);
      return kOk;
    }

    if (*predict) {
      const Smoothness s = require_nu(nu);
      const RunArtifacts stored = read_artifacts(summary_path);
      if (!stored.posterior || !stored.standardization) {
        throw Error(ErrorKind::InvalidArgument, "--summary has no posterior section");
      }
      if (stored.nu != nu || stored.sources != sources) {
        throw Error(ErrorKind::InvalidArgument, "--nu/--R do not match the summary");
      }
      MultiSeriesDataset data = read_dataset(data_path);
      if (stored.series != data.names) {
        throw Error(ErrorKind::InvalidArgument, "summary series do not match the dataset");
      }
      if (!truth_path.empty()) data = merge_truth(data, read_dataset(truth_path));
      const PredictiveParameters params = predictive_parameters(
          stored.fits, *stored.posterior, s, use_last || cfg.use_last_sample);
      const Engine engine = engine_name == "dense" ? Engine::Dense : Engine::StateSpace;
      const std::vector<Prediction> preds =
          predict_with(data, *stored.standardization, params, engine);
      emit(format_predictions(preds, data.names), pred_out, out);

      RunArtifacts a = base_artifacts("predict", stored.seed, cfg, nu, sources, data);
      a.metrics["predictions"] = static_cast<double>(preds.size());
      const bool have_truth =
          std::any_of(preds.begin(), preds.end(), [](const Prediction& p) { return p.truth.has_value(); });
      if (have_truth) {
        a.metrics["smse"] = compute_smse(preds).aggregate;
        a.metrics["coverage_2sd"] = interval_coverage(preds, 2.0);
        err << "smse " << format_double(a.metrics["smse"]) << "\n";
      }
      if (!report_out.empty()) write_artifacts(a, report_out);
      return kOk;
    }

    if (*corr) {
      const RunArtifacts stored = read_artifacts(summary_path);
      if (!stored.posterior) throw Error(ErrorKind::InvalidArgument, "--summary has no posterior");
      print_correlation(out, *stored.posterior, stored.series);
      return kOk;
    }

    if (*bench) {
      bench_opts.out_dir = bench_dir;
      const BenchReport report = bench_synth(bench_opts, err);
      out << "withheld " << report.pipeline.predictions.size() << "\n";
      out << "smse " << format_double(report.smse) << "\n";
      out << "coverage_2sd " << format_double(report.coverage) << "\n";
      print_correlation(out, report.pipeline.summary, {"x1", "x2"});
      err << "wall-clock " << report.seconds << " s\n";
      return kOk;
    }
  } catch (const Error& e) {
    err << "error[" << category_name(e.category()) << ":" << kind_name(e.kind()) << "] "
        << e.what() << "\n";
    return exit_code(e.category());
  }
  return kValidation;
}

}  // namespace dmp::cli
