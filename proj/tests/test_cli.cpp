#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "dmp/cli.hpp"
#include "dmp/dataset_io.hpp"
#include "dmp/simulate.hpp"

using namespace dmp;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "dmp");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path workdir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dmp_cli_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with the validation code") {
  CHECK(invoke({}).code == cli::kValidation);
  CHECK(invoke({"nonsense"}).code == cli::kValidation);
  CHECK(invoke({"fit", "--data", "x.csv"}).code == cli::kValidation);  // --nu required
  CHECK(invoke({"--help"}).code == cli::kOk);
  const Result v = invoke({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(kVersion) != std::string::npos);
}

TEST_CASE("error categories map to exit codes") {
  CHECK(cli::exit_code(ErrorCategory::Validation) == 2);
  CHECK(cli::exit_code(ErrorCategory::Numeric) == 3);
  CHECK(cli::exit_code(ErrorCategory::Io) == 4);
  const Result io = invoke({"fit", "--data", "/nonexistent.csv", "--nu", "0.5"});
  CHECK(io.code == cli::kIo);
  CHECK(io.err.find("error[io:IoError]") != std::string::npos);
  const auto dir = workdir("codes");
  write_dataset(synth_benchmark(1), dir / "d.csv");
  const Result nu = invoke({"fit", "--data", (dir / "d.csv").string(), "--nu", "1.0"});
  CHECK(nu.code == cli::kValidation);
  CHECK(nu.err.find("UnsupportedSmoothness") != std::string::npos);
}

TEST_CASE("zero-length chain is a validation error") {
  const auto dir = workdir("zero");
  write_dataset(synth_benchmark(1), dir / "d.csv");
  const Result r = invoke({"sample", "--data", (dir / "d.csv").string(), "--nu", "0.5", "--R", "2",
                           "--chain-length", "0"});
  CHECK(r.code == cli::kValidation);
  CHECK(r.err.find("error[validation:") != std::string::npos);
}

TEST_CASE("simulate writes a dataset") {
  const auto dir = workdir("simulate");
  const Result r = invoke({"simulate", "--nu", "1.5", "--ell", "1,2", "--loading", "1,0;0.8,0.6",
                           "--tau2", "0.01,0.02", "--n", "30", "--dt", "0.5", "--seed", "3", "--out",
                           (dir / "sim.csv").string()});
  REQUIRE(r.code == 0);
  const MultiSeriesDataset d = read_dataset(dir / "sim.csv");
  CHECK(d.size() == 30);
  CHECK(d.series_count() == 2);
  const Result synth = invoke({"simulate", "--synth", "--seed", "7"});
  CHECK(synth.code == 0);
  CHECK(parse_dataset(synth.out).observed_count(1) == 59);
  CHECK(invoke({"simulate", "--nu", "0.5"}).code == cli::kValidation);
}

TEST_CASE("fit, sample, predict and corr pipeline") {
  const auto dir = workdir("pipeline");
  const MultiSeriesDataset synth = synth_benchmark(3);
  write_dataset(synth, dir / "data.csv");
  write_dataset(synth, dir / "truth.csv", true);
  const std::string data = (dir / "data.csv").string();

  REQUIRE(invoke({"fit", "--data", data, "--nu", "0.5", "--out", (dir / "fit.json").string()}).code == 0);
  const RunArtifacts fit = read_artifacts(dir / "fit.json");
  CHECK(fit.fits.size() == 2);
  CHECK(fit.command == "fit");

  const std::string summary = (dir / "summary.json").string();
  const Result s = invoke({"sample", "--data", data, "--nu", "0.5", "--R", "2", "--fit",
                           (dir / "fit.json").string(), "--chain-length", "300", "--burn-in", "100",
                           "--seed", "5", "--out", summary, "--draws", (dir / "draws.csv").string()});
  REQUIRE(s.code == 0);
  const RunArtifacts post = read_artifacts(summary);
  REQUIRE(post.posterior.has_value());
  CHECK(post.posterior->draws == 200);
  CHECK(post.seed == 5);

  const Result p = invoke({"predict", "--data", data, "--nu", "0.5", "--R", "2", "--summary", summary,
                           "--truth", (dir / "truth.csv").string(), "--out", (dir / "pred.csv").string(),
                           "--report", (dir / "report.json").string()});
  REQUIRE(p.code == 0);
  const auto preds = read_predictions(dir / "pred.csv", synth.names);
  CHECK(preds.size() == kSynthWithheld);
  for (const auto& pr : preds) {
    CHECK(pr.series == 1);
    CHECK(pr.truth.has_value());
  }
  CHECK(read_artifacts(dir / "report.json").metrics.count("smse") == 1);

  const Result dense = invoke({"predict", "--data", data, "--nu", "0.5", "--R", "2", "--summary", summary,
                               "--truth", (dir / "truth.csv").string(), "--engine", "dense", "--report",
                               (dir / "dense.json").string()});
  REQUIRE(dense.code == 0);
  CHECK(std::abs(read_artifacts(dir / "dense.json").metrics.at("smse") -
                 read_artifacts(dir / "report.json").metrics.at("smse")) < 1e-8);

  CHECK(invoke({"predict", "--data", data, "--nu", "1.5", "--R", "2", "--summary", summary}).code ==
        cli::kValidation);

  const Result c = invoke({"corr", "--summary", summary});
  CHECK(c.code == 0);
  CHECK(c.out.find("rho(x1,x2)") != std::string::npos);
}

TEST_CASE("dense engine refuses large inputs") {
  const auto dir = workdir("dense_limit");
  REQUIRE(invoke({"simulate", "--nu", "0.5", "--ell", "1", "--n", "600", "--dt", "0.1", "--tau2", "0.1",
                  "--out", (dir / "big.csv").string()}).code == 0);
  REQUIRE(invoke({"sample", "--data", (dir / "big.csv").string(), "--nu", "0.5", "--R", "1",
                  "--chain-length", "3", "--burn-in", "1", "--out", (dir / "s.json").string()}).code == 0);
  const Result r = invoke({"predict", "--data", (dir / "big.csv").string(), "--nu", "0.5", "--R", "1",
                           "--summary", (dir / "s.json").string(), "--engine", "dense"});
  CHECK(r.code == cli::kValidation);
  CHECK(r.err.find("500") != std::string::npos);
}

TEST_CASE("config files are strict") {
  const auto dir = workdir("config");
  write_dataset(synth_benchmark(1), dir / "d.csv");
  write_text(dir / "bad.json", R"({"stage2": {"chainlength": 10}})");
  const Result r = invoke({"sample", "--data", (dir / "d.csv").string(), "--nu", "0.5", "--R", "1",
                           "--config", (dir / "bad.json").string()});
  CHECK(r.code == cli::kValidation);
  CHECK(r.err.find("ParseError") != std::string::npos);
  write_text(dir / "good.json", R"({"stage2": {"chain_length": 20, "burn_in": 10, "seed": 4}})");
  const Result ok = invoke({"sample", "--data", (dir / "d.csv").string(), "--nu", "0.5", "--R", "1",
                            "--config", (dir / "good.json").string()});
  CHECK(ok.code == 0);
  CHECK(parse_artifacts(ok.out).posterior->draws == 10);
}

TEST_CASE("bench-synth output files") {
  const auto dir = workdir("bench");
  const Result r = invoke({"bench-synth", "--seed", "7", "--chain-length", "400", "--burn-in", "100",
                           "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"data.csv", "truth.csv", "predictions.csv", "report.json"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(r.out.find("withheld 41") != std::string::npos);
  CHECK(r.out.find("coverage_2sd") != std::string::npos);
  CHECK(r.err.find("wall-clock") != std::string::npos);
  const RunArtifacts rep = read_artifacts(dir / "report.json");
  CHECK(rep.seed == 7);
  CHECK(rep.version == kVersion);
  CHECK_FALSE(rep.config_hash.empty());
}
