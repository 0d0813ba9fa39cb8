// mvcorr: generate data, train, forecast, score and compare models.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mvcorr/calibration.hpp"
#include "mvcorr/checkpoint.hpp"
#include "mvcorr/dataset.hpp"
#include "mvcorr/errors.hpp"
#include "mvcorr/experiment.hpp"
#include "mvcorr/metrics.hpp"
#include "mvcorr/oracle/dense.hpp"
#include "mvcorr/report.hpp"
#include "mvcorr/synthetic.hpp"

namespace {

using nlohmann::json;
using namespace mvcorr;

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

constexpr const char* kSamplesFormat = "mvcorr-samples/1";

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_config(path);
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Mat m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
  for (Index i = 0; i < m.rows(); ++i) {
    if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != m.cols()) {
      throw ConfigError("ragged matrix in samples file");
    }
    for (Index k = 0; k < m.cols(); ++k) {
      m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
  }
  return m;
}

int cmd_generate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out) {
  ExperimentConfig c = config_or_default(config_path);
  const SyntheticDataset data = generate(c.generator, seed.value_or(c.seed));
  write_dataset(out, data);
  std::cout << "wrote " << out << ".csv and " << out << ".json (" << data.panel.length() << " x "
            << data.panel.num_series() << ")\n";
  return kOk;
}

int cmd_train(const std::string& config_path, const std::string& data_path, const std::string& out, bool baseline) {
  ExperimentConfig c = config_or_default(config_path);
  if (!data_path.empty()) {
    c.dataset = data_path;
  }
  const Panel raw = experiment_panel(c);
  validate(c, raw.num_series());
  const DataSplit split = split_rows(c, raw.length());
  const Scaler scaler = Scaler::fit(raw.values, split.train.end);
  const Panel standardized{scaler.transform(raw.values), raw.time_offset};
  ForecastState state = make_state(c, raw.num_series(), baseline);
  const TrainingHistory hist = train_variant(state, c, standardized, split, baseline ? "baseline" : "method");
  save_checkpoint(out, state, &scaler);
  std::cout << "trained " << hist.updates << " updates, best epoch " << hist.best_epoch
            << (hist.early_stopped ? " (early stop)" : "") << "; wrote " << out << '\n';
  return kOk;
}

int cmd_predict(const std::string& ckpt_path, const std::string& data_path, Index origin, Index horizon,
                Index instances, Index paths, std::uint64_t seed, bool calibrate, const std::string& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Panel raw = read_csv(data_path).panel;
  const Scaler scaler = ckpt.scaler.value_or(Scaler{Vec::Zero(raw.num_series()), Vec::Ones(raw.num_series())});
  const Panel standardized{scaler.transform(raw.values), raw.time_offset};

  json j = {{"format", kSamplesFormat}, {"seed", seed}, {"paths", paths}, {"calibrate", calibrate}};
  json list = json::array();
  for (Index k = 0; k < instances; ++k) {
    ForecastRequest req;
    req.origin = origin + k * horizon;
    req.horizon = horizon;
    req.paths = paths;
    req.seed = seed + static_cast<std::uint64_t>(k);
    req.calibrate = calibrate;
    json samples = json::array();
    for (const Mat& p : rolling_forecast(ckpt.state, standardized, req)) {
      samples.push_back(matrix_json(scaler.inverse(p)));
    }
    list.push_back({{"origin", req.origin}, {"samples", std::move(samples)}});
  }
  j["instances"] = std::move(list);
  write_json_file(out, j);
  std::cout << "wrote " << instances << " instance(s) x " << paths << " paths to " << out << '\n';
  return kOk;
}

int cmd_evaluate(const std::string& samples_path, const std::string& data_path, const std::string& out,
                 const std::string& label) {
  const json j = read_json_file(samples_path);
  EvaluationReport report;
  try {
    if (j.at("format").get<std::string>() != kSamplesFormat) {
      throw ConfigError("unexpected samples format in " + samples_path);
    }
    const Panel raw = read_csv(data_path).panel;
    report.label = label;
    report.seed = j.at("seed").get<std::uint64_t>();
    report.samples = j.at("paths").get<Index>();
    report.config_hash = content_hash(j.dump());
    Index k = 0;
    for (const json& inst : j.at("instances")) {
      ForecastSamples f;
      for (const json& p : inst.at("samples")) {
        f.paths.push_back(matrix_from_json(p));
      }
      const Index origin = inst.at("origin").get<Index>();
      const Index horizon = f.paths.empty() ? 0 : f.paths.front().rows();
      if (origin < 0 || origin + horizon > raw.length()) {
        throw ConfigError("forecast instance at row " + std::to_string(origin) + " runs past the data");
      }
      f.truth = raw.values.middleRows(origin, horizon);
      f.instance = k++;
      report.instances.push_back({origin, evaluate(f)});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed samples file: ") + e.what());
  }
  report.finalize();
  write_json_file(out, report);
  std::cout << format_table({report});
  return kOk;
}

int cmd_compare(const std::string& config_path, const std::string& out) {
  const ExperimentConfig c = config_or_default(config_path);
  const ExperimentResult r = run_experiment(c);
  write_result(out, r);
  std::cout << format_table(r.reports());
  std::cout << "residual lag-1 |autocorrelation|: raw " << r.residual_autocorr_raw << ", calibrated "
            << r.residual_autocorr_calibrated << '\n';
  std::cout << "elapsed " << r.seconds << " s; results in " << out << '\n';
  return kOk;
}

template <typename F>
double best_seconds(int reps, F&& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

int cmd_bench(Index batch, Index window, Index rank, int reps, std::uint64_t seed) {
  if (batch < 1 || window < 1 || rank < 1 || reps < 1) {
    throw ConfigError("bench sizes and repetitions must be positive");
  }
  std::mt19937_64 rng(seed);
  const BatchCovariance cov = oracle::random_batch_covariance(window, batch, rank, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec r(cov.size());
  for (Index i = 0; i < r.size(); ++i) {
    r[i] = normal(rng);
  }
  double structured = 0.0;
  double dense = 0.0;
  const double ts = best_seconds(reps, [&] { structured = batch_nll(cov, r).value; });
  const double td = best_seconds(reps, [&] { dense = oracle::dense_nll(oracle::assemble_dense(cov), r); });
  std::printf("B=%ld D=%ld R=%ld\n", static_cast<long>(batch), static_cast<long>(window), static_cast<long>(rank));
  std::printf("structured  %12.6f ms  nll %.12g\n", ts * 1e3, structured);
  std::printf("dense       %12.6f ms  nll %.12g\n", td * 1e3, dense);
  std::printf("speedup     %12.2fx\n", td / ts);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate probabilistic forecasting with cross-correlated errors"};
  app.require_subcommand(1);

  std::string config_path;
  std::string data_path;
  std::string out;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset (CSV) and its parameter sidecar (JSON)");
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--config", config_path, "Experiment config whose generator spec is used")->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "Override the config seed");
  gen->add_option("--out", out, "Output stem, without extension")->required();

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  bool baseline = false;
  train->add_option("--config", config_path, "Experiment config")->check(CLI::ExistingFile);
  train->add_option("--data", data_path, "CSV dataset (defaults to the config's dataset or generator)");
  train->add_option("--out", out, "Checkpoint path")->required();
  train->add_flag("--baseline", baseline, "Pin the temporal correlation to the identity");

  auto* predict = app.add_subcommand("predict", "Sample rolling forecasts from a checkpoint");
  std::string ckpt_path;
  Index origin = 0;
  Index horizon = 8;
  Index instances = 1;
  Index paths = 100;
  std::uint64_t seed = 0;
  bool no_calibrate = false;
  predict->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  predict->add_option("--data", data_path, "CSV dataset")->required()->check(CLI::ExistingFile);
  predict->add_option("--origin", origin, "First forecast row")->required();
  predict->add_option("--horizon", horizon, "Steps per path");
  predict->add_option("--instances", instances, "Consecutive origins, spaced by the horizon");
  predict->add_option("--paths", paths, "Sample paths per instance");
  predict->add_option("--seed", seed, "Sampling seed");
  predict->add_flag("--no-calibrate", no_calibrate, "Ignore past residuals when sampling");
  predict->add_option("--out", out, "Samples JSON")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score forecast samples against a dataset");
  std::string samples_path;
  std::string label = "forecast";
  evaluate_cmd->add_option("--samples", samples_path, "Samples JSON from `predict`")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--data", data_path, "CSV dataset")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--label", label, "Report label");
  evaluate_cmd->add_option("--out", out, "Report JSON")->required();

  auto* compare = app.add_subcommand("compare", "Train both variants and compare them on rolling forecasts");
  compare->add_option("--config", config_path, "Experiment config")->check(CLI::ExistingFile);
  compare->add_option("--out", out, "Output directory")->required();

  auto* bench = app.add_subcommand("bench", "Time structured against dense NLL on a random instance");
  Index bench_batch = 200;
  Index bench_window = 4;
  Index bench_rank = 2;
  int reps = 5;
  bench->add_option("--batch", bench_batch, "Series B");
  bench->add_option("--window", bench_window, "Window D");
  bench->add_option("--rank", bench_rank, "Factor rank R");
  bench->add_option("--reps", reps, "Repetitions (best time is reported)");
  bench->add_option("--seed", seed, "Instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_generate(config_path, gen_seed, out);
    if (*train) return cmd_train(config_path, data_path, out, baseline);
    if (*predict) {
      return cmd_predict(ckpt_path, data_path, origin, horizon, instances, paths, seed, !no_calibrate, out);
    }
    if (*evaluate_cmd) return cmd_evaluate(samples_path, data_path, out, label);
    if (*compare) return cmd_compare(config_path, out);
    if (*bench) return cmd_bench(bench_batch, bench_window, bench_rank, reps, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
