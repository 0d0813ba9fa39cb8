#include "mvcorr/experiment.hpp"

#include <chrono>
#include <fstream>
#include <numeric>
#include <set>

#include "mvcorr/baselines.hpp"
#include "mvcorr/calibration.hpp"
#include "mvcorr/errors.hpp"
#include "mvcorr/metrics.hpp"

namespace mvcorr {

using nlohmann::json;

void validate(const ExperimentConfig& c, Index num_series) {
  if (c.schema_version != kConfigSchemaVersion) {
    throw ConfigError("unsupported config schema_version " + std::to_string(c.schema_version));
  }
  try {
    validate(c.dims);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (c.batch_series < 1 || c.batch_series > num_series) {
    throw ConfigError("batch_series must lie in [1, N] with N = " + std::to_string(num_series));
  }
  if (c.horizon < 1) {
    throw ConfigError("horizon must be positive");
  }
  if (c.dims.window > c.dims.context + c.horizon) {
    throw ConfigError("window D must not exceed P + Q");
  }
  if (c.instances < 1 || c.paths < 2) {
    throw ConfigError("need at least one instance and two sample paths");
  }
  if (!(c.learning_rate > 0.0) || c.max_updates < 0 || c.updates_per_epoch < 1 || c.windows_per_update < 1 ||
      c.patience_epochs < 1 || c.plateau_updates < 1) {
    throw ConfigError("training schedule values must be positive");
  }
  if (c.season_length < 1) {
    throw ConfigError("season_length must be positive");
  }
  if (!c.lengthscales.empty() && static_cast<int>(c.lengthscales.size()) != c.dims.kernels - 1) {
    throw ConfigError("explicit lengthscales need kernels - 1 entries");
  }
}

namespace {

std::string grid_name(LengthscaleGrid g) {
  return g == LengthscaleGrid::kIntegers ? "integers" : "half_integers";
}

LengthscaleGrid grid_from_name(const std::string& s) {
  if (s == "half_integers") return LengthscaleGrid::kHalfIntegers;
  if (s == "integers") return LengthscaleGrid::kIntegers;
  throw ConfigError("unknown lengthscale grid `" + s + "`");
}

std::uint64_t instance_seed(std::uint64_t seed, Index instance) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(instance), 0x5eedu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  j = {{"schema_version", c.schema_version},
       {"dims",
        {{"hidden", c.dims.hidden},
         {"rank", c.dims.rank},
         {"kernels", c.dims.kernels},
         {"window", c.dims.window},
         {"context", c.dims.context},
         {"batch_series", c.batch_series},
         {"horizon", c.horizon}}},
       {"lengthscale_grid", grid_name(c.grid)},
       {"lengthscales", c.lengthscales},
       {"learn_lengthscales", c.learn_lengthscales},
       {"learning_rate", c.learning_rate},
       {"max_updates", c.max_updates},
       {"updates_per_epoch", c.updates_per_epoch},
       {"windows_per_update", c.windows_per_update},
       {"patience_epochs", c.patience_epochs},
       {"plateau_updates", c.plateau_updates},
       {"seed", c.seed},
       {"calibrate", c.calibrate},
       {"instances", c.instances},
       {"paths", c.paths},
       {"season_length", c.season_length},
       {"generator", c.generator}};
  if (c.dataset) {
    j["dataset"] = *c.dataset;
  }
}

void from_json(const json& j, ExperimentConfig& c) {
  static const std::set<std::string> known = {
      "schema_version", "dims",       "lengthscale_grid", "lengthscales",  "learn_lengthscales",
      "learning_rate",  "max_updates", "updates_per_epoch", "windows_per_update", "patience_epochs",
      "plateau_updates", "seed",       "calibrate",        "instances",     "paths",
      "season_length",  "dataset",    "generator"};
  try {
    if (!j.is_object()) {
      throw ConfigError("config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) {
        throw ConfigError("unknown config key `" + key + "`");
      }
    }
    if (!j.contains("schema_version")) {
      throw ConfigError("config is missing schema_version");
    }
    ExperimentConfig d;
    c = d;
    c.schema_version = j.at("schema_version").get<int>();
    if (j.contains("dims")) {
      const json& jd = j.at("dims");
      c.dims.hidden = jd.value("hidden", d.dims.hidden);
      c.dims.rank = jd.value("rank", d.dims.rank);
      c.dims.kernels = jd.value("kernels", d.dims.kernels);
      c.dims.window = jd.value("window", d.dims.window);
      c.dims.context = jd.value("context", d.dims.context);
      c.batch_series = jd.value("batch_series", d.batch_series);
      c.horizon = jd.value("horizon", d.horizon);
    }
    c.grid = grid_from_name(j.value("lengthscale_grid", grid_name(d.grid)));
    c.lengthscales = j.value("lengthscales", d.lengthscales);
    c.learn_lengthscales = j.value("learn_lengthscales", d.learn_lengthscales);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.max_updates = j.value("max_updates", d.max_updates);
    c.updates_per_epoch = j.value("updates_per_epoch", d.updates_per_epoch);
    c.windows_per_update = j.value("windows_per_update", d.windows_per_update);
    c.patience_epochs = j.value("patience_epochs", d.patience_epochs);
    c.plateau_updates = j.value("plateau_updates", d.plateau_updates);
    c.seed = j.value("seed", d.seed);
    c.calibrate = j.value("calibrate", d.calibrate);
    c.instances = j.value("instances", d.instances);
    c.paths = j.value("paths", d.paths);
    c.season_length = j.value("season_length", d.season_length);
    if (j.contains("dataset")) {
      c.dataset = j.at("dataset").get<std::string>();
    }
    if (j.contains("generator")) {
      c.generator = j.at("generator").get<GeneratorSpec>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return read_json_file(path).get<ExperimentConfig>();
}

std::string config_hash(const ExperimentConfig& config) {
  return content_hash(json(config).dump());
}

DataSplit split_rows(const ExperimentConfig& c, Index length) {
  const Index span = static_cast<Index>(c.instances) * c.horizon;
  const Index train_end = length - 2 * span;
  const Index min_train = c.dims.context + c.dims.window + 1;
  if (train_end < min_train) {
    throw ConfigError("series of length " + std::to_string(length) + " is too short for " +
                      std::to_string(c.instances) + " instances of horizon " + std::to_string(c.horizon));
  }
  return {{0, train_end}, {train_end, train_end + span}, {train_end + span, length}};
}

std::vector<double> resolve_lengthscales(const ExperimentConfig& c) {
  if (!c.lengthscales.empty()) {
    return c.lengthscales;
  }
  return lengthscale_grid(c.grid, c.dims.kernels);
}

ForecastState make_state(const ExperimentConfig& c, Index num_series, bool identity_correlation) {
  ForecastState state(c.dims, resolve_lengthscales(c), InputEncoder(c.season_length, static_cast<int>(num_series)),
                      c.seed);
  state.identity_correlation = identity_correlation;
  state.learn_lengthscales = c.learn_lengthscales;
  return state;
}

TrainingConfig training_config(const ExperimentConfig& c) {
  TrainingConfig t;
  t.batch_series = c.batch_series;
  t.learning_rate = c.learning_rate;
  t.max_updates = c.max_updates;
  t.updates_per_epoch = c.updates_per_epoch;
  t.windows_per_update = c.windows_per_update;
  t.patience_epochs = c.patience_epochs;
  t.plateau_updates = c.plateau_updates;
  t.seed = c.seed;
  return t;
}

TrainingHistory train_variant(ForecastState& state, const ExperimentConfig& c, const Panel& standardized,
                              const DataSplit& split, const std::string& label) {
  Trainer trainer(state, training_config(c), standardized, split.train, split.validation);
  TrainingHistory hist;
  try {
    hist = trainer.fit();
  } catch (const NumericalError& e) {
    throw NumericalError("training diverged for `" + label + "`: " + e.what());
  }
  if (!state.params().allFinite()) {
    throw NumericalError("training diverged for `" + label + "`: non-finite parameters after " +
                         std::to_string(hist.updates) + " updates");
  }
  return hist;
}

EvaluationReport evaluate_forecasts(const ForecastState& state, const ExperimentConfig& c, const Panel& standardized,
                                    const Scaler& scaler, const DataSplit& split, bool calibrate,
                                    const std::string& label) {
  EvaluationReport report;
  report.label = label;
  report.samples = c.paths;
  report.seed = c.seed;
  report.config_hash = config_hash(c);
  for (Index k = 0; k < c.instances; ++k) {
    ForecastRequest req;
    req.origin = split.test.begin + k * c.horizon;
    req.horizon = c.horizon;
    req.paths = c.paths;
    req.seed = instance_seed(c.seed, k);
    req.calibrate = calibrate;
    ForecastSamples f;
    for (Mat& p : rolling_forecast(state, standardized, req)) {
      f.paths.push_back(scaler.inverse(p));
    }
    f.truth = scaler.inverse(standardized.values.middleRows(req.origin, c.horizon));
    f.instance = k;
    report.instances.push_back({req.origin, evaluate(f)});
  }
  report.finalize();
  return report;
}

EvaluationReport evaluate_var1(const ExperimentConfig& c, const Panel& raw, const DataSplit& split) {
  const VarModel model = fit_var1(raw.values.topRows(split.train.end));
  EvaluationReport report;
  report.label = "var1";
  report.samples = c.paths;
  report.seed = c.seed;
  report.config_hash = config_hash(c);
  for (Index k = 0; k < c.instances; ++k) {
    const Index origin = split.test.begin + k * c.horizon;
    ForecastSamples f;
    f.paths = var_forecast(model, raw.values.row(origin - 1).transpose(), c.horizon, c.paths, instance_seed(c.seed, k));
    f.truth = raw.values.middleRows(origin, c.horizon);
    f.instance = k;
    report.instances.push_back({origin, evaluate(f)});
  }
  report.finalize();
  return report;
}

Panel experiment_panel(const ExperimentConfig& c) {
  if (c.dataset) {
    return read_csv(*c.dataset).panel;
  }
  return generate(c.generator, c.seed).panel;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, experiment_panel(config));
}

ExperimentResult run_experiment(const ExperimentConfig& c, const Panel& raw) {
  const auto started = std::chrono::steady_clock::now();
  validate(c, raw.num_series());
  const DataSplit split = split_rows(c, raw.length());
  const Scaler scaler = Scaler::fit(raw.values, split.train.end);
  const Panel standardized{scaler.transform(raw.values), raw.time_offset};

  ExperimentResult result;
  ForecastState method = make_state(c, raw.num_series(), false);
  ForecastState baseline = make_state(c, raw.num_series(), true);
  result.method_history = train_variant(method, c, standardized, split, "method");
  result.baseline_history = train_variant(baseline, c, standardized, split, "baseline");

  result.method = evaluate_forecasts(method, c, standardized, scaler, split, c.calibrate,
                                     c.calibrate ? "method" : "method-uncalibrated");
  result.baseline = evaluate_forecasts(baseline, c, standardized, scaler, split, false, "baseline");
  result.uncalibrated = evaluate_forecasts(method, c, standardized, scaler, split, false, "method-uncalibrated");
  result.var1 = evaluate_var1(c, raw, split);

  const OneStepResiduals resid = one_step_residuals(method, standardized, split.test);
  result.residual_autocorr_raw = mean_abs_lag1_autocorrelation(resid.raw);
  result.residual_autocorr_calibrated = mean_abs_lag1_autocorrelation(resid.calibrated);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

namespace {

json history_json(const TrainingHistory& h) {
  return {{"updates", h.updates},
          {"best_epoch", h.best_epoch},
          {"early_stopped", h.early_stopped},
          {"final_train_loss", h.train_loss.empty() ? 0.0 : h.train_loss.back()},
          {"validation_loss", h.validation_loss}};
}

}  // namespace

json result_json(const ExperimentResult& r) {
  return {{"reports", r.reports()},
          {"training", {{"method", history_json(r.method_history)}, {"baseline", history_json(r.baseline_history)}}},
          {"residual_lag1_autocorrelation",
           {{"raw", r.residual_autocorr_raw}, {"calibrated", r.residual_autocorr_calibrated}}},
          {"seconds", r.seconds}};
}

void write_result(const std::filesystem::path& dir, const ExperimentResult& r) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  write_json_file(dir / "reports.json", result_json(r));
  std::ofstream out(dir / "summary.txt");
  if (!out) {
    throw IoError("cannot write " + (dir / "summary.txt").string());
  }
  out << format_table(r.reports());
  out << "residual lag-1 |autocorrelation|: raw " << r.residual_autocorr_raw << ", calibrated "
      << r.residual_autocorr_calibrated << '\n';
}

}  // namespace mvcorr
