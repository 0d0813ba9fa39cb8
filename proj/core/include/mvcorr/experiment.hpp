#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvcorr/dataset.hpp"
#include "mvcorr/forecaster.hpp"
#include "mvcorr/report.hpp"
#include "mvcorr/synthetic.hpp"
#include "mvcorr/training.hpp"

namespace mvcorr {

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  ModelDims dims;
  int batch_series = 8;   // B
  int horizon = 8;        // Q
  LengthscaleGrid grid = LengthscaleGrid::kHalfIntegers;
  std::vector<double> lengthscales;  // overrides `grid` when non-empty
  bool learn_lengthscales = false;
  double learning_rate = 1e-3;
  int max_updates = 10000;
  int updates_per_epoch = 400;
  int windows_per_update = 16;
  int patience_epochs = 10;
  int plateau_updates = 500;
  std::uint64_t seed = 0;
  bool calibrate = true;
  int instances = 20;     // consecutive forecast origins, spaced by Q
  int paths = 100;
  int season_length = 24;
  std::optional<std::string> dataset;  // CSV path; the generator is used otherwise
  GeneratorSpec generator;
};

// Throws ConfigError on an invalid combination (B > N, D > P + Q, ...).
void validate(const ExperimentConfig& config, Index num_series);

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_hash(const ExperimentConfig& config);

// Sequential split of a panel of length T: training rows first, then a
// validation span and a test span of instances * Q rows each.
struct DataSplit {
  RowRange train;
  RowRange validation;
  RowRange test;
};

DataSplit split_rows(const ExperimentConfig& config, Index length);

std::vector<double> resolve_lengthscales(const ExperimentConfig& config);

// Fresh model for the panel; identical seeds give identical initial weights
// for the two variants.
ForecastState make_state(const ExperimentConfig& config, Index num_series, bool identity_correlation);

TrainingConfig training_config(const ExperimentConfig& config);

// Trains in place on the standardized panel. Divergence is rethrown as a
// NumericalError naming the variant.
TrainingHistory train_variant(ForecastState& state, const ExperimentConfig& config, const Panel& standardized,
                              const DataSplit& split, const std::string& label);

// Rolling forecasts at every test origin, scored on the original scale.
EvaluationReport evaluate_forecasts(const ForecastState& state, const ExperimentConfig& config,
                                    const Panel& standardized, const Scaler& scaler, const DataSplit& split,
                                    bool calibrate, const std::string& label);

EvaluationReport evaluate_var1(const ExperimentConfig& config, const Panel& raw, const DataSplit& split);

struct ExperimentResult {
  EvaluationReport method;         // learned C, calibrated per config
  EvaluationReport baseline;       // C = I, standard sampler
  EvaluationReport uncalibrated;   // learned C, standard sampler
  EvaluationReport var1;
  TrainingHistory method_history;
  TrainingHistory baseline_history;
  double residual_autocorr_raw = 0.0;         // one-step residuals of the method model, test span
  double residual_autocorr_calibrated = 0.0;
  double seconds = 0.0;

  std::vector<EvaluationReport> reports() const { return {method, baseline, uncalibrated, var1}; }
};

// Panel from the config's dataset, or generated from its spec and seed.
Panel experiment_panel(const ExperimentConfig& config);

ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const Panel& raw);

nlohmann::json result_json(const ExperimentResult& result);

// Writes reports.json and summary.txt into `dir`.
void write_result(const std::filesystem::path& dir, const ExperimentResult& result);

}  // namespace mvcorr
