#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mvcorr/forecaster.hpp"

namespace mvcorr {

// Half-open range of panel rows used as prediction targets.
struct RowRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
};

struct TrainingConfig {
  int batch_series = 8;          // B, series sampled per window
  double learning_rate = 1e-3;
  int max_updates = 10000;
  int windows_per_update = 16;   // gradients averaged over this many windows
  int updates_per_epoch = 400;
  int patience_epochs = 10;      // early stop on validation NLL
  int plateau_updates = 500;     // halve the learning rate after this many updates without improvement
                                 // of the per-epoch mean training loss
  double grad_clip = 10.0;       // global L2 norm
  double weight_decay = 1e-8;
  LikelihoodMode likelihood = LikelihoodMode::kCorrelated;
  std::uint64_t seed = 0;
};

class AdamOptimizer {
 public:
  AdamOptimizer(Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);

  void step(Vec& params, const Vec& grad);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  long steps() const { return t_; }

 private:
  Vec m_;
  Vec v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
};

struct TrainingHistory {
  std::vector<double> train_loss;       // per update, loss before the update
  std::vector<double> validation_loss;  // per epoch
  int updates = 0;
  int best_epoch = -1;
  bool early_stopped = false;
};

class Trainer {
 public:
  // `train` and `validation` are target-row ranges inside `panel`.
  Trainer(ForecastState& state, TrainingConfig config, const Panel& panel, RowRange train,
          std::optional<RowRange> validation = std::nullopt);

  // Mean loss and gradient over explicit windows, then one clipped Adam
  // update. Returns the mean loss of the parameters before the update.
  double training_step(std::span<const TrainingWindow> windows);

  // Draws windows_per_update random windows (series subset + start) and
  // performs training_step on them.
  double training_step();

  // Mean NLL over the fixed validation windows.
  double validation_loss() const;

  // Runs until max_updates or early stop; restores the best validation
  // parameters when a validation range was given.
  TrainingHistory fit();

  std::vector<TrainingWindow> draw_windows();
  const std::vector<TrainingWindow>& validation_windows() const { return validation_windows_; }
  const AdamOptimizer& optimizer() const { return optimizer_; }

 private:
  ForecastState& state_;
  TrainingConfig config_;
  const Panel& panel_;
  RowRange train_;
  std::vector<TrainingWindow> validation_windows_;
  AdamOptimizer optimizer_;
  std::mt19937_64 rng_;
  double best_train_loss_;
  int since_improvement_ = 0;
  double block_loss_ = 0.0;
  int block_count_ = 0;
};

// Windows with all panel series whose targets tile `targets` with stride D.
std::vector<TrainingWindow> tiled_windows(const ForecastState& state, const Panel& panel, RowRange targets);

}  // namespace mvcorr
