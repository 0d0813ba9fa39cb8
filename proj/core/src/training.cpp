#include "mvcorr/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mvcorr/errors.hpp"

namespace mvcorr {

AdamOptimizer::AdamOptimizer(Index size, double learning_rate, double beta1, double beta2, double epsilon)
    : m_(Vec::Zero(size)), v_(Vec::Zero(size)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void AdamOptimizer::step(Vec& params, const Vec& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

std::vector<TrainingWindow> tiled_windows(const ForecastState& state, const Panel& panel, RowRange targets) {
  const Index d = state.dims().window;
  std::vector<int> all(static_cast<std::size_t>(panel.num_series()));
  std::iota(all.begin(), all.end(), 0);
  std::vector<TrainingWindow> out;
  for (Index row = targets.begin; row + d <= targets.end; row += d) {
    out.push_back(make_window(state, panel, all, row));
  }
  return out;
}

Trainer::Trainer(ForecastState& state, TrainingConfig config, const Panel& panel, RowRange train,
                 std::optional<RowRange> validation)
    : state_(state),
      config_(config),
      panel_(panel),
      train_(train),
      optimizer_(state.params().size(), config.learning_rate),
      rng_(config.seed),
      best_train_loss_(std::numeric_limits<double>::infinity()) {
  const Index p = state.dims().context;
  const Index d = state.dims().window;
  if (config_.batch_series < 1 || config_.batch_series > panel.num_series()) {
    throw ConfigError("batch_series must be in [1, N]");
  }
  if (config_.windows_per_update < 1 || config_.updates_per_epoch < 1) {
    throw ConfigError("windows_per_update and updates_per_epoch must be positive");
  }
  train_.begin = std::max<Index>(train_.begin, p + 1);
  if (train_.end > panel.length() || train_.size() < d) {
    throw ConfigError("training range is shorter than one window (needs P + D + 1 rows)");
  }
  if (validation) {
    validation_windows_ = tiled_windows(state_, panel_, *validation);
    if (validation_windows_.empty()) {
      throw ConfigError("validation range is shorter than one window");
    }
  }
}

std::vector<TrainingWindow> Trainer::draw_windows() {
  const Index d = state_.dims().window;
  std::uniform_int_distribution<Index> start(train_.begin, train_.end - d);
  std::vector<TrainingWindow> out;
  for (int w = 0; w < config_.windows_per_update; ++w) {
    const std::uint64_t subset_seed = rng_();
    const auto series = sample_series_subset(static_cast<int>(panel_.num_series()), config_.batch_series, subset_seed);
    out.push_back(make_window(state_, panel_, series, start(rng_)));
  }
  return out;
}

double Trainer::training_step(std::span<const TrainingWindow> windows) {
  if (windows.empty()) {
    throw InvalidArgument("training step needs at least one window");
  }
  Vec grad = Vec::Zero(state_.params().size());
  double loss = 0.0;
  for (const TrainingWindow& w : windows) {
    WindowLoss wl = window_loss(state_, w, config_.likelihood, true);
    loss += wl.terms.value;
    grad += wl.gradient;
  }
  const double scale = 1.0 / static_cast<double>(windows.size());
  loss *= scale;
  grad *= scale;

  if (!state_.learn_lengthscales) {
    grad.segment(state_.layout().lengthscales.offset, state_.layout().lengthscales.size()).setZero();
  }
  grad += config_.weight_decay * state_.params();
  if (!grad.allFinite()) {
    throw NumericalError("non-finite gradient at update " + std::to_string(optimizer_.steps()));
  }
  const double norm = grad.norm();
  if (norm > config_.grad_clip) {
    grad *= config_.grad_clip / norm;
  }
  optimizer_.step(state_.params(), grad);

  // Plateau detection works on epoch-sized blocks of the training loss.
  block_loss_ += loss;
  if (++block_count_ == config_.updates_per_epoch) {
    const double mean = block_loss_ / block_count_;
    block_loss_ = 0.0;
    block_count_ = 0;
    if (mean < best_train_loss_) {
      best_train_loss_ = mean;
      since_improvement_ = 0;
    } else if ((since_improvement_ += config_.updates_per_epoch) >= config_.plateau_updates) {
      optimizer_.set_learning_rate(optimizer_.learning_rate() * 0.5);
      since_improvement_ = 0;
    }
  }
  return loss;
}

double Trainer::training_step() {
  const std::vector<TrainingWindow> windows = draw_windows();
  return training_step(windows);
}

double Trainer::validation_loss() const {
  if (validation_windows_.empty()) {
    throw InvalidArgument("trainer has no validation range");
  }
  double total = 0.0;
  for (const TrainingWindow& w : validation_windows_) {
    total += window_loss(state_, w, config_.likelihood, false).terms.value;
  }
  return total / static_cast<double>(validation_windows_.size());
}

TrainingHistory Trainer::fit() {
  TrainingHistory hist;
  const bool validate = !validation_windows_.empty();
  double best_valid = std::numeric_limits<double>::infinity();
  Vec best_params = state_.params();
  int epochs_without_improvement = 0;
  int epoch = 0;

  while (hist.updates < config_.max_updates) {
    const int in_epoch = std::min(config_.updates_per_epoch, config_.max_updates - hist.updates);
    for (int u = 0; u < in_epoch; ++u) {
      hist.train_loss.push_back(training_step());
      ++hist.updates;
    }
    if (!validate) {
      ++epoch;
      continue;
    }
    const double v = validation_loss();
    hist.validation_loss.push_back(v);
    if (v < best_valid) {
      best_valid = v;
      best_params = state_.params();
      hist.best_epoch = epoch;
      epochs_without_improvement = 0;
    } else if (++epochs_without_improvement >= config_.patience_epochs) {
      hist.early_stopped = true;
      break;
    }
    ++epoch;
  }
  if (validate) {
    state_.params() = best_params;
  }
  return hist;
}

}  // namespace mvcorr
