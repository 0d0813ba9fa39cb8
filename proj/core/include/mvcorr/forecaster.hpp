#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvcorr/covariance.hpp"
#include "mvcorr/kernels.hpp"

namespace mvcorr {

// Lower bound added to every softplus variance.
inline constexpr double kVarianceFloor = 1e-8;

struct ModelDims {
  int hidden = 10;   // LSTM width H
  int rank = 2;      // covariance factor rank R
  int kernels = 3;   // kernel bank size M (last member is the identity)
  int window = 8;    // correlation horizon D
  int context = 8;   // conditioning range P
  int inputs = 3;    // features per step, fixed by InputEncoder
};

void validate(const ModelDims& dims);

// Per-step scalar features: the lagged value, the position inside the
// seasonal cycle and a series identifier, both of the latter centred on zero.
class InputEncoder {
 public:
  static constexpr int kFeatures = 3;

  InputEncoder() = default;
  InputEncoder(int season_length, int num_series);

  int season_length() const { return season_length_; }
  int num_series() const { return num_series_; }

  void encode(double lag, std::int64_t time, int series, double* out) const;

 private:
  int season_length_ = 24;
  int num_series_ = 1;
};

// Multivariate panel of (standardized) values. Row k is time time_offset + k.
struct Panel {
  Mat values;  // T x N
  std::int64_t time_offset = 0;

  Index length() const { return values.rows(); }
  Index num_series() const { return values.cols(); }
};

// Offsets of each named tensor inside the flat parameter vector. Matrices
// are stored column-major.
struct ParameterLayout {
  struct Block {
    Index offset = 0;
    Index rows = 0;
    Index cols = 0;
    Index size() const { return rows * cols; }
  };

  explicit ParameterLayout(const ModelDims& dims);

  Block gate_weights;   // 4H x (H + I), gates ordered forget, input, candidate, output
  Block gate_bias;      // 4H
  Block mean_weights;   // H
  Block scale_weights;  // H
  Block factor_weights; // R x H
  Block mix_weights;    // M x H
  Block mix_bias;       // M
  Block lengthscales;   // M - 1, softplus-parameterized
  Index total = 0;
};

// All trainable parameters of the recurrent base model and its heads. The
// heads are shared by every series.
class ForecastState {
 public:
  // Weights uniform in +-1/sqrt(H), drawn from `seed`.
  ForecastState(ModelDims dims, std::vector<double> lengthscales, InputEncoder encoder,
                std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  const ParameterLayout& layout() const { return layout_; }
  const InputEncoder& encoder() const { return encoder_; }
  std::uint64_t seed() const { return seed_; }

  Vec& params() { return params_; }
  const Vec& params() const { return params_; }
  Eigen::Map<const Mat> view(const ParameterLayout::Block& b) const {
    return {params_.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<Mat> view(const ParameterLayout::Block& b) {
    return {params_.data() + b.offset, b.rows, b.cols};
  }

  std::vector<double> lengthscales() const;
  KernelBank kernel_bank() const;

  // Baseline variant: the temporal correlation is pinned to the identity.
  bool identity_correlation = false;
  bool learn_lengthscales = false;

 private:
  ModelDims dims_;
  ParameterLayout layout_;
  InputEncoder encoder_;
  std::uint64_t seed_;
  Vec params_;
};

struct CellState {
  Mat hidden;  // B x H
  Mat memory;  // B x H

  static CellState zeros(Index series, int hidden);
};

struct StepCache {
  Mat input;     // B x I
  Mat prev_hidden;
  Mat prev_memory;
  Mat gates;     // B x 4H after activation
  Mat memory;
  Mat hidden;
};

// One LSTM step for every row (series) of `input`.
CellState advance(const ForecastState& state, const CellState& prev, const Mat& input,
                  StepCache* cache = nullptr);

struct Trajectory {
  std::vector<StepCache> steps;
  CellState final_state;
  const Mat& hidden(std::size_t k) const { return steps[k].hidden; }
};

// Runs the cell over a sequence of B x I inputs starting from `init` (zeros
// when null). Series never interact, so each row evolves independently.
Trajectory unroll(const ForecastState& state, std::span<const Mat> inputs,
                  const CellState* init = nullptr);

// Inputs for `steps` consecutive rows starting at `first_row`, for a series
// subset. The lag of row k is the panel value at row k - 1.
std::vector<Mat> build_inputs(const ForecastState& state, const Panel& panel,
                              std::span<const int> series, Index first_row, Index steps);

struct StepDistribution {
  Vec mean;        // B
  Mat factor;      // B x R
  Vec diag;        // B, >= kVarianceFloor
  Vec mix_logits;  // M, from the series-averaged hidden state
};

StepDistribution emit_step(const ForecastState& state, const Mat& hidden);
std::vector<StepDistribution> emit_params(const ForecastState& state, std::span<const Mat> hidden);

// Temporal correlation for a window given the mix logits of its last step;
// the identity for the baseline variant.
TemporalCorrelation step_correlation(const ForecastState& state, const Vec& mix_logits);

// A training example: P + D input steps and the D targets of the last D steps.
struct TrainingWindow {
  std::vector<Mat> inputs;  // P + D entries, B x I each
  Mat targets;              // D x B
  std::vector<int> series;
  Index first_target_row = 0;
};

// Window whose D targets are rows first_target_row .. first_target_row + D - 1.
TrainingWindow make_window(const ForecastState& state, const Panel& panel,
                           std::span<const int> series, Index first_target_row);

enum class LikelihoodMode {
  kCorrelated,        // one batch NLL over the window with the learned (or identity) C
  kIndependentSteps,  // sum of per-step NLLs, no temporal coupling
};

struct WindowLoss {
  NllTerms terms;
  Vec gradient;  // empty unless requested; same layout as ForecastState::params()
};

WindowLoss window_loss(const ForecastState& state, const TrainingWindow& window,
                       LikelihoodMode mode, bool with_gradient);

// Uniform subset of `count` distinct indices out of [0, total), ascending.
std::vector<int> sample_series_subset(int total, int count, std::uint64_t seed);

}  // namespace mvcorr
