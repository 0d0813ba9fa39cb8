#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "mvcorr/forecaster.hpp"
#include "mvcorr/training.hpp"

namespace mvcorr {

// Trailing residuals (oldest first) together with the covariance factors the
// model emitted for those steps, which the conditional partition needs.
class ResidualBuffer {
 public:
  struct Entry {
    Vec residual;  // B
    Mat factor;    // B x R
    Vec diag;      // B
  };

  explicit ResidualBuffer(Index capacity);

  void push(Vec residual, Mat factor, Vec diag);
  void clear() { entries_.clear(); }

  Index capacity() const { return capacity_; }
  Index size() const { return static_cast<Index>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  const Entry& operator[](Index i) const { return entries_[static_cast<std::size_t>(i)]; }

 private:
  Index capacity_;
  std::deque<Entry> entries_;
};

// N(mean, diag(d) + L V L^T) for the next step's error.
struct ConditionalGaussian {
  Vec mean;     // B
  Mat factor;   // L, B x R
  Mat latent;   // V, R x R
  Vec diag;     // d, B

  Mat dense_covariance() const;
  // One draw; consumes R + B standard normals from `rng` in that order.
  Vec draw(std::mt19937_64& rng) const;
};

// Conditional distribution of the next error given the buffered residuals.
// `corr` spans the buffered steps plus the new one; its trailing block of
// size buffer.size() + 1 is used, the new step being last. With an empty
// buffer the unconditional N(0, L L^T + diag(d)) is returned.
ConditionalGaussian conditional_error_distribution(const ResidualBuffer& buffer, const Mat& next_factor,
                                                   const Vec& next_diag, const TemporalCorrelation& corr);

struct ForecastRequest {
  Index origin = 0;        // first forecast row; rows before it are history
  Index horizon = 1;       // Q
  Index paths = 100;
  std::uint64_t seed = 0;
  bool calibrate = true;
  std::vector<int> series; // empty means every panel series
};

// Sample paths, one Q x B matrix each. Path k draws from its own generator
// seeded by (seed, k), so output does not depend on evaluation order.
std::vector<Mat> rolling_forecast(const ForecastState& state, const Panel& history, const ForecastRequest& request);

// One-step-ahead residuals over `targets`: raw z - mu, and calibrated
// z - mu - E[eta | previous D - 1 true residuals]. Rows follow `targets`.
struct OneStepResiduals {
  Mat raw;
  Mat calibrated;
};

OneStepResiduals one_step_residuals(const ForecastState& state, const Panel& panel, RowRange targets);

}  // namespace mvcorr
