#pragma once

#include <span>
#include <vector>

#include "mvcorr/linalg.hpp"

namespace mvcorr {

// Sample forecasts for one forecast instance: n paths of Q x B each, plus
// the aligned Q x B ground truth.
struct ForecastSamples {
  std::vector<Mat> paths;
  Mat truth;
  Index instance = 0;

  Index count() const { return static_cast<Index>(paths.size()); }
  Index horizon() const { return truth.rows(); }
  Index series() const { return truth.cols(); }
  void validate() const;  // throws on shape mismatch or fewer than two paths
};

// Empirical CRPS: mean|Z - z| - 0.5 mean over all n^2 ordered pairs |Z - Z'|.
// Sorts a copy of the samples, O(n log n).
double crps(std::span<const double> samples, double obs);

// Mean CRPS over every (step, series) cell.
double crps_mean(const ForecastSamples& f);

enum class CrpsSumNormalization {
  kRaw,          // mean over steps of CRPS of the cross-series sums
  kAbsoluteSum,  // sum over steps divided by sum_t |sum_i z_{i,t}|
};

double crps_sum(const ForecastSamples& f, CrpsSumNormalization norm = CrpsSumNormalization::kAbsoluteSum);

// Linear interpolation between order statistics (rank rho * (n - 1)).
double empirical_quantile(std::span<const double> samples, double rho);

// Single-pair loss 2 (q - z) ((1 - rho) I[q > z] - rho I[q <= z]).
double quantile_loss_term(double quantile, double obs, double rho);

// sum of quantile_loss_term over pairs divided by sum of observations.
double quantile_loss(std::span<const double> quantiles, std::span<const double> obs, double rho);

// rho-risk of an instance, using the empirical rho-quantile of each cell.
double quantile_loss(const ForecastSamples& f, double rho);

// mean ||Z - z||_F - 0.5 mean over ordered pairs ||Z - Z'||_F (beta = 1).
double energy_score(const ForecastSamples& f);

// Cellwise mean of the sample paths.
Mat sample_mean(const ForecastSamples& f);

// sqrt(sum ||z_t - zhat_t||^2) / sqrt(sum ||z_t - zbar||^2) with zbar the
// scalar mean of the whole instance.
double rrmse(const Mat& mean_forecast, const Mat& truth);

// Mean over columns of |lag-1 sample autocorrelation|.
double mean_abs_lag1_autocorrelation(const Mat& residuals);

struct MetricSet {
  double crps = 0.0;
  double crps_sum = 0.0;
  double crps_sum_raw = 0.0;
  double quantile_50 = 0.0;
  double quantile_90 = 0.0;
  double energy = 0.0;
  double rrmse = 0.0;

  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

MetricSet evaluate(const ForecastSamples& f);

// Arithmetic mean over instances.
MetricSet mean_metrics(std::span<const MetricSet> sets);

}  // namespace mvcorr
