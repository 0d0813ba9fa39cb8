#include "mvcorr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvcorr/errors.hpp"

namespace mvcorr {

void ForecastSamples::validate() const {
  if (paths.size() < 2) {
    throw InvalidArgument("sample-based scores need at least two samples");
  }
  for (const Mat& p : paths) {
    if (p.rows() != truth.rows() || p.cols() != truth.cols()) {
      throw InvalidArgument("sample path shape does not match the ground truth");
    }
  }
}

double crps(std::span<const double> samples, double obs) {
  const std::size_t n = samples.size();
  if (n < 2) {
    throw InvalidArgument("CRPS needs at least two samples");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double abs_err = 0.0;
  double spread = 0.0;  // sum_{i<j} (x_(j) - x_(i))
  for (std::size_t k = 0; k < n; ++k) {
    abs_err += std::abs(sorted[k] - obs);
    spread += sorted[k] * (2.0 * static_cast<double>(k) - static_cast<double>(n) + 1.0);
  }
  const double nd = static_cast<double>(n);
  return abs_err / nd - spread / (nd * nd);
}

namespace {

std::vector<double> cell(const ForecastSamples& f, Index t, Index i) {
  std::vector<double> v(f.paths.size());
  for (std::size_t k = 0; k < f.paths.size(); ++k) {
    v[k] = f.paths[k](t, i);
  }
  return v;
}

}  // namespace

double crps_mean(const ForecastSamples& f) {
  f.validate();
  double total = 0.0;
  for (Index t = 0; t < f.horizon(); ++t) {
    for (Index i = 0; i < f.series(); ++i) {
      total += crps(cell(f, t, i), f.truth(t, i));
    }
  }
  return total / static_cast<double>(f.horizon() * f.series());
}

double crps_sum(const ForecastSamples& f, CrpsSumNormalization norm) {
  f.validate();
  std::vector<double> sums(f.paths.size());
  double total = 0.0;
  double denom = 0.0;
  for (Index t = 0; t < f.horizon(); ++t) {
    for (std::size_t k = 0; k < f.paths.size(); ++k) {
      sums[k] = f.paths[k].row(t).sum();
    }
    const double obs = f.truth.row(t).sum();
    total += crps(sums, obs);
    denom += std::abs(obs);
  }
  if (norm == CrpsSumNormalization::kRaw) {
    return total / static_cast<double>(f.horizon());
  }
  if (denom == 0.0) {
    throw InvalidArgument("CRPS_sum normalization: summed truth is zero");
  }
  return total / denom;
}

double empirical_quantile(std::span<const double> samples, double rho) {
  if (samples.empty()) {
    throw InvalidArgument("quantile of an empty sample");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw InvalidArgument("quantile level must lie in [0, 1]");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = rho * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile_loss_term(double quantile, double obs, double rho) {
  const double over = quantile > obs ? 1.0 - rho : 0.0;
  const double under = quantile <= obs ? rho : 0.0;
  return 2.0 * (quantile - obs) * (over - under);
}

double quantile_loss(std::span<const double> quantiles, std::span<const double> obs, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw InvalidArgument("quantile loss level must lie in (0, 1)");
  }
  if (quantiles.size() != obs.size() || obs.empty()) {
    throw InvalidArgument("quantile loss needs equally sized, non-empty inputs");
  }
  double loss = 0.0;
  double norm = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    loss += quantile_loss_term(quantiles[k], obs[k], rho);
    norm += obs[k];
  }
  if (norm == 0.0) {
    throw InvalidArgument("quantile loss normalization: observations sum to zero");
  }
  return loss / norm;
}

double quantile_loss(const ForecastSamples& f, double rho) {
  f.validate();
  std::vector<double> q;
  std::vector<double> z;
  for (Index t = 0; t < f.horizon(); ++t) {
    for (Index i = 0; i < f.series(); ++i) {
      q.push_back(empirical_quantile(cell(f, t, i), rho));
      z.push_back(f.truth(t, i));
    }
  }
  return quantile_loss(q, z, rho);
}

double energy_score(const ForecastSamples& f) {
  f.validate();
  const std::size_t n = f.paths.size();
  double to_truth = 0.0;
  for (const Mat& p : f.paths) {
    to_truth += (p - f.truth).norm();
  }
  double pairs = 0.0;  // each unordered pair once
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      pairs += (f.paths[a] - f.paths[b]).norm();
    }
  }
  const double nd = static_cast<double>(n);
  return to_truth / nd - pairs / (nd * nd);
}

Mat sample_mean(const ForecastSamples& f) {
  if (f.paths.empty()) {
    throw InvalidArgument("sample mean of zero paths");
  }
  Mat acc = Mat::Zero(f.paths.front().rows(), f.paths.front().cols());
  for (const Mat& p : f.paths) {
    acc += p;
  }
  return acc / static_cast<double>(f.paths.size());
}

double rrmse(const Mat& mean_forecast, const Mat& truth) {
  if (mean_forecast.rows() != truth.rows() || mean_forecast.cols() != truth.cols()) {
    throw InvalidArgument("RRMSE: forecast and truth shapes differ");
  }
  const double denom = (truth.array() - truth.mean()).square().sum();
  if (denom == 0.0) {
    throw InvalidArgument("RRMSE undefined for a constant ground truth");
  }
  return std::sqrt((truth - mean_forecast).squaredNorm() / denom);
}

double mean_abs_lag1_autocorrelation(const Mat& residuals) {
  if (residuals.rows() < 3 || residuals.cols() < 1) {
    throw InvalidArgument("lag-1 autocorrelation needs at least three rows");
  }
  double total = 0.0;
  const Index n = residuals.rows();
  for (Index j = 0; j < residuals.cols(); ++j) {
    const Vec x = residuals.col(j).array() - residuals.col(j).mean();
    const double var = x.squaredNorm();
    if (var == 0.0) {
      continue;
    }
    total += std::abs(x.head(n - 1).dot(x.tail(n - 1)) / var);
  }
  return total / static_cast<double>(residuals.cols());
}

MetricSet evaluate(const ForecastSamples& f) {
  MetricSet m;
  m.crps = crps_mean(f);
  m.crps_sum = crps_sum(f, CrpsSumNormalization::kAbsoluteSum);
  m.crps_sum_raw = crps_sum(f, CrpsSumNormalization::kRaw);
  m.quantile_50 = quantile_loss(f, 0.5);
  m.quantile_90 = quantile_loss(f, 0.9);
  m.energy = energy_score(f);
  m.rrmse = rrmse(sample_mean(f), f.truth);
  return m;
}

MetricSet mean_metrics(std::span<const MetricSet> sets) {
  MetricSet out;
  if (sets.empty()) {
    return out;
  }
  for (const MetricSet& s : sets) {
    out.crps += s.crps;
    out.crps_sum += s.crps_sum;
    out.crps_sum_raw += s.crps_sum_raw;
    out.quantile_50 += s.quantile_50;
    out.quantile_90 += s.quantile_90;
    out.energy += s.energy;
    out.rrmse += s.rrmse;
  }
  const double n = static_cast<double>(sets.size());
  out.crps /= n;
  out.crps_sum /= n;
  out.crps_sum_raw /= n;
  out.quantile_50 /= n;
  out.quantile_90 /= n;
  out.energy /= n;
  out.rrmse /= n;
  return out;
}

}  // namespace mvcorr
