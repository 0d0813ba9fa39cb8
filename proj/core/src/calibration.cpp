#include "mvcorr/calibration.hpp"

#include <numeric>
#include <string>

#include "mvcorr/errors.hpp"

namespace mvcorr {

ResidualBuffer::ResidualBuffer(Index capacity) : capacity_(capacity) {
  if (capacity < 0) {
    throw InvalidArgument("residual buffer capacity must be non-negative");
  }
}

void ResidualBuffer::push(Vec residual, Mat factor, Vec diag) {
  if (capacity_ == 0) {
    return;
  }
  if (!entries_.empty() && (residual.size() != entries_.front().residual.size() ||
                            factor.cols() != entries_.front().factor.cols())) {
    throw InvalidArgument("residual buffer entries must share B and R");
  }
  if (static_cast<Index>(entries_.size()) == capacity_) {
    entries_.pop_front();
  }
  entries_.push_back({std::move(residual), std::move(factor), std::move(diag)});
}

Mat ConditionalGaussian::dense_covariance() const {
  Mat out = factor * latent * factor.transpose();
  out.diagonal() += diag;
  return out;
}

Vec ConditionalGaussian::draw(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index r = latent.rows();
  Vec white(r);
  for (Index k = 0; k < r; ++k) {
    white[k] = normal(rng);
  }
  const JitteredCholesky chol = jittered_cholesky(latent, "conditional latent covariance");
  Vec out = mean + factor * (chol.lower() * white);
  for (Index i = 0; i < out.size(); ++i) {
    out[i] += std::sqrt(diag[i]) * normal(rng);
  }
  return out;
}

ConditionalGaussian conditional_error_distribution(const ResidualBuffer& buffer, const Mat& next_factor,
                                                   const Vec& next_diag, const TemporalCorrelation& corr) {
  const Index k = buffer.size();
  const Index b = next_factor.rows();
  const Index r = next_factor.cols();
  if (next_diag.size() != b) {
    throw InvalidArgument("conditional: diag length does not match factor rows");
  }
  if (corr.steps() < k + 1) {
    throw InvalidArgument("conditional: correlation smaller than buffer + 1 steps");
  }

  ConditionalGaussian out;
  out.factor = next_factor;
  out.diag = next_diag;
  out.mean = Vec::Zero(b);
  out.latent = Mat::Identity(r, r);
  if (k == 0) {
    return out;
  }

  const Mat c = corr.matrix().bottomRightCorner(k + 1, k + 1);
  // c_star(s) = Corr(new step, buffered step s)
  const Vec c_star = c.row(k).head(k).transpose();
  if (c_star.isZero(0.0)) {
    return out;
  }

  std::vector<Mat> factors;
  Vec diag(k * b);
  Vec observed(k * b);
  for (Index s = 0; s < k; ++s) {
    const auto& e = buffer[s];
    if (e.residual.size() != b || e.factor.rows() != b || e.factor.cols() != r) {
      throw InvalidArgument("conditional: buffered step shape differs from the new step");
    }
    factors.push_back(e.factor);
    diag.segment(s * b, b) = e.diag;
    observed.segment(s * b, b) = e.residual;
  }
  const BatchCovariance obs_cov(std::move(factors), std::move(diag), TemporalCorrelation(c.topLeftCorner(k, k)));
  const StructuredFactorization f(obs_cov);

  // Sigma_* Sigma_obs^{-1} eta_obs = L_new sum_s c_s L_s^T alpha_s
  const Vec projected = f.project(f.solve(observed));
  Vec latent_mean = Vec::Zero(r);
  for (Index s = 0; s < k; ++s) {
    latent_mean += c_star[s] * projected.segment(s * r, r);
  }
  out.mean = next_factor * latent_mean;

  // Sigma_* Sigma_obs^{-1} Sigma_*^T = L_new S L_new^T with
  // S = sum_{s,t} c_s c_t [A^T Sigma_obs^{-1} A]_{st}
  const Mat w = f.projected_precision();
  Mat s_mat = Mat::Zero(r, r);
  for (Index s = 0; s < k; ++s) {
    for (Index t = 0; t < k; ++t) {
      s_mat += c_star[s] * c_star[t] * w.block(s * r, t * r, r, r);
    }
  }
  out.latent = Mat::Identity(r, r) - 0.5 * (s_mat + s_mat.transpose());
  return out;
}

namespace {

std::vector<int> resolve_series(const Panel& panel, const std::vector<int>& requested) {
  if (requested.empty()) {
    std::vector<int> all(static_cast<std::size_t>(panel.num_series()));
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  for (int s : requested) {
    if (s < 0 || s >= panel.num_series()) {
      throw InvalidArgument("series index " + std::to_string(s) + " outside the panel");
    }
  }
  return requested;
}

std::mt19937_64 path_rng(std::uint64_t seed, Index path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(static_cast<std::uint64_t>(path) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::vector<Mat> rolling_forecast(const ForecastState& state, const Panel& history, const ForecastRequest& req) {
  const Index p = state.dims().context;
  const Index d = state.dims().window;
  if (req.horizon < 1 || req.paths < 1) {
    throw InvalidArgument("forecast horizon and path count must be positive");
  }
  if (req.origin - 1 < p || req.origin > history.length()) {
    throw InvalidArgument("forecast origin " + std::to_string(req.origin) + " needs at least P = " +
                          std::to_string(p) + " history rows (plus one lag)");
  }
  const std::vector<int> series = resolve_series(history, req.series);
  const Index b = static_cast<Index>(series.size());

  // Teacher-forced warm-up over the trailing P + D - 1 rows; the last D - 1
  // outputs provide the true residuals that seed the buffer.
  const Index start = std::max<Index>(1, req.origin - (p + d - 1));
  const Index warm = req.origin - start;
  const std::vector<Mat> inputs = build_inputs(state, history, series, start, warm);
  const Trajectory traj = unroll(state, inputs);

  ResidualBuffer seed_buffer(d - 1);
  for (Index k = std::max<Index>(0, warm - (d - 1)); k < warm; ++k) {
    const StepDistribution dist = emit_step(state, traj.hidden(static_cast<std::size_t>(k)));
    Vec truth(b);
    for (Index i = 0; i < b; ++i) {
      truth[i] = history.values(start + k, series[static_cast<std::size_t>(i)]);
    }
    seed_buffer.push(truth - dist.mean, dist.factor, dist.diag);
  }

  std::vector<Mat> out(static_cast<std::size_t>(req.paths));
  Mat x(b, InputEncoder::kFeatures);
  Eigen::Matrix<double, 1, InputEncoder::kFeatures> feat;
  for (Index path = 0; path < req.paths; ++path) {
    std::mt19937_64 rng = path_rng(req.seed, path);
    ResidualBuffer buffer = seed_buffer;
    CellState cell = traj.final_state;
    Vec lag(b);
    for (Index i = 0; i < b; ++i) {
      lag[i] = history.values(req.origin - 1, series[static_cast<std::size_t>(i)]);
    }
    Mat paths_q(req.horizon, b);
    for (Index q = 0; q < req.horizon; ++q) {
      const std::int64_t time = history.time_offset + req.origin + q;
      for (Index i = 0; i < b; ++i) {
        const int s = series[static_cast<std::size_t>(i)];
        state.encoder().encode(lag[i], time, s, feat.data());
        x.row(i) = feat;
      }
      cell = advance(state, cell, x);
      const StepDistribution dist = emit_step(state, cell.hidden);

      ConditionalGaussian cond;
      if (req.calibrate) {
        cond = conditional_error_distribution(buffer, dist.factor, dist.diag, step_correlation(state, dist.mix_logits));
      } else {
        cond = conditional_error_distribution(ResidualBuffer(0), dist.factor, dist.diag, TemporalCorrelation::identity(1));
      }
      const Vec eta = cond.draw(rng);
      const Vec z = dist.mean + eta;
      paths_q.row(q) = z.transpose();
      buffer.push(eta, dist.factor, dist.diag);
      lag = z;
    }
    out[static_cast<std::size_t>(path)] = std::move(paths_q);
  }
  return out;
}

OneStepResiduals one_step_residuals(const ForecastState& state, const Panel& panel, RowRange targets) {
  const Index p = state.dims().context;
  const Index d = state.dims().window;
  const Index n = panel.num_series();
  std::vector<int> series(static_cast<std::size_t>(n));
  std::iota(series.begin(), series.end(), 0);

  OneStepResiduals out;
  out.raw.resize(targets.size(), n);
  out.calibrated.resize(targets.size(), n);
  for (Index t = targets.begin; t < targets.end; ++t) {
    // Same layout as a training window whose last target is row t.
    const TrainingWindow w = make_window(state, panel, series, t - d + 1);
    const Trajectory traj = unroll(state, w.inputs);
    ResidualBuffer buffer(d - 1);
    StepDistribution last;
    for (Index s = 0; s < d; ++s) {
      StepDistribution dist = emit_step(state, traj.hidden(static_cast<std::size_t>(p + s)));
      const Vec resid = w.targets.row(s).transpose() - dist.mean;
      if (s + 1 < d) {
        buffer.push(resid, dist.factor, dist.diag);
      } else {
        last = std::move(dist);
      }
    }
    const Vec resid = w.targets.row(d - 1).transpose() - last.mean;
    const ConditionalGaussian cond =
        conditional_error_distribution(buffer, last.factor, last.diag, step_correlation(state, last.mix_logits));
    out.raw.row(t - targets.begin) = resid.transpose();
    out.calibrated.row(t - targets.begin) = (resid - cond.mean).transpose();
  }
  return out;
}

}  // namespace mvcorr
