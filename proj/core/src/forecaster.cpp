#include "mvcorr/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mvcorr/errors.hpp"

namespace mvcorr {

void validate(const ModelDims& dims) {
  if (dims.hidden < 1 || dims.rank < 1 || dims.kernels < 1 || dims.window < 1 || dims.context < 0) {
    throw ConfigError("model dims must be positive (H, R, M, D >= 1, P >= 0)");
  }
  if (dims.inputs != InputEncoder::kFeatures) {
    throw ConfigError("model expects " + std::to_string(InputEncoder::kFeatures) + " input features");
  }
}

InputEncoder::InputEncoder(int season_length, int num_series)
    : season_length_(season_length), num_series_(num_series) {
  if (season_length < 1 || num_series < 1) {
    throw ConfigError("encoder needs a positive season length and series count");
  }
}

void InputEncoder::encode(double lag, std::int64_t time, int series, double* out) const {
  const std::int64_t phase = ((time % season_length_) + season_length_) % season_length_;
  out[0] = lag;
  out[1] = static_cast<double>(phase) / season_length_ - 0.5;
  out[2] = num_series_ > 1 ? static_cast<double>(series) / (num_series_ - 1) - 0.5 : 0.0;
}

ParameterLayout::ParameterLayout(const ModelDims& dims) {
  const Index h = dims.hidden;
  Index at = 0;
  auto next = [&at](Index rows, Index cols) {
    Block b{at, rows, cols};
    at += rows * cols;
    return b;
  };
  gate_weights = next(4 * h, h + dims.inputs);
  gate_bias = next(4 * h, 1);
  mean_weights = next(h, 1);
  scale_weights = next(h, 1);
  factor_weights = next(dims.rank, h);
  mix_weights = next(dims.kernels, h);
  mix_bias = next(dims.kernels, 1);
  lengthscales = next(dims.kernels - 1, 1);
  total = at;
}

ForecastState::ForecastState(ModelDims dims, std::vector<double> lengthscales, InputEncoder encoder,
                             std::uint64_t seed)
    : dims_(dims), layout_(dims), encoder_(encoder), seed_(seed), params_(layout_.total) {
  validate(dims_);
  if (static_cast<int>(lengthscales.size()) != dims_.kernels - 1) {
    throw ConfigError("expected " + std::to_string(dims_.kernels - 1) + " lengthscales, got " +
                      std::to_string(lengthscales.size()));
  }
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims_.hidden));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (Index i = 0; i < layout_.lengthscales.offset; ++i) {
    params_[i] = uniform(rng);
  }
  for (std::size_t m = 0; m < lengthscales.size(); ++m) {
    if (!(lengthscales[m] > 0.0)) {
      throw ConfigError("lengthscales must be positive");
    }
    params_[layout_.lengthscales.offset + static_cast<Index>(m)] = inverse_softplus(lengthscales[m]);
  }
}

std::vector<double> ForecastState::lengthscales() const {
  std::vector<double> out;
  for (Index m = 0; m < layout_.lengthscales.size(); ++m) {
    out.push_back(softplus(params_[layout_.lengthscales.offset + m]));
  }
  return out;
}

KernelBank ForecastState::kernel_bank() const { return KernelBank(lengthscales(), dims_.window); }

CellState CellState::zeros(Index series, int hidden) {
  return {Mat::Zero(series, hidden), Mat::Zero(series, hidden)};
}

CellState advance(const ForecastState& state, const CellState& prev, const Mat& input, StepCache* cache) {
  const Index h = state.dims().hidden;
  const Index b = input.rows();
  const auto w = state.view(state.layout().gate_weights);
  const auto bias = state.view(state.layout().gate_bias);

  Mat pre = prev.hidden * w.leftCols(h).transpose() + input * w.rightCols(input.cols()).transpose();
  pre.rowwise() += bias.col(0).transpose();

  Mat gates(b, 4 * h);
  gates.leftCols(2 * h) = pre.leftCols(2 * h).unaryExpr([](double x) { return sigmoid(x); });
  gates.middleCols(2 * h, h) = pre.middleCols(2 * h, h).array().tanh();
  gates.rightCols(h) = pre.rightCols(h).unaryExpr([](double x) { return sigmoid(x); });

  CellState next;
  next.memory = gates.leftCols(h).cwiseProduct(prev.memory) +
                gates.middleCols(h, h).cwiseProduct(gates.middleCols(2 * h, h));
  next.hidden = gates.rightCols(h).cwiseProduct(Mat(next.memory.array().tanh()));

  if (cache != nullptr) {
    cache->input = input;
    cache->prev_hidden = prev.hidden;
    cache->prev_memory = prev.memory;
    cache->gates = std::move(gates);
    cache->memory = next.memory;
    cache->hidden = next.hidden;
  }
  return next;
}

Trajectory unroll(const ForecastState& state, std::span<const Mat> inputs, const CellState* init) {
  if (inputs.empty()) {
    throw InvalidArgument("unroll needs at least one input step");
  }
  Trajectory out;
  CellState cur = init != nullptr ? *init : CellState::zeros(inputs.front().rows(), state.dims().hidden);
  out.steps.resize(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    cur = advance(state, cur, inputs[k], &out.steps[k]);
  }
  out.final_state = std::move(cur);
  return out;
}

std::vector<Mat> build_inputs(const ForecastState& state, const Panel& panel, std::span<const int> series,
                              Index first_row, Index steps) {
  if (first_row < 1 || first_row + steps > panel.length()) {
    throw InvalidArgument("input rows [" + std::to_string(first_row) + ", " +
                          std::to_string(first_row + steps) + ") fall outside the panel");
  }
  const Index b = static_cast<Index>(series.size());
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (Index k = 0; k < steps; ++k) {
    const Index row = first_row + k;
    Mat x(b, InputEncoder::kFeatures);
    Eigen::Matrix<double, 1, InputEncoder::kFeatures> feat;
    for (Index i = 0; i < b; ++i) {
      const int s = series[static_cast<std::size_t>(i)];
      state.encoder().encode(panel.values(row - 1, s), panel.time_offset + row, s, feat.data());
      x.row(i) = feat;
    }
    out.push_back(std::move(x));
  }
  return out;
}

StepDistribution emit_step(const ForecastState& state, const Mat& hidden) {
  const auto& lay = state.layout();
  StepDistribution out;
  out.mean = hidden * state.view(lay.mean_weights).col(0);
  const Vec pre = hidden * state.view(lay.scale_weights).col(0);
  out.diag = pre.unaryExpr([](double x) { return softplus(x) + kVarianceFloor; });
  out.factor = hidden * state.view(lay.factor_weights).transpose();
  const Vec pooled = hidden.colwise().mean().transpose();
  out.mix_logits = state.view(lay.mix_weights) * pooled + state.view(lay.mix_bias).col(0);
  return out;
}

std::vector<StepDistribution> emit_params(const ForecastState& state, std::span<const Mat> hidden) {
  std::vector<StepDistribution> out;
  out.reserve(hidden.size());
  for (const Mat& h : hidden) {
    out.push_back(emit_step(state, h));
  }
  return out;
}

TemporalCorrelation step_correlation(const ForecastState& state, const Vec& mix_logits) {
  if (state.identity_correlation) {
    return TemporalCorrelation::identity(state.dims().window);
  }
  return mix(state.kernel_bank(), softmax_weights(mix_logits));
}

TrainingWindow make_window(const ForecastState& state, const Panel& panel, std::span<const int> series,
                           Index first_target_row) {
  const Index p = state.dims().context;
  const Index d = state.dims().window;
  const Index first_row = first_target_row - p;
  if (first_row < 1) {
    throw InvalidArgument("window needs " + std::to_string(p + 1) + " rows of history before row " +
                          std::to_string(first_target_row));
  }
  if (first_target_row + d > panel.length()) {
    throw InvalidArgument("window targets run past the end of the panel");
  }
  TrainingWindow w;
  w.series.assign(series.begin(), series.end());
  w.first_target_row = first_target_row;
  w.inputs = build_inputs(state, panel, series, first_row, p + d);
  w.targets.resize(d, static_cast<Index>(series.size()));
  for (Index s = 0; s < d; ++s) {
    for (Index i = 0; i < w.targets.cols(); ++i) {
      w.targets(s, i) = panel.values(first_target_row + s, series[static_cast<std::size_t>(i)]);
    }
  }
  return w;
}

namespace {

void check_terms(const NllTerms& t) {
  if (!std::isfinite(t.log_det)) {
    throw NumericalError("non-finite loss: log-determinant term is " + std::to_string(t.log_det));
  }
  if (!std::isfinite(t.mahalanobis)) {
    throw NumericalError("non-finite loss: Mahalanobis term is " + std::to_string(t.mahalanobis));
  }
}

// Gradients of the loss with respect to the head outputs of one step.
struct HeadGrad {
  Vec mean;
  Mat factor;
  Vec diag;
};

}  // namespace

WindowLoss window_loss(const ForecastState& state, const TrainingWindow& window, LikelihoodMode mode,
                       bool with_gradient) {
  const ModelDims& dims = state.dims();
  const Index p = dims.context;
  const Index d = dims.window;
  const Index h = dims.hidden;
  const Index b = window.targets.cols();
  if (static_cast<Index>(window.inputs.size()) != p + d || window.targets.rows() != d) {
    throw InvalidArgument("training window does not match the model's P + D layout");
  }

  const Trajectory traj = unroll(state, window.inputs);
  std::vector<StepDistribution> dist(static_cast<std::size_t>(d));
  for (Index s = 0; s < d; ++s) {
    dist[static_cast<std::size_t>(s)] = emit_step(state, traj.hidden(static_cast<std::size_t>(p + s)));
  }

  std::vector<Mat> factors;
  Vec diag(d * b);
  Vec residual(d * b);
  for (Index s = 0; s < d; ++s) {
    const auto& ds = dist[static_cast<std::size_t>(s)];
    factors.push_back(ds.factor);
    diag.segment(s * b, b) = ds.diag;
    residual.segment(s * b, b) = window.targets.row(s).transpose() - ds.mean;
  }

  const bool correlated = mode == LikelihoodMode::kCorrelated && !state.identity_correlation;
  const Vec& last_logits = dist.back().mix_logits;

  WindowLoss out;
  std::vector<HeadGrad> heads(static_cast<std::size_t>(d));
  Mat corr_grad;

  if (mode == LikelihoodMode::kCorrelated) {
    TemporalCorrelation corr = step_correlation(state, last_logits);
    BatchCovariance cov(std::move(factors), diag, std::move(corr));
    if (!with_gradient) {
      out.terms = batch_nll(cov, residual);
      check_terms(out.terms);
      return out;
    }
    NllGradient g = batch_nll_gradient(cov, residual);
    out.terms = g.terms;
    check_terms(out.terms);
    for (Index s = 0; s < d; ++s) {
      auto& hg = heads[static_cast<std::size_t>(s)];
      hg.mean = -g.residual.segment(s * b, b);
      hg.factor = std::move(g.factors[static_cast<std::size_t>(s)]);
      hg.diag = g.diag.segment(s * b, b);
    }
    corr_grad = std::move(g.corr);
  } else {
    for (Index s = 0; s < d; ++s) {
      BatchCovariance step_cov({factors[static_cast<std::size_t>(s)]}, diag.segment(s * b, b),
                               TemporalCorrelation::identity(1));
      const Vec r = residual.segment(s * b, b);
      if (!with_gradient) {
        const NllTerms t = batch_nll(step_cov, r);
        out.terms.value += t.value;
        out.terms.log_det += t.log_det;
        out.terms.mahalanobis += t.mahalanobis;
        continue;
      }
      NllGradient g = batch_nll_gradient(step_cov, r);
      out.terms.value += g.terms.value;
      out.terms.log_det += g.terms.log_det;
      out.terms.mahalanobis += g.terms.mahalanobis;
      auto& hg = heads[static_cast<std::size_t>(s)];
      hg.mean = -g.residual;
      hg.factor = std::move(g.factors.front());
      hg.diag = g.diag;
    }
    check_terms(out.terms);
    if (!with_gradient) {
      return out;
    }
  }

  const auto& lay = state.layout();
  Vec grad = Vec::Zero(lay.total);
  Eigen::Map<Mat> g_gate_w(grad.data() + lay.gate_weights.offset, lay.gate_weights.rows, lay.gate_weights.cols);
  Eigen::Map<Vec> g_gate_b(grad.data() + lay.gate_bias.offset, lay.gate_bias.rows);
  Eigen::Map<Vec> g_mean_w(grad.data() + lay.mean_weights.offset, h);
  Eigen::Map<Vec> g_scale_w(grad.data() + lay.scale_weights.offset, h);
  Eigen::Map<Mat> g_factor_w(grad.data() + lay.factor_weights.offset, dims.rank, h);
  Eigen::Map<Mat> g_mix_w(grad.data() + lay.mix_weights.offset, dims.kernels, h);
  Eigen::Map<Vec> g_mix_b(grad.data() + lay.mix_bias.offset, dims.kernels);
  Eigen::Map<Vec> g_scale(grad.data() + lay.lengthscales.offset, lay.lengthscales.rows);

  const Vec w_mean = state.view(lay.mean_weights).col(0);
  const Vec w_scale = state.view(lay.scale_weights).col(0);
  const Mat w_factor = state.view(lay.factor_weights);

  // Loss gradient with respect to each step's hidden states.
  std::vector<Mat> hidden_grad(static_cast<std::size_t>(p + d), Mat::Zero(b, h));
  for (Index s = 0; s < d; ++s) {
    const auto& hg = heads[static_cast<std::size_t>(s)];
    const Mat& hid = traj.hidden(static_cast<std::size_t>(p + s));
    const Vec pre_scale = hid * w_scale;
    const Vec g_pre = hg.diag.cwiseProduct(pre_scale.unaryExpr([](double x) { return sigmoid(x); }));
    g_mean_w += hid.transpose() * hg.mean;
    g_scale_w += hid.transpose() * g_pre;
    g_factor_w += hg.factor.transpose() * hid;
    hidden_grad[static_cast<std::size_t>(p + s)] =
        hg.mean * w_mean.transpose() + g_pre * w_scale.transpose() + hg.factor * w_factor;
  }

  if (correlated) {
    const KernelBank bank = state.kernel_bank();
    const Vec w = softmax_weights(last_logits).values();
    Vec g_w(bank.size());
    for (Index m = 0; m < bank.size(); ++m) {
      g_w[m] = corr_grad.cwiseProduct(bank.kernel(m)).sum();
    }
    const Vec g_logit = w.cwiseProduct(g_w.array().matrix() - Vec::Constant(w.size(), w.dot(g_w)));
    const Mat& last_hidden = traj.hidden(static_cast<std::size_t>(p + d - 1));
    const Vec pooled = last_hidden.colwise().mean().transpose();
    g_mix_b += g_logit;
    g_mix_w += g_logit * pooled.transpose();
    const Vec g_pooled = state.view(lay.mix_weights).transpose() * g_logit;
    hidden_grad.back().rowwise() += (g_pooled / static_cast<double>(b)).transpose();

    for (Index m = 0; m + 1 < bank.size(); ++m) {
      const double g_l = w[m] * corr_grad.cwiseProduct(bank.lengthscale_derivative(m)).sum();
      g_scale[m] = g_l * sigmoid(state.params()[lay.lengthscales.offset + m]);
    }
  }

  // Backpropagation through time.
  const auto gate_w = state.view(lay.gate_weights);
  Mat dh_next = Mat::Zero(b, h);
  Mat dc_next = Mat::Zero(b, h);
  for (Index k = p + d - 1; k >= 0; --k) {
    const StepCache& c = traj.steps[static_cast<std::size_t>(k)];
    const auto f = c.gates.leftCols(h).array();
    const auto in = c.gates.middleCols(h, h).array();
    const auto cand = c.gates.middleCols(2 * h, h).array();
    const auto o = c.gates.rightCols(h).array();
    const Eigen::ArrayXXd tanh_c = c.memory.array().tanh();

    const Eigen::ArrayXXd dh = (hidden_grad[static_cast<std::size_t>(k)] + dh_next).array();
    const Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - tanh_c.square());

    Mat dz(b, 4 * h);
    dz.leftCols(h) = (dc * c.prev_memory.array() * f * (1.0 - f)).matrix();
    dz.middleCols(h, h) = (dc * cand * in * (1.0 - in)).matrix();
    dz.middleCols(2 * h, h) = (dc * in * (1.0 - cand.square())).matrix();
    dz.rightCols(h) = (dh * tanh_c * o * (1.0 - o)).matrix();

    g_gate_w.leftCols(h) += dz.transpose() * c.prev_hidden;
    g_gate_w.rightCols(c.input.cols()) += dz.transpose() * c.input;
    g_gate_b += dz.colwise().sum().transpose();

    dh_next = dz * gate_w.leftCols(h);
    dc_next = (dc * f).matrix();
  }

  out.gradient = std::move(grad);
  return out;
}

std::vector<int> sample_series_subset(int total, int count, std::uint64_t seed) {
  if (count < 1 || count > total) {
    throw InvalidArgument("series subset size " + std::to_string(count) + " must be in [1, " +
                          std::to_string(total) + "]");
  }
  std::vector<int> all(static_cast<std::size_t>(total));
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
  return out;
}

}  // namespace mvcorr
