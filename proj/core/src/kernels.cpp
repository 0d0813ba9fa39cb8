#include "mvcorr/kernels.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "mvcorr/errors.hpp"

namespace mvcorr {

Mat se_kernel_matrix(double lengthscale, Index window) {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw InvalidArgument("lengthscale must be positive, got " + std::to_string(lengthscale));
  }
  Mat k(window, window);
  const double inv_l2 = 1.0 / (lengthscale * lengthscale);
  for (Index i = 0; i < window; ++i) {
    for (Index j = 0; j < window; ++j) {
      const double gap = static_cast<double>(i - j);
      k(i, j) = std::exp(-gap * gap * inv_l2);
    }
  }
  return k;
}

KernelBank::KernelBank(std::vector<double> lengthscales, Index window)
    : lengthscales_(std::move(lengthscales)), window_(window) {
  if (window < 1) {
    throw InvalidArgument("kernel bank window must be at least one");
  }
  kernels_.reserve(lengthscales_.size() + 1);
  for (double l : lengthscales_) {
    kernels_.push_back(se_kernel_matrix(l, window));
  }
  kernels_.push_back(Mat::Identity(window, window));
}

Mat KernelBank::lengthscale_derivative(Index m) const {
  if (m < 0 || m >= static_cast<Index>(lengthscales_.size())) {
    throw InvalidArgument("identity member has no lengthscale");
  }
  const double l = lengthscales_[static_cast<std::size_t>(m)];
  const Mat& k = kernel(m);
  Mat out(window_, window_);
  for (Index i = 0; i < window_; ++i) {
    for (Index j = 0; j < window_; ++j) {
      const double gap = static_cast<double>(i - j);
      out(i, j) = k(i, j) * 2.0 * gap * gap / (l * l * l);
    }
  }
  return out;
}

MixWeights::MixWeights(Vec w) : w_(std::move(w)) {
  if (w_.size() < 1) {
    throw InvalidArgument("mix weights must be non-empty");
  }
  if ((w_.array() < 0.0).any() || !w_.allFinite()) {
    throw InvalidArgument("mix weights must be finite and non-negative");
  }
  if (std::abs(w_.sum() - 1.0) > 1e-12) {
    throw InvalidArgument("mix weights must sum to one");
  }
}

MixWeights softmax_weights(const Vec& logits) {
  if (logits.size() < 1 || !logits.allFinite()) {
    throw InvalidArgument("softmax needs finite logits");
  }
  Vec e = (logits.array() - logits.maxCoeff()).exp();
  e /= e.sum();
  return MixWeights(std::move(e));
}

TemporalCorrelation mix(const KernelBank& bank, const MixWeights& w) {
  if (w.size() != bank.size()) {
    throw InvalidArgument("mix weights count " + std::to_string(w.size()) +
                          " does not match kernel bank size " + std::to_string(bank.size()));
  }
  Mat c = Mat::Zero(bank.window(), bank.window());
  for (Index m = 0; m < bank.size(); ++m) {
    c.noalias() += w.values()[m] * bank.kernel(m);
  }
  c.diagonal().setOnes();
  return TemporalCorrelation(std::move(c));
}

namespace {

double companion_spectral_radius(const Vec& phi) {
  const Index p = phi.size();
  Mat companion = Mat::Zero(p, p);
  companion.row(0) = phi.transpose();
  for (Index i = 1; i < p; ++i) {
    companion(i, i - 1) = 1.0;
  }
  Eigen::EigenSolver<Mat> solver(companion, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

Vec yule_walker_autocorrelations(const Vec& phi, Index lags) {
  const Index p = phi.size();
  if (p < 1 || lags < 1) {
    throw InvalidArgument("Yule-Walker needs at least one coefficient and one lag");
  }
  if (!phi.allFinite() || companion_spectral_radius(phi) >= 1.0) {
    throw InvalidArgument("AR coefficients are not stationary");
  }

  // rho_k = sum_j phi_j rho_{|k-j|}, k = 1..p, with rho_0 = 1.
  Mat a = Mat::Identity(p, p);
  Vec rhs = Vec::Zero(p);
  for (Index k = 1; k <= p; ++k) {
    for (Index j = 1; j <= p; ++j) {
      const Index lag = std::abs(k - j);
      if (lag == 0) {
        rhs[k - 1] += phi[j - 1];
      } else {
        a(k - 1, lag - 1) -= phi[j - 1];
      }
    }
  }
  const Vec head = a.partialPivLu().solve(rhs);

  Vec rho(std::max(lags, p + 1));
  rho[0] = 1.0;
  rho.segment(1, p) = head;
  for (Index k = p + 1; k < rho.size(); ++k) {
    double acc = 0.0;
    for (Index j = 1; j <= p; ++j) {
      acc += phi[j - 1] * rho[k - j];
    }
    rho[k] = acc;
  }
  return rho.head(lags);
}

TemporalCorrelation yule_walker_correlation(const Vec& phi, Index window) {
  const Vec rho = yule_walker_autocorrelations(phi, window);
  Mat c(window, window);
  for (Index i = 0; i < window; ++i) {
    for (Index j = 0; j < window; ++j) {
      c(i, j) = rho[std::abs(i - j)];
    }
  }
  // TemporalCorrelation rejects a non-PSD Toeplitz matrix rather than clipping it.
  return TemporalCorrelation(std::move(c));
}

std::vector<double> lengthscale_grid(LengthscaleGrid grid, int kernels) {
  if (kernels < 1) {
    throw InvalidArgument("kernel count must be at least one");
  }
  const double start = grid == LengthscaleGrid::kHalfIntegers ? 0.5 : 1.0;
  std::vector<double> out;
  for (int m = 0; m + 1 < kernels; ++m) {
    out.push_back(start + m);
  }
  return out;
}

}  // namespace mvcorr
