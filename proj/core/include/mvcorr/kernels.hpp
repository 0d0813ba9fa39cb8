#pragma once

#include <vector>

#include "mvcorr/covariance.hpp"

namespace mvcorr {

// Squared-exponential kernel matrices K_m(i, j) = exp(-(i - j)^2 / l_m^2)
// over window positions (index units), followed by the identity. With M - 1
// lengthscales the bank holds M matrices.
class KernelBank {
 public:
  KernelBank(std::vector<double> lengthscales, Index window);

  Index size() const { return static_cast<Index>(kernels_.size()); }
  Index window() const { return window_; }
  const std::vector<double>& lengthscales() const { return lengthscales_; }
  const Mat& kernel(Index m) const { return kernels_[static_cast<std::size_t>(m)]; }

  // d K_m / d l_m for an SE member m < size() - 1.
  Mat lengthscale_derivative(Index m) const;

 private:
  std::vector<double> lengthscales_;
  Index window_;
  std::vector<Mat> kernels_;
};

Mat se_kernel_matrix(double lengthscale, Index window);

// Point on the probability simplex; one weight per bank member.
class MixWeights {
 public:
  explicit MixWeights(Vec w);
  const Vec& values() const { return w_; }
  Index size() const { return w_.size(); }

 private:
  Vec w_;
};

// Numerically stable softmax (max-subtracted).
MixWeights softmax_weights(const Vec& logits);

// C = sum_m w_m K_m. The diagonal is exactly one.
TemporalCorrelation mix(const KernelBank& bank, const MixWeights& w);

// Autocorrelations rho_0..rho_{lags-1} of a stationary AR(p) process with
// coefficients phi, from the Yule-Walker system and its recursion.
Vec yule_walker_autocorrelations(const Vec& phi, Index lags);

// Toeplitz correlation built from yule_walker_autocorrelations. Rejects
// non-stationary coefficients and non-PSD results.
TemporalCorrelation yule_walker_correlation(const Vec& phi, Index window);

enum class LengthscaleGrid {
  kHalfIntegers,  // 0.5, 1.5, 2.5, ...
  kIntegers,      // 1.0, 2.0, 3.0, ...
};

// kernels - 1 lengthscales from the chosen grid (the last member is identity).
std::vector<double> lengthscale_grid(LengthscaleGrid grid, int kernels);

}  // namespace mvcorr
