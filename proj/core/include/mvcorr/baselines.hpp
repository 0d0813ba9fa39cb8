#pragma once

#include <cstdint>
#include <vector>

#include "mvcorr/linalg.hpp"

namespace mvcorr {

// z_t = c + A z_{t-1} + e_t,  e_t ~ N(0, Sigma_e).
struct VarModel {
  Vec intercept;       // N
  Mat coefficients;    // N x N
  Mat noise_cov;       // N x N, residual covariance
  Mat residuals;       // (T - 1) x N, kept for diagnostics
};

// Ordinary least squares on rows of `data` (T x N). Sigma_e uses the
// T - 1 - (N + 1) degrees-of-freedom denominator. Throws NumericalError when
// the regressor matrix [1, z_{t-1}] is rank deficient.
VarModel fit_var1(const Mat& data);

// Iterates the fitted recursion from `last` for `horizon` steps with
// Gaussian innovations; one horizon x N matrix per path.
std::vector<Mat> var_forecast(const VarModel& model, const Vec& last, Index horizon, Index paths, std::uint64_t seed);

}  // namespace mvcorr
