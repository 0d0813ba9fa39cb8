#pragma once

// Dense O((DB)^3) reference computations. Test, benchmark and bench-verb code
// only: nothing in the core library links against this target.

#include <random>

#include "mvcorr/covariance.hpp"

namespace mvcorr::oracle {

// Explicit DB x DB covariance of a batch window.
Mat assemble_dense(const BatchCovariance& cov);

Vec dense_solve(const Mat& sigma, const Vec& v);
double dense_logdet(const Mat& sigma);
// 0.5 * (ln|S| + r^T S^{-1} r + n ln 2pi), via a dense Cholesky
double dense_nll(const Mat& sigma, const Vec& residual);

// Sum over steps of independent per-step Gaussian NLLs with covariance
// L_s L_s^T + diag(d_s), ignoring the temporal correlation entirely.
double independent_steps_nll(const BatchCovariance& cov, const Vec& residual);

struct DenseConditional {
  Vec mean;
  Mat cov;
};

// Partitioned-Gaussian conditional of the last `block` coordinates of a
// zero-mean vector with covariance `sigma`, given the leading coordinates.
DenseConditional condition_on_leading(const Mat& sigma, const Vec& observed, Index block);

// Random well-conditioned instance: Gaussian factors, diag in [0.1, 1.1] and
// a random correlation matrix built from a D x (D + 2) Gaussian Gram matrix.
BatchCovariance random_batch_covariance(Index steps, Index series, Index rank, std::mt19937_64& rng);

Mat random_correlation(Index steps, std::mt19937_64& rng);

}  // namespace mvcorr::oracle
