#pragma once

#include <cstdint>
#include <vector>

#include "mvcorr/linalg.hpp"

namespace mvcorr {

// D x D correlation of the latent process across the positions of a window.
// Position 0 is the oldest step. Symmetric, unit diagonal, PSD.
class TemporalCorrelation {
 public:
  // Validates the invariants; diagonal entries within 1e-12 of one are
  // snapped to exactly one.
  explicit TemporalCorrelation(Mat c);

  static TemporalCorrelation identity(Index steps);

  Index steps() const { return c_.rows(); }
  const Mat& matrix() const { return c_; }
  double operator()(Index i, Index j) const { return c_(i, j); }

  // Correlation among the last `k` positions of the window.
  TemporalCorrelation trailing(Index k) const;

  bool is_identity() const;

 private:
  Mat c_;
};

// Error covariance of a batch window of D steps and B series,
//
//   Sigma = blkdiag(L_0..L_{D-1}) (C kron I_R) blkdiag(L)^T + diag(d),
//
// kept in factored form. Vectors over the batch are ordered step-major:
// entry s * B + i belongs to step s and series i.
class BatchCovariance {
 public:
  BatchCovariance(std::vector<Mat> factors, Vec diag, TemporalCorrelation corr);

  Index steps() const { return static_cast<Index>(factors_.size()); }
  Index series() const { return factors_.front().rows(); }
  Index rank() const { return factors_.front().cols(); }
  Index size() const { return steps() * series(); }

  const std::vector<Mat>& factors() const { return factors_; }
  const Mat& factor(Index step) const { return factors_[static_cast<std::size_t>(step)]; }
  const Vec& diag() const { return diag_; }
  auto step_diag(Index step) const { return diag_.segment(step * series(), series()); }
  const TemporalCorrelation& corr() const { return corr_; }

 private:
  std::vector<Mat> factors_;
  Vec diag_;
  TemporalCorrelation corr_;
};

// Cholesky factors of C and of the capacitance matrix
//
//   Cap = (C kron I_R)^{-1} + A^T E^{-1} A,      A = blkdiag(L), E = diag(d),
//
// from which solves, the log-determinant and gradients follow in
// O(D^3 R^3 + D B R^2) without touching a DB x DB matrix.
class StructuredFactorization {
 public:
  explicit StructuredFactorization(const BatchCovariance& cov);

  const BatchCovariance& covariance() const { return cov_; }

  // Sigma^{-1} v
  Vec solve(const Vec& v) const;
  // v^T Sigma^{-1} v computed as v^T E^{-1} v - k^T k with L_cap k = A^T E^{-1} v
  double mahalanobis(const Vec& v) const;
  double log_det() const { return log_det_; }

  // A^T v, as a DR vector.
  Vec project(const Vec& v) const;
  // A^T Sigma^{-1} A = M - M Cap^{-1} M with M = A^T E^{-1} A (DR x DR).
  Mat projected_precision() const;
  const Mat& capacitance_inverse() const { return cap_inv_; }
  const JitteredCholesky& corr_cholesky() const { return corr_chol_; }

 private:
  BatchCovariance cov_;
  JitteredCholesky corr_chol_;
  JitteredCholesky cap_chol_;
  Mat gram_;     // block diagonal M = A^T E^{-1} A
  Mat cap_inv_;
  double log_det_ = 0.0;
};

Vec structured_solve(const BatchCovariance& cov, const Vec& v);
double structured_logdet(const BatchCovariance& cov);

struct NllTerms {
  double value = 0.0;
  double log_det = 0.0;
  double mahalanobis = 0.0;
};

// 0.5 * (ln|Sigma| + r^T Sigma^{-1} r + DB ln 2pi) for residual r = z - mu.
NllTerms batch_nll(const BatchCovariance& cov, const Vec& residual);

// Partial derivatives of batch_nll with respect to every factored input.
struct NllGradient {
  NllTerms terms;
  Vec residual;             // d NLL / d r (= Sigma^{-1} r); d/d mu is the negation
  std::vector<Mat> factors; // d NLL / d L_s, one B x R block per step
  Vec diag;                 // d NLL / d d
  Mat corr;                 // d NLL / d C, entries treated as independent
};

NllGradient batch_nll_gradient(const BatchCovariance& cov, const Vec& residual);

// Draws `count` exact samples mean + A r + eps with r ~ N(0, C kron I_R) and
// eps ~ N(0, diag(d)); one sample per row.
Mat sample(const BatchCovariance& cov, const Vec& mean, std::uint64_t seed, Index count);

}  // namespace mvcorr
