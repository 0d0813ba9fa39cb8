#include "mvcorr/covariance.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "mvcorr/errors.hpp"

namespace mvcorr {

namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr double kUnitDiagTolerance = 1e-12;

}  // namespace

TemporalCorrelation::TemporalCorrelation(Mat c) : c_(std::move(c)) {
  if (c_.rows() < 1 || c_.rows() != c_.cols()) {
    throw InvalidArgument("temporal correlation must be a non-empty square matrix");
  }
  if (!c_.allFinite()) {
    throw InvalidArgument("temporal correlation has non-finite entries");
  }
  for (Index i = 0; i < c_.rows(); ++i) {
    if (std::abs(c_(i, i) - 1.0) > kUnitDiagTolerance) {
      throw InvalidArgument("temporal correlation diagonal must be one, got " +
                            std::to_string(c_(i, i)) + " at " + std::to_string(i));
    }
    c_(i, i) = 1.0;
    for (Index j = 0; j < i; ++j) {
      if (std::abs(c_(i, j) - c_(j, i)) > kUnitDiagTolerance) {
        throw InvalidArgument("temporal correlation is not symmetric");
      }
    }
  }
  if (c_.rows() > 1 && min_eigenvalue(c_) < -kPsdTolerance) {
    throw NumericalError("temporal correlation is not positive semi-definite");
  }
}

TemporalCorrelation TemporalCorrelation::identity(Index steps) {
  return TemporalCorrelation(Mat::Identity(steps, steps));
}

TemporalCorrelation TemporalCorrelation::trailing(Index k) const {
  if (k < 1 || k > steps()) {
    throw InvalidArgument("trailing block size out of range");
  }
  return TemporalCorrelation(c_.bottomRightCorner(k, k));
}

bool TemporalCorrelation::is_identity() const { return c_.isIdentity(0.0); }

BatchCovariance::BatchCovariance(std::vector<Mat> factors, Vec diag, TemporalCorrelation corr)
    : factors_(std::move(factors)), diag_(std::move(diag)), corr_(std::move(corr)) {
  if (factors_.empty()) {
    throw InvalidArgument("batch covariance needs at least one step");
  }
  const Index b = factors_.front().rows();
  const Index r = factors_.front().cols();
  if (b < 1 || r < 1) {
    throw InvalidArgument("covariance factors must be at least 1 x 1");
  }
  for (const Mat& f : factors_) {
    if (f.rows() != b || f.cols() != r) {
      throw InvalidArgument("covariance factors differ in shape across steps");
    }
    if (!f.allFinite()) {
      throw InvalidArgument("covariance factor has non-finite entries");
    }
  }
  if (corr_.steps() != steps()) {
    throw InvalidArgument("temporal correlation is " + std::to_string(corr_.steps()) +
                          " x " + std::to_string(corr_.steps()) + " but the window has " +
                          std::to_string(steps()) + " steps");
  }
  if (diag_.size() != steps() * b) {
    throw InvalidArgument("diagonal length " + std::to_string(diag_.size()) +
                          " does not match D * B = " + std::to_string(steps() * b));
  }
  for (Index i = 0; i < diag_.size(); ++i) {
    if (!(diag_[i] > 0.0) || !std::isfinite(diag_[i])) {
      throw InvalidArgument("diagonal noise variances must be finite and strictly positive");
    }
  }
}

StructuredFactorization::StructuredFactorization(const BatchCovariance& cov)
    : cov_(cov), corr_chol_(jittered_cholesky(cov.corr().matrix(), "temporal correlation")) {
  const Index d = cov_.steps();
  const Index r = cov_.rank();
  const Index dr = d * r;

  const Mat corr_inv = corr_chol_.llt.solve(Mat::Identity(d, d));

  gram_ = Mat::Zero(dr, dr);
  for (Index s = 0; s < d; ++s) {
    const Mat& l = cov_.factor(s);
    const Vec inv_d = cov_.step_diag(s).cwiseInverse();
    gram_.block(s * r, s * r, r, r).noalias() = l.transpose() * inv_d.asDiagonal() * l;
  }

  Mat cap = gram_;
  for (Index s = 0; s < d; ++s) {
    for (Index t = 0; t < d; ++t) {
      for (Index k = 0; k < r; ++k) {
        cap(s * r + k, t * r + k) += corr_inv(s, t);
      }
    }
  }
  cap_chol_ = jittered_cholesky(cap, "capacitance matrix");
  cap_inv_ = cap_chol_.llt.solve(Mat::Identity(dr, dr));

  log_det_ = 2.0 * cap_chol_.half_log_det() + 2.0 * static_cast<double>(r) * corr_chol_.half_log_det() +
             cov_.diag().array().log().sum();
}

Vec StructuredFactorization::project(const Vec& v) const {
  const Index d = cov_.steps();
  const Index b = cov_.series();
  const Index r = cov_.rank();
  Vec out(d * r);
  for (Index s = 0; s < d; ++s) {
    out.segment(s * r, r).noalias() = cov_.factor(s).transpose() * v.segment(s * b, b);
  }
  return out;
}

Vec StructuredFactorization::solve(const Vec& v) const {
  if (v.size() != cov_.size()) {
    throw InvalidArgument("structured solve: vector length does not match covariance");
  }
  const Index d = cov_.steps();
  const Index b = cov_.series();
  const Index r = cov_.rank();
  Vec w = v.cwiseQuotient(cov_.diag());
  const Vec q = cap_chol_.llt.solve(project(w));
  for (Index s = 0; s < d; ++s) {
    w.segment(s * b, b) -= (cov_.factor(s) * q.segment(s * r, r)).cwiseQuotient(cov_.step_diag(s));
  }
  return w;
}

double StructuredFactorization::mahalanobis(const Vec& v) const {
  if (v.size() != cov_.size()) {
    throw InvalidArgument("mahalanobis: vector length does not match covariance");
  }
  const Vec w = v.cwiseQuotient(cov_.diag());
  const Vec k = cap_chol_.llt.matrixL().solve(project(w));
  return v.dot(w) - k.squaredNorm();
}

Mat StructuredFactorization::projected_precision() const {
  return gram_ - gram_ * cap_inv_ * gram_;
}

Vec structured_solve(const BatchCovariance& cov, const Vec& v) {
  return StructuredFactorization(cov).solve(v);
}

double structured_logdet(const BatchCovariance& cov) { return StructuredFactorization(cov).log_det(); }

namespace {

NllTerms assemble_terms(double log_det, double maha, Index n) {
  NllTerms t;
  t.log_det = log_det;
  t.mahalanobis = maha;
  t.value = 0.5 * (log_det + maha + static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
  return t;
}

}  // namespace

NllTerms batch_nll(const BatchCovariance& cov, const Vec& residual) {
  const StructuredFactorization f(cov);
  return assemble_terms(f.log_det(), f.mahalanobis(residual), cov.size());
}

NllGradient batch_nll_gradient(const BatchCovariance& cov, const Vec& residual) {
  const StructuredFactorization f(cov);
  const Index d = cov.steps();
  const Index b = cov.series();
  const Index r = cov.rank();
  const Mat& c = cov.corr().matrix();
  const Mat& cap_inv = f.capacitance_inverse();

  NllGradient g;
  g.residual = f.solve(residual);
  g.terms = assemble_terms(f.log_det(), residual.dot(g.residual), cov.size());

  // A^T alpha, reshaped so row s holds the step-s latent block.
  const Vec p = f.project(g.residual);
  Mat p_rows(d, r);
  for (Index s = 0; s < d; ++s) {
    p_rows.row(s) = p.segment(s * r, r).transpose();
  }
  const Mat kp = c * p_rows;  // (C kron I_R) A^T alpha

  g.factors.resize(static_cast<std::size_t>(d));
  g.diag.resize(cov.size());
  for (Index s = 0; s < d; ++s) {
    const Mat& l = cov.factor(s);
    const Vec inv_d = cov.step_diag(s).cwiseInverse();
    const Mat u = inv_d.asDiagonal() * l;  // rows of E^{-1} A within the block
    const Mat cap_ss = cap_inv.block(s * r, s * r, r, r);
    const auto alpha_s = g.residual.segment(s * b, b);
    const Mat u_cap = u * cap_ss;
    g.factors[static_cast<std::size_t>(s)] = u_cap - alpha_s * kp.row(s);
    for (Index i = 0; i < b; ++i) {
      const double prec_ii = inv_d[i] - u_cap.row(i).dot(u.row(i));
      g.diag[s * b + i] = 0.5 * (prec_ii - alpha_s[i] * alpha_s[i]);
    }
  }

  const Mat grad_k = 0.5 * (f.projected_precision() - p * p.transpose());
  g.corr = Mat::Zero(d, d);
  for (Index s = 0; s < d; ++s) {
    for (Index t = 0; t < d; ++t) {
      double acc = 0.0;
      for (Index k = 0; k < r; ++k) {
        acc += grad_k(s * r + k, t * r + k);
      }
      g.corr(s, t) = acc;
    }
  }
  return g;
}

Mat sample(const BatchCovariance& cov, const Vec& mean, std::uint64_t seed, Index count) {
  if (count < 1) {
    throw InvalidArgument("sample count must be at least one");
  }
  if (mean.size() != cov.size()) {
    throw InvalidArgument("sample mean length does not match covariance");
  }
  const Index d = cov.steps();
  const Index b = cov.series();
  const Index r = cov.rank();
  const JitteredCholesky corr_chol = jittered_cholesky(cov.corr().matrix(), "temporal correlation");
  const Mat lc = corr_chol.lower();
  const Vec sd = cov.diag().cwiseSqrt();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Mat out(count, cov.size());
  Mat white(d, r);
  for (Index n = 0; n < count; ++n) {
    for (Index s = 0; s < d; ++s) {
      for (Index k = 0; k < r; ++k) {
        white(s, k) = normal(rng);
      }
    }
    const Mat latent = lc * white;  // each column ~ N(0, C)
    for (Index s = 0; s < d; ++s) {
      const Vec eta = cov.factor(s) * latent.row(s).transpose();
      for (Index i = 0; i < b; ++i) {
        out(n, s * b + i) = mean[s * b + i] + eta[i] + sd[s * b + i] * normal(rng);
      }
    }
  }
  return out;
}

}  // namespace mvcorr
