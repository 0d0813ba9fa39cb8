#include "mvcorr/oracle/dense.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "mvcorr/errors.hpp"

namespace mvcorr::oracle {

Mat assemble_dense(const BatchCovariance& cov) {
  const Index d = cov.steps();
  const Index b = cov.series();
  const Mat& c = cov.corr().matrix();
  for (const Mat& f : cov.factors()) {
    if (f.rows() != b || f.cols() != cov.rank()) {
      throw InvalidArgument("assemble_dense: factor shape mismatch");
    }
  }
  Mat sigma(d * b, d * b);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      sigma.block(i * b, j * b, b, b) = c(i, j) * cov.factor(i) * cov.factor(j).transpose();
    }
  }
  sigma.diagonal() += cov.diag();
  return sigma;
}

namespace {

Eigen::LLT<Mat> dense_cholesky(const Mat& sigma) {
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("dense oracle: covariance is not positive definite");
  }
  return llt;
}

double llt_logdet(const Eigen::LLT<Mat>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

Vec dense_solve(const Mat& sigma, const Vec& v) { return dense_cholesky(sigma).solve(v); }

double dense_logdet(const Mat& sigma) { return llt_logdet(dense_cholesky(sigma)); }

double dense_nll(const Mat& sigma, const Vec& residual) {
  const Eigen::LLT<Mat> llt = dense_cholesky(sigma);
  const Vec alpha = llt.solve(residual);
  return 0.5 * (llt_logdet(llt) + residual.dot(alpha) +
                static_cast<double>(residual.size()) * std::log(2.0 * std::numbers::pi));
}

double independent_steps_nll(const BatchCovariance& cov, const Vec& residual) {
  const Index b = cov.series();
  double total = 0.0;
  for (Index s = 0; s < cov.steps(); ++s) {
    Mat sigma = cov.factor(s) * cov.factor(s).transpose();
    sigma.diagonal() += cov.step_diag(s);
    total += dense_nll(sigma, residual.segment(s * b, b));
  }
  return total;
}

DenseConditional condition_on_leading(const Mat& sigma, const Vec& observed, Index block) {
  const Index n_obs = sigma.rows() - block;
  if (observed.size() != n_obs) {
    throw InvalidArgument("condition_on_leading: observed length mismatch");
  }
  const Mat s_obs = sigma.topLeftCorner(n_obs, n_obs);
  const Mat s_star = sigma.bottomLeftCorner(block, n_obs);
  const Mat s_new = sigma.bottomRightCorner(block, block);
  const Eigen::LLT<Mat> llt = dense_cholesky(s_obs);
  DenseConditional out;
  out.mean = s_star * llt.solve(observed);
  out.cov = s_new - s_star * llt.solve(s_star.transpose());
  return out;
}

}  // namespace mvcorr::oracle

namespace mvcorr::oracle {

Mat random_correlation(Index steps, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat g(steps, steps + 2);
  for (Index i = 0; i < g.rows(); ++i) {
    for (Index j = 0; j < g.cols(); ++j) {
      g(i, j) = normal(rng);
    }
  }
  Mat s = g * g.transpose();
  const Vec inv = s.diagonal().cwiseSqrt().cwiseInverse();
  Mat c = inv.asDiagonal() * s * inv.asDiagonal();
  c.diagonal().setOnes();
  return 0.5 * (c + c.transpose());
}

BatchCovariance random_batch_covariance(Index steps, Index series, Index rank, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Mat> factors;
  for (Index s = 0; s < steps; ++s) {
    Mat l(series, rank);
    for (Index i = 0; i < series; ++i) {
      for (Index j = 0; j < rank; ++j) {
        l(i, j) = normal(rng);
      }
    }
    factors.push_back(std::move(l));
  }
  Vec diag(steps * series);
  for (Index i = 0; i < diag.size(); ++i) {
    diag[i] = 0.1 + unit(rng);
  }
  return BatchCovariance(std::move(factors), std::move(diag), TemporalCorrelation(random_correlation(steps, rng)));
}

}  // namespace mvcorr::oracle
