#include "mvcorr/baselines.hpp"

#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "mvcorr/errors.hpp"

namespace mvcorr {

VarModel fit_var1(const Mat& data) {
  const Index t = data.rows();
  const Index n = data.cols();
  if (n < 1 || t < n + 2) {
    throw InvalidArgument("VAR(1) fit needs T >= N + 2 rows, got T = " + std::to_string(t));
  }
  Mat x(t - 1, n + 1);
  x.col(0).setOnes();
  x.rightCols(n) = data.topRows(t - 1);
  const Mat y = data.bottomRows(t - 1);

  Eigen::ColPivHouseholderQR<Mat> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < n + 1) {
    throw NumericalError("VAR(1) regressors are rank deficient (rank " + std::to_string(qr.rank()) + " < " +
                         std::to_string(n + 1) + ")");
  }
  const Mat beta = qr.solve(y);  // (N + 1) x N

  VarModel m;
  m.intercept = beta.row(0).transpose();
  m.coefficients = beta.bottomRows(n).transpose();
  m.residuals = y - x * beta;
  const Index dof = t - 1 - (n + 1);
  m.noise_cov = dof > 0 ? Mat(m.residuals.transpose() * m.residuals / static_cast<double>(dof)) : Mat::Zero(n, n);
  m.noise_cov = 0.5 * (m.noise_cov + m.noise_cov.transpose());
  return m;
}

std::vector<Mat> var_forecast(const VarModel& model, const Vec& last, Index horizon, Index paths, std::uint64_t seed) {
  const Index n = model.intercept.size();
  if (last.size() != n || horizon < 1 || paths < 1) {
    throw InvalidArgument("VAR forecast: bad start vector, horizon or path count");
  }
  // PSD square root; handles a singular (even zero) noise covariance.
  Eigen::SelfAdjointEigenSolver<Mat> eig(model.noise_cov);
  const Vec root_vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat root = eig.eigenvectors() * root_vals.asDiagonal();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(paths));
  Vec white(n);
  for (Index p = 0; p < paths; ++p) {
    Mat path(horizon, n);
    Vec z = last;
    for (Index q = 0; q < horizon; ++q) {
      for (Index i = 0; i < n; ++i) {
        white[i] = normal(rng);
      }
      z = model.intercept + model.coefficients * z + root * white;
      path.row(q) = z.transpose();
    }
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace mvcorr
