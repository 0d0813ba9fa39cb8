#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace mvcorr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Diagonal increments tried, in order, when a plain Cholesky fails.
inline constexpr std::array<double, 3> kJitterLadder{1e-10, 1e-8, 1e-6};

struct JitteredCholesky {
  Eigen::LLT<Mat> llt;
  double jitter = 0.0;  // amount added to the diagonal, 0 if none was needed

  Mat lower() const { return llt.matrixL(); }
  // Sum of log pivots, i.e. half the log-determinant of the factored matrix.
  double half_log_det() const;
};

// Cholesky of a symmetric matrix, retrying along kJitterLadder. Throws
// NumericalError mentioning `what` when every rung fails.
JitteredCholesky jittered_cholesky(const Mat& a, std::string_view what);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& a);

inline double softplus(double x) {
  // log(1 + e^x) without overflow for large x
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double inverse_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

}  // namespace mvcorr
