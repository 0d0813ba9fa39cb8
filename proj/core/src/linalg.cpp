#include "mvcorr/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "mvcorr/errors.hpp"

namespace mvcorr {

double JitteredCholesky::half_log_det() const {
  const Mat& packed = llt.matrixLLT();
  double acc = 0.0;
  for (Index i = 0; i < packed.rows(); ++i) {
    acc += std::log(packed(i, i));
  }
  return acc;
}

namespace {

bool factor_ok(const Eigen::LLT<Mat>& llt) {
  if (llt.info() != Eigen::Success) {
    return false;
  }
  const Mat& packed = llt.matrixLLT();
  for (Index i = 0; i < packed.rows(); ++i) {
    const double p = packed(i, i);
    if (!(p > 0.0) || !std::isfinite(p)) {
      return false;
    }
  }
  return true;
}

}  // namespace

JitteredCholesky jittered_cholesky(const Mat& a, std::string_view what) {
  if (a.rows() != a.cols()) {
    throw NumericalError(std::string(what) + ": Cholesky of a non-square matrix");
  }
  JitteredCholesky out;
  out.llt.compute(a);
  if (factor_ok(out.llt)) {
    return out;
  }
  for (double jitter : kJitterLadder) {
    Mat shifted = a;
    shifted.diagonal().array() += jitter;
    out.llt.compute(shifted);
    if (factor_ok(out.llt)) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalError(std::string(what) + ": matrix is not positive definite after jitter " +
                       std::to_string(kJitterLadder.back()));
}

double min_eigenvalue(const Mat& a) {
  if (a.size() == 0) {
    return 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Mat> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace mvcorr
