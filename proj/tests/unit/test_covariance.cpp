#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "mvcorr/covariance.hpp"
#include "mvcorr/errors.hpp"
#include "mvcorr/oracle/dense.hpp"
#include "test_support.hpp"

using namespace mvcorr;
using namespace mvcorr::testing;

namespace {

BatchCovariance scalar_cov(double l, double d) {
  return BatchCovariance({Mat::Constant(1, 1, l)}, Vec::Constant(1, d), TemporalCorrelation::identity(1));
}

BatchCovariance two_step(double c01) {
  Mat c(2, 2);
  c << 1.0, c01, c01, 1.0;
  return BatchCovariance({Mat::Ones(1, 1), Mat::Ones(1, 1)}, Vec::Ones(2), TemporalCorrelation(c));
}

BatchCovariance unit_noise(Index d, Index b, Index r, const Mat& c) {
  return BatchCovariance(std::vector<Mat>(static_cast<std::size_t>(d), Mat::Zero(b, r)), Vec::Ones(d * b),
                         TemporalCorrelation(c));
}

}  // namespace

TEST_CASE("assemble_dense small cases") {
  CHECK(oracle::assemble_dense(scalar_cov(1.0, 1.0))(0, 0) == doctest::Approx(2.0));

  const Mat zero_cross = oracle::assemble_dense(two_step(0.0));
  CHECK(zero_cross(0, 0) == 2.0);
  CHECK(zero_cross(0, 1) == 0.0);
  CHECK(zero_cross(1, 1) == 2.0);

  const Mat half = oracle::assemble_dense(two_step(0.5));
  CHECK(half(0, 1) == 0.5);
  CHECK(half(1, 0) == 0.5);
  CHECK(half(1, 1) == 2.0);
}

TEST_CASE("cross-covariance blocks follow the Kronecker structure") {
  std::mt19937_64 rng(11);
  const BatchCovariance cov = oracle::random_batch_covariance(4, 3, 2, rng);
  const Mat sigma = oracle::assemble_dense(cov);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) {
      if (i == j) continue;
      const Mat expect = cov.corr()(i, j) * cov.factor(i) * cov.factor(j).transpose();
      CHECK((sigma.block(i * 3, j * 3, 3, 3) - expect).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("structured_solve") {
  std::mt19937_64 rng(3);
  SUBCASE("identity covariance leaves the vector unchanged") {
    const Mat c = oracle::random_correlation(3, rng);
    const BatchCovariance cov = unit_noise(3, 2, 2, c);
    const Vec v = random_vec(6, rng);
    CHECK(rel_err(structured_solve(cov, v), v) < 1e-14);
  }
  SUBCASE("scalar") {
    CHECK(structured_solve(scalar_cov(1.0, 1.0), Vec::Constant(1, 4.0))[0] == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("random instance against dense Cholesky") {
    const BatchCovariance cov = oracle::random_batch_covariance(4, 6, 2, rng);
    const Vec v = random_vec(cov.size(), rng);
    const Vec expect = oracle::dense_solve(oracle::assemble_dense(cov), v);
    CHECK(rel_err(structured_solve(cov, v), expect) < 1e-10);
  }
}

TEST_CASE("structured_logdet") {
  std::mt19937_64 rng(5);
  CHECK(std::abs(structured_logdet(unit_noise(3, 2, 1, oracle::random_correlation(3, rng)))) < 1e-14);
  CHECK(structured_logdet(scalar_cov(1.0, 1.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  const BatchCovariance cov = oracle::random_batch_covariance(3, 5, 2, rng);
  CHECK(std::abs(structured_logdet(cov) - oracle::dense_logdet(oracle::assemble_dense(cov))) < 1e-9);
}

TEST_CASE("batch_nll") {
  std::mt19937_64 rng(8);
  const double ln2pi = std::log(2.0 * std::numbers::pi);
  SUBCASE("unit covariance, zero residual") {
    const BatchCovariance cov = unit_noise(3, 4, 2, Mat::Identity(3, 3));
    CHECK(batch_nll(cov, Vec::Zero(12)).value == doctest::Approx(0.5 * 12 * ln2pi).epsilon(1e-14));
  }
  SUBCASE("scalar Gaussian") {
    const NllTerms t = batch_nll(scalar_cov(1.0, 1.0), Vec::Constant(1, 2.0));
    CHECK(t.value == doctest::Approx(0.5 * (std::log(2.0) + 2.0 + ln2pi)).epsilon(1e-14));
    CHECK(t.value == doctest::Approx(2.2655).epsilon(1e-4));
    CHECK(t.mahalanobis == doctest::Approx(2.0));
    CHECK(t.log_det == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("identity correlation separates into per-step terms") {
    for (int trial = 0; trial < 20; ++trial) {
      const BatchCovariance rnd = oracle::random_batch_covariance(5, 4, 2, rng);
      const BatchCovariance cov(rnd.factors(), rnd.diag(), TemporalCorrelation::identity(5));
      const Vec r = random_vec(cov.size(), rng);
      CHECK(std::abs(batch_nll(cov, r).value - oracle::independent_steps_nll(cov, r)) < 1e-9);
    }
  }
  SUBCASE("random instances against the dense oracle") {
    for (int trial = 0; trial < 20; ++trial) {
      const BatchCovariance cov = oracle::random_batch_covariance(1 + trial % 6, 1 + trial % 8, 1 + trial % 3, rng);
      const Vec r = random_vec(cov.size(), rng);
      CHECK(rel_err(batch_nll(cov, r).value, oracle::dense_nll(oracle::assemble_dense(cov), r)) < 1e-9);
    }
  }
}

TEST_CASE("StructuredFactorization pieces") {
  std::mt19937_64 rng(21);
  const BatchCovariance cov = oracle::random_batch_covariance(3, 4, 2, rng);
  const StructuredFactorization f(cov);
  const Mat sigma = oracle::assemble_dense(cov);
  const Vec v = random_vec(cov.size(), rng);
  CHECK(rel_err(f.mahalanobis(v), v.dot(oracle::dense_solve(sigma, v))) < 1e-11);

  Mat a = Mat::Zero(12, 6);
  for (Index s = 0; s < 3; ++s) a.block(s * 4, s * 2, 4, 2) = cov.factor(s);
  CHECK(rel_err(f.project(v), a.transpose() * v) < 1e-14);
  const Mat expect = a.transpose() * sigma.llt().solve(a);
  CHECK(rel_err(f.projected_precision(), expect) < 1e-10);
}

TEST_CASE("batch_nll_gradient matches central differences") {
  std::mt19937_64 rng(17);
  const BatchCovariance cov = oracle::random_batch_covariance(3, 3, 2, rng);
  const Vec r = random_vec(cov.size(), rng);
  const NllGradient g = batch_nll_gradient(cov, r);
  CHECK(g.terms.value == doctest::Approx(batch_nll(cov, r).value).epsilon(1e-13));

  std::vector<Mat> factors = cov.factors();
  Vec diag = cov.diag();
  Mat c = cov.corr().matrix();
  auto nll = [&] { return batch_nll(BatchCovariance(factors, diag, TemporalCorrelation(c)), r).value; };

  for (Index s = 0; s < 3; ++s) {
    for (Index i = 0; i < 3; ++i) {
      for (Index k = 0; k < 2; ++k) {
        const double x0 = factors[s](i, k);
        const double num = central_difference([&](double x) { factors[s](i, k) = x; return nll(); }, x0);
        factors[s](i, k) = x0;
        CHECK(gradient_close(g.factors[s](i, k), num));
      }
    }
  }
  for (Index i = 0; i < diag.size(); ++i) {
    const double x0 = diag[i];
    const double num = central_difference([&](double x) { diag[i] = x; return nll(); }, x0);
    diag[i] = x0;
    CHECK(gradient_close(g.diag[i], num));
  }
  // C must stay symmetric, so each off-diagonal pair moves together.
  for (Index i = 0; i < 3; ++i) {
    for (Index j = i + 1; j < 3; ++j) {
      const double x0 = c(i, j);
      const double num = central_difference([&](double x) { c(i, j) = x; c(j, i) = x; return nll(); }, x0);
      c(i, j) = x0;
      c(j, i) = x0;
      CHECK(gradient_close(g.corr(i, j) + g.corr(j, i), num));
    }
  }
  Vec rr = r;
  for (Index i = 0; i < rr.size(); ++i) {
    const double x0 = rr[i];
    const double num = central_difference(
        [&](double x) { rr[i] = x; return batch_nll(cov, rr).value; }, x0);
    rr[i] = x0;
    CHECK(gradient_close(g.residual[i], num));
  }
}

TEST_CASE("sample") {
  SUBCASE("unit covariance variance") {
    const BatchCovariance cov = unit_noise(2, 2, 1, Mat::Identity(2, 2));
    const Index n = 100000;
    const Mat x = sample(cov, Vec::Zero(4), 1, n);
    for (Index j = 0; j < 4; ++j) {
      const double var = x.col(j).squaredNorm() / n;
      // sd of the variance estimate is sqrt(2 / n)
      CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
    }
  }
  SUBCASE("fixed seed is reproducible") {
    std::mt19937_64 rng(2);
    const BatchCovariance cov = oracle::random_batch_covariance(2, 3, 1, rng);
    const Vec mean = random_vec(6, rng);
    CHECK(sample(cov, mean, 99, 1) == sample(cov, mean, 99, 1));
    CHECK(sample(cov, mean, 99, 1) != sample(cov, mean, 100, 1));
  }
  SUBCASE("lag-one covariance") {
    const Index n = 100000;
    const Mat x = sample(two_step(0.5), Vec::Zero(2), 4, n);
    const double cov01 = x.col(0).dot(x.col(1)) / n;
    // Var(x0 x1) = s00 s11 + s01^2 for a zero-mean Gaussian pair
    const double se = std::sqrt((2.0 * 2.0 + 0.25) / n);
    CHECK(std::abs(cov01 - 0.5) < 4.0 * se);
  }
}

TEST_CASE("validation and conditioning") {
  Mat bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(TemporalCorrelation{bad}, NumericalError);
  Mat asym(2, 2);
  asym << 1.0, 0.2, 0.3, 1.0;
  CHECK_THROWS_AS(TemporalCorrelation{asym}, InvalidArgument);
  Mat offdiag(2, 2);
  offdiag << 1.1, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(TemporalCorrelation{offdiag}, InvalidArgument);

  CHECK_THROWS_AS(BatchCovariance({Mat::Ones(1, 1)}, Vec::Zero(1), TemporalCorrelation::identity(1)), InvalidArgument);
  CHECK_THROWS_AS(BatchCovariance({Mat::Ones(2, 1), Mat::Ones(3, 1)}, Vec::Ones(5), TemporalCorrelation::identity(2)),
                  InvalidArgument);

  // A perfectly correlated window is singular but PSD; the jitter ladder copes.
  const TemporalCorrelation ones(Mat::Ones(3, 3));
  const BatchCovariance cov(std::vector<Mat>(3, Mat::Ones(2, 1)), Vec::Ones(6), ones);
  const StructuredFactorization f(cov);
  CHECK(f.corr_cholesky().jitter > 0.0);
  const Vec v = Vec::LinSpaced(6, -1.0, 1.0);
  CHECK(rel_err(f.solve(v), oracle::dense_solve(oracle::assemble_dense(cov), v)) < 1e-5);

  CHECK_THROWS_AS(jittered_cholesky(-Mat::Identity(2, 2), "test"), NumericalError);
}
