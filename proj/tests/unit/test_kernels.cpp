#include <cmath>
#include <random>

#include <doctest.h>

#include "mvcorr/errors.hpp"
#include "mvcorr/kernels.hpp"
#include "test_support.hpp"

using namespace mvcorr;
using namespace mvcorr::testing;

TEST_CASE("kernel bank entries") {
  const KernelBank bank({1.0}, 3);
  REQUIRE(bank.size() == 2);
  CHECK(bank.kernel(0)(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(bank.kernel(0)(0, 1) == doctest::Approx(0.36788).epsilon(1e-5));
  CHECK(bank.kernel(0)(0, 2) == doctest::Approx(0.018316).epsilon(1e-4));
  CHECK(bank.kernel(1) == Mat::Identity(3, 3));

  for (double l : {0.1, 1.0, 50.0}) {
    const Mat k = se_kernel_matrix(l, 7);
    CHECK(k.diagonal() == Vec::Ones(7));
    CHECK(k == k.transpose());
  }
  CHECK(min_eigenvalue(se_kernel_matrix(2.0, 5)) >= -1e-10);
  CHECK_THROWS_AS(se_kernel_matrix(0.0, 3), InvalidArgument);
  CHECK_THROWS_AS(KernelBank({-1.0}, 3), InvalidArgument);
}

TEST_CASE("lengthscale derivative") {
  const KernelBank bank({1.7, 0.6}, 5);
  for (Index m = 0; m < 2; ++m) {
    const double l = bank.lengthscales()[static_cast<std::size_t>(m)];
    const Mat num = (se_kernel_matrix(l + 1e-6, 5) - se_kernel_matrix(l - 1e-6, 5)) / 2e-6;
    CHECK(rel_err(bank.lengthscale_derivative(m), num) < 1e-8);
  }
  CHECK_THROWS_AS(bank.lengthscale_derivative(2), InvalidArgument);
}

TEST_CASE("mix") {
  SUBCASE("all mass on the identity") {
    const KernelBank bank({0.5, 1.5}, 4);
    CHECK(mix(bank, MixWeights(Vec::Unit(3, 2))).matrix() == Mat::Identity(4, 4));
  }
  SUBCASE("half and half") {
    const KernelBank bank({1.0}, 2);
    const TemporalCorrelation c = mix(bank, MixWeights(Vec::Constant(2, 0.5)));
    CHECK(c(0, 1) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-15));
    CHECK(c(0, 1) == doctest::Approx(0.18394).epsilon(1e-4));
  }
  SUBCASE("uniform over four members") {
    const KernelBank bank({0.5, 1.5, 2.5}, 6);
    const TemporalCorrelation c = mix(bank, MixWeights(Vec::Constant(4, 0.25)));
    CHECK(c.matrix().diagonal() == Vec::Ones(6));
    CHECK(min_eigenvalue(c.matrix()) >= -1e-10);
  }
  SUBCASE("random simplex points stay valid and Toeplitz") {
    std::mt19937_64 rng(4);
    const KernelBank bank({0.5, 1.5, 2.5}, 6);
    for (int t = 0; t < 50; ++t) {
      const TemporalCorrelation c = mix(bank, softmax_weights(3.0 * random_vec(4, rng)));
      CHECK(c.matrix().diagonal() == Vec::Ones(6));
      CHECK(c.matrix() == c.matrix().transpose());
      CHECK(min_eigenvalue(c.matrix()) >= -1e-10);
      for (Index i = 1; i < 6; ++i) {
        for (Index j = 1; j < 6; ++j) CHECK(c(i, j) == doctest::Approx(c(i - 1, j - 1)).epsilon(1e-14));
      }
    }
  }
  CHECK_THROWS_AS(MixWeights(Vec::Constant(2, 0.4)), InvalidArgument);
  CHECK_THROWS_AS(MixWeights(Vec{{1.5, -0.5}}), InvalidArgument);
  CHECK_THROWS_AS(mix(KernelBank({1.0}, 3), MixWeights(Vec::Constant(3, 1.0 / 3.0))), InvalidArgument);
}

TEST_CASE("softmax_weights") {
  const Vec third = softmax_weights(Vec::Zero(3)).values();
  CHECK(rel_err(third, Vec::Constant(3, 1.0 / 3.0)) < 1e-15);
  const Vec two = softmax_weights(Vec{{std::log(2.0), 0.0}}).values();
  CHECK(two[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(two[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const Vec big = softmax_weights(Vec{{1000.0, 0.0}}).values();
  CHECK(big.allFinite());
  CHECK(big[0] == 1.0);
  CHECK(big[1] >= 0.0);
  CHECK(big[1] < 1e-300);

  std::mt19937_64 rng(9);
  const Vec x = random_vec(5, rng);
  CHECK(rel_err(softmax_weights(x).values(), softmax_weights((x.array() + 123.4).matrix()).values()) < 1e-14);
  CHECK_THROWS_AS(softmax_weights(Vec{{0.0, NAN}}), InvalidArgument);
}

TEST_CASE("Yule-Walker") {
  SUBCASE("AR(1) is geometric") {
    const Vec rho = yule_walker_autocorrelations(Vec{{0.5}}, 4);
    CHECK(rho == Vec{{1.0, 0.5, 0.25, 0.125}});
    const TemporalCorrelation c = yule_walker_correlation(Vec{{-0.7}}, 5);
    for (Index i = 0; i < 5; ++i) {
      for (Index j = 0; j < 5; ++j) CHECK(c(i, j) == doctest::Approx(std::pow(-0.7, std::abs(i - j))).epsilon(1e-14));
    }
  }
  SUBCASE("AR(2) recursion") {
    const Vec rho = yule_walker_autocorrelations(Vec{{0.5, 0.25}}, 3);
    CHECK(std::abs(rho[1] - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(rho[2] - 7.0 / 12.0) < 1e-15);
  }
  SUBCASE("AR(2) against a simulated path") {
    const double p1 = 0.3;
    const double p2 = -0.2;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = 1000000;
    std::vector<double> x(static_cast<std::size_t>(n) + 1000, 0.0);
    for (std::size_t t = 2; t < x.size(); ++t) x[t] = p1 * x[t - 1] + p2 * x[t - 2] + normal(rng);
    const double* z = x.data() + 1000;
    const Vec rho = yule_walker_autocorrelations(Vec{{p1, p2}}, 6);
    double var = 0.0;
    for (int t = 0; t < n; ++t) var += z[t] * z[t];
    for (Index k = 1; k < 6; ++k) {
      double acc = 0.0;
      for (int t = 0; t + k < n; ++t) acc += z[t] * z[t + k];
      CHECK(std::abs(acc / var - rho[k]) < 0.01);
    }
  }
  SUBCASE("AR(3) satisfies its own Yule-Walker equations") {
    const Vec phi{{0.4, 0.2, -0.1}};
    const Vec rho = yule_walker_autocorrelations(phi, 8);
    for (Index k = 1; k < 8; ++k) {
      double rhs = 0.0;
      for (Index j = 0; j < 3; ++j) rhs += phi[j] * rho[std::abs(k - j - 1)];
      CHECK(rho[k] == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(yule_walker_correlation(Vec{{1.1}}, 4), InvalidArgument);
  CHECK_THROWS_AS(yule_walker_correlation(Vec{{0.5, 0.6}}, 4), InvalidArgument);
}

TEST_CASE("lengthscale grids") {
  CHECK(lengthscale_grid(LengthscaleGrid::kHalfIntegers, 4) == std::vector<double>{0.5, 1.5, 2.5});
  CHECK(lengthscale_grid(LengthscaleGrid::kIntegers, 3) == std::vector<double>{1.0, 2.0});
  CHECK(lengthscale_grid(LengthscaleGrid::kIntegers, 1).empty());
}
