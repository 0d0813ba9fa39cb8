// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 125).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mvcorr/calibration.hpp"
#include "mvcorr/covariance.hpp"
#include "mvcorr/experiment.hpp"
#include "mvcorr/forecaster.hpp"
#include "mvcorr/kernels.hpp"
#include "mvcorr/metrics.hpp"
#include "mvcorr/oracle/dense.hpp"
#include "test_support.hpp"

using namespace mvcorr;
using namespace mvcorr::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_scalar(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

Outcome woodbury_equivalence() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dd(1, 6), bb(1, 8), rr(1, 3);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const BatchCovariance cov = oracle::random_batch_covariance(dd(rng), bb(rng), rr(rng), rng);
    const Vec v = random_vec(cov.size(), rng);
    const Mat sigma = oracle::assemble_dense(cov);
    worst = std::max(worst, rel_err(structured_solve(cov, v), oracle::dense_solve(sigma, v)));
    worst = std::max(worst, rel_scalar(structured_logdet(cov), oracle::dense_logdet(sigma)));
    worst = std::max(worst, rel_scalar(batch_nll(cov, v).value, oracle::dense_nll(sigma, v)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 10.0, fmt("max rel err %.2e over 200 instances, %.2f s", worst, secs)};
}

Outcome baseline_collapse() {
  std::mt19937_64 rng(102);
  std::uniform_int_distribution<int> dd(1, 6), bb(1, 8), rr(1, 3);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const BatchCovariance rnd = oracle::random_batch_covariance(dd(rng), bb(rng), rr(rng), rng);
    const BatchCovariance cov(rnd.factors(), rnd.diag(), TemporalCorrelation::identity(rnd.steps()));
    const Vec r = random_vec(cov.size(), rng);
    worst = std::max(worst, std::abs(batch_nll(cov, r).value - oracle::independent_steps_nll(cov, r)));
  }
  return {worst <= 1e-9, fmt("max abs diff %.2e over 100 instances", worst)};
}

Outcome conditional_oracle() {
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<int> dd(2, 6), bb(1, 6), rr(1, 3);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Index d = dd(rng);
    const BatchCovariance cov = oracle::random_batch_covariance(d, bb(rng), rr(rng), rng);
    const Index b = cov.series();
    const Vec eta = random_vec((d - 1) * b, rng);
    ResidualBuffer buf(d - 1);
    for (Index s = 0; s + 1 < d; ++s) buf.push(eta.segment(s * b, b), cov.factor(s), cov.step_diag(s));
    const ConditionalGaussian g = conditional_error_distribution(buf, cov.factor(d - 1), cov.step_diag(d - 1), cov.corr());
    const oracle::DenseConditional ref = oracle::condition_on_leading(oracle::assemble_dense(cov), eta, b);
    worst = std::max({worst, rel_err(g.mean, ref.mean), rel_err(g.dense_covariance(), ref.cov)});
  }
  return {worst <= 1e-9, fmt("max rel err %.2e over 100 instances", worst)};
}

Outcome gradient_contract() {
  ModelDims dims;
  dims.hidden = 3;
  dims.rank = 2;
  dims.kernels = 3;
  dims.window = 3;
  dims.context = 2;
  ForecastState state(dims, {0.7, 1.6}, InputEncoder(6, 3), 104);
  std::mt19937_64 rng(104);
  Panel panel;
  panel.values = random_mat(30, 3, rng);
  const TrainingWindow w = make_window(state, panel, std::vector<int>{0, 1, 2}, 11);
  const Vec g = window_loss(state, w, LikelihoodMode::kCorrelated, true).gradient;
  const Index n = state.params().size();
  double worst = 0.0;
  int failures = 0;
  for (Index k = 0; k < n; ++k) {
    const double x0 = state.params()[k];
    const double num = central_difference(
        [&](double x) {
          state.params()[k] = x;
          return window_loss(state, w, LikelihoodMode::kCorrelated, false).terms.value;
        },
        x0);
    state.params()[k] = x0;
    if (!gradient_close(g[k], num)) ++failures;
    if (std::abs(num) > 1e-6) worst = std::max(worst, std::abs(g[k] - num) / std::abs(num));
  }
  return {failures == 0 && n <= 200,
          fmt("%ld parameters, %d outside tolerance, max rel err %.2e", static_cast<long>(n), failures, worst)};
}

Outcome sampler_fidelity() {
  std::mt19937_64 rng(105);
  const BatchCovariance cov = oracle::random_batch_covariance(3, 2, 2, rng);
  const Index n = 100000;
  const Mat x = sample(cov, Vec::Zero(cov.size()), 105, n);
  const Mat s = oracle::assemble_dense(cov);
  const Mat emp = x.transpose() * x / static_cast<double>(n);
  double worst = 0.0;
  for (Index i = 0; i < s.rows(); ++i) {
    for (Index j = 0; j < s.cols(); ++j) {
      const double se = std::sqrt((s(i, i) * s(j, j) + s(i, j) * s(i, j)) / n);
      worst = std::max(worst, std::abs(emp(i, j) - s(i, j)) / se);
    }
  }
  return {worst <= 4.0, fmt("max |error| = %.2f MC standard errors over %ld entries", worst,
                            static_cast<long>(s.size()))};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(106);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(100000);
  for (double& v : x) v = normal(rng);
  const double closed = 2.0 * std::exp(0.0) / std::sqrt(2.0 * std::numbers::pi) - 1.0 / std::sqrt(std::numbers::pi);
  const double crps_err = std::abs(crps(x, 0.0) - closed);

  double es_err = 0.0;
  for (Index n : {2, 50, 500}) {
    ForecastSamples f;
    for (Index k = 0; k < n; ++k) f.paths.push_back(random_mat(4, 3, rng));
    f.truth = random_mat(4, 3, rng);
    double a = 0.0, b = 0.0;
    for (const Mat& p : f.paths) {
      a += (p - f.truth).norm();
      for (const Mat& q : f.paths) b += (p - q).norm();
    }
    const double nn = static_cast<double>(n);
    es_err = std::max(es_err, std::abs(energy_score(f) - (a / nn - 0.5 * b / (nn * nn))));
  }

  const Vec rho = yule_walker_autocorrelations(Vec{{0.5, 0.25}}, 3);
  const double yw_err = std::max(std::abs(rho[1] - 2.0 / 3.0), std::abs(rho[2] - 7.0 / 12.0));
  return {crps_err <= 0.003 && es_err <= 1e-10 && yw_err <= 1e-15,
          fmt("CRPS vs %.4f off by %.2e; ES vs brute force %.2e; Yule-Walker (%.15f, %.15f)", closed, crps_err, es_err,
              rho[1], rho[2])};
}

Outcome scalability() {
  std::mt19937_64 rng(107);
  const BatchCovariance cov = oracle::random_batch_covariance(4, 200, 2, rng);
  const Vec r = random_vec(cov.size(), rng);
  auto best = [](int reps, const std::function<void()>& f) {
    double b = 1e300;
    for (int k = 0; k < reps; ++k) {
      const auto t0 = Clock::now();
      f();
      b = std::min(b, seconds_since(t0));
    }
    return b;
  };
  volatile double sink = 0.0;
  const double ts = best(20, [&] { sink = batch_nll(cov, r).value; });
  const double td = best(5, [&] { sink = oracle::dense_nll(oracle::assemble_dense(cov), r); });
  (void)sink;
  return {td / ts >= 10.0, fmt("structured %.3f ms, dense %.3f ms, speedup %.1fx", ts * 1e3, td * 1e3, td / ts)};
}

ExperimentConfig synthetic_config(LatentProcess process, std::uint64_t seed) {
  ExperimentConfig c;
  c.seed = seed;
  c.generator.num_series = 8;
  c.generator.length = 2000;
  c.generator.process = process;
  c.generator.rho = 0.7;
  c.dims.window = 8;
  c.dims.context = 8;
  c.horizon = 8;
  c.batch_series = 8;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SyntheticOutcomes {
  Outcome directional;
  Outcome whitening;
};

SyntheticOutcomes synthetic_experiments() {
  const auto t0 = Clock::now();
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> imp_crps, imp_es, null_delta;
  double raw_ac = 0.0, cal_ac = 0.0;
  int whitened = 0;
  int wins = 0;
  for (std::uint64_t seed : seeds) {
    const ExperimentResult r = run_experiment(synthetic_config(LatentProcess::kAr1, seed));
    const double ic = 1.0 - r.method.aggregate.crps_sum / r.baseline.aggregate.crps_sum;
    const double ie = 1.0 - r.method.aggregate.energy / r.baseline.aggregate.energy;
    imp_crps.push_back(ic);
    imp_es.push_back(ie);
    wins += ic > 0.0 && ie > 0.0 ? 1 : 0;
    raw_ac += r.residual_autocorr_raw / seeds.size();
    cal_ac += r.residual_autocorr_calibrated / seeds.size();
    whitened += r.residual_autocorr_calibrated < r.residual_autocorr_raw ? 1 : 0;
    std::printf("  ar1 seed %llu: CRPS_sum %.4f vs %.4f (%+.1f%%), ES %.4f vs %.4f (%+.1f%%), uncal %.4f, var1 %.4f, "
                "lag-1 |ac| %.3f -> %.3f, %.0f s\n",
                static_cast<unsigned long long>(seed), r.method.aggregate.crps_sum, r.baseline.aggregate.crps_sum,
                100 * ic, r.method.aggregate.energy, r.baseline.aggregate.energy, 100 * ie,
                r.uncalibrated.aggregate.crps_sum, r.var1.aggregate.crps_sum, r.residual_autocorr_raw,
                r.residual_autocorr_calibrated, r.seconds);
    std::fflush(stdout);
  }
  for (std::uint64_t seed : seeds) {
    const ExperimentResult r = run_experiment(synthetic_config(LatentProcess::kIid, seed));
    const double delta = r.method.aggregate.crps_sum / r.baseline.aggregate.crps_sum - 1.0;
    null_delta.push_back(delta);
    std::printf("  iid seed %llu: CRPS_sum %.4f vs %.4f (%+.1f%%), %.0f s\n", static_cast<unsigned long long>(seed),
                r.method.aggregate.crps_sum, r.baseline.aggregate.crps_sum, 100 * delta, r.seconds);
    std::fflush(stdout);
  }
  double null_mean = 0.0;
  for (double d : null_delta) null_mean += d / null_delta.size();
  const double minutes = seconds_since(t0) / 60.0;
  const double mc = median(imp_crps);
  const double me = median(imp_es);
  SyntheticOutcomes out;
  out.directional = {wins >= 4 && mc >= 0.05 && me >= 0.05 && std::abs(null_mean) <= 0.03 && minutes <= 30.0,
                     fmt("%d/5 seeds better on both; median improvement CRPS_sum %.1f%%, ES %.1f%%; "
                         "null mean difference %+.1f%%; %.1f min",
                         wins, 100 * mc, 100 * me, 100 * null_mean, minutes)};
  out.whitening = {cal_ac < raw_ac,
                   fmt("mean lag-1 |autocorrelation| %.4f calibrated vs %.4f raw (lower in %d/5 seeds)", cal_ac,
                       raw_ac, whitened)};
  return out;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const Outcome& o) {
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  report("woodbury-equivalence", woodbury_equivalence());
  report("baseline-collapse", baseline_collapse());
  report("conditional-oracle", conditional_oracle());
  report("gradient-contract", gradient_contract());
  report("sampler-fidelity", sampler_fidelity());
  report("metric-oracles", metric_oracles());
  report("scalability", scalability());
  const SyntheticOutcomes syn = synthetic_experiments();
  report("directional-synthetic", syn.directional);
  report("residual-whitening", syn.whitening);
  return std::min(failures, 125);
}
