#include "mvcorr/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "mvcorr/dataset.hpp"
#include "mvcorr/errors.hpp"

namespace mvcorr {

void validate(const GeneratorSpec& s) {
  if (s.num_series < 1 || s.length < 2 || s.season_length < 1 || s.rank < 1) {
    throw ConfigError("generator needs num_series, rank, season_length >= 1 and length >= 2");
  }
  if (s.process == LatentProcess::kAr1 && !(std::abs(s.rho) < 1.0)) {
    throw ConfigError("AR(1) latent process needs |rho| < 1");
  }
  if (s.process == LatentProcess::kSeKernel && !(s.lengthscale > 0.0)) {
    throw ConfigError("SE latent process needs a positive lengthscale");
  }
  if (!(s.noise_std > 0.0) || s.loading_scale < 0.0) {
    throw ConfigError("generator noise_std must be positive and loading_scale non-negative");
  }
}

namespace {

Mat latent_path(const GeneratorSpec& s, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index t = s.length;
  const Index r = s.rank;
  Mat out(t, r);
  switch (s.process) {
    case LatentProcess::kIid:
      for (Index k = 0; k < t; ++k) {
        for (Index j = 0; j < r; ++j) {
          out(k, j) = normal(rng);
        }
      }
      break;
    case LatentProcess::kAr1: {
      const double innov = std::sqrt(1.0 - s.rho * s.rho);
      for (Index j = 0; j < r; ++j) {
        out(0, j) = normal(rng);  // stationary start
      }
      for (Index k = 1; k < t; ++k) {
        for (Index j = 0; j < r; ++j) {
          out(k, j) = s.rho * out(k - 1, j) + innov * normal(rng);
        }
      }
      break;
    }
    case LatentProcess::kSeKernel: {
      // Gaussian moving average of white noise: taps exp(-2 k^2 / l^2) have
      // autocovariance proportional to exp(-h^2 / l^2).
      const auto half = static_cast<Index>(std::ceil(4.0 * s.lengthscale));
      Vec taps(2 * half + 1);
      for (Index k = -half; k <= half; ++k) {
        const double x = static_cast<double>(k) / s.lengthscale;
        taps[k + half] = std::exp(-2.0 * x * x);
      }
      taps /= taps.norm();
      Mat white(t + 2 * half, r);
      for (Index k = 0; k < white.rows(); ++k) {
        for (Index j = 0; j < r; ++j) {
          white(k, j) = normal(rng);
        }
      }
      for (Index k = 0; k < t; ++k) {
        out.row(k) = taps.transpose() * white.middleRows(k, 2 * half + 1);
      }
      break;
    }
  }
  return out;
}

}  // namespace

SyntheticDataset generate(const GeneratorSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index n = spec.num_series;
  const Index t = spec.length;
  const Index r = spec.rank;

  SyntheticDataset d;
  d.spec = spec;
  d.seed = seed;
  d.loadings.resize(n, r);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < r; ++j) {
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      d.loadings(i, j) = sign * spec.loading_scale * (0.5 + unit(rng));
    }
  }
  d.noise_std.resize(n);
  Vec level(n), amp(n), phase(n), slope(n);
  for (Index i = 0; i < n; ++i) {
    d.noise_std[i] = spec.noise_std * (1.0 + 0.5 * unit(rng));
    level[i] = spec.level * (0.75 + 0.5 * unit(rng));
    amp[i] = spec.amplitude * (0.5 + unit(rng));
    phase[i] = 2.0 * std::numbers::pi * unit(rng);
    slope[i] = spec.trend * (2.0 * unit(rng) - 1.0);
  }

  d.latent = latent_path(spec, rng);
  d.mean.resize(t, n);
  d.errors.resize(t, n);
  for (Index k = 0; k < t; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / spec.season_length;
    for (Index i = 0; i < n; ++i) {
      d.mean(k, i) = level[i] + amp[i] * std::sin(angle + phase[i]) + slope[i] * static_cast<double>(k) / t;
      d.errors(k, i) = d.loadings.row(i).dot(d.latent.row(k)) + d.noise_std[i] * normal(rng);
    }
  }
  d.panel.values = d.mean + d.errors;
  d.panel.time_offset = 0;
  return d;
}

std::string to_string(LatentProcess p) {
  switch (p) {
    case LatentProcess::kIid:
      return "iid";
    case LatentProcess::kAr1:
      return "ar1";
    case LatentProcess::kSeKernel:
      return "se_kernel";
  }
  return "unknown";
}

LatentProcess latent_process_from_string(const std::string& s) {
  if (s == "iid") return LatentProcess::kIid;
  if (s == "ar1") return LatentProcess::kAr1;
  if (s == "se_kernel") return LatentProcess::kSeKernel;
  throw ConfigError("unknown latent process `" + s + "` (expected iid, ar1 or se_kernel)");
}

void to_json(nlohmann::json& j, const GeneratorSpec& s) {
  j = {{"num_series", s.num_series},     {"length", s.length},       {"season_length", s.season_length},
       {"rank", s.rank},                 {"process", to_string(s.process)},
       {"rho", s.rho},                   {"lengthscale", s.lengthscale}, {"loading_scale", s.loading_scale},
       {"noise_std", s.noise_std},       {"level", s.level},         {"amplitude", s.amplitude},
       {"trend", s.trend}};
}

void from_json(const nlohmann::json& j, GeneratorSpec& s) {
  GeneratorSpec d;
  s.num_series = j.value("num_series", d.num_series);
  s.length = j.value("length", d.length);
  s.season_length = j.value("season_length", d.season_length);
  s.rank = j.value("rank", d.rank);
  s.process = latent_process_from_string(j.value("process", to_string(d.process)));
  s.rho = j.value("rho", d.rho);
  s.lengthscale = j.value("lengthscale", d.lengthscale);
  s.loading_scale = j.value("loading_scale", d.loading_scale);
  s.noise_std = j.value("noise_std", d.noise_std);
  s.level = j.value("level", d.level);
  s.amplitude = j.value("amplitude", d.amplitude);
  s.trend = j.value("trend", d.trend);
}

nlohmann::json sidecar_json(const SyntheticDataset& data) {
  nlohmann::json loadings = nlohmann::json::array();
  for (Index i = 0; i < data.loadings.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(data.loadings.cols()));
    for (Index j = 0; j < data.loadings.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = data.loadings(i, j);
    }
    loadings.push_back(row);
  }
  return {{"format", "mvcorr-synthetic/1"},
          {"seed", data.seed},
          {"spec", data.spec},
          {"loadings", loadings},
          {"noise_std", std::vector<double>(data.noise_std.begin(), data.noise_std.end())}};
}

void write_dataset(const std::filesystem::path& stem, const SyntheticDataset& data) {
  std::filesystem::path csv = stem;
  csv += ".csv";
  std::filesystem::path side = stem;
  side += ".json";
  write_csv(csv, data.panel);
  write_json_file(side, sidecar_json(data));
}

}  // namespace mvcorr
