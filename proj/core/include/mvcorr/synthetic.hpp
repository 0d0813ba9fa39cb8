#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mvcorr/forecaster.hpp"

namespace mvcorr {

enum class LatentProcess {
  kIid,       // r_t independent over time
  kAr1,       // r_t = rho r_{t-1} + sqrt(1 - rho^2) u_t
  kSeKernel,  // stationary, Corr(r_t, r_{t+h}) = exp(-h^2 / l^2)
};

// Ground-truth generator: z_{i,t} = m_{i,t} + (L r_t)_i + eps_{i,t} with a
// seasonal-plus-trend mean m, unit-variance latent factors r_t and iid noise.
struct GeneratorSpec {
  int num_series = 8;
  int length = 2000;
  int season_length = 24;
  int rank = 2;
  LatentProcess process = LatentProcess::kAr1;
  double rho = 0.7;
  double lengthscale = 2.0;
  double loading_scale = 1.0;  // loadings ~ U(0.5, 1.5) * scale with random sign
  double noise_std = 0.5;      // per-series noise std ~ U(1, 1.5) * noise_std
  double level = 10.0;
  double amplitude = 2.0;
  double trend = 1.0;          // total drift over the series, scaled per series
};

void validate(const GeneratorSpec& spec);

struct SyntheticDataset {
  Panel panel;      // T x N observations
  Mat mean;         // T x N deterministic component
  Mat errors;       // T x N, L r_t + eps_t
  Mat latent;       // T x R
  Mat loadings;     // N x R
  Vec noise_std;    // N
  GeneratorSpec spec;
  std::uint64_t seed = 0;
};

SyntheticDataset generate(const GeneratorSpec& spec, std::uint64_t seed);

void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);

std::string to_string(LatentProcess p);
LatentProcess latent_process_from_string(const std::string& s);

// Sidecar with the spec, seed and true loadings / noise / mean parameters.
nlohmann::json sidecar_json(const SyntheticDataset& data);

// Writes <stem>.csv and <stem>.json.
void write_dataset(const std::filesystem::path& stem, const SyntheticDataset& data);

}  // namespace mvcorr
