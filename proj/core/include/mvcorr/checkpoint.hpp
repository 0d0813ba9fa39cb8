#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "mvcorr/dataset.hpp"
#include "mvcorr/forecaster.hpp"

namespace mvcorr {

inline constexpr const char* kCheckpointFormat = "mvcorr-checkpoint/1";

// Self-describing model file: format tag, dims, lengthscales, seed and every
// parameter tensor by name with its shape (column-major data).
nlohmann::json checkpoint_json(const ForecastState& state, const Scaler* scaler = nullptr);

struct Checkpoint {
  ForecastState state;
  std::optional<Scaler> scaler;
};

Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const ForecastState& state,
                     const Scaler* scaler = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mvcorr
