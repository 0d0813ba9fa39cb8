#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvcorr/metrics.hpp"

namespace mvcorr {

inline constexpr const char* kReportFormat = "mvcorr-report/1";

struct InstanceResult {
  Index origin = 0;
  MetricSet metrics;

  friend bool operator==(const InstanceResult&, const InstanceResult&) = default;
};

struct EvaluationReport {
  std::string label;
  std::vector<InstanceResult> instances;
  MetricSet aggregate;  // arithmetic mean over instances
  Index samples = 0;
  std::uint64_t seed = 0;
  std::string config_hash;

  // Recomputes `aggregate` from `instances`.
  void finalize();

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

void to_json(nlohmann::json& j, const MetricSet& m);
void from_json(const nlohmann::json& j, MetricSet& m);
void to_json(nlohmann::json& j, const EvaluationReport& r);
void from_json(const nlohmann::json& j, EvaluationReport& r);

// Fixed-width table, one row per report, aggregate metrics as columns.
std::string format_table(const std::vector<EvaluationReport>& reports);

// Stable 64-bit FNV-1a digest, hex encoded.
std::string content_hash(const std::string& text);

}  // namespace mvcorr
