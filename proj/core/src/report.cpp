#include "mvcorr/report.hpp"

#include <cstdio>
#include <sstream>

#include "mvcorr/errors.hpp"

namespace mvcorr {

void EvaluationReport::finalize() {
  std::vector<MetricSet> sets;
  sets.reserve(instances.size());
  for (const auto& inst : instances) {
    sets.push_back(inst.metrics);
  }
  aggregate = mean_metrics(sets);
}

void to_json(nlohmann::json& j, const MetricSet& m) {
  j = {{"crps", m.crps},
       {"crps_sum", m.crps_sum},
       {"crps_sum_raw", m.crps_sum_raw},
       {"quantile_loss_0.5", m.quantile_50},
       {"quantile_loss_0.9", m.quantile_90},
       {"energy_score", m.energy},
       {"rrmse", m.rrmse}};
}

void from_json(const nlohmann::json& j, MetricSet& m) {
  m.crps = j.at("crps").get<double>();
  m.crps_sum = j.at("crps_sum").get<double>();
  m.crps_sum_raw = j.at("crps_sum_raw").get<double>();
  m.quantile_50 = j.at("quantile_loss_0.5").get<double>();
  m.quantile_90 = j.at("quantile_loss_0.9").get<double>();
  m.energy = j.at("energy_score").get<double>();
  m.rrmse = j.at("rrmse").get<double>();
}

void to_json(nlohmann::json& j, const EvaluationReport& r) {
  nlohmann::json inst = nlohmann::json::array();
  for (const auto& i : r.instances) {
    inst.push_back({{"origin", i.origin}, {"metrics", i.metrics}});
  }
  j = {{"format", kReportFormat}, {"label", r.label},   {"samples", r.samples},
       {"seed", r.seed},          {"config_hash", r.config_hash},
       {"aggregate", r.aggregate}, {"instances", std::move(inst)}};
}

void from_json(const nlohmann::json& j, EvaluationReport& r) {
  if (j.at("format").get<std::string>() != kReportFormat) {
    throw ConfigError("unsupported report format");
  }
  r.label = j.at("label").get<std::string>();
  r.samples = j.at("samples").get<Index>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.aggregate = j.at("aggregate").get<MetricSet>();
  r.instances.clear();
  for (const auto& i : j.at("instances")) {
    r.instances.push_back({i.at("origin").get<Index>(), i.at("metrics").get<MetricSet>()});
  }
}

std::string format_table(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %10s %10s %10s %10s %10s %10s\n", "model", "CRPS", "CRPS_sum", "QL0.5",
                "QL0.9", "ES", "RRMSE");
  out << line;
  for (const auto& r : reports) {
    const MetricSet& m = r.aggregate;
    std::snprintf(line, sizeof line, "%-28s %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f\n", r.label.c_str(), m.crps,
                  m.crps_sum, m.quantile_50, m.quantile_90, m.energy, m.rrmse);
    out << line;
  }
  return out.str();
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mvcorr
