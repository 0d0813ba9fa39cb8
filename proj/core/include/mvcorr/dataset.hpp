#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvcorr/forecaster.hpp"

namespace mvcorr {

// Per-series affine standardization fitted on the training rows.
struct Scaler {
  Vec mean;
  Vec scale;

  static Scaler fit(const Mat& values, Index rows);
  Mat transform(const Mat& values) const;
  Mat inverse(const Mat& values) const;
};

void to_json(nlohmann::json& j, const Scaler& s);
void from_json(const nlohmann::json& j, Scaler& s);

struct CsvDataset {
  std::vector<std::string> timestamps;
  Panel panel;
};

// Header `timestamp,s0,...,s{N-1}`. Integer timestamps must be consecutive
// and set Panel::time_offset; any other timestamp text (RFC3339) is kept
// verbatim and rows are indexed from zero.
CsvDataset read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Panel& panel);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace mvcorr
