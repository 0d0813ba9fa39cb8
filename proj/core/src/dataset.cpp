#include "mvcorr/dataset.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mvcorr/errors.hpp"

namespace mvcorr {

Scaler Scaler::fit(const Mat& values, Index rows) {
  if (rows < 2 || rows > values.rows()) {
    throw InvalidArgument("scaler needs at least two training rows");
  }
  const auto head = values.topRows(rows);
  Scaler s;
  s.mean = head.colwise().mean().transpose();
  s.scale.resize(values.cols());
  for (Index j = 0; j < values.cols(); ++j) {
    const double var = (head.col(j).array() - s.mean[j]).square().sum() / static_cast<double>(rows - 1);
    s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Mat Scaler::transform(const Mat& values) const {
  return (values.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Mat Scaler::inverse(const Mat& values) const {
  return (values.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
}

void to_json(nlohmann::json& j, const Scaler& s) {
  j = {{"mean", std::vector<double>(s.mean.begin(), s.mean.end())},
       {"scale", std::vector<double>(s.scale.begin(), s.scale.end())}};
}

void from_json(const nlohmann::json& j, Scaler& s) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto sc = j.at("scale").get<std::vector<double>>();
  if (m.size() != sc.size()) {
    throw ConfigError("scaler mean and scale differ in length");
  }
  s.mean = Eigen::Map<const Vec>(m.data(), static_cast<Index>(m.size()));
  s.scale = Eigen::Map<const Vec>(sc.data(), static_cast<Index>(sc.size()));
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') {
      cell.pop_back();
    }
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

bool parse_int(const std::string& s, std::int64_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

CsvDataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open dataset " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("dataset " + path.string() + " is empty");
  }
  const auto header = split_commas(line);
  if (header.size() < 2 || header.front() != "timestamp") {
    throw IoError("dataset header must start with `timestamp` followed by series columns");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "s" + std::to_string(j - 1)) {
      throw IoError("dataset column " + std::to_string(j) + " must be named s" + std::to_string(j - 1));
    }
  }
  const std::size_t n = header.size() - 1;

  CsvDataset out;
  std::vector<double> flat;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") {
      continue;
    }
    const auto cells = split_commas(line);
    if (cells.size() != n + 1) {
      throw IoError("dataset row " + std::to_string(row + 1) + " has " + std::to_string(cells.size()) +
                    " fields, expected " + std::to_string(n + 1));
    }
    out.timestamps.push_back(cells[0]);
    for (std::size_t j = 1; j <= n; ++j) {
      try {
        std::size_t used = 0;
        flat.push_back(std::stod(cells[j], &used));
        if (used != cells[j].size()) {
          throw std::invalid_argument("trailing characters");
        }
      } catch (const std::exception&) {
        throw IoError("dataset row " + std::to_string(row + 1) + " has a non-numeric value `" + cells[j] + "`");
      }
    }
    ++row;
  }
  out.panel.values.resize(static_cast<Index>(row), static_cast<Index>(n));
  for (std::size_t i = 0; i < row; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.panel.values(static_cast<Index>(i), static_cast<Index>(j)) = flat[i * n + j];
    }
  }

  std::int64_t first = 0;
  bool integer_index = !out.timestamps.empty() && parse_int(out.timestamps.front(), first);
  for (std::size_t i = 0; integer_index && i < out.timestamps.size(); ++i) {
    std::int64_t v = 0;
    if (!parse_int(out.timestamps[i], v)) {
      integer_index = false;
    } else if (v != first + static_cast<std::int64_t>(i)) {
      throw IoError("integer timestamps must be consecutive (row " + std::to_string(i + 1) + ")");
    }
  }
  out.panel.time_offset = integer_index ? first : 0;
  return out;
}

void write_csv(const std::filesystem::path& path, const Panel& panel) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write dataset " + path.string());
  }
  out << "timestamp";
  for (Index j = 0; j < panel.num_series(); ++j) {
    out << ",s" << j;
  }
  out << '\n' << std::setprecision(17);
  for (Index i = 0; i < panel.length(); ++i) {
    out << panel.time_offset + i;
    for (Index j = 0; j < panel.num_series(); ++j) {
      out << ',' << panel.values(i, j);
    }
    out << '\n';
  }
  if (!out) {
    throw IoError("failed writing dataset " + path.string());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

}  // namespace mvcorr
