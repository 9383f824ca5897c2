#ifndef MJPBRIDGE_DATASET_HPP
#define MJPBRIDGE_DATASET_HPP

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mjpbridge/bridge.hpp"

namespace mjpbridge {

/// Observations y_{t_1}, ..., y_{t_n} at strictly increasing times.
struct Dataset {
  std::vector<double> times;
  std::vector<Vector> observations;
  ObservationModel obs;
  std::vector<std::string> columns;  // observation column labels

  std::size_t size() const { return times.size(); }

  void validate() const {
    require(times.size() == observations.size(), "Dataset: one observation per time");
    require(!times.empty(), "Dataset: no observations");
    for (std::size_t i = 1; i < times.size(); ++i)
      require(times[i] > times[i - 1], "Dataset: times must be strictly increasing");
    for (const auto& y : observations) require(y.size() == obs.dimension(), "Dataset: observation length != d");
  }

  /// Observation i as an integer state (exact, full-state observations only).
  State state(std::size_t i) const {
    State x(static_cast<std::size_t>(observations[i].size()));
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::lround(observations[i][static_cast<Eigen::Index>(j)]);
    return x;
  }

  /// Header `time,<col>...`, one row per observation. Malformed input raises
  /// ConfigError naming the offending row and column.
  static Dataset read_csv(std::istream& in, std::optional<ObservationModel> obs = std::nullopt) {
    Dataset data;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("dataset: empty file");
    auto header = split(line);
    if (header.size() < 2 || trim(header[0]) != "time")
      throw ConfigError("dataset: header must start with 'time' followed by observation columns");
    for (std::size_t k = 1; k < header.size(); ++k) data.columns.push_back(trim(header[k]));
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (trim(line).empty()) continue;
      auto cells = split(line);
      if (cells.size() != header.size())
        throw ConfigError("dataset: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                          " columns, expected " + std::to_string(header.size()));
      Vector y(static_cast<Eigen::Index>(cells.size() - 1));
      for (std::size_t k = 0; k < cells.size(); ++k) {
        double value;
        try {
          std::size_t used = 0;
          const std::string cell = trim(cells[k]);
          value = std::stod(cell, &used);
          if (used != cell.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
          throw ConfigError("dataset: row " + std::to_string(row) + ", column " + std::to_string(k + 1) + " ('" +
                            (k == 0 ? std::string("time") : data.columns[k - 1]) + "') is not a number: '" +
                            cells[k] + "'");
        }
        if (k == 0)
          data.times.push_back(value);
        else
          y[static_cast<Eigen::Index>(k - 1)] = value;
      }
      data.observations.push_back(std::move(y));
    }
    const int d = static_cast<int>(data.columns.size());
    data.obs = obs ? *obs : ObservationModel::full(d);
    for (std::size_t i = 1; i < data.times.size(); ++i)
      if (!(data.times[i] > data.times[i - 1]))
        throw ConfigError("dataset: row " + std::to_string(i + 2) + " time is not strictly increasing");
    try {
      data.validate();
    } catch (const ContractViolation& e) {
      throw ConfigError(std::string("dataset: ") + e.what());
    }
    return data;
  }

  void write_csv(std::ostream& os) const {
    os << "time";
    for (const auto& c : columns) os << ',' << c;
    os << '\n';
    for (std::size_t i = 0; i < size(); ++i) {
      os << times[i];
      for (Eigen::Index j = 0; j < observations[i].size(); ++j) os << ',' << observations[i][j];
      os << '\n';
    }
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  }
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
};

}  // namespace mjpbridge

#endif
