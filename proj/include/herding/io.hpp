#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

namespace herding::io {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

// One CSV row from already-formatted cells.
std::string csv_row(const std::vector<std::string>& cells);

void write_text(const std::filesystem::path& path, const std::string& text);

// Parses a CSV file of doubles with a header row.
struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};
Table read_csv(const std::filesystem::path& path);

}  // namespace herding::io
