#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "expdesign/core.hpp"

namespace expdesign::io {

struct NumericTable {
  std::vector<std::string> header;  // empty when the file has none
  Eigen::MatrixXd values;
};

/// Comma-separated numbers with an optional single header line, detected by a
/// non-numeric first row. Every data row must have the same field count.
/// Blank lines are skipped. ParseError carries the 1-based line number.
NumericTable parse_numeric_csv(std::string_view text);
NumericTable read_numeric_csv(const std::filesystem::path& path);

CovariateMatrix read_covariates(const std::filesystem::path& path);

/// Responses from a single-column file.
Responses read_responses(const std::filesystem::path& path);

/// One allocation per line, entries +1/-1.
std::string format_allocations(std::span<const Allocation> allocations);
void write_allocations(const std::filesystem::path& path, std::span<const Allocation> allocations);
std::vector<Allocation> parse_allocations(std::string_view text);
std::vector<Allocation> read_allocations(const std::filesystem::path& path);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace expdesign::io
