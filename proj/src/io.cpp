#include "expdesign/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "expdesign/errors.hpp"

namespace expdesign::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(std::string_view field, double& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

// Lines with their 1-based numbers, blank lines dropped.
std::vector<std::pair<std::size_t, std::string_view>> content_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++number;
    if (!trim(line).empty()) out.emplace_back(number, line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

}  // namespace

NumericTable parse_numeric_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  const auto lines = content_lines(text);
  NumericTable table;
  if (lines.empty()) throw ParseError("no data rows", 1);

  std::size_t first = 0;
  {
    const auto fields = split_fields(lines[0].second);
    double v = 0.0;
    bool numeric = true;
    for (auto f : fields) numeric = numeric && parse_number(f, v);
    if (!numeric) {
      for (auto f : fields) table.header.emplace_back(f);
      first = 1;
    }
  }
  const std::size_t rows = lines.size() - first;
  if (rows == 0) throw ParseError("no data rows after the header", lines[0].first);
  const std::size_t cols =
      table.header.empty() ? split_fields(lines[first].second).size() : table.header.size();

  table.values.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& [number, line] = lines[first + r];
    const auto fields = split_fields(line);
    if (fields.size() != cols) {
      throw ParseError("line " + std::to_string(number) + ": expected " + std::to_string(cols) +
                           " fields, found " + std::to_string(fields.size()),
                       number);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!parse_number(fields[c], v)) {
        throw ParseError("line " + std::to_string(number) + ": field " + std::to_string(c + 1) +
                             " is not a number: '" + std::string(fields[c]) + "'",
                         number);
      }
      table.values(static_cast<Index>(r), static_cast<Index>(c)) = v;
    }
  }
  return table;
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  return parse_numeric_csv(read_text(path));
}

CovariateMatrix read_covariates(const std::filesystem::path& path) {
  return CovariateMatrix(read_numeric_csv(path).values);
}

Responses read_responses(const std::filesystem::path& path) {
  NumericTable t = read_numeric_csv(path);
  if (t.values.cols() != 1) {
    throw DimensionError("responses file must have one column, found " +
                         std::to_string(t.values.cols()));
  }
  return Responses(t.values.col(0));
}

std::string format_allocations(std::span<const Allocation> allocations) {
  std::string out;
  for (const Allocation& w : allocations) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i) out += ',';
      out += w[i] > 0 ? "1" : "-1";
    }
    out += '\n';
  }
  return out;
}

void write_allocations(const std::filesystem::path& path, std::span<const Allocation> allocations) {
  write_text(path, format_allocations(allocations));
}

std::vector<Allocation> parse_allocations(std::string_view text) {
  std::vector<Allocation> out;
  std::size_t width = 0;
  for (const auto& [number, line] : content_lines(text)) {
    const auto fields = split_fields(line);
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw ParseError("line " + std::to_string(number) + ": allocation length differs", number);
    }
    std::vector<Sign> signs;
    signs.reserve(fields.size());
    for (auto f : fields) {
      if (f == "1" || f == "+1") {
        signs.push_back(1);
      } else if (f == "-1") {
        signs.push_back(-1);
      } else {
        throw ParseError("line " + std::to_string(number) + ": allocation entry '" +
                             std::string(f) + "' is not +1 or -1",
                         number);
      }
    }
    try {
      out.emplace_back(std::move(signs));
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(number) + ": " + e.what(), number);
    }
  }
  if (out.empty()) throw ParseError("no allocations", 1);
  return out;
}

std::vector<Allocation> read_allocations(const std::filesystem::path& path) {
  return parse_allocations(read_text(path));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
  if (!out) throw UsageError("write failed for " + path.string());
}

}  // namespace expdesign::io
