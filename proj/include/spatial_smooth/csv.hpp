#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace spatial_smooth::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws IoError when missing.
  std::size_t column(const std::string& name) const;
};

/// Minimal RFC-4180 subset: comma separated, optional double quotes, first
/// line is the header. Blank lines are skipped.
Table read(const std::filesystem::path& path);

double parse_double(const std::string& field, const std::string& context);
long long parse_int(const std::string& field, const std::string& context);

/// Shortest round-trip representation of a double.
std::string format_double(double value);

/// Creates parent directories and writes `content` atomically enough for our
/// purposes (truncate + write). Throws IoError with the path on failure.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace spatial_smooth::csv
