#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace malclass::csv {

using Row = std::vector<std::string>;

/// Quotes a field only when it contains a comma, quote, or line break.
std::string escape(std::string_view field);

std::string join(const Row& fields);

/// Splits one CSV record; double quotes inside quoted fields are escaped by doubling.
Row split(std::string_view line);

/// Reads a whole CSV file. The first record is returned as the header.
struct Table {
  Row header;
  std::vector<Row> rows;
};

/// Throws Error(MissingArtifact) if the file does not exist and Error(IoFailure) when
/// the header does not match `expected_header` (skipped when empty).
Table read_file(const std::filesystem::path& path, const Row& expected_header = {});

/// Writes with '\n' line endings; throws Error(IoFailure).
void write_file(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

}  // namespace malclass::csv
