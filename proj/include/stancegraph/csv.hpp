#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stancegraph::csv {

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_line(std::string_view line);

// Reads a CSV stream whose first line must equal the expected header
// (compared field by field after trimming). Every row must have the header's
// width. Errors are InputError naming `source` and the line number.
std::vector<Row> read(std::istream& in, std::span<const std::string_view> header,
                      std::string_view source);
std::vector<Row> read_file(const std::filesystem::path& path,
                           std::span<const std::string_view> header);

std::int64_t parse_int(std::string_view text, std::string_view source,
                       std::size_t line, std::string_view field);
double parse_double(std::string_view text, std::string_view source,
                    std::size_t line, std::string_view field);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace stancegraph::csv
