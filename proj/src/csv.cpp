#include "stancegraph/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "stancegraph/error.hpp"

namespace stancegraph::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void fail(std::string_view source, std::size_t line,
                       const std::string& problem) {
  std::ostringstream msg;
  msg << source << " line " << line << ": " << problem;
  throw InputError(msg.str());
}

}  // namespace

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

std::vector<Row> read(std::istream& in, std::span<const std::string_view> header,
                      std::string_view source) {
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  std::vector<Row> rows;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    auto fields = split_line(text);
    if (!have_header) {
      if (fields.size() != header.size()) {
        fail(source, line, "unexpected header");
      }
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (fields[i] != header[i]) {
          fail(source, line,
               "expected header column '" + std::string(header[i]) + "'");
        }
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      fail(source, line,
           "expected " + std::to_string(header.size()) + " fields, got " +
               std::to_string(fields.size()));
    }
    rows.push_back(Row{line, std::move(fields)});
  }
  if (!have_header) fail(source, line, "missing header");
  return rows;
}

std::vector<Row> read_file(const std::filesystem::path& path,
                           std::span<const std::string_view> header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return read(in, header, path.string());
}

std::int64_t parse_int(std::string_view text, std::string_view source,
                       std::size_t line, std::string_view field) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(source, line, "field '" + std::string(field) + "' is not an integer");
  }
  return value;
}

double parse_double(std::string_view text, std::string_view source,
                    std::size_t line, std::string_view field) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(source, line, "field '" + std::string(field) + "' is not a number");
  }
  return value;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

}  // namespace stancegraph::csv
