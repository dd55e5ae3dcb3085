// CSV tables and byte-stable number formatting.
#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace bandlab::io {

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_int(long long v) { return std::to_string(v); }
inline std::string format_uint(unsigned long long v) { return std::to_string(v); }

// Plain-text table; serialized with a schema comment line above the header
// row, '\n' line endings, full round-trip numeric precision.
struct CsvTable {
  std::string schema;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != columns.size())
      throw std::logic_error("CsvTable: row width does not match header");
    rows.push_back(std::move(row));
  }

  std::string serialize() const {
    std::string out = "# schema: " + schema + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      out += columns[i];
      out += i + 1 == columns.size() ? '\n' : ',';
    }
    for (const auto& row : rows)
      for (std::size_t i = 0; i < row.size(); ++i) {
        out += row[i];
        out += i + 1 == row.size() ? '\n' : ',';
      }
    return out;
  }
};

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace bandlab::io
