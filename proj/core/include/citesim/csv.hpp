#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citesim::csv {

// Comma-separated text with a mandatory header row, UTF-8, Unix newlines.
// No quoting: every field is an integer, a decimal number, or empty.

class Reader {
 public:
  Reader(const std::filesystem::path& path, const std::vector<std::string>& expected_header);

  // Advances to the next data row; returns false at end of file.
  bool next();

  // 1-based line number of the current row (header is line 1).
  std::size_t line_number() const { return line_; }

  std::size_t field_count() const { return fields_.size(); }
  std::string_view field(std::size_t i) const { return fields_[i]; }

  std::int64_t int_field(std::size_t i) const;
  std::optional<std::int64_t> optional_int_field(std::size_t i) const;
  double double_field(std::size_t i) const;
  std::optional<double> optional_double_field(std::size_t i) const;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::string line_buf_;
  std::vector<std::string_view> fields_;
  std::size_t line_ = 0;
  std::size_t expected_fields_ = 0;
};

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

  Writer& field(std::int64_t v);
  Writer& field(double v);  // shortest round-trip representation
  Writer& field(std::string_view v);
  Writer& empty_field();
  void end_row();

 private:
  std::ofstream out_;
  bool row_open_ = false;
  void sep();
};

// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

}  // namespace citesim::csv
