#include "citesim/csv.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

#include "citesim/corpus.hpp"

namespace citesim::csv {

namespace {

void split_line(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace

Reader::Reader(const std::filesystem::path& path, const std::vector<std::string>& expected_header)
    : path_(path), in_(path) {
  if (!in_) throw std::runtime_error("cannot open " + path.string());
  if (!std::getline(in_, line_buf_)) {
    throw MalformedRow(path.string() + ": missing header row");
  }
  ++line_;
  split_line(strip_cr(line_buf_), fields_);
  expected_fields_ = expected_header.size();
  if (fields_.size() != expected_fields_) {
    throw MalformedRow(path.string() + ": header has " + std::to_string(fields_.size()) +
                       " columns, expected " + std::to_string(expected_fields_));
  }
  for (std::size_t i = 0; i < expected_fields_; ++i) {
    if (fields_[i] != expected_header[i]) {
      throw MalformedRow(path.string() + ": header column " + std::to_string(i + 1) + " is '" +
                         std::string(fields_[i]) + "', expected '" + expected_header[i] + "'");
    }
  }
}

bool Reader::next() {
  while (std::getline(in_, line_buf_)) {
    ++line_;
    std::string_view line = strip_cr(line_buf_);
    if (line.empty()) continue;  // tolerate a trailing blank line
    split_line(line, fields_);
    if (fields_.size() != expected_fields_) {
      throw MalformedRow(path_.string() + ":" + std::to_string(line_) + ": expected " +
                         std::to_string(expected_fields_) + " columns, got " +
                         std::to_string(fields_.size()));
    }
    return true;
  }
  return false;
}

std::int64_t Reader::int_field(std::size_t i) const {
  const auto v = optional_int_field(i);
  if (!v) {
    throw MalformedRow(path_.string() + ":" + std::to_string(line_) + ": column " +
                       std::to_string(i + 1) + " must not be empty");
  }
  return *v;
}

std::optional<std::int64_t> Reader::optional_int_field(std::size_t i) const {
  const std::string_view s = fields_[i];
  if (s.empty()) return std::nullopt;
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw MalformedRow(path_.string() + ":" + std::to_string(line_) + ": bad integer '" +
                       std::string(s) + "' in column " + std::to_string(i + 1));
  }
  return value;
}

double Reader::double_field(std::size_t i) const {
  const auto v = optional_double_field(i);
  if (!v) {
    throw MalformedRow(path_.string() + ":" + std::to_string(line_) + ": column " +
                       std::to_string(i + 1) + " must not be empty");
  }
  return *v;
}

std::optional<double> Reader::optional_double_field(std::size_t i) const {
  const std::string_view s = fields_[i];
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw MalformedRow(path_.string() + ":" + std::to_string(line_) + ": bad number '" +
                       std::string(s) + "' in column " + std::to_string(i + 1));
  }
  return value;
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void Writer::sep() {
  if (row_open_) out_ << ',';
  row_open_ = true;
}

Writer& Writer::field(std::int64_t v) {
  sep();
  out_ << v;
  return *this;
}

Writer& Writer::field(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

Writer& Writer::field(std::string_view v) {
  sep();
  out_ << v;
  return *this;
}

Writer& Writer::empty_field() {
  sep();
  return *this;
}

void Writer::end_row() {
  out_ << '\n';
  row_open_ = false;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

}  // namespace citesim::csv
