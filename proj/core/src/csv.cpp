#include "kyle/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace kyle {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvWriter::header(std::initializer_list<std::string_view> names) {
  bool first = true;
  for (auto n : names) {
    if (!first) os_ << ',';
    os_ << csv_escape(n);
    first = false;
  }
  os_ << "\r\n";
}

void CsvWriter::row(std::initializer_list<double> values) {
  row(std::span<const double>(values.begin(), values.size()));
}

void CsvWriter::row(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os_ << ',';
    os_ << format_double(values[i]);
  }
  os_ << "\r\n";
}

void CsvWriter::cells(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os_ << ',';
    os_ << csv_escape(fields[i]);
  }
  os_ << "\r\n";
}

}  // namespace kyle
