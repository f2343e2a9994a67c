#ifndef KYLE_CSV_HPP
#define KYLE_CSV_HPP

// RFC-4180 CSV emission. Floats are written with 17 significant digits and a
// '.' decimal separator regardless of locale, so files round-trip exactly.

#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kyle {

std::string format_double(double x);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(std::initializer_list<std::string_view> names);
  void row(std::initializer_list<double> values);
  void row(std::span<const double> values);
  void cells(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
};

}  // namespace kyle

#endif  // KYLE_CSV_HPP
