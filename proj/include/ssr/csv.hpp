#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ssr::csv {

/// 12 significant digits, scientific notation, independent of the C locale.
/// Infinities print as "inf"/"-inf", NaN as "nan".
std::string format(double value);

/// Shortest text that parses back to the same double.
std::string format_exact(double value);

/// Writes rows of already-formatted cells joined by commas.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& columns) { row(columns); }
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& out_;
};

}  // namespace ssr::csv
