#pragma once

// Minimal CSV output. Every file starts with a "# schema: <tag>" line and a
// header; reals use %.17g so files round-trip exactly.

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace rfg {

std::string format_real(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::string_view schema, std::vector<std::string> header);

  template <class... Cells>
  void row(const Cells&... cells) {
    static_assert(sizeof...(Cells) > 0);
    std::vector<std::string> text{cell(cells)...};
    write(text);
  }
  void write(const std::vector<std::string>& cells);
  std::size_t columns() const { return header_.size(); }

 private:
  static std::string cell(double v) { return format_real(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(const char* s) { return s; }
  template <class I, class = std::enable_if_t<std::is_integral_v<I>>>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  std::ostream& out_;
  std::vector<std::string> header_;
};

/// Opens path for writing; throws std::runtime_error on failure.
std::ofstream open_output(const std::string& path);

/// Dense matrix, one row per line, preceded by the schema tag.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m, std::string_view schema);

}  // namespace rfg
