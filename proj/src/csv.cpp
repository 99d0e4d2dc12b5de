#include "rfg/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace rfg {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out, std::string_view schema, std::vector<std::string> header)
    : out_(out), header_(std::move(header)) {
  out_ << "# schema: " << schema << '\n';
  write(header_);
}

void CsvWriter::write(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) {
    throw std::logic_error("CsvWriter: row has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(header_.size()));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m, std::string_view schema) {
  out << "# schema: " << schema << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_real(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace rfg
