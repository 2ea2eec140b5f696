#include "ncmest/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ncmest::csv {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

namespace {

double parse_cell(const std::string& cell, const std::string& path, int line, int col) {
  std::string t = cell;
  // trim
  const auto first = t.find_first_not_of(" \t\r");
  if (first == std::string::npos) t.clear();
  else t = t.substr(first, t.find_last_not_of(" \t\r") - first + 1);
  if (t.empty() || t == "NA" || t == "nan") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0') {
    std::ostringstream msg;
    msg << path << ":" << line << ": bad numeric cell '" << cell << "' (column " << col + 1
        << ")";
    throw std::runtime_error(msg.str());
  }
  return v;
}

std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, path, lineno, col++));
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": row has " << row.size() << " columns, expected "
          << rows.front().size();
      throw std::runtime_error(msg.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  return rows;
}

}  // namespace

Eigen::MatrixXd read_matrix(const std::string& path) {
  const auto rows = read_rows(path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

Eigen::VectorXd read_vector(const std::string& path) {
  const auto rows = read_rows(path);
  Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 1)
      throw std::runtime_error(path + ": expected one value per line");
    v[static_cast<Eigen::Index>(i)] = rows[i][0];
  }
  return v;
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& m, bool na_for_nan) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      if (na_for_nan && std::isnan(m(i, j))) out << "NA";
      else out << fmt(m(i, j));
    }
    out << '\n';
  }
}

void write_vector(const std::string& path, const Eigen::VectorXd& v) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << fmt(v[i]) << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace ncmest::csv
