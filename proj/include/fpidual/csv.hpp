#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "fpidual/types.hpp"

namespace fpidual {

inline std::vector<std::vector<double>> read_csv_numeric(const std::string& path,
                                                         bool skip_header = false) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open csv: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("non-numeric cell '" + cell + "' in " + path);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("empty csv: " + path);
  return rows;
}

// one atom per row, final column = weight
inline DiscreteMeasure read_measure_csv(const std::string& path) {
  auto rows = read_csv_numeric(path);
  size_t cols = rows[0].size();
  if (cols < 2) throw std::invalid_argument("measure csv needs point columns + weight: " + path);
  Mat pts(rows.size(), cols - 1);
  Vec w(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      throw std::invalid_argument("ragged csv row in " + path);
    for (size_t j = 0; j + 1 < cols; ++j) pts(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
    w(Eigen::Index(i)) = rows[i][cols - 1];
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

inline void write_measure_csv(const std::string& path, const DiscreteMeasure& m) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write csv: " + path);
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    for (Eigen::Index j = 0; j < m.dim(); ++j) out << m.points(i, j) << ',';
    out << m.weights(i) << '\n';
  }
}

inline Mat read_matrix_csv(const std::string& path) {
  auto rows = read_csv_numeric(path);
  Mat out(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw std::invalid_argument("ragged csv row in " + path);
    for (size_t j = 0; j < rows[i].size(); ++j)
      out(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  }
  return out;
}

inline void write_matrix_csv(const std::string& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write csv: " + path);
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << m(i, j) << (j + 1 == m.cols() ? '\n' : ',');
  }
}

// round-trips with header `atom_index,value`
inline GridFunction read_gridfunction_csv(const std::string& path) {
  auto rows = read_csv_numeric(path, /*skip_header=*/true);
  Vec v(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 2)
      throw std::invalid_argument("gridfunction csv expects atom_index,value: " + path);
    v(Eigen::Index(rows[i][0])) = rows[i][1];
  }
  return GridFunction(std::move(v));
}

inline void write_gridfunction_csv(const std::string& path, const GridFunction& f) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write csv: " + path);
  out << "atom_index,value\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < f.size(); ++i) out << i << ',' << f.values(i) << '\n';
}

}  // namespace fpidual
