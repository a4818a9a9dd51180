#pragma once

#include "roughtfe/errors.hpp"
#include "roughtfe/frac_kernel.hpp"
#include "roughtfe/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace roughtfe {

// A d-dimensional path sampled on the grid nodes, stored node-major.
class StatePath {
 public:
  StatePath(GridSpec grid, int dim)
      : grid_(grid), dim_(dim), data_(grid.nodes() * static_cast<std::size_t>(dim), 0.0) {}
  StatePath(GridSpec grid, int dim, std::vector<double> data)
      : grid_(grid), dim_(dim), data_(std::move(data)) {
    if (data_.size() != grid_.nodes() * static_cast<std::size_t>(dim_))
      throw grid_mismatch_error("path data size does not match grid and dimension");
  }

  const GridSpec& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  std::size_t nodes() const noexcept { return grid_.nodes(); }

  double operator()(std::size_t i, int k) const noexcept { return data_[i * dim_ + k]; }
  double& operator()(std::size_t i, int k) noexcept { return data_[i * dim_ + k]; }

  Vector at(std::size_t i) const {
    Vector v(dim_);
    for (int k = 0; k < dim_; ++k) v(k) = data_[i * dim_ + k];
    return v;
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

 private:
  GridSpec grid_;
  int dim_;
  std::vector<double> data_;
};

// X^0(theta) on the grid.
struct DetPath {
  StatePath values;
  Vector theta;
};

// Y^0(theta) = d X^0 / d theta, a d x d_theta matrix per node.
class MatrixPath {
 public:
  MatrixPath(GridSpec grid, int rows, int cols)
      : grid_(grid), rows_(rows), cols_(cols),
        data_(grid.nodes() * static_cast<std::size_t>(rows * cols), 0.0) {}

  const GridSpec& grid() const noexcept { return grid_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }

  // Entry (k, u) at node i; column-major within a node.
  double operator()(std::size_t i, int k, int u) const noexcept {
    return data_[i * rows_ * cols_ + u * rows_ + k];
  }

  Matrix at(std::size_t i) const {
    Matrix m(rows_, cols_);
    for (int u = 0; u < cols_; ++u)
      for (int k = 0; k < rows_; ++k) m(k, u) = (*this)(i, k, u);
    return m;
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  GridSpec grid_;
  int rows_, cols_;
  std::vector<double> data_;
};

struct SensitivityPath {
  MatrixPath values;
  Vector theta;
};

// d^2 X^0 / d theta_u d theta_v: a d x d_theta x d_theta tensor per node,
// flattened as (k, u, v) -> k + d*(u + d_theta*v).
class TensorPath {
 public:
  TensorPath(GridSpec grid, int d, int dtheta)
      : grid_(grid), d_(d), p_(dtheta),
        data_(grid.nodes() * static_cast<std::size_t>(d * dtheta * dtheta), 0.0) {}

  const GridSpec& grid() const noexcept { return grid_; }
  int d() const noexcept { return d_; }
  int dtheta() const noexcept { return p_; }
  std::size_t stride() const noexcept { return static_cast<std::size_t>(d_ * p_ * p_); }

  double operator()(std::size_t i, int k, int u, int v) const noexcept {
    return data_[i * stride() + k + d_ * (u + p_ * v)];
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  GridSpec grid_;
  int d_, p_;
  std::vector<double> data_;
};

struct SecondSensitivityPath {
  TensorPath values;
  Vector theta;
};

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// CSV with header `t,x_1,...,x_d`, one row per node, 17 significant digits.
inline void write_path_csv(std::ostream& os, const StatePath& path) {
  os << "t";
  for (int k = 0; k < path.dim(); ++k) os << ",x_" << (k + 1);
  os << "\n";
  for (std::size_t i = 0; i < path.nodes(); ++i) {
    os << format_double(path.grid().node(i));
    for (int k = 0; k < path.dim(); ++k) os << "," << format_double(path(i, k));
    os << "\n";
  }
}

inline void write_path_csv(const std::string& file, const StatePath& path) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot open " + file + " for writing");
  write_path_csv(os, path);
}

// Reads a path written by write_path_csv. The grid is reconstructed from the
// last time stamp and the row count and must be uniform.
inline StatePath read_path_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("empty path CSV");
  int dim = 0;
  for (char c : line) dim += (c == ',');
  if (dim < 1 || line.rfind("t,", 0) != 0)
    throw std::invalid_argument("path CSV header must be t,x_1..x_d");
  std::vector<double> times, values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      const double v = std::stod(cell);
      if (col == 0) times.push_back(v);
      else values.push_back(v);
      ++col;
    }
    if (col != dim + 1) throw std::invalid_argument("path CSV row has wrong column count");
  }
  if (times.size() < 2 || times.front() != 0.0)
    throw std::invalid_argument("path CSV must start at t=0 and have at least two rows");
  GridSpec grid(times.back(), times.size() - 1);
  const double h = grid.step();
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - grid.node(i)) > 1e-9 * std::max(1.0, grid.horizon()) + 1e-12 * h)
      throw grid_mismatch_error("path CSV time stamps are not a uniform grid");
  return StatePath(grid, dim, std::move(values));
}

inline StatePath read_path_csv(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open " + file);
  return read_path_csv(is);
}

}  // namespace roughtfe
