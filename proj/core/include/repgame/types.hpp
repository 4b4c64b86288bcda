#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace repgame {

// Absolute tolerance for probability-vector checks.
inline constexpr double kProbTol = 1e-12;

// Dense row-major matrix, just enough for payoff tables and signal kernels.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}
  Matrix(int rows, int cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline bool is_probability_vector(std::span<const double> v, double tol = kProbTol) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

inline int sum_to_int(std::span<const int> v) {
  int s = 0;
  for (int x : v) s += x;
  return s;
}

}  // namespace repgame
