#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace zsmg {

// Dense row-major matrix of doubles. The payload vector is public so that
// bulk initialization and serialization can iterate it directly; the shape
// is fixed at construction.
class Mat {
 public:
  std::vector<double> a;

  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : a(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill),
        rows_(rows),
        cols_(cols) {
    assert(rows >= 0 && cols >= 0);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return a.empty(); }

  double& operator()(int i, int j) {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return a[static_cast<std::size_t>(i) * cols_ + j];
  }
  double operator()(int i, int j) const {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return a[static_cast<std::size_t>(i) * cols_ + j];
  }

  // Pointer to the start of row i; rows are contiguous.
  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols_; }
  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
};

}  // namespace zsmg
