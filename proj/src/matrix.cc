// SPDX-License-Identifier: Apache-2.0
#include "xling/matrix.h"

#include <algorithm>
#include <cmath>

#include "xling/error.h"

namespace xling {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    Fail(ErrorKind::kDimensionMismatch, "dimension mismatch: matrix data");
}

void Matrix::SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool Matrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void AddMatVec(const Matrix &m, std::span<const double> x,
               std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
}

void AddMatTVec(const Matrix &m, std::span<const double> x,
                std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c] * xr;
  }
}

void AddOuter(std::span<const double> a, std::span<const double> b,
              double scale, Matrix *m) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double ar = a[r] * scale;
    if (ar == 0.0) continue;
    auto row = m->row(r);
    for (std::size_t c = 0; c < b.size(); ++c) row[c] += ar * b[c];
  }
}

}  // namespace xling
