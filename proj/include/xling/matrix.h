// SPDX-License-Identifier: Apache-2.0
/**
 * @file   matrix.h
 * @brief  Dense row-major matrix of doubles.
 */
#ifndef XLING_MATRIX_H_
#define XLING_MATRIX_H_

#include <cstddef>
#include <span>
#include <vector>

namespace xling {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  // Takes ownership of row-major data; data.size() must equal rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double &operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void SetZero();
  bool AllFinite() const;

  friend bool operator==(const Matrix &a, const Matrix &b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out += m * x
void AddMatVec(const Matrix &m, std::span<const double> x,
               std::span<double> out);
// out += m^T * x
void AddMatTVec(const Matrix &m, std::span<const double> x,
                std::span<double> out);
// m += scale * a * b^T
void AddOuter(std::span<const double> a, std::span<const double> b,
              double scale, Matrix *m);

}  // namespace xling

#endif  // XLING_MATRIX_H_
