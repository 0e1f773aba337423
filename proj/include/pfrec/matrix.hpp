#ifndef PFREC_MATRIX_HPP
#define PFREC_MATRIX_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace pfrec {

// Dense row-major matrix of doubles. Just enough for variational parameter
// blocks and posterior-mean tables; rows are contiguous so per-user and
// per-item slices come out as spans.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::uint32_t rows, std::uint32_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, fill) {}

  std::uint32_t rows() const { return rows_; }
  std::uint32_t cols() const { return cols_; }

  double& operator()(std::uint32_t r, std::uint32_t c) {
    return data_[std::size_t(r) * cols_ + c];
  }
  double operator()(std::uint32_t r, std::uint32_t c) const {
    return data_[std::size_t(r) * cols_ + c];
  }

  std::span<double> row(std::uint32_t r) {
    return {data_.data() + std::size_t(r) * cols_, cols_};
  }
  std::span<const double> row(std::uint32_t r) const {
    return {data_.data() + std::size_t(r) * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::uint32_t rows_ = 0;
  std::uint32_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace pfrec

#endif
