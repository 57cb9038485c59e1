#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace geoprof {

/// K dense matrices of identical shape in one contiguous row-major block;
/// matrix k starts at offset k * rows * cols.
template <typename T>
class MatrixBatch {
 public:
  MatrixBatch() = default;
  MatrixBatch(std::size_t count, std::size_t rows, std::size_t cols)
      : count_(count), rows_(rows), cols_(cols), data_(count * rows * cols, T{}) {}

  [[nodiscard]] std::size_t count() const { return count_; }
  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t stride() const { return rows_ * cols_; }

  [[nodiscard]] std::span<T> matrix(std::size_t k) {
    return {data_.data() + k * stride(), stride()};
  }
  [[nodiscard]] std::span<const T> matrix(std::size_t k) const {
    return {data_.data() + k * stride(), stride()};
  }

  T& operator()(std::size_t k, std::size_t i, std::size_t j) {
    return data_[k * stride() + i * cols_ + j];
  }
  const T& operator()(std::size_t k, std::size_t i, std::size_t j) const {
    return data_[k * stride() + i * cols_ + j];
  }

  [[nodiscard]] std::span<T> data() { return data_; }
  [[nodiscard]] std::span<const T> data() const { return data_; }

  /// Releases the storage, leaving an empty batch.
  std::vector<T> release() {
    count_ = rows_ = cols_ = 0;
    return std::move(data_);
  }
  static MatrixBatch adopt(std::vector<T> storage, std::size_t count, std::size_t rows,
                           std::size_t cols) {
    if (storage.size() != count * rows * cols) throw std::invalid_argument("batch size mismatch");
    MatrixBatch b;
    b.count_ = count;
    b.rows_ = rows;
    b.cols_ = cols;
    b.data_ = std::move(storage);
    return b;
  }

 private:
  std::size_t count_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
using CorrelationMatrixBatch = MatrixBatch<T>;

}  // namespace geoprof
