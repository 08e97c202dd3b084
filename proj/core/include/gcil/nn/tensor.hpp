#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcil::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor2(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor2 from_data(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor2 identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_string() const;

  Tensor2& operator+=(const Tensor2& o);
  bool operator==(const Tensor2& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
/// transpose(a) * b
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
/// a * transpose(b)
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
Tensor2 transpose(const Tensor2& a);

/// a * b where every output element is accumulated in ascending order of
/// its addends, so the result does not depend on the order of the inner
/// index. Used where permutation of graph nodes must be bit-exact.
Tensor2 matmul_canonical(const Tensor2& a, const Tensor2& b);

/// Sum of values in ascending order (order-independent result).
double canonical_sum(std::span<double> values);

void require_shape(bool ok, const std::string& what);

}  // namespace gcil::nn
