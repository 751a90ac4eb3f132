#ifndef SPAD_NN_TENSOR_H_
#define SPAD_NN_TENSOR_H_

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace spad::nn {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Dense row-major tensor of rank 0, 1 or 2. Rank-1 tensors behave as a single
// row when viewed as a matrix.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor Scalar(double v);
  static Tensor Vector(std::vector<double> data);
  static Tensor ZerosLike(const Tensor &other);

  std::vector<int> shape() const;
  int rank() const { return rank_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool SameShape(const Tensor &o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  std::string ShapeString() const;

  double &operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double &operator()(int r, int c) { return data_[size_t(r) * cols_ + c]; }
  double operator()(int r, int c) const {
    return data_[size_t(r) * cols_ + c];
  }
  double scalar() const { return data_.at(0); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double> &storage() { return data_; }

  MatrixMap matrix() { return MatrixMap(data_.data(), rows_, cols_); }
  ConstMatrixMap matrix() const {
    return ConstMatrixMap(data_.data(), rows_, cols_);
  }

  void Fill(double v);
  void AddInPlace(const Tensor &o);
  bool AllFinite() const;
  // Same shape and bitwise-equal values.
  bool operator==(const Tensor &o) const = default;

 private:
  int rank_ = 2;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace spad::nn

#endif  // SPAD_NN_TENSOR_H_
