#include "spad/nn/tensor.h"

#include <cmath>

#include "spad/base/error.h"

namespace spad::nn {

Tensor::Tensor(int rows, int cols, double fill)
    : rank_(2), rows_(rows), cols_(cols), data_(size_t(rows) * cols, fill) {
  if (rows < 0 || cols < 0) throw ShapeError("negative tensor dimension");
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) {
  size_t expected = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative tensor dimension");
    expected *= size_t(d);
  }
  if (expected != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape product " +
                     std::to_string(expected));
  }
  switch (shape.size()) {
    case 0:
      rank_ = 0;
      rows_ = cols_ = 1;
      break;
    case 1:
      rank_ = 1;
      rows_ = 1;
      cols_ = shape[0];
      break;
    case 2:
      rank_ = 2;
      rows_ = shape[0];
      cols_ = shape[1];
      break;
    default:
      throw ShapeError("tensors of rank > 2 are not supported");
  }
  data_ = std::move(data);
}

Tensor Tensor::Scalar(double v) {
  return Tensor(std::vector<int>{}, std::vector<double>{v});
}

Tensor Tensor::Vector(std::vector<double> data) {
  const int n = static_cast<int>(data.size());
  return Tensor({n}, std::move(data));
}

Tensor Tensor::ZerosLike(const Tensor &other) {
  Tensor t(other.rows_, other.cols_);
  t.rank_ = other.rank_;
  return t;
}

std::vector<int> Tensor::shape() const {
  switch (rank_) {
    case 0:
      return {};
    case 1:
      return {cols_};
    default:
      return {rows_, cols_};
  }
}

std::string Tensor::ShapeString() const {
  std::string s = "[";
  const auto dims = shape();
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::AddInPlace(const Tensor &o) {
  if (!SameShape(o)) {
    throw ShapeError("cannot add " + o.ShapeString() + " into " +
                     ShapeString());
  }
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace spad::nn
