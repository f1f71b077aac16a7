#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace naraim {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& dims);
std::string shape_string(const Shape& dims);

// Dense row-major f64 tensor. dims is never empty and product(dims) ==
// data.size(); a scalar is dims {1}.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape dims, double fill = 0.0);
  Tensor(Shape dims, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // The single value of a size-1 tensor.
  double item() const;

  bool all_finite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape dims_;
  std::vector<double> data_;
};

// Named parameter tensors. std::map keeps iteration sorted by key.
using ParamTree = std::map<std::string, Tensor>;

ParamTree zeros_like(const ParamTree& tree);
double max_abs_difference(const Tensor& a, const Tensor& b);

// max over entries of |a-b| / max(|a|, |b|, floor)
double max_relative_error(const ParamTree& a, const ParamTree& b, double floor = 1e-8);

}  // namespace naraim
