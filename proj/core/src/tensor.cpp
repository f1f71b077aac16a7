#include "naraim/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "naraim/errors.hpp"

namespace naraim {

std::size_t shape_size(const Shape& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string shape_string(const Shape& dims) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out << ',';
    out << dims[i];
  }
  out << ']';
  return out.str();
}

namespace {

void validate_dims(const Shape& dims) {
  if (dims.empty()) throw ShapeError("tensor: dims must be non-empty");
  for (auto d : dims) {
    if (d == 0) throw ShapeError("tensor: zero-sized dimension in " + shape_string(dims));
  }
}

}  // namespace

Tensor::Tensor() : dims_{1}, data_(1, 0.0) {}

Tensor::Tensor(Shape dims, double fill) : dims_(std::move(dims)) {
  validate_dims(dims_);
  data_.assign(shape_size(dims_), fill);
}

Tensor::Tensor(Shape dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
  validate_dims(dims_);
  if (shape_size(dims_) != data_.size()) {
    throw ShapeError("tensor: dims " + shape_string(dims_) + " do not match " +
                     std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("tensor: ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

double Tensor::item() const {
  if (data_.size() != 1) throw ContractError("tensor: item() on " + shape_string(dims_));
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ParamTree zeros_like(const ParamTree& tree) {
  ParamTree out;
  for (const auto& [name, t] : tree) out.emplace(name, Tensor(t.dims()));
  return out;
}

double max_abs_difference(const Tensor& a, const Tensor& b) {
  if (a.dims() != b.dims()) {
    throw ShapeError("max_abs_difference: " + shape_string(a.dims()) + " vs " + shape_string(b.dims()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double max_relative_error(const ParamTree& a, const ParamTree& b, double floor) {
  double worst = 0.0;
  for (const auto& [name, ta] : a) {
    auto it = b.find(name);
    if (it == b.end()) throw ContractError("max_relative_error: missing key " + name);
    const Tensor& tb = it->second;
    if (ta.dims() != tb.dims()) throw ShapeError("max_relative_error: dims differ for " + name);
    for (std::size_t i = 0; i < ta.size(); ++i) {
      const double scale = std::max({std::abs(ta[i]), std::abs(tb[i]), floor});
      worst = std::max(worst, std::abs(ta[i] - tb[i]) / scale);
    }
  }
  return worst;
}

}  // namespace naraim
