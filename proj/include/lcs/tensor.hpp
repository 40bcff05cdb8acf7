#pragma once

#include <cstddef>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "lcs/errors.hpp"

namespace lcs {

using Shape = std::vector<int>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense n-dimensional array, row-major, with an optional gradient buffer.
// The scalar type is a template parameter: float is the compute type,
// double is instantiated for the finite-difference check mode.
template <typename S>
struct TensorT {
  Shape shape;
  std::vector<S> data;
  bool requires_grad = false;
  std::vector<S> grad;  // empty, or same length as data

  TensorT() = default;
  TensorT(Shape s, std::vector<S> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel(shape) != data.size())
      throw DimensionError("tensor: shape " + shape_str(shape) + " does not match " +
                           std::to_string(data.size()) + " values");
  }

  static TensorT zeros(Shape s) {
    std::size_t n = numel(s);
    return TensorT(std::move(s), std::vector<S>(n, S(0)));
  }

  static TensorT full(Shape s, S value) {
    std::size_t n = numel(s);
    return TensorT(std::move(s), std::vector<S>(n, value));
  }

  std::size_t size() const { return data.size(); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  // NCHW accessors for the 4-d case used by the conv stack.
  std::size_t index4(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w;
  }
  S& at4(int n, int c, int h, int w) { return data[index4(n, c, h, w)]; }
  S at4(int n, int c, int h, int w) const { return data[index4(n, c, h, w)]; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), S(0));
  }
  void zero_grad() {
    if (!grad.empty()) grad.assign(data.size(), S(0));
  }
  bool has_grad() const { return grad.size() == data.size(); }
};

template <typename S>
using VarT = std::shared_ptr<TensorT<S>>;

using Tensor = TensorT<float>;
using Var = VarT<float>;

template <typename S>
VarT<S> make_var(TensorT<S> t, bool requires_grad = false) {
  auto v = std::make_shared<TensorT<S>>(std::move(t));
  v->requires_grad = requires_grad;
  return v;
}

// Checks one axis of `got` against `want`, reporting the axis by name.
template <typename S>
void expect_axis(const TensorT<S>& got, int axis, int want, const char* op, const char* role) {
  if (axis >= got.ndim() || got.dim(axis) != want)
    throw DimensionError(std::string(op) + ": " + role + " axis " + std::to_string(axis) +
                         " expected " + std::to_string(want) + ", got shape " +
                         shape_str(got.shape));
}

template <typename S>
void expect_ndim(const TensorT<S>& got, int want, const char* op, const char* role) {
  if (got.ndim() != want)
    throw DimensionError(std::string(op) + ": " + role + " must have " + std::to_string(want) +
                         " dims, got shape " + shape_str(got.shape));
}

}  // namespace lcs
