#pragma once

#include <cstddef>
#include <new>
#include <string>
#include <vector>

namespace tlsr::nn {

/// Fixed 64-byte alignment. Eigen's vectorised reductions peel a different
/// scalar head depending on the address, so malloc's 16-byte guarantee would
/// make low bits depend on heap layout.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

/// NCHW shape; fully-connected activations use (batch, features, 1, 1).
struct Shape {
  int n = 0;
  int c = 0;
  int h = 1;
  int w = 1;

  std::size_t numel() const { return static_cast<std::size_t>(n) * c * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

struct Tensor {
  Shape shape;
  Buffer data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.numel(), fill) {}

  std::size_t numel() const { return data.size(); }
  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape.c + c) * shape.h + h) * shape.w + w;
  }
  double& at(int n, int c, int h, int w) { return data[offset(n, c, h, w)]; }
  double at(int n, int c, int h, int w) const { return data[offset(n, c, h, w)]; }

  double* sample(int n) { return data.data() + static_cast<std::size_t>(n) * shape.c * shape.plane(); }
  const double* sample(int n) const { return data.data() + static_cast<std::size_t>(n) * shape.c * shape.plane(); }

  /// Same buffer, new shape with identical element count.
  Tensor reshaped(Shape s) const;
  void fill(double v);
  bool all_finite() const;
};

/// Trainable array with its gradient slot (same shape as the value).
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape) {}
};

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace tlsr::nn
