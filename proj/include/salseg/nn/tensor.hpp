#pragma once

#include <cstddef>
#include <cstdlib>
#include <new>
#include <vector>

#include "salseg/core/errors.hpp"

namespace salseg {

// 64-byte-aligned allocator. Keeping every tensor base at one alignment phase
// makes Eigen's vectorized kernels take the same code path on every run, so
// reductions accumulate in a reproducible order regardless of heap state.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{alignment}));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t{alignment});
  }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

template <typename S>
using AlignedVec = std::vector<S, AlignedAllocator<S>>;

// Dense NCHW tensor. Channel planes are contiguous, which lets the conv ops
// map them straight into GEMM operands without copies.
template <typename S>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  AlignedVec<S> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, S fill = S{}) { reshape(n_, c_, h_, w_, fill); }

  void reshape(int n_, int c_, int h_, int w_, S fill = S{}) {
    if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0) throw ValidationError("Tensor: negative shape");
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    v.assign(static_cast<std::size_t>(n) * c * h * w, fill);
  }

  // Resize without clearing when the shape already matches.
  void ensure_shape(int n_, int c_, int h_, int w_) {
    if (n == n_ && c == c_ && h == h_ && w == w_) return;
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    v.resize(static_cast<std::size_t>(n) * c * h * w);
  }

  std::size_t size() const { return v.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }

  S* plane(int n_, int c_) { return v.data() + (static_cast<std::size_t>(n_) * c + c_) * plane_size(); }
  const S* plane(int n_, int c_) const {
    return v.data() + (static_cast<std::size_t>(n_) * c + c_) * plane_size();
  }

  S& at(int n_, int c_, int h_, int w_) { return plane(n_, c_)[static_cast<std::size_t>(h_) * w + w_]; }
  const S& at(int n_, int c_, int h_, int w_) const {
    return plane(n_, c_)[static_cast<std::size_t>(h_) * w + w_];
  }

  void fill(S value) { std::fill(v.begin(), v.end(), value); }

  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

}  // namespace salseg
