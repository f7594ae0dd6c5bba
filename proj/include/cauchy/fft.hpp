#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace cauchy {

template <typename T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <typename U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n);
  void deallocate(T* p, std::size_t) noexcept;
  template <typename U>
  bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

using RealBuffer = std::vector<double, FftwAllocator<double>>;
using ComplexBuffer = std::vector<std::complex<double>, FftwAllocator<std::complex<double>>>;

/// Real-to-complex transform of a fixed length, backed by FFTW.
///
/// Plans are created once per size and shared; execution is thread-safe as
/// long as each caller brings its own buffers (allocated through RealBuffer /
/// ComplexBuffer so that alignment matches the plan).
class RealFft {
 public:
  static std::shared_ptr<const RealFft> get(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

  /// `in` is zero-padded to size(); the spectrum is unscaled.
  void forward(std::span<const double> in, ComplexBuffer& out) const;
  /// Inverse transform including the 1/n normalisation. `in` is preserved.
  void inverse(const ComplexBuffer& in, RealBuffer& out) const;

  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

 private:
  explicit RealFft(std::size_t n);
  std::size_t n_;
  void* r2c_ = nullptr;
  void* c2r_ = nullptr;
};

std::size_t next_pow2(std::size_t n);

/// Type-I discrete cosine transform (FFTW REDFT00), computed in place:
/// y_j = x_0 + (-1)^j x_{n-1} + 2 sum_{k=1}^{n-2} x_k cos(pi j k / (n - 1)).
void dct1_inplace(std::vector<double>& x);

/// Full linear convolution, direct for small inputs and FFT-based otherwise.
std::vector<double> linear_convolve(std::span<const double> a, std::span<const double> b);

/// Applies out(x) = sum_y in(y) k(x - y) for x, y in a fixed centred window
/// [-radius, radius], with a symmetric kernel k supported on [-kr, kr].
/// The kernel spectrum is prepared once, so repeated layers are cheap.
/// Inputs and kernel are nonnegative; transform round-off below zero is clipped.
class WindowConvolver {
 public:
  /// `kernel[j]` is k(j) for j = 0..kr (symmetric extension implied).
  WindowConvolver(std::size_t radius, std::span<const double> kernel_half);

  std::size_t radius() const noexcept { return radius_; }
  std::size_t width() const noexcept { return 2 * radius_ + 1; }
  void apply(std::span<const double> in, std::span<double> out) const;

 private:
  std::size_t radius_;
  std::size_t kr_;
  std::vector<double> kernel_full_;  // k(-kr..kr), used on the direct path
  std::shared_ptr<const RealFft> fft_;
  ComplexBuffer kernel_spec_;
};

}  // namespace cauchy
