#include "cauchy/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <new>

namespace cauchy {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Work estimate below which a direct O(n*m) loop beats three transforms.
constexpr std::size_t kDirectLimit = 1u << 15;

}  // namespace

template <typename T>
T* FftwAllocator<T>::allocate(std::size_t n) {
  void* p = fftw_malloc(n * sizeof(T));
  if (p == nullptr && n != 0) throw std::bad_alloc();
  return static_cast<T*>(p);
}

template <typename T>
void FftwAllocator<T>::deallocate(T* p, std::size_t) noexcept {
  fftw_free(p);
}

template struct FftwAllocator<double>;
template struct FftwAllocator<std::complex<double>>;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

RealFft::RealFft(std::size_t n) : n_(n) {
  RealBuffer in(n);
  ComplexBuffer out(n / 2 + 1);
  auto* cin = reinterpret_cast<fftw_complex*>(out.data());
  r2c_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), cin, FFTW_ESTIMATE);
  c2r_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), cin, in.data(), FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(r2c_));
  fftw_destroy_plan(static_cast<fftw_plan>(c2r_));
}

std::shared_ptr<const RealFft> RealFft::get(std::size_t n) {
  static std::map<std::size_t, std::shared_ptr<const RealFft>> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::shared_ptr<const RealFft> plan(new RealFft(n));
  cache.emplace(n, plan);
  return plan;
}

void RealFft::forward(std::span<const double> in, ComplexBuffer& out) const {
  RealBuffer padded(n_, 0.0);
  std::copy_n(in.begin(), std::min(in.size(), n_), padded.begin());
  out.resize(spectrum_size());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), padded.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(const ComplexBuffer& in, RealBuffer& out) const {
  // c2r overwrites its input.
  ComplexBuffer scratch(in);
  out.resize(n_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (double& v : out) v *= scale;
}

void dct1_inplace(std::vector<double>& x) {
  if (x.size() < 2) return;
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    // FFTW_ESTIMATE planning leaves the array untouched.
    plan = fftw_plan_r2r_1d(static_cast<int>(x.size()), x.data(), x.data(), FFTW_REDFT00,
                            FFTW_ESTIMATE);
  }
  fftw_execute_r2r(plan, x.data(), x.data());
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

std::vector<double> linear_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t len = a.size() + b.size() - 1;
  std::vector<double> out(len, 0.0);
  if (a.size() * b.size() <= kDirectLimit) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
    }
    return out;
  }
  auto fft = RealFft::get(next_pow2(len));
  ComplexBuffer fa, fb;
  fft->forward(a, fa);
  fft->forward(b, fb);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  RealBuffer res;
  fft->inverse(fa, res);
  std::copy_n(res.begin(), len, out.begin());
  return out;
}

WindowConvolver::WindowConvolver(std::size_t radius, std::span<const double> kernel_half)
    : radius_(radius) {
  // Offsets beyond 2*radius never connect two sites of the window.
  kr_ = std::min(kernel_half.empty() ? 0 : kernel_half.size() - 1, 2 * radius);
  kernel_full_.assign(2 * kr_ + 1, 0.0);
  for (std::size_t j = 0; j <= kr_; ++j) {
    kernel_full_[kr_ + j] = kernel_half[j];
    kernel_full_[kr_ - j] = kernel_half[j];
  }
  if (width() * kernel_full_.size() > kDirectLimit) {
    fft_ = RealFft::get(next_pow2(width() + kernel_full_.size() - 1));
    fft_->forward(kernel_full_, kernel_spec_);
  }
}

void WindowConvolver::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t w = width();
  if (!fft_) {
    // out[x] = sum_y in[y] k(x - y); x, y are window indices.
    const auto kr = static_cast<std::ptrdiff_t>(kr_);
    for (std::size_t x = 0; x < w; ++x) {
      const auto xi = static_cast<std::ptrdiff_t>(x);
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, xi - kr);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w) - 1, xi + kr);
      double s = 0.0;
      for (std::ptrdiff_t y = lo; y <= hi; ++y) s += in[y] * kernel_full_[xi - y + kr];
      out[x] = s;
    }
    return;
  }
  ComplexBuffer spec;
  fft_->forward(in, spec);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= kernel_spec_[i];
  RealBuffer res;
  fft_->inverse(spec, res);
  for (std::size_t x = 0; x < w; ++x) {
    const double v = res[x + kr_];
    out[x] = v > 0.0 ? v : 0.0;  // transform round-off around zero
  }
}

}  // namespace cauchy
