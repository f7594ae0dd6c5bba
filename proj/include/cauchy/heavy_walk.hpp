#pragma once

// Exact pmf machinery for symmetric increments in the Cauchy domain of
// attraction: the step law, n-step distributions by convolution, scaling
// constants a_n, and local-limit diagnostics.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cauchy {

struct SlowlyVarying {
  enum class Kind { constant, log_power };
  Kind kind = Kind::constant;
  double exponent = 0.0;
};

/// Symmetric, finitely supported step distribution on [-X_max, X_max].
///
/// Only the nonnegative half is stored; prob(-k) == prob(k) by construction.
class IncrementLaw {
 public:
  IncrementLaw(std::vector<double> half_probs, double tail_constant, SlowlyVarying sv);

  std::int64_t support_radius() const noexcept { return static_cast<std::int64_t>(half_.size()) - 1; }
  double prob(std::int64_t k) const noexcept;
  /// P(S_1 = k) for k = 0..support_radius().
  std::span<const double> half() const noexcept { return half_; }
  /// P(|S_1| > a), zero for a >= support_radius().
  double tail(std::int64_t a) const noexcept;
  /// L(k) = k * P(|S_1| > k).
  double slowly_varying_value(std::int64_t k) const noexcept { return static_cast<double>(k) * tail(k); }
  double tail_constant() const noexcept { return c_; }
  const SlowlyVarying& slowly_varying() const noexcept { return sv_; }
  /// Stable identifier used to key caches and output files.
  std::string fingerprint() const;

 private:
  std::vector<double> half_;
  std::vector<double> tail_;  // tail_[a] = P(|S_1| > a)
  double c_;
  SlowlyVarying sv_;
};

/// probs(+-k) = c k^-2 for 1 <= k <= X_max, probs(0) = 0.
IncrementLaw build_canonical_law(std::int64_t x_max);

/// probs(+-k) proportional to k^-2 log(e + k)^exponent; a law with a
/// non-constant slowly varying part.
IncrementLaw build_log_power_law(std::int64_t x_max, double exponent);

/// Distribution of S_n restricted to [-radius, radius].
struct NStepPmf {
  std::int64_t n = 0;
  std::int64_t window_radius = 0;
  std::int64_t radius = 0;  // min(window_radius, n * X_max)
  std::vector<double> probs;  // probs[k + radius] = P(S_n = k)
  double truncation_loss = 0.0;

  double prob(std::int64_t k) const noexcept {
    return (k < -radius || k > radius) ? 0.0 : probs[static_cast<std::size_t>(k + radius)];
  }
  double mass() const;
};

/// Binary-doubling convolution; mass leaving the window is accumulated in
/// truncation_loss and never renormalised away. Exact when
/// window_radius >= n * X_max.
NStepPmf n_step_pmf(const IncrementLaw& law, std::int64_t n, std::int64_t window_radius);

/// One-step convolution p -> p * law restricted to the same window.
NStepPmf step_once(const IncrementLaw& law, const NStepPmf& pmf);

/// Pmf of S_n mod ring_size, read back on |k| < ring_size / 2: one transform
/// pair. Equal to P(S_n = k) when ring_size > 2 n X_max; otherwise each entry
/// also carries the aliased mass sum_{j != 0} P(S_n = k + j ring_size).
NStepPmf ring_pmf(const IncrementLaw& law, std::int64_t n, std::size_t ring_size);

/// Ring used by the law-level diagnostics below: exact when 2 n X_max + 2 <=
/// 64 (window + 1), else 64 (window + 1) sites, which keeps the aliased share
/// of P(S_n = k) below about 2 (k / ring)^2 on the window.
std::size_t diagnostic_ring_size(const IncrementLaw& law, std::int64_t n, std::int64_t window_radius);

void write_pmf(std::ostream& os, const NStepPmf& pmf, std::int64_t x_max);
NStepPmf read_pmf(std::istream& is);

struct ScalingSequence {
  std::vector<std::int64_t> a;  // a[n], index 0 unused
  std::vector<double> phi;      // phi[n] = a[n] / n

  std::int64_t n_max() const noexcept { return static_cast<std::int64_t>(a.size()) - 1; }
  std::int64_t at(std::int64_t n) const { return a.at(static_cast<std::size_t>(n)); }
};

/// a_n = smallest positive integer a with n P(|S_1| > a) <= 1.
std::int64_t scaling_constant(const IncrementLaw& law, std::int64_t n);
ScalingSequence scaling_constants(const IncrementLaw& law, std::int64_t n_max);

/// Characteristic function of the step law periodised on the ring Z_M,
/// phi_j = E[cos(2 pi j S_1 / M)] for j = 0..M/2.
class CharacteristicGrid {
 public:
  CharacteristicGrid(const IncrementLaw& law, std::size_t ring_size);

  std::size_t ring_size() const noexcept { return m_; }
  std::span<const double> values() const noexcept { return phi_; }
  /// sum_k P(S_n = k M): the return probability P(S_n = 0) up to aliasing.
  double return_probability(std::int64_t n) const;

 private:
  std::size_t m_;
  std::vector<double> phi_;
};

/// Ring size used for spectral return probabilities at step n.
std::size_t spectral_ring_size(const IncrementLaw& law, std::int64_t n);

/// a_n P(S_n = 0), the finite-n estimate of the limit density at 0.
double estimate_g0(const IncrementLaw& law, std::int64_t n);

/// Symmetric Cauchy density with peak g0.
double fitted_cauchy_density(double g0, double y);

/// sup_x |a_n P(S_n = x) - g(x / a_n)| over the window, g the Cauchy density
/// with peak g0.
double llt_error_profile(const NStepPmf& pmf, std::int64_t a_n, double g0);
/// Law-level form on |x| <= window_radius, pmf from ring_pmf.
double llt_error_profile(const IncrementLaw& law, std::int64_t n, double g0, std::int64_t window_radius);

/// max over c1 a_n <= |k| <= window_radius with L(k) > 0 of
/// P(S_n = k) k^2 / (n L(k)). Throws EmptyRange when no k qualifies.
double berger_ratio(const NStepPmf& pmf, const IncrementLaw& law, std::int64_t a_n, double c1,
                    std::int64_t window_radius);
double berger_ratio(const IncrementLaw& law, std::int64_t n, double c1, std::int64_t window_radius);

/// Streams p_1, p_2, ... of the walk on the ring Z_F: p_t is the exact pmf of
/// S_t mod F. One inverse transform per step.
class RingPmfStream {
 public:
  RingPmfStream(const IncrementLaw& law, std::size_t ring_size);

  std::int64_t step() const noexcept { return t_; }
  /// Advances to the next step and returns the current pmf; index k holds
  /// P(S_t = k mod F), so negative offsets live at F - |k|.
  std::span<const double> next();
  double prob(std::int64_t k) const;
  std::size_t ring_size() const noexcept { return f_; }

 private:
  std::size_t f_;
  std::vector<double> phi_;
  std::vector<double> power_;
  std::vector<double> current_;
  std::int64_t t_ = 0;
};

}  // namespace cauchy
