#pragma once

// Collision probabilities P(S_n = S'_n) of two independent walks, the
// overlap D(N), its inverse and restricted variants, and the replica pair
// transfer matrix.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cauchy/environment.hpp"
#include "cauchy/heavy_walk.hpp"

namespace cauchy {

enum class OverlapMethod {
  spectral,     // Parseval on a ring: collision(n) = M^-1 sum_j phi_j^(2n)
  ring_stream,  // sum_x p_n(x)^2 of the ring pmf, one inverse transform per n
  convolution,  // sum_x p_n(x)^2 of the windowed pmf (step_once), exact up to truncation
};

std::string method_name(OverlapMethod m);
OverlapMethod parse_method(const std::string& name);

struct OverlapTable {
  std::string law_fingerprint;
  std::int64_t x_max = 0;
  std::int64_t n_max = 0;
  std::size_t ring_size = 0;       // spectral / ring_stream; 0 for convolution
  std::int64_t window_radius = 0;  // convolution only
  OverlapMethod method = OverlapMethod::spectral;
  std::vector<double> collision;   // collision[n], collision[0] = 1
  std::vector<double> d;           // d[n] = D(n), d[0] = 0
  std::vector<double> error_bar;   // estimated absolute error of D(n)
  std::vector<std::int64_t> a;     // a[n], a[0] = 0

  double D(std::int64_t n) const { return d.at(static_cast<std::size_t>(n)); }
  double collision_at(std::int64_t n) const { return collision.at(static_cast<std::size_t>(n)); }
  double phi(std::int64_t n) const { return static_cast<double>(a.at(static_cast<std::size_t>(n))) / static_cast<double>(n); }
};

struct OverlapOptions {
  OverlapMethod method = OverlapMethod::spectral;
  /// Ring size M (power of two); 0 picks next_pow2(2 * X_max + 2) for the
  /// spectral route and next_pow2(2 * n_max * X_max + 2) capped at 2^22 for
  /// the ring stream.
  std::size_t ring_size = 0;
  /// Window of the convolution route; 0 picks n_max * X_max (exact).
  std::int64_t window_radius = 0;
};

OverlapTable build_overlap(const IncrementLaw& law, std::int64_t n_max, const OverlapOptions& opts = {});

/// max{N <= n_max : D(N) <= x}. Throws NeedsLongerTable when D(n_max) <= x.
std::int64_t d_inverse(const OverlapTable& table, double x);

struct RecurrenceReport {
  std::vector<std::int64_t> n;        // dyadic checkpoints
  std::vector<double> inv_nl_sum;     // sum_{k<=n} 1/(k L(k))
  std::vector<double> inv_a_sum;      // sum_{k<=n} 1/a_k
  double inv_nl_slope = 0.0;          // least-squares slope against log n
  double inv_a_slope = 0.0;
  bool recurrent_type = false;
  std::int64_t n_effective = 0;       // n_max capped below X_max, where L > 0
};

RecurrenceReport recurrence_diagnostic(const IncrementLaw& law, std::int64_t n_max);

/// sum_{t<=u} sum_{|x|<=R a_t} p_t(x)^2 on a ring of `ring_size` sites
/// (0 picks one wide enough that wrap-around is negligible next to rounding).
double restricted_overlap(const IncrementLaw& law, std::int64_t u, double r, std::size_t ring_size = 0);

/// D(q u) / D(u).
double d_ratio_check(const OverlapTable& table, std::int64_t q, std::int64_t u);

struct WindowCollision {
  double restricted = 0.0;
  double full = 0.0;
  bool holds = false;
};

/// Both sides of sum_{s<=n} sum_{x in [lo, hi]} p_s(x)^2 <= D(n), from exact
/// pmfs (ring of at least 2 n X_max + 2 sites).
WindowCollision window_collision_bound(const IncrementLaw& law, std::int64_t n, std::int64_t lo, std::int64_t hi);
WindowCollision window_collision_bound(const IncrementLaw& law, std::int64_t n, const std::vector<std::int64_t>& sites);

struct PairMoment {
  double moment = 0.0;      // E^2[exp(gamma Y_N); both walks in the window]
  double y_weighted = 0.0;  // E^2[beta^2 Y_N exp(gamma Y_N); both walks in the window]
};

/// Largest radius accepted by pair_overlap_moment.
inline constexpr std::int64_t kPairRadiusBudget = 512;

/// Pair chain (S_n, S'_n) killed outside [-radius, radius], factor e^gamma on
/// the diagonal. Throws TooLarge above kPairRadiusBudget.
PairMoment pair_overlap_moment(const IncrementLaw& law, const EnvSpec& env, double beta, std::int64_t n,
                               std::int64_t radius);

void write_overlap_table(std::ostream& os, const OverlapTable& table);
/// Throws Error on any malformed or inconsistent content.
OverlapTable read_overlap_table(std::istream& is);

}  // namespace cauchy
