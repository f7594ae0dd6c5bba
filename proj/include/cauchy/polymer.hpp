#pragma once

// Transfer-matrix evaluation of the window-restricted partition function,
// Gibbs marginals and the gradient of log Z, free-energy estimation, and the
// theorem-bound report.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cauchy/environment.hpp"
#include "cauchy/heavy_walk.hpp"
#include "cauchy/overlap.hpp"

namespace cauchy {

/// Walks are killed once |S_n| > radius for some 1 <= n <= N.
struct WindowSpec {
  double R = 8.0;  // infinity for a window wide enough to never kill
  std::int64_t N = 0;
  std::int64_t radius = 0;
};

/// radius = ceil(R a_N), raised to X_max when smaller.
WindowSpec make_window(const IncrementLaw& law, std::int64_t n, double r);
/// radius = N X_max: no walk can leave.
WindowSpec wide_window(const IncrementLaw& law, std::int64_t n);

struct PolymerRun {
  double beta = 0.0;
  double lambda = 0.0;
  std::int64_t N = 0;
  std::int64_t radius = 0;
  double log_zbar = 0.0;
  /// layers[n][x + radius] * exp(log_scale[n]) = w_n(x), n = 0..N; empty
  /// unless the run was asked to keep them.
  std::vector<std::vector<double>> layers;
  std::vector<double> log_scale;
  /// e^{beta omega(n, x)} for n = 1..N (index 0 unused); kept with the layers.
  std::vector<std::vector<double>> factors;
  std::vector<double> kernel_half;  // P(S_1 = k), k = 0..X_max

  bool has_layers() const noexcept { return !layers.empty(); }
  std::size_t width() const noexcept { return static_cast<std::size_t>(2 * radius + 1); }
};

/// w_n(x) = e^{beta omega(n,x)} sum_y w_{n-1}(y) P(S_1 = x - y) on the window,
/// log Z_bar = log sum_x w_N(x) - N lambda. Throws NumericOverflow on
/// non-finite weights.
PolymerRun run_polymer(const IncrementLaw& law, const SiteField& omega, double lambda, double beta,
                       const WindowSpec& window, bool keep_layers = true);
PolymerRun run_polymer(const IncrementLaw& law, const EnvSpec& env, double beta, const WindowSpec& window,
                       bool keep_layers = true);

/// marginals[k][x + radius] = polymer probability of S_k = x, k = 1..N
/// (index 0 holds the point mass at the origin).
std::vector<std::vector<double>> gibbs_marginals(const PolymerRun& run);
std::vector<double> gibbs_marginal(const PolymerRun& run, std::int64_t k);

/// beta * P_polymer(S_k = x), the derivative of log Z_bar in omega(k, x).
double grad_log_partition(const PolymerRun& run, const std::vector<std::vector<double>>& marginals, std::int64_t k,
                          std::int64_t x);
double grad_log_partition(const PolymerRun& run, std::int64_t k, std::int64_t x);

/// sum over (k, x) in the window of grad_log_partition^2.
double grad_norm_sq(const PolymerRun& run);

/// sum_{k <= N, |x| <= window.radius} W_k(x)^2, W_k(x) the normalised weight
/// e^{-N lambda} of all unrestricted paths through (k, x).
double unrestricted_collision_weight(const IncrementLaw& law, const SiteField& omega, double lambda, double beta,
                                     std::int64_t n, std::int64_t window_radius);

/// Both sides of grad_norm_sq <= beta^2 / Z_bar^2 * sum W_k(x)^2 for one environment.
struct GradBound {
  double grad_norm_sq = 0.0;
  double rhs = 0.0;
  bool holds = false;
};
GradBound grad_norm_bound(const IncrementLaw& law, const SiteField& omega, double lambda, double beta,
                          const WindowSpec& window);

struct FreeEnergyEstimate {
  double beta = 0.0;
  std::int64_t N = 0;
  std::int64_t M = 0;
  double R = 0.0;
  double mean = 0.0;    // mean of log(Z_bar) / N
  double std_error = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> samples;
  static constexpr const char* label = "estimate of lower bound";
};

/// Replica i uses seed derive_seed(env.seed, i).
FreeEnergyEstimate estimate_free_energy(const IncrementLaw& law, const EnvSpec& env, double beta, std::int64_t m,
                                        const WindowSpec& window, unsigned threads = 1);

/// max{n : D(n) <= (1 - eps) / beta^2}.
std::int64_t n_beta_eps(double beta, double eps, const OverlapTable& table);

struct BoundEntry {
  std::string name;
  bool available = false;
  double argument = 0.0;       // argument passed to D^-1
  std::int64_t horizon = 0;    // D^-1(argument)
  double value = 0.0;          // the bound on p(beta); -inf when vacuous
  std::string note;
};

struct BoundReport {
  double beta = 0.0;
  double eps = 0.0;
  std::vector<BoundEntry> entries;
  double fitted_c = 0.0;       // slope of D(N) against log N over the top of the table
  double fitted_k = 0.0;       // intercept
  double c_llt = 0.0;          // n collision(n) at the largest dyadic n, i.e. a_n collision(n) / phi(n)
  std::int64_t c_llt_n = 0;
};

/// Throws NeedsLongerTable when D^-1 of the upper or lower bound argument
/// lies beyond the table; the beta^-4 entry is marked unavailable instead.
BoundReport bound_report(double beta, double eps, const OverlapTable& table);

}  // namespace cauchy
