#pragma once

// Coarse-graining statistics: the scale planner (l, u, q), the block
// decomposition of the partition function, the chain statistic X, the
// change-of-measure penalty g, the walk statistic W_l and fractional moments.

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "cauchy/environment.hpp"
#include "cauchy/fft.hpp"
#include "cauchy/heavy_walk.hpp"
#include "cauchy/overlap.hpp"
#include "cauchy/polymer.hpp"

namespace cauchy {

struct CoarseGrainPlan {
  double eps = 0.1;
  double beta = 0.0;
  std::int64_t l = 0;
  std::int64_t u = 0;
  std::int64_t q = 0;
  double R = 8.0;
  double K = 3.0;
  double theta = 0.7;
  bool manual = false;
  double beta2_du = 0.0;       // beta^2 D(u), planner only
  bool upper_half_ok = false;  // beta^2 D(u) <= 1 + 2 eps, reported only
};

/// l = inf{n : D(floor(n^(1 - eps^2))) >= (1 + eps) / beta^2}, u = floor(l^(1 - eps^2)),
/// q = ceil(eps^-2 max(log sqrt(phi(l)), log D(l))), at least 1.
/// Throws NeedsLongerTable, or TooLargeBeta unless q < u < l.
CoarseGrainPlan plan(double beta, double eps, const OverlapTable& table, double theta = 0.7, double r = 8.0,
                     double k = 3.0);

/// Fixed scales for desk-size experiments; checks q < u < l only.
CoarseGrainPlan manual_plan(std::int64_t l, std::int64_t u, std::int64_t q, double r = 8.0, double k = 3.0,
                            double theta = 0.7, double beta = 0.0, double eps = 0.1);

/// Index y of the cell I_y = y a + (-a/2, a/2] containing x.
std::int64_t cell_index(std::int64_t x, std::int64_t a);

/// Z_Y for every reachable Y = (y_1..y_m): the normalised weight of paths with
/// S_{il} in I_{y_i}, a = a_l. Unrestricted walks (no window killing).
std::map<std::vector<std::int64_t>, double> coarse_decompose(const IncrementLaw& law, const SiteField& omega,
                                                             double lambda, double beta, std::int64_t m,
                                                             std::int64_t l);

/// Kernels and normalisation shared by every evaluation of X and W_l under a plan.
class ChainKernels {
 public:
  ChainKernels(const IncrementLaw& law, const CoarseGrainPlan& plan);

  const CoarseGrainPlan& plan() const noexcept { return plan_; }
  std::int64_t a_l() const noexcept { return a_l_; }
  /// Sites x with |x| < R a_l.
  std::int64_t block_radius() const noexcept { return rho_; }
  std::int64_t jump_limit(std::int64_t d) const;  // floor(R a_d)
  /// p_d(z) 1{|z| <= R a_d}, d = 1..u.
  double kernel(std::int64_t d, std::int64_t z) const;
  double D_u() const noexcept { return d_u_; }
  double D_hat_u() const noexcept { return d_hat_u_; }
  /// (2 R l a_l)^-1/2 D(u)^-q/2.
  double x_norm() const noexcept { return x_norm_; }
  /// (floor(l/2) / l) (D_hat(u) / D(u))^q.
  double w_exact_mean() const;

  /// norm * sum_{t in [1, l], x in block} h_q(t, x) for a field evaluated
  /// at (t, x) directly (shift it first for other blocks).
  double x_statistic(const SiteField& omega) const;
  /// E[X^2] for an i.i.d. unit-variance field, by the same recursion with
  /// squared kernels and omega = 1.
  double x_second_moment() const;
  /// W_l along path[0..l], path[0] = 0.
  double w_statistic(const std::vector<std::int64_t>& path) const;

 private:
  double chain_sum(const SiteField* omega, bool squared) const;

  CoarseGrainPlan plan_;
  std::int64_t a_l_ = 0;
  std::int64_t rho_ = 0;
  std::vector<std::int64_t> a_;                 // a_[t], t = 0..l
  std::vector<std::vector<double>> p_;          // p_[d][z + d X_max]
  std::int64_t x_max_ = 0;
  double d_u_ = 0.0, d_hat_u_ = 0.0, x_norm_ = 0.0;
  std::shared_ptr<const RealFft> fft_;
  std::vector<ComplexBuffer> spec_, spec_sq_;   // kernel spectra, d = 1..u
};

/// X^{(i,y)}(omega) = X(omega shifted by ((i - 1) l, y a_l)).
double x_statistic(const ChainKernels& kernels, const SiteField& omega, std::int64_t i, std::int64_t y);

/// exp(-K) when x >= exp(K^2), else 1.
double g_function(double k, double x);

/// Sample of walk i under `seed`: path[0..len], path[0] = 0, steps by inverse CDF.
class WalkSampler {
 public:
  explicit WalkSampler(const IncrementLaw& law);
  std::vector<std::int64_t> sample(std::uint64_t seed, std::uint64_t index, std::int64_t len) const;

 private:
  std::int64_t x_max_;
  std::vector<double> cdf_;  // cdf_[j] = P(S_1 <= j - X_max)
};

struct FractionalMoment {
  double beta = 0.0, theta = 0.0;
  std::int64_t N = 0, M = 0;
  double mean = 0.0;       // E[Z_bar^theta]
  double std_error = 0.0;
  double rate_proxy = 0.0; // log(mean) / (theta N), biased by Monte Carlo
  std::vector<std::uint64_t> seeds;
};

FractionalMoment fractional_moment(const IncrementLaw& law, const EnvSpec& env, double beta, double theta,
                                   std::int64_t m, const WindowSpec& window, unsigned threads = 1);

}  // namespace cauchy
