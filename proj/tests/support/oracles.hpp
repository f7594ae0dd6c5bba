#pragma once

// Brute-force reference computations for the tests. Everything here is
// written directly from the model definitions (path enumeration, sequential
// convolution, explicit chain sums) and shares no code with the library
// beyond the IncrementLaw value type.

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "cauchy/environment.hpp"
#include "cauchy/heavy_walk.hpp"

namespace oracle {

using Path = std::vector<std::int64_t>;
using PathFn = std::function<void(const Path& path, double prob)>;

/// P(S_n = k) for |k| <= n X_max by n sequential one-step convolutions;
/// index k + n X_max.
std::vector<double> sequential_pmf(const cauchy::IncrementLaw& law, std::int64_t n);

/// Smallest a >= 1 with n P(|S_1| > a) <= 1, by a linear scan.
std::int64_t scaling(const cauchy::IncrementLaw& law, std::int64_t n);
/// a_1..a_{n_max} (index 0 unused).
std::vector<std::int64_t> scaling_sequence(const cauchy::IncrementLaw& law, std::int64_t n_max);

/// Every path of length n (path[0] = 0) with |S_k| <= radius for all k,
/// together with its walk probability.
void for_each_path(const cauchy::IncrementLaw& law, std::int64_t n, std::int64_t radius, const PathFn& fn);

/// sum over window paths of P(path) exp(sum_k (beta omega(k, S_k) - lambda)).
double zbar(const cauchy::IncrementLaw& law, const cauchy::SiteField& omega, double lambda, double beta,
            std::int64_t n, std::int64_t radius);

/// marg[k][x + radius] = polymer probability of S_k = x, k = 0..n.
std::vector<std::vector<double>> marginals(const cauchy::IncrementLaw& law, const cauchy::SiteField& omega,
                                           double lambda, double beta, std::int64_t n, std::int64_t radius);

/// E_omega[Z_bar]: each path visits n distinct sites, so the average
/// factorises into sum_paths P(path) prod_k exp(site_log_mgf - lambda).
double mean_zbar(const cauchy::IncrementLaw& law, std::int64_t n, std::int64_t radius, double site_log_mgf,
                 double lambda);

/// E_omega[Z_bar^2] = sum over path pairs of P P exp(gamma * #{k : S_k = S'_k});
/// `y_weighted` receives the same sum weighted by beta^2 * #{...}.
double second_moment(const cauchy::IncrementLaw& law, std::int64_t n, std::int64_t radius, double gamma,
                     double beta, double* y_weighted = nullptr);

/// Average of f over all 2^k sign assignments of the listed sites; every
/// other site reads 0.
double rademacher_average(const std::vector<std::pair<std::int64_t, std::int64_t>>& sites,
                          const std::function<double(const cauchy::SiteField&)>& f);

/// Sites (k, x) with 1 <= k <= n and |x| <= min(radius, k X_max).
std::vector<std::pair<std::int64_t, std::int64_t>> reachable_sites(std::int64_t x_max, std::int64_t n,
                                                                   std::int64_t radius);

/// log E[exp(beta Z)] for Z ~ N(0, 1) by adaptive quadrature.
double gaussian_log_mgf(double beta);
/// log E[exp(beta Z / sigma_B)] for Z ~ N(0, 1) conditioned on |Z| <= b, by quadrature.
double truncated_gaussian_log_mgf(double beta, double b);

/// Unrestricted Z_Y for Y = (y_1..y_m), cells y a - a/2 < x <= y a + a/2, a = a_l.
std::map<std::vector<std::int64_t>, double> decompose(const cauchy::IncrementLaw& law, const cauchy::SiteField& omega,
                                                      double lambda, double beta, std::int64_t m, std::int64_t l);

/// D(u) = sum_{t<=u} sum_x p_t(x)^2, D_hat(u) with |x| <= R a_t.
double overlap_d(const cauchy::IncrementLaw& law, std::int64_t u);
double overlap_d_hat(const cauchy::IncrementLaw& law, std::int64_t u, double r);

struct ChainParams {
  std::int64_t l, u, q;
  double R;
};

/// X(omega) by enumerating every chain t_0 < ... < t_q, sites in the block,
/// each factor written out.
double x_direct(const cauchy::IncrementLaw& law, const ChainParams& p, const cauchy::SiteField& omega);
/// E[X^2] for unit-variance i.i.d. omega: sum over chains of squared kernels.
double x_second_moment_direct(const cauchy::IncrementLaw& law, const ChainParams& p);
/// W_l along the path by enumerating every chain with t_0 <= l/2.
double w_direct(const cauchy::IncrementLaw& law, const ChainParams& p, const Path& path);

}  // namespace oracle
