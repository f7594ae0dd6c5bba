#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "cauchy/coarse_grain.hpp"
#include "cauchy/errors.hpp"
#include "cauchy/parallel.hpp"
#include "oracles.hpp"

using namespace cauchy;

namespace {

EnvSpec gaussian(std::uint64_t seed) {
  EnvSpec e;
  e.kind = EnvKind::gaussian_unit;
  e.seed = seed;
  return e;
}

}  // namespace

TEST_CASE("cells partition the line") {
  for (std::int64_t a : {1, 2, 3, 7, 10}) {
    for (std::int64_t x = -60; x <= 60; ++x) {
      const std::int64_t y = cell_index(x, a);
      // y a - a/2 < x <= y a + a/2
      CHECK(2 * (y * a) - a < 2 * x);
      CHECK(2 * x <= 2 * (y * a) + a);
    }
  }
  CHECK(cell_index(0, 4) == 0);
  CHECK(cell_index(2, 4) == 0);
  CHECK(cell_index(3, 4) == 1);
  CHECK(cell_index(-2, 4) == -1);
  CHECK_THROWS_AS(cell_index(3, 0), InvalidParameter);
}

TEST_CASE("planner") {
  const auto t = build_overlap(build_canonical_law(4096), 1 << 15);
  const double beta = 0.7, eps = 0.1;
  const auto p = plan(beta, eps, t);
  const double thr = (1.0 + eps) / (beta * beta);
  auto shrink = [&](std::int64_t n) {
    return static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(n), 1.0 - eps * eps)));
  };
  CHECK(t.D(shrink(p.l)) >= thr);
  CHECK(t.D(shrink(p.l - 1)) < thr);
  CHECK(p.u == shrink(p.l));
  CHECK(p.q >= 1);
  CHECK(p.q < p.u);
  CHECK(p.u < p.l);
  const double lg = std::max(std::log(std::sqrt(t.phi(p.l))), std::log(t.D(p.l)));
  CHECK(p.q == std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(lg / (eps * eps)))));
  CHECK(p.beta2_du == doctest::Approx(beta * beta * t.D(p.u)));
  CHECK_FALSE(p.manual);

  CHECK_THROWS_AS(plan(3.0, eps, t), TooLargeBeta);
  CHECK_THROWS_AS(plan(3.0, eps, t), InvalidPlan);
  CHECK_THROWS_AS(plan(0.2, eps, t), NeedsLongerTable);
  CHECK_THROWS_AS(plan(0.7, 1.5, t), InvalidParameter);

  const auto m = manual_plan(64, 8, 3);
  CHECK(m.manual);
  CHECK_THROWS_AS(manual_plan(8, 8, 3), InvalidPlan);
  CHECK_THROWS_AS(manual_plan(64, 8, 0), InvalidPlan);
}

TEST_CASE("block decomposition") {
  const auto env = gaussian(3);
  const double beta = 0.5, lambda = log_mgf(env, beta);
  const SiteField omega = field(env).as_site_field();

  SUBCASE("m = 1 sums to the wide partition function") {
    const auto law = build_canonical_law(3);
    const auto z = coarse_decompose(law, omega, lambda, beta, 1, 10);
    double s = 0.0;
    for (const auto& kv : z) s += kv.second;
    const double zhat = std::exp(run_polymer(law, omega, lambda, beta, wide_window(law, 10), false).log_zbar);
    CHECK(s == doctest::Approx(zhat).epsilon(1e-12));
  }
  SUBCASE("beta = 0 gives a probability distribution") {
    const auto law = build_canonical_law(2);
    const auto z = coarse_decompose(law, omega, 0.0, 0.0, 3, 6);
    double s = 0.0;
    for (const auto& kv : z) {
      CHECK(kv.second >= 0.0);
      s += kv.second;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("each Z_Y against path enumeration") {
    const auto law = build_canonical_law(1);
    const auto z = coarse_decompose(law, omega, lambda, beta, 2, 8);
    const auto ref = oracle::decompose(law, omega, lambda, beta, 2, 8);
    std::map<std::vector<std::int64_t>, double> nz;
    for (const auto& kv : z) {
      if (kv.second > 0.0) nz.insert(kv);
    }
    CHECK(nz.size() == ref.size());
    for (const auto& kv : ref) {
      const auto it = z.find(kv.first);
      REQUIRE(it != z.end());
      CHECK(std::abs(it->second - kv.second) <= 1e-10 * std::max(1.0, kv.second));
    }
  }
  const auto law = build_canonical_law(1);
  CHECK_THROWS_AS(coarse_decompose(law, omega, lambda, beta, 4, 32), TooLarge);
  CHECK_THROWS_AS(coarse_decompose(law, omega, lambda, beta, 0, 8), InvalidParameter);
}

TEST_CASE("chain kernels") {
  const auto law = build_canonical_law(2);
  const auto p = manual_plan(8, 3, 2, 1.5);
  const ChainKernels k(law, p);
  CHECK(k.a_l() == oracle::scaling(law, 8));
  CHECK(k.D_u() == doctest::Approx(oracle::overlap_d(law, 3)).epsilon(1e-12));
  CHECK(k.D_hat_u() == doctest::Approx(oracle::overlap_d_hat(law, 3, 1.5)).epsilon(1e-12));
  CHECK(k.D_hat_u() <= k.D_u());
  for (std::int64_t d = 1; d <= 3; ++d) {
    const auto pmf = oracle::sequential_pmf(law, d);
    const double lim = 1.5 * static_cast<double>(oracle::scaling(law, d));
    CHECK(k.jump_limit(d) == static_cast<std::int64_t>(std::floor(lim)));
    for (std::int64_t z = -2 * d; z <= 2 * d; ++z) {
      const double want = std::abs(static_cast<double>(z)) <= lim ? pmf[static_cast<std::size_t>(z + 2 * d)] : 0.0;
      CHECK(std::abs(k.kernel(d, z) - want) <= 1e-14);
    }
  }
  // the block is |x| < R a_l
  const double block = 1.5 * static_cast<double>(k.a_l());
  CHECK(static_cast<double>(k.block_radius()) < block);
  CHECK(static_cast<double>(k.block_radius() + 1) >= block);
}

TEST_CASE("X statistic against chain enumeration") {
  const auto env = gaussian(17);
  const SiteField omega = field(env).as_site_field();
  struct Case {
    std::int64_t x_max, l, u, q;
    double R;
  };
  for (const Case& c : {Case{1, 4, 2, 1, 1.5}, Case{1, 6, 3, 2, 1.0}, Case{2, 8, 3, 2, 1.0}, Case{2, 5, 2, 1, 2.0},
                        Case{1, 8, 3, 2, 1.5}}) {
    const auto law = build_canonical_law(c.x_max);
    const ChainKernels k(law, manual_plan(c.l, c.u, c.q, c.R));
    const oracle::ChainParams cp{c.l, c.u, c.q, c.R};
    const double x = k.x_statistic(omega);
    const double ref = oracle::x_direct(law, cp, omega);
    CHECK(std::abs(x - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    CHECK(k.x_second_moment() == doctest::Approx(oracle::x_second_moment_direct(law, cp)).epsilon(1e-12));

    // block (i, y) reads the field shifted by ((i - 1) l, y a_l)
    const std::int64_t i = 3, y = -2;
    const SiteField moved = [&](std::int64_t t, std::int64_t z) {
      return omega(t + (i - 1) * c.l, z + y * k.a_l());
    };
    CHECK(x_statistic(k, omega, i, y) == doctest::Approx(oracle::x_direct(law, cp, moved)).epsilon(1e-12));
  }
}

TEST_CASE("X has the predicted second moment on average") {
  const auto law = build_canonical_law(4);
  const ChainKernels k(law, manual_plan(16, 4, 2, 2.0));
  double s2 = 0.0;
  const int m = 400;
  for (int i = 0; i < m; ++i) {
    const double x = k.x_statistic(field(gaussian(derive_seed(5, static_cast<std::uint64_t>(i)))).as_site_field());
    s2 += x * x;
  }
  CHECK(s2 / m == doctest::Approx(k.x_second_moment()).epsilon(0.25));
}

TEST_CASE("g function") {
  CHECK(g_function(2.0, 0.0) == 1.0);
  CHECK(g_function(2.0, std::exp(4.0) * 0.999) == 1.0);
  CHECK(g_function(2.0, std::exp(4.0)) == doctest::Approx(std::exp(-2.0)));
  CHECK(g_function(2.0, 1e9) == doctest::Approx(std::exp(-2.0)));
  CHECK(g_function(2.0, -1e9) == 1.0);
}

TEST_CASE("W statistic") {
  struct Case {
    std::int64_t x_max, l, u, q;
    double R;
  };
  auto want_mean = [](const IncrementLaw& law, const Case& c) {
    const double d = oracle::overlap_d(law, c.u), dh = oracle::overlap_d_hat(law, c.u, c.R);
    return static_cast<double>(c.l / 2) / static_cast<double>(c.l) * std::pow(dh / d, static_cast<double>(c.q));
  };
  // every path of length l, checked pointwise and averaged
  for (const Case& c : {Case{1, 6, 2, 1, 1.5}, Case{2, 8, 3, 1, 1.0}, Case{1, 9, 3, 1, 2.0}}) {
    const auto law = build_canonical_law(c.x_max);
    const ChainKernels k(law, manual_plan(c.l, c.u, c.q, c.R));
    const oracle::ChainParams cp{c.l, c.u, c.q, c.R};
    long double mean = 0.0L;
    oracle::for_each_path(law, c.l, c.l * c.x_max, [&](const oracle::Path& path, double prob) {
      const double w = k.w_statistic(path);
      CHECK(w >= 0.0);
      CHECK(std::abs(w - oracle::w_direct(law, cp, path)) <= 1e-12 * std::max(1.0, w));
      mean += prob * w;
    });
    CHECK(static_cast<double>(mean) == doctest::Approx(want_mean(law, c)).epsilon(1e-12));
    CHECK(k.w_exact_mean() == doctest::Approx(want_mean(law, c)).epsilon(1e-12));
  }
  // longer chains: pointwise on sampled paths
  for (const Case& c : {Case{1, 13, 3, 2, 1.5}, Case{3, 20, 4, 2, 2.0}}) {
    const auto law = build_canonical_law(c.x_max);
    const ChainKernels k(law, manual_plan(c.l, c.u, c.q, c.R));
    const oracle::ChainParams cp{c.l, c.u, c.q, c.R};
    const WalkSampler s(law);
    for (std::uint64_t i = 0; i < 50; ++i) {
      const auto path = s.sample(2, i, c.l);
      const double w = k.w_statistic(path);
      CHECK(std::abs(w - oracle::w_direct(law, cp, path)) <= 1e-12 * std::max(1.0, w));
    }
    CHECK(k.w_exact_mean() == doctest::Approx(want_mean(law, c)).epsilon(1e-12));
  }
  const auto law = build_canonical_law(1);
  const ChainKernels bad(law, manual_plan(8, 3, 2));
  CHECK_THROWS_AS(bad.w_statistic(std::vector<std::int64_t>(9, 0)), InvalidPlan);
  const ChainKernels ok(law, manual_plan(10, 3, 1));
  CHECK_THROWS_AS(ok.w_statistic(std::vector<std::int64_t>(5, 0)), InvalidParameter);
}

TEST_CASE("walk sampler") {
  const auto law = build_canonical_law(5);
  const WalkSampler s(law);
  const auto a = s.sample(9, 4, 100);
  CHECK(a.size() == 101);
  CHECK(a[0] == 0);
  CHECK(s.sample(9, 4, 100) == a);
  CHECK(s.sample(9, 5, 100) != a);
  CHECK(s.sample(10, 4, 100) != a);
  // a shorter request is a prefix
  const auto b = s.sample(9, 4, 40);
  CHECK(std::equal(b.begin(), b.end(), a.begin()));

  std::map<std::int64_t, int> freq;
  const int n_walks = 200, len = 100;
  for (int i = 0; i < n_walks; ++i) {
    const auto w = s.sample(1, static_cast<std::uint64_t>(i), len);
    for (int j = 1; j <= len; ++j) ++freq[w[static_cast<std::size_t>(j)] - w[static_cast<std::size_t>(j - 1)]];
  }
  const double total = n_walks * len;
  for (std::int64_t x = -5; x <= 5; ++x) {
    const double p = law.prob(x);
    const double sd = std::sqrt(p * (1 - p) / total);
    CHECK(std::abs(freq[x] / total - p) <= 5 * sd);
  }
  CHECK(freq.size() == 11);
}

TEST_CASE("fractional moment") {
  const auto law = build_canonical_law(3);
  const auto zero = fractional_moment(law, gaussian(1), 0.0, 0.7, 8, wide_window(law, 12));
  CHECK(zero.mean == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(zero.std_error <= 1e-13);

  const auto fm = fractional_moment(law, gaussian(1), 1.0, 0.7, 64, make_window(law, 64, 8.0));
  CHECK(fm.seeds.size() == 64);
  CHECK(fm.mean > 0.0);
  CHECK(fm.mean < 1.0);  // Jensen, with a window that only removes mass
  CHECK(fm.rate_proxy == doctest::Approx(std::log(fm.mean) / (0.7 * 64)));
  const auto again = fractional_moment(law, gaussian(1), 1.0, 0.7, 64, make_window(law, 64, 8.0), 3);
  CHECK(again.mean == fm.mean);
  CHECK_THROWS_AS(fractional_moment(law, gaussian(1), 1.0, 1.0, 8, wide_window(law, 4)), InvalidParameter);
  CHECK_THROWS_AS(fractional_moment(law, gaussian(1), 1.0, 0.5, 1, wide_window(law, 4)), InvalidParameter);
}
