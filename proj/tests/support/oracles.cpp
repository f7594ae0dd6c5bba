#include "oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <stdexcept>

namespace oracle {

using cauchy::IncrementLaw;
using cauchy::SiteField;

std::vector<double> sequential_pmf(const IncrementLaw& law, std::int64_t n) {
  const std::int64_t x = law.support_radius();
  std::vector<double> cur{1.0};
  for (std::int64_t s = 1; s <= n; ++s) {
    const std::int64_t r_old = (s - 1) * x, r_new = s * x;
    std::vector<double> next(static_cast<std::size_t>(2 * r_new + 1), 0.0);
    for (std::int64_t y = -r_old; y <= r_old; ++y) {
      const double py = cur[static_cast<std::size_t>(y + r_old)];
      for (std::int64_t k = -x; k <= x; ++k) next[static_cast<std::size_t>(y + k + r_new)] += py * law.prob(k);
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<std::int64_t> scaling_sequence(const IncrementLaw& law, std::int64_t n_max) {
  const std::int64_t x = law.support_radius();
  // tail[a] = P(|S_1| > a), summed from the far end
  std::vector<double> tail(static_cast<std::size_t>(x) + 2, 0.0);
  for (std::int64_t a = x - 1; a >= 0; --a) {
    tail[static_cast<std::size_t>(a)] = tail[static_cast<std::size_t>(a) + 1] + 2.0 * law.prob(a + 1);
  }
  std::vector<std::int64_t> out(static_cast<std::size_t>(n_max) + 1, 0);
  std::int64_t a = 1;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    while (a <= x && static_cast<double>(n) * tail[static_cast<std::size_t>(a)] > 1.0) ++a;
    out[static_cast<std::size_t>(n)] = a;
  }
  return out;
}

std::int64_t scaling(const IncrementLaw& law, std::int64_t n) { return scaling_sequence(law, n).back(); }

void for_each_path(const IncrementLaw& law, std::int64_t n, std::int64_t radius, const PathFn& fn) {
  Path path(static_cast<std::size_t>(n) + 1, 0);
  const std::int64_t x = law.support_radius();
  std::function<void(std::int64_t, double)> rec = [&](std::int64_t k, double prob) {
    if (k > n) {
      fn(path, prob);
      return;
    }
    for (std::int64_t step = -x; step <= x; ++step) {
      const double p = law.prob(step);
      if (p == 0.0) continue;
      const std::int64_t pos = path[static_cast<std::size_t>(k - 1)] + step;
      if (pos < -radius || pos > radius) continue;
      path[static_cast<std::size_t>(k)] = pos;
      rec(k + 1, prob * p);
    }
  };
  rec(1, 1.0);
}

namespace {

double path_weight(const Path& path, const SiteField& omega, double lambda, double beta) {
  double e = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) e += beta * omega(static_cast<std::int64_t>(k), path[k]) - lambda;
  return std::exp(e);
}

}  // namespace

double zbar(const IncrementLaw& law, const SiteField& omega, double lambda, double beta, std::int64_t n,
            std::int64_t radius) {
  long double z = 0.0L;
  for_each_path(law, n, radius, [&](const Path& p, double prob) { z += prob * path_weight(p, omega, lambda, beta); });
  return static_cast<double>(z);
}

std::vector<std::vector<double>> marginals(const IncrementLaw& law, const SiteField& omega, double lambda,
                                           double beta, std::int64_t n, std::int64_t radius) {
  const auto w = static_cast<std::size_t>(2 * radius + 1);
  std::vector<std::vector<double>> m(static_cast<std::size_t>(n) + 1, std::vector<double>(w, 0.0));
  double z = 0.0;
  for_each_path(law, n, radius, [&](const Path& p, double prob) {
    const double wt = prob * path_weight(p, omega, lambda, beta);
    z += wt;
    for (std::size_t k = 0; k < p.size(); ++k) m[k][static_cast<std::size_t>(p[k] + radius)] += wt;
  });
  for (auto& row : m) {
    for (double& v : row) v /= z;
  }
  return m;
}

double mean_zbar(const IncrementLaw& law, std::int64_t n, std::int64_t radius, double site_log_mgf, double lambda) {
  long double total = 0.0L;
  const double per_site = std::exp(site_log_mgf - lambda);
  for_each_path(law, n, radius, [&](const Path&, double prob) {
    double f = prob;
    for (std::int64_t k = 1; k <= n; ++k) f *= per_site;
    total += f;
  });
  return static_cast<double>(total);
}

double second_moment(const IncrementLaw& law, std::int64_t n, std::int64_t radius, double gamma, double beta,
                     double* y_weighted) {
  std::vector<Path> paths;
  std::vector<double> probs;
  for_each_path(law, n, radius, [&](const Path& p, double prob) {
    paths.push_back(p);
    probs.push_back(prob);
  });
  long double total = 0.0L, weighted = 0.0L;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = 0; j < paths.size(); ++j) {
      int y = 0;
      for (std::size_t k = 1; k < paths[i].size(); ++k) y += paths[i][k] == paths[j][k];
      const double w = probs[i] * probs[j] * std::exp(gamma * y);
      total += w;
      weighted += beta * beta * y * w;
    }
  }
  if (y_weighted) *y_weighted = static_cast<double>(weighted);
  return static_cast<double>(total);
}

double rademacher_average(const std::vector<std::pair<std::int64_t, std::int64_t>>& sites,
                          const std::function<double(const SiteField&)>& f) {
  if (sites.size() > 24) throw std::invalid_argument("too many sites to enumerate");
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> index;
  for (std::size_t i = 0; i < sites.size(); ++i) index[sites[i]] = i;
  long double total = 0.0L;
  const std::uint64_t count = std::uint64_t{1} << sites.size();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    SiteField omega = [&index, mask](std::int64_t n, std::int64_t x) {
      const auto it = index.find({n, x});
      if (it == index.end()) return 0.0;
      return ((mask >> it->second) & 1u) ? 1.0 : -1.0;
    };
    total += f(omega);
  }
  return static_cast<double>(total / static_cast<long double>(count));
}

std::vector<std::pair<std::int64_t, std::int64_t>> reachable_sites(std::int64_t x_max, std::int64_t n,
                                                                   std::int64_t radius) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (std::int64_t k = 1; k <= n; ++k) {
    const std::int64_t r = std::min(radius, k * x_max);
    for (std::int64_t x = -r; x <= r; ++x) out.emplace_back(k, x);
  }
  return out;
}

double gaussian_log_mgf(double beta) {
  using boost::math::quadrature::gauss_kronrod;
  const double pi = 3.14159265358979323846;
  auto f = [beta, pi](double w) { return std::exp(beta * w - 0.5 * w * w) / std::sqrt(2.0 * pi); };
  const double v = gauss_kronrod<double, 61>::integrate(f, beta - 40.0, beta + 40.0, 15, 1e-15);
  return std::log(v);
}

double truncated_gaussian_log_mgf(double beta, double b) {
  using boost::math::quadrature::gauss_kronrod;
  auto density = [](double w) { return std::exp(-0.5 * w * w); };
  const double mass = gauss_kronrod<double, 61>::integrate(density, -b, b, 15, 1e-15);
  const double var = gauss_kronrod<double, 61>::integrate([&](double w) { return w * w * density(w); }, -b, b, 15,
                                                          1e-15) / mass;
  const double s = beta / std::sqrt(var);
  const double v = gauss_kronrod<double, 61>::integrate([&](double w) { return std::exp(s * w) * density(w); }, -b,
                                                        b, 15, 1e-15);
  return std::log(v / mass);
}

std::map<std::vector<std::int64_t>, double> decompose(const IncrementLaw& law, const SiteField& omega, double lambda,
                                                      double beta, std::int64_t m, std::int64_t l) {
  const std::int64_t a = scaling(law, l);
  auto cell = [a](std::int64_t x) {
    // the unique y with y a - a/2 < x <= y a + a/2
    const double ad = static_cast<double>(a);
    return static_cast<std::int64_t>(std::ceil((static_cast<double>(x) - ad / 2.0) / ad));
  };
  std::map<std::vector<std::int64_t>, double> out;
  const std::int64_t n = m * l;
  for_each_path(law, n, n * law.support_radius(), [&](const Path& p, double prob) {
    std::vector<std::int64_t> y;
    for (std::int64_t i = 1; i <= m; ++i) y.push_back(cell(p[static_cast<std::size_t>(i * l)]));
    out[y] += prob * path_weight(p, omega, lambda, beta);
  });
  return out;
}

double overlap_d(const IncrementLaw& law, std::int64_t u) {
  double d = 0.0;
  for (std::int64_t t = 1; t <= u; ++t) {
    for (double v : sequential_pmf(law, t)) d += v * v;
  }
  return d;
}

double overlap_d_hat(const IncrementLaw& law, std::int64_t u, double r) {
  double d = 0.0;
  for (std::int64_t t = 1; t <= u; ++t) {
    const auto p = sequential_pmf(law, t);
    const std::int64_t off = t * law.support_radius();
    const double lim = r * static_cast<double>(scaling(law, t));
    for (std::int64_t x = -off; x <= off; ++x) {
      if (std::abs(static_cast<double>(x)) <= lim) d += p[static_cast<std::size_t>(x + off)] * p[static_cast<std::size_t>(x + off)];
    }
  }
  return d;
}

namespace {

// p_d(z) 1{|z| <= R a_d}
struct Kernels {
  std::vector<std::vector<double>> p;
  std::vector<double> lim;
  std::int64_t x_max;
  double operator()(std::int64_t d, std::int64_t z) const {
    if (std::abs(static_cast<double>(z)) > lim[static_cast<std::size_t>(d)]) return 0.0;
    const std::int64_t off = d * x_max;
    if (z < -off || z > off) return 0.0;
    return p[static_cast<std::size_t>(d)][static_cast<std::size_t>(z + off)];
  }
};

Kernels make_kernels(const IncrementLaw& law, const ChainParams& c) {
  Kernels k;
  k.x_max = law.support_radius();
  k.p.resize(static_cast<std::size_t>(c.u) + 1);
  k.lim.resize(static_cast<std::size_t>(c.u) + 1);
  for (std::int64_t d = 1; d <= c.u; ++d) {
    k.p[static_cast<std::size_t>(d)] = sequential_pmf(law, d);
    k.lim[static_cast<std::size_t>(d)] = c.R * static_cast<double>(scaling(law, d));
  }
  return k;
}

// Calls fn(times) for every t_0 < ... < t_q with gaps in [1, u], t_0 in
// [1, t0_max], t_q <= l.
void for_each_time_chain(const ChainParams& c, std::int64_t t0_max,
                         const std::function<void(const std::vector<std::int64_t>&)>& fn) {
  std::vector<std::int64_t> t(static_cast<std::size_t>(c.q) + 1);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i > static_cast<std::size_t>(c.q)) {
      fn(t);
      return;
    }
    for (std::int64_t d = 1; d <= c.u && t[i - 1] + d <= c.l; ++d) {
      t[i] = t[i - 1] + d;
      rec(i + 1);
    }
  };
  for (std::int64_t t0 = 1; t0 <= t0_max; ++t0) {
    t[0] = t0;
    rec(1);
  }
}

double chain_direct(const IncrementLaw& law, const ChainParams& c, const SiteField* omega, bool squared) {
  const Kernels ker = make_kernels(law, c);
  const std::int64_t a_l = scaling(law, c.l);
  const double block = c.R * static_cast<double>(a_l);
  std::vector<std::int64_t> sites;
  for (std::int64_t x = -static_cast<std::int64_t>(block) - 1; x <= static_cast<std::int64_t>(block) + 1; ++x) {
    if (std::abs(static_cast<double>(x)) < block) sites.push_back(x);
  }
  long double total = 0.0L;
  std::vector<std::int64_t> xs(static_cast<std::size_t>(c.q) + 1);
  for_each_time_chain(c, c.l, [&](const std::vector<std::int64_t>& t) {
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == xs.size()) {
        double v = 1.0;
        for (std::size_t j = 1; j < xs.size(); ++j) {
          const double kv = ker(t[j] - t[j - 1], xs[j] - xs[j - 1]);
          v *= squared ? kv * kv : kv;
        }
        if (omega) {
          for (std::size_t j = 0; j < xs.size(); ++j) v *= (*omega)(t[j], xs[j]);
        }
        total += v;
        return;
      }
      for (std::int64_t x : sites) {
        xs[i] = x;
        rec(i + 1);
      }
    };
    rec(0);
  });
  const double norm2 = 1.0 / (2.0 * c.R * static_cast<double>(c.l) * static_cast<double>(a_l)) /
                       std::pow(overlap_d(law, c.u), static_cast<double>(c.q));
  return static_cast<double>(total) * (squared ? norm2 : std::sqrt(norm2));
}

}  // namespace

double x_direct(const IncrementLaw& law, const ChainParams& p, const SiteField& omega) {
  return chain_direct(law, p, &omega, false);
}

double x_second_moment_direct(const IncrementLaw& law, const ChainParams& p) {
  return chain_direct(law, p, nullptr, true);
}

double w_direct(const IncrementLaw& law, const ChainParams& p, const Path& path) {
  const Kernels ker = make_kernels(law, p);
  long double total = 0.0L;
  for_each_time_chain(p, p.l / 2, [&](const std::vector<std::int64_t>& t) {
    double v = 1.0;
    for (std::size_t j = 1; j < t.size(); ++j) {
      v *= ker(t[j] - t[j - 1], path[static_cast<std::size_t>(t[j])] - path[static_cast<std::size_t>(t[j - 1])]);
    }
    total += v;
  });
  return static_cast<double>(total) / (static_cast<double>(p.l) * std::pow(overlap_d(law, p.u), static_cast<double>(p.q)));
}

}  // namespace oracle
