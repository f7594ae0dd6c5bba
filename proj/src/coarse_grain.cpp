#include "cauchy/coarse_grain.hpp"

#include <algorithm>
#include <cmath>

#include "cauchy/errors.hpp"
#include "cauchy/parallel.hpp"

namespace cauchy {
namespace {

double unit_uniform(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void check_scales(std::int64_t l, std::int64_t u, std::int64_t q) {
  if (q < 1) throw InvalidPlan("q must be >= 1");
  if (!(q < u && u < l)) {
    throw TooLargeBeta("scales collapse: need q < u < l, got q=" + std::to_string(q) + " u=" + std::to_string(u) +
                       " l=" + std::to_string(l));
  }
}

}  // namespace

CoarseGrainPlan plan(double beta, double eps, const OverlapTable& table, double theta, double r, double k) {
  if (!(beta > 0.0)) throw InvalidParameter("beta", "must be > 0");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("epsilon", "must lie in (0, 1)");
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("theta", "must lie in (0, 1)");
  const double thr = (1.0 + eps) / (beta * beta);
  const double ex = 1.0 - eps * eps;
  auto shrink = [ex](std::int64_t n) {
    return static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(n), ex)));
  };
  if (table.D(shrink(table.n_max)) < thr) throw NeedsLongerTable(thr, table.n_max);
  // D(shrink(n)) is nondecreasing in n
  std::int64_t lo = 0, hi = table.n_max;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (table.D(shrink(mid)) >= thr) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  CoarseGrainPlan p;
  p.eps = eps;
  p.beta = beta;
  p.theta = theta;
  p.R = r;
  p.K = k;
  p.l = hi;
  p.u = shrink(p.l);
  const double qa = std::log(std::sqrt(table.phi(p.l)));
  const double qb = std::log(table.D(p.l));
  p.q = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::max(qa, qb) / (eps * eps))));
  check_scales(p.l, p.u, p.q);
  p.beta2_du = beta * beta * table.D(p.u);
  p.upper_half_ok = p.beta2_du <= 1.0 + 2.0 * eps;
  return p;
}

CoarseGrainPlan manual_plan(std::int64_t l, std::int64_t u, std::int64_t q, double r, double k, double theta,
                            double beta, double eps) {
  if (!(r > 0.0)) throw InvalidParameter("R", "must be > 0");
  check_scales(l, u, q);
  CoarseGrainPlan p;
  p.l = l;
  p.u = u;
  p.q = q;
  p.R = r;
  p.K = k;
  p.theta = theta;
  p.beta = beta;
  p.eps = eps;
  p.manual = true;
  return p;
}

std::int64_t cell_index(std::int64_t x, std::int64_t a) {
  if (a < 1) throw InvalidParameter("a", "cell size must be >= 1");
  // ceil((2x - a) / (2a))
  return -floor_div(-(2 * x - a), 2 * a);
}

std::map<std::vector<std::int64_t>, double> coarse_decompose(const IncrementLaw& law, const SiteField& omega,
                                                             double lambda, double beta, std::int64_t m,
                                                             std::int64_t l) {
  if (m < 1 || l < 1) throw InvalidParameter("m", "m and l must be >= 1");
  if (m * l > 96) throw TooLarge("coarse_decompose: m*l above 96 is beyond exact evaluation");
  const std::int64_t a = scaling_constant(law, l);
  const std::int64_t radius = m * l * law.support_radius();
  const auto r = static_cast<std::size_t>(radius);
  const WindowConvolver conv(r, law.half());
  const std::size_t w = conv.width();
  std::map<std::vector<std::int64_t>, std::vector<double>> states;
  states[{}] = std::vector<double>(w, 0.0);
  states[{}][r] = 1.0;
  std::vector<double> f(w), tmp(w);
  const double el = std::exp(-lambda);
  for (std::int64_t n = 1; n <= m * l; ++n) {
    for (std::size_t i = 0; i < w; ++i) f[i] = std::exp(beta * omega(n, static_cast<std::int64_t>(i) - radius)) * el;
    for (auto& [key, v] : states) {
      conv.apply(v, tmp);
      for (std::size_t i = 0; i < w; ++i) v[i] = tmp[i] * f[i];
    }
    if (n % l != 0) continue;
    std::map<std::vector<std::int64_t>, std::vector<double>> split;
    for (auto& [key, v] : states) {
      for (std::size_t i = 0; i < w; ++i) {
        if (v[i] == 0.0) continue;
        auto k2 = key;
        k2.push_back(cell_index(static_cast<std::int64_t>(i) - radius, a));
        auto& dst = split[k2];
        if (dst.empty()) dst.assign(w, 0.0);
        dst[i] = v[i];
      }
    }
    states.swap(split);
    if (states.size() > 200000) throw TooLarge("coarse_decompose: too many coarse trajectories");
  }
  std::map<std::vector<std::int64_t>, double> out;
  for (const auto& [key, v] : states) {
    long double s = 0.0L;
    for (double x : v) s += x;
    out[key] = static_cast<double>(s);
  }
  return out;
}

ChainKernels::ChainKernels(const IncrementLaw& law, const CoarseGrainPlan& plan) : plan_(plan) {
  check_scales(plan.l, plan.u, plan.q);
  x_max_ = law.support_radius();
  const ScalingSequence seq = scaling_constants(law, plan.l);
  a_ = seq.a;
  a_l_ = seq.at(plan.l);
  rho_ = static_cast<std::int64_t>(std::ceil(plan.R * static_cast<double>(a_l_))) - 1;
  if (rho_ < 0) rho_ = 0;

  // Exact p_d for d <= u.
  p_.assign(static_cast<std::size_t>(plan.u) + 1, {});
  NStepPmf pmf = n_step_pmf(law, 1, plan.u * x_max_);
  long double du = 0.0L, dhat = 0.0L;
  for (std::int64_t d = 1; d <= plan.u; ++d) {
    if (d > 1) pmf = step_once(law, pmf);
    auto& row = p_[static_cast<std::size_t>(d)];
    row.resize(static_cast<std::size_t>(2 * d * x_max_ + 1));
    for (std::int64_t z = -d * x_max_; z <= d * x_max_; ++z) {
      const double v = pmf.prob(z);
      row[static_cast<std::size_t>(z + d * x_max_)] = v;
      du += static_cast<long double>(v) * v;
      if (std::abs(z) <= jump_limit(d)) dhat += static_cast<long double>(v) * v;
    }
  }
  d_u_ = static_cast<double>(du);
  d_hat_u_ = static_cast<double>(dhat);
  x_norm_ = 1.0 / std::sqrt(2.0 * plan.R * static_cast<double>(plan.l) * static_cast<double>(a_l_)) /
            std::pow(d_u_, 0.5 * static_cast<double>(plan.q));

  // Kernel spectra on a ring wide enough that block-to-block jumps never wrap.
  const std::int64_t w = 2 * rho_ + 1;
  std::int64_t kr_max = 0;
  for (std::int64_t d = 1; d <= plan.u; ++d) kr_max = std::max(kr_max, std::min({jump_limit(d), d * x_max_, 2 * rho_}));
  const std::size_t len = next_pow2(static_cast<std::size_t>(w + kr_max + 1));
  fft_ = RealFft::get(len);
  spec_.resize(static_cast<std::size_t>(plan.u) + 1);
  spec_sq_.resize(static_cast<std::size_t>(plan.u) + 1);
  std::vector<double> ring(len), ring_sq(len);
  for (std::int64_t d = 1; d <= plan.u; ++d) {
    std::fill(ring.begin(), ring.end(), 0.0);
    std::fill(ring_sq.begin(), ring_sq.end(), 0.0);
    const std::int64_t kr = std::min({jump_limit(d), d * x_max_, 2 * rho_});
    for (std::int64_t z = -kr; z <= kr; ++z) {
      const double v = kernel(d, z);
      const auto idx = static_cast<std::size_t>((z + static_cast<std::int64_t>(len)) % static_cast<std::int64_t>(len));
      ring[idx] = v;
      ring_sq[idx] = v * v;
    }
    fft_->forward(ring, spec_[static_cast<std::size_t>(d)]);
    fft_->forward(ring_sq, spec_sq_[static_cast<std::size_t>(d)]);
  }
}

std::int64_t ChainKernels::jump_limit(std::int64_t d) const {
  return static_cast<std::int64_t>(std::floor(plan_.R * static_cast<double>(a_.at(static_cast<std::size_t>(d)))));
}

double ChainKernels::kernel(std::int64_t d, std::int64_t z) const {
  if (d < 1 || d > plan_.u) return 0.0;
  if (std::abs(z) > jump_limit(d) || std::abs(z) > d * x_max_) return 0.0;
  return p_[static_cast<std::size_t>(d)][static_cast<std::size_t>(z + d * x_max_)];
}

double ChainKernels::w_exact_mean() const {
  const double frac = static_cast<double>(plan_.l / 2) / static_cast<double>(plan_.l);
  return frac * std::pow(d_hat_u_ / d_u_, static_cast<double>(plan_.q));
}

double ChainKernels::chain_sum(const SiteField* omega, bool squared) const {
  const std::int64_t l = plan_.l, u = plan_.u;
  const auto w = static_cast<std::size_t>(2 * rho_ + 1);
  const auto lz = static_cast<std::size_t>(l);
  std::vector<std::vector<double>> field_vals(lz + 1), h(lz + 1);
  for (std::size_t t = 1; t <= lz; ++t) {
    field_vals[t].resize(w);
    for (std::size_t i = 0; i < w; ++i) {
      field_vals[t][i] = omega ? (*omega)(static_cast<std::int64_t>(t), static_cast<std::int64_t>(i) - rho_) : 1.0;
    }
    h[t] = field_vals[t];
  }
  const auto& spectra = squared ? spec_sq_ : spec_;
  std::vector<ComplexBuffer> hs(lz + 1);
  ComplexBuffer acc(fft_->spectrum_size());
  RealBuffer out;
  for (std::int64_t level = 1; level <= plan_.q; ++level) {
    for (std::size_t s = 1; s <= lz; ++s) fft_->forward(h[s], hs[s]);
    for (std::int64_t t = l; t >= 1; --t) {
      const std::int64_t s_lo = std::max<std::int64_t>(1, t - u);
      auto& ht = h[static_cast<std::size_t>(t)];
      if (s_lo > t - 1) {
        std::fill(ht.begin(), ht.end(), 0.0);
        continue;
      }
      std::fill(acc.begin(), acc.end(), std::complex<double>(0.0, 0.0));
      for (std::int64_t s = s_lo; s < t; ++s) {
        const auto& hsp = hs[static_cast<std::size_t>(s)];
        const auto& ksp = spectra[static_cast<std::size_t>(t - s)];
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += hsp[j] * ksp[j];
      }
      fft_->inverse(acc, out);
      const auto& fv = field_vals[static_cast<std::size_t>(t)];
      for (std::size_t i = 0; i < w; ++i) ht[i] = out[i] * fv[i];
    }
  }
  long double total = 0.0L;
  for (std::size_t t = 1; t <= lz; ++t) {
    for (double v : h[t]) total += v;
  }
  return static_cast<double>(total);
}

double ChainKernels::x_statistic(const SiteField& omega) const { return x_norm_ * chain_sum(&omega, false); }

double ChainKernels::x_second_moment() const { return x_norm_ * x_norm_ * chain_sum(nullptr, true); }

double ChainKernels::w_statistic(const std::vector<std::int64_t>& path) const {
  const std::int64_t l = plan_.l, u = plan_.u, q = plan_.q;
  if (static_cast<std::int64_t>(path.size()) < l + 1) throw InvalidParameter("path", "trajectory shorter than l");
  if (l / 2 + q * u >= l) throw InvalidPlan("w_statistic needs l/2 + q u < l");
  const auto lz = static_cast<std::size_t>(l);
  std::vector<double> g(lz + 1, 0.0), next(lz + 1, 0.0);
  for (std::size_t t = 1; t <= lz / 2; ++t) g[t] = 1.0;
  for (std::int64_t level = 1; level <= q; ++level) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::int64_t t = 2; t <= l; ++t) {
      double s_acc = 0.0;
      for (std::int64_t s = std::max<std::int64_t>(1, t - u); s < t; ++s) {
        const double gs = g[static_cast<std::size_t>(s)];
        if (gs == 0.0) continue;
        s_acc += gs * kernel(t - s, path[static_cast<std::size_t>(t)] - path[static_cast<std::size_t>(s)]);
      }
      next[static_cast<std::size_t>(t)] = s_acc;
    }
    g.swap(next);
  }
  long double total = 0.0L;
  for (double v : g) total += v;
  return static_cast<double>(total) / (static_cast<double>(l) * std::pow(d_u_, static_cast<double>(q)));
}

double x_statistic(const ChainKernels& kernels, const SiteField& omega, std::int64_t i, std::int64_t y) {
  if (i < 1) throw InvalidParameter("i", "block index must be >= 1");
  return kernels.x_statistic(translated(omega, (i - 1) * kernels.plan().l, y * kernels.a_l()));
}

double g_function(double k, double x) { return x >= std::exp(k * k) ? std::exp(-k) : 1.0; }

WalkSampler::WalkSampler(const IncrementLaw& law) : x_max_(law.support_radius()) {
  cdf_.resize(static_cast<std::size_t>(2 * x_max_ + 1));
  long double acc = 0.0L;
  for (std::int64_t j = -x_max_; j <= x_max_; ++j) {
    acc += law.prob(j);
    cdf_[static_cast<std::size_t>(j + x_max_)] = static_cast<double>(acc);
  }
  cdf_.back() = 1.0;
}

std::vector<std::int64_t> WalkSampler::sample(std::uint64_t seed, std::uint64_t index, std::int64_t len) const {
  std::vector<std::int64_t> path(static_cast<std::size_t>(len) + 1, 0);
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (std::int64_t s = 1; s <= len; ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    const auto r = philox4x32({static_cast<std::uint32_t>(us), static_cast<std::uint32_t>(us >> 32),
                               static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)},
                              key);
    const double v = unit_uniform(r[0], r[1]);
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), v);
    const auto j = static_cast<std::int64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), std::ssize(cdf_) - 1));
    path[static_cast<std::size_t>(s)] = path[static_cast<std::size_t>(s - 1)] + j - x_max_;
  }
  return path;
}

FractionalMoment fractional_moment(const IncrementLaw& law, const EnvSpec& env, double beta, double theta,
                                   std::int64_t m, const WindowSpec& window, unsigned threads) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("theta", "must lie in (0, 1)");
  if (m < 2) throw InvalidParameter("M", "need at least 2 replicas");
  FractionalMoment fm;
  fm.beta = beta;
  fm.theta = theta;
  fm.N = window.N;
  fm.M = m;
  fm.seeds.resize(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < fm.seeds.size(); ++i) fm.seeds[i] = derive_seed(env.seed, i);
  const double lambda = log_mgf(env, beta);
  const auto samples = parallel_map<double>(fm.seeds.size(), threads, [&](std::size_t i) {
    EnvSpec e = env;
    e.seed = fm.seeds[i];
    const FieldView view = field(e);
    return std::exp(theta * run_polymer(law, view.as_site_field(), lambda, beta, window, false).log_zbar);
  });
  const SampleStats st = sample_stats(samples);
  fm.mean = st.mean;
  fm.std_error = st.std_error;
  fm.rate_proxy = std::log(fm.mean) / (theta * static_cast<double>(window.N));
  return fm;
}

}  // namespace cauchy
