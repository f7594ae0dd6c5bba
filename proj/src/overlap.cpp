#include "cauchy/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "cauchy/errors.hpp"
#include "cauchy/fft.hpp"

namespace cauchy {
namespace {

constexpr std::size_t kMaxExactRing = std::size_t{1} << 24;

// Descending phi_j^2 values of one parity class, advanced one power of
// phi^2 per step. Entries whose contribution has fallen below the rounding
// floor are dropped from the end.
class PowerSum {
 public:
  explicit PowerSum(std::vector<double> g) : g_(std::move(g)) {
    std::sort(g_.begin(), g_.end(), std::greater<>());
    v_.assign(g_.size(), 1.0);
    active_ = g_.size();
  }

  double advance(double floor_scale) {
    double s = 0.0;
    const std::size_t n = active_;
    double* v = v_.data();
    const double* g = g_.data();
    for (std::size_t i = 0; i < n; ++i) {
      v[i] *= g[i];
      s += v[i];
    }
    while (active_ > 0 && v_[active_ - 1] * static_cast<double>(active_) < 1e-18 * floor_scale) --active_;
    return s;
  }

 private:
  std::vector<double> g_, v_;
  std::size_t active_ = 0;
};

void fill_prefix(OverlapTable& t) {
  t.d.assign(t.collision.size(), 0.0);
  double acc = 0.0;
  for (std::size_t n = 1; n < t.collision.size(); ++n) {
    acc += t.collision[n];
    t.d[n] = acc;
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void build_spectral(const IncrementLaw& law, OverlapTable& t) {
  const std::size_t m = t.ring_size;
  const CharacteristicGrid grid(law, m);
  auto phi = grid.values();
  const std::size_t half = m / 2;
  std::vector<double> even, odd;
  even.reserve(half / 2);
  odd.reserve(half / 2);
  for (std::size_t j = 1; j < half; ++j) {
    const double g = phi[j] * phi[j];
    (j % 2 == 0 ? even : odd).push_back(g);
  }
  const double g_half = phi[half] * phi[half];
  PowerSum se(std::move(even)), so(std::move(odd));
  double v_half = 1.0;
  double err_acc = 0.0;
  const auto md = static_cast<double>(m);
  for (std::int64_t n = 1; n <= t.n_max; ++n) {
    v_half *= g_half;
    // Floor relative to the constant j = 0 term, which dominates the sum.
    const double s_even = 1.0 + v_half + 2.0 * se.advance(md);
    const double s_odd = 2.0 * so.advance(md);
    const double c_full = (s_even + s_odd) / md;
    // Same sum on the ring of M/2 sites uses the even frequencies only.
    const double c_half = 2.0 * s_even / md;
    t.collision[static_cast<std::size_t>(n)] = c_full;
    err_acc += std::abs(c_half - c_full) / 3.0;
    t.error_bar[static_cast<std::size_t>(n)] = err_acc;
  }
}

void build_ring_stream(const IncrementLaw& law, OverlapTable& t) {
  RingPmfStream stream(law, t.ring_size);
  const bool exact = t.ring_size >= static_cast<std::size_t>(2 * t.n_max * law.support_radius() + 2);
  double err_acc = 0.0;
  for (std::int64_t n = 1; n <= t.n_max; ++n) {
    auto p = stream.next();
    double s = 0.0;
    for (double v : p) s += v * v;
    t.collision[static_cast<std::size_t>(n)] = s;
    if (!exact) {
      // Wrap-around pairs x, x + M: bounded by twice the mass beyond M/2 times the peak.
      double far = 0.0, peak = 0.0;
      const std::size_t f = p.size(), q = f / 4;
      for (std::size_t i = 0; i < f; ++i) {
        peak = std::max(peak, p[i]);
        if (i >= q && i < f - q) far += p[i];
      }
      err_acc += 2.0 * far * peak;
    }
    t.error_bar[static_cast<std::size_t>(n)] = err_acc;
  }
}

void build_convolution(const IncrementLaw& law, OverlapTable& t) {
  NStepPmf pmf = n_step_pmf(law, 1, t.window_radius);
  double err_acc = 0.0;
  for (std::int64_t n = 1; n <= t.n_max; ++n) {
    if (n > 1) pmf = step_once(law, pmf);
    double s = 0.0;
    for (double v : pmf.probs) s += v * v;
    t.collision[static_cast<std::size_t>(n)] = s;
    err_acc += 2.0 * pmf.truncation_loss;
    t.error_bar[static_cast<std::size_t>(n)] = err_acc;
  }
}

std::size_t exact_ring(const IncrementLaw& law, std::int64_t n) {
  const auto need = static_cast<std::size_t>(2 * n * law.support_radius() + 2);
  const std::size_t f = next_pow2(std::max<std::size_t>(need, 64));
  if (f > kMaxExactRing) {
    throw TooLarge("exact pmf ring of " + std::to_string(f) + " sites exceeds 2^24; reduce n or X_max");
  }
  return f;
}

WindowCollision collide(const IncrementLaw& law, std::int64_t n, const std::vector<std::int64_t>& sites) {
  if (n < 1) throw InvalidParameter("n", "must be >= 1");
  RingPmfStream stream(law, exact_ring(law, n));
  WindowCollision w;
  long double restricted = 0.0L, full = 0.0L;
  for (std::int64_t s = 1; s <= n; ++s) {
    auto p = stream.next();
    for (double v : p) full += static_cast<long double>(v) * v;
    for (std::int64_t x : sites) {
      const double v = stream.prob(x);
      restricted += static_cast<long double>(v) * v;
    }
  }
  w.restricted = static_cast<double>(restricted);
  w.full = static_cast<double>(full);
  w.holds = w.restricted <= w.full * (1.0 + 1e-12);
  return w;
}

}  // namespace

std::string method_name(OverlapMethod m) {
  switch (m) {
    case OverlapMethod::spectral: return "spectral";
    case OverlapMethod::ring_stream: return "ring";
    case OverlapMethod::convolution: return "convolution";
  }
  return "?";
}

OverlapMethod parse_method(const std::string& name) {
  if (name == "spectral") return OverlapMethod::spectral;
  if (name == "ring") return OverlapMethod::ring_stream;
  if (name == "convolution") return OverlapMethod::convolution;
  throw InvalidParameter("method", "unknown overlap method '" + name + "'");
}

OverlapTable build_overlap(const IncrementLaw& law, std::int64_t n_max, const OverlapOptions& opts) {
  if (n_max < 1) throw InvalidParameter("N_max", "must be >= 1");
  OverlapTable t;
  t.law_fingerprint = law.fingerprint();
  t.x_max = law.support_radius();
  t.n_max = n_max;
  t.method = opts.method;
  t.collision.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  t.collision[0] = 1.0;
  t.error_bar.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  const auto min_ring = static_cast<std::size_t>(2 * law.support_radius() + 2);
  switch (opts.method) {
    case OverlapMethod::spectral:
      t.ring_size = opts.ring_size ? opts.ring_size : next_pow2(min_ring);
      if (t.ring_size < min_ring) throw InvalidParameter("ring_size", "must be >= 2 X_max + 2");
      build_spectral(law, t);
      break;
    case OverlapMethod::ring_stream:
      t.ring_size = opts.ring_size ? opts.ring_size
                                   : next_pow2(std::max(min_ring, std::min<std::size_t>(
                                                                      static_cast<std::size_t>(2 * n_max * t.x_max + 2),
                                                                      std::size_t{1} << 22)));
      if (t.ring_size < min_ring) throw InvalidParameter("ring_size", "must be >= 2 X_max + 2");
      build_ring_stream(law, t);
      break;
    case OverlapMethod::convolution:
      t.window_radius = opts.window_radius ? opts.window_radius : n_max * t.x_max;
      build_convolution(law, t);
      break;
  }
  fill_prefix(t);
  const ScalingSequence seq = scaling_constants(law, n_max);
  t.a = seq.a;
  return t;
}

std::int64_t d_inverse(const OverlapTable& table, double x) {
  if (!(x >= 0.0)) throw InvalidParameter("x", "must be >= 0");
  if (table.d.back() <= x) throw NeedsLongerTable(x, table.n_max);
  // first index with D > x, minus one
  const auto it = std::upper_bound(table.d.begin(), table.d.end(), x);
  return static_cast<std::int64_t>(it - table.d.begin()) - 1;
}

RecurrenceReport recurrence_diagnostic(const IncrementLaw& law, std::int64_t n_max) {
  if (n_max < 2) throw InvalidParameter("N_max", "must be >= 2");
  RecurrenceReport r;
  // L(k) = k P(|S_1| > k) vanishes from X_max on.
  r.n_effective = std::min(n_max, law.support_radius() - 1);
  if (r.n_effective < 2) throw EmptyRange("recurrence_diagnostic: X_max too small for any L(k) > 0 beyond k = 1");
  const ScalingSequence seq = scaling_constants(law, r.n_effective);
  double s_nl = 0.0, s_a = 0.0;
  std::int64_t next = 1;
  for (std::int64_t k = 1; k <= r.n_effective; ++k) {
    s_nl += 1.0 / (static_cast<double>(k) * law.slowly_varying_value(k));
    s_a += 1.0 / static_cast<double>(seq.at(k));
    if (k == next || k == r.n_effective) {
      r.n.push_back(k);
      r.inv_nl_sum.push_back(s_nl);
      r.inv_a_sum.push_back(s_a);
      if (k == next) next *= 2;
    }
  }
  auto slope = [&](const std::vector<double>& ys) {
    double mx = 0.0, my = 0.0;
    const auto cnt = static_cast<double>(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
      mx += std::log(static_cast<double>(r.n[i]));
      my += ys[i];
    }
    mx /= cnt;
    my /= cnt;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double dx = std::log(static_cast<double>(r.n[i])) - mx;
      sxy += dx * (ys[i] - my);
      sxx += dx * dx;
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
  };
  r.inv_nl_slope = slope(r.inv_nl_sum);
  r.inv_a_slope = slope(r.inv_a_sum);
  // Flattening: the last dyadic level adds less than a quarter of the
  // average per-level increment.
  auto grows = [&](const std::vector<double>& ys) {
    const std::size_t m = ys.size();
    if (m < 4) return false;
    const double avg = (ys[m - 1] - ys[0]) / static_cast<double>(m - 1);
    return ys[m - 1] - ys[m - 2] >= 0.25 * avg;
  };
  r.recurrent_type = grows(r.inv_nl_sum) && grows(r.inv_a_sum);
  return r;
}

double restricted_overlap(const IncrementLaw& law, std::int64_t u, double r, std::size_t ring_size) {
  if (u < 1) throw InvalidParameter("u", "must be >= 1");
  if (!(r > 0.0)) throw InvalidParameter("R", "must be > 0");
  const ScalingSequence seq = scaling_constants(law, u);
  if (ring_size == 0) {
    const auto exact = static_cast<std::size_t>(2 * u * law.support_radius() + 2);
    const auto wide = static_cast<std::size_t>(64.0 * std::ceil(r * static_cast<double>(seq.at(u))));
    ring_size = next_pow2(std::max({static_cast<std::size_t>(2 * law.support_radius() + 2), std::min(exact, wide),
                                    std::size_t{64}}));
  }
  RingPmfStream stream(law, ring_size);
  const auto f = static_cast<std::int64_t>(ring_size);
  long double acc = 0.0L;
  for (std::int64_t t = 1; t <= u; ++t) {
    stream.next();
    const auto lim = static_cast<std::int64_t>(std::floor(r * static_cast<double>(seq.at(t))));
    const std::int64_t reach = std::min(lim, f / 2 - 1);
    for (std::int64_t x = -reach; x <= reach; ++x) {
      const double v = stream.prob(x);
      acc += static_cast<long double>(v) * v;
    }
  }
  return static_cast<double>(acc);
}

double d_ratio_check(const OverlapTable& table, std::int64_t q, std::int64_t u) {
  if (q < 1 || u < 1) throw InvalidParameter("q", "q and u must be >= 1");
  if (q * u > table.n_max) throw EmptyRange("d_ratio_check: q*u exceeds the table horizon");
  return table.D(q * u) / table.D(u);
}

WindowCollision window_collision_bound(const IncrementLaw& law, std::int64_t n, std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw EmptyRange("window_collision_bound: empty window");
  const std::int64_t reach = n * law.support_radius();
  lo = std::max(lo, -reach);
  hi = std::min(hi, reach);
  std::vector<std::int64_t> sites;
  for (std::int64_t x = lo; x <= hi; ++x) sites.push_back(x);
  return collide(law, n, sites);
}

WindowCollision window_collision_bound(const IncrementLaw& law, std::int64_t n,
                                       const std::vector<std::int64_t>& sites) {
  const std::int64_t reach = n * law.support_radius();
  std::set<std::int64_t> uniq;
  for (std::int64_t x : sites) {
    if (std::abs(x) <= reach) uniq.insert(x);
  }
  return collide(law, n, std::vector<std::int64_t>(uniq.begin(), uniq.end()));
}

PairMoment pair_overlap_moment(const IncrementLaw& law, const EnvSpec& env, double beta, std::int64_t n,
                               std::int64_t radius) {
  if (n < 1) throw InvalidParameter("N", "must be >= 1");
  if (radius < 0) throw InvalidParameter("radius", "must be >= 0");
  if (radius > kPairRadiusBudget) {
    throw TooLarge("pair_overlap_moment: radius " + std::to_string(radius) + " exceeds the budget of " +
                   std::to_string(kPairRadiusBudget));
  }
  const double g = gamma(env, beta);
  const double eg = std::exp(g);
  const auto r = static_cast<std::size_t>(radius);
  const WindowConvolver conv(r, law.half());
  const std::size_t w = conv.width();
  std::vector<double> v(w * w, 0.0), dv(w * w, 0.0);
  v[r * w + r] = 1.0;
  std::vector<double> col_in(w), col_out(w);

  // Apply the walk kernel along both axes of a w x w state.
  auto step = [&](std::vector<double>& s) {
    std::vector<double> tmp(w * w);
    for (std::size_t i = 0; i < w; ++i) {
      conv.apply(std::span<const double>(s.data() + i * w, w), std::span<double>(tmp.data() + i * w, w));
    }
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t i = 0; i < w; ++i) col_in[i] = tmp[i * w + j];
      conv.apply(col_in, col_out);
      for (std::size_t i = 0; i < w; ++i) s[i * w + j] = col_out[i];
    }
  };

  for (std::int64_t t = 1; t <= n; ++t) {
    step(v);
    step(dv);
    for (std::size_t i = 0; i < w; ++i) {
      const std::size_t k = i * w + i;
      // d/dgamma of e^gamma * v picks up v itself on the diagonal.
      dv[k] = eg * (dv[k] + v[k]);
      v[k] *= eg;
    }
  }
  PairMoment out;
  long double sv = 0.0L, sd = 0.0L;
  for (std::size_t k = 0; k < v.size(); ++k) {
    sv += v[k];
    sd += dv[k];
  }
  out.moment = static_cast<double>(sv);
  out.y_weighted = beta * beta * static_cast<double>(sd);
  return out;
}

void write_overlap_table(std::ostream& os, const OverlapTable& t) {
  os << "# overlap law=" << t.law_fingerprint << " X_max=" << t.x_max << " n_max=" << t.n_max
     << " method=" << method_name(t.method) << " ring=" << t.ring_size << " window=" << t.window_radius << "\n";
  os << "n,collision,D,a_n,error_bar\n";
  for (std::int64_t n = 1; n <= t.n_max; ++n) {
    const auto i = static_cast<std::size_t>(n);
    os << n << ',' << fmt(t.collision[i]) << ',' << fmt(t.d[i]) << ',' << t.a[i] << ',' << fmt(t.error_bar[i])
       << '\n';
  }
}

OverlapTable read_overlap_table(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# overlap ", 0) != 0) throw Error("overlap table: missing header");
  std::map<std::string, std::string> kv;
  {
    std::istringstream hs(line.substr(10));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  for (const char* key : {"law", "X_max", "n_max", "method", "ring", "window"}) {
    if (!kv.count(key)) throw Error(std::string("overlap table: header lacks ") + key);
  }
  OverlapTable t;
  try {
    t.law_fingerprint = kv["law"];
    t.x_max = std::stoll(kv["X_max"]);
    t.n_max = std::stoll(kv["n_max"]);
    t.method = parse_method(kv["method"]);
    t.ring_size = std::stoull(kv["ring"]);
    t.window_radius = std::stoll(kv["window"]);
  } catch (const std::exception& e) {
    throw Error(std::string("overlap table: bad header value: ") + e.what());
  }
  if (t.n_max < 1 || t.n_max > (std::int64_t{1} << 30)) throw Error("overlap table: bad n_max");
  if (!std::getline(is, line) || line != "n,collision,D,a_n,error_bar") throw Error("overlap table: bad column line");
  const auto size = static_cast<std::size_t>(t.n_max) + 1;
  t.collision.assign(size, 0.0);
  t.collision[0] = 1.0;
  t.d.assign(size, 0.0);
  t.error_bar.assign(size, 0.0);
  t.a.assign(size, 0);
  std::int64_t expect = 1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream rs(line);
    std::int64_t n, a;
    double c, d, e;
    char c1, c2, c3, c4;
    if (!(rs >> n >> c1 >> c >> c2 >> d >> c3 >> a >> c4 >> e) || c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
      throw Error("overlap table: malformed row " + std::to_string(expect));
    }
    if (n != expect || n > t.n_max) throw Error("overlap table: row index out of sequence at " + std::to_string(expect));
    const auto i = static_cast<std::size_t>(n);
    t.collision[i] = c;
    t.d[i] = d;
    t.a[i] = a;
    t.error_bar[i] = e;
    ++expect;
  }
  if (expect != t.n_max + 1) throw Error("overlap table: truncated (" + std::to_string(expect - 1) + " rows)");
  for (std::size_t i = 1; i < size; ++i) {
    if (!(t.collision[i] >= 0.0) || t.d[i] < t.d[i - 1] || t.a[i] < t.a[i - 1] || t.a[i] < 1) {
      throw Error("overlap table: inconsistent values at n=" + std::to_string(i));
    }
    if (std::abs(t.d[i] - t.d[i - 1] - t.collision[i]) > 1e-9 * std::max(1.0, t.d[i])) {
      throw Error("overlap table: D is not the prefix sum of collision at n=" + std::to_string(i));
    }
  }
  return t;
}

}  // namespace cauchy
