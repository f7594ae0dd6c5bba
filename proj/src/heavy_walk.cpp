#include "cauchy/heavy_walk.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "cauchy/errors.hpp"
#include "cauchy/fft.hpp"

namespace cauchy {

IncrementLaw::IncrementLaw(std::vector<double> half_probs, double tail_constant, SlowlyVarying sv)
    : half_(std::move(half_probs)), c_(tail_constant), sv_(sv) {
  if (half_.size() < 2) throw InvalidParameter("X_max", "support radius must be >= 1");
  const std::size_t x = half_.size() - 1;
  tail_.assign(x + 1, 0.0);
  // Accumulate from the far end so small tail masses keep their precision.
  double acc = 0.0;
  for (std::size_t a = x; a-- > 0;) {
    acc += 2.0 * half_[a + 1];
    tail_[a] = acc;
  }
}

double IncrementLaw::prob(std::int64_t k) const noexcept {
  const std::int64_t a = k < 0 ? -k : k;
  return a > support_radius() ? 0.0 : half_[static_cast<std::size_t>(a)];
}

double IncrementLaw::tail(std::int64_t a) const noexcept {
  if (a < 0) return 1.0;
  return a >= support_radius() ? 0.0 : tail_[static_cast<std::size_t>(a)];
}

std::string IncrementLaw::fingerprint() const {
  std::ostringstream os;
  if (sv_.kind == SlowlyVarying::Kind::constant) {
    os << "canonical-X" << support_radius();
  } else {
    os << "logpow" << std::setprecision(6) << sv_.exponent << "-X" << support_radius();
  }
  return os.str();
}

IncrementLaw build_canonical_law(std::int64_t x_max) {
  if (x_max < 1) throw InvalidParameter("X_max", "must be >= 1");
  std::vector<double> half(static_cast<std::size_t>(x_max) + 1, 0.0);
  double s = 0.0;
  for (std::int64_t k = x_max; k >= 1; --k) s += 1.0 / (static_cast<double>(k) * static_cast<double>(k));
  const double c = 1.0 / (2.0 * s);
  for (std::int64_t k = 1; k <= x_max; ++k) {
    half[static_cast<std::size_t>(k)] = c / (static_cast<double>(k) * static_cast<double>(k));
  }
  return IncrementLaw(std::move(half), c, {SlowlyVarying::Kind::constant, 0.0});
}

IncrementLaw build_log_power_law(std::int64_t x_max, double exponent) {
  if (x_max < 1) throw InvalidParameter("X_max", "must be >= 1");
  std::vector<double> half(static_cast<std::size_t>(x_max) + 1, 0.0);
  double s = 0.0;
  for (std::int64_t k = x_max; k >= 1; --k) {
    const double kd = static_cast<double>(k);
    const double w = std::pow(std::log(std::numbers::e + kd), exponent) / (kd * kd);
    half[static_cast<std::size_t>(k)] = w;
    s += w;
  }
  const double c = 1.0 / (2.0 * s);
  for (auto& v : half) v *= c;
  return IncrementLaw(std::move(half), c, {SlowlyVarying::Kind::log_power, exponent});
}

double NStepPmf::mass() const {
  long double s = 0.0L;
  for (double p : probs) s += p;
  return static_cast<double>(s);
}

namespace {

NStepPmf single_step(const IncrementLaw& law, std::int64_t window) {
  NStepPmf p;
  p.n = 1;
  p.window_radius = window;
  p.radius = std::min(window, law.support_radius());
  p.probs.resize(static_cast<std::size_t>(2 * p.radius + 1));
  for (std::int64_t k = -p.radius; k <= p.radius; ++k) p.probs[static_cast<std::size_t>(k + p.radius)] = law.prob(k);
  // Only reachable when window < X_max, which callers reject; kept for step_once.
  long double dropped = 0.0L;
  for (std::int64_t k = p.radius + 1; k <= law.support_radius(); ++k) dropped += 2.0L * law.prob(k);
  p.truncation_loss = static_cast<double>(dropped);
  return p;
}

NStepPmf convolve_restricted(const NStepPmf& a, const NStepPmf& b) {
  std::vector<double> full = linear_convolve(a.probs, b.probs);
  const std::int64_t full_radius = a.radius + b.radius;
  NStepPmf out;
  out.n = a.n + b.n;
  out.window_radius = a.window_radius;
  out.radius = std::min(a.window_radius, full_radius);
  out.probs.resize(static_cast<std::size_t>(2 * out.radius + 1));
  long double dropped = 0.0L;
  for (std::int64_t k = -full_radius; k <= full_radius; ++k) {
    double v = full[static_cast<std::size_t>(k + full_radius)];
    if (v < 0.0) v = 0.0;
    if (k < -out.radius || k > out.radius) {
      dropped += v;
    } else {
      out.probs[static_cast<std::size_t>(k + out.radius)] = v;
    }
  }
  // transform round-off is not symmetric
  for (std::int64_t k = 1; k <= out.radius; ++k) {
    auto& lo = out.probs[static_cast<std::size_t>(out.radius - k)];
    auto& hi = out.probs[static_cast<std::size_t>(out.radius + k)];
    lo = hi = 0.5 * (lo + hi);
  }
  // Mass already lost by either factor is lost for the sum as well.
  const double la = a.truncation_loss, lb = b.truncation_loss;
  out.truncation_loss = la + lb - la * lb + static_cast<double>(dropped);
  return out;
}

}  // namespace

NStepPmf n_step_pmf(const IncrementLaw& law, std::int64_t n, std::int64_t window_radius) {
  if (n < 1) throw InvalidParameter("n", "step count must be >= 1");
  if (window_radius < law.support_radius()) {
    throw InvalidParameter("window_radius", "must be >= the single-step support radius");
  }
  NStepPmf power = single_step(law, window_radius);
  NStepPmf result;
  bool have_result = false;
  for (std::int64_t bits = n; bits > 0; bits >>= 1) {
    if (bits & 1) {
      result = have_result ? convolve_restricted(result, power) : power;
      have_result = true;
    }
    if (bits > 1) power = convolve_restricted(power, power);
  }
  return result;
}

NStepPmf step_once(const IncrementLaw& law, const NStepPmf& pmf) {
  return convolve_restricted(pmf, single_step(law, pmf.window_radius));
}

void write_pmf(std::ostream& os, const NStepPmf& pmf, std::int64_t x_max) {
  os << "# n=" << pmf.n << " X_max=" << x_max << " truncation_loss=" << std::setprecision(17)
     << pmf.truncation_loss << " window=" << pmf.window_radius << "\n";
  os << "offset\tprobability\n";
  for (std::int64_t k = -pmf.radius; k <= pmf.radius; ++k) os << k << '\t' << pmf.prob(k) << '\n';
}

NStepPmf read_pmf(std::istream& is) {
  NStepPmf pmf;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw Error("pmf: missing header line");
  std::istringstream hs(line.substr(2));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "n") pmf.n = std::stoll(val);
    if (key == "truncation_loss") pmf.truncation_loss = std::stod(val);
    if (key == "window") pmf.window_radius = std::stoll(val);
  }
  std::getline(is, line);  // column names
  std::vector<std::pair<std::int64_t, double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream rs(line);
    std::int64_t k;
    double p;
    if (!(rs >> k >> p)) throw Error("pmf: malformed row '" + line + "'");
    rows.emplace_back(k, p);
  }
  if (rows.empty() || rows.front().first != -rows.back().first) throw Error("pmf: rows must span [-r, r]");
  pmf.radius = rows.back().first;
  pmf.probs.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) pmf.probs[i] = rows[i].second;
  return pmf;
}

std::int64_t scaling_constant(const IncrementLaw& law, std::int64_t n) {
  if (n < 1) throw InvalidParameter("n", "must be >= 1");
  const double nd = static_cast<double>(n);
  std::int64_t lo = 1, hi = std::max<std::int64_t>(1, law.support_radius());
  if (nd * law.tail(lo) <= 1.0) return lo;
  // invariant: n*tail(lo) > 1 >= n*tail(hi)
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (nd * law.tail(mid) <= 1.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

ScalingSequence scaling_constants(const IncrementLaw& law, std::int64_t n_max) {
  if (n_max < 1) throw InvalidParameter("n_max", "must be >= 1");
  ScalingSequence s;
  s.a.assign(static_cast<std::size_t>(n_max) + 1, 0);
  s.phi.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  std::int64_t a = 1;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    // a_n is nondecreasing, so walk forward from the previous value.
    const double nd = static_cast<double>(n);
    if (nd * law.tail(a) > 1.0) {
      std::int64_t step = 1;
      std::int64_t hi = a + step;
      while (nd * law.tail(hi) > 1.0) {
        a = hi;
        step *= 2;
        hi = a + step;
      }
      while (hi - a > 1) {
        const std::int64_t mid = a + (hi - a) / 2;
        if (nd * law.tail(mid) <= 1.0) {
          hi = mid;
        } else {
          a = mid;
        }
      }
      a = hi;
    }
    s.a[static_cast<std::size_t>(n)] = a;
    s.phi[static_cast<std::size_t>(n)] = static_cast<double>(a) / nd;
  }
  return s;
}

CharacteristicGrid::CharacteristicGrid(const IncrementLaw& law, std::size_t ring_size) : m_(ring_size) {
  if (m_ < 4 || (m_ & (m_ - 1)) != 0) throw InvalidParameter("ring_size", "must be a power of two >= 4");
  const std::size_t half = m_ / 2;
  // Periodise the symmetric law onto 0..M/2 (the other half mirrors it).
  std::vector<double> x(half + 1, 0.0);
  for (std::int64_t k = -law.support_radius(); k <= law.support_radius(); ++k) {
    const auto m = static_cast<std::int64_t>(m_);
    std::int64_t r = ((k % m) + m) % m;
    if (r > static_cast<std::int64_t>(half)) continue;
    x[static_cast<std::size_t>(r)] += law.prob(k);
  }
  // Residues in (M/2, M) mirror those in (0, M/2) by symmetry of the law.
  dct1_inplace(x);
  phi_ = std::move(x);
}

double CharacteristicGrid::return_probability(std::int64_t n) const {
  const std::size_t half = m_ / 2;
  const double e = static_cast<double>(n);
  long double s = 1.0L + std::pow(phi_[half], e);
  for (std::size_t j = 1; j < half; ++j) {
    const double v = phi_[j];
    if (v == 0.0) continue;
    s += 2.0L * std::pow(v, e);
  }
  return static_cast<double>(s / static_cast<long double>(m_));
}

std::size_t spectral_ring_size(const IncrementLaw& law, std::int64_t n) {
  const auto need_law = static_cast<std::size_t>(2 * law.support_radius() + 2);
  const auto need_alias = static_cast<std::size_t>(256 * std::max<std::int64_t>(n, 1));
  return next_pow2(std::max({need_law, need_alias, std::size_t{64}}));
}

double estimate_g0(const IncrementLaw& law, std::int64_t n) {
  if (n < 1) throw InvalidParameter("n", "must be >= 1");
  const CharacteristicGrid grid(law, spectral_ring_size(law, n));
  return static_cast<double>(scaling_constant(law, n)) * grid.return_probability(n);
}

double fitted_cauchy_density(double g0, double y) {
  const double z = std::numbers::pi * g0 * y;
  return g0 / (1.0 + z * z);
}

double llt_error_profile(const NStepPmf& pmf, std::int64_t a_n, double g0) {
  const double a = static_cast<double>(a_n);
  double worst = 0.0;
  for (std::int64_t x = -pmf.radius; x <= pmf.radius; ++x) {
    const double d = std::abs(a * pmf.prob(x) - fitted_cauchy_density(g0, static_cast<double>(x) / a));
    worst = std::max(worst, d);
  }
  return worst;
}

NStepPmf ring_pmf(const IncrementLaw& law, std::int64_t n, std::size_t ring_size) {
  if (n < 1) throw InvalidParameter("n", "must be >= 1");
  if (ring_size < 4 || (ring_size & (ring_size - 1)) != 0) {
    throw InvalidParameter("ring_size", "must be a power of two >= 4");
  }
  const auto f = static_cast<std::int64_t>(ring_size);
  std::vector<double> ring(ring_size, 0.0);
  for (std::int64_t k = -law.support_radius(); k <= law.support_radius(); ++k) {
    ring[static_cast<std::size_t>(((k % f) + f) % f)] += law.prob(k);
  }
  auto fft = RealFft::get(ring_size);
  ComplexBuffer spec;
  fft->forward(ring, spec);
  // The spectrum of a symmetric law is real.
  for (auto& z : spec) z = std::pow(z.real(), static_cast<double>(n));
  RealBuffer out;
  fft->inverse(spec, out);
  NStepPmf p;
  p.n = n;
  p.radius = std::min(f / 2 - 1, n * law.support_radius());
  p.window_radius = p.radius;
  p.probs.resize(static_cast<std::size_t>(2 * p.radius + 1));
  long double kept = 0.0L;
  for (std::int64_t k = -p.radius; k <= p.radius; ++k) {
    const double v = std::max(0.0, out[static_cast<std::size_t>(((k % f) + f) % f)]);
    p.probs[static_cast<std::size_t>(k + p.radius)] = v;
    kept += v;
  }
  p.truncation_loss = std::max(0.0, 1.0 - static_cast<double>(kept));
  return p;
}

std::size_t diagnostic_ring_size(const IncrementLaw& law, std::int64_t n, std::int64_t window_radius) {
  const auto exact = static_cast<std::size_t>(2 * n * law.support_radius() + 2);
  const auto wide = static_cast<std::size_t>(64 * (window_radius + 1));
  return next_pow2(std::max({std::min(exact, wide), static_cast<std::size_t>(2 * law.support_radius() + 2),
                             std::size_t{64}}));
}

double llt_error_profile(const IncrementLaw& law, std::int64_t n, double g0, std::int64_t window_radius) {
  if (n < 1) throw InvalidParameter("n", "must be >= 1");
  NStepPmf pmf = ring_pmf(law, n, diagnostic_ring_size(law, n, window_radius));
  const std::int64_t r = std::min(pmf.radius, window_radius);
  NStepPmf cut;
  cut.n = n;
  cut.radius = r;
  cut.window_radius = r;
  cut.probs.assign(pmf.probs.begin() + (pmf.radius - r), pmf.probs.begin() + (pmf.radius + r + 1));
  return llt_error_profile(cut, scaling_constant(law, n), g0);
}

double berger_ratio(const NStepPmf& pmf, const IncrementLaw& law, std::int64_t a_n, double c1,
                    std::int64_t window_radius) {
  if (!(c1 > 0.0)) throw InvalidParameter("c1", "must be > 0");
  const auto k_lo = static_cast<std::int64_t>(std::ceil(c1 * static_cast<double>(a_n)));
  const std::int64_t k_hi = std::min({window_radius, pmf.radius, law.support_radius() - 1});
  if (k_lo > k_hi) throw EmptyRange("berger_ratio: no k with |k| >= c1 a_n inside the window");
  const double nd = static_cast<double>(pmf.n);
  double best = 0.0;
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    const double l = law.slowly_varying_value(k);
    if (!(l > 0.0)) continue;
    const double kd = static_cast<double>(k);
    const double p = std::max(pmf.prob(k), pmf.prob(-k));
    best = std::max(best, p * kd * kd / (nd * l));
  }
  return best;
}

double berger_ratio(const IncrementLaw& law, std::int64_t n, double c1, std::int64_t window_radius) {
  const std::int64_t a_n = scaling_constant(law, n);
  const auto k_lo = static_cast<std::int64_t>(std::ceil(c1 * static_cast<double>(a_n)));
  if (k_lo > std::min(window_radius, law.support_radius() - 1)) {
    throw EmptyRange("berger_ratio: no k with |k| >= c1 a_n inside the window");
  }
  const NStepPmf pmf = ring_pmf(law, n, diagnostic_ring_size(law, n, window_radius));
  return berger_ratio(pmf, law, a_n, c1, window_radius);
}

RingPmfStream::RingPmfStream(const IncrementLaw& law, std::size_t ring_size) : f_(ring_size) {
  if (f_ < 4 || (f_ & (f_ - 1)) != 0) throw InvalidParameter("ring_size", "must be a power of two >= 4");
  std::vector<double> ring(f_, 0.0);
  const auto f = static_cast<std::int64_t>(f_);
  for (std::int64_t k = -law.support_radius(); k <= law.support_radius(); ++k) {
    ring[static_cast<std::size_t>(((k % f) + f) % f)] += law.prob(k);
  }
  auto fft = RealFft::get(f_);
  ComplexBuffer spec;
  fft->forward(ring, spec);
  phi_.resize(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) phi_[i] = spec[i].real();
  power_.assign(phi_.size(), 1.0);
}

std::span<const double> RingPmfStream::next() {
  for (std::size_t i = 0; i < power_.size(); ++i) power_[i] *= phi_[i];
  ++t_;
  auto fft = RealFft::get(f_);
  ComplexBuffer spec(power_.size());
  for (std::size_t i = 0; i < power_.size(); ++i) spec[i] = power_[i];
  RealBuffer out;
  fft->inverse(spec, out);
  current_.assign(out.begin(), out.end());
  for (double& v : current_) v = v > 0.0 ? v : 0.0;
  return current_;
}

double RingPmfStream::prob(std::int64_t k) const {
  const auto f = static_cast<std::int64_t>(f_);
  return current_.at(static_cast<std::size_t>(((k % f) + f) % f));
}

}  // namespace cauchy
