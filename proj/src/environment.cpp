#include "cauchy/environment.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cauchy/errors.hpp"

namespace cauchy {
namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Phi(a) - Phi(b) for a > b, written with erfc so that far tails keep precision.
double norm_interval(double a, double b) {
  const double r = std::numbers::sqrt2;
  if (b >= 0.0) return 0.5 * (std::erfc(b / r) - std::erfc(a / r));
  if (a <= 0.0) return 0.5 * (std::erfc(-a / r) - std::erfc(-b / r));
  return 1.0 - 0.5 * (std::erfc(a / r) + std::erfc(-b / r));
}

// 53-bit uniform in (0, 1].
double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

void check_beta(const EnvSpec& spec, double beta) {
  if (!std::isfinite(beta) || std::abs(beta) > spec.beta_max) {
    throw InvalidParameter("beta", "outside the configured range [-" + std::to_string(spec.beta_max) + ", " +
                                       std::to_string(spec.beta_max) + "]");
  }
}

struct TruncatedTerms {
  double s, sigma, delta, d1, d2;
};

// Delta(s) = Phi(B - s) - Phi(-B - s) and its first two s-derivatives.
TruncatedTerms truncated_terms(const EnvSpec& spec, double beta) {
  const double b = spec.truncation;
  const double sigma = truncated_gaussian_sigma(b);
  const double s = beta / sigma;
  const double pm = norm_pdf(b - s), pp = norm_pdf(b + s);
  return {s, sigma, norm_interval(b - s, -b - s), pp - pm, -(b - s) * pm - (b + s) * pp};
}

}  // namespace

std::string EnvSpec::kind_name() const {
  switch (kind) {
    case EnvKind::gaussian_unit: return "gaussian-unit";
    case EnvKind::rademacher: return "rademacher";
    case EnvKind::truncated_gaussian: return "truncated-gaussian";
  }
  return "?";
}

std::string EnvSpec::fingerprint() const {
  std::ostringstream os;
  os << kind_name();
  if (kind == EnvKind::truncated_gaussian) os << "(" << truncation << ")";
  os << "-seed" << seed;
  return os.str();
}

EnvKind parse_env_kind(const std::string& name) {
  if (name == "gaussian-unit" || name == "gaussian") return EnvKind::gaussian_unit;
  if (name == "rademacher") return EnvKind::rademacher;
  if (name == "truncated-gaussian") return EnvKind::truncated_gaussian;
  throw InvalidParameter("env", "unknown kind '" + name + "'");
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double truncated_gaussian_sigma(double b) {
  if (!(b > 0.0)) throw InvalidParameter("truncation", "must be > 0");
  const double mass = norm_interval(b, -b);
  return std::sqrt(1.0 - 2.0 * b * norm_pdf(b) / mass);
}

double log_mgf(const EnvSpec& spec, double beta) {
  check_beta(spec, beta);
  switch (spec.kind) {
    case EnvKind::gaussian_unit: return 0.5 * beta * beta;
    case EnvKind::rademacher: {
      // log cosh without overflow
      const double a = std::abs(beta);
      return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
    }
    case EnvKind::truncated_gaussian: {
      const auto t = truncated_terms(spec, beta);
      return 0.5 * t.s * t.s + std::log(t.delta) - std::log(norm_interval(spec.truncation, -spec.truncation));
    }
  }
  return 0.0;
}

double lambda_prime(const EnvSpec& spec, double beta) {
  check_beta(spec, beta);
  switch (spec.kind) {
    case EnvKind::gaussian_unit: return beta;
    case EnvKind::rademacher: return std::tanh(beta);
    case EnvKind::truncated_gaussian: {
      const auto t = truncated_terms(spec, beta);
      return (t.s + t.d1 / t.delta) / t.sigma;
    }
  }
  return 0.0;
}

double lambda_double_prime(const EnvSpec& spec, double beta) {
  check_beta(spec, beta);
  switch (spec.kind) {
    case EnvKind::gaussian_unit: return 1.0;
    case EnvKind::rademacher: {
      const double c = std::cosh(beta);
      return 1.0 / (c * c);
    }
    case EnvKind::truncated_gaussian: {
      const auto t = truncated_terms(spec, beta);
      const double r = t.d1 / t.delta;
      return (1.0 + t.d2 / t.delta - r * r) / (t.sigma * t.sigma);
    }
  }
  return 0.0;
}

double gamma(const EnvSpec& spec, double beta) {
  if (spec.kind == EnvKind::gaussian_unit) {
    check_beta(spec, 2.0 * beta);
    return beta * beta;
  }
  return log_mgf(spec, 2.0 * beta) - 2.0 * log_mgf(spec, beta);
}

FieldView::FieldView(EnvSpec spec) : spec_(spec) {
  if (spec_.kind == EnvKind::truncated_gaussian) {
    scale_ = 1.0 / truncated_gaussian_sigma(spec_.truncation);
    erf_b_ = std::erf(spec_.truncation / std::numbers::sqrt2);
  }
}

double FieldView::operator()(std::int64_t n, std::int64_t x) const {
  const auto un = static_cast<std::uint64_t>(n), ux = static_cast<std::uint64_t>(x);
  const auto r = philox4x32({static_cast<std::uint32_t>(un), static_cast<std::uint32_t>(un >> 32),
                             static_cast<std::uint32_t>(ux), static_cast<std::uint32_t>(ux >> 32)},
                            {static_cast<std::uint32_t>(spec_.seed), static_cast<std::uint32_t>(spec_.seed >> 32)});
  switch (spec_.kind) {
    case EnvKind::gaussian_unit: {
      const double u1 = to_unit(r[0], r[1]), u2 = to_unit(r[2], r[3]);
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    case EnvKind::rademacher: return (r[0] & 1u) ? 1.0 : -1.0;
    case EnvKind::truncated_gaussian: {
      // inverse CDF on the truncated range, v uniform in (-erf(B/sqrt2), erf(B/sqrt2))
      const double v = (2.0 * to_unit(r[0], r[1]) - 1.0) * erf_b_;
      return std::numbers::sqrt2 * boost::math::erf_inv(v) * scale_;
    }
  }
  return 0.0;
}

SiteField FieldView::as_site_field() const {
  return [view = *this](std::int64_t n, std::int64_t x) { return view(n, x); };
}

FieldView field(const EnvSpec& spec) { return FieldView(spec); }

SiteField tilted_along_path(SiteField base, std::vector<std::int64_t> path, double shift) {
  return [base = std::move(base), path = std::move(path), shift](std::int64_t n, std::int64_t x) {
    double w = base(n, x);
    if (n >= 1 && n < static_cast<std::int64_t>(path.size()) && path[static_cast<std::size_t>(n)] == x) w += shift;
    return w;
  };
}

SiteField translated(SiteField base, std::int64_t dn, std::int64_t dx) {
  return [base = std::move(base), dn, dx](std::int64_t n, std::int64_t x) { return base(n + dn, x + dx); };
}

}  // namespace cauchy
