#pragma once

// Seeded i.i.d. site disorder, its log-moment generating function and the
// derived quantities lambda', lambda'', gamma.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cauchy {

enum class EnvKind { gaussian_unit, rademacher, truncated_gaussian };

struct EnvSpec {
  EnvKind kind = EnvKind::gaussian_unit;
  std::uint64_t seed = 0;
  double truncation = 3.0;  // B for truncated_gaussian, before rescaling to unit variance
  double beta_max = 5.0;    // |beta| accepted by log_mgf and friends

  std::string kind_name() const;
  std::string fingerprint() const;
};

EnvKind parse_env_kind(const std::string& name);

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

/// lambda(beta) = log E[exp(beta omega)].
double log_mgf(const EnvSpec& spec, double beta);
double lambda_prime(const EnvSpec& spec, double beta);
double lambda_double_prime(const EnvSpec& spec, double beta);
/// lambda(2 beta) - 2 lambda(beta).
double gamma(const EnvSpec& spec, double beta);

/// Standard deviation of N(0,1) conditioned on |Z| <= b.
double truncated_gaussian_sigma(double b);

using SiteField = std::function<double(std::int64_t n, std::int64_t x)>;

/// omega(n, x) generated on demand from (seed, n, x); no state, any order.
class FieldView {
 public:
  explicit FieldView(EnvSpec spec);

  const EnvSpec& spec() const noexcept { return spec_; }
  double operator()(std::int64_t n, std::int64_t x) const;
  SiteField as_site_field() const;

 private:
  EnvSpec spec_;
  double scale_ = 1.0;  // 1/sigma_B for the truncated kind
  double erf_b_ = 0.0;
};

FieldView field(const EnvSpec& spec);

/// omega(n, x) + shift on the sites (n, path[n]) of a path, n = 1..path.size()-1.
SiteField tilted_along_path(SiteField base, std::vector<std::int64_t> path, double shift);

/// omega(n + dn, x + dx): the block shift used for coarse-grained statistics.
SiteField translated(SiteField base, std::int64_t dn, std::int64_t dx);

}  // namespace cauchy
