#include "cauchy/polymer.hpp"

#include <algorithm>
#include <cmath>

#include "cauchy/errors.hpp"
#include "cauchy/fft.hpp"
#include "cauchy/parallel.hpp"

namespace cauchy {
namespace {

// Divides v by its maximum and returns the log of that maximum.
double rescale(std::vector<double>& v, const char* what) {
  double mx = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericOverflow(std::string(what) + ": non-finite weight");
    mx = std::max(mx, x);
  }
  if (!(mx > 0.0)) throw NumericOverflow(std::string(what) + ": all weight vanished");
  const double inv = 1.0 / mx;
  for (double& x : v) x *= inv;
  return std::log(mx);
}

struct Backward {
  std::vector<std::vector<double>> b;  // b[n][x + radius], n = 0..N
  std::vector<double> log_scale;
};

// b_N = 1, b_{n-1} = K (f_n b_n) with f_n = e^{beta omega(n, .)}.
Backward backward_pass(const PolymerRun& run) {
  if (!run.has_layers()) throw InvalidParameter("run", "layers were not kept");
  const WindowConvolver conv(static_cast<std::size_t>(run.radius), run.kernel_half);
  const std::size_t w = run.width();
  const auto n_steps = static_cast<std::size_t>(run.N);
  Backward out;
  out.b.assign(n_steps + 1, {});
  out.log_scale.assign(n_steps + 1, 0.0);
  out.b[n_steps].assign(w, 1.0);
  std::vector<double> tmp(w);
  for (std::size_t n = n_steps; n >= 1; --n) {
    for (std::size_t i = 0; i < w; ++i) tmp[i] = run.factors[n][i] * out.b[n][i];
    out.b[n - 1].assign(w, 0.0);
    conv.apply(tmp, out.b[n - 1]);
    out.log_scale[n - 1] = out.log_scale[n] + rescale(out.b[n - 1], "backward pass");
  }
  return out;
}

// log of the normalised weight of all window paths through (k, x), per k.
std::vector<std::vector<double>> log_path_weights(const PolymerRun& run, const Backward& bw) {
  const std::size_t w = run.width();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(run.N) + 1);
  for (std::size_t k = 0; k <= static_cast<std::size_t>(run.N); ++k) {
    out[k].resize(w);
    const double base = run.log_scale[k] + bw.log_scale[k] - static_cast<double>(run.N) * run.lambda;
    for (std::size_t i = 0; i < w; ++i) {
      const double v = run.layers[k][i] * bw.b[k][i];
      out[k][i] = v > 0.0 ? std::log(v) + base : -std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

}  // namespace

WindowSpec make_window(const IncrementLaw& law, std::int64_t n, double r) {
  if (n < 1) throw InvalidParameter("N", "must be >= 1");
  if (!(r > 0.0)) throw InvalidParameter("R", "must be > 0");
  WindowSpec w;
  w.R = r;
  w.N = n;
  const auto ra = static_cast<std::int64_t>(std::ceil(r * static_cast<double>(scaling_constant(law, n))));
  w.radius = std::max(ra, law.support_radius());
  return w;
}

WindowSpec wide_window(const IncrementLaw& law, std::int64_t n) {
  if (n < 1) throw InvalidParameter("N", "must be >= 1");
  return {std::numeric_limits<double>::infinity(), n, n * law.support_radius()};
}

PolymerRun run_polymer(const IncrementLaw& law, const SiteField& omega, double lambda, double beta,
                       const WindowSpec& window, bool keep_layers) {
  if (window.N < 1) throw InvalidParameter("N", "must be >= 1");
  if (window.radius < law.support_radius()) throw InvalidParameter("radius", "window must be >= X_max");
  PolymerRun run;
  run.beta = beta;
  run.lambda = lambda;
  run.N = window.N;
  run.radius = window.radius;
  run.kernel_half.assign(law.half().begin(), law.half().end());
  const auto r = static_cast<std::size_t>(window.radius);
  const WindowConvolver conv(r, run.kernel_half);
  const std::size_t w = conv.width();
  std::vector<double> cur(w, 0.0), next(w, 0.0), f(w, 0.0);
  cur[r] = 1.0;
  double log_s = 0.0;
  if (keep_layers) {
    run.layers.reserve(static_cast<std::size_t>(run.N) + 1);
    run.layers.push_back(cur);
    run.log_scale.push_back(0.0);
    run.factors.emplace_back();
  }
  for (std::int64_t n = 1; n <= run.N; ++n) {
    conv.apply(cur, next);
    for (std::size_t i = 0; i < w; ++i) {
      f[i] = std::exp(beta * omega(n, static_cast<std::int64_t>(i) - window.radius));
      next[i] *= f[i];
    }
    log_s += rescale(next, "run_polymer");
    std::swap(cur, next);
    if (keep_layers) {
      run.layers.push_back(cur);
      run.log_scale.push_back(log_s);
      run.factors.push_back(f);
    }
  }
  long double total = 0.0L;
  for (double v : cur) total += v;
  run.log_zbar = std::log(static_cast<double>(total)) + log_s - static_cast<double>(run.N) * lambda;
  if (!std::isfinite(run.log_zbar)) throw NumericOverflow("run_polymer: log Z_bar is not finite");
  return run;
}

PolymerRun run_polymer(const IncrementLaw& law, const EnvSpec& env, double beta, const WindowSpec& window,
                       bool keep_layers) {
  const FieldView view = field(env);
  return run_polymer(law, view.as_site_field(), log_mgf(env, beta), beta, window, keep_layers);
}

std::vector<std::vector<double>> gibbs_marginals(const PolymerRun& run) {
  const Backward bw = backward_pass(run);
  const std::size_t w = run.width();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(run.N) + 1, std::vector<double>(w));
  for (std::size_t k = 0; k < out.size(); ++k) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < w; ++i) {
      out[k][i] = run.layers[k][i] * bw.b[k][i];
      s += out[k][i];
    }
    const double inv = 1.0 / static_cast<double>(s);
    for (double& v : out[k]) v *= inv;
  }
  return out;
}

std::vector<double> gibbs_marginal(const PolymerRun& run, std::int64_t k) {
  if (k < 1 || k > run.N) throw InvalidParameter("k", "time must lie in [1, N]");
  return gibbs_marginals(run)[static_cast<std::size_t>(k)];
}

double grad_log_partition(const PolymerRun& run, const std::vector<std::vector<double>>& marginals, std::int64_t k,
                          std::int64_t x) {
  if (k < 1 || k > run.N) throw InvalidParameter("k", "time must lie in [1, N]");
  if (x < -run.radius || x > run.radius) throw InvalidParameter("x", "site outside the window");
  return run.beta * marginals[static_cast<std::size_t>(k)][static_cast<std::size_t>(x + run.radius)];
}

double grad_log_partition(const PolymerRun& run, std::int64_t k, std::int64_t x) {
  return grad_log_partition(run, gibbs_marginals(run), k, x);
}

double grad_norm_sq(const PolymerRun& run) {
  const auto m = gibbs_marginals(run);
  long double s = 0.0L;
  for (std::size_t k = 1; k < m.size(); ++k) {
    for (double v : m[k]) s += static_cast<long double>(v) * v;
  }
  return run.beta * run.beta * static_cast<double>(s);
}

double unrestricted_collision_weight(const IncrementLaw& law, const SiteField& omega, double lambda, double beta,
                                     std::int64_t n, std::int64_t window_radius) {
  const PolymerRun wide = run_polymer(law, omega, lambda, beta, wide_window(law, n));
  const auto logw = log_path_weights(wide, backward_pass(wide));
  long double s = 0.0L;
  for (std::size_t k = 1; k < logw.size(); ++k) {
    for (std::int64_t x = -std::min(window_radius, wide.radius); x <= std::min(window_radius, wide.radius); ++x) {
      s += std::exp(2.0L * logw[k][static_cast<std::size_t>(x + wide.radius)]);
    }
  }
  return static_cast<double>(s);
}

GradBound grad_norm_bound(const IncrementLaw& law, const SiteField& omega, double lambda, double beta,
                          const WindowSpec& window) {
  const PolymerRun run = run_polymer(law, omega, lambda, beta, window);
  const PolymerRun wide = run_polymer(law, omega, lambda, beta, wide_window(law, window.N));
  const auto logw = log_path_weights(wide, backward_pass(wide));
  long double s = 0.0L;
  const std::int64_t r = std::min(window.radius, wide.radius);
  for (std::size_t k = 1; k < logw.size(); ++k) {
    for (std::int64_t x = -r; x <= r; ++x) {
      s += std::exp(2.0L * (logw[k][static_cast<std::size_t>(x + wide.radius)] - run.log_zbar));
    }
  }
  GradBound g;
  g.grad_norm_sq = grad_norm_sq(run);
  g.rhs = beta * beta * static_cast<double>(s);
  g.holds = g.grad_norm_sq <= g.rhs * (1.0 + 1e-12);
  return g;
}

FreeEnergyEstimate estimate_free_energy(const IncrementLaw& law, const EnvSpec& env, double beta, std::int64_t m,
                                        const WindowSpec& window, unsigned threads) {
  if (m < 2) throw InvalidParameter("M", "need at least 2 replicas");
  FreeEnergyEstimate est;
  est.beta = beta;
  est.N = window.N;
  est.M = m;
  est.R = window.R;
  est.seeds.resize(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < est.seeds.size(); ++i) est.seeds[i] = derive_seed(env.seed, i);
  const double lambda = log_mgf(env, beta);
  est.samples = parallel_map<double>(est.seeds.size(), threads, [&](std::size_t i) {
    EnvSpec e = env;
    e.seed = est.seeds[i];
    const FieldView view = field(e);
    return run_polymer(law, view.as_site_field(), lambda, beta, window, false).log_zbar /
           static_cast<double>(window.N);
  });
  const SampleStats st = sample_stats(est.samples);
  est.mean = st.mean;
  est.std_error = st.std_error;
  return est;
}

std::int64_t n_beta_eps(double beta, double eps, const OverlapTable& table) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("epsilon", "must lie in (0, 1)");
  if (!(beta > 0.0)) throw InvalidParameter("beta", "must be > 0");
  return d_inverse(table, (1.0 - eps) / (beta * beta));
}

BoundReport bound_report(double beta, double eps, const OverlapTable& table) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("epsilon", "must lie in (0, 1)");
  if (!(beta > 0.0)) throw InvalidParameter("beta", "must be > 0");
  BoundReport rep;
  rep.beta = beta;
  rep.eps = eps;
  const double inf = std::numeric_limits<double>::infinity();
  const double b2 = beta * beta;

  const double up_arg = (1.0 + eps) / b2;
  const std::int64_t h_up = d_inverse(table, up_arg);
  const auto hu = static_cast<double>(h_up);
  rep.entries.push_back({"upper bound, exponent +(1+eps) as printed", true, up_arg, h_up, -std::pow(hu, 1.0 + eps),
                         "p(beta) <= -h^(1+eps)"});
  rep.entries.push_back({"upper bound, exponent -(1+eps)", true, up_arg, h_up,
                         h_up > 0 ? -std::pow(hu, -(1.0 + eps)) : -inf,
                         h_up > 0 ? "p(beta) <= -h^-(1+eps)" : "horizon 0, bound vacuous"});

  BoundEntry strong{"upper bound, beta^-4 form with C1 = C2 = 1", false, 1.0 / (b2 * b2), 0, 0.0,
                    "C1, C2 unspecified constants; placeholder 1"};
  try {
    strong.horizon = d_inverse(table, strong.argument);
    strong.value = -static_cast<double>(strong.horizon);
    strong.available = true;
  } catch (const NeedsLongerTable& e) {
    strong.note += "; needs D(N) > " + std::to_string(e.required_threshold());
  }
  rep.entries.push_back(strong);

  const double low_arg = (1.0 - eps) / b2;
  const std::int64_t h_low = d_inverse(table, low_arg);
  rep.entries.push_back({"lower bound, exponent -(1-eps)", true, low_arg, h_low,
                         h_low > 0 ? -std::pow(static_cast<double>(h_low), -(1.0 - eps)) : -inf,
                         h_low > 0 ? "p(beta) >= -h^-(1-eps)" : "horizon 0, bound vacuous"});

  // D(N) ~ C log N + K over the upper half of the dyadic levels.
  int top = 0;
  while ((std::int64_t{2} << top) <= table.n_max) ++top;
  const int from = std::max(1, (top + 1) / 2);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int cnt = 0;
  for (int j = from; j <= top; ++j) {
    const double x = std::log(static_cast<double>(std::int64_t{1} << j));
    const double y = table.D(std::int64_t{1} << j);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) {
    rep.fitted_c = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    rep.fitted_k = (sy - rep.fitted_c * sx) / cnt;
  }
  rep.c_llt_n = std::int64_t{1} << top;
  rep.c_llt = static_cast<double>(rep.c_llt_n) * table.collision_at(rep.c_llt_n);
  return rep;
}

}  // namespace cauchy
