#include "cauchy/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "cauchy/coarse_grain.hpp"
#include "cauchy/environment.hpp"
#include "cauchy/errors.hpp"
#include "cauchy/heavy_walk.hpp"
#include "cauchy/overlap.hpp"
#include "cauchy/parallel.hpp"
#include "cauchy/polymer.hpp"

namespace cauchy {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"llt", "local limit error and Berger ratio of the n-step walk"},
    {"overlap", "collision probabilities and the overlap D(N)"},
    {"free-energy", "Monte Carlo estimate of E[log Z_bar] / N"},
    {"xstat", "chain statistic X, g cost and walk statistic W under a plan"},
    {"fracmoment", "fractional moment E[Z_bar^theta]"},
    {"bounds", "free-energy bound report from D^-1"},
    {"decompose", "exact coarse-grained decomposition Z_Y"},
};

void log_line(const std::string& msg) { std::cerr << "[cauchy] " << msg << '\n'; }

std::string num(double v) {
  if (v == 0.0) return "0";
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// JSON cannot carry infinities; store them as strings.
json jnum(double v) {
  if (v == 0.0) return 0.0;
  if (std::isfinite(v)) return v;
  return num(v);
}

std::int64_t get_int(const json& c, const char* key, std::int64_t lo, std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
  const json& v = c.at(key);
  if (!v.is_number_integer()) throw InvalidParameter(key, "must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi) {
    throw InvalidParameter(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return x;
}

double get_num(const json& c, const char* key, double lo, double hi) {
  const json& v = c.at(key);
  if (!v.is_number()) throw InvalidParameter(key, "must be a number");
  const auto x = v.get<double>();
  if (!(x >= lo && x <= hi)) throw InvalidParameter(key, "must lie in [" + num(lo) + ", " + num(hi) + "]");
  return x;
}

std::vector<double> get_num_list(const json& c, const char* key, double lo, double hi) {
  json arr = c.at(key);
  if (!arr.is_array()) arr = json::array({arr});
  if (arr.empty()) throw InvalidParameter(key, "must not be empty");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) throw InvalidParameter(key, "entries must be numbers");
    const auto x = v.get<double>();
    if (!(x >= lo && x <= hi)) throw InvalidParameter(key, "entries must lie in [" + num(lo) + ", " + num(hi) + "]");
    out.push_back(x);
  }
  return out;
}

std::vector<std::int64_t> get_int_list(const json& c, const char* key, std::int64_t lo, std::int64_t hi) {
  json arr = c.at(key);
  if (!arr.is_array()) arr = json::array({arr});
  if (arr.empty()) throw InvalidParameter(key, "must not be empty");
  std::vector<std::int64_t> out;
  for (const auto& v : arr) {
    if (!v.is_number_integer()) throw InvalidParameter(key, "entries must be integers");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi) {
      throw InvalidParameter(key, "entries must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    out.push_back(x);
  }
  return out;
}

std::uint64_t get_seed(const json& c) {
  const json& v = c.at("seed");
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw InvalidParameter("seed", "must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

IncrementLaw make_law(const json& c) {
  const std::int64_t x = get_int(c, "X_max", 1, std::int64_t{1} << 24);
  const std::string kind = c.at("law").get<std::string>();
  if (kind == "canonical") return build_canonical_law(x);
  if (kind == "logpow") return build_log_power_law(x, get_num(c, "law_exponent", -10.0, 10.0));
  throw InvalidParameter("law", "expected canonical or logpow");
}

EnvSpec make_env(const json& c) {
  EnvSpec e;
  e.kind = parse_env_kind(c.at("env").get<std::string>());
  e.seed = get_seed(c);
  e.truncation = get_num(c, "truncation", 0.5, 20.0);
  return e;
}

WindowSpec make_window_cfg(const IncrementLaw& law, std::int64_t n, double r) {
  return r == 0.0 ? wide_window(law, n) : make_window(law, n, r);
}

class Outputs {
 public:
  Outputs(std::string command, const json& config) : command_(std::move(command)), config_(config) {
    fingerprint_ = config_fingerprint(config);
    csv_ << "# " << command_ << " config=" << fingerprint_ << '\n';
    meta_["command"] = command_;
    meta_["config"] = config;
    meta_["config_fingerprint"] = fingerprint_;
    meta_["version"] = kVersion;
  }

  std::ostringstream& csv() { return csv_; }
  json& meta() { return meta_; }

  void write(const std::string& out_dir) const {
    fs::create_directories(out_dir);
    const fs::path base = fs::path(out_dir) / command_;
    std::ofstream(base.string() + ".csv", std::ios::binary) << csv_.str();
    std::ofstream(base.string() + ".json", std::ios::binary) << meta_.dump(2) << '\n';
    log_line("wrote " + base.string() + ".csv and .json");
  }

 private:
  std::string command_;
  json config_;
  std::string fingerprint_;
  std::ostringstream csv_;
  json meta_;
};

OverlapTable truncate_table(const OverlapTable& t, std::int64_t n_max) {
  if (n_max >= t.n_max) return t;
  OverlapTable out = t;
  const auto size = static_cast<std::size_t>(n_max) + 1;
  out.n_max = n_max;
  out.collision.resize(size);
  out.d.resize(size);
  out.error_bar.resize(size);
  out.a.resize(size);
  return out;
}

OverlapTable load_or_build_table(const IncrementLaw& law, std::int64_t n_max, const json& c, const CliContext& ctx) {
  OverlapOptions opts;
  opts.method = parse_method(c.at("method").get<std::string>());
  opts.ring_size = static_cast<std::size_t>(get_int(c, "ring", 0, std::int64_t{1} << 26));
  if (opts.ring_size != 0 && (opts.ring_size & (opts.ring_size - 1)) != 0) {
    throw InvalidParameter("ring", "must be 0 or a power of two");
  }
  if (opts.method == OverlapMethod::spectral && opts.ring_size == 0) {
    opts.ring_size = next_pow2(static_cast<std::size_t>(2 * law.support_radius() + 2));
  }
  if (ctx.cache_dir.empty()) return build_overlap(law, n_max, opts);

  const std::string name = "overlap-" + law.fingerprint() + "-" + method_name(opts.method) + "-ring" +
                           std::to_string(opts.ring_size) + ".csv";
  const fs::path path = fs::path(ctx.cache_dir) / name;
  if (fs::exists(path)) {
    std::ifstream in(path);
    OverlapTable cached;
    bool ok = true;
    try {
      cached = read_overlap_table(in);
    } catch (const Error& e) {
      log_line("warning: cache file " + path.string() + " is corrupt (" + e.what() + "); rebuilding");
      ok = false;
    }
    if (ok) {
      if (cached.law_fingerprint != law.fingerprint()) {
        throw Error("cache fingerprint " + cached.law_fingerprint + " does not match requested law " +
                    law.fingerprint());
      }
      if (cached.n_max >= n_max) {
        log_line("cache hit: " + path.string());
        return truncate_table(cached, n_max);
      }
      log_line("cache too short (N_max=" + std::to_string(cached.n_max) + "); rebuilding");
    }
  }
  log_line("building overlap table N_max=" + std::to_string(n_max) + " for " + law.fingerprint());
  OverlapTable t = build_overlap(law, n_max, opts);
  fs::create_directories(ctx.cache_dir);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    write_overlap_table(out, t);
  }
  fs::rename(tmp, path);
  return t;
}

void cmd_llt(const json& c, const CliContext& ctx) {
  const IncrementLaw law = make_law(c);
  const auto ns = get_int_list(c, "n_values", 2, std::int64_t{1} << 20);
  const double c1 = get_num(c, "c1", 1e-9, 1e9);
  std::int64_t window = get_int(c, "window", 0, std::int64_t{1} << 24);
  if (window == 0) window = std::max<std::int64_t>(1, law.support_radius() / 2);

  Outputs out("llt", c);
  const std::int64_t fit_n = *std::max_element(ns.begin(), ns.end());
  const double g0 = estimate_g0(law, fit_n);
  out.meta()["g0_fit"] = g0;
  out.meta()["g0_fit_n"] = fit_n;
  out.meta()["window"] = window;
  out.csv() << "n,a_n,phi,g0_estimate,llt_error,berger_ratio\n";
  json rows = json::array();
  for (std::int64_t n : ns) {
    const std::int64_t a = scaling_constant(law, n);
    const double g = estimate_g0(law, n);
    const double err = llt_error_profile(law, n, g0, window);
    double berger = std::numeric_limits<double>::quiet_NaN();
    try {
      berger = berger_ratio(law, n, c1, window);
    } catch (const EmptyRange&) {
      log_line("berger_ratio: empty range at n=" + std::to_string(n));
    }
    out.csv() << n << ',' << a << ',' << num(static_cast<double>(a) / static_cast<double>(n)) << ',' << num(g) << ','
              << num(err) << ',' << num(berger) << '\n';
    rows.push_back({{"n", n}, {"a_n", a}, {"g0_estimate", g}, {"llt_error", err}, {"berger_ratio", jnum(berger)}});
  }
  out.meta()["rows"] = rows;
  out.write(ctx.out_dir);
}

void cmd_overlap(const json& c, const CliContext& ctx) {
  const IncrementLaw law = make_law(c);
  const std::int64_t n_max = get_int(c, "N_max", 1, std::int64_t{1} << 22);
  const std::string rows_mode = c.at("rows").get<std::string>();
  if (rows_mode != "all" && rows_mode != "dyadic") throw InvalidParameter("rows", "expected all or dyadic");
  const OverlapTable t = load_or_build_table(law, n_max, c, ctx);

  Outputs out("overlap", c);
  out.csv() << "n,collision,D,a_n,error_bar,D_over_log_n,n_collision\n";
  std::int64_t next = 1;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const bool dyadic = (n == next) || n == n_max;
    if (n == next) next *= 2;
    if (rows_mode == "dyadic" && !dyadic) continue;
    const auto i = static_cast<std::size_t>(n);
    out.csv() << n << ',' << num(t.collision[i]) << ',' << num(t.d[i]) << ',' << t.a[i] << ',' << num(t.error_bar[i])
              << ',' << (n > 1 ? num(t.d[i] / std::log(static_cast<double>(n))) : "nan") << ','
              << num(static_cast<double>(n) * t.collision[i]) << '\n';
  }
  json& m = out.meta();
  m["collision_1"] = t.collision_at(1);
  m["D_N_max"] = t.D(n_max);
  m["method"] = method_name(t.method);
  m["ring_size"] = t.ring_size;
  m["D_error_bar"] = t.error_bar.back();
  if (law.support_radius() >= 3 && n_max >= 2) {
    const RecurrenceReport r = recurrence_diagnostic(law, n_max);
    m["recurrence"] = {{"n", r.n},
                       {"inv_nL_sum", r.inv_nl_sum},
                       {"inv_a_sum", r.inv_a_sum},
                       {"inv_nL_slope", r.inv_nl_slope},
                       {"inv_a_slope", r.inv_a_slope},
                       {"recurrent_type", r.recurrent_type},
                       {"n_effective", r.n_effective}};
  }
  out.write(ctx.out_dir);
}

void cmd_bounds(const json& c, const CliContext& ctx) {
  const IncrementLaw law = make_law(c);
  const std::int64_t n_max = get_int(c, "N_max", 2, std::int64_t{1} << 22);
  const auto betas = get_num_list(c, "beta", 1e-6, 100.0);
  const double eps = get_num(c, "epsilon", 1e-9, 1.0 - 1e-9);
  const OverlapTable t = load_or_build_table(law, n_max, c, ctx);

  Outputs out("bounds", c);
  out.csv() << "beta,epsilon,bound,argument,horizon,value,available,note\n";
  json reports = json::array();
  for (double beta : betas) {
    const BoundReport rep = bound_report(beta, eps, t);
    const std::int64_t nbe = n_beta_eps(beta, eps, t);
    json entries = json::array();
    for (const auto& e : rep.entries) {
      out.csv() << num(beta) << ',' << num(eps) << ",\"" << e.name << "\"," << num(e.argument) << ',' << e.horizon
                << ',' << num(e.value) << ',' << (e.available ? 1 : 0) << ",\"" << e.note << "\"\n";
      entries.push_back({{"name", e.name},
                         {"argument", e.argument},
                         {"horizon", e.horizon},
                         {"value", jnum(e.value)},
                         {"available", e.available},
                         {"note", e.note}});
    }
    reports.push_back({{"beta", beta},
                       {"n_beta_eps", nbe},
                       {"entries", entries},
                       {"fitted_C", rep.fitted_c},
                       {"fitted_K", rep.fitted_k},
                       {"C_llt", rep.c_llt},
                       {"C_llt_n", rep.c_llt_n}});
  }
  out.meta()["reports"] = reports;
  out.meta()["note"] = "reporting only; desk-scale estimates cannot confirm these asymptotic bounds";
  out.write(ctx.out_dir);
}

void cmd_free_energy(const json& c, const CliContext& ctx) {
  const IncrementLaw law = make_law(c);
  const EnvSpec env = make_env(c);
  const auto betas = get_num_list(c, "beta", 0.0, env.beta_max);
  const auto ns = get_int_list(c, "N", 1, std::int64_t{1} << 16);
  const std::int64_t m = get_int(c, "M", 2, 1 << 20);
  const double r = get_num(c, "R", 0.0, 1e6);

  Outputs out("free-energy", c);
  out.csv() << "# label=" << FreeEnergyEstimate::label << '\n';
  out.csv() << "beta,N,M,mean,stderr,window_R,seed\n";
  json rows = json::array();
  for (double beta : betas) {
    for (std::int64_t n : ns) {
      const FreeEnergyEstimate est = estimate_free_energy(law, env, beta, m, make_window_cfg(law, n, r), ctx.threads);
      out.csv() << num(beta) << ',' << n << ',' << m << ',' << num(est.mean) << ',' << num(est.std_error) << ','
                << (r == 0.0 ? "wide" : num(r)) << ',' << env.seed << '\n';
      rows.push_back({{"beta", beta}, {"N", n}, {"mean", est.mean}, {"stderr", est.std_error}, {"seeds", est.seeds}});
    }
  }
  out.meta()["label"] = FreeEnergyEstimate::label;
  out.meta()["rows"] = rows;
  out.write(ctx.out_dir);
}

void cmd_fracmoment(const json& c, const CliContext& ctx) {
  const IncrementLaw law = make_law(c);
  const EnvSpec env = make_env(c);
  const auto betas = get_num_list(c, "beta", 0.0, env.beta_max);
  const auto ns = get_int_list(c, "N", 1, std::int64_t{1} << 16);
  const std::int64_t m = get_int(c, "M", 2, 1 << 20);
  const double r = get_num(c, "R", 0.0, 1e6);
  const double theta = get_num(c, "theta", 1e-9, 1.0 - 1e-9);

  Outputs out("fracmoment", c);
  out.csv() << "beta,theta,N,M,mean,stderr,rate_proxy,window_R,seed\n";
  json rows = json::array();
  for (double beta : betas) {
    for (std::int64_t n : ns) {
      const FractionalMoment fm = fractional_moment(law, env, beta, theta, m, make_window_cfg(law, n, r), ctx.threads);
      out.csv() << num(beta) << ',' << num(theta) << ',' << n << ',' << m << ',' << num(fm.mean) << ','
                << num(fm.std_error) << ',' << num(fm.rate_proxy) << ',' << (r == 0.0 ? "wide" : num(r)) << ','
                << env.seed << '\n';
      rows.push_back({{"beta", beta}, {"N", n}, {"mean", fm.mean}, {"stderr", fm.std_error},
                      {"rate_proxy", fm.rate_proxy}});
    }
  }
  out.meta()["rows"] = rows;
  out.meta()["rate_proxy_note"] = "log(mean)/(theta N), biased by Monte Carlo";
  out.write(ctx.out_dir);
}

void cmd_xstat(const json& c, const CliContext& ctx) {
  const IncrementLaw law = make_law(c);
  const EnvSpec env = make_env(c);
  const std::int64_t m = get_int(c, "M", 2, 1 << 20);
  const std::int64_t m_walks = get_int(c, "M_walks", 2, 1 << 20);
  const double r = get_num(c, "R", 1e-6, 1e3);
  const double k = get_num(c, "K", 0.0, 100.0);
  const double theta = get_num(c, "theta", 1e-9, 1.0 - 1e-9);
  const double eps = get_num(c, "epsilon", 1e-9, 1.0 - 1e-9);
  const std::string mode = c.at("plan").get<std::string>();
  CoarseGrainPlan p;
  if (mode == "manual") {
    p = manual_plan(get_int(c, "l", 2, 1 << 16), get_int(c, "u", 1, 1 << 16), get_int(c, "q", 1, 1 << 10), r, k,
                    theta, get_num(c, "beta", 0.0, 100.0), eps);
  } else if (mode == "auto") {
    const std::int64_t n_max = get_int(c, "N_max", 2, std::int64_t{1} << 22);
    const OverlapTable t = load_or_build_table(law, n_max, c, ctx);
    p = plan(get_num(c, "beta", 1e-6, 100.0), eps, t, theta, r, k);
  } else {
    throw InvalidParameter("plan", "expected manual or auto");
  }
  const ChainKernels ker(law, p);

  const auto xs = parallel_map<double>(static_cast<std::size_t>(m), ctx.threads, [&](std::size_t i) {
    EnvSpec e = env;
    e.seed = derive_seed(env.seed, i);
    return ker.x_statistic(field(e).as_site_field());
  });
  std::vector<double> x2(xs.size()), cost(xs.size());
  const double expo = -theta / (1.0 - theta);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x2[i] = xs[i] * xs[i];
    cost[i] = std::pow(g_function(k, xs[i]), expo);
  }
  // planner scales usually have q u > l / 2, where W_l is undefined; X is still reported
  const bool w_ok = p.l / 2 + p.q * p.u < p.l;
  std::vector<double> ws;
  if (w_ok) {
    const WalkSampler sampler(law);
    const std::uint64_t walk_seed = derive_seed(env.seed, std::uint64_t{1} << 40);
    ws = parallel_map<double>(static_cast<std::size_t>(m_walks), ctx.threads, [&](std::size_t i) {
      return ker.w_statistic(sampler.sample(walk_seed, i, p.l));
    });
  } else {
    log_line("skipping W: needs l/2 + q u < l");
  }

  Outputs out("xstat", c);
  out.csv() << "epsilon,beta,l,u,q,statistic,mean,stderr,M\n";
  json stats = json::object();
  auto row = [&](const char* name, const std::vector<double>& v) {
    const SampleStats s = sample_stats(v);
    out.csv() << num(p.eps) << ',' << num(p.beta) << ',' << p.l << ',' << p.u << ',' << p.q << ',' << name << ','
              << num(s.mean) << ',' << num(s.std_error) << ',' << v.size() << '\n';
    stats[name] = {{"mean", s.mean}, {"stderr", s.std_error}, {"M", v.size()}};
  };
  row("X", xs);
  row("X^2", x2);
  row("g_cost", cost);
  if (w_ok) row("W", ws);
  json& meta = out.meta();
  meta["statistics"] = stats;
  meta["plan"] = {{"l", p.l}, {"u", p.u}, {"q", p.q}, {"R", p.R}, {"K", p.K}, {"theta", p.theta},
                  {"epsilon", p.eps}, {"beta", p.beta}, {"manual", p.manual}, {"beta2_D_u", p.beta2_du},
                  {"upper_half_ok", p.upper_half_ok}};
  meta["exact"] = {{"E_X2", ker.x_second_moment()}, {"D_u", ker.D_u()}, {"D_hat_u", ker.D_hat_u()}, {"a_l", ker.a_l()}};
  if (w_ok) {
    meta["exact"]["W_mean"] = ker.w_exact_mean();
  } else {
    meta["W_skipped"] = "needs l/2 + q u < l";
  }
  out.write(ctx.out_dir);
}

void cmd_decompose(const json& c, const CliContext& ctx) {
  const IncrementLaw law = make_law(c);
  const EnvSpec env = make_env(c);
  const std::int64_t m = get_int(c, "m", 1, 8);
  const std::int64_t l = get_int(c, "l", 1, 64);
  const double beta = get_num(c, "beta", 0.0, env.beta_max);
  const auto omega = field(env).as_site_field();
  const double lambda = log_mgf(env, beta);
  const auto parts = coarse_decompose(law, omega, lambda, beta, m, l);
  const PolymerRun run = run_polymer(law, omega, lambda, beta, wide_window(law, m * l), false);

  Outputs out("decompose", c);
  out.csv() << "Y,Z_Y\n";
  long double sum = 0.0L;
  for (const auto& [key, z] : parts) {
    std::string ys;
    for (std::size_t i = 0; i < key.size(); ++i) ys += (i ? ";" : "") + std::to_string(key[i]);
    out.csv() << ys << ',' << num(z) << '\n';
    sum += z;
  }
  const double zhat = std::exp(run.log_zbar);
  out.meta()["sum_Z_Y"] = static_cast<double>(sum);
  out.meta()["Z_hat"] = zhat;
  out.meta()["abs_diff"] = std::abs(static_cast<double>(sum) - zhat);
  out.meta()["cells"] = parts.size();
  out.meta()["a_l"] = scaling_constant(law, l);
  out.write(ctx.out_dir);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

json default_config(const std::string& command) {
  json c = {{"law", "canonical"}, {"law_exponent", 1.0}};
  auto env = [&c] {
    c["env"] = "gaussian-unit";
    c["seed"] = 1;
    c["truncation"] = 3.0;
  };
  auto table = [&c](std::int64_t n_max) {
    c["N_max"] = n_max;
    c["method"] = "spectral";
    c["ring"] = 0;
  };
  if (command == "llt") {
    c["X_max"] = 1 << 22;
    c["n_values"] = {256, 1024, 4096};
    c["c1"] = 2.0;
    c["window"] = 1 << 14;
  } else if (command == "overlap") {
    c["X_max"] = 1 << 12;
    table(1 << 12);
    c["rows"] = "dyadic";
  } else if (command == "bounds") {
    c["X_max"] = 1 << 12;
    table(1 << 12);
    c["beta"] = {1.0, 1.5, 2.0};
    c["epsilon"] = 0.5;
  } else if (command == "free-energy") {
    c["X_max"] = 64;
    env();
    c["beta"] = {1.0};
    c["N"] = {64, 256};
    c["M"] = 16;
    c["R"] = 8.0;
  } else if (command == "fracmoment") {
    c["X_max"] = 64;
    env();
    c["beta"] = {1.0};
    c["N"] = {32, 128};
    c["M"] = 32;
    c["R"] = 8.0;
    c["theta"] = 0.7;
  } else if (command == "xstat") {
    c["X_max"] = 1 << 8;
    env();
    table(1 << 12);
    c["plan"] = "manual";
    c["l"] = 64;
    c["u"] = 8;
    c["q"] = 3;
    c["beta"] = 0.0;
    c["epsilon"] = 0.1;
    c["R"] = 8.0;
    c["K"] = 3.0;
    c["theta"] = 0.7;
    c["M"] = 200;
    c["M_walks"] = 500;
  } else if (command == "decompose") {
    c["X_max"] = 1;
    env();
    c["m"] = 2;
    c["l"] = 8;
    c["beta"] = 0.5;
  } else {
    throw InvalidParameter("command", "unknown subcommand '" + command + "'");
  }
  return c;
}

json resolve_config(const std::string& command, const std::string& config_path,
                    const std::vector<std::string>& overrides, const std::string& seed) {
  json c = default_config(command);
  auto apply = [&c](const std::string& key, const json& value) {
    if (!c.contains(key)) throw InvalidParameter(key, "unknown configuration key");
    c[key] = value;
  };
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw InvalidParameter("config", "cannot open " + config_path);
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw InvalidParameter("config", std::string("invalid JSON: ") + e.what());
    }
    if (!file.is_object()) throw InvalidParameter("config", "top level must be an object");
    for (auto it = file.begin(); it != file.end(); ++it) apply(it.key(), it.value());
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidParameter("set", "expected KEY=VALUE, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), raw = kv.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    apply(key, value);
  }
  if (!seed.empty()) {
    if (!c.contains("seed")) throw InvalidParameter("seed", "this command takes no seed");
    try {
      std::size_t pos = 0;
      const unsigned long long s = std::stoull(seed, &pos);
      if (pos != seed.size()) throw std::invalid_argument("trailing characters");
      c["seed"] = static_cast<std::uint64_t>(s);
    } catch (const std::exception&) {
      throw InvalidParameter("seed", "must be an unsigned 64-bit integer");
    }
  }
  return c;
}

std::string config_fingerprint(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

void run_command(const std::string& command, const json& config, const CliContext& ctx) {
  if (command == "llt") return cmd_llt(config, ctx);
  if (command == "overlap") return cmd_overlap(config, ctx);
  if (command == "bounds") return cmd_bounds(config, ctx);
  if (command == "free-energy") return cmd_free_energy(config, ctx);
  if (command == "fracmoment") return cmd_fracmoment(config, ctx);
  if (command == "xstat") return cmd_xstat(config, ctx);
  if (command == "decompose") return cmd_decompose(config, ctx);
  throw InvalidParameter("command", "unknown subcommand '" + command + "'");
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Cauchy directed polymer toolkit"};
  app.require_subcommand(1);
  std::string config_path, seed;
  std::vector<std::string> sets;
  CliContext ctx;
  ctx.cache_dir = ".cauchy-cache";
  for (const auto& [name, about] : kCommands) {
    auto* sub = app.add_subcommand(name, about);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "master seed (unsigned 64-bit)");
    sub->add_option("--out", ctx.out_dir, "output directory");
    sub->add_option("--cache", ctx.cache_dir, "overlap-table cache directory (empty disables)");
    sub->add_option("--threads", ctx.threads, "worker threads, 0 = all cores");
    sub->add_option("--set", sets, "override a configuration key, KEY=VALUE");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const json config = resolve_config(command, config_path, sets, seed);
    run_command(command, config, ctx);
  } catch (const InvalidParameter& e) {
    std::cerr << "usage error: invalid " << e.field() << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidPlan& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NeedsLongerTable& e) {
    std::cerr << "error: " << e.what() << " (required threshold " << e.required_threshold() << ")\n";
    return kExitNeedsLongerTable;
  } catch (const TooLarge& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return kExitResource;
  } catch (const NumericOverflow& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return kExitResource;
  } catch (const json::exception& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}

}  // namespace cauchy
