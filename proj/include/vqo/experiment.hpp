#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "vqo/errors.hpp"
#include "vqo/feasible.hpp"
#include "vqo/gradient_estimators.hpp"
#include "vqo/optimizers.hpp"
#include "vqo/sampling_oracle.hpp"
#include "vqo/toy_family.hpp"

namespace vqo {

struct ExperimentConfig {
  std::vector<Method> methods{Method::sgd_sc};
  std::vector<std::size_t> ns{8};
  std::vector<double> eps{0.05};
  double eps_per_n = 0.0;  // > 0 replaces eps by eps_per_n * n
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t T = 0;  // 0: theorem budget (not available for zo)
  double zo_delta_scale = 0.0;
  double zo_eta_scale = 0.0;
  std::uint64_t epoch0 = 0;
  std::uint64_t grid_start = 64;
  std::uint64_t ceiling = std::uint64_t{1} << 22;
  std::uint64_t packing_seed = 0;
  bool identify_optimize = true;
  Method identify_method = Method::sgd_sc;
  unsigned threads = 1;
  bool deterministic = true;
  bool svg = false;

  std::vector<double> eps_for(std::size_t n) const {
    if (eps_per_n > 0.0) return {eps_per_n * static_cast<double>(n)};
    return eps;
  }

  void validate() const {
    if (methods.empty()) throw ConfigError("methods must not be empty");
    if (ns.empty()) throw ConfigError("n must not be empty");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (eps_per_n <= 0.0 && eps.empty()) throw ConfigError("eps must not be empty");
    for (std::size_t n : ns) {
      if (n < 1 || n > 26) throw ConfigError("n must be in [1, 26]");
      for (double e : eps_for(n)) {
        if (!(e > 0.0) || e > 0.01 * static_cast<double>(n) + 1e-12) {
          throw ConfigError("eps must be in (0, 0.01 n]");
        }
      }
    }
    if (grid_start == 0 || ceiling < grid_start) throw ConfigError("need 0 < grid_start <= ceiling");
    if (threads == 0) throw ConfigError("threads must be positive");
  }
};

namespace detail {

template <class T>
T get_key(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{
      "methods", "method", "n", "eps", "eps_per_n", "seeds", "seed", "num_seeds", "T", "zo_delta_scale",
      "zo_eta_scale", "epoch0", "grid_start", "ceiling", "packing_seed", "identify_optimize", "identify_method",
      "threads", "deterministic", "svg"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config key '" + key + "'");
  }
  using detail::get_key;
  ExperimentConfig c;
  const auto method_of = [](const std::string& s) {
    try {
      return parse_method(s);
    } catch (const std::exception&) {
      throw ConfigError("unknown method '" + s + "'");
    }
  };
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& s : get_key<std::vector<std::string>>(j, "methods")) c.methods.push_back(method_of(s));
  } else if (j.contains("method")) {
    c.methods = {method_of(get_key<std::string>(j, "method"))};
  }
  const auto scalar_or_list = [&](const char* key, auto& out) {
    using V = typename std::decay_t<decltype(out)>::value_type;
    if (j.at(key).is_array()) {
      out = get_key<std::vector<V>>(j, key);
    } else {
      out = {get_key<V>(j, key)};
    }
  };
  if (j.contains("n")) scalar_or_list("n", c.ns);
  if (j.contains("eps")) scalar_or_list("eps", c.eps);
  if (j.contains("eps_per_n")) c.eps_per_n = get_key<double>(j, "eps_per_n");
  if (j.contains("seeds")) {
    c.seeds = get_key<std::vector<std::uint64_t>>(j, "seeds");
  } else {
    const auto base = j.contains("seed") ? get_key<std::uint64_t>(j, "seed") : 0;
    const auto count = j.contains("num_seeds") ? get_key<std::uint64_t>(j, "num_seeds") : 1;
    c.seeds.resize(count);
    std::iota(c.seeds.begin(), c.seeds.end(), base);
  }
  if (j.contains("T")) c.T = get_key<std::uint64_t>(j, "T");
  if (j.contains("zo_delta_scale")) c.zo_delta_scale = get_key<double>(j, "zo_delta_scale");
  if (j.contains("zo_eta_scale")) c.zo_eta_scale = get_key<double>(j, "zo_eta_scale");
  if (j.contains("epoch0")) c.epoch0 = get_key<std::uint64_t>(j, "epoch0");
  if (j.contains("grid_start")) c.grid_start = get_key<std::uint64_t>(j, "grid_start");
  if (j.contains("ceiling")) c.ceiling = get_key<std::uint64_t>(j, "ceiling");
  if (j.contains("packing_seed")) c.packing_seed = get_key<std::uint64_t>(j, "packing_seed");
  if (j.contains("identify_optimize")) c.identify_optimize = get_key<bool>(j, "identify_optimize");
  if (j.contains("identify_method")) c.identify_method = method_of(get_key<std::string>(j, "identify_method"));
  if (j.contains("threads")) c.threads = get_key<unsigned>(j, "threads");
  if (j.contains("deterministic")) c.deterministic = get_key<bool>(j, "deterministic");
  if (j.contains("svg")) c.svg = get_key<bool>(j, "svg");
  c.validate();
  return c;
}

struct ExperimentRecord {
  Method method = Method::sgd;
  std::size_t n = 0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  QueryLedger queries;
  double final_error = 0.0;
  double wallclock_ms = 0.0;
  bool censored = false;

  std::uint64_t queries_total() const { return queries.total(); }
};

inline bool record_less(const ExperimentRecord& a, const ExperimentRecord& b) {
  return std::tie(a.method, a.n, a.eps, a.seed) < std::tie(b.method, b.n, b.eps, b.seed);
}

inline constexpr const char* kCsvHeader = "method,n,eps,seed,q0,q1,qk,queries_total,final_error,wallclock_ms,censored";

inline void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << kCsvHeader << '\n';
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.10g,%llu,%llu,%llu,%llu,%llu,%.10g,%.3f,%d\n", method_name(r.method).c_str(), r.n,
                  r.eps, static_cast<unsigned long long>(r.seed), static_cast<unsigned long long>(r.queries.zeroth()),
                  static_cast<unsigned long long>(r.queries.first()),
                  static_cast<unsigned long long>(r.queries.higher()),
                  static_cast<unsigned long long>(r.queries_total()), r.final_error, r.wallclock_ms, r.censored ? 1 : 0);
    out << buf;
  }
}

inline std::string to_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream s;
  write_csv(s, records);
  return s.str();
}

/// Iteration count at which the method's theorem bound reaches eps on a toy instance.
/// Gradient norm bounds come from the measured Gamma table.
inline std::uint64_t theorem_budget(Method m, const ToyInstance& inst, const GammaTable& gamma) {
  const double p = static_cast<double>(inst.n);
  const double eps = inst.eps;
  const double r2 = inst.delta * std::sqrt(p);
  const double r1 = inst.delta * p;
  const double ginf_sq = 5.0 * gamma.l2() * gamma.l2() / (2.0 * p);
  double t = 0.0;
  switch (m) {
    case Method::sgd: t = 2.0 * r2 * r2 * gamma.l1() * gamma.l1() / (eps * eps); break;
    case Method::sgd_sc: t = 2.0 * gamma.l1() * gamma.l1() / (inst.lambda2() * eps); break;
    case Method::smd: t = 2.0 * std::numbers::e * std::log(p) * r1 * r1 * ginf_sq / (eps * eps); break;
    case Method::smd_sc: t = 16.0 * ginf_sq / (inst.lambda1() * eps); break;
    case Method::zo: throw ConfigError("zo has no closed-form budget; set T explicitly");
  }
  return static_cast<std::uint64_t>(std::ceil(t - 1e-9));
}

/// Optimizer configuration for method m on a toy instance with iteration budget T.
inline OptimizerConfig toy_optimizer_config(Method m, const ToyInstance& inst, const GammaTable& gamma, std::uint64_t t,
                                            const ExperimentConfig& c) {
  OptimizerConfig cfg;
  cfg.method = m;
  cfg.T = t;
  cfg.seed = inst.seed;
  const double p = static_cast<double>(inst.n);
  switch (m) {
    case Method::sgd: cfg.G2 = gamma.l1(); break;
    case Method::sgd_sc:
      cfg.G2 = gamma.l1();
      cfg.lambda2 = inst.lambda2();
      break;
    case Method::smd: cfg.Ginf = std::sqrt(5.0 * gamma.l2() * gamma.l2() / (2.0 * p)); break;
    case Method::smd_sc:
      cfg.Ginf = std::sqrt(5.0 * gamma.l2() * gamma.l2() / (2.0 * p));
      cfg.lambda1 = inst.lambda1();
      cfg.epoch0 = c.epoch0;
      break;
    case Method::zo:
      cfg.E = inst.normalization();
      cfg.zo_delta_scale = c.zo_delta_scale;
      cfg.zo_eta_scale = c.zo_eta_scale;
      break;
  }
  return cfg;
}

/// Runs method m on a toy instance from x1 = 0 inside B_inf(delta) with a fresh oracle.
/// Returns the trace; the oracle ledger is copied into `ledger`.
inline RunTrace run_on_instance(Method m, const ToyInstance& inst, std::uint64_t t, const ExperimentConfig& c,
                                QueryLedger& ledger) {
  const auto h = toy_observable(inst);
  const auto a = build_toy_ansatz(inst.n);
  SamplingOracle o(h, inst.seed, 1 + static_cast<std::uint64_t>(m));
  const auto& gamma = o.gamma(a);
  if (t == 0) t = theorem_budget(m, inst, gamma);
  auto cfg = toy_optimizer_config(m, inst, gamma, t, c);
  cfg.error = [&inst](const ParamPoint& x) { return suboptimality(x, inst); };
  const auto box = FeasibleSet::box(inst.n, inst.delta);
  RunTrace trace;
  switch (m) {
    case Method::sgd: trace = sgd_fixed(l1_source(o, a), box, ParamPoint(inst.n, 0.0), cfg); break;
    case Method::sgd_sc: trace = sgd_strongly_convex(l1_source(o, a), box, ParamPoint(inst.n, 0.0), cfg); break;
    case Method::smd: trace = smd_l1(l2_source(o, a), box, cfg); break;
    case Method::smd_sc: trace = smd_strongly_convex(l2_source(o, a), box, cfg); break;
    case Method::zo: {
      CounterRng rng(inst.seed, 0x2e70);
      trace = zo_spherical(value_source(o, a), box, cfg, rng);
      break;
    }
  }
  ledger = o.ledger();
  return trace;
}

/// One run on a fresh random toy instance (v drawn from the seed).
inline ExperimentRecord run_toy(Method m, std::size_t n, double eps, std::uint64_t seed, std::uint64_t t,
                                const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto inst = random_instance(n, eps, seed);
  ExperimentRecord r;
  r.method = m;
  r.n = n;
  r.eps = eps;
  r.seed = seed;
  const auto trace = run_on_instance(m, inst, t, c, r.queries);
  r.final_error = trace.final_error;
  if (!std::isfinite(r.final_error) || r.final_error < -1e-9) throw NumericError("run produced an invalid final error");
  if (!c.deterministic) {
    r.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return r;
}

/// Runs job(i) for i in [0, count) on up to `threads` workers; rethrows the first failure.
template <class Job>
void parallel_for(std::size_t count, unsigned threads, Job job) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex lock;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard g(lock);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Runs every seed for one (method, n, eps, T); records come back in seed order.
inline std::vector<ExperimentRecord> run_seeds(Method m, std::size_t n, double eps, std::uint64_t t,
                                               const ExperimentConfig& c) {
  std::vector<ExperimentRecord> out(c.seeds.size());
  parallel_for(c.seeds.size(), c.threads, [&](std::size_t i) { out[i] = run_toy(m, n, eps, c.seeds[i], t, c); });
  return out;
}

inline double mean_error(const std::vector<ExperimentRecord>& rows) {
  double acc = 0.0;
  for (const auto& r : rows) acc += r.final_error;
  return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw ArgumentError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

struct GroupSummary {
  Method method = Method::sgd;
  std::size_t n = 0;
  double eps = 0.0;
  std::uint64_t budget = 0;  // iterations per run
  double median_queries = 0.0;
  double mean_error = 0.0;
  bool censored = false;
  std::size_t evaluations = 0;  // budgets tried (separation only)
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  std::vector<GroupSummary> groups;
  nlohmann::json extra = nlohmann::json::object();

  bool censored_only() const {
    return !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) { return r.censored; });
  }
};

inline GroupSummary summarize(Method m, std::size_t n, double eps, std::uint64_t budget,
                              const std::vector<ExperimentRecord>& rows) {
  GroupSummary g{m, n, eps, budget};
  std::vector<double> q;
  for (const auto& r : rows) q.push_back(static_cast<double>(r.queries_total()));
  g.median_queries = median(q);
  g.mean_error = mean_error(rows);
  g.censored = !rows.empty() && rows.front().censored;
  return g;
}

/// Each (method, n, eps, seed) at the configured or theorem budget.
inline ExperimentResult run_convergence(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult res;
  for (Method m : c.methods) {
    if (m == Method::zo && c.T == 0) throw ConfigError("zo convergence runs need an explicit T");
    for (std::size_t n : c.ns) {
      for (double eps : c.eps_for(n)) {
        auto rows = run_seeds(m, n, eps, c.T, c);
        std::uint64_t budget = c.T;
        if (budget == 0) {
          const auto inst = random_instance(n, eps, c.seeds.front());
          budget = theorem_budget(m, inst, build_gamma(build_toy_ansatz(n), toy_observable(inst)));
        }
        res.groups.push_back(summarize(m, n, eps, budget, rows));
        res.records.insert(res.records.end(), rows.begin(), rows.end());
      }
    }
  }
  std::sort(res.records.begin(), res.records.end(), record_less);
  return res;
}

struct TargetSearch {
  GroupSummary summary;
  std::vector<ExperimentRecord> rows;  // the seeds at the chosen budget
};

/// Smallest budget on the grid grid_start * 2^k <= ceiling whose mean error over seeds is
/// <= eps, found by binary search (mean error is taken as monotone in the budget). The
/// ceiling is tried first; if it misses, the group is censored at the ceiling.
inline TargetSearch queries_to_target(Method m, std::size_t n, double eps, const ExperimentConfig& c) {
  std::vector<std::uint64_t> grid;
  for (std::uint64_t t = c.grid_start; t <= c.ceiling; t *= 2) grid.push_back(t);
  std::map<std::size_t, std::vector<ExperimentRecord>> seen;
  const auto eval = [&](std::size_t k) -> const std::vector<ExperimentRecord>& {
    auto it = seen.find(k);
    if (it == seen.end()) it = seen.emplace(k, run_seeds(m, n, eps, grid[k], c)).first;
    return it->second;
  };
  std::size_t hi = grid.size() - 1;
  TargetSearch out;
  const bool censored = mean_error(eval(hi)) > eps;
  if (!censored) {
    std::size_t lo = 0;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (mean_error(eval(mid)) <= eps) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
  }
  out.rows = eval(hi);
  for (auto& r : out.rows) r.censored = censored;
  out.summary = summarize(m, n, eps, grid[hi], out.rows);
  out.summary.evaluations = seen.size();
  return out;
}

inline ExperimentResult run_separation(const ExperimentConfig& c) {
  c.validate();
  bool has_zo = false, has_fo = false;
  for (Method m : c.methods) (is_first_order(m) ? has_fo : has_zo) = true;
  if (!has_zo || !has_fo) throw ConfigError("separation needs a zeroth-order and a first-order method");
  ExperimentResult res;
  for (Method m : c.methods) {
    for (std::size_t n : c.ns) {
      for (double eps : c.eps_for(n)) {
        auto found = queries_to_target(m, n, eps, c);
        res.groups.push_back(found.summary);
        res.records.insert(res.records.end(), found.rows.begin(), found.rows.end());
      }
    }
  }
  std::sort(res.records.begin(), res.records.end(), record_less);
  return res;
}

/// Optimize on H_v for v drawn from a GV packing, then recover v from the output. One
/// record per (n, eps, seed); summary extra holds success rates and packing data.
inline ExperimentResult run_identification(const ExperimentConfig& c, std::ostream* warn = nullptr) {
  c.validate();
  ExperimentResult res;
  res.extra["identification"] = nlohmann::json::array();
  for (std::size_t n : c.ns) {
    const auto packing = gv_packing(n, c.packing_seed);
    for (double eps : c.eps_for(n)) {
      const double delta = toy_delta(n, eps);
      const double beta = packing.beta(delta);
      if (eps > beta / 9.0 && warn) *warn << "warning: eps = " << eps << " exceeds beta/9 = " << beta / 9.0 << '\n';
      std::vector<ExperimentRecord> rows(c.seeds.size());
      std::vector<int> hit(c.seeds.size(), 0);
      parallel_for(c.seeds.size(), c.threads, [&](std::size_t i) {
        const auto start = std::chrono::steady_clock::now();
        const std::uint64_t seed = c.seeds[i];
        CounterRng pick(seed, 0x1d);
        const std::size_t truth = pick.below(packing.size());
        const auto inst = make_instance(n, eps, packing.vectors[truth], seed);
        ExperimentRecord r;
        r.method = c.identify_method;
        r.n = n;
        r.eps = eps;
        r.seed = seed;
        ParamPoint theta(n);
        if (c.identify_optimize) {
          theta = run_on_instance(c.identify_method, inst, c.T, c, r.queries).output;
        } else {
          for (auto& x : theta) x = (2.0 * pick.uniform() - 1.0) * delta;
        }
        r.final_error = suboptimality(theta, inst);
        hit[i] = identify_v(theta, packing, delta).index == truth;
        if (!c.deterministic) {
          r.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        rows[i] = r;
      });
      const double rate = static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) / static_cast<double>(hit.size());
      res.extra["identification"].push_back({{"n", n},
                                             {"eps", eps},
                                             {"delta", delta},
                                             {"packing_size", packing.size()},
                                             {"packing_min_distance", packing.min_distance},
                                             {"beta", beta},
                                             {"eps_within_beta_over_9", eps <= beta / 9.0},
                                             {"success_rate", rate},
                                             {"chance", 1.0 / static_cast<double>(packing.size())}});
      res.groups.push_back(summarize(c.identify_method, n, eps, c.T, rows));
      res.records.insert(res.records.end(), rows.begin(), rows.end());
    }
  }
  std::sort(res.records.begin(), res.records.end(), record_less);
  return res;
}

inline nlohmann::json summary_json(const ExperimentResult& res) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : res.groups) {
    groups.push_back({{"method", method_name(g.method)},
                      {"n", g.n},
                      {"eps", g.eps},
                      {"budget", g.budget},
                      {"median_queries", g.median_queries},
                      {"mean_error", g.mean_error},
                      {"censored", g.censored},
                      {"evaluations", g.evaluations}});
  }
  nlohmann::json out{{"groups", groups}};
  out.update(res.extra);
  return out;
}

struct PowerLawFit {
  double exponent = 0.0;
  double r2 = 0.0;
};

/// Least-squares line through (log x, log y).
inline PowerLawFit fit_powerlaw(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw SizeError("fit needs equally many x and y values");
  std::vector<double> distinct(x);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw ArgumentError("power-law fit needs at least 3 distinct x values");
  const double k = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ArgumentError("power-law fit needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double vx = sxx - sx * sx / k;
  const double vy = syy - sy * sy / k;
  const double cxy = sxy - sx * sy / k;
  PowerLawFit f;
  f.exponent = cxy / vx;
  f.r2 = vy <= 1e-300 ? 1.0 : cxy * cxy / (vx * vy);
  return f;
}

inline double record_field(const ExperimentRecord& r, const std::string& field) {
  if (field == "n") return static_cast<double>(r.n);
  if (field == "eps") return r.eps;
  if (field == "seed") return static_cast<double>(r.seed);
  if (field == "q0") return static_cast<double>(r.queries.zeroth());
  if (field == "q1") return static_cast<double>(r.queries.first());
  if (field == "qk") return static_cast<double>(r.queries.higher());
  if (field == "queries_total") return static_cast<double>(r.queries_total());
  if (field == "final_error") return r.final_error;
  if (field == "wallclock_ms") return r.wallclock_ms;
  throw ArgumentError("unknown record field '" + field + "'");
}

inline PowerLawFit fit_powerlaw(const std::vector<ExperimentRecord>& records, const std::string& xfield,
                                const std::string& yfield) {
  std::vector<double> x, y;
  for (const auto& r : records) {
    x.push_back(record_field(r, xfield));
    y.push_back(record_field(r, yfield));
  }
  return fit_powerlaw(x, y);
}

/// Log-log scatter of final_error against queries_total, one colour per method.
inline std::string render_svg(const std::vector<ExperimentRecord>& records) {
  constexpr double w = 640, h = 420, left = 70, right = 20, top = 20, bottom = 50;
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& r : records) {
    if (r.queries_total() == 0 || !(r.final_error > 0.0)) continue;
    const double lx = std::log10(static_cast<double>(r.queries_total())), ly = std::log10(r.final_error);
    x0 = std::min(x0, lx), x1 = std::max(x1, lx), y0 = std::min(y0, ly), y1 = std::max(y1, ly);
  }
  std::ostringstream s;
  char buf[256];
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, w - left - right, h - top - bottom);
  s << buf;
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"13\">log10 queries</text>\n";
  s << "<text x=\"16\" y=\"" << h / 2 << "\" transform=\"rotate(-90 16 " << h / 2
    << ")\" text-anchor=\"middle\" font-size=\"13\">log10 final error</text>\n";
  if (x0 <= x1) {
    if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\">%.2f</text><text x=\"%g\" y=\"%g\" font-size=\"11\" "
                  "text-anchor=\"end\">%.2f</text>\n",
                  left, h - bottom + 15, x0, w - right, h - bottom + 15, x1);
    s << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.2f</text><text x=\"%g\" y=\"%g\" "
                  "font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                  left - 4, h - bottom, y0, left - 4, top + 10, y1);
    s << buf;
    for (const auto& r : records) {
      if (r.queries_total() == 0 || !(r.final_error > 0.0)) continue;
      const double px = left + (std::log10(static_cast<double>(r.queries_total())) - x0) / (x1 - x0) * (w - left - right);
      const double py = h - bottom - (std::log10(r.final_error) - y0) / (y1 - y0) * (h - top - bottom);
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"%s/>\n", px, py,
                    colours[static_cast<int>(r.method)], r.censored ? " fill-opacity=\"0.35\"" : "");
      s << buf;
    }
  }
  std::vector<Method> present;
  for (const auto& r : records) {
    if (std::find(present.begin(), present.end(), r.method) == present.end()) present.push_back(r.method);
  }
  for (std::size_t i = 0; i < present.size(); ++i) {
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" fill=\"%s\">%s</text>\n", w - right - 80,
                  top + 16 + 14.0 * static_cast<double>(i), colours[static_cast<int>(present[i])],
                  method_name(present[i]).c_str());
    s << buf;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace vqo
