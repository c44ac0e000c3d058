// vqo: batch experiments on the toy family.
//   vqo convergence|separation|identify|selftest --config cfg.json --out prefix
// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 censored-only results.

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vqo/experiment.hpp"
#include "vqo/sampling_oracle.hpp"
#include "vqo/statevector.hpp"
#include "vqo/toy_family.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericError = 3;
constexpr int kCensoredOnly = 4;

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw vqo::ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw vqo::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

// key=value; the value is read as JSON when it parses, else as a string.
void apply_override(nlohmann::json& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw vqo::ConfigError("--set expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  auto value = nlohmann::json::parse(raw, nullptr, false);
  cfg[key] = value.is_discarded() ? nlohmann::json(raw) : value;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vqo::ConfigError("cannot write " + path);
  out << text;
}

int emit(const vqo::ExperimentResult& res, const vqo::ExperimentConfig& cfg, const std::string& prefix) {
  write_file(prefix + ".csv", vqo::to_csv(res.records));
  write_file(prefix + ".json", vqo::summary_json(res).dump(2) + "\n");
  if (cfg.svg) write_file(prefix + ".svg", vqo::render_svg(res.records));
  for (const auto& g : res.groups) {
    std::cout << vqo::method_name(g.method) << " n=" << g.n << " eps=" << g.eps << " budget=" << g.budget
              << " median_queries=" << g.median_queries << " mean_error=" << g.mean_error
              << (g.censored ? " censored" : "") << '\n';
  }
  return res.censored_only() ? kCensoredOnly : kOk;
}

// Small end-to-end checks against closed forms; prints one line per check.
int selftest() {
  bool ok = true;
  const auto report = [&](const char* name, bool pass) {
    std::cout << (pass ? "PASS " : "FAIL ") << name << '\n';
    ok = ok && pass;
  };
  const auto inst = vqo::random_instance(6, 0.04, 11);
  const auto h = vqo::toy_observable(inst);
  const auto a = vqo::build_toy_ansatz(6);
  vqo::ParamPoint theta{0.1, -0.2, 0.05, 0.3, -0.1, 0.0};
  const double f = vqo::objective(a, h, theta);
  report("toy objective matches closed form", std::abs(f - vqo::closed_form_objective(theta, inst)) < 1e-10);
  vqo::SamplingOracle o(h, 1);
  bool gamma_ok = true;
  for (std::size_t j = 0; j < 6; ++j) gamma_ok = gamma_ok && std::abs(o.gamma(a).gamma(j) - inst.gamma()) < 1e-12;
  report("gamma table equals sqrt2 cos delta", gamma_ok);
  const int m = 100000;
  double acc = 0.0;
  for (int k = 0; k < m; ++k) acc += o.query(a, theta, {});
  report("zeroth-order sample mean within 4 sigma", std::abs(acc / m - f) < 4 * inst.normalization() / std::sqrt(m));
  vqo::ExperimentConfig c;
  c.ns = {6};
  c.eps = {0.04};
  c.seeds = {0, 1, 2, 3};
  const auto a1 = vqo::to_csv(vqo::run_convergence(c).records);
  const auto a2 = vqo::to_csv(vqo::run_convergence(c).records);
  report("convergence csv is reproducible", a1 == a2);
  report("sgd-sc reaches eps at its budget", vqo::mean_error(vqo::run_convergence(c).records) <= 0.04);
  return ok ? kOk : kNumericError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational optimization query-complexity experiments"};
  app.require_subcommand(1);
  std::string config_path, prefix = "vqo_out";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::vector<CLI::App*> runs;
  for (const char* name : {"convergence", "separation", "identify"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", prefix, "output prefix for .csv/.json/.svg");
    sub->add_option("--seed", seed, "base seed (replaces the seeds list)");
    sub->add_option("--threads", threads, "worker threads");
    sub->add_option("--set", overrides, "override a config key, key=value");
    runs.push_back(sub);
  }
  auto* self = app.add_subcommand("selftest", "quick consistency checks");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  try {
    if (self->parsed()) return selftest();
    auto cfg_json = load_config(config_path);
    for (const auto& kv : overrides) apply_override(cfg_json, kv);
    for (auto* sub : runs) {
      if (!sub->parsed()) continue;
      if (sub->count("--seed")) {
        cfg_json.erase("seeds");
        cfg_json["seed"] = seed;
      }
      if (sub->count("--threads")) cfg_json["threads"] = threads;
      const auto cfg = vqo::config_from_json(cfg_json);
      const std::string name = sub->get_name();
      if (name == "convergence") return emit(vqo::run_convergence(cfg), cfg, prefix);
      if (name == "separation") return emit(vqo::run_separation(cfg), cfg, prefix);
      const auto res = vqo::run_identification(cfg, &std::cerr);
      for (const auto& row : res.extra["identification"]) {
        std::cout << "identify n=" << row["n"] << " eps=" << row["eps"] << " |V|=" << row["packing_size"]
                  << " success_rate=" << row["success_rate"] << '\n';
      }
      return emit(res, cfg, prefix);
    }
  } catch (const vqo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const vqo::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  }
  return kOk;
}
