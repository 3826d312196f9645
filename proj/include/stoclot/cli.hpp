#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stoclot/certifier.hpp"
#include "stoclot/chance.hpp"
#include "stoclot/determinize.hpp"
#include "stoclot/error.hpp"
#include "stoclot/expected.hpp"
#include "stoclot/generators.hpp"
#include "stoclot/io.hpp"
#include "stoclot/lottery.hpp"
#include "stoclot/verify.hpp"

namespace stoclot::cli {

enum ExitCode : int { ok = 0, invariant_failure = 1, infeasible = 2, bad_input = 3, resource_exhausted = 4 };

/// Everything a verb may read. Unset optionals fall back to per-verb defaults.
struct RunConfig {
  std::string verb;
  std::string instance_path, demand_path, qdist_path, out_path, report_path;
  std::string algo, method, plugin = "localsearch", kind, mode = "partial", dump_lp_path;
  std::optional<std::uint64_t> seed;
  std::size_t samples = 0;
  unsigned jobs = 1;
  double epsilon = 0.25;
  double alpha = 2.0;
  std::optional<double> q, radius;
  // gen
  std::size_t n = 0, facilities = 0, dim = 2;
  int k = 0;
  bool non_scc = false;
  std::string demand_kind;
  // certify
  std::string eps_grid = "2^-8";
  int L = 7, M = 10;
  bool sweep_p = false;
  std::string scc_grid = "2^-18";
  bool reduce = false;
  std::size_t max_rounds = 10'000;
};

/// Accepts "2^-12", "1/4096" or a plain decimal.
inline double parse_grid(const std::string& s) {
  try {
    if (auto pos = s.find('^'); pos != std::string::npos)
      return std::pow(std::stod(s.substr(0, pos)), std::stod(s.substr(pos + 1)));
    if (auto pos = s.find('/'); pos != std::string::npos) return std::stod(s.substr(0, pos)) / std::stod(s.substr(pos + 1));
    return std::stod(s);
  } catch (const std::exception&) {
    throw input_error("cannot parse grid width '" + s + "'");
  }
}

/// --seed, else STOCLOT_SEED, else 0.
inline std::uint64_t resolve_seed(const RunConfig& cfg) {
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("STOCLOT_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw input_error("STOCLOT_SEED must be a nonnegative integer");
    return v;
  }
  return 0;
}

namespace detail {

inline void emit(const RunConfig& cfg, const io::json& j) {
  const std::string text = io::dump(j);
  if (cfg.out_path.empty()) std::cout << text;
  else io::write_file(cfg.out_path, text);
}

inline Instance load_instance(const RunConfig& cfg) {
  stoclot::detail::require(!cfg.instance_path.empty(), "--instance is required");
  return io::instance_from_json(io::parse(io::read_file(cfg.instance_path), cfg.instance_path));
}

inline io::Demands load_demands(const RunConfig& cfg, const Instance& instance) {
  stoclot::detail::require(!cfg.demand_path.empty(), "--demand is required");
  return io::demands_from_json(instance, io::parse(io::read_file(cfg.demand_path), cfg.demand_path));
}

inline DemandChance need_chance(const io::Demands& d) {
  stoclot::detail::require(d.chance.has_value(), "demand file has no 'chance' section");
  return *d.chance;
}

inline DemandExpected need_expected(const io::Demands& d) {
  stoclot::detail::require(d.expected.has_value(), "demand file has no 'expected' section");
  return *d.expected;
}

inline QDistribution load_qdist(const RunConfig& cfg) {
  if (cfg.qdist_path.empty()) return QDistribution::reference();
  return io::qdist_from_json(io::parse(io::read_file(cfg.qdist_path), cfg.qdist_path));
}

/// Cover radii for the lottery algorithms: the demand file's r, else --radius, else the
/// smallest LP-feasible common radius.
inline std::vector<double> lottery_radii(const RunConfig& cfg, const Instance& instance) {
  if (!cfg.demand_path.empty()) return need_chance(load_demands(cfg, instance)).r;
  if (cfg.radius) return std::vector<double>(instance.num_clients(), *cfg.radius);
  return std::vector<double>(instance.num_clients(), guess_radius(instance));
}

inline constexpr double kDefaultSccQ = 0.464587;

/// A sampler together with the guarantees it claims.
struct Algorithm {
  Sampler sampler;
  Guarantees guarantees;
  std::vector<double> radius;  // lottery algorithms: cover radii
  double mean_factor = 0.0;    // lottery algorithms: claimed E[d] / r
};

inline Algorithm make_algorithm(const RunConfig& cfg, const Instance& instance) {
  const std::string& a = cfg.algo;
  Algorithm out;
  auto scaled = [](const std::vector<double>& v, double f) {
    std::vector<double> o(v);
    for (double& x : o) x *= f;
    return o;
  };
  if (a == "faithful" || a == "half_p" || a == "half_r" || a == "half-homog" || a == "iterative") {
    const auto demand = need_chance(load_demands(cfg, instance));
    auto& g = out.guarantees;
    if (a == "faithful") {
      auto rounding = std::make_shared<FaithfulRounding>(instance, demand);
      out.sampler = [rounding](RandomSource& r) { return rounding->sample(r); };
      g.cover_radius = demand.r;
      g.min_coverage = scaled(demand.p, 1.0 - std::exp(-1.0));
    } else if (a == "iterative") {
      auto rounding = std::make_shared<IterativeRounding>(instance, demand);
      out.sampler = [rounding](RandomSource& r) { return rounding->sample(r); };
      g.cover_radius = scaled(demand.r, 9.0);
      g.min_coverage = demand.p;
    } else {
      // half-homog picks equal_p whenever all p_j coincide.
      const bool equal_p = a == "half_p" || (a == "half-homog" && std::all_of(demand.p.begin(), demand.p.end(),
                                                                               [&](double v) { return v == demand.p[0]; }));
      const auto mode = equal_p ? HalfHomogeneousMode::equal_p : HalfHomogeneousMode::equal_r;
      auto rounding = std::make_shared<HalfHomogeneousRounding>(instance, demand, mode);
      out.sampler = [rounding](RandomSource& r) { return rounding->sample(r); };
      g.cover_radius = scaled(demand.r, instance.scc() ? 2.0 : 3.0);
      g.min_coverage = demand.p;
    }
    return out;
  }
  if (a == "general" || a == "scc" || a == "partial") {
    out.radius = lottery_radii(cfg, instance);
    if (a == "partial") {
      const double r = out.radius.front();
      for (double v : out.radius) stoclot::detail::require(v == r, "partial lottery needs one common radius");
      auto lottery = std::make_shared<PartialLottery>(instance, r, load_qdist(cfg));
      out.sampler = [lottery](RandomSource& s) { return lottery->sample(s); };
      out.mean_factor = 1.592 + 0.01;
    } else {
      const double q = a == "scc" ? cfg.q.value_or(kDefaultSccQ) : 0.0;
      auto lottery = std::make_shared<ClusterLottery>(instance, out.radius, q);
      out.sampler = [lottery](RandomSource& s) { return lottery->sample(s); };
      out.mean_factor = a == "scc" ? 1.608 : 1.736;
    }
    out.guarantees.hard_radius = scaled(out.radius, 3.0);
    out.guarantees.max_mean = scaled(out.radius, out.mean_factor);
    return out;
  }
  throw input_error("unknown --algo '" + a + "' (faithful, half-homog, half_p, half_r, iterative, general, scc, partial)");
}

inline int run_verify(const RunConfig& cfg) {
  stoclot::detail::require(cfg.samples >= 1000, "--samples must be at least 1000");
  const Instance instance = load_instance(cfg);
  const auto algo = make_algorithm(cfg, instance);
  const auto report = mc_verify(instance, algo.sampler, algo.guarantees, cfg.samples, resolve_seed(cfg), cfg.jobs);
  const auto j = io::report_to_json(instance, report);
  if (!cfg.report_path.empty()) io::write_file(cfg.report_path, io::dump(j));
  emit(cfg, j);
  return ok;
}

inline void dump_lp(const RunConfig& cfg, const Instance& instance, const std::string& problem) {
  if (cfg.dump_lp_path.empty()) return;
  const auto demands = load_demands(cfg, instance);
  const auto program = problem == "expected" ? expectation_program(instance, need_expected(demands))
                                             : chance_program(instance, need_chance(demands));
  io::write_file(cfg.dump_lp_path, lp::to_lp_format(program));
}

inline int run_solve(const RunConfig& cfg, const std::string& problem) {
  if (cfg.samples > 0 && problem != "expected") return run_verify(cfg);
  const Instance instance = load_instance(cfg);
  if (problem != "lottery") dump_lp(cfg, instance, problem);
  RandomSource rng(resolve_seed(cfg));
  if (problem == "expected") {
    const auto demand = need_expected(load_demands(cfg, instance));
    const auto plugin = cfg.plugin == "localsearch" ? localsearch_plugin() : bruteforce_plugin();
    stoclot::detail::require(cfg.plugin == "bruteforce" || cfg.plugin == "localsearch",
                             "--plugin must be bruteforce or localsearch");
    MwuOptions options;
    options.max_rounds = cfg.max_rounds;
    auto result = mwu_lottery(instance, demand, cfg.epsilon, plugin, rng, options);
    if (result.rounds < result.default_rounds)
      std::cerr << "warning: rounds capped at " << result.rounds << " (default " << result.default_rounds
                << "); the epsilon guarantee degrades to the reported ratios\n";
    if (cfg.reduce) result.lottery = reduce_support(instance, result.lottery);
    auto j = io::lottery_to_json(instance, result.lottery);
    j["rounds"] = result.rounds;
    double worst = 0.0;
    const auto mean = result.lottery.expectations(instance);
    for (std::size_t c = 0; c < mean.size(); ++c)
      if (mean[c] > 0.0) worst = std::max(worst, demand.t[c] > 0.0 ? mean[c] / demand.t[c] : HUGE_VAL);
    j["max_ratio"] = io::detail::number(worst);
    j["plugin"] = plugin.name;
    emit(cfg, j);
    return ok;
  }
  const auto algo = make_algorithm(cfg, instance);
  emit(cfg, io::solution_to_json(instance, algo.sampler(rng)));
  return ok;
}

inline int run_determinize(const RunConfig& cfg) {
  const Instance instance = load_instance(cfg);
  const auto demand = need_expected(load_demands(cfg, instance));
  RandomSource rng(resolve_seed(cfg));
  Determinization d;
  const std::string& m = cfg.method;
  if (m == "scalefree") d = determinize_scalefree(instance, demand, cfg.alpha);
  else if (m == "log" || m == "logblowup") d = determinize_logblowup(instance, demand, cfg.epsilon, rng);
  else if (m == "exact" || m == "exact_k") d = determinize_exact_k(instance, demand);
  else throw input_error("unknown --mode '" + m + "' (scalefree, log, exact)");
  emit(cfg, io::determinization_to_json(instance, d));
  if (!d.infeasibility_witness.empty()) {
    std::cerr << "infeasible: " << d.infeasibility_witness.size()
              << " clients picked before the budget ran out; witness in output\n";
    return infeasible;
  }
  return ok;
}

inline int run_sparsify(const RunConfig& cfg) {
  const Instance instance = load_instance(cfg);
  const auto algo = make_algorithm(cfg, instance);
  stoclot::detail::require(algo.mean_factor > 0.0, "sparsify needs a lottery --algo (general, scc, partial)");
  RandomSource rng(resolve_seed(cfg));
  const auto lottery = sparsify_sampling(instance, algo.sampler, algo.radius, algo.mean_factor, cfg.epsilon, rng);
  emit(cfg, io::lottery_to_json(instance, lottery));
  return ok;
}

inline int run_certify(const RunConfig& cfg) {
  if (cfg.mode == "scc") {
    const auto c = certify_scc_bound(cfg.q.value_or(kDefaultSccQ), parse_grid(cfg.scc_grid));
    std::cerr << "certify scc: " << c.wall_seconds << " s\n";
    emit(cfg, io::certificate_to_json(c));
    return ok;
  }
  stoclot::detail::require(cfg.mode == "partial", "--mode must be partial or scc");
  CertifierOptions o;
  o.eps_grid = parse_grid(cfg.eps_grid);
  o.L = cfg.L;
  o.M = cfg.M;
  o.qdist = load_qdist(cfg);
  o.sweep_p = cfg.sweep_p;
  const auto c = certify_partial_bound(o);
  std::cerr << "certify partial: " << c.wall_seconds << " s, peak " << c.peak_tuples << " tuples\n";
  emit(cfg, io::certificate_to_json(c));
  return ok;
}

inline int run_gen(const RunConfig& cfg) {
  GenParams p;
  p.kind = parse_instance_kind(cfg.kind);
  p.n = cfg.n;
  p.k = cfg.k;
  p.scc = !cfg.non_scc;
  p.facilities = cfg.facilities;
  p.dim = cfg.dim;
  const auto seed = resolve_seed(cfg);
  const Instance instance = gen_instance(p, seed);
  if (!cfg.demand_kind.empty()) {
    RandomSource rng = RandomSource(seed).child("demand");
    io::Demands d;
    if (cfg.demand_kind == "chance") d.chance = feasible_chance_demand(instance, rng);
    else if (cfg.demand_kind == "expected") d.expected = feasible_expected_demand(instance, rng);
    else throw input_error("--demand-kind must be chance or expected");
    stoclot::detail::require(!cfg.demand_path.empty(), "--demand-kind needs --demand-out");
    io::write_file(cfg.demand_path, io::dump(io::demands_to_json(instance, d)));
  }
  emit(cfg, io::instance_to_json(instance));
  return ok;
}

}  // namespace detail

/// Parses argv and dispatches the verb. Exit codes: 0 ok, 1 invariant or solver
/// failure, 2 infeasible demand, 3 input error, 4 resource limit.
inline int run(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"Stochastic k-clustering lotteries: generate, solve, determinize, sparsify, certify, verify"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "random seed (else STOCLOT_SEED, else 0)"); };
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--instance", cfg.instance_path, "instance JSON");
    sub->add_option("--demand", cfg.demand_path, "demand JSON");
    sub->add_option("--out", cfg.out_path, "output path (default stdout)");
    add_seed(sub);
  };
  auto add_algo = [&](CLI::App* sub) {
    sub->add_option("--algo", cfg.algo, "faithful | half_p | half_r | iterative | general | scc | partial");
    sub->add_option("--q", cfg.q, "center-shift probability for --algo scc");
    sub->add_option("--qdist", cfg.qdist_path, "QDistribution JSON for --algo partial");
    sub->add_option("--radius", cfg.radius, "common cover radius when no demand file is given");
    sub->add_option("--samples", cfg.samples, "Monte Carlo samples");
    sub->add_option("--jobs", cfg.jobs, "sampling worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--report", cfg.report_path, "also write the report here");
  };

  auto* gen = app.add_subcommand("gen", "generate an instance");
  gen->add_option("--kind", cfg.kind, "euclidean | random_metric | uniform_gadget | star")->required();
  gen->add_option("--n", cfg.n, "number of points")->required();
  gen->add_option("--k", cfg.k, "budget k")->required();
  gen->add_flag("--non-scc", cfg.non_scc, "split points into facilities and clients");
  gen->add_option("--facilities", cfg.facilities, "facility count for --non-scc");
  gen->add_option("--dim", cfg.dim, "euclidean dimension");
  gen->add_option("--demand-kind", cfg.demand_kind, "also write a feasible chance | expected demand");
  gen->add_option("--demand-out", cfg.demand_path, "path for --demand-kind");
  gen->add_option("--out", cfg.out_path, "output path (default stdout)");
  add_seed(gen);

  auto* solve = app.add_subcommand("solve", "run an algorithm once, or verify it with --samples");
  solve->require_subcommand(1);
  std::string problem;
  for (const char* name : {"chance", "lottery", "expected"}) {
    auto* sub = solve->add_subcommand(name, std::string(name) + " demands");
    add_common(sub);
    add_algo(sub);
    sub->add_option("--eps,--epsilon", cfg.epsilon, "epsilon");
    sub->add_option("--plugin", cfg.plugin, "k-median plugin: localsearch (default) | bruteforce");
    sub->add_option("--max-rounds", cfg.max_rounds, "cap on multiplicative-weights rounds (0: no cap)");
    sub->add_option("--dump-lp", cfg.dump_lp_path, "write the LP in text LP format");
    sub->add_flag("--reduce", cfg.reduce, "reduce the lottery support to at most |C|+1 atoms");
    sub->callback([&problem, name] { problem = name; });
  }

  auto* det = app.add_subcommand("determinize", "replace a lottery by one set");
  add_common(det);
  det->add_option("--mode,--method", cfg.method, "scalefree | log | exact")->required();
  det->add_option("--alpha", cfg.alpha, "cardinality factor for scalefree");
  det->add_option("--eps,--epsilon", cfg.epsilon, "epsilon for log");

  auto* sparsify = app.add_subcommand("sparsify", "sample a small uniform lottery");
  add_common(sparsify);
  add_algo(sparsify);
  sparsify->add_option("--eps,--epsilon", cfg.epsilon, "epsilon");

  auto* certify = app.add_subcommand("certify", "certify the lottery constants");
  certify->add_option("--mode", cfg.mode, "partial | scc");
  certify->add_option("--eps-grid", cfg.eps_grid, "cell width, e.g. 2^-12");
  certify->add_option("--L", cfg.L, "number of u coordinates");
  certify->add_option("--M", cfg.M, "largest m");
  certify->add_option("--qdist", cfg.qdist_path, "QDistribution JSON");
  certify->add_flag("--sweep-p", cfg.sweep_p, "optimize the weight of the q_p = 0 point");
  certify->add_option("--q", cfg.q, "q for --mode scc");
  certify->add_option("--grid", cfg.scc_grid, "s-grid width for --mode scc, e.g. 2^-18");
  certify->add_option("--out", cfg.out_path, "output path (default stdout)");

  auto* verify = app.add_subcommand("verify", "Monte Carlo verification report");
  add_common(verify);
  add_algo(verify);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      std::cerr << app.help();
      return bad_input;
    }
    for (auto* sub : app.get_subcommands()) {
      cfg.verb = sub->get_name();
      for (auto* s : sub->get_subcommands())
        if (s->count("--seed")) cfg.seed = seed;
      if (sub->get_option_no_throw("--seed") && sub->count("--seed")) cfg.seed = seed;
    }
    if (cfg.verb == "gen") return detail::run_gen(cfg);
    if (cfg.verb == "solve") return detail::run_solve(cfg, problem);
    if (cfg.verb == "determinize") return detail::run_determinize(cfg);
    if (cfg.verb == "sparsify") return detail::run_sparsify(cfg);
    if (cfg.verb == "certify") return detail::run_certify(cfg);
    if (cfg.verb == "verify") return detail::run_verify(cfg);
    throw input_error("unknown verb");
  } catch (const infeasible_error& e) {
    std::cerr << "infeasible: " << e.what() << "\ncertificate: " << e.certificate() << "\n";
    return infeasible;
  } catch (const input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return bad_input;
  } catch (const resource_error& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return resource_exhausted;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return invariant_failure;
  }
}

}  // namespace stoclot::cli
