#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mscme/effective.hpp"
#include "mscme/error.hpp"
#include "mscme/generator.hpp"
#include "mscme/oracles.hpp"
#include "mscme/examples.hpp"
#include "mscme/parallel.hpp"
#include "mscme/parser.hpp"
#include "mscme/pathsample.hpp"
#include "mscme/simulate.hpp"

namespace fs = std::filesystem;
using namespace mscme;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Global {
  std::string paper_examples;
  unsigned workers = 0;
  std::string output_dir = "mscme-out";
  std::string tag;
};

unsigned resolve_workers(const Global& g) { return g.workers > 0 ? g.workers : default_workers(); }

fs::path run_directory(const Global& g, const std::string& cmd) {
  std::string tag = g.tag;
  if (tag.empty()) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y%m%d-%H%M%S");
    tag = os.str();
  }
  fs::path dir = fs::path(g.output_dir) / cmd / tag;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Count parse_count(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("expected an integer, got '" + s + "'");
  return static_cast<Count>(v);
}

std::pair<Count, Count> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw ConfigError("expected lo..hi, got '" + s + "'");
  const Count lo = parse_count(s.substr(0, dots));
  const Count hi = parse_count(s.substr(dots + 2));
  if (lo > hi) throw ConfigError("empty range '" + s + "'");
  return {lo, hi};
}

// "3,2" in the given order, or "X1=3,X2=2" by name.
IntVector parse_values(const std::string& text, const std::vector<std::string>& names) {
  const auto parts = split(text, ',');
  IntVector out(names.size(), 0);
  const bool named = text.find('=') != std::string::npos;
  if (!named) {
    if (parts.size() != names.size())
      throw ConfigError("expected " + std::to_string(names.size()) + " values, got '" + text + "'");
    for (std::size_t i = 0; i < parts.size(); ++i) out[i] = parse_count(parts[i]);
    return out;
  }
  std::vector<bool> seen(names.size(), false);
  for (const auto& p : parts) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw ConfigError("mixed named and positional values in '" + text + "'");
    const std::string key = p.substr(0, eq);
    std::size_t k = 0;
    while (k < names.size() && names[k] != key) ++k;
    if (k == names.size()) throw ConfigError("unknown name '" + key + "'");
    out[k] = parse_count(p.substr(eq + 1));
    seen[k] = true;
  }
  for (std::size_t k = 0; k < names.size(); ++k)
    if (!seen[k]) throw ConfigError("missing value for " + names[k]);
  return out;
}

std::vector<std::string> names_of(const std::vector<Variable>& vars) {
  std::vector<std::string> out;
  for (const auto& v : vars) out.push_back(v.name);
  return out;
}

// A named slow/fast variable or a linear combination of species.
Variable resolve_variable(const NetworkDescription& desc, const std::string& text) {
  if (desc.basis) {
    for (const auto* list : {&desc.basis->slow(), &desc.basis->fast()})
      for (const auto& v : *list)
        if (v.name == text) return v;
  }
  Variable v;
  v.name = text;
  v.coefficients = parse_linear_combination(text, desc.network.species());
  // A combination equal to a declared variable takes its name.
  if (desc.basis)
    for (const auto* list : {&desc.basis->slow(), &desc.basis->fast()})
      for (const auto& w : *list)
        if (w.coefficients == v.coefficients) return w;
  return v;
}

const VariableBasis& require_basis(const NetworkDescription& desc) {
  if (!desc.basis) throw ConfigError("the network file declares no slow/fast variables");
  return *desc.basis;
}

// "X1=0..800,X2=0..1200" overriding the file's species domains.
std::vector<LinearBound> species_bounds(const NetworkDescription& desc, const std::string& text) {
  auto bounds = desc.species_domains();
  if (text.empty()) return bounds;
  for (const auto& part : split(text, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("expected <species>=lo..hi, got '" + part + "'");
    const std::string name = part.substr(0, eq);
    const auto [lo, hi] = parse_range(part.substr(eq + 1));
    LinearBound b;
    b.name = name;
    b.coefficients.assign(desc.network.dimension(), 0);
    b.coefficients[desc.network.species_index(name)] = 1;
    b.lo = lo;
    b.hi = hi;
    bool replaced = false;
    for (auto& old : bounds)
      if (old.name == name) {
        old = b;
        replaced = true;
      }
    if (!replaced) bounds.push_back(b);
  }
  return bounds;
}

// Slow box from "lo..hi[,lo..hi...]" or from the file's slow domains.
SlowDomain slow_domain(const NetworkDescription& desc, const std::vector<Variable>& slow,
                       const std::string& text) {
  SlowDomain omega;
  if (!text.empty()) {
    const auto parts = split(text, ',');
    if (parts.size() != slow.size())
      throw ConfigError("--omega needs one range per slow variable");
    for (const auto& p : parts) {
      const auto [lo, hi] = parse_range(p);
      omega.lo.push_back(lo);
      omega.hi.push_back(hi);
    }
    return omega;
  }
  for (const auto& v : slow) {
    const auto d = desc.domain_of(v.name);
    if (!d) throw ConfigError("no domain for slow variable " + v.name + "; pass --omega");
    omega.lo.push_back(d->lo);
    omega.hi.push_back(d->hi);
  }
  return omega;
}

std::vector<LinearBound> fiber_bounds(const NetworkDescription& desc,
                                      const std::vector<std::string>& specs) {
  std::vector<LinearBound> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected <species>=lo..hi, got '" + s + "'");
    const std::string name = s.substr(0, eq);
    const auto [lo, hi] = parse_range(s.substr(eq + 1));
    LinearBound b;
    b.name = name;
    b.coefficients.assign(desc.network.dimension(), 0);
    b.coefficients[desc.network.species_index(name)] = 1;
    b.lo = lo;
    b.hi = hi;
    out.push_back(b);
  }
  return out;
}

// Options shared by effective and pathsample.
struct ReductionArgs {
  std::string method = "cma";
  std::string omega;
  std::string plan;
  std::vector<std::string> fast_reactions;
  std::vector<std::string> fiber_bounds;
  bool no_merge = false;
};

void add_reduction_options(CLI::App* app, ReductionArgs& a) {
  app->add_option("--method", a.method, "cma or qssa")->capture_default_str();
  app->add_option("--omega", a.omega, "slow domain lo..hi, one range per slow variable");
  app->add_option("--plan", a.plan, "nested reduction plan file");
  app->add_option("--fast-reactions", a.fast_reactions, "QSSA fast set (default: all non-slow reactions)")
      ->delimiter(',');
  app->add_option("--fiber-bound", a.fiber_bounds, "species=lo..hi truncating every fiber");
  app->add_flag("--no-merge", a.no_merge, "keep duplicate projected reactions apart");
}

EffectiveGenerator build_effective(const NetworkDescription& desc, const ReductionArgs& a,
                                   unsigned workers) {
  const Method method = parse_method(a.method);
  EffectiveOptions opt;
  opt.workers = workers;
  opt.merge_duplicates = !a.no_merge;
  const auto bounds = fiber_bounds(desc, a.fiber_bounds);
  if (!a.plan.empty()) {
    auto plan = parse_plan(read_text_file(a.plan), desc.network.species());
    if (!bounds.empty())
      for (auto& level : plan.levels)
        level.fiber_bounds.insert(level.fiber_bounds.end(), bounds.begin(), bounds.end());
    const auto omega = slow_domain(desc, plan.levels.front().basis.slow(), a.omega);
    return nested_effective_generator(desc.network, plan, method, omega, opt);
  }
  const auto& basis = require_basis(desc);
  const auto omega = slow_domain(desc, basis.slow(), a.omega);
  if (method == Method::CMA) return cma_effective_generator(desc.network, basis, omega, bounds, opt);
  return qssa_effective_generator(desc.network, basis, a.fast_reactions, omega, bounds, opt);
}

void write_peaks(std::ostream& os, const Distribution& d) {
  const auto peaks = peak_report(d);
  os << "peaks:";
  for (const auto& p : peaks) os << " (" << p.position << ", " << format_double(p.height) << ")";
  os << "\n";
}

double total_mass(const Distribution& d) {
  double m = 0.0;
  for (double p : d.probabilities) m += p;
  return m;
}

// ---------------------------------------------------------------- commands

struct SimulateArgs {
  std::string network;
  double t_end = 1.0;
  std::string x0;
  std::uint64_t seed = 0;
  bool constrained = false;
  std::string slow_values;
};

int cmd_simulate(const Global& g, const SimulateArgs& a) {
  const auto desc = load_network(a.network);
  const auto out_dir = run_directory(g, "simulate");
  RandomSource rng(a.seed);
  Trajectory traj;
  if (a.constrained) {
    const auto& basis = require_basis(desc);
    IntVector slow, fast;
    if (a.slow_values.empty()) {
      const auto x = parse_values(a.x0, desc.network.species());
      slow = basis.slow_values(x);
      fast = basis.fast_values(x);
    } else {
      slow = parse_values(a.slow_values, names_of(basis.slow()));
      fast = parse_values(a.x0, names_of(basis.fast()));
    }
    traj = simulate_constrained(desc.network, basis, slow, fast, a.t_end, rng);
  } else {
    const auto x0 = parse_values(a.x0, desc.network.species());
    for (Count c : x0)
      if (c < 0) throw ConfigError("initial counts must be nonnegative");
    traj = simulate_ssa(desc.network, x0, a.t_end, rng);
  }
  auto os = open_output(out_dir / "trajectory.csv");
  write_trajectory_csv(os, traj);
  auto summary = open_output(out_dir / "summary.txt");
  summary << "jumps: " << traj.jumps() << "\n";
  for (const auto& [id, f] : reaction_frequencies(traj))
    summary << f.name << ": " << f.count << " (" << format_double(f.share) << ")\n";
  std::cout << "wrote " << (out_dir / "trajectory.csv").string() << " (" << traj.jumps() << " jumps)\n";
  return 0;
}

struct StationaryArgs {
  std::string network;
  std::string domain;
  std::string marginal;
  std::vector<std::string> share;
};

int cmd_stationary(const Global& g, const StationaryArgs& a) {
  const auto desc = load_network(a.network);
  const auto out_dir = run_directory(g, "stationary");
  const auto t0 = Clock::now();
  const auto bounds = species_bounds(desc, a.domain);
  auto space = std::make_shared<StateSpace>(enumerate_states(desc.network, bounds));
  const auto gen = assemble_generator(desc.network, space);
  StationaryReport report;
  const auto pi = stationary_distribution(gen, {}, &report);
  const double elapsed = seconds_since(t0);
  {
    auto os = open_output(out_dir / "distribution.csv");
    write_distribution_csv(os, pi);
  }
  auto summary = open_output(out_dir / "summary.txt");
  summary << "states: " << space->size() << "\n"
          << "mass: " << format_double(total_mass(pi)) << "\n"
          << "residual: " << format_double(report.residual) << "\n"
          << "iterations: " << report.iterations << "\n"
          << "max_exit_rate: " << format_double(gen.max_exit_rate()) << "\n"
          << "seconds: " << format_double(elapsed) << "\n";
  if (!a.marginal.empty()) {
    const auto var = resolve_variable(desc, a.marginal);
    const auto marg = marginalize(pi, var.coefficients, var.name);
    auto os = open_output(out_dir / "marginal.csv");
    write_distribution_csv(os, marg);
    write_peaks(summary, marg);
    write_peaks(std::cout, marg);
  }
  if (!a.share.empty()) {
    std::vector<std::size_t> fast;
    for (const auto& name : a.share) fast.push_back(desc.network.reaction_index(name));
    const auto share = fast_propensity_share(desc.network, fast, *space, &pi);
    summary << "fast_share_expectation: " << format_double(*share.expectation) << "\n";
    std::cout << "E(fast share) = " << format_double(*share.expectation) << "\n";
  }
  std::cout << "stationary distribution over " << space->size() << " states in "
            << format_double(elapsed) << " s -> " << out_dir.string() << "\n";
  return 0;
}

struct EffectiveArgs {
  std::string network;
  ReductionArgs reduction;
};

int cmd_effective(const Global& g, const EffectiveArgs& a) {
  const auto desc = load_network(a.network);
  const auto out_dir = run_directory(g, "effective");
  const auto t0 = Clock::now();
  const auto eff = build_effective(desc, a.reduction, resolve_workers(g));
  const double build_seconds = seconds_since(t0);
  const auto t1 = Clock::now();
  const auto pi = stationary_distribution(eff.generator);
  const double solve_seconds = seconds_since(t1);
  {
    auto os = open_output(out_dir / "generator.csv");
    write_effective_generator_csv(os, eff);
  }
  {
    auto os = open_output(out_dir / "propensities.csv");
    write_effective_propensities_csv(os, eff);
  }
  {
    auto os = open_output(out_dir / "stationary.csv");
    write_distribution_csv(os, pi);
  }
  auto summary = open_output(out_dir / "summary.txt");
  summary << "method: " << to_string(eff.method) << "\n"
          << "slow_states: " << eff.slow_space->size() << "\n"
          << "max_exit_rate: " << format_double(eff.generator.max_exit_rate()) << "\n"
          << "build_seconds: " << format_double(build_seconds) << "\n"
          << "solve_seconds: " << format_double(solve_seconds) << "\n";
  if (eff.slow_space->dimension() == 1) write_peaks(summary, pi);
  std::cout << to_string(eff.method) << " effective generator over " << eff.slow_space->size()
            << " slow states in " << format_double(build_seconds) << " s -> " << out_dir.string()
            << "\n";
  return 0;
}

struct PathArgs {
  std::string network;
  ReductionArgs reduction;
  double t0 = 0.0, t1 = 1.0;
  std::string x0, x1;
  std::size_t n_paths = 1;
  std::string strategy = "auto";
  std::uint64_t seed = 0;
  double inflation = 1.0;
  std::size_t bins = 100;
  bool no_paths = false;
};

int cmd_pathsample(const Global& g, const PathArgs& a) {
  if (!(a.t1 > a.t0)) throw ConfigError("--t1 must exceed --t0");
  if (a.bins == 0) throw ConfigError("--bins must be positive");
  const auto desc = load_network(a.network);
  const auto out_dir = run_directory(g, "pathsample");
  const unsigned workers = resolve_workers(g);
  const auto eff = build_effective(desc, a.reduction, workers);
  const auto& space = *eff.slow_space;
  const auto s0 = parse_values(a.x0, space.species());
  const auto s1 = parse_values(a.x1, space.species());
  const std::size_t i0 = space.find(s0), i1 = space.find(s1);
  if (i0 == StateSpace::npos || i1 == StateSpace::npos)
    throw ConfigError("endpoint outside the slow domain");

  DominatingOptions dopt;
  dopt.inflation = a.inflation;
  dopt.strategy = parse_power_strategy(a.strategy);
  const auto setup = Clock::now();
  const DominatingProcess dom(eff.generator, dopt);
  const auto pmf = event_count_pmf(dom, a.t1 - a.t0, i0, i1);
  const double setup_seconds = seconds_since(setup);

  std::vector<Trajectory> paths(a.n_paths);
  std::vector<PathInfo> infos(a.n_paths);
  const RandomSource root(a.seed);
  parallel_for(a.n_paths, workers, [&](std::size_t k) {
    RandomSource rng = root.split(k);
    paths[k] = sample_conditioned_path(dom, pmf, a.t0, rng, &infos[k]);
  });

  if (!a.no_paths) {
    auto os = open_output(out_dir / "paths.csv");
    write_trajectory_header(os, space.species(), true);
    for (std::size_t k = 0; k < paths.size(); ++k) write_trajectory_rows(os, paths[k], static_cast<long>(k));
  }
  {
    auto os = open_output(out_dir / "path_stats.csv");
    os << "path_id,r,jumps,seconds\n";
    for (std::size_t k = 0; k < infos.size(); ++k)
      os << k << ',' << infos[k].events << ',' << infos[k].jumps << ','
         << format_double(infos[k].seconds) << '\n';
  }
  {
    // Each path is read at the bin midpoints; mean, SD and SE across paths.
    auto os = open_output(out_dir / "mean_series.csv");
    os << "bin,t,mean,sd,se\n";
    const double width = (a.t1 - a.t0) / static_cast<double>(a.bins);
    for (std::size_t b = 0; b < a.bins; ++b) {
      const double t = a.t0 + (static_cast<double>(b) + 0.5) * width;
      double sum = 0.0, sq = 0.0;
      for (const auto& p : paths) {
        const double v = static_cast<double>(p.state_at(t)[0]);
        sum += v;
        sq += v * v;
      }
      const double n = static_cast<double>(paths.size());
      const double mean = sum / n;
      const double var = n > 1 ? std::max(0.0, (sq - n * mean * mean) / (n - 1)) : 0.0;
      os << b << ',' << format_double(t) << ',' << format_double(mean) << ','
         << format_double(std::sqrt(var)) << ',' << format_double(std::sqrt(var / n)) << '\n';
    }
  }
  auto summary = open_output(out_dir / "summary.txt");
  summary << "rho: " << format_double(dom.rho()) << "\n"
          << "strategy: " << to_string(dom.strategy()) << (dom.degraded() ? " (eigen fallback)" : "")
          << "\n"
          << "r_max: " << pmf.r_max << "\n"
          << "transition_probability: " << format_double(pmf.transition) << "\n"
          << "setup_seconds: " << format_double(setup_seconds) << "\n";
  std::cout << a.n_paths << " paths, rho " << format_double(dom.rho()) << ", r_max " << pmf.r_max
            << ", strategy " << to_string(dom.strategy()) << " -> " << out_dir.string() << "\n";
  return 0;
}

struct CompareArgs {
  std::string reference;
  std::vector<std::string> inputs;
  std::vector<std::string> labels;
  std::string marginal;
};

Distribution load_distribution(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  return read_distribution_csv(is);
}

int cmd_compare(const Global& g, const CompareArgs& a) {
  if (!a.labels.empty() && a.labels.size() != a.inputs.size())
    throw ConfigError("--labels needs one label per input");
  std::vector<Distribution> inputs;
  for (const auto& p : a.inputs) inputs.push_back(load_distribution(p));
  auto ref = load_distribution(a.reference);
  if (!a.marginal.empty()) {
    // The marginal takes the axis name of the inputs so supports line up.
    const auto coeff = parse_linear_combination(a.marginal, ref.space->species());
    ref = marginalize(ref, coeff, inputs.front().space->species().front());
  }
  std::vector<std::string> labels = a.labels;
  if (labels.empty())
    for (const auto& p : a.inputs) labels.push_back(fs::path(p).stem().string());

  const auto out_dir = run_directory(g, "compare");
  std::vector<std::vector<Peak>> peaks;
  std::vector<double> l2;
  for (const auto& d : inputs) {
    l2.push_back(relative_l2(d, ref));
    peaks.push_back(peak_report(d));
  }
  peaks.push_back(peak_report(ref));
  l2.push_back(0.0);
  labels.push_back("reference");

  auto os = open_output(out_dir / "metrics.csv");
  os << "metric";
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  auto row = [&](const char* name, auto&& value) {
    os << name;
    for (std::size_t k = 0; k < labels.size(); ++k) os << ',' << value(k);
    os << '\n';
  };
  auto peak_at = [&](std::size_t k, bool right) -> const Peak* {
    if (peaks[k].empty()) return nullptr;
    return right ? &peaks[k].back() : &peaks[k].front();
  };
  row("relative_l2", [&](std::size_t k) { return k + 1 == labels.size() ? std::string() : format_double(l2[k]); });
  row("lh_peak_position", [&](std::size_t k) {
    const Peak* p = peak_at(k, false);
    return p ? std::to_string(p->position) : std::string();
  });
  row("lh_peak_height", [&](std::size_t k) {
    const Peak* p = peak_at(k, false);
    return p ? format_double(p->height) : std::string();
  });
  row("rh_peak_position", [&](std::size_t k) {
    const Peak* p = peak_at(k, true);
    return p ? std::to_string(p->position) : std::string();
  });
  row("rh_peak_height", [&](std::size_t k) {
    const Peak* p = peak_at(k, true);
    return p ? format_double(p->height) : std::string();
  });
  os.close();
  std::cout << read_text_file((out_dir / "metrics.csv").string());
  return 0;
}

void write_examples(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir + ": " + ec.message());
  const std::pair<const char*, std::string_view> files[] = {
      {"linear.net", examples::kLinear},
      {"bistable.net", examples::kBistable},
      {"three_scale.net", examples::kThreeScale},
      {"three_scale.plan", examples::kThreeScalePlan},
  };
  for (const auto& [name, text] : files) {
    auto os = open_output(fs::path(dir) / name);
    os << text;
    std::cout << "wrote " << (fs::path(dir) / name).string() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective generators and conditioned paths for multiscale reaction networks"};
  app.require_subcommand(0, 1);
  Global global;
  app.add_option("--paper-examples", global.paper_examples,
                 "write the bundled example networks into this directory");
  app.add_option("--workers", global.workers, "worker threads (default: MSCME_WORKERS or 1)");
  app.add_option("--output-dir", global.output_dir, "root of <cmd>/<tag>/ run directories")
      ->capture_default_str();
  app.add_option("--tag", global.tag, "run directory name (default: timestamp)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "SSA or constrained SSA trajectory");
  c_sim->add_option("network", sim.network, "network file")->required();
  c_sim->add_option("--t-end", sim.t_end, "final time")->required();
  c_sim->add_option("--x0", sim.x0, "initial state (fast values with --slow-values)")->required();
  c_sim->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  c_sim->add_flag("--constrained", sim.constrained, "simulate the constrained subsystem");
  c_sim->add_option("--slow-values", sim.slow_values, "slow values of the constrained fiber");

  StationaryArgs st;
  auto* c_st = app.add_subcommand("stationary", "stationary distribution of the full generator");
  c_st->add_option("network", st.network, "network file")->required();
  c_st->add_option("--domain", st.domain, "species bounds X1=lo..hi,... (default: file domains)");
  c_st->add_option("--marginal", st.marginal, "variable name or linear combination to marginalize on");
  c_st->add_option("--share", st.share, "reactions whose expected propensity share is reported")
      ->delimiter(',');

  EffectiveArgs eff;
  auto* c_eff = app.add_subcommand("effective", "effective generator of the slow variables");
  c_eff->add_option("network", eff.network, "network file")->required();
  add_reduction_options(c_eff, eff.reduction);

  PathArgs path;
  auto* c_path = app.add_subcommand("pathsample", "endpoint conditioned slow paths");
  c_path->add_option("network", path.network, "network file")->required();
  add_reduction_options(c_path, path.reduction);
  c_path->add_option("--t0", path.t0, "start time")->capture_default_str();
  c_path->add_option("--t1", path.t1, "end time")->required();
  c_path->add_option("--x0", path.x0, "slow value at t0")->required();
  c_path->add_option("--x1", path.x1, "slow value at t1")->required();
  c_path->add_option("--n-paths", path.n_paths, "number of paths")->capture_default_str();
  c_path->add_option("--strategy", path.strategy, "auto, eigen, powers or matvec")->capture_default_str();
  c_path->add_option("--seed", path.seed, "random seed")->capture_default_str();
  c_path->add_option("--inflation", path.inflation, "rho / max exit rate")->capture_default_str();
  c_path->add_option("--bins", path.bins, "time bins of the mean series")->capture_default_str();
  c_path->add_flag("--no-paths", path.no_paths, "skip writing paths.csv");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "relative l2 and peaks against a reference");
  c_cmp->add_option("--reference", cmp.reference, "reference distribution CSV")->required();
  c_cmp->add_option("inputs", cmp.inputs, "distribution CSVs to compare")->required();
  c_cmp->add_option("--labels", cmp.labels, "column labels")->delimiter(',');
  c_cmp->add_option("--marginal", cmp.marginal, "marginalize the reference on this combination");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!global.paper_examples.empty()) write_examples(global.paper_examples);
    if (c_sim->parsed()) return cmd_simulate(global, sim);
    if (c_st->parsed()) return cmd_stationary(global, st);
    if (c_eff->parsed()) return cmd_effective(global, eff);
    if (c_path->parsed()) return cmd_pathsample(global, path);
    if (c_cmp->parsed()) return cmd_compare(global, cmp);
    if (global.paper_examples.empty()) {
      std::cout << app.help();
      return 2;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
