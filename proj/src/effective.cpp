#include "mscme/effective.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <ostream>

#include "mscme/error.hpp"
#include "mscme/parallel.hpp"
#include "mscme/parser.hpp"
#include "mscme/simulate.hpp"

namespace mscme {

std::string_view to_string(Method m) { return m == Method::CMA ? "cma" : "qssa"; }

Method parse_method(std::string_view s) {
  std::string lower(s);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "cma") return Method::CMA;
  if (lower == "qssa") return Method::QSSA;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected cma or qssa)");
}

ReductionPlan ReductionPlan::single(VariableBasis basis, std::vector<LinearBound> fiber_bounds) {
  ReductionPlan p;
  p.levels.push_back({std::move(basis), std::move(fiber_bounds), std::nullopt});
  return p;
}

// ---------------------------------------------------------------------------
// Plan files

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

Count parse_count(std::string_view s, int line) {
  s = trim(s);
  Count v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(line, "expected integer, got '" + std::string(s) + "'");
  return v;
}

}  // namespace

ReductionPlan parse_plan(std::string_view text, const std::vector<std::string>& species) {
  struct Block {
    int line = 0;
    std::vector<Variable> slow, fast;
    std::vector<LinearBound> bounds;
    std::optional<std::vector<std::string>> fast_reactions;
  };
  std::vector<Block> blocks;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto words = split_ws(line);
    const std::string& key = words.front();
    if (key == "level") {
      if (words.size() != 1) throw ParseError(lineno, "'level' takes no arguments");
      blocks.push_back({});
      blocks.back().line = lineno;
      continue;
    }
    if (blocks.empty()) throw ParseError(lineno, "plan must start with a 'level' line");
    Block& b = blocks.back();
    if (key == "slow" || key == "fast") {
      std::string_view rest = trim(line.substr(key.size()));
      const auto eq = rest.find('=');
      if (eq == std::string_view::npos) throw ParseError(lineno, "expected '<name> = <combination>'");
      const std::string name(trim(rest.substr(0, eq)));
      if (name.empty()) throw ParseError(lineno, "missing variable name");
      Variable v{name, parse_linear_combination(rest.substr(eq + 1), species, lineno)};
      (key == "slow" ? b.slow : b.fast).push_back(std::move(v));
    } else if (key == "bound") {
      // bound <species> in lo..hi
      if (words.size() != 4 || words[2] != "in")
        throw ParseError(lineno, "expected 'bound <species> in <lo>..<hi>'");
      const auto dots = words[3].find("..");
      if (dots == std::string::npos) throw ParseError(lineno, "expected range <lo>..<hi>");
      IntVector c = parse_linear_combination(words[1], species, lineno);
      b.bounds.push_back({words[1], std::move(c), parse_count(std::string_view(words[3]).substr(0, dots), lineno),
                          parse_count(std::string_view(words[3]).substr(dots + 2), lineno)});
      if (b.bounds.back().lo > b.bounds.back().hi) throw ParseError(lineno, "empty range");
    } else if (key == "fast-reactions") {
      if (words.size() < 2) throw ParseError(lineno, "fast-reactions needs at least one name");
      b.fast_reactions = std::vector<std::string>(words.begin() + 1, words.end());
    } else {
      throw ParseError(lineno, "unknown keyword '" + key + "'");
    }
  }
  if (blocks.empty()) throw ConfigError("plan has no levels");

  ReductionPlan plan;
  std::vector<Variable> slow_so_far;
  for (auto& b : blocks) {
    if (b.slow.empty()) throw ParseError(b.line, "level declares no slow variable");
    slow_so_far.insert(slow_so_far.end(), b.slow.begin(), b.slow.end());
    try {
      plan.levels.push_back({VariableBasis(slow_so_far, b.fast), std::move(b.bounds),
                             std::move(b.fast_reactions)});
    } catch (const ParseError&) {
      throw;
    } catch (const ConfigError& e) {
      throw ParseError(b.line, e.what());
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Cache

std::shared_ptr<const Distribution> FiberCache::find(std::size_t level, const IntVector& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({level, key});
  return it == entries_.end() ? nullptr : it->second;
}

std::shared_ptr<const Distribution> FiberCache::insert(std::size_t level, const IntVector& key,
                                                       std::shared_ptr<const Distribution> d) {
  std::lock_guard lock(mu_);
  auto [it, fresh] = entries_.try_emplace({level, key}, std::move(d));
  return it->second;
}

std::size_t FiberCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> slow_reactions(const ReactionNetwork& net, const VariableBasis& basis) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < net.size(); ++r)
    for (const auto& v : basis.slow())
      if (dot(v.coefficients, net.reaction(r).stoichiometry) != 0) {
        out.push_back(r);
        break;
      }
  return out;
}

double effective_propensity(const Distribution& dist, const Reaction& reaction) {
  return effective_propensity(dist, [&](std::span<const Count> x) { return reaction.propensity(x); });
}

namespace {

std::string tuple_text(const IntVector& s, char sep = ',') {
  std::string out;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += sep;
    out += std::to_string(s[k]);
  }
  return out;
}

// Rethrows the active exception with the fiber it came from.
[[noreturn]] void rethrow_at(std::size_t level, const IntVector& s) {
  const std::string where = "level " + std::to_string(level) + ", s=(" + tuple_text(s) + "): ";
  try {
    throw;
  } catch (const ParseError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(where + e.what());
  }
}

struct ResolvedLevel {
  VariableBasis basis;
  std::vector<LinearBound> bounds;  // this level and every outer one
  ReactionNetwork net;              // dynamics inside this level's fibers
  std::size_t slow_count = 0;       // cumulative
};

class Reducer {
 public:
  Reducer(const ReactionNetwork& net, const ReductionPlan& plan, Method method,
          const EffectiveOptions& options)
      : top_(net), method_(method), options_(options) {
    if (plan.levels.empty()) throw ConfigError("reduction plan has no levels");
    levels_.reserve(plan.levels.size());  // parent and prev_basis point into it
    const ReactionNetwork* parent = &top_;
    std::vector<LinearBound> bounds;
    std::size_t prev_slow = 0;
    const VariableBasis* prev_basis = nullptr;
    for (std::size_t k = 0; k < plan.levels.size(); ++k) {
      const auto& lv = plan.levels[k];
      if (lv.basis.dimension() != net.dimension())
        throw ConfigError("level " + std::to_string(k + 1) + " basis does not match the network");
      const std::size_t ns = lv.basis.slow().size();
      if (ns <= prev_slow)
        throw ConfigError("level " + std::to_string(k + 1) + " adds no slow variable");
      for (std::size_t i = 0; i < prev_slow; ++i)
        if (lv.basis.slow()[i].coefficients != prev_basis->slow()[i].coefficients)
          throw ConfigError("level " + std::to_string(k + 1) +
                            " must keep the slow variables of the enclosing level first");
      for (const auto& b : lv.fiber_bounds) bounds.push_back(b);
      ReactionNetwork inner = method_ == Method::CMA
                                  ? derive_constrained_subsystem(*parent, lv.basis, options_.merge_duplicates)
                                  : fast_subsystem(*parent, lv, k + 1);
      levels_.push_back({lv.basis, bounds, std::move(inner), ns});
      parent = &levels_.back().net;
      prev_slow = ns;
      prev_basis = &levels_.back().basis;
    }
    // Level-(k+1) slow reactions of the level-k network, with their change
    // of the new slow variables.
    for (std::size_t k = 0; k + 1 < levels_.size(); ++k) {
      const auto& net_k = levels_[k].net;
      const auto& slow_next = levels_[k + 1].basis.slow();
      std::vector<std::pair<std::size_t, IntVector>> moves;
      for (std::size_t r = 0; r < net_k.size(); ++r) {
        IntVector delta;
        bool moves_slow = false;
        for (std::size_t i = levels_[k].slow_count; i < levels_[k + 1].slow_count; ++i) {
          delta.push_back(dot(slow_next[i].coefficients, net_k.reaction(r).stoichiometry));
          moves_slow = moves_slow || delta.back() != 0;
        }
        if (moves_slow) moves.emplace_back(r, std::move(delta));
      }
      inner_moves_.push_back(std::move(moves));
    }
  }

  const ResolvedLevel& level(std::size_t k) const { return levels_[k]; }
  std::size_t depth() const { return levels_.size(); }

  std::shared_ptr<const Distribution> fiber(std::size_t k, const IntVector& s) {
    const bool cached = options_.cache && k < options_.cache->max_level();
    if (cached)
      if (auto hit = options_.cache->find(k + 1, s)) return hit;
    auto d = k + 1 == levels_.size() ? solve_direct(k, s) : solve_nested(k, s);
    if (cached) return options_.cache->insert(k + 1, s, std::move(d));
    return d;
  }

 private:
  ReactionNetwork fast_subsystem(const ReactionNetwork& parent, const ReductionLevel& lv,
                                 std::size_t level_no) const {
    std::vector<std::size_t> keep;
    if (lv.fast_reactions) {
      for (const auto& name : *lv.fast_reactions) keep.push_back(parent.reaction_index(name));
      std::sort(keep.begin(), keep.end());
      keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
      for (auto r : keep)
        for (const auto& v : lv.basis.slow())
          if (dot(v.coefficients, parent.reaction(r).stoichiometry) != 0)
            throw ConfigError("level " + std::to_string(level_no) + ": fast reaction '" +
                              parent.reaction(r).name + "' changes slow variable '" + v.name + "'");
    } else {
      const auto slow = slow_reactions(parent, lv.basis);
      for (std::size_t r = 0; r < parent.size(); ++r)
        if (!std::binary_search(slow.begin(), slow.end(), r)) keep.push_back(r);
    }
    return parent.subset(keep);
  }

  SpacePtr enumerate(std::size_t k, const IntVector& s) const {
    const auto& lv = levels_[k];
    const auto constraints = slow_constraints(lv.basis, s);
    return std::make_shared<StateSpace>(enumerate_states(top_.species(), lv.bounds, constraints));
  }

  std::shared_ptr<const Distribution> solve_direct(std::size_t k, const IntVector& s) {
    try {
      SpacePtr space = enumerate(k, s);
      if (space->size() == 1) return std::make_shared<Distribution>(Distribution{space, {1.0}});
      const SparseGenerator g = assemble_generator(levels_[k].net, space);
      return std::make_shared<Distribution>(stationary_distribution(g, options_.stationary));
    } catch (...) {
      rethrow_at(k + 1, s);
    }
  }

  std::shared_ptr<const Distribution> solve_nested(std::size_t k, const IntVector& s) {
    const auto& next = levels_[k + 1];
    SpacePtr space;
    std::vector<Count> flat_v;
    std::vector<std::string> v_names;
    const std::size_t nv = next.slow_count - levels_[k].slow_count;
    try {
      space = enumerate(k, s);
      std::vector<IntVector> values;
      values.reserve(space->size());
      for (std::size_t i = 0; i < space->size(); ++i) {
        IntVector v(nv);
        for (std::size_t j = 0; j < nv; ++j)
          v[j] = dot(next.basis.slow()[levels_[k].slow_count + j].coefficients, space->state(i));
        values.push_back(std::move(v));
      }
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (const auto& v : values) flat_v.insert(flat_v.end(), v.begin(), v.end());
      for (std::size_t j = 0; j < nv; ++j)
        v_names.push_back(next.basis.slow()[levels_[k].slow_count + j].name);
    } catch (...) {
      rethrow_at(k + 1, s);
    }
    auto vspace = std::make_shared<StateSpace>(v_names, std::move(flat_v));
    const std::size_t m = vspace->size();

    std::vector<std::shared_ptr<const Distribution>> sub(m);
    for (std::size_t a = 0; a < m; ++a) {
      IntVector key = s;
      const auto v = vspace->state(a);
      key.insert(key.end(), v.begin(), v.end());
      sub[a] = fiber(k + 1, key);
    }

    const auto& net_k = levels_[k].net;
    std::vector<SparseGenerator::Entry> entries;
    IntVector target(nv);
    for (std::size_t a = 0; a < m; ++a) {
      for (const auto& [r, delta] : inner_moves_[k]) {
        const double rate = effective_propensity(*sub[a], net_k.reaction(r));
        if (!(rate > 0.0)) continue;
        const auto v = vspace->state(a);
        for (std::size_t j = 0; j < nv; ++j) target[j] = v[j] + delta[j];
        const std::size_t b = vspace->find(target);
        if (b != StateSpace::npos) entries.push_back({b, a, rate});
      }
    }
    std::vector<double> q{1.0};
    try {
      if (m > 1) {
        const SparseGenerator gv(vspace, m, entries);
        q = stationary_distribution(gv, options_.stationary).probabilities;
      }
    } catch (...) {
      rethrow_at(k + 1, s);
    }

    auto out = std::make_shared<Distribution>();
    out->space = space;
    out->probabilities.assign(space->size(), 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      if (q[a] == 0.0) continue;
      const auto& d = *sub[a];
      for (std::size_t i = 0; i < d.space->size(); ++i) {
        const std::size_t at = space->find(d.space->state(i));
        if (at == StateSpace::npos)
          throw NumericalError("level " + std::to_string(k + 2) + " fiber leaves its parent fiber");
        out->probabilities[at] += q[a] * d.probabilities[i];
      }
    }
    return out;
  }

  const ReactionNetwork& top_;
  Method method_;
  const EffectiveOptions& options_;
  std::vector<ResolvedLevel> levels_;
  std::vector<std::vector<std::pair<std::size_t, IntVector>>> inner_moves_;
};

}  // namespace

EffectiveGenerator nested_effective_generator(const ReactionNetwork& net, const ReductionPlan& plan,
                                              Method method, const SlowDomain& omega,
                                              const EffectiveOptions& options) {
  Reducer reducer(net, plan, method, options);
  const VariableBasis& outer = reducer.level(0).basis;
  const std::size_t ns = outer.slow().size();
  if (omega.lo.size() != ns || omega.hi.size() != ns)
    throw ConfigError("slow domain needs one range per slow variable (" + std::to_string(ns) + ")");
  std::vector<std::string> names;
  for (const auto& v : outer.slow()) names.push_back(v.name);
  auto space = std::make_shared<StateSpace>(StateSpace::box(names, omega.lo, omega.hi));

  EffectiveGenerator eff;
  eff.slow_space = space;
  eff.method = method;
  eff.slow_reactions = slow_reactions(net, outer);
  std::vector<IntVector> delta;
  for (auto r : eff.slow_reactions) {
    eff.slow_reaction_names.push_back(net.reaction(r).name);
    IntVector d(ns);
    for (std::size_t j = 0; j < ns; ++j) d[j] = dot(outer.slow()[j].coefficients, net.reaction(r).stoichiometry);
    delta.push_back(std::move(d));
  }

  const std::size_t n = space->size();
  eff.propensities.assign(n, std::vector<double>(eff.slow_reactions.size(), 0.0));
  const unsigned workers = std::max(1u, options.workers);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto s = space->vector(i);
    const auto d = reducer.fiber(0, s);
    for (std::size_t k = 0; k < eff.slow_reactions.size(); ++k)
      eff.propensities[i][k] = effective_propensity(*d, net.reaction(eff.slow_reactions[k]));
  });

  std::vector<SparseGenerator::Entry> entries;
  IntVector target(ns);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = space->state(i);
    for (std::size_t k = 0; k < eff.slow_reactions.size(); ++k) {
      const double rate = eff.propensities[i][k];
      if (!(rate > 0.0)) continue;
      for (std::size_t j = 0; j < ns; ++j) target[j] = s[j] + delta[k][j];
      const std::size_t to = space->find(target);
      if (to != StateSpace::npos) entries.push_back({to, i, rate});
    }
  }
  eff.generator = SparseGenerator(space, n, entries);
  return eff;
}

EffectiveGenerator cma_effective_generator(const ReactionNetwork& net, const VariableBasis& basis,
                                           const SlowDomain& omega,
                                           std::vector<LinearBound> fiber_bounds,
                                           const EffectiveOptions& options) {
  return nested_effective_generator(net, ReductionPlan::single(basis, std::move(fiber_bounds)),
                                    Method::CMA, omega, options);
}

EffectiveGenerator qssa_effective_generator(const ReactionNetwork& net, const VariableBasis& basis,
                                            const std::vector<std::string>& fast_set,
                                            const SlowDomain& omega,
                                            std::vector<LinearBound> fiber_bounds,
                                            const EffectiveOptions& options) {
  ReductionPlan plan = ReductionPlan::single(basis, std::move(fiber_bounds));
  if (!fast_set.empty()) plan.levels.front().fast_reactions = fast_set;
  return nested_effective_generator(net, plan, Method::QSSA, omega, options);
}

Distribution reduced_fiber_distribution(const ReactionNetwork& net, const ReductionPlan& plan,
                                        Method method, const IntVector& slow_values,
                                        const EffectiveOptions& options) {
  Reducer reducer(net, plan, method, options);
  if (slow_values.size() != reducer.level(0).basis.slow().size())
    throw ConfigError("wrong number of slow values");
  return *reducer.fiber(0, slow_values);
}

void write_effective_generator_csv(std::ostream& os, const EffectiveGenerator& eff) {
  os << "s_from,s_to,rate,method\n";
  const auto& space = *eff.slow_space;
  for (const auto& e : eff.generator.entries()) {
    if (e.row == e.col) continue;
    os << tuple_text(space.vector(e.col), ';') << ',' << tuple_text(space.vector(e.row), ';') << ','
       << format_double(e.rate) << ',' << to_string(eff.method) << '\n';
  }
}

void write_effective_propensities_csv(std::ostream& os, const EffectiveGenerator& eff) {
  os << "s,reaction,alpha_eff\n";
  const auto& space = *eff.slow_space;
  for (std::size_t i = 0; i < space.size(); ++i)
    for (std::size_t k = 0; k < eff.slow_reactions.size(); ++k)
      os << tuple_text(space.vector(i), ';') << ',' << eff.slow_reaction_names[k] << ','
         << format_double(eff.propensities[i][k]) << '\n';
}

}  // namespace mscme
