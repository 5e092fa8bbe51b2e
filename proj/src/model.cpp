#include "mscme/model.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "mscme/error.hpp"

namespace mscme {

namespace {

using Matrix = std::vector<IntVector>;

// Fraction-free Gaussian elimination; exact for integer input.
Count bareiss_determinant(Matrix a) {
  const std::size_t n = a.size();
  if (n == 0) return 1;
  Count sign = 1;
  Count prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a[k][k] == 0) {
      std::size_t p = k + 1;
      while (p < n && a[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(a[k], a[p]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        const __int128 v = static_cast<__int128>(a[i][j]) * a[k][k] -
                           static_cast<__int128>(a[i][k]) * a[k][j];
        a[i][j] = static_cast<Count>(v / prev);
      }
    }
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

Matrix adjugate(const Matrix& a) {
  const std::size_t n = a.size();
  Matrix adj(n, IntVector(n, 0));
  if (n == 1) {
    adj[0][0] = 1;
    return adj;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Matrix minor;
      minor.reserve(n - 1);
      for (std::size_t r = 0; r < n; ++r) {
        if (r == i) continue;
        IntVector row;
        row.reserve(n - 1);
        for (std::size_t c = 0; c < n; ++c)
          if (c != j) row.push_back(a[r][c]);
        minor.push_back(std::move(row));
      }
      const Count cof = ((i + j) % 2 == 0 ? 1 : -1) * bareiss_determinant(std::move(minor));
      adj[j][i] = cof;  // transpose of the cofactor matrix
    }
  }
  return adj;
}

Count falling(Count x, Count m) {
  Count v = 1;
  for (Count k = 0; k < m; ++k) v *= (x - k);
  return v;
}

}  // namespace

Count Reaction::order() const {
  Count o = 0;
  for (const auto& t : reactants) o += t.count;
  return o;
}

double Reaction::propensity(std::span<const Count> x) const {
  for (const auto& g : guards)
    if (x[g.species] < g.min_count) return 0.0;
  double a = rate;
  for (const auto& t : reactants) {
    const Count xs = x[t.species];
    if (xs < t.count) return 0.0;
    a *= static_cast<double>(falling(xs, t.count));
    if (t.count == 2 && halve_homodimer) a *= 0.5;
  }
  return a;
}

bool Reaction::same_propensity_form(const Reaction& other) const {
  return reactants == other.reactants && guards == other.guards &&
         halve_homodimer == other.halve_homodimer;
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species, double volume,
                                 std::vector<Reaction> reactions)
    : species_(std::move(species)), volume_(volume), reactions_(std::move(reactions)) {
  std::set<std::string> seen;
  for (const auto& s : species_) {
    if (s.empty()) throw ConfigError("empty species name");
    if (!seen.insert(s).second) throw ConfigError("duplicate species '" + s + "'");
  }
  if (!(volume_ > 0.0)) throw ConfigError("volume must be positive");
  std::set<std::string> names;
  const std::size_t n = species_.size();
  for (auto& r : reactions_) {
    if (!names.insert(r.name).second)
      throw ConfigError("duplicate reaction name '" + r.name + "'");
    if (!(r.rate > 0.0)) throw ConfigError("reaction " + r.name + ": rate must be positive");
    if (r.stoichiometry.size() != n)
      throw ConfigError("reaction " + r.name + ": stoichiometry has wrong length");
    for (const auto& t : r.reactants)
      if (t.species >= n || t.count <= 0)
        throw ConfigError("reaction " + r.name + ": bad reactant term");
    for (const auto& g : r.guards)
      if (g.species >= n) throw ConfigError("reaction " + r.name + ": bad guard");
    if (r.order() > 2)
      throw ConfigError("reaction " + r.name + ": order above 2 is not mass action here");
    if (std::all_of(r.stoichiometry.begin(), r.stoichiometry.end(),
                    [](Count c) { return c == 0; }))
      throw ConfigError("reaction " + r.name + ": null stoichiometric vector");
    std::sort(r.reactants.begin(), r.reactants.end(),
              [](const Term& a, const Term& b) { return a.species < b.species; });
    std::sort(r.guards.begin(), r.guards.end(),
              [](const Guard& a, const Guard& b) { return a.species < b.species; });
  }
}

std::size_t ReactionNetwork::species_index(const std::string& name) const {
  auto it = std::find(species_.begin(), species_.end(), name);
  if (it == species_.end()) throw ConfigError("unknown species '" + name + "'");
  return static_cast<std::size_t>(it - species_.begin());
}

std::size_t ReactionNetwork::reaction_index(const std::string& name) const {
  for (std::size_t i = 0; i < reactions_.size(); ++i)
    if (reactions_[i].name == name) return i;
  throw ConfigError("unknown reaction '" + name + "'");
}

double ReactionNetwork::propensities(std::span<const Count> x, std::span<double> out) const {
  double total = 0.0;
  for (std::size_t i = 0; i < reactions_.size(); ++i) {
    out[i] = reactions_[i].propensity(x);
    total += out[i];
  }
  return total;
}

ReactionNetwork ReactionNetwork::subset(std::span<const std::size_t> indices) const {
  std::vector<Reaction> rs;
  rs.reserve(indices.size());
  for (auto i : indices) rs.push_back(reactions_.at(i));
  return ReactionNetwork(species_, volume_, std::move(rs));
}

std::string ReactionNetwork::describe(std::size_t i) const {
  const auto& r = reactions_.at(i);
  std::ostringstream os;
  auto side = [&](const std::vector<Term>& terms) {
    if (terms.empty()) {
      os << "0";
      return;
    }
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (k) os << " + ";
      if (terms[k].count != 1) os << terms[k].count << "*";
      os << species_[terms[k].species];
    }
  };
  os << r.name << ": ";
  side(r.reactants);
  // Products implied by the stoichiometry; undefined when aphysical.
  std::vector<Term> products;
  bool physical = true;
  for (std::size_t s = 0; s < species_.size(); ++s) {
    Count c = r.stoichiometry[s];
    for (const auto& t : r.reactants)
      if (t.species == s) c += t.count;
    if (c < 0) physical = false;
    if (c > 0) products.push_back({s, c});
  }
  os << " -> ";
  if (physical) {
    side(products);
  } else {
    os << "[";
    for (std::size_t s = 0; s < species_.size(); ++s) os << (s ? "," : "") << r.stoichiometry[s];
    os << "]";
  }
  os << " @ " << r.rate;
  for (const auto& g : r.guards) os << " if " << species_[g.species] << ">=" << g.min_count;
  return os.str();
}

Propensities propensities(const ReactionNetwork& net, std::span<const Count> x) {
  Propensities p;
  p.values.resize(net.size());
  p.total = net.propensities(x, p.values);
  return p;
}

Count dot(std::span<const Count> a, std::span<const Count> b) {
  Count s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

VariableBasis::VariableBasis(std::vector<Variable> slow, std::vector<Variable> fast)
    : slow_(std::move(slow)), fast_(std::move(fast)) {
  const std::size_t rows = slow_.size() + fast_.size();
  if (rows == 0) throw ConfigError("empty variable basis");
  dimension_ = !slow_.empty() ? slow_.front().coefficients.size()
                              : fast_.front().coefficients.size();
  Matrix b;
  std::set<std::string> names;
  for (const auto* group : {&slow_, &fast_}) {
    for (const auto& v : *group) {
      if (v.coefficients.size() != dimension_)
        throw ConfigError("variable " + v.name + " has wrong number of coefficients");
      if (!names.insert(v.name).second)
        throw ConfigError("duplicate variable name '" + v.name + "'");
      b.push_back(v.coefficients);
    }
  }
  if (rows != dimension_)
    throw ConfigError("slow+fast variables (" + std::to_string(rows) +
                      ") do not form a basis of " + std::to_string(dimension_) + " species");
  determinant_ = bareiss_determinant(b);
  if (determinant_ == 0) throw ConfigError("variable basis is rank deficient");
  adjugate_ = adjugate(b);

  // projector = adj * diag(0..0,1..1) * B / det
  const std::size_t ns = slow_.size();
  projector_.assign(dimension_, IntVector(dimension_, 0));
  for (std::size_t i = 0; i < dimension_; ++i) {
    for (std::size_t j = 0; j < dimension_; ++j) {
      __int128 acc = 0;
      for (std::size_t k = ns; k < dimension_; ++k)
        acc += static_cast<__int128>(adjugate_[i][k]) * b[k][j];
      if (acc % determinant_ != 0)
        throw ConfigError("variable basis yields a fractional stoichiometric projector");
      projector_[i][j] = static_cast<Count>(acc / determinant_);
    }
  }
}

int VariableBasis::find(const std::string& name) const {
  int k = 0;
  for (const auto* group : {&slow_, &fast_})
    for (const auto& v : *group) {
      if (v.name == name) return k;
      ++k;
    }
  return -1;
}

IntVector VariableBasis::project(std::span<const Count> nu) const {
  IntVector out(dimension_, 0);
  for (std::size_t i = 0; i < dimension_; ++i) out[i] = dot(projector_[i], nu);
  return out;
}

IntVector VariableBasis::slow_values(std::span<const Count> x) const {
  IntVector v;
  v.reserve(slow_.size());
  for (const auto& s : slow_) v.push_back(dot(s.coefficients, x));
  return v;
}

IntVector VariableBasis::fast_values(std::span<const Count> x) const {
  IntVector v;
  v.reserve(fast_.size());
  for (const auto& f : fast_) v.push_back(dot(f.coefficients, x));
  return v;
}

StateVector VariableBasis::compose(std::span<const Count> slow, std::span<const Count> fast) const {
  if (slow.size() != slow_.size() || fast.size() != fast_.size())
    throw ConfigError("wrong number of slow/fast values");
  IntVector coords(slow.begin(), slow.end());
  coords.insert(coords.end(), fast.begin(), fast.end());
  StateVector x(dimension_, 0);
  for (std::size_t i = 0; i < dimension_; ++i) {
    __int128 acc = 0;
    for (std::size_t k = 0; k < dimension_; ++k)
      acc += static_cast<__int128>(adjugate_[i][k]) * coords[k];
    if (acc % determinant_ != 0)
      throw ConfigError("slow/fast values do not correspond to an integer state");
    x[i] = static_cast<Count>(acc / determinant_);
  }
  return x;
}

std::pair<IntVector, IntVector> evaluate_variables(const VariableBasis& basis,
                                                   std::span<const Count> x) {
  return {basis.slow_values(x), basis.fast_values(x)};
}

IntVector project_stoichiometry(const VariableBasis& basis, std::span<const Count> nu) {
  return basis.project(nu);
}

ReactionNetwork derive_constrained_subsystem(const ReactionNetwork& net,
                                             const VariableBasis& basis,
                                             bool merge_duplicates) {
  if (basis.dimension() != net.dimension())
    throw ConfigError("basis dimension does not match the network");
  std::vector<Reaction> out;
  for (const auto& r : net.reactions()) {
    IntVector nu = basis.project(r.stoichiometry);
    if (std::all_of(nu.begin(), nu.end(), [](Count c) { return c == 0; })) continue;
    Reaction p = r;
    p.stoichiometry = nu;
    for (std::size_t s = 0; s < nu.size(); ++s) {
      if (nu[s] >= 0) continue;
      const Count needed = -nu[s];
      Count have = 0;
      for (const auto& t : p.reactants)
        if (t.species == s) have = t.count;
      if (have >= needed) continue;  // propensity already vanishes below `needed`
      auto g = std::find_if(p.guards.begin(), p.guards.end(),
                            [s](const Guard& x) { return x.species == s; });
      if (g == p.guards.end())
        p.guards.push_back({s, needed});
      else
        g->min_count = std::max(g->min_count, needed);
    }
    std::sort(p.guards.begin(), p.guards.end(),
              [](const Guard& a, const Guard& b) { return a.species < b.species; });
    if (merge_duplicates) {
      auto twin = std::find_if(out.begin(), out.end(), [&](const Reaction& q) {
        return q.stoichiometry == p.stoichiometry && q.same_propensity_form(p);
      });
      if (twin != out.end()) {
        twin->rate += p.rate;
        twin->name += "+" + p.name;
        continue;
      }
    }
    out.push_back(std::move(p));
  }
  return ReactionNetwork(net.species(), net.volume(), std::move(out));
}

}  // namespace mscme
