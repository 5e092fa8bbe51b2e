#include "mscme/parser.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "mscme/error.hpp"

namespace mscme {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

Count parse_integer(std::string_view s, int line, const char* what) {
  s = trim(s);
  Count v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(line, std::string("expected integer ") + what + ", got '" +
                               std::string(s) + "'");
  return v;
}

double parse_real(std::string_view s, int line, const char* what) {
  s = trim(s);
  const std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size())
    throw ParseError(line, std::string("expected number for ") + what + ", got '" + buf + "'");
  return v;
}

std::size_t species_at(const std::vector<std::string>& species, std::string_view name, int line) {
  for (std::size_t i = 0; i < species.size(); ++i)
    if (species[i] == name) return i;
  throw ParseError(line, "unknown species '" + std::string(name) + "'");
}

// `0` or `a*X + Y + 2*Z`
IntVector parse_terms(std::string_view text, const std::vector<std::string>& species, int line) {
  IntVector counts(species.size(), 0);
  text = trim(text);
  if (text == "0" || text == "∅") return counts;
  if (text.empty()) throw ParseError(line, "empty reaction side (use 0)");
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t plus = text.find('+', start);
    std::string_view term = trim(text.substr(start, plus == std::string_view::npos
                                                        ? std::string_view::npos
                                                        : plus - start));
    if (term.empty()) throw ParseError(line, "empty term in '" + std::string(text) + "'");
    Count coef = 1;
    std::string_view name = term;
    if (auto star = term.find('*'); star != std::string_view::npos) {
      coef = parse_integer(term.substr(0, star), line, "coefficient");
      name = trim(term.substr(star + 1));
      if (coef <= 0) throw ParseError(line, "coefficients must be positive");
    }
    counts[species_at(species, name, line)] += coef;
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return counts;
}

}  // namespace

IntVector parse_linear_combination(std::string_view text, const std::vector<std::string>& species,
                                   int line) {
  IntVector coef(species.size(), 0);
  text = trim(text);
  if (text.empty()) throw ParseError(line, "empty linear combination");
  std::size_t i = 0;
  bool first = true;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    Count sign = 1;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      sign = text[i] == '-' ? -1 : 1;
      ++i;
    } else if (!first) {
      throw ParseError(line, "expected + or - in '" + std::string(text) + "'");
    }
    std::size_t j = i;
    while (j < text.size() && text[j] != '+' && text[j] != '-') ++j;
    std::string_view term = trim(text.substr(i, j - i));
    if (term.empty()) throw ParseError(line, "empty term in '" + std::string(text) + "'");
    Count c = 1;
    std::string_view name = term;
    if (auto star = term.find('*'); star != std::string_view::npos) {
      c = parse_integer(term.substr(0, star), line, "coefficient");
      name = trim(term.substr(star + 1));
    }
    coef[species_at(species, name, line)] += sign * c;
    first = false;
    i = j;
  }
  return coef;
}

std::vector<LinearBound> NetworkDescription::species_domains() const {
  std::vector<LinearBound> out;
  for (const auto& d : domains) {
    for (const auto& s : network.species())
      if (s == d.name) out.push_back(d);
  }
  return out;
}

std::optional<LinearBound> NetworkDescription::domain_of(const std::string& name) const {
  for (auto it = domains.rbegin(); it != domains.rend(); ++it)
    if (it->name == name) return *it;
  return std::nullopt;
}

NetworkDescription parse_network(std::string_view text) {
  std::vector<std::string> species;
  bool have_species = false;
  double volume = 1.0;
  std::vector<Reaction> reactions;
  std::vector<std::pair<Variable, int>> slow, fast;
  struct PendingDomain {
    std::string name;
    Count lo, hi;
    int line;
  };
  std::vector<PendingDomain> pending;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    auto sp = s.find_first_of(" \t");
    std::string_view keyword = s.substr(0, sp);
    std::string_view rest = sp == std::string_view::npos ? std::string_view{} : trim(s.substr(sp));

    if (keyword == "species") {
      if (have_species) throw ParseError(line, "species declared twice");
      for (auto tok : split_ws(rest)) {
        if (!is_identifier(tok)) throw ParseError(line, "bad species name '" + std::string(tok) + "'");
        for (const auto& e : species)
          if (e == tok) throw ParseError(line, "duplicate species '" + std::string(tok) + "'");
        species.emplace_back(tok);
      }
      have_species = true;
      continue;
    }
    if (keyword == "volume") {
      volume = parse_real(rest, line, "volume");
      if (!(volume > 0.0)) throw ParseError(line, "volume must be positive");
      continue;
    }
    if (!have_species) throw ParseError(line, "'species' must be declared first");

    if (keyword == "reaction") {
      auto colon = rest.find(':');
      auto arrow = rest.find("->");
      auto at = rest.rfind('@');
      if (colon == std::string_view::npos || arrow == std::string_view::npos ||
          at == std::string_view::npos || !(colon < arrow && arrow < at))
        throw ParseError(line, "expected 'reaction <name>: <reactants> -> <products> @ <rate>'");
      std::string_view name = trim(rest.substr(0, colon));
      if (!is_identifier(name)) throw ParseError(line, "bad reaction name '" + std::string(name) + "'");
      for (const auto& r : reactions)
        if (r.name == name) throw ParseError(line, "duplicate reaction '" + std::string(name) + "'");
      IntVector lhs = parse_terms(rest.substr(colon + 1, arrow - colon - 1), species, line);
      IntVector rhs = parse_terms(rest.substr(arrow + 2, at - arrow - 2), species, line);
      Reaction r;
      r.name = std::string(name);
      // Optional trailing `halved`: 2X propensity rate * X(X-1)/2.
      std::string_view rate_text = trim(rest.substr(at + 1));
      if (const auto sp = rate_text.find_first_of(" \t"); sp != std::string_view::npos) {
        if (trim(rate_text.substr(sp)) != "halved")
          throw ParseError(line, "unexpected text after rate");
        r.halve_homodimer = true;
        rate_text = rate_text.substr(0, sp);
      }
      r.rate = parse_real(rate_text, line, "rate");
      if (!(r.rate > 0.0)) throw ParseError(line, "rate must be positive");
      r.stoichiometry.resize(species.size());
      bool null = true;
      for (std::size_t i = 0; i < species.size(); ++i) {
        if (lhs[i] > 0) r.reactants.push_back({i, lhs[i]});
        r.stoichiometry[i] = rhs[i] - lhs[i];
        if (r.stoichiometry[i] != 0) null = false;
      }
      if (r.order() > 2) throw ParseError(line, "reactions of order above 2 are not supported");
      if (null) throw ParseError(line, "reaction has null stoichiometry");
      reactions.push_back(std::move(r));
      continue;
    }
    if (keyword == "slow" || keyword == "fast") {
      auto eq = rest.find('=');
      if (eq == std::string_view::npos) throw ParseError(line, "expected '<name> = <combination>'");
      std::string_view name = trim(rest.substr(0, eq));
      if (!is_identifier(name)) throw ParseError(line, "bad variable name '" + std::string(name) + "'");
      Variable v{std::string(name), parse_linear_combination(rest.substr(eq + 1), species, line)};
      (keyword == "slow" ? slow : fast).emplace_back(std::move(v), line);
      continue;
    }
    if (keyword == "domain") {
      auto toks = split_ws(rest);
      if (toks.size() != 3 || toks[1] != "in")
        throw ParseError(line, "expected 'domain <name> in <lo>..<hi>'");
      auto dots = toks[2].find("..");
      if (dots == std::string_view::npos) throw ParseError(line, "expected <lo>..<hi>");
      Count lo = parse_integer(toks[2].substr(0, dots), line, "lower bound");
      Count hi = parse_integer(toks[2].substr(dots + 2), line, "upper bound");
      if (lo > hi) throw ParseError(line, "empty domain range");
      pending.push_back({std::string(toks[0]), lo, hi, line});
      continue;
    }
    throw ParseError(line, "unknown keyword '" + std::string(keyword) + "'");
  }
  if (!have_species) throw ParseError(line, "no species declared");

  NetworkDescription desc;
  desc.network = ReactionNetwork(species, volume, std::move(reactions));
  if (!slow.empty() || !fast.empty()) {
    std::vector<Variable> sv, fv;
    for (auto& [v, l] : slow) sv.push_back(v);
    for (auto& [v, l] : fast) fv.push_back(v);
    try {
      desc.basis = VariableBasis(std::move(sv), std::move(fv));
    } catch (const ConfigError& e) {
      const int l = !fast.empty() ? fast.back().second : slow.back().second;
      throw ParseError(l, e.what());
    }
  }
  for (const auto& p : pending) {
    LinearBound b;
    b.name = p.name;
    b.lo = p.lo;
    b.hi = p.hi;
    b.coefficients.assign(species.size(), 0);
    bool found = false;
    for (std::size_t i = 0; i < species.size(); ++i)
      if (species[i] == p.name) {
        b.coefficients[i] = 1;
        found = true;
      }
    if (!found) {
      for (const auto& group : {slow, fast})
        for (const auto& [v, l] : group)
          if (v.name == p.name) {
            b.coefficients = v.coefficients;
            found = true;
          }
    }
    if (!found) throw ParseError(p.line, "domain refers to unknown name '" + p.name + "'");
    desc.domains.push_back(std::move(b));
  }
  return desc;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

NetworkDescription load_network(const std::string& path) {
  return parse_network(read_text_file(path));
}

}  // namespace mscme
