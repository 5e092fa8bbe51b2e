#include "mscme/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mscme/error.hpp"

namespace mscme {

AnalyticLaw AnalyticLaw::poisson(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("Poisson intensity must be positive");
  AnalyticLaw a;
  a.kind = Kind::Poisson;
  a.lambda = lambda;
  return a;
}

AnalyticLaw AnalyticLaw::binomial(Count n, double p) {
  if (n < 0) throw ConfigError("binomial size must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("binomial probability must lie in [0, 1]");
  AnalyticLaw a;
  a.kind = Kind::Binomial;
  a.n = n;
  a.p = p;
  return a;
}

double AnalyticLaw::log_pmf(Count k) const {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (k < 0) return kNegInf;
  const double kd = static_cast<double>(k);
  if (kind == Kind::Poisson) return kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0);
  if (k > n) return kNegInf;
  const double nd = static_cast<double>(n);
  // 0 * log(0) = 0 at the degenerate ends.
  const double a = k == 0 ? 0.0 : kd * std::log(p);
  const double b = k == n ? 0.0 : (nd - kd) * std::log1p(-p);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) + a + b;
}

double AnalyticLaw::pmf(Count k) const { return std::exp(log_pmf(k)); }

double AnalyticLaw::mean() const { return kind == Kind::Poisson ? lambda : static_cast<double>(n) * p; }

Count AnalyticLaw::mode() const {
  if (kind == Kind::Poisson) {
    const double f = std::floor(lambda);
    return static_cast<Count>(f == lambda ? f - 1.0 : f);
  }
  const double m = (static_cast<double>(n) + 1.0) * p;
  const double f = std::floor(m);
  if (f == m && m > 0.0) return static_cast<Count>(f - 1.0);
  return std::min<Count>(n, static_cast<Count>(f));
}

std::vector<double> AnalyticLaw::table(Count lo, Count hi) const {
  std::vector<double> out;
  for (Count k = lo; k <= hi; ++k) out.push_back(pmf(k));
  return out;
}

Distribution AnalyticLaw::distribution(const std::string& name, Count lo, Count hi) const {
  auto space = std::make_shared<StateSpace>(StateSpace::box({name}, {lo}, {hi}));
  return {space, table(lo, hi)};
}

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
}

}  // namespace

double lin_marginal_intensity(double k1v, double k2, double k3, double k4, Method method) {
  require_positive(k1v, "k1V");
  require_positive(k2, "k2");
  require_positive(k3, "k3");
  require_positive(k4, "k4");
  const double num = method == Method::CMA ? k2 + k3 + k4 : k3 + k4;
  return k1v * num / (k2 * k3);
}

AnalyticLaw lin_fiber_law(Method method, Count s, double k2, double k3, double k4) {
  require_positive(k2, "k2");
  require_positive(k3, "k3");
  require_positive(k4, "k4");
  const double p = method == Method::CMA ? k3 / (k2 + k3 + k4) : k3 / (k3 + k4);
  return AnalyticLaw::binomial(s, p);
}

double lin2_marginal_intensity(double k1v, double k2, double kappa, double gamma) {
  require_positive(k1v, "k1V");
  require_positive(k2, "k2");
  require_positive(kappa, "kappa");
  require_positive(gamma, "gamma");
  return k1v / (k2 * gamma * kappa) * (gamma * k2 + 3.0 * gamma * kappa + 2.0 * k2 * kappa);
}

double relative_l2(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ConfigError("vectors have different lengths");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  if (!(den > 0.0)) throw ConfigError("reference vector is zero");
  return std::sqrt(num / den);
}

std::vector<double> align(const Distribution& dist, Count lo, Count hi) {
  if (dist.space->dimension() != 1) throw ConfigError("align needs a scalar distribution");
  std::vector<double> out(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (std::size_t i = 0; i < dist.space->size(); ++i) {
    const Count v = dist.space->state(i)[0];
    if (v >= lo && v <= hi) out[static_cast<std::size_t>(v - lo)] += dist.probabilities[i];
  }
  return out;
}

double relative_l2(const Distribution& a, const Distribution& b) {
  const auto& sa = *a.space;
  const auto& sb = *b.space;
  if (sa.species() != sb.species())
    throw ConfigError("distributions are over different variables");
  if (sa.dimension() == 1) {
    // Scalar supports may differ in range; compare on the union.
    const Count lo = std::min(sa.state(0)[0], sb.state(0)[0]);
    const Count hi = std::max(sa.state(sa.size() - 1)[0], sb.state(sb.size() - 1)[0]);
    return relative_l2(align(a, lo, hi), align(b, lo, hi));
  }
  if (sa.size() != sb.size()) throw ConfigError("distributions have different supports");
  for (std::size_t i = 0; i < sa.size(); ++i)
    if (!std::equal(sa.state(i).begin(), sa.state(i).end(), sb.state(i).begin()))
      throw ConfigError("distributions have different supports");
  return relative_l2(a.probabilities, b.probabilities);
}

Distribution marginalize(const Distribution& dist, const IntVector& coefficients, const std::string& name) {
  const auto& space = *dist.space;
  if (coefficients.size() != space.dimension()) throw ConfigError("marginal variable has wrong dimension");
  Count lo = std::numeric_limits<Count>::max(), hi = std::numeric_limits<Count>::min();
  std::vector<Count> values(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    values[i] = dot(coefficients, space.state(i));
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
  }
  std::vector<double> p(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i)
    p[static_cast<std::size_t>(values[i] - lo)] += dist.probabilities[i];
  auto out = std::make_shared<StateSpace>(StateSpace::box({name}, {lo}, {hi}));
  return {out, std::move(p)};
}

std::vector<Peak> peak_report(const Distribution& dist, double min_relative_height) {
  const auto& space = *dist.space;
  if (space.dimension() != 1) throw ConfigError("peak report needs a scalar distribution");
  const auto& p = dist.probabilities;
  const std::size_t n = p.size();
  std::vector<Peak> out;
  if (n < 3) return out;
  const double floor = min_relative_height * *std::max_element(p.begin(), p.end());
  std::size_t i = 1;
  while (i + 1 < n) {
    // Plateau [i, j).
    std::size_t j = i + 1;
    while (j < n && p[j] == p[i]) ++j;
    if (j < n && p[i] > p[i - 1] && p[i] > p[j] && p[i] >= floor)
      out.push_back({space.state(i)[0], p[i]});
    i = j;
  }
  return out;
}

}  // namespace mscme
