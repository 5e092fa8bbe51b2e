#pragma once

#include <cstddef>
#include <vector>

#include "mscme/effective.hpp"
#include "mscme/generator.hpp"

namespace mscme {

/// Poisson(lambda) or Binomial(n, p), evaluated in log space.
struct AnalyticLaw {
  enum class Kind { Poisson, Binomial };
  Kind kind = Kind::Poisson;
  double lambda = 0.0;
  Count n = 0;
  double p = 0.0;

  static AnalyticLaw poisson(double lambda);
  static AnalyticLaw binomial(Count n, double p);

  double log_pmf(Count k) const;
  double pmf(Count k) const;
  double mean() const;
  /// Mode, the smallest one on ties (floor(lambda) for Poisson, or
  /// lambda - 1 when lambda is an integer).
  Count mode() const;
  /// pmf over the integers lo..hi.
  std::vector<double> table(Count lo, Count hi) const;
  /// Distribution over a one-dimensional space named `name`.
  Distribution distribution(const std::string& name, Count lo, Count hi) const;
};

/// Stationary intensity of S = X1 + X2 for the linear fast/slow system:
/// k1V (k2 + k3 + k4) / (k2 k3). The QSSA variant is k1V (k3 + k4) / (k2 k3).
/// Throws ConfigError for non-positive arguments.
double lin_marginal_intensity(double k1v, double k2, double k3, double k4,
                              Method method = Method::CMA);

/// Law of X2 on the fiber X1 + X2 = S: Binomial(S, k3/(k2+k3+k4)) under the
/// constrained dynamics, Binomial(S, k3/(k3+k4)) under the QSSA.
AnalyticLaw lin_fiber_law(Method method, Count s, double k2, double k3, double k4);

/// Stationary intensity of S1 = X1 + X2 + X3 for the three-timescale system:
/// (k1V / (k2 gamma kappa)) (gamma k2 + 3 gamma kappa + 2 k2 kappa).
double lin2_marginal_intensity(double k1v, double k2, double kappa, double gamma);

/// ||a - b||_2 / ||b||_2 with b the reference. Throws ConfigError when the
/// state spaces differ.
double relative_l2(const Distribution& a, const Distribution& b);
double relative_l2(const std::vector<double>& a, const std::vector<double>& b);

/// Mass of dist pushed forward through x -> coefficients . x, on the
/// contiguous range of attained values.
Distribution marginalize(const Distribution& dist, const IntVector& coefficients,
                         const std::string& name = "S");

/// Values lo..hi along a scalar space, zero outside the support of dist.
std::vector<double> align(const Distribution& dist, Count lo, Count hi);

struct Peak {
  Count position = 0;
  double height = 0.0;
};

/// Local maxima of a scalar distribution sorted by position. A maximum is a
/// plateau strictly higher than both neighbours (boundary plateaus do not
/// count), reported at its leftmost index. Maxima lower than
/// min_relative_height * max are ignored.
std::vector<Peak> peak_report(const Distribution& dist, double min_relative_height = 1e-10);

}  // namespace mscme
