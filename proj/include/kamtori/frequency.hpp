#pragma once

#include <cmath>
#include <functional>
#include <optional>

#include "kamtori/core.hpp"

namespace kamtori {

/// Divisors below this magnitude are treated as exact resonances.
inline constexpr real resonance_floor = 1e-300;

/// Internal and external frequencies in unit-torus normalization (cycles per
/// unit time), with Diophantine diagnostics attached by diophantine_estimate.
struct FrequencyVector {
  std::vector<real> omega;  // internal, dimension n
  std::vector<real> alpha;  // external, dimension ell
  real tau = 0.0;
  real gamma_estimate = 0.0;

  std::size_t n() const { return omega.size(); }
  std::size_t ell() const { return alpha.size(); }
  std::size_t dim() const { return omega.size() + alpha.size(); }

  /// k1.omega + k2.alpha for the concatenated wave vector.
  real divisor(const std::vector<long>& k) const {
    real s = 0;
    for (std::size_t i = 0; i < omega.size(); ++i) s += static_cast<real>(k[i]) * omega[i];
    for (std::size_t j = 0; j < alpha.size(); ++j)
      s += static_cast<real>(k[omega.size() + j]) * alpha[j];
    return s;
  }
};

struct ResonanceInfo {
  std::vector<long> k;
  real divisor = 0;
};

/// gamma = min |k.(omega,alpha)| * |k|_1^tau over 0 < |k|_1 <= k_max, by
/// exhaustive enumeration. Stores the result in freq.gamma_estimate and
/// reports an exact resonance through `resonance` when one is found.
inline real diophantine_estimate(FrequencyVector& freq, real tau, long k_max,
                                 std::optional<ResonanceInfo>* resonance = nullptr) {
  if (k_max < 1) throw config_error("diophantine_estimate: k_max must be >= 1");
  const std::size_t d = freq.dim();
  std::vector<long> k(d, 0);
  real gamma = std::numeric_limits<real>::infinity();
  std::optional<ResonanceInfo> found;

  // enumerate k with |k|_1 <= k_max, first nonzero component positive
  std::function<void(std::size_t, long)> rec = [&](std::size_t axis, long budget) {
    if (axis == d) {
      long norm1 = 0;
      for (long x : k) norm1 += std::labs(x);
      if (norm1 == 0) return;
      // skip -k duplicates
      for (long x : k) {
        if (x > 0) break;
        if (x < 0) return;
      }
      const real div = std::abs(freq.divisor(k));
      if (div < resonance_floor) {
        if (!found) found = ResonanceInfo{k, div};
        gamma = 0.0;
        return;
      }
      const real val = div * std::pow(static_cast<real>(norm1), tau);
      gamma = std::min(gamma, val);
      return;
    }
    for (long x = -budget; x <= budget; ++x) {
      k[axis] = x;
      rec(axis + 1, budget - std::labs(x));
    }
    k[axis] = 0;
  };
  rec(0, k_max);

  freq.tau = tau;
  freq.gamma_estimate = (gamma == std::numeric_limits<real>::infinity()) ? 0.0 : gamma;
  if (resonance) *resonance = found;
  return freq.gamma_estimate;
}

struct ContinuedFraction {
  std::vector<long> quotients;
  bool truncated = false;  // expansion ended before the requested depth
};

inline ContinuedFraction continued_fraction(real x, std::size_t depth) {
  ContinuedFraction cf;
  real r = x;
  for (std::size_t i = 0; i < depth; ++i) {
    real a = std::floor(r);
    cf.quotients.push_back(static_cast<long>(a));
    real frac = r - a;
    // rational within working precision: no further quotients are meaningful
    if (frac < 1e-14 * std::max<real>(1.0, std::abs(x)) || frac > 1.0 - 1e-14) {
      cf.truncated = true;
      break;
    }
    r = 1.0 / frac;
    if (!std::isfinite(r) || r > 1e15) {
      cf.truncated = true;
      break;
    }
  }
  return cf;
}

struct CfRefineResult {
  real value = 0;
  bool truncation_warning = false;
  std::vector<long> quotients;
};

/// Keep the first `depth` partial quotients of x and replace the remainder of
/// the expansion with all ones (golden tail).
inline CfRefineResult refine_frequency_cf(real x, std::size_t depth) {
  if (depth == 0) throw config_error("refine_frequency_cf: depth must be >= 1");
  const real golden = (1.0 + std::sqrt(5.0)) / 2.0;
  ContinuedFraction cf = continued_fraction(x, depth);
  real v = golden;  // value of the all-ones tail
  for (std::size_t i = cf.quotients.size(); i-- > 1;)
    v = static_cast<real>(cf.quotients[i]) + 1.0 / v;
  const real value = static_cast<real>(cf.quotients[0]) + 1.0 / v;
  return {value, cf.truncated, cf.quotients};
}

}  // namespace kamtori
