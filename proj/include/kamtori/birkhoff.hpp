#pragma once

#include "kamtori/core.hpp"

namespace kamtori {

/// Bump weight w(s) = exp(-1/(s(1-s))) on (0,1), zero at the endpoints.
inline real birkhoff_weight(real s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return std::exp(-1.0 / (s * (1.0 - s)));
}

struct BirkhoffResult {
  real value = 0;
  real convergence = 0;  // |full - half-sample estimate|
};

/// Weighted Birkhoff average of a sampled observable, midpoint-weighted so
/// both endpoints carry zero weight.
inline BirkhoffResult weighted_birkhoff(std::span<const real> samples) {
  const std::size_t n = samples.size();
  if (n < 16) throw config_error("weighted_birkhoff: too few samples");
  auto avg = [&](std::size_t m) {
    real num = 0, den = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const real s = (static_cast<real>(j) + 0.5) / static_cast<real>(m);
      const real w = birkhoff_weight(s);
      num += w * samples[j];
      den += w;
    }
    return num / den;
  };
  const real full = avg(n), half = avg(n / 2);
  return {full, std::abs(full - half)};
}

/// Rotation number (in cycles per iterate) of a lifted angle sequence via the
/// weighted Birkhoff average of first differences. Non-convergence is
/// reported through `convergence`; the caller decides what to do with it.
inline BirkhoffResult birkhoff_frequency(std::span<const real> lifted_angles) {
  const std::size_t n = lifted_angles.size();
  if (n < 100) throw config_error("birkhoff_frequency: need at least 100 samples");
  std::vector<real> d(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    d[j] = lifted_angles[j + 1] - lifted_angles[j];
  }
  return weighted_birkhoff(d);
}

/// Fourier coefficients c_k (|k| <= kcut) of a periodic observable sampled
/// along a quasi-periodic orbit with known rotation number: the weighted
/// Birkhoff average of u_j e^{-2 pi i k j omega}. Superconvergent on
/// Diophantine orbits.
inline std::vector<cplx> birkhoff_fourier(std::span<const real> u, real omega, long kcut) {
  const std::size_t n = u.size();
  std::vector<cplx> c(2 * kcut + 1, cplx{0, 0});
  std::vector<real> w(n);
  real den = 0;
  for (std::size_t j = 0; j < n; ++j) {
    w[j] = birkhoff_weight((static_cast<real>(j) + 0.5) / static_cast<real>(n));
    den += w[j];
  }
  // running fractional phase keeps j*omega accurate for large j
  std::vector<real> theta(n);
  real th = 0;
  for (std::size_t j = 0; j < n; ++j) {
    theta[j] = th;
    th += omega;
    th -= std::floor(th);
  }
  for (long k = -kcut; k <= kcut; ++k) {
    cplx acc{0, 0};
    for (std::size_t j = 0; j < n; ++j) {
      const real a = -two_pi * static_cast<real>(k) * theta[j];
      acc += w[j] * u[j] * cplx(std::cos(a), std::sin(a));
    }
    c[static_cast<std::size_t>(k + kcut)] = acc / den;
  }
  return c;
}

}  // namespace kamtori
