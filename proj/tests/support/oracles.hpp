#pragma once

// Test-side oracles, independent of the library's spectral machinery:
// slow direct Fourier sums, finite differences, and the complete elliptic
// integral via the arithmetic-geometric mean.

#include <random>

#include "kamtori/fourier.hpp"

namespace oracles {

using kamtori::cplx;
using kamtori::real;

/// Complete elliptic integral of the first kind K(k), AGM iteration.
inline real elliptic_K(real k) {
  real a = 1.0, b = std::sqrt(1.0 - k * k);
  for (int i = 0; i < 64 && std::abs(a - b) > 1e-17; ++i) {
    const real an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return kamtori::pi / (2.0 * a);
}

/// Centered difference d/dx of a scalar callable.
template <class F>
inline real diff_central(F&& f, real x, real h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Direct O(N^2) Fourier coefficient of grid samples (any rank), as the
/// plain quadrature sum over nodes.
inline cplx direct_coefficient(const kamtori::TorusGrid& g, const std::vector<long>& k) {
  cplx acc{0, 0};
  kamtori::for_each_node(g.shape(), [&](std::size_t flat, const std::vector<real>& ang) {
    real phase = 0;
    for (std::size_t a = 0; a < ang.size(); ++a) phase += static_cast<real>(k[a]) * ang[a];
    acc += g[flat] * std::exp(cplx(0, -kamtori::two_pi * phase));
  });
  return acc / static_cast<real>(g.shape().total());
}

/// Random band-limited real field: trigonometric polynomial with |k_axis| <=
/// band, returned with the exact mode list for independent evaluation.
struct TrigPoly {
  struct Mode {
    std::vector<long> k;
    cplx c;  // coefficient of e^{2 pi i k.x}; the conjugate mode is implied
  };
  std::vector<Mode> modes;
  real constant = 0;

  real eval(const std::vector<real>& x) const {
    real s = constant;
    for (const auto& m : modes) {
      real phase = 0;
      for (std::size_t a = 0; a < x.size(); ++a) phase += static_cast<real>(m.k[a]) * x[a];
      s += 2.0 * (m.c * std::exp(cplx(0, kamtori::two_pi * phase))).real();
    }
    return s;
  }

  real eval_derivative(const std::vector<real>& x, std::size_t axis) const {
    real s = 0;
    for (const auto& m : modes) {
      real phase = 0;
      for (std::size_t a = 0; a < x.size(); ++a) phase += static_cast<real>(m.k[a]) * x[a];
      const cplx d = m.c * cplx(0, kamtori::two_pi * static_cast<real>(m.k[axis]));
      s += 2.0 * (d * std::exp(cplx(0, kamtori::two_pi * phase))).real();
    }
    return s;
  }
};

inline TrigPoly random_trig_poly(std::mt19937_64& rng, std::size_t rank, long band,
                                 std::size_t n_modes, real amplitude = 1.0,
                                 bool zero_average = false) {
  std::uniform_int_distribution<long> kd(-band, band);
  std::uniform_real_distribution<real> cd(-amplitude, amplitude);
  TrigPoly p;
  p.constant = zero_average ? 0.0 : cd(rng);
  while (p.modes.size() < n_modes) {
    TrigPoly::Mode m;
    m.k.resize(rank);
    bool zero = true;
    for (auto& ki : m.k) {
      ki = kd(rng);
      if (ki != 0) zero = false;
    }
    if (zero) continue;
    m.c = cplx(cd(rng), cd(rng));
    p.modes.push_back(std::move(m));
  }
  return p;
}

inline kamtori::TorusGrid sample(const TrigPoly& p, const kamtori::GridShape& shape) {
  kamtori::TorusGrid g(shape);
  kamtori::for_each_node(shape, [&](std::size_t flat, const std::vector<real>& ang) {
    g[flat] = p.eval(ang);
  });
  return g;
}

}  // namespace oracles
