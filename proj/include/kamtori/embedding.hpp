#pragma once

#include <map>

#include "kamtori/spectral.hpp"

namespace kamtori {

/// Parameterization K(theta,phi) = [D theta; 0] + K_p(theta,phi) of an
/// n-torus family over the external angles. The periodic part is stored
/// spectrally; grids are synthesized on demand.
struct TorusEmbedding {
  std::size_t n1 = 0, n2 = 0, ell = 0;
  std::vector<long> degree;        // winding matrix, n1 components x n axes, row-major
  std::vector<FourierSeries> Kp;   // 2n periodic components (x block then y block)
  FrequencyVector freq;
  std::map<std::string, real> params;

  std::size_t n() const { return n1 + n2; }
  const GridShape& shape() const { return Kp.at(0).shape(); }

  /// Winding of angle component `comp` around internal axis `axis`.
  long degree_entry(std::size_t comp, std::size_t axis) const {
    return degree[comp * n() + axis];
  }

  /// Full component on the grid: periodic part plus the degree-map winding
  /// for the first n1 angle components.
  TorusGrid component_grid(std::size_t c) const {
    TorusGrid g = fourier_to_grid(Kp[c]);
    if (c < n1) {
      for_each_node(shape(), [&](std::size_t flat, const std::vector<real>& ang) {
        real lin = 0;
        for (std::size_t j = 0; j < n(); ++j)
          lin += static_cast<real>(degree_entry(c, j)) * ang[j];
        g[flat] += lin;
      });
    }
    return g;
  }

  void resample_to(const GridShape& target) {
    for (auto& f : Kp) f = resample(f, target);
  }

  void clean_spectra(real threshold) {
    for (auto& f : Kp) clean(f, threshold);
  }

  /// sqrt(sum_c ||Kp_c||_r^2): the Sobolev size of the periodic part.
  real sobolev_size(real r) const {
    real acc = 0;
    for (const auto& f : Kp) {
      const real s = sobolev_norm(f, r);
      acc += s * s;
    }
    return std::sqrt(acc);
  }

  real max_tail_fraction() const {
    TailPower tp;
    for (const auto& f : Kp) tp.accumulate(f);
    real worst = 0;
    for (real x : tp.fractions()) worst = std::max(worst, x);
    return worst;
  }
};

/// Flat embedding K = (D theta, y0) at the given resolution.
inline TorusEmbedding make_flat_embedding(std::size_t n1, std::size_t n2, std::size_t ell,
                                          const std::vector<long>& degree,
                                          const std::vector<real>& y0,
                                          FrequencyVector freq, GridShape shape) {
  TorusEmbedding K;
  K.n1 = n1;
  K.n2 = n2;
  K.ell = ell;
  K.degree = degree;
  K.freq = std::move(freq);
  const std::size_t n = n1 + n2;
  K.Kp.assign(2 * n, FourierSeries(shape));
  for (std::size_t i = 0; i < n; ++i) K.Kp[n + i][0] = cplx(y0[i], 0);
  return K;
}

}  // namespace kamtori
