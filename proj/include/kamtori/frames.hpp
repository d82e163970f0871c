#pragma once

#include "kamtori/embedding.hpp"
#include "kamtori/model.hpp"

namespace kamtori {

/// Small dense helpers for the pointwise frame algebra (n is 1 or 2 for the
/// bundled models; anything up to the stack cap works).
namespace smallmat {

inline constexpr std::size_t cap = 4;  // max n

/// invert an m x m matrix in place of `out`; Gaussian elimination with
/// partial pivoting, closed forms for m = 1, 2. Throws on conditioning
/// worse than ~1e13.
inline void invert(std::size_t m, const real* a, real* out) {
  if (m == 1) {
    if (std::abs(a[0]) < 1e-13 * std::max<real>(1.0, std::abs(a[0])) || a[0] == 0.0)
      throw numerical_error("singular 1x1 matrix");
    out[0] = 1.0 / a[0];
    return;
  }
  if (m == 2) {
    const real det = a[0] * a[3] - a[1] * a[2];
    real scale = std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2]), std::abs(a[3])});
    if (std::abs(det) < 1e-13 * scale * scale) throw numerical_error("ill-conditioned 2x2 matrix");
    const real inv = 1.0 / det;
    out[0] = a[3] * inv;
    out[1] = -a[1] * inv;
    out[2] = -a[2] * inv;
    out[3] = a[0] * inv;
    return;
  }
  real w[2 * cap * cap];
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      w[i * 2 * m + j] = a[i * m + j];
      w[i * 2 * m + m + j] = (i == j) ? 1.0 : 0.0;
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r)
      if (std::abs(w[r * 2 * m + c]) > std::abs(w[piv * 2 * m + c])) piv = r;
    if (std::abs(w[piv * 2 * m + c]) < 1e-13)
      throw numerical_error("ill-conditioned small matrix");
    if (piv != c)
      for (std::size_t j = 0; j < 2 * m; ++j) std::swap(w[c * 2 * m + j], w[piv * 2 * m + j]);
    const real d = w[c * 2 * m + c];
    for (std::size_t j = 0; j < 2 * m; ++j) w[c * 2 * m + j] /= d;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == c) continue;
      const real f = w[r * 2 * m + c];
      for (std::size_t j = 0; j < 2 * m; ++j) w[r * 2 * m + j] -= f * w[c * 2 * m + j];
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = w[i * 2 * m + m + j];
}

}  // namespace smallmat

/// Pointwise canonical Case III frame at one node. All arrays are row-major;
/// L and N are 2n x n, hess and th are 2n x 2n, B and T are n x n.
struct FramePoint {
  /// B = (L^T L)^{-1} (metric G = I), N = Omega0 L B, A = 0.
  static void normal(std::size_t n, const real* L, real* B, real* N) {
    real g[smallmat::cap * smallmat::cap];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        real s = 0;
        for (std::size_t r = 0; r < 2 * n; ++r) s += L[r * n + i] * L[r * n + j];
        g[i * n + j] = s;
      }
    smallmat::invert(n, g, B);
    // N = Omega0 L B: top block <- -(L_bottom B), bottom block <- L_top B
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < n; ++j) {
        real s_top = 0, s_bot = 0;
        for (std::size_t c = 0; c < n; ++c) {
          s_top += -L[(n + r) * n + c] * B[c * n + j];
          s_bot += L[r * n + c] * B[c * n + j];
        }
        N[r * n + j] = s_top;
        N[(n + r) * n + j] = s_bot;
      }
  }

  /// T_H = Omega0 DzZ - DzZ Omega0 = Hess + Omega0 Hess Omega0, blockwise
  /// [[A - D, B + C], [C + B, D - A]] for Hess = [[A,B],[C,D]].
  static void th_from_hessian(std::size_t n, const real* hess, real* th) {
    const std::size_t d = 2 * n;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const real A = hess[i * d + j];
        const real Bv = hess[i * d + n + j];
        const real C = hess[(n + i) * d + j];
        const real D = hess[(n + i) * d + n + j];
        th[i * d + j] = A - D;
        th[i * d + n + j] = Bv + C;
        th[(n + i) * d + j] = C + Bv;
        th[(n + i) * d + n + j] = D - A;
      }
  }

  /// T = N^T TH N.
  static void torsion(std::size_t n, const real* N, const real* th, real* T) {
    const std::size_t d = 2 * n;
    real tmp[2 * smallmat::cap * smallmat::cap];  // TH N, 2n x n
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        real s = 0;
        for (std::size_t r = 0; r < d; ++r) s += th[i * d + r] * N[r * n + j];
        tmp[i * n + j] = s;
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        real s = 0;
        for (std::size_t r = 0; r < d; ++r) s += N[r * n + i] * tmp[r * n + j];
        T[i * n + j] = s;
      }
  }

  /// Verification route in terms of the Hamiltonian: T = B L^T S_H L B with
  /// S_H = -TH. (The two routes coincide algebraically in the canonical case.)
  static void torsion_hamiltonian(std::size_t n, const real* L, const real* B,
                                  const real* hess, real* T) {
    const std::size_t d = 2 * n;
    real th[4 * smallmat::cap * smallmat::cap];
    th_from_hessian(n, hess, th);
    real sh[4 * smallmat::cap * smallmat::cap];
    for (std::size_t i = 0; i < d * d; ++i) sh[i] = -th[i];
    real shl[2 * smallmat::cap * smallmat::cap];  // S_H L
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        real s = 0;
        for (std::size_t r = 0; r < d; ++r) s += sh[i * d + r] * L[r * n + j];
        shl[i * n + j] = s;
      }
    real core[smallmat::cap * smallmat::cap];  // L^T S_H L
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        real s = 0;
        for (std::size_t r = 0; r < d; ++r) s += L[r * n + i] * shl[r * n + j];
        core[i * n + j] = s;
      }
    real tmp[smallmat::cap * smallmat::cap];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        real s = 0;
        for (std::size_t r = 0; r < n; ++r) s += B[i * n + r] * core[r * n + j];
        tmp[i * n + j] = s;
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        real s = 0;
        for (std::size_t r = 0; r < n; ++r) s += tmp[i * n + r] * B[r * n + j];
        T[i * n + j] = s;
      }
  }
};

/// Adapted frame fields over the grid plus the averaged torsion.
struct AdaptedFrame {
  std::size_t n = 0;
  std::vector<TorusGrid> L;  // 2n x n fields
  std::vector<TorusGrid> N;  // 2n x n fields
  std::vector<TorusGrid> T;  // n x n fields
  std::vector<real> T_avg, T_avg_inv;  // n x n
};

/// L = D_theta K = [D; 0] + D_theta K_p, by spectral differentiation along
/// the internal axes.
inline std::vector<TorusGrid> tangent_frame(const TorusEmbedding& K) {
  const std::size_t n = K.n();
  std::vector<TorusGrid> L;
  L.reserve(2 * n * n);
  for (std::size_t c = 0; c < 2 * n; ++c)
    for (std::size_t a = 0; a < n; ++a) {
      TorusGrid g = fourier_to_grid(differentiate(K.Kp[c], a));
      if (c < K.n1) {
        const real d = static_cast<real>(K.degree_entry(c, a));
        if (d != 0)
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += d;
      }
      L.push_back(std::move(g));
    }
  return L;
}

/// Full frame (B, N) and both torsion routes on the grid.
inline AdaptedFrame build_frame(const TorusEmbedding& K, const HamiltonianModel& model) {
  const std::size_t n = K.n(), d = 2 * n;
  AdaptedFrame F;
  F.n = n;
  F.L = tangent_frame(K);
  F.N.assign(d * n, TorusGrid(K.shape()));
  F.T.assign(n * n, TorusGrid(K.shape()));

  std::vector<TorusGrid> Kg;
  Kg.reserve(d);
  for (std::size_t c = 0; c < d; ++c) Kg.push_back(K.component_grid(c));

  real Lp[2 * smallmat::cap * smallmat::cap], Bp[smallmat::cap * smallmat::cap];
  real Np[2 * smallmat::cap * smallmat::cap], Tp[smallmat::cap * smallmat::cap];
  real z[2 * smallmat::cap], hess[4 * smallmat::cap * smallmat::cap];
  real th[4 * smallmat::cap * smallmat::cap];
  std::vector<real> Tsum(n * n, 0.0);

  for_each_node(K.shape(), [&](std::size_t flat, const std::vector<real>& ang) {
    for (std::size_t c = 0; c < d; ++c) z[c] = Kg[c][flat];
    for (std::size_t i = 0; i < d * n; ++i) Lp[i] = F.L[i][flat];
    FramePoint::normal(n, Lp, Bp, Np);
    model.hessian(std::span<const real>(z, d),
                  std::span<const real>(ang.data() + n, K.ell), std::span<real>(hess, d * d));
    FramePoint::th_from_hessian(n, hess, th);
    FramePoint::torsion(n, Np, th, Tp);
    for (std::size_t i = 0; i < d * n; ++i) F.N[i][flat] = Np[i];
    for (std::size_t i = 0; i < n * n; ++i) {
      F.T[i][flat] = Tp[i];
      Tsum[i] += Tp[i];
    }
  });

  const real inv_total = 1.0 / static_cast<real>(K.shape().total());
  F.T_avg.resize(n * n);
  for (std::size_t i = 0; i < n * n; ++i) F.T_avg[i] = Tsum[i] * inv_total;
  F.T_avg_inv.resize(n * n);
  try {
    smallmat::invert(n, F.T_avg.data(), F.T_avg_inv.data());
  } catch (const numerical_error&) {
    throw numerical_error("torsion average is singular: twist condition fails");
  }
  return F;
}

/// max over the grid of max|L^T Omega0 L| entries (fiberwise Lagrangian
/// character of the torus).
inline real lagrangian_defect(const TorusEmbedding& K, const std::vector<TorusGrid>& L) {
  const std::size_t n = K.n();
  real worst = 0;
  const std::size_t total = K.shape().total();
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        // (L^T Omega0 L)_{ij} = sum_r L_bottom[r,i] L_top[r,j] - L_top[r,i] L_bottom[r,j]
        real s = 0;
        for (std::size_t r = 0; r < n; ++r)
          s += L[(n + r) * n + i][flat] * L[r * n + j][flat] -
               L[r * n + i][flat] * L[(n + r) * n + j][flat];
        worst = std::max(worst, std::abs(s));
      }
  }
  return worst;
}

/// max over the grid of max|P^T Omega0 P - Omega0| for P = (L N).
inline real symplectic_defect(const TorusEmbedding& K, const AdaptedFrame& F) {
  const std::size_t n = K.n(), d = 2 * n;
  real worst = 0;
  const std::size_t total = K.shape().total();
  std::vector<const TorusGrid*> P(d * d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      P[r * d + j] = &F.L[r * n + j];
      P[r * d + n + j] = &F.N[r * n + j];
    }
  }
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        real s = 0;  // (P^T Omega0 P)_{ij} = sum_r P[n+r,i] P[r,j] - P[r,i] P[n+r,j]
        for (std::size_t r = 0; r < n; ++r)
          s += (*P[(n + r) * d + i])[flat] * (*P[r * d + j])[flat] -
               (*P[r * d + i])[flat] * (*P[(n + r) * d + j])[flat];
        real ref = 0;  // Omega0_{ij}
        if (i < n && j >= n && j - n == i) ref = -1;
        if (i >= n && j < n && i - n == j) ref = 1;
        worst = std::max(worst, std::abs(s - ref));
      }
  }
  return worst;
}

}  // namespace kamtori
