#include <catch2/catch_amalgamated.hpp>

#include "kamtori/frames.hpp"
#include "kamtori/models/pendulum.hpp"
#include "kamtori/models/tokamak.hpp"
#include "support/oracles.hpp"

using namespace kamtori;
using Catch::Approx;

namespace {

TorusEmbedding flat_rotor(GridShape shape) {
  FrequencyVector freq;
  freq.omega = {2.0};
  freq.alpha = {std::sqrt(3.0), (1.0 + std::sqrt(5.0)) / 2.0};
  return make_flat_embedding(1, 0, 2, {1}, {2.0}, freq, std::move(shape));
}

/// Random ell = 1 embedding for the tokamak model (not invariant, just smooth).
TorusEmbedding random_embedding(std::mt19937_64& rng, real amplitude) {
  GridShape shape({32, 32});
  FrequencyVector freq;
  freq.omega = {0.57981245427252670451};
  freq.alpha = {1.0};
  TorusEmbedding K = make_flat_embedding(1, 0, 1, {1}, {0.35}, freq, shape);
  auto px = oracles::random_trig_poly(rng, 2, 4, 6, amplitude, true);
  auto py = oracles::random_trig_poly(rng, 2, 4, 6, amplitude, true);
  K.Kp[0] = grid_to_fourier(oracles::sample(px, shape));
  K.Kp[1] = grid_to_fourier(oracles::sample(py, shape));
  K.Kp[1][0] += cplx(0.35, 0);
  return K;
}

}  // namespace

TEST_CASE("flat rotor frame: L, B, N, T, P", "[geometry]") {
  PendulumModel rotor(0, 0, 0);
  TorusEmbedding K = flat_rotor(GridShape({16, 8, 8}));
  AdaptedFrame F = build_frame(K, rotor);

  for (std::size_t i = 0; i < K.shape().total(); ++i) {
    CHECK(F.L[0][i] == Approx(1.0).margin(1e-14));  // L = (1, 0)^T
    CHECK(F.L[1][i] == Approx(0.0).margin(1e-14));
    CHECK(F.N[0][i] == Approx(0.0).margin(1e-14));  // N = (0, 1)^T
    CHECK(F.N[1][i] == Approx(1.0).margin(1e-14));
    CHECK(F.T[0][i] == Approx(1.0).margin(1e-13));  // T = 1 for H = p^2/2
  }
  CHECK(F.T_avg[0] == Approx(1.0).margin(1e-14));
  CHECK(F.T_avg_inv[0] == Approx(1.0).margin(1e-14));
  CHECK(symplectic_defect(K, F) < 1e-13);
  CHECK(lagrangian_defect(K, F.L) < 1e-14);
}

TEST_CASE("librational circle embedding: duality and defects", "[geometry]") {
  // K_p = (cos, sin)(2 pi theta) / (2 pi), degree 0: a closed curve
  GridShape shape({64, 8});
  FrequencyVector freq;
  freq.omega = {0.8472130847939979};
  freq.alpha = {1.0};
  TorusEmbedding K = make_flat_embedding(1, 0, 1, {0}, {0.0}, freq, shape);
  TorusGrid gx(shape), gy(shape);
  for_each_node(shape, [&](std::size_t flat, const std::vector<real>& ang) {
    gx[flat] = std::cos(two_pi * ang[0]) / two_pi;
    gy[flat] = std::sin(two_pi * ang[0]) / two_pi;
  });
  K.Kp[0] = grid_to_fourier(gx);
  K.Kp[1] = grid_to_fourier(gy);

  auto L = tangent_frame(K);
  // N^T Omega0 L = +1 with Omega0 = [[0,-1],[1,0]] (the sign is fixed by the
  // convention Z = Omega0^{-1} grad H)
  real Bp, Np[2], Lp[2];
  real worst = 0;
  for (std::size_t i = 0; i < shape.total(); ++i) {
    Lp[0] = L[0][i];
    Lp[1] = L[1][i];
    FramePoint::normal(1, Lp, &Bp, Np);
    const real duality = -Np[0] * Lp[1] + Np[1] * Lp[0];  // N^T Omega0 L
    worst = std::max(worst, std::abs(duality - 1.0));
  }
  CHECK(worst < 1e-12);
  CHECK(lagrangian_defect(K, L) < 1e-14);  // scalar L^T Omega0 L vanishes
}

TEST_CASE("torsion: two routes agree pointwise (matrix identity, any n)", "[geometry]") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<real> d(-1, 1);
  for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
    const std::size_t dd = 2 * n;
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<real> L(dd * n), hess(dd * dd), B(n * n), N(dd * n);
      for (auto& x : L) x = d(rng);
      for (std::size_t i = 0; i < dd; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          const real v = d(rng);
          hess[i * dd + j] = hess[j * dd + i] = v;
        }
      try {
        FramePoint::normal(n, L.data(), B.data(), N.data());
      } catch (const numerical_error&) {
        continue;  // rank-deficient draw
      }
      std::vector<real> th(dd * dd), T1(n * n), T2(n * n);
      FramePoint::th_from_hessian(n, hess.data(), th.data());
      FramePoint::torsion(n, N.data(), th.data(), T1.data());
      FramePoint::torsion_hamiltonian(n, L.data(), B.data(), hess.data(), T2.data());
      real scale = 0, diff = 0;
      for (std::size_t i = 0; i < n * n; ++i) {
        scale = std::max(scale, std::abs(T1[i]));
        diff = std::max(diff, std::abs(T1[i] - T2[i]));
      }
      CHECK(diff <= 1e-10 * std::max<real>(scale, 1.0));
    }
  }
}

TEST_CASE("torsion routes agree on random tokamak embeddings", "[geometry]") {
  std::mt19937_64 rng(17);
  TokamakModel model(0.004, 0.35);
  for (int rep = 0; rep < 3; ++rep) {
    TorusEmbedding K = random_embedding(rng, 0.02);
    AdaptedFrame F = build_frame(K, model);
    auto L = F.L;
    real worst = 0, scale = 0;
    std::vector<real> z(2), hess(4);
    real Lp[2], Bp, T2;
    std::vector<TorusGrid> Kg{K.component_grid(0), K.component_grid(1)};
    for_each_node(K.shape(), [&](std::size_t flat, const std::vector<real>& ang) {
      z[0] = Kg[0][flat];
      z[1] = Kg[1][flat];
      model.hessian(z, std::span<const real>(ang.data() + 1, 1), hess);
      Lp[0] = L[0][flat];
      Lp[1] = L[1][flat];
      real Np[2];
      FramePoint::normal(1, Lp, &Bp, Np);
      FramePoint::torsion_hamiltonian(1, Lp, &Bp, hess.data(), &T2);
      scale = std::max(scale, std::abs(F.T[0][flat]));
      worst = std::max(worst, std::abs(F.T[0][flat] - T2));
    });
    CHECK(worst <= 1e-10 * std::max<real>(scale, 1.0));
  }
}

TEST_CASE("averaged torsion inverse and twist failure", "[geometry]") {
  std::mt19937_64 rng(19);
  TokamakModel model(0.004, 0.35);
  TorusEmbedding K = random_embedding(rng, 0.02);
  AdaptedFrame F = build_frame(K, model);
  CHECK(F.T_avg[0] * F.T_avg_inv[0] == Approx(1.0).margin(1e-12));
}

TEST_CASE("lagrangian defect is positive for a genuinely twisted n = 2 frame",
          "[geometry]") {
  // fabricate an n = 2 embedding whose x components mix the two angles
  GridShape shape({8, 8, 4});
  FrequencyVector freq;
  freq.omega = {0.32, 0.57};
  freq.alpha = {1.0};
  TorusEmbedding K;
  K.n1 = 2;
  K.n2 = 0;
  K.ell = 1;
  K.degree = {1, 0, 0, 1};
  K.freq = freq;
  K.Kp.assign(4, FourierSeries(shape));
  std::mt19937_64 rng(23);
  for (std::size_t c = 0; c < 4; ++c) {
    auto p = oracles::random_trig_poly(rng, 3, 2, 5, 0.05, true);
    K.Kp[c] = grid_to_fourier(oracles::sample(p, shape));
  }
  auto L = tangent_frame(K);
  CHECK(lagrangian_defect(K, L) > 1e-6);

  // flat n = 2 torus is exactly Lagrangian
  TorusEmbedding F2 = make_flat_embedding(2, 0, 1, {1, 0, 0, 1}, {0.1, 0.2}, freq, shape);
  CHECK(lagrangian_defect(F2, tangent_frame(F2)) < 1e-14);
}
