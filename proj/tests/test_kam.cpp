#include <catch2/catch_amalgamated.hpp>

#include "kamtori/kam.hpp"
#include "kamtori/initial_torus.hpp"
#include "kamtori/models/pendulum.hpp"
#include "kamtori/models/tokamak.hpp"
#include "support/oracles.hpp"

using namespace kamtori;
using Catch::Approx;

namespace {

FrequencyVector rotor_freq(real omega) {
  FrequencyVector f;
  f.omega = {omega};
  f.alpha = {std::sqrt(3.0), (1.0 + std::sqrt(5.0)) / 2.0};
  return f;
}

}  // namespace

TEST_CASE("invariance error of flat tori", "[kam]") {
  PendulumModel rotor(0, 0, 0);
  GridShape shape({32, 8, 8});
  TorusEmbedding K = make_flat_embedding(1, 0, 2, {1}, {2.0}, rotor_freq(2.0), shape);
  CHECK(invariance_error(K, rotor) < 1e-14);

  // wrong frequency: |E| = |omega - p0| exactly
  TorusEmbedding Kw = make_flat_embedding(1, 0, 2, {1}, {2.0}, rotor_freq(1.7), shape);
  CHECK(invariance_error(Kw, rotor) == Approx(0.3).margin(1e-13));
}

TEST_CASE("newton right-hand side from frame duality", "[kam]") {
  // flat rotor frame: L = (1,0), N = (0,1). E = N gives eta^L = -N^T O0 N = 0
  // and eta^N = L^T O0 N = -1 with O0 = [[0,-1],[1,0]].
  const real L[2] = {1, 0}, N[2] = {0, 1}, E[2] = {0, 1};
  real etaL, etaN;
  newton_rhs(1, L, N, E, &etaL, &etaN);
  CHECK(etaL == Approx(0.0).margin(1e-15));
  CHECK(etaN == Approx(-1.0).margin(1e-15));
  // E = L gives eta^L = -N^T O0 L = -1, eta^N = L^T O0 L = 0
  const real EL[2] = {1, 0};
  newton_rhs(1, L, N, EL, &etaL, &etaN);
  CHECK(etaL == Approx(-1.0).margin(1e-15));
  CHECK(etaN == Approx(0.0).margin(1e-15));
}

TEST_CASE("triangular solve: trivial and constant cases", "[kam]") {
  GridShape shape({32, 16});
  FrequencyVector freq;
  freq.omega = {0.57981245427252670451};
  freq.alpha = {1.0};
  TorusGrid zero(shape), T(shape, -2.0);

  auto sol0 = newton_solve_n1(zero, zero, T, -2.0, freq);
  CHECK(sol0.xiL.max_abs() < 1e-15);
  CHECK(sol0.xiN.max_abs() < 1e-15);

  // eta^N = 0, eta^L = c: xi^N = c / <T> constant, xi^L = -R(T xi^N) = 0 for
  // constant T
  TorusGrid c(shape, 0.7);
  auto sol1 = newton_solve_n1(c, zero, T, -2.0, freq);
  for (std::size_t i = 0; i < sol1.xiN.size(); ++i)
    CHECK(sol1.xiN[i] == Approx(-0.35).margin(1e-14));
  CHECK(sol1.xiL.max_abs() < 1e-13);
}

TEST_CASE("triangular solve residual on random data", "[kam]") {
  std::mt19937_64 rng(33);
  GridShape shape({32, 32});
  FrequencyVector freq;
  freq.omega = {0.57981245427252670451};
  freq.alpha = {1.0};
  auto pl = oracles::random_trig_poly(rng, 2, 6, 10);
  auto pn = oracles::random_trig_poly(rng, 2, 6, 10);
  auto pt = oracles::random_trig_poly(rng, 2, 3, 4, 0.3);
  TorusGrid etaL = oracles::sample(pl, shape);
  TorusGrid etaN = oracles::sample(pn, shape);
  TorusGrid T = oracles::sample(pt, shape);
  real T_avg = T.mean();
  if (std::abs(T_avg) < 0.2) {
    for (std::size_t i = 0; i < T.size(); ++i) T[i] += 1.0;
    T_avg += 1.0;
  }
  auto sol = newton_solve_n1(etaL, etaN, T, T_avg, freq);

  // residuals of  Lie xi + Lambda xi = eta  after average projection
  real scale = std::max(etaL.max_abs(), etaN.max_abs());
  FourierSeries etaN_h = grid_to_fourier(etaN);
  const real etaN_avg = etaN_h.average();
  TorusGrid lxiN = fourier_to_grid(lie_derivative(grid_to_fourier(sol.xiN), freq));
  real worstN = 0;
  for (std::size_t i = 0; i < lxiN.size(); ++i)
    worstN = std::max(worstN, std::abs(lxiN[i] - (etaN[i] - etaN_avg)));
  CHECK(worstN < 1e-11 * scale);

  TorusGrid lxiL = fourier_to_grid(lie_derivative(grid_to_fourier(sol.xiL), freq));
  real worstL = 0;
  for (std::size_t i = 0; i < lxiL.size(); ++i) {
    const real rhs = etaL[i] - T[i] * sol.xiN[i];
    worstL = std::max(worstL, std::abs(lxiL[i] + sol.solvability - rhs));
  }
  // the constant discrepancy is the solvability defect, already subtracted
  CHECK(worstL < 1e-10 * scale);

  // gauge: <xi^L> = 0
  CHECK(std::abs(grid_to_fourier(sol.xiL).average()) < 1e-13 * scale);
}

TEST_CASE("newton step is the identity on an invariant flat torus", "[kam]") {
  PendulumModel rotor(0, 0, 0);
  TorusEmbedding K = make_flat_embedding(1, 0, 2, {1}, {2.0}, rotor_freq(2.0),
                                         GridShape({32, 8, 8}));
  NewtonOptions opt;
  auto row = newton_step_n1(K, rotor, opt);
  CHECK(row.corr < 1e-12);
  CHECK(invariance_error(K, rotor) < 1e-13);
}

TEST_CASE("one newton step contracts a manufactured perturbation quadratically", "[kam]") {
  TokamakModel m(0.0, 0.35);  // integrable: the flat torus is exact
  const real w0 = TokamakModel::profile_w(0.35);
  FrequencyVector freq;
  freq.omega = {w0};
  freq.alpha = {1.0};
  GridShape shape({64, 32});

  const real delta = 1e-4;
  real prev_post = std::numeric_limits<real>::infinity();
  for (real d : {delta, delta / 2}) {
    TorusEmbedding K = make_flat_embedding(1, 0, 1, {1}, {0.35}, freq, shape);
    TorusGrid bump(shape);
    for_each_node(shape, [&](std::size_t flat, const std::vector<real>& ang) {
      bump[flat] = d * std::cos(two_pi * (ang[0] + 2 * ang[1]));
    });
    K.Kp[1] += grid_to_fourier(bump);
    NewtonOptions opt;
    auto row = newton_step_n1(K, m, opt);
    CHECK(row.err > 0.1 * d);  // the perturbation is visible
    const real post = invariance_error(K, m);
    CHECK(post < 50.0 * d * d);  // quadratic contraction
    CHECK(post < prev_post);
    prev_post = post;
  }
}

TEST_CASE("newton iterate surfaces resonances", "[kam]") {
  TokamakModel m(0.004, 0.35);
  FrequencyVector freq;
  freq.omega = {0.5};  // rational: 2 omega - 1 = 0
  freq.alpha = {1.0};
  TorusEmbedding K = make_flat_embedding(1, 0, 1, {1}, {0.45}, freq, GridShape({32, 32}));
  NewtonOptions opt;
  opt.max_iter = 4;
  auto rep = newton_iterate(K, m, opt);
  CHECK(rep.status == NewtonStatus::no_twist);
  CHECK(rep.failure.find("resonance") != std::string::npos);
}

TEST_CASE("newton report CSV mirrors the four named stages", "[kam]") {
  PendulumModel rotor(0, 0, 0);
  TorusEmbedding K = make_flat_embedding(1, 0, 2, {1}, {2.0}, rotor_freq(2.0),
                                         GridShape({16, 4, 4}));
  NewtonOptions opt;
  opt.max_iter = 2;
  auto rep = newton_iterate(K, rotor, opt);
  CHECK(rep.status == NewtonStatus::converged);
  const std::string path = "newton_report_test.csv";
  rep.write_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("sec_frame") != std::string::npos);
  CHECK(header.find("sec_torsion") != std::string::npos);
  CHECK(header.find("sec_correction") != std::string::npos);
  CHECK(header.find("sec_update") != std::string::npos);
  CHECK(header.find("T_avg") != std::string::npos);
  std::string row;
  CHECK(std::getline(in, row).good());
  std::remove(path.c_str());
}
