#include <catch2/catch_amalgamated.hpp>

#include "kamtori/continuation.hpp"
#include "kamtori/initial_torus.hpp"
#include "kamtori/models/pendulum.hpp"
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

/// x-independent coupling: the flat torus stays exactly invariant for all eps.
class DriftModel final : public HamiltonianModel {
 public:
  std::string name() const override { return "drift"; }
  std::size_t n1() const override { return 1; }
  std::size_t n2() const override { return 0; }
  std::size_t ell() const override { return 2; }
  std::vector<real> external_frequency() const override {
    return {std::sqrt(3.0), (1.0 + std::sqrt(5.0)) / 2.0};
  }
  real value(std::span<const real> z, std::span<const real> phi) const override {
    return 0.5 * z[1] * z[1] - eps_ * std::cos(two_pi * phi[0]);
  }
  void gradient(std::span<const real> z, std::span<const real>,
                std::span<real> out) const override {
    out[0] = 0.0;
    out[1] = z[1];
  }
  void hessian(std::span<const real>, std::span<const real>, std::span<real> out) const override {
    out[0] = out[1] = out[2] = 0.0;
    out[3] = 1.0;
  }
  std::vector<std::string> param_names() const override { return {"eps"}; }
  real param(const std::string&) const override { return eps_; }
  void set_param(const std::string&, real v) override { eps_ = v; }
  void param_gradient(const std::string&, std::span<const real>, std::span<const real>,
                      std::span<real> out) const override {
    out[0] = out[1] = 0.0;
  }

 private:
  real eps_ = 0;
};

}  // namespace

TEST_CASE("predictor is the identity when the parameter does not act", "[continuation]") {
  DriftModel m;
  TorusEmbedding K = make_flat_embedding(1, 0, 2, {1}, {2.0}, rotor_freq(2.0),
                                         GridShape({32, 8, 8}));
  TorusEmbedding P = predictor(K, m, {{"eps", 1.0}}, 0.1);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < P.Kp[c].size(); ++i)
      CHECK(std::abs(P.Kp[c][i] - K.Kp[c][i]) < 1e-15);
}

TEST_CASE("predictor closed form for the rotor in eps1", "[continuation]") {
  // dH/deps1 = cos(2 pi x) on the flat rotor: the triangular system has the
  // hand solution xi^N = -cos(2 pi theta)/omega, xi^L = -sin(2 pi theta)/(2 pi omega^2)
  PendulumModel rotor(0, 0, 0);
  const real omega = 2.0, deps = 1e-3;
  GridShape shape({64, 8, 8});
  TorusEmbedding K = make_flat_embedding(1, 0, 2, {1}, {omega}, rotor_freq(omega), shape);
  real etaN_avg = 0;
  TorusEmbedding P = predictor(K, rotor, {{"eps1", 1.0}}, deps, &etaN_avg);
  CHECK(etaN_avg < 1e-13);

  TorusGrid dX = fourier_to_grid(P.Kp[0]);
  TorusGrid dY = fourier_to_grid(P.Kp[1]);
  real worst = 0;
  for_each_node(shape, [&](std::size_t flat, const std::vector<real>& ang) {
    const real ex = -deps * std::sin(two_pi * ang[0]) / (two_pi * omega * omega);
    const real ey = omega - deps * std::cos(two_pi * ang[0]) / omega;
    worst = std::max({worst, std::abs(dX[flat] - ex), std::abs(dY[flat] - ey)});
  });
  CHECK(worst < 1e-12);
}

TEST_CASE("eta_eps^N has zero average (derivative of a periodic function)",
          "[continuation]") {
  PendulumModel pend(1.0, 0.0, 0.0);
  TorusEmbedding K = build_initial_torus_autonomous(pend, {0.0, 2.0}, 128, {8, 8}, false);
  real etaN_avg = 0;
  predictor(K, pend, {{"eps2", 1.0}, {"eps3", 0.3}}, 1e-3, &etaN_avg);
  // relative to the eta scale (O(2 pi))
  CHECK(etaN_avg < 1e-10 * two_pi);
}

TEST_CASE("predictor error scales quadratically in the step", "[continuation]") {
  PendulumModel rotor(0, 0, 0);
  TorusEmbedding K = make_flat_embedding(1, 0, 2, {1}, {2.0}, rotor_freq(2.0),
                                         GridShape({64, 16, 16}));
  auto post_error = [&](real deps) {
    TorusEmbedding P = predictor(K, rotor, {{"eps2", 1.0}}, deps);
    PendulumModel target(0, deps, 0);
    return invariance_error(P, target);
  };
  const real e1 = post_error(0.02), e2 = post_error(0.01);
  const real ratio = e1 / e2;
  CHECK(ratio > 2.5);
  CHECK(ratio < 6.0);
}

TEST_CASE("continuation along an exactly flat family needs no corrections",
          "[continuation]") {
  DriftModel m;
  TorusEmbedding K = make_flat_embedding(1, 0, 2, {1}, {2.0}, rotor_freq(2.0),
                                         GridShape({16, 8, 8}));
  ContinuationOptions opt;
  opt.deps = 0.05;
  opt.newton.tol = 1e-12;
  opt.newton.max_iter = 5;
  opt.newton.max_sizes = {32, 16, 16};
  FamilyRecord rec = continue_family(K, m, {{"eps", 0.2}}, opt);
  CHECK_FALSE(rec.breakdown);
  REQUIRE(rec.entries.size() == 4);
  for (const auto& e : rec.entries) {
    CHECK(e.err < 1e-13);
    CHECK(e.iterations == 1);  // converged at the first evaluation
  }
  CHECK(m.param("eps") == Approx(0.2).margin(1e-12));
}

TEST_CASE("small coupled continuation of the rotor family", "[continuation]") {
  PendulumModel m(0, 0, 0);
  TorusEmbedding K = make_flat_embedding(1, 0, 2, {1}, {2.0}, rotor_freq(2.0),
                                         GridShape({32, 16, 16}));
  ContinuationOptions opt;
  opt.deps = 0.01;
  opt.newton.tol = 1e-11;
  opt.newton.max_iter = 12;
  opt.newton.max_sizes = {128, 64, 64};
  FamilyRecord rec = continue_family(K, m, {{"eps2", 0.02}, {"eps3", 0.02}}, opt);
  CHECK_FALSE(rec.breakdown);
  REQUIRE_FALSE(rec.entries.empty());
  for (std::size_t i = 1; i < rec.entries.size(); ++i)
    CHECK(rec.entries[i].path_value > rec.entries[i - 1].path_value);
  CHECK(rec.entries.back().err < 1e-11);
  CHECK(m.param("eps2") == Approx(0.02).margin(1e-12));
}

TEST_CASE("blow-up fit recovers synthetic power-law data", "[continuation]") {
  const real eps_c = 0.0044615, slope = -2.35;
  std::vector<real> eps, norms;
  for (real e = 0.004; e <= 0.00442; e += 2e-5) {
    eps.push_back(e);
    norms.push_back(0.7 * std::pow(eps_c - e, slope));
  }
  REQUIRE(eps.size() >= 8);
  BlowupFit fit = blowup_fit(eps, norms, eps.back() + 1e-6, eps.back() + 5e-4, 1e-6);
  CHECK(fit.reliable);
  CHECK(std::abs(fit.correlation) > 0.999);
  CHECK(fit.eps_c == Approx(eps_c).margin(5e-7));       // 4 digits
  CHECK(fit.slope == Approx(slope).epsilon(5e-3));      // 2 digits
}

TEST_CASE("blow-up fit flags constant-norm families", "[continuation]") {
  std::vector<real> eps, norms;
  for (int i = 0; i < 12; ++i) {
    eps.push_back(0.004 + 1e-5 * i);
    norms.push_back(1.0);
  }
  BlowupFit fit = blowup_fit(eps, norms, eps.back() + 1e-6, eps.back() + 1e-4);
  CHECK_FALSE(fit.reliable);
}

TEST_CASE("spectral diagnostics", "[continuation]") {
  GridShape shape({64, 32});
  FrequencyVector freq;
  freq.omega = {0.6180339887};
  freq.alpha = {1.0};

  SECTION("single mode: slope undefined") {
    TorusEmbedding K = make_flat_embedding(1, 0, 1, {1}, {0.0}, freq, shape);
    TorusGrid g(shape);
    for_each_node(shape, [&](std::size_t flat, const std::vector<real>& ang) {
      g[flat] = std::cos(two_pi * ang[0]);
    });
    K.Kp[0] = grid_to_fourier(g);
    auto d = spectral_diagnostics(K);
    CHECK_FALSE(d.slope_defined);
  }

  SECTION("geometric decay rho^k recovers log rho") {
    const real rho = 0.55;
    TorusEmbedding K = make_flat_embedding(1, 0, 1, {1}, {0.0}, freq, shape);
    TorusGrid g(shape);
    for_each_node(shape, [&](std::size_t flat, const std::vector<real>& ang) {
      real s = 0;
      for (long k = 1; k <= 20; ++k)
        s += std::pow(rho, static_cast<real>(k)) * std::cos(two_pi * static_cast<real>(k) * ang[0]);
      g[flat] = s;
    });
    K.Kp[0] = grid_to_fourier(g);
    auto d = spectral_diagnostics(K);
    REQUIRE(d.slope_defined);
    CHECK(d.decay_slope == Approx(std::log(rho)).margin(1e-3));
  }
}
