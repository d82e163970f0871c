#include <catch2/catch_amalgamated.hpp>

#include "kamtori/models/pendulum.hpp"
#include "kamtori/models/tokamak.hpp"
#include "support/oracles.hpp"

using namespace kamtori;
using Catch::Approx;

namespace {

/// Centered finite differences of H in each z coordinate.
std::vector<real> fd_gradient(const HamiltonianModel& m, std::vector<real> z,
                              const std::vector<real>& phi, real h = 1e-6) {
  std::vector<real> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    g[i] = (m.value(zp, phi) - m.value(zm, phi)) / (2 * h);
  }
  return g;
}

std::vector<real> fd_hessian(const HamiltonianModel& m, std::vector<real> z,
                             const std::vector<real>& phi, real h = 1e-5) {
  const std::size_t d = z.size();
  std::vector<real> out(d * d);
  for (std::size_t j = 0; j < d; ++j) {
    auto zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    std::vector<real> gp(d), gm(d);
    m.gradient(zp, phi, gp);
    m.gradient(zm, phi, gm);
    for (std::size_t i = 0; i < d; ++i) out[i * d + j] = (gp[i] - gm[i]) / (2 * h);
  }
  return out;
}

}  // namespace

TEST_CASE("tokamak profile", "[models]") {
  CHECK(TokamakModel::profile(0.0).first == Approx(1.0).margin(1e-15));
  auto [q, w] = TokamakModel::profile(0.35);
  CHECK(q == Approx(4.0 / 2.347125).epsilon(1e-14));
  CHECK(w == Approx(0.58678125).margin(1e-15));
  CHECK_THROWS_AS(TokamakModel::profile(2.0), numerical_error);
}

TEST_CASE("gradients match finite differences", "[models]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<real> ud(0.0, 1.0);

  TokamakModel tok(0.004, 0.35);
  PendulumModel pend(1.0, 0.3, 0.1);
  const HamiltonianModel* models[] = {&tok, &pend};
  for (const auto* m : models) {
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<real> z{ud(rng), 0.2 + 0.4 * ud(rng)};
      std::vector<real> phi(m->ell());
      for (auto& p : phi) p = ud(rng);
      std::vector<real> g(2);
      m->gradient(z, phi, g);
      auto fd = fd_gradient(*m, z, phi);
      for (std::size_t i = 0; i < 2; ++i) {
        const real scale = std::max<real>(1.0, std::abs(fd[i]));
        CHECK(std::abs(g[i] - fd[i]) < 1e-7 * scale);
      }
    }
  }
}

TEST_CASE("hessians are symmetric and match differentiated gradients", "[models]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<real> ud(0.0, 1.0);
  TokamakModel tok(0.004, 0.35);
  PendulumModel pend(1.0, 0.2, 0.05);
  const HamiltonianModel* models[] = {&tok, &pend};
  for (const auto* m : models) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<real> z{ud(rng), 0.2 + 0.4 * ud(rng)};
      std::vector<real> phi(m->ell());
      for (auto& p : phi) p = ud(rng);
      std::vector<real> h(4);
      m->hessian(z, phi, h);
      CHECK(std::abs(h[1] - h[2]) < 1e-12);
      auto fd = fd_hessian(*m, z, phi);
      for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(h[i] - fd[i]) < 1e-6 * std::max<real>(1.0, std::abs(fd[i])));
    }
  }
}

TEST_CASE("vector field values", "[models]") {
  // rotor at p = 2: Z = (2, 0)
  PendulumModel rotor(0, 0, 0);
  std::vector<real> Z(2), z{0.3, 2.0}, phi{0.1, 0.7};
  vector_field(rotor, z, phi, Z);
  CHECK(Z[0] == Approx(2.0).margin(1e-15));
  CHECK(Z[1] == Approx(0.0).margin(1e-15));

  // rotor jacobian: [[0, 1], [0, 0]]
  std::vector<real> J(4);
  jacobian(rotor, z, phi, J);
  CHECK(J[0] == Approx(0.0).margin(1e-15));
  CHECK(J[1] == Approx(1.0).margin(1e-15));
  CHECK(J[2] == Approx(0.0).margin(1e-15));
  CHECK(J[3] == Approx(0.0).margin(1e-15));
}

TEST_CASE("parameter derivatives match finite differences in eps", "[models]") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<real> ud(0.0, 1.0);
  const real h = 1e-6;

  SECTION("tokamak eps") {
    for (int rep = 0; rep < 25; ++rep) {
      std::vector<real> z{ud(rng), 0.2 + 0.4 * ud(rng)}, phi{ud(rng)};
      TokamakModel m(0.004, 0.35), mp(0.004 + h, 0.35), mm(0.004 - h, 0.35);
      std::vector<real> d(2), gp(2), gm(2);
      m.param_gradient("eps", z, phi, d);
      mp.gradient(z, phi, gp);
      mm.gradient(z, phi, gm);
      for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::abs(d[i] - (gp[i] - gm[i]) / (2 * h)) <
              1e-7 * std::max<real>(1.0, std::abs(d[i])));
    }
  }
  SECTION("pendulum eps2, eps3") {
    for (const char* par : {"eps2", "eps3"}) {
      for (int rep = 0; rep < 25; ++rep) {
        std::vector<real> z{ud(rng), 1.0 + ud(rng)}, phi{ud(rng), ud(rng)};
        PendulumModel m(1.0, 0.2, 0.05), mp = m, mm = m;
        mp.set_param(par, m.param(par) + h);
        mm.set_param(par, m.param(par) - h);
        std::vector<real> d(2), gp(2), gm(2);
        m.param_gradient(par, z, phi, d);
        mp.gradient(z, phi, gp);
        mm.gradient(z, phi, gm);
        for (std::size_t i = 0; i < 2; ++i)
          CHECK(std::abs(d[i] - (gp[i] - gm[i]) / (2 * h)) <
                1e-7 * std::max<real>(1.0, std::abs(d[i])));
      }
    }
  }
}

TEST_CASE("rotor eps1 derivative field is (0, 2 pi sin(2 pi x))", "[models]") {
  PendulumModel rotor(0, 0, 0);
  std::vector<real> z{0.2, 1.5}, phi{0.0, 0.0}, out(2);
  d_eps_vector_field(rotor, "eps1", z, phi, out);
  CHECK(out[0] == Approx(0.0).margin(1e-15));
  CHECK(out[1] == Approx(two_pi * std::sin(two_pi * 0.2)).epsilon(1e-14));
  CHECK_THROWS_AS(d_eps_vector_field(rotor, "nope", z, phi, out), config_error);
}

TEST_CASE("tokamak eps derivative at eps = 0 reduces to the linear term", "[models]") {
  TokamakModel m(0.0, 0.35);
  std::vector<real> z{0.37, 0.35}, phi{0.21}, d(2);
  m.param_gradient("eps", z, phi, d);
  // dH/deps at eps = 0 is H1; its theta derivative in unit coordinates
  const real a = two_pi * (2 * z[0] - phi[0]);
  const real b = two_pi * (3 * z[0] - 2 * phi[0]);
  CHECK(d[0] == Approx(two_pi * (-2 * std::sin(a) - 3 * std::sin(b))).epsilon(1e-13));
  CHECK(d[1] == Approx(0.0).margin(1e-15));
}

TEST_CASE("pendulum with eps1 = 0 equals the single-wave reduction", "[models]") {
  PendulumModel m(0.0, 0.27, 0.13);
  const real a1 = std::sqrt(3.0), a2 = (1.0 + std::sqrt(5.0)) / 2.0;
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<real> ud(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<real> z{ud(rng), 2 * ud(rng)}, phi{ud(rng), ud(rng)};
    // H = p^2/2 - (eps2 + eps3 cos(a1 t)) cos(q - a2 t) evaluated natively
    const real q = two_pi * z[0];
    const real ref = 0.5 * z[1] * z[1] -
                     (0.27 + 0.13 * std::cos(two_pi * phi[0])) * std::cos(q - two_pi * phi[1]);
    CHECK(m.value(z, phi) == ref);  // exactly the same arithmetic
  }
  CHECK(m.external_frequency()[0] == Approx(a1).margin(1e-15));
  CHECK(m.external_frequency()[1] == Approx(a2).margin(1e-15));
}
