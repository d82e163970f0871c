#pragma once

#include "kamtori/model.hpp"
#include "kamtori/ode.hpp"

namespace kamtori {

/// One stored integration with dense per-step records (cubic Hermite data)
/// and the angle components kept as a continuous lift (never wrapped).
struct OrbitSample {
  struct Step {
    real t0, t1;
    std::vector<real> y0, y1, f0, f1;
  };
  std::vector<Step> steps;
  std::size_t dim = 0;

  /// Hermite evaluation inside a recorded step (event location helper).
  std::vector<real> eval(real t) const {
    for (const auto& s : steps) {
      if (t < s.t0 - 1e-15 || t > s.t1 + 1e-15) continue;
      const real h = s.t1 - s.t0;
      const real u = (t - s.t0) / h;
      std::vector<real> out(dim);
      const real h00 = (1 + 2 * u) * (1 - u) * (1 - u);
      const real h10 = u * (1 - u) * (1 - u);
      const real h01 = u * u * (3 - 2 * u);
      const real h11 = u * u * (u - 1);
      for (std::size_t i = 0; i < dim; ++i)
        out[i] = h00 * s.y0[i] + h10 * h * s.f0[i] + h01 * s.y1[i] + h11 * h * s.f1[i];
      return out;
    }
    throw error("OrbitSample::eval: time outside recorded span");
  }
};

/// RHS of dz/dt = Z_H(z, phi0 + t alpha) for a fixed external phase offset.
inline Dop853::Rhs make_flow_rhs(const HamiltonianModel& m, std::vector<real> phi0) {
  const auto alpha = m.external_frequency();
  const std::size_t d = 2 * m.n(), ell = m.ell();
  return [&m, phi0 = std::move(phi0), alpha, d, ell](real t, const real* y, real* dy) {
    real phi[8];
    for (std::size_t j = 0; j < ell; ++j) phi[j] = phi0[j] + t * alpha[j];
    vector_field(m, std::span<const real>(y, d), std::span<const real>(phi, ell),
                 std::span<real>(dy, d));
  };
}

/// Integrate the flow for time t_final starting at external phase phi0.
/// Records dense steps when `record` is set.
inline std::vector<real> integrate_flow(const HamiltonianModel& m, std::vector<real> z0,
                                        const std::vector<real>& phi0, real t_final,
                                        real tol = 1e-13, OrbitSample* record = nullptr) {
  if (tol <= 0) throw config_error("integrate_flow: tol must be positive");
  Dop853::Options opt;
  opt.rtol = opt.atol = tol;
  auto rhs = make_flow_rhs(m, phi0);
  Dop853 solver(z0.size(), rhs, opt);
  real t = 0;
  if (record) {
    record->dim = z0.size();
    solver.integrate(t, z0, t_final,
                     [&](real ta, real tb, const real* ya, const real* yb, const real* fa) {
                       OrbitSample::Step s;
                       s.t0 = ta;
                       s.t1 = tb;
                       s.y0.assign(ya, ya + record->dim);
                       s.y1.assign(yb, yb + record->dim);
                       s.f0.assign(fa, fa + record->dim);
                       record->steps.push_back(std::move(s));
                     });
    for (auto& s : record->steps) {
      s.f1.resize(record->dim);
      rhs(s.t1, s.y1.data(), s.f1.data());
    }
  } else {
    solver.integrate(t, z0, t_final);
  }
  return z0;
}

/// Time-one-external-period flow map for ell = 1 models.
inline std::vector<real> stroboscopic_map(const HamiltonianModel& m, std::vector<real> z,
                                          real phi0 = 0.0, real tol = 1e-13) {
  if (m.ell() != 1) throw config_error("stroboscopic_map requires ell = 1");
  const real period = 1.0 / m.external_frequency()[0];
  return integrate_flow(m, std::move(z), {phi0}, period, tol);
}

/// Iterate the stroboscopic map n times in one continuous integration so the
/// external phase and the angle lift stay exact across iterates. Row k is the
/// state after k iterates.
inline std::vector<std::vector<real>> stroboscopic_orbit(const HamiltonianModel& m,
                                                         std::vector<real> z0, std::size_t n,
                                                         real tol = 1e-13) {
  if (m.ell() != 1) throw config_error("stroboscopic_orbit requires ell = 1");
  const real period = 1.0 / m.external_frequency()[0];
  Dop853::Options opt;
  opt.rtol = opt.atol = tol;
  Dop853 solver(z0.size(), make_flow_rhs(m, {0.0}), opt);
  std::vector<std::vector<real>> out;
  out.reserve(n + 1);
  out.push_back(z0);
  real t = 0;
  std::vector<real> z = std::move(z0);
  for (std::size_t k = 0; k < n; ++k) {
    solver.integrate(t, z, (static_cast<real>(k) + 1.0) * period);
    out.push_back(z);
  }
  return out;
}

}  // namespace kamtori
