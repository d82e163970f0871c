#pragma once

#include "kamtori/embedding.hpp"
#include "kamtori/flow.hpp"
#include "kamtori/parallel.hpp"
#include "kamtori/section_curve.hpp"

namespace kamtori {

/// K(theta_i, phi_j) = Phi_{t*}(K0(theta_i - omega t*), 0) with t* = phi_j /
/// alpha, integrating one initial-value problem per node column (ell = 1).
/// The section curve is spline-evaluated off-lattice.
inline TorusEmbedding build_initial_torus_flow(const HamiltonianModel& model,
                                               const SectionCurve& curve,
                                               const FrequencyVector& freq,
                                               std::size_t n_theta, std::size_t n_phi,
                                               real tol = 1e-13) {
  if (model.ell() != 1) throw config_error("build_initial_torus_flow requires ell = 1");
  if (model.n() != 1) throw config_error("build_initial_torus_flow: n = 1 only");
  const real omega = freq.omega[0];
  const real alpha = freq.alpha[0];
  GridShape shape({n_theta, n_phi});

  TorusGrid Kx(shape), Ky(shape);
  parallel_for(n_phi, [&](std::size_t j0, std::size_t j1) {
    for (std::size_t j = j0; j < j1; ++j) {
      const real tstar = static_cast<real>(j) / static_cast<real>(n_phi) / alpha;
      for (std::size_t i = 0; i < n_theta; ++i) {
        const real u = static_cast<real>(i) / static_cast<real>(n_theta) - omega * tstar;
        std::vector<real> z{curve.eval(0, u), curve.eval(1, u)};
        if (tstar > 0) z = integrate_flow(model, std::move(z), {0.0}, tstar, tol);
        Kx[i * n_phi + j] = z[0];
        Ky[i * n_phi + j] = z[1];
      }
    }
  });

  // subtract the winding before going spectral
  const long deg = curve.degree[0];
  for_each_node(shape, [&](std::size_t flat, const std::vector<real>& ang) {
    Kx[flat] -= static_cast<real>(deg) * ang[0];
  });

  TorusEmbedding K;
  K.n1 = 1;
  K.n2 = 0;
  K.ell = 1;
  K.degree = {deg};
  K.freq = freq;
  K.Kp.push_back(grid_to_fourier(Kx));
  K.Kp.push_back(grid_to_fourier(Ky));
  return K;
}

struct PeriodicOrbit {
  real period = 0;
  long degree = 0;                     // x-winding per period (0 for libration)
  std::vector<std::vector<real>> samples;  // n_samples states along the orbit
};

namespace detail {

/// Refine an event time: g(state(t)) = 0 bracketed in [ta, tb], with state
/// obtained by short re-integrations from a fixed anchor (secant iteration).
template <class G>
inline real refine_event(const HamiltonianModel& model, const std::vector<real>& anchor,
                         real t_anchor, real ta, real tb, G&& g, real tol) {
  auto val = [&](real t) {
    auto z = integrate_flow(model, anchor, std::vector<real>(model.ell(), 0.0), t - t_anchor, tol);
    return g(z);
  };
  real fa = val(ta), fb = val(tb);
  for (int it = 0; it < 80; ++it) {
    if (std::abs(fb - fa) < 1e-300) break;
    const real tm = tb - fb * (tb - ta) / (fb - fa);
    const real tc = std::clamp(tm, std::min(ta, tb), std::max(ta, tb));
    const real fc = val(tc);
    if (std::abs(tc - tb) < 1e-14 * std::max<real>(1.0, std::abs(tc))) return tc;
    if ((fc < 0) == (fa < 0)) {
      ta = tc; fa = fc;
    } else {
      tb = tc; fb = fc;
    }
  }
  return 0.5 * (ta + tb);
}

}  // namespace detail

/// Detect the period of the orbit through z0 of an autonomous reduction
/// (couplings zero) and sample it uniformly in time. Rotational orbits close
/// after the x-lift advances by one; librational orbits close at the second
/// turning-point crossing with matching orientation, and theta = 0 is moved
/// to the ascending crossing of the libration center.
inline PeriodicOrbit sample_periodic_orbit(const HamiltonianModel& model,
                                           const std::vector<real>& z0,
                                           std::size_t n_samples, bool librational,
                                           real tol = 1e-13) {
  const std::vector<real> phi0(model.ell(), 0.0);
  PeriodicOrbit orbit;
  std::vector<real> anchor = z0;

  if (!librational) {
    orbit.degree = 1;
    // x increases monotonically for the rotational orbits of interest
    const real x_target = z0[0] + 1.0;
    real t_hi = 0, step = 0.5;
    std::vector<real> z = z0;
    while (z[0] < x_target) {
      z = integrate_flow(model, std::move(z), phi0, step, tol);
      t_hi += step;
      if (t_hi > 1e4) throw numerical_error("orbit does not wind: not a rotational orbit");
    }
    orbit.period = detail::refine_event(
        model, z0, 0.0, t_hi - step, t_hi,
        [&](const std::vector<real>& s) { return s[0] - x_target; }, tol);
  } else {
    orbit.degree = 0;
    // p = 0 (turning point) crossings are transversal on a libration orbit;
    // consecutive same-orientation crossings are one period apart
    std::vector<real> z = z0;
    real t = 0;
    const real dt = 0.05;
    std::vector<real> crossings;
    real prev_p = z0[1], prev_t = 0;
    const bool from_turning = std::abs(z0[1]) < 1e-12;
    while (crossings.size() < 3 && t < 1e4) {
      z = integrate_flow(model, std::move(z), phi0, dt, tol);
      t += dt;
      if ((prev_p < 0) != (z[1] < 0) && t > 2 * dt) {
        crossings.push_back(detail::refine_event(
            model, z0, 0.0, prev_t, t, [&](const std::vector<real>& s) { return s[1]; }, tol));
      }
      prev_p = z[1];
      prev_t = t;
    }
    if (crossings.size() < (from_turning ? 2u : 3u))
      throw numerical_error("orbit not periodic within tolerance: no libration closure");
    orbit.period = from_turning ? crossings[1] : crossings[2] - crossings[0];
    // libration center: midpoint of the two turning xs
    auto z_half = integrate_flow(model, z0, phi0, crossings[0], tol);
    const real center = 0.5 * (z0[0] + z_half[0]);
    // ascending (p > 0) crossing of x = center fixes the phase origin
    real t_anchor = detail::refine_event(
        model, z0, 0.0, 0.0, orbit.period,
        [&](const std::vector<real>& s) { return s[0] - center; }, tol);
    auto za = integrate_flow(model, z0, phi0, t_anchor, tol);
    if (za[1] < 0) {
      // wrong branch: the other crossing is half a period away
      t_anchor = detail::refine_event(
          model, z0, 0.0, t_anchor + orbit.period * 0.25, t_anchor + orbit.period * 0.75,
          [&](const std::vector<real>& s) { return s[0] - center; }, tol);
      za = integrate_flow(model, z0, phi0, t_anchor, tol);
    }
    anchor = za;
  }

  // uniform time samples over one period from the anchor
  orbit.samples.resize(n_samples);
  orbit.samples[0] = anchor;
  std::vector<real> z = anchor;
  Dop853::Options opt;
  opt.rtol = opt.atol = tol;
  Dop853 solver(z.size(), make_flow_rhs(model, phi0), opt);
  real t = 0;
  for (std::size_t i = 1; i < n_samples; ++i) {
    solver.integrate(t, z, orbit.period * static_cast<real>(i) / static_cast<real>(n_samples));
    orbit.samples[i] = z;
  }
  return orbit;
}

/// Parameterize the periodic orbit by uniform angle theta = t/T and extend
/// constantly in the external angles (autonomous reduction: couplings zero).
inline TorusEmbedding build_initial_torus_autonomous(const HamiltonianModel& model,
                                                     const std::vector<real>& z0,
                                                     std::size_t n_theta,
                                                     const std::vector<std::size_t>& n_phi,
                                                     bool librational, real tol = 1e-13) {
  if (model.n() != 1) throw config_error("build_initial_torus_autonomous: n = 1 only");
  PeriodicOrbit orbit = sample_periodic_orbit(model, z0, n_theta, librational, tol);

  std::vector<std::size_t> sizes{n_theta};
  for (auto m : n_phi) sizes.push_back(m);
  GridShape shape(sizes);

  // theta-only spectra of the two components (constant in phi)
  GridShape line({n_theta});
  TorusGrid gx(line), gy(line);
  for (std::size_t i = 0; i < n_theta; ++i) {
    const real th = static_cast<real>(i) / static_cast<real>(n_theta);
    gx[i] = orbit.samples[i][0] - static_cast<real>(orbit.degree) * th;
    gy[i] = orbit.samples[i][1];
  }
  FourierSeries fx = grid_to_fourier(gx), fy = grid_to_fourier(gy);

  TorusEmbedding K;
  K.n1 = 1;
  K.n2 = 0;
  K.ell = n_phi.size();
  K.degree = {orbit.degree};
  K.freq.omega = {1.0 / orbit.period};
  K.freq.alpha = model.external_frequency();
  K.Kp.assign(2, FourierSeries(shape));
  // place the 1-D modes at k_phi = 0
  WaveTable wt(line);
  for (std::size_t i = 0; i < fx.size(); ++i) {
    // 1-D reduced index i corresponds to k = i (last axis of the line shape)
    std::vector<long> k(shape.rank(), 0);
    k[0] = static_cast<long>(i);
    if (static_cast<std::size_t>(k[0]) > n_theta / 2) continue;
    // target flat index: theta axis is axis 0 (full), phis at 0
    std::size_t flat = static_cast<std::size_t>(k[0]);
    for (std::size_t a = 1; a < shape.rank(); ++a)
      flat = flat * ((a + 1 == shape.rank()) ? shape.reduced_last() : shape.size(a));
    K.Kp[0][flat] = fx[i];
    K.Kp[1][flat] = fy[i];
  }
  // restore Hermitian layout along axis 0: modes k and N-k are both stored
  for (std::size_t k = n_theta / 2 + 1; k < n_theta; ++k) {
    std::size_t flat = k;
    for (std::size_t a = 1; a < shape.rank(); ++a)
      flat = flat * ((a + 1 == shape.rank()) ? shape.reduced_last() : shape.size(a));
    K.Kp[0][flat] = std::conj(fx[n_theta - k]);
    K.Kp[1][flat] = std::conj(fy[n_theta - k]);
  }
  return K;
}

}  // namespace kamtori
