#pragma once

#include <memory>
#include <span>
#include <string>

#include "kamtori/frequency.hpp"

namespace kamtori {

/// Quasi-periodic Hamiltonian evaluator bundle in unit-torus coordinates:
/// angles live on [0,1), actions are unscaled, and one time unit is one
/// external period of the underlying model. In these coordinates the
/// equations stay canonical, dz/dt = Omega0^{-1} grad H(z, phi), with
/// Omega0 = [[0,-I],[I,0]]. Models with native 2 pi angles evaluate their
/// formulas at 2 pi x internally.
class HamiltonianModel {
 public:
  virtual ~HamiltonianModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t n1() const = 0;   // angle-like z components
  virtual std::size_t n2() const = 0;   // unbounded z components
  virtual std::size_t ell() const = 0;  // external angles
  std::size_t n() const { return n1() + n2(); }

  virtual std::vector<real> external_frequency() const = 0;

  /// H(z, phi); z has 2n entries, phi has ell entries.
  virtual real value(std::span<const real> z, std::span<const real> phi) const = 0;
  /// grad_z H, 2n entries.
  virtual void gradient(std::span<const real> z, std::span<const real> phi,
                        std::span<real> out) const = 0;
  /// Hess_z H, (2n)x(2n) row-major.
  virtual void hessian(std::span<const real> z, std::span<const real> phi,
                       std::span<real> out) const = 0;

  virtual std::vector<std::string> param_names() const = 0;
  virtual real param(const std::string& name) const = 0;
  virtual void set_param(const std::string& name, real value) = 0;

  /// grad_z of dH/d(param), 2n entries.
  virtual void param_gradient(const std::string& name, std::span<const real> z,
                              std::span<const real> phi, std::span<real> out) const = 0;

  bool has_param(const std::string& name) const {
    for (const auto& p : param_names())
      if (p == name) return true;
    return false;
  }
};

/// Z = Omega0^{-1} (grad H)^T: (Z_x, Z_y) = (H_y, -H_x) blockwise.
inline void vector_field(const HamiltonianModel& m, std::span<const real> z,
                         std::span<const real> phi, std::span<real> out) {
  const std::size_t n = m.n();
  std::vector<real> g(2 * n);
  m.gradient(z, phi, g);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = g[n + i];
    out[n + i] = -g[i];
  }
}

/// D_z Z = Omega0^{-1} Hess H.
inline void jacobian(const HamiltonianModel& m, std::span<const real> z,
                     std::span<const real> phi, std::span<real> out) {
  const std::size_t n = m.n(), d = 2 * n;
  std::vector<real> h(d * d);
  m.hessian(z, phi, h);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      out[i * d + j] = h[(n + i) * d + j];
      out[(n + i) * d + j] = -h[i * d + j];
    }
}

/// Omega0^{-1} (grad_z dH/deps)^T.
inline void d_eps_vector_field(const HamiltonianModel& m, const std::string& param,
                               std::span<const real> z, std::span<const real> phi,
                               std::span<real> out) {
  if (!m.has_param(param)) throw config_error("unknown model parameter: " + param);
  const std::size_t n = m.n();
  std::vector<real> g(2 * n);
  m.param_gradient(param, z, phi, g);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = g[n + i];
    out[n + i] = -g[i];
  }
}

}  // namespace kamtori
