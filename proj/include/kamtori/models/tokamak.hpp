#pragma once

#include <cmath>

#include "kamtori/model.hpp"

namespace kamtori {

/// Magnetic field-line Hamiltonian of a Tokamak with a second-order control
/// term. Native form, with theta and the toroidal angle phi both 2 pi
/// periodic and psi the normalized flux:
///
///   H = F(psi) + eps*(cos(2 theta - phi) + cos(3 theta - 2 phi)) + eps^2 f2,
///   1/q(psi) = (2 - psi)(2 - 2 psi + psi^2)/4,   F' = 1/q,
///   f2 = -(1/2)(d/dpsi 1/q)|_{psi0} * (2 cos(2t-p)/(2w-1) + 3 cos(3t-2p)/(3w-2))^2,
///   w = 1/q(psi0).
///
/// Unit coordinates: z = (x, y) = (theta/2pi, psi), external frequency 1.
class TokamakModel final : public HamiltonianModel {
 public:
  explicit TokamakModel(real eps = 0.004, real psi0 = 0.35) { set(eps, psi0); }

  std::string name() const override { return "tokamak"; }
  std::size_t n1() const override { return 1; }
  std::size_t n2() const override { return 0; }
  std::size_t ell() const override { return 1; }
  std::vector<real> external_frequency() const override { return {1.0}; }

  static real profile_w(real psi) {  // 1/q
    return 1.0 - 1.5 * psi + psi * psi - 0.25 * psi * psi * psi;
  }
  static real profile_w_prime(real psi) { return -1.5 + 2.0 * psi - 0.75 * psi * psi; }

  /// q(psi) and w = 1/q(psi); pole when the quartic denominator vanishes.
  static std::pair<real, real> profile(real psi) {
    const real w = profile_w(psi);
    if (std::abs(w) < 1e-14) throw numerical_error("tokamak profile: pole in q(psi)");
    return {1.0 / w, w};
  }

  real value(std::span<const real> z, std::span<const real> phi) const override {
    const real y = z[1];
    Trig t(z[0], phi[0]);
    // antiderivative of 1/q: y - 3/4 y^2 + y^3/3 - y^4/16
    const real F = y - 0.75 * y * y + y * y * y / 3.0 - y * y * y * y / 16.0;
    const real h1 = t.ca + t.cb;
    const real g = G(t);
    return F + eps_ * h1 + eps_ * eps_ * c2_ * g * g;
  }

  void gradient(std::span<const real> z, std::span<const real> phi,
                std::span<real> out) const override {
    const real y = z[1];
    Trig t(z[0], phi[0]);
    const real h1t = -2.0 * t.sa - 3.0 * t.sb;
    const real g = G(t), gt = Gt(t);
    out[0] = two_pi * (eps_ * h1t + eps_ * eps_ * c2_ * 2.0 * g * gt);
    out[1] = profile_w(y);
  }

  void hessian(std::span<const real> z, std::span<const real> phi,
               std::span<real> out) const override {
    const real y = z[1];
    Trig t(z[0], phi[0]);
    const real h1tt = -4.0 * t.ca - 9.0 * t.cb;
    const real g = G(t), gt = Gt(t), gtt = Gtt(t);
    out[0] = two_pi * two_pi * (eps_ * h1tt + eps_ * eps_ * c2_ * 2.0 * (gt * gt + g * gtt));
    out[1] = out[2] = 0.0;  // perturbation does not depend on psi
    out[3] = profile_w_prime(y);
  }

  std::vector<std::string> param_names() const override { return {"eps", "psi0"}; }
  real param(const std::string& p) const override {
    if (p == "eps") return eps_;
    if (p == "psi0") return psi0_;
    throw config_error("tokamak: unknown parameter " + p);
  }
  void set_param(const std::string& p, real v) override {
    if (p == "eps") set(v, psi0_);
    else if (p == "psi0") set(eps_, v);
    else throw config_error("tokamak: unknown parameter " + p);
  }

  void param_gradient(const std::string& p, std::span<const real> z,
                      std::span<const real> phi, std::span<real> out) const override {
    if (p != "eps") throw config_error("tokamak: no parameter derivative for " + p);
    // dH/deps = H1 + 2 eps f2
    Trig t(z[0], phi[0]);
    const real h1t = -2.0 * t.sa - 3.0 * t.sb;
    const real g = G(t), gt = Gt(t);
    out[0] = two_pi * (h1t + 2.0 * eps_ * c2_ * 2.0 * g * gt);
    out[1] = 0.0;
  }

 private:
  struct Trig {
    real ca, sa, cb, sb;
    Trig(real x, real p) {
      const real tn = two_pi * x, pn = two_pi * p;
      const real a = 2.0 * tn - pn, b = 3.0 * tn - 2.0 * pn;
      ca = std::cos(a); sa = std::sin(a);
      cb = std::cos(b); sb = std::sin(b);
    }
  };

  real G(const Trig& t) const { return 2.0 * t.ca / d1_ + 3.0 * t.cb / d2_; }
  real Gt(const Trig& t) const { return -4.0 * t.sa / d1_ - 9.0 * t.sb / d2_; }
  real Gtt(const Trig& t) const { return -8.0 * t.ca / d1_ - 27.0 * t.cb / d2_; }

  void set(real eps, real psi0) {
    eps_ = eps;
    psi0_ = psi0;
    const real w = profile_w(psi0);
    d1_ = 2.0 * w - 1.0;
    d2_ = 3.0 * w - 2.0;
    if (std::abs(d1_) < 1e-12 || std::abs(d2_) < 1e-12)
      throw config_error("tokamak: psi0 places the control on a resonance");
    c2_ = -0.5 * profile_w_prime(psi0);
  }

  real eps_ = 0, psi0_ = 0, c2_ = 0, d1_ = 0, d2_ = 0;
};

}  // namespace kamtori
