#pragma once

#include <cmath>

#include "kamtori/model.hpp"

namespace kamtori {

/// Quasi-periodically forced pendulum with two driving frequencies,
/// native form
///
///   H = p^2/2 + eps1 cos(q) - (eps2 + eps3 cos(alpha1 t)) cos(q - alpha2 t),
///   alpha1 = sqrt(3), alpha2 = (1 + sqrt(5))/2.
///
/// eps1 = eps2 = eps3 = 0 is the rotor; eps1 = 0 is the single-wave
/// reduction. Unit coordinates: z = (x, y) = (q/2pi, p), phi = native
/// driving phases / 2pi, time unit chosen so the external frequencies
/// keep their native values.
class PendulumModel final : public HamiltonianModel {
 public:
  explicit PendulumModel(real eps1 = 0, real eps2 = 0, real eps3 = 0)
      : eps1_(eps1), eps2_(eps2), eps3_(eps3) {}

  std::string name() const override { return "qp-pendulum"; }
  std::size_t n1() const override { return 1; }
  std::size_t n2() const override { return 0; }
  std::size_t ell() const override { return 2; }
  std::vector<real> external_frequency() const override {
    return {std::sqrt(3.0), (1.0 + std::sqrt(5.0)) / 2.0};
  }

  real value(std::span<const real> z, std::span<const real> phi) const override {
    const real q = two_pi * z[0], y = z[1];
    const real f1 = two_pi * phi[0], f2 = two_pi * phi[1];
    return 0.5 * y * y + eps1_ * std::cos(q) - amp(f1) * std::cos(q - f2);
  }

  void gradient(std::span<const real> z, std::span<const real> phi,
                std::span<real> out) const override {
    const real q = two_pi * z[0], y = z[1];
    const real f1 = two_pi * phi[0], f2 = two_pi * phi[1];
    out[0] = two_pi * (-eps1_ * std::sin(q) + amp(f1) * std::sin(q - f2));
    out[1] = y;
  }

  void hessian(std::span<const real> z, std::span<const real> phi,
               std::span<real> out) const override {
    const real q = two_pi * z[0];
    const real f1 = two_pi * phi[0], f2 = two_pi * phi[1];
    out[0] = two_pi * two_pi * (-eps1_ * std::cos(q) + amp(f1) * std::cos(q - f2));
    out[1] = out[2] = 0.0;
    out[3] = 1.0;
  }

  std::vector<std::string> param_names() const override { return {"eps1", "eps2", "eps3"}; }
  real param(const std::string& p) const override {
    if (p == "eps1") return eps1_;
    if (p == "eps2") return eps2_;
    if (p == "eps3") return eps3_;
    throw config_error("qp-pendulum: unknown parameter " + p);
  }
  void set_param(const std::string& p, real v) override {
    if (p == "eps1") eps1_ = v;
    else if (p == "eps2") eps2_ = v;
    else if (p == "eps3") eps3_ = v;
    else throw config_error("qp-pendulum: unknown parameter " + p);
  }

  void param_gradient(const std::string& p, std::span<const real> z,
                      std::span<const real> phi, std::span<real> out) const override {
    const real q = two_pi * z[0];
    const real f1 = two_pi * phi[0], f2 = two_pi * phi[1];
    out[1] = 0.0;
    if (p == "eps1") {
      out[0] = -two_pi * std::sin(q);  // dH/deps1 = cos q
    } else if (p == "eps2") {
      out[0] = two_pi * std::sin(q - f2);  // dH/deps2 = -cos(q - phi2)
    } else if (p == "eps3") {
      out[0] = two_pi * std::cos(f1) * std::sin(q - f2);
    } else {
      throw config_error("qp-pendulum: unknown parameter " + p);
    }
  }

 private:
  real amp(real f1_native) const { return eps2_ + eps3_ * std::cos(f1_native); }
  real eps1_, eps2_, eps3_;
};

}  // namespace kamtori
