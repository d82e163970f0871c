#pragma once

#include "kamtori/birkhoff.hpp"

namespace kamtori {

/// Periodic cubic spline on the uniform unit grid x_i = i/N.
class PeriodicSpline {
 public:
  PeriodicSpline() = default;
  explicit PeriodicSpline(std::vector<real> y) : y_(std::move(y)) {
    const std::size_t n = y_.size();
    if (n < 3) throw config_error("PeriodicSpline: need at least 3 samples");
    // cyclic tridiagonal system for the second-derivative moments:
    // M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i-1} - 2 y_i + y_{i+1}) / h^2
    const real h = 1.0 / static_cast<real>(n);
    std::vector<real> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const real ym = y_[(i + n - 1) % n], yp = y_[(i + 1) % n];
      rhs[i] = 6.0 * (ym - 2.0 * y_[i] + yp) / (h * h);
    }
    m_ = solve_cyclic(rhs);
  }

  /// Evaluate at any real u (wrapped to [0,1)).
  real operator()(real u) const {
    const std::size_t n = y_.size();
    real x = u - std::floor(u);
    const real h = 1.0 / static_cast<real>(n);
    std::size_t i = std::min(static_cast<std::size_t>(x * n), n - 1);
    const real a = x - static_cast<real>(i) * h;
    const real b = h - a;
    const std::size_t j = (i + 1) % n;
    return (m_[i] * b * b * b + m_[j] * a * a * a) / (6.0 * h) +
           (y_[i] / h - m_[i] * h / 6.0) * b + (y_[j] / h - m_[j] * h / 6.0) * a;
  }

  const std::vector<real>& samples() const { return y_; }

 private:
  std::vector<real> solve_cyclic(std::vector<real> d) const {
    // Thomas algorithm with Sherman-Morrison for the wrap entries
    const std::size_t n = d.size();
    std::vector<real> a(n, 1.0), b(n, 4.0), c(n, 1.0);
    const real alpha = 1.0, beta = 1.0, gamma = -b[0];
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    auto tri = [&](std::vector<real> r) {
      std::vector<real> cp(n), x(n);
      cp[0] = c[0] / b[0];
      x[0] = r[0] / b[0];
      for (std::size_t i = 1; i < n; ++i) {
        const real m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        x[i] = (r[i] - a[i] * x[i - 1]) / m;
      }
      for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
      return x;
    };
    std::vector<real> x = tri(d);
    std::vector<real> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    std::vector<real> zq = tri(u);
    const real fact = (x[0] + beta * x[n - 1] / gamma) /
                      (1.0 + zq[0] + beta * zq[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) x[i] -= fact * zq[i];
    return x;
  }

  std::vector<real> y_;
  std::vector<real> m_;
};

/// Closed curve theta -> z on the flow section, sampled at N_theta points and
/// evaluated by periodic cubic splines; `omega` is the internal frequency the
/// parameterization is conjugate to, `degree` the winding of each component.
struct SectionCurve {
  real omega = 0;
  std::vector<long> degree;             // per component
  std::vector<PeriodicSpline> periodic; // periodic part of each component

  std::size_t components() const { return periodic.size(); }
  std::size_t samples() const { return periodic.at(0).samples().size(); }

  /// Full component value at parameter u (winding plus periodic part).
  real eval(std::size_t comp, real u) const {
    return static_cast<real>(degree[comp]) * u + periodic[comp](u);
  }
};

struct CurveExtraction {
  SectionCurve curve;
  long kcut = 0;                  // modes kept
  std::vector<real> mode_norms;   // max |c_k| over components, k = 0..kmax
};

/// Build the section curve from a stroboscopic orbit by weighted-Birkhoff
/// Fourier extraction of the conjugacy: u_j = z_j - j omega e_deg is sampled
/// at theta_j = j omega, so its coefficients come out of phase-rotated
/// weighted sums. kcut = 0 selects the cut automatically at the point where
/// the spectrum stops decreasing (extraction noise floor).
inline CurveExtraction build_section_curve(const std::vector<std::vector<real>>& orbit,
                                           real omega, const std::vector<long>& degree,
                                           std::size_t n_samples, long kmax, long kcut = 0) {
  if (orbit.size() < 128) throw config_error("build_section_curve: orbit too short");
  const std::size_t m = orbit.size() - 1;  // drop the endpoint (weights vanish anyway)
  const std::size_t dim = orbit[0].size();

  CurveExtraction out;
  out.curve.omega = omega;
  out.curve.degree = degree;

  std::vector<std::vector<cplx>> coef(dim);
  std::vector<real> u(m);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t j = 0; j < m; ++j)
      u[j] = orbit[j][c] - static_cast<real>(degree[c]) * static_cast<real>(j) * omega;
    coef[c] = birkhoff_fourier(u, omega, kmax);
  }

  out.mode_norms.assign(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (long k = 0; k <= kmax; ++k)
    for (std::size_t c = 0; c < dim; ++c)
      out.mode_norms[static_cast<std::size_t>(k)] =
          std::max(out.mode_norms[static_cast<std::size_t>(k)],
                   std::abs(coef[c][static_cast<std::size_t>(kmax + k)]));

  if (kcut <= 0) {
    // noise floor: median magnitude over the top quarter of the band
    std::vector<real> top(out.mode_norms.end() - kmax / 4, out.mode_norms.end());
    std::sort(top.begin(), top.end());
    const real floor = 4.0 * top[top.size() / 2];
    kcut = 8;
    for (long k = kmax; k >= 8; --k)
      if (out.mode_norms[static_cast<std::size_t>(k)] > floor) { kcut = k; break; }
  }
  out.kcut = std::min(kcut, kmax);

  // synthesize periodic parts on the uniform grid
  for (std::size_t c = 0; c < dim; ++c) {
    std::vector<real> y(n_samples, 0.0);
    for (std::size_t i = 0; i < n_samples; ++i) {
      const real th = static_cast<real>(i) / static_cast<real>(n_samples);
      real s = coef[c][static_cast<std::size_t>(kmax)].real();
      for (long k = 1; k <= out.kcut; ++k) {
        const cplx ck = coef[c][static_cast<std::size_t>(kmax + k)];
        const real a = two_pi * static_cast<real>(k) * th;
        s += 2.0 * (ck.real() * std::cos(a) - ck.imag() * std::sin(a));
      }
      y[i] = s;
    }
    out.curve.periodic.emplace_back(std::move(y));
  }
  return out;
}

}  // namespace kamtori
