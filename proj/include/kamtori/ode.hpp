#pragma once

#include <cmath>
#include <functional>

#include "kamtori/core.hpp"

namespace kamtori {

/// Hairer's explicit Runge-Kutta 8(5,3) pair (DOP853): 12 stages, 8th order
/// propagation with a 5th/3rd order embedded error estimate and PI step
/// control. Right-hand sides are f(t, y, dy).
class Dop853 {
 public:
  using Rhs = std::function<void(real, const real*, real*)>;

  struct Options {
    real rtol = 1e-13;
    real atol = 1e-13;
    real h_init = 0.0;   // 0: choose automatically
    real h_max = 0.0;    // 0: span length
    long max_steps = 2'000'000;
  };

  Dop853(std::size_t dim, Rhs rhs, Options opt)
      : dim_(dim), rhs_(std::move(rhs)), opt_(opt) {
    for (auto* v : {&y_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &k8_, &k9_, &k10_, &yt_, &ye_})
      v->assign(dim_, 0.0);
  }

  /// Integrate from (t0, y0) to t1; y0 is updated in place. step_cb, when
  /// set, observes every accepted step (t_prev, t_new, y_prev, y_new, f_prev)
  /// before the state is overwritten, enabling dense event work downstream.
  void integrate(real& t0, std::vector<real>& y0, real t1,
                 const std::function<void(real, real, const real*, const real*, const real*)>&
                     step_cb = nullptr) {
    if (y0.size() != dim_) throw config_error("Dop853: state dimension mismatch");
    real t = t0;
    const real dir = (t1 >= t0) ? 1.0 : -1.0;
    real span = std::abs(t1 - t0);
    if (span == 0) return;
    const real hmax = opt_.h_max > 0 ? opt_.h_max : span;

    y_ = y0;
    rhs_(t, y_.data(), k1_.data());
    real h = opt_.h_init > 0 ? opt_.h_init : initial_step(t, dir, hmax);
    long nsteps = 0;

    while (dir * (t1 - t) > 0) {
      if (++nsteps > opt_.max_steps) throw numerical_error("Dop853: step limit exceeded");
      h = std::min(h, hmax);
      bool last = false;
      if (dir * (t + dir * h - t1) >= 0) {
        h = std::abs(t1 - t);
        last = true;
      }
      if (h < 1e-15 * std::max<real>(1.0, std::abs(t)))
        throw numerical_error("Dop853: step size underflow (stiffness?)");

      const real hd = dir * h;
      const real err = attempt_step(t, hd);
      if (err <= 1.0) {
        if (step_cb) step_cb(t, t + hd, y_.data(), yt_.data(), k1_.data());
        t += hd;
        y_.swap(yt_);
        k1_.swap(k4_);  // k4_ holds f(t_new, y_new) after attempt_step
        real fac = std::pow(std::max<real>(err, 1e-30), 0.125) / 0.9;
        fac = std::clamp<real>(fac, 1.0 / 6.0, 3.0);
        h = h / fac;
        if (last && dir * (t1 - t) <= 1e-15 * std::max<real>(1.0, std::abs(t1))) break;
      } else {
        h = h / std::min<real>(6.0, std::pow(err, 0.125) / 0.9);
      }
    }
    y0 = y_;
    t0 = t;
  }

 private:
  real initial_step(real t, real dir, real hmax) const {
    real dnf = 0, dny = 0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const real sk = opt_.atol + opt_.rtol * std::abs(y_[i]);
      dnf += (k1_[i] / sk) * (k1_[i] / sk);
      dny += (y_[i] / sk) * (y_[i] / sk);
    }
    real h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, hmax);
    (void)t; (void)dir;
    return h;
  }

  /// One trial step of size hd from (t, y_). On success yt_ holds y_new and
  /// k4_ holds f(t+hd, y_new). Returns the scaled error estimate.
  real attempt_step(real t, real hd) {
    auto& y = y_;
    auto f = [&](real tt, std::vector<real>& yy, std::vector<real>& kk) {
      rhs_(tt, yy.data(), kk.data());
    };
    const std::size_t nd = dim_;
    std::vector<real>& w = ye_;

    auto stage = [&](std::vector<real>& kout, real c, auto&&... terms) {
      auto acc = [&](std::size_t i) {
        real s = 0;
        ((s += terms.first * terms.second[i]), ...);
        return s;
      };
      for (std::size_t i = 0; i < nd; ++i) w[i] = y[i] + hd * acc(i);
      f(t + c * hd, w, kout);
    };

    using P = std::pair<real, std::vector<real>&>;
    stage(k2_, c2, P{a21, k1_});
    stage(k3_, c3, P{a31, k1_}, P{a32, k2_});
    stage(k4_, c4, P{a41, k1_}, P{a43, k3_});
    stage(k5_, c5, P{a51, k1_}, P{a53, k3_}, P{a54, k4_});
    stage(k6_, c6, P{a61, k1_}, P{a64, k4_}, P{a65, k5_});
    stage(k7_, c7, P{a71, k1_}, P{a74, k4_}, P{a75, k5_}, P{a76, k6_});
    stage(k8_, c8, P{a81, k1_}, P{a84, k4_}, P{a85, k5_}, P{a86, k6_}, P{a87, k7_});
    stage(k9_, c9, P{a91, k1_}, P{a94, k4_}, P{a95, k5_}, P{a96, k6_}, P{a97, k7_},
          P{a98, k8_});
    stage(k10_, c10, P{a101, k1_}, P{a104, k4_}, P{a105, k5_}, P{a106, k6_}, P{a107, k7_},
          P{a108, k8_}, P{a109, k9_});
    stage(k2_, c11, P{a111, k1_}, P{a114, k4_}, P{a115, k5_}, P{a116, k6_}, P{a117, k7_},
          P{a118, k8_}, P{a119, k9_}, P{a1110, k10_});
    // stage 12 (c = 1)
    for (std::size_t i = 0; i < nd; ++i)
      w[i] = y[i] + hd * (a121 * k1_[i] + a124 * k4_[i] + a125 * k5_[i] + a126 * k6_[i] +
                          a127 * k7_[i] + a128 * k8_[i] + a129 * k9_[i] + a1210 * k10_[i] +
                          a1211 * k2_[i]);
    f(t + hd, w, k3_);

    // 8th order solution
    for (std::size_t i = 0; i < nd; ++i) {
      k4_[i] = b1 * k1_[i] + b6 * k6_[i] + b7 * k7_[i] + b8 * k8_[i] + b9 * k9_[i] +
               b10 * k10_[i] + b11 * k2_[i] + b12 * k3_[i];
      yt_[i] = y[i] + hd * k4_[i];
    }

    // embedded error, Hairer's combination of order-5 and order-3 estimates
    real err2 = 0, err = 0;
    for (std::size_t i = 0; i < nd; ++i) {
      const real sk = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(yt_[i]));
      const real erri = k4_[i] - bhh1 * k1_[i] - bhh2 * k9_[i] - bhh3 * k3_[i];
      err2 += (erri / sk) * (erri / sk);
      const real erri5 = er1 * k1_[i] + er6 * k6_[i] + er7 * k7_[i] + er8 * k8_[i] +
                         er9 * k9_[i] + er10 * k10_[i] + er11 * k2_[i] + er12 * k3_[i];
      err += (erri5 / sk) * (erri5 / sk);
    }
    real deno = err + 0.01 * err2;
    if (deno <= 0) deno = 1.0;
    const real scaled = std::abs(hd) * err * std::sqrt(1.0 / (static_cast<real>(nd) * deno));

    // f at the new point for FSAL-style reuse on acceptance
    rhs_(t + hd, yt_.data(), k4_.data());
    return scaled;
  }

  std::size_t dim_;
  Rhs rhs_;
  Options opt_;
  std::vector<real> y_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, k8_, k9_, k10_, yt_, ye_;

  // Dormand-Prince 8(5,3) tableau (Hairer, Norsett, Wanner)
  static constexpr real c2 = 0.526001519587677318785587544488e-01;
  static constexpr real c3 = 0.789002279381515978178381316732e-01;
  static constexpr real c4 = 0.118350341907227396726757197510e+00;
  static constexpr real c5 = 0.281649658092772603273242802490e+00;
  static constexpr real c6 = 0.333333333333333333333333333333e+00;
  static constexpr real c7 = 0.25e+00;
  static constexpr real c8 = 0.307692307692307692307692307692e+00;
  static constexpr real c9 = 0.651282051282051282051282051282e+00;
  static constexpr real c10 = 0.6e+00;
  static constexpr real c11 = 0.857142857142857142857142857142e+00;

  static constexpr real b1 = 5.42937341165687622380535766363e-2;
  static constexpr real b6 = 4.45031289275240888144113950566e0;
  static constexpr real b7 = 1.89151789931450038304281599044e0;
  static constexpr real b8 = -5.8012039600105847814672114227e0;
  static constexpr real b9 = 3.1116436695781989440891606237e-1;
  static constexpr real b10 = -1.52160949662516078556178806805e-1;
  static constexpr real b11 = 2.01365400804030348374776537501e-1;
  static constexpr real b12 = 4.47106157277725905176885569043e-2;

  static constexpr real bhh1 = 0.244094488188976377952755905512e+00;
  static constexpr real bhh2 = 0.733846688281611857341361741547e+00;
  static constexpr real bhh3 = 0.220588235294117647058823529412e-01;

  static constexpr real er1 = 0.1312004499419488073250102996e-01;
  static constexpr real er6 = -0.1225156446376204440720569753e+01;
  static constexpr real er7 = -0.4957589496572501915214079952e+00;
  static constexpr real er8 = 0.1664377182454986536961530415e+01;
  static constexpr real er9 = -0.3503288487499736816886487290e+00;
  static constexpr real er10 = 0.3341791187130174790297318841e+00;
  static constexpr real er11 = 0.8192320648511571246570742613e-01;
  static constexpr real er12 = -0.2235530786388629525884427845e-01;

  static constexpr real a21 = 5.26001519587677318785587544488e-2;
  static constexpr real a31 = 1.97250569845378994544595329183e-2;
  static constexpr real a32 = 5.91751709536136983633785987549e-2;
  static constexpr real a41 = 2.95875854768068491816892993775e-2;
  static constexpr real a43 = 8.87627564304205475450678981324e-2;
  static constexpr real a51 = 2.41365134159266685502369798665e-1;
  static constexpr real a53 = -8.84549479328286085344864962717e-1;
  static constexpr real a54 = 9.24834003261792003115737966543e-1;
  static constexpr real a61 = 3.7037037037037037037037037037e-2;
  static constexpr real a64 = 1.70828608729473871279604482173e-1;
  static constexpr real a65 = 1.25467687566822425016691814123e-1;
  static constexpr real a71 = 3.7109375e-2;
  static constexpr real a74 = 1.70252211019544039314978060272e-1;
  static constexpr real a75 = 6.02165389804559606850219397283e-2;
  static constexpr real a76 = -1.7578125e-2;
  static constexpr real a81 = 3.70920001185047927108779319836e-2;
  static constexpr real a84 = 1.70383925712239993810214054705e-1;
  static constexpr real a85 = 1.07262030446373284651809199168e-1;
  static constexpr real a86 = -1.53194377486244017527936158236e-2;
  static constexpr real a87 = 8.27378916381402288758473766002e-3;
  static constexpr real a91 = 6.24110958716075717114429577812e-1;
  static constexpr real a94 = -3.36089262944694129406857109825e0;
  static constexpr real a95 = -8.68219346841726006818189891453e-1;
  static constexpr real a96 = 2.75920996994467083049415600797e1;
  static constexpr real a97 = 2.01540675504778934086186788979e1;
  static constexpr real a98 = -4.34898841810699588477366255144e1;
  static constexpr real a101 = 4.77662536438264365890433908527e-1;
  static constexpr real a104 = -2.48811461997166764192642586468e0;
  static constexpr real a105 = -5.90290826836842996371446475743e-1;
  static constexpr real a106 = 2.12300514481811942347288949897e1;
  static constexpr real a107 = 1.52792336328824235832596922938e1;
  static constexpr real a108 = -3.32882109689848629194453265587e1;
  static constexpr real a109 = -2.03312017085086261358222928593e-2;
  static constexpr real a111 = -9.3714243008598732571704021658e-1;
  static constexpr real a114 = 5.18637242884406370830023853209e0;
  static constexpr real a115 = 1.09143734899672957818500254654e0;
  static constexpr real a116 = -8.14978701074692612513997267357e0;
  static constexpr real a117 = -1.85200656599969598641566180701e1;
  static constexpr real a118 = 2.27394870993505042818970056734e1;
  static constexpr real a119 = 2.49360555267965238987089396762e0;
  static constexpr real a1110 = -3.0467644718982195003823669022e0;
  static constexpr real a121 = 2.27331014751653820792359768449e0;
  static constexpr real a124 = -1.05344954667372501984066689879e1;
  static constexpr real a125 = -2.00087205822486249909675718444e0;
  static constexpr real a126 = -1.79589318631187989172765950534e1;
  static constexpr real a127 = 2.79488845294199600508499808837e1;
  static constexpr real a128 = -2.85899827713502369474065508674e0;
  static constexpr real a129 = -8.87285693353062954433549289258e0;
  static constexpr real a1210 = 1.23605671757943030647266201528e1;
  static constexpr real a1211 = 6.43392746015763530355970484046e-1;
};

}  // namespace kamtori
