#pragma once

#include "kamtori/fourier.hpp"
#include "kamtori/frequency.hpp"

namespace kamtori {

/// d/dx_axis in Fourier space: multiply mode k by 2 pi i k_axis. Nyquist
/// planes are zeroed (their sine partner is not representable in the reduced
/// band, and an imaginary factor there would break Hermitian symmetry).
inline FourierSeries differentiate(const FourierSeries& f, std::size_t axis) {
  if (axis >= f.shape().rank()) throw config_error("differentiate: axis out of range");
  FourierSeries out(f.shape());
  WaveTable wt(f.shape());
  for_each_mode(f.shape(), [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    for (std::size_t a = 0; a < idx.size(); ++a)
      if (wt.nyquist[a][idx[a]]) { out[flat] = 0; return; }
    const real k = static_cast<real>(wt.k[axis][idx[axis]]);
    out[flat] = f[flat] * cplx(0, two_pi * k);
  });
  return out;
}

/// L_{omega,alpha} f = -(sum omega_i d/dtheta_i + sum alpha_j d/dphi_j) f;
/// mode k is multiplied by -2 pi i (k1.omega + k2.alpha).
inline FourierSeries lie_derivative(const FourierSeries& f, const FrequencyVector& freq) {
  if (freq.dim() != f.shape().rank())
    throw config_error("lie_derivative: frequency/grid dimension mismatch");
  FourierSeries out(f.shape());
  WaveTable wt(f.shape());
  std::vector<long> k(f.shape().rank());
  for_each_mode(f.shape(), [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (wt.nyquist[a][idx[a]]) { out[flat] = 0; return; }
      k[a] = wt.k[a][idx[a]];
    }
    out[flat] = f[flat] * cplx(0, -two_pi * freq.divisor(k));
  });
  return out;
}

inline real average(const FourierSeries& f) { return f.average(); }

struct CohomologyStats {
  real min_divisor = std::numeric_limits<real>::infinity();  // min |k.(w,a)| over nonzero modes
  std::vector<long> min_divisor_mode;
};

/// Solve L_{omega,alpha} u = v - <v> with <u> = 0:
/// u_k = -v_k / (2 pi i (k1.omega + k2.alpha)) for k != 0. The input average
/// is discarded. Exact resonances raise naming the offending mode.
inline FourierSeries solve_cohomological(const FourierSeries& v, const FrequencyVector& freq,
                                         CohomologyStats* stats = nullptr) {
  if (freq.dim() != v.shape().rank())
    throw config_error("solve_cohomological: frequency/grid dimension mismatch");
  FourierSeries out(v.shape());
  WaveTable wt(v.shape());
  std::vector<long> k(v.shape().rank());
  CohomologyStats st;
  for_each_mode(v.shape(), [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    bool zero = true, nyq = false;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      k[a] = wt.k[a][idx[a]];
      if (k[a] != 0) zero = false;
      if (wt.nyquist[a][idx[a]]) nyq = true;
    }
    if (zero || nyq) { out[flat] = 0; return; }
    const real div = freq.divisor(k);
    const real adiv = std::abs(div);
    if (adiv < resonance_floor) {
      std::string msg = "resonance k = (";
      for (std::size_t a = 0; a < k.size(); ++a)
        msg += std::to_string(k[a]) + (a + 1 < k.size() ? "," : ")");
      throw numerical_error("solve_cohomological: exact " + msg);
    }
    if (adiv < st.min_divisor) { st.min_divisor = adiv; st.min_divisor_mode = k; }
    out[flat] = -v[flat] / cplx(0, two_pi * div);
  });
  if (stats) *stats = st;
  return out;
}

/// Sobolev seminorm sqrt(sum_{k != 0} (2 pi |k|_inf)^{2r} |v_k|^2) over the
/// concatenated wave vector; the average mode is excluded. Reduced-band modes
/// count twice for their conjugate partners.
inline real sobolev_norm(const FourierSeries& f, real r) {
  if (r < 0) throw config_error("sobolev_norm: order must be >= 0");
  WaveTable wt(f.shape());
  const std::size_t d = f.shape().rank();
  const long nlast = static_cast<long>(f.shape().size(d - 1));
  real acc = 0;
  for_each_mode(f.shape(), [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    long kinf = 0;
    for (std::size_t a = 0; a < d; ++a) kinf = std::max(kinf, std::labs(wt.k[a][idx[a]]));
    if (kinf == 0) return;
    const long klast = wt.k[d - 1][idx[d - 1]];
    const real mult = (klast == 0 || klast == nlast / 2) ? 1.0 : 2.0;
    const real w = std::pow(two_pi * static_cast<real>(kinf), 2.0 * r);
    acc += mult * w * std::norm(f[flat]);
  });
  return std::sqrt(acc);
}

/// l2 norm of the coefficients with any |k_axis| above band_fraction x Nyquist.
inline real tail_norm(const FourierSeries& f, real band_fraction) {
  if (!(band_fraction > 0.0 && band_fraction < 1.0))
    throw config_error("tail_norm: band_fraction must be in (0,1)");
  WaveTable wt(f.shape());
  const std::size_t d = f.shape().rank();
  const long nlast = static_cast<long>(f.shape().size(d - 1));
  real acc = 0;
  for_each_mode(f.shape(), [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    bool tail = false;
    for (std::size_t a = 0; a < d; ++a) {
      const real cut = band_fraction * static_cast<real>(f.shape().size(a)) / 2.0;
      if (static_cast<real>(std::labs(wt.k[a][idx[a]])) > cut) { tail = true; break; }
    }
    if (!tail) return;
    const long klast = wt.k[d - 1][idx[d - 1]];
    const real mult = (klast == 0 || klast == nlast / 2) ? 1.0 : 2.0;
    acc += mult * std::norm(f[flat]);
  });
  return std::sqrt(acc);
}

/// Per-axis tail power accumulator: l2 mass of modes with |k_axis| > N_axis/4
/// and the total nonzero-mode mass. Accumulating across several component
/// spectra before taking fractions keeps negligible (machine-zero) components
/// from polluting the refinement trigger.
struct TailPower {
  std::vector<real> tail;
  real total = 0;

  void accumulate(const FourierSeries& f) {
    WaveTable wt(f.shape());
    const std::size_t d = f.shape().rank();
    if (tail.empty()) tail.assign(d, 0.0);
    for_each_mode(f.shape(), [&](std::size_t flat, const std::vector<std::size_t>& idx) {
      const real p = std::norm(f[flat]);
      bool zero = true;
      for (std::size_t a = 0; a < d; ++a)
        if (wt.k[a][idx[a]] != 0) { zero = false; break; }
      if (zero) return;
      total += p;
      for (std::size_t a = 0; a < d; ++a)
        if (std::labs(wt.k[a][idx[a]]) > static_cast<long>(f.shape().size(a)) / 4) tail[a] += p;
    });
  }

  std::vector<real> fractions() const {
    std::vector<real> out(tail.size(), 0.0);
    for (std::size_t a = 0; a < tail.size(); ++a)
      out[a] = total > 0 ? std::sqrt(tail[a] / total) : 0.0;
    return out;
  }
};

/// Per-axis tail fractions of a single spectrum.
inline std::vector<real> axis_tail_fractions(const FourierSeries& f) {
  TailPower tp;
  tp.accumulate(f);
  return tp.fractions();
}

/// Zero every coefficient with |v_k| < threshold. Keeps spectral noise from
/// being amplified by small divisors across iterations.
inline void clean(FourierSeries& f, real threshold) {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (std::abs(f[i]) < threshold) f[i] = 0;
}

/// Re-embed a spectrum into a new shape (zero-padding when growing,
/// band truncation when shrinking). Nyquist planes of the source are dropped.
inline FourierSeries resample(const FourierSeries& f, const GridShape& target) {
  if (target.rank() != f.shape().rank()) throw config_error("resample: rank mismatch");
  FourierSeries out(target);
  WaveTable wt(f.shape());
  const std::size_t d = f.shape().rank();
  std::vector<std::size_t> tsizes = target.sizes();
  for_each_mode(f.shape(), [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    std::size_t tflat = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const long k = wt.k[a][idx[a]];
      if (wt.nyquist[a][idx[a]]) return;  // drop ambiguous planes
      const long tn = static_cast<long>(tsizes[a]);
      if (std::labs(k) >= tn / 2) return;  // outside the target band
      const bool last = (a + 1 == d);
      const long i = last ? k : ((k % tn) + tn) % tn;
      tflat = tflat * (last ? target.reduced_last() : tsizes[a]) + static_cast<std::size_t>(i);
    }
    out[tflat] = f[flat];
  });
  return out;
}

/// Parseval check helper: sum over all (full-band) modes of |v_k|^2.
inline real spectral_power(const FourierSeries& f) {
  WaveTable wt(f.shape());
  const std::size_t d = f.shape().rank();
  const long nlast = static_cast<long>(f.shape().size(d - 1));
  real acc = 0;
  for_each_mode(f.shape(), [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    const long klast = wt.k[d - 1][idx[d - 1]];
    const real mult = (klast == 0 || klast == nlast / 2) ? 1.0 : 2.0;
    acc += mult * std::norm(f[flat]);
  });
  return acc;
}

}  // namespace kamtori
