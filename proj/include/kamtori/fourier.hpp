#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>

#include "kamtori/grid.hpp"

namespace kamtori {

/// Hermitian-reduced Fourier coefficients of a real field on the torus,
/// normalized so that v(x) = sum_k v_k exp(2 pi i k.x). The last axis stores
/// k = 0..N/2 only; v_{-k} = conj(v_k) is implicit.
class FourierSeries {
 public:
  FourierSeries() = default;
  explicit FourierSeries(GridShape shape)
      : shape_(std::move(shape)), c_(shape_.spectral_total(), cplx{0, 0}) {}

  const GridShape& shape() const { return shape_; }
  std::size_t size() const { return c_.size(); }
  cplx* data() { return c_.data(); }
  const cplx* data() const { return c_.data(); }
  cplx& operator[](std::size_t i) { return c_[i]; }
  const cplx& operator[](std::size_t i) const { return c_[i]; }

  /// Coefficient for a signed wave vector (any k; conjugate plane resolved).
  cplx coeff(const std::vector<long>& k) const {
    std::vector<long> kk = k;
    bool conj = false;
    const long nlast = static_cast<long>(shape_.size(shape_.rank() - 1));
    long klast = ((kk.back() % nlast) + nlast) % nlast;
    if (klast > nlast / 2) {
      conj = true;
      for (auto& x : kk) x = -x;
    }
    std::size_t flat = 0;
    for (std::size_t a = 0; a < shape_.rank(); ++a) {
      const long n = static_cast<long>(shape_.size(a));
      const bool last = (a + 1 == shape_.rank());
      long i = ((kk[a] % n) + n) % n;
      if (last) {
        if (i > n / 2) throw error("wave vector outside reduced band");
        flat = flat * shape_.reduced_last() + static_cast<std::size_t>(i);
      } else {
        flat = flat * n + static_cast<std::size_t>(i);
      }
    }
    cplx v = c_[flat];
    return conj ? std::conj(v) : v;
  }

  real average() const { return c_.empty() ? 0.0 : c_[0].real(); }

  FourierSeries& operator+=(const FourierSeries& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  FourierSeries& operator-=(const FourierSeries& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  FourierSeries& operator*=(real s) {
    for (auto& z : c_) z *= s;
    return *this;
  }

  real max_abs() const {
    real m = 0;
    for (const auto& z : c_) m = std::max(m, std::abs(z));
    return m;
  }

 private:
  GridShape shape_;
  aligned_vector<cplx> c_;
};

namespace detail {

/// Cached FFTW plans per shape. Planning is mutex-guarded (FFTW's planner is
/// not thread safe); execution uses the new-array interface on buffers from
/// the shared aligned allocator.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache c;
    return c;
  }

  struct Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
  };

  Plans& get(const GridShape& shape) {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = cache_.find(shape.sizes());
    if (it != cache_.end()) return it->second;

    std::vector<int> n(shape.rank());
    for (std::size_t a = 0; a < shape.rank(); ++a)
      n[a] = static_cast<int>(checked_pow2(shape.size(a), "transform axis size"));

    aligned_vector<real> rbuf(shape.total());
    aligned_vector<cplx> cbuf(shape.spectral_total());
    Plans p;
    p.r2c = fftw_plan_dft_r2c(static_cast<int>(n.size()), n.data(), rbuf.data(),
                              reinterpret_cast<fftw_complex*>(cbuf.data()), FFTW_ESTIMATE);
    p.c2r = fftw_plan_dft_c2r(static_cast<int>(n.size()), n.data(),
                              reinterpret_cast<fftw_complex*>(cbuf.data()), rbuf.data(),
                              FFTW_ESTIMATE);
    if (!p.r2c || !p.c2r) throw numerical_error("FFTW plan creation failed");
    return cache_.emplace(shape.sizes(), p).first->second;
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<std::vector<std::size_t>, Plans> cache_;
};

}  // namespace detail

inline FourierSeries grid_to_fourier(const TorusGrid& g) {
  FourierSeries f(g.shape());
  auto& plans = detail::PlanCache::instance().get(g.shape());
  aligned_vector<real> scratch(g.data(), g.data() + g.size());
  fftw_execute_dft_r2c(plans.r2c, scratch.data(),
                       reinterpret_cast<fftw_complex*>(f.data()));
  const real inv = 1.0 / static_cast<real>(g.shape().total());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= inv;
  return f;
}

inline TorusGrid fourier_to_grid(const FourierSeries& f) {
  TorusGrid g(f.shape());
  auto& plans = detail::PlanCache::instance().get(f.shape());
  // multi-d c2r overwrites its input; work on a copy
  aligned_vector<cplx> scratch(f.data(), f.data() + f.size());
  fftw_execute_dft_c2r(plans.c2r, reinterpret_cast<fftw_complex*>(scratch.data()),
                       g.data());
  return g;
}

}  // namespace kamtori
