#pragma once

#include <numeric>

#include "kamtori/core.hpp"

namespace kamtori {

/// Axis sizes of a regular grid on the product torus. Axis order is the
/// internal angles first, then the external ones; all sizes are powers of two.
class GridShape {
 public:
  GridShape() = default;
  explicit GridShape(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    for (auto n : sizes_) checked_pow2(n, "grid axis size");
  }

  std::size_t rank() const { return sizes_.size(); }
  std::size_t size(std::size_t axis) const { return sizes_[axis]; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  std::size_t total() const {
    std::size_t t = 1;
    for (auto n : sizes_) t *= n;
    return t;
  }

  /// Number of stored complex coefficients (last axis Hermitian-reduced).
  std::size_t spectral_total() const {
    if (sizes_.empty()) return 0;
    std::size_t t = 1;
    for (std::size_t a = 0; a + 1 < sizes_.size(); ++a) t *= sizes_[a];
    return t * (sizes_.back() / 2 + 1);
  }

  std::size_t reduced_last() const { return sizes_.back() / 2 + 1; }

  bool operator==(const GridShape& o) const { return sizes_ == o.sizes_; }
  bool operator!=(const GridShape& o) const { return !(*this == o); }

 private:
  std::vector<std::size_t> sizes_;
};

/// Per-axis signed wave numbers for the reduced spectral layout. Non-last axes
/// run over 0..N-1 with wrap-around sign; the last axis runs over 0..N/2.
struct WaveTable {
  std::vector<std::vector<long>> k;        // signed wave number per index
  std::vector<std::vector<bool>> nyquist;  // |k| == N/2 flag per index

  explicit WaveTable(const GridShape& s) {
    const std::size_t d = s.rank();
    k.resize(d);
    nyquist.resize(d);
    for (std::size_t a = 0; a < d; ++a) {
      const long n = static_cast<long>(s.size(a));
      const bool last = (a + 1 == d);
      const long m = last ? n / 2 + 1 : n;
      k[a].resize(m);
      nyquist[a].resize(m);
      for (long i = 0; i < m; ++i) {
        long ka = (!last && i > n / 2) ? i - n : i;
        k[a][i] = ka;
        nyquist[a][i] = (std::labs(ka) == n / 2);
      }
    }
  }
};

/// Iterate the reduced spectrum; fn(flat, idx) gets the per-axis indices.
template <class Fn>
inline void for_each_mode(const GridShape& s, Fn&& fn) {
  const std::size_t d = s.rank();
  std::vector<std::size_t> idx(d, 0);
  const std::size_t total = s.spectral_total();
  std::vector<std::size_t> lim(d);
  for (std::size_t a = 0; a < d; ++a)
    lim[a] = (a + 1 == d) ? s.reduced_last() : s.size(a);
  for (std::size_t flat = 0; flat < total; ++flat) {
    fn(flat, idx);
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < lim[a]) break;
      idx[a] = 0;
    }
  }
}

}  // namespace kamtori
