#pragma once

#include <algorithm>
#include <cmath>

#include "kamtori/shape.hpp"

namespace kamtori {

/// Real samples on the regular grid theta_i = i/N (row-major, internal axes
/// first). Periodicity is structural: index arithmetic wraps, nothing is
/// stored twice.
class TorusGrid {
 public:
  TorusGrid() = default;
  explicit TorusGrid(GridShape shape, real fill = 0.0)
      : shape_(std::move(shape)), v_(shape_.total(), fill) {}

  const GridShape& shape() const { return shape_; }
  std::size_t size() const { return v_.size(); }
  real* data() { return v_.data(); }
  const real* data() const { return v_.data(); }
  real& operator[](std::size_t i) { return v_[i]; }
  real operator[](std::size_t i) const { return v_[i]; }

  real max_abs() const {
    real m = 0;
    for (real x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  real mean() const {
    real s = 0;
    for (real x : v_) s += x;
    return v_.empty() ? 0.0 : s / static_cast<real>(v_.size());
  }

  TorusGrid& operator+=(const TorusGrid& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  TorusGrid& operator-=(const TorusGrid& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  TorusGrid& operator*=(real c) {
    for (auto& x : v_) x *= c;
    return *this;
  }

 private:
  GridShape shape_;
  aligned_vector<real> v_;
};

/// fn(flat, angles) with angles the unit-torus coordinates of the node.
template <class Fn>
inline void for_each_node(const GridShape& s, Fn&& fn) {
  const std::size_t d = s.rank();
  std::vector<std::size_t> idx(d, 0);
  std::vector<real> ang(d, 0.0);
  const std::size_t total = s.total();
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (std::size_t a = 0; a < d; ++a)
      ang[a] = static_cast<real>(idx[a]) / static_cast<real>(s.size(a));
    fn(flat, ang);
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < s.size(a)) break;
      idx[a] = 0;
    }
  }
}

}  // namespace kamtori
