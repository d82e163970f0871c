#pragma once

#include <complex>
#include <span>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace kamtori {

using real = double;
using cplx = std::complex<real>;

inline constexpr real pi = 3.14159265358979323846264338327950288;
inline constexpr real two_pi = 2.0 * pi;

/// Base error for the library. config_error maps to CLI exit code 2,
/// numerical_error to exit code 3.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct config_error : error {
  using error::error;
};
struct numerical_error : error {
  using error::error;
};

/// 64-byte aligned allocator so grid/spectral buffers satisfy FFTW's SIMD
/// alignment and can be used with the new-array execute interface.
template <class T>
struct aligned_allocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  aligned_allocator() noexcept = default;
  template <class U>
  aligned_allocator(const aligned_allocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    if (n == 0) return nullptr;
    void* p = std::aligned_alloc(alignment, ((n * sizeof(T) + alignment - 1) / alignment) * alignment);
    if (!p) throw std::bad_alloc{};
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <class U>
  bool operator==(const aligned_allocator<U>&) const noexcept { return true; }
};

template <class T>
using aligned_vector = std::vector<T, aligned_allocator<T>>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t checked_pow2(std::size_t n, const std::string& what) {
  if (!is_power_of_two(n))
    throw config_error(what + " must be a power of two, got " + std::to_string(n));
  return n;
}

}  // namespace kamtori
