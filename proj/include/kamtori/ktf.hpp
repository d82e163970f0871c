#pragma once

#include <cstring>
#include <fstream>

#include "kamtori/embedding.hpp"

namespace kamtori {

/// KTF torus files: little-endian binary, magic "KTF1", then
///   u32 version, n1, n2, ell
///   u32 axis sizes (n internal, then ell external)
///   i64 degree-map entries (n1 x n, row-major)
///   f64 omega (n), f64 alpha (ell)
///   u32 parameter count, then per parameter u32 name length, ASCII name,
///       f64 value
///   2n blocks of Hermitian-reduced Fourier coefficients in row-major wave
///       order, each coefficient stored as (re, im) f64
///   u64 checksum: byte sum (mod 2^64) of everything after the magic.
namespace ktf {

inline constexpr char magic[4] = {'K', 'T', 'F', '1'};
inline constexpr std::uint32_t version = 1;

namespace detail {

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, 4); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  std::vector<unsigned char> buf;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> b) : buf(std::move(b)) {}
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::int64_t i64() { return take<std::int64_t>(); }
  std::uint64_t u64() { return take<std::uint64_t>(); }
  double f64() { return take<double>(); }
  void raw(void* p, std::size_t n) {
    if (pos + n > buf.size()) throw config_error("KTF: truncated file");
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  }
  std::size_t remaining() const { return buf.size() - pos; }
  std::size_t pos = 0;
  std::vector<unsigned char> buf;

 private:
  template <class T>
  T take() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
};

inline std::uint64_t byte_sum(const unsigned char* p, std::size_t n) {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n; ++i) s += p[i];
  return s;
}

}  // namespace detail

inline void write(const std::string& path, const TorusEmbedding& K) {
  detail::Writer w;
  w.u32(version);
  w.u32(static_cast<std::uint32_t>(K.n1));
  w.u32(static_cast<std::uint32_t>(K.n2));
  w.u32(static_cast<std::uint32_t>(K.ell));
  for (auto s : K.shape().sizes()) w.u32(static_cast<std::uint32_t>(s));
  for (long dmn : K.degree) w.i64(dmn);
  for (real x : K.freq.omega) w.f64(x);
  for (real x : K.freq.alpha) w.f64(x);
  w.u32(static_cast<std::uint32_t>(K.params.size()));
  for (const auto& [name, value] : K.params) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.f64(value);
  }
  for (const auto& comp : K.Kp)
    for (std::size_t i = 0; i < comp.size(); ++i) {
      w.f64(comp[i].real());
      w.f64(comp[i].imag());
    }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("KTF: cannot open for writing: " + path);
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(w.buf.data()),
            static_cast<std::streamsize>(w.buf.size()));
  const std::uint64_t sum = detail::byte_sum(w.buf.data(), w.buf.size());
  out.write(reinterpret_cast<const char*>(&sum), 8);
  if (!out) throw config_error("KTF: write failed: " + path);
}

inline TorusEmbedding read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("KTF: cannot open: " + path);
  char m[4];
  in.read(m, 4);
  if (!in || std::memcmp(m, magic, 4) != 0) throw config_error("KTF: bad magic in " + path);
  std::vector<unsigned char> rest((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (rest.size() < 8) throw config_error("KTF: truncated file " + path);
  std::uint64_t stored;
  std::memcpy(&stored, rest.data() + rest.size() - 8, 8);
  rest.resize(rest.size() - 8);
  if (detail::byte_sum(rest.data(), rest.size()) != stored)
    throw config_error("KTF: checksum mismatch in " + path);

  detail::Reader r(std::move(rest));
  if (r.u32() != version) throw config_error("KTF: unsupported version in " + path);
  TorusEmbedding K;
  K.n1 = r.u32();
  K.n2 = r.u32();
  K.ell = r.u32();
  const std::size_t n = K.n1 + K.n2;
  std::vector<std::size_t> sizes(n + K.ell);
  for (auto& s : sizes) s = r.u32();
  GridShape shape(sizes);
  K.degree.resize(K.n1 * n);
  for (auto& dmn : K.degree) dmn = r.i64();
  K.freq.omega.resize(n);
  for (auto& x : K.freq.omega) x = r.f64();
  K.freq.alpha.resize(K.ell);
  for (auto& x : K.freq.alpha) x = r.f64();
  const std::uint32_t nparams = r.u32();
  for (std::uint32_t i = 0; i < nparams; ++i) {
    std::string name(r.u32(), '\0');
    r.raw(name.data(), name.size());
    K.params[name] = r.f64();
  }
  K.Kp.assign(2 * n, FourierSeries(shape));
  for (auto& comp : K.Kp)
    for (std::size_t i = 0; i < comp.size(); ++i) {
      const real re = r.f64(), im = r.f64();
      comp[i] = cplx(re, im);
    }
  if (r.remaining() != 0) throw config_error("KTF: payload size mismatch in " + path);
  return K;
}

}  // namespace ktf
}  // namespace kamtori
