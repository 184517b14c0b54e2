#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

//! Small shared pieces: SI constants, 3-vector/3-tensor helpers, error types.

namespace qvdw {

using complexd = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

namespace si {
inline constexpr double c = 299792458.0;            // m/s
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double eps0 = 8.8541878128e-12;    // F/m
inline constexpr double debye = 3.33564095198e-30;  // C m
}  // namespace si

//==============================================================================
// Errors. DomainError maps to CLI exit code 1, UsageError to 2.
//==============================================================================

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateGeometry : DomainError {
  using DomainError::DomainError;
};
struct SingularityError : DomainError {
  using DomainError::DomainError;
};
struct FarFieldDomainError : DomainError {
  using DomainError::DomainError;
};
struct MultiLineError : DomainError {
  using DomainError::DomainError;
};
struct ContourAmbiguity : DomainError {
  using DomainError::DomainError;
};
struct NonConvergence : DomainError {
  using DomainError::DomainError;
};
struct InsufficientResolution : DomainError {
  using DomainError::DomainError;
};
struct ParseError : DomainError {
  using DomainError::DomainError;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//==============================================================================
// Minimal fixed-size linear algebra. Only what the dipole tensors need.
//==============================================================================

struct Vec3 {
  double x = 0, y = 0, z = 0;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }

  Vec3 normalized() const {
    const double n = norm();
    if (!(n > 0) || !std::isfinite(n))
      throw DegenerateGeometry("cannot normalize zero or non-finite vector");
    return {x / n, y / n, z / n};
  }

  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

struct Mat3 {
  // row-major
  std::array<double, 9> m{};

  static Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

  static Mat3 outer(const Vec3& a, const Vec3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[3 * i + j] = a[i] * b[j];
    return r;
  }

  double operator()(int i, int j) const { return m[3 * i + j]; }
  double& operator()(int i, int j) { return m[3 * i + j]; }

  Mat3 operator+(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
    return r;
  }
  Mat3 operator-(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] - o.m[i];
    return r;
  }
  Mat3 operator*(double s) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] * s;
    return r;
  }

  double trace() const { return m[0] + m[4] + m[8]; }

  //! Full contraction A_ij B_ij.
  double ddot(const Mat3& o) const {
    double s = 0;
    for (int i = 0; i < 9; ++i) s += m[i] * o.m[i];
    return s;
  }

  double frobenius() const { return std::sqrt(ddot(*this)); }

  //! Bilinear form a_i M_ij b_j.
  double quad(const Vec3& a, const Vec3& b) const {
    double s = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s += a[i] * m[3 * i + j] * b[j];
    return s;
  }
};

inline double sqr(double v) { return v * v; }

//! 64-bit FNV-1a, used to fingerprint configs and datasets.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xf];
  return out;
}

}  // namespace qvdw
