#pragma once

#include <optional>

#include "qvdw/core.hpp"

//! Interatomic geometry: separation vector, the transverse/static dipole
//! tensors and the retarded radiation kernel built from them, plus the
//! orientation contractions every energy formula consumes.

namespace qvdw {

struct SeparationGeometry {
  Vec3 R_vec;  // B relative to A, metres

  SeparationGeometry(const Vec3& direction, double R_m)
      : R_vec(direction.normalized() * R_m) {
    if (!(R_m > 0) || !std::isfinite(R_m))
      throw DegenerateGeometry("separation must be positive and finite");
  }

  double R() const { return R_vec.norm(); }
  Vec3 R_hat() const { return R_vec.normalized(); }
};

//! alpha = 1 - n n (transverse projector, tr = 2, alpha:alpha = 2)
//! beta  = 1 - 3 n n (static dipole tensor, tr = 0, beta:beta = 6)
struct GeometryTensors {
  Mat3 alpha;
  Mat3 beta;
  Vec3 unit;
};

inline GeometryTensors make_tensors(const SeparationGeometry& g) {
  const Vec3 n = g.R_hat();
  const Mat3 nn = Mat3::outer(n, n);
  return {Mat3::identity() - nn, Mat3::identity() - nn * 3.0, n};
}

namespace detail {

//! cos(x)/x^2 - sin(x)/x^3, series form near zero where the direct
//! expression loses all digits. Limit value -1/3.
inline double cos2_sin3(double x) {
  const double x2 = x * x;
  if (std::abs(x) < 0.35) {
    // sum over n >= 1 of (-1)^n x^(2n-2) * 2n/(2n+1)!
    double term = -1.0 / 3.0, sum = 0;
    for (int n = 1; n < 12; ++n) {
      sum += term;
      term *= -x2 * (2.0 * n + 2.0) / ((2.0 * n) * (2.0 * n + 2.0) * (2.0 * n + 3.0));
    }
    return sum;
  }
  return std::cos(x) / x2 - std::sin(x) / (x2 * x);
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
  }
  return std::sin(x) / x;
}

}  // namespace detail

//! Retarded dipole-radiation kernel F(x) = alpha sinc x + beta (cos x/x^2 - sin x/x^3).
//! Even in x. x = 0 is rejected: the combination has a finite limit but the
//! callers always work on grids that exclude zero wavenumber.
inline Mat3 radiation_kernel(double x, const GeometryTensors& t) {
  if (x == 0.0) throw SingularityError("radiation kernel: x = 0");
  return t.alpha * detail::sinc(x) + t.beta * detail::cos2_sin3(x);
}

//==============================================================================
// Orientation contractions.
//
// The energy is bilinear in the kernel's (alpha, beta) parts contracted with
// the dipole vectors of the two atoms, so three scalars carry all orientation
// and magnitude information:
//   s_aa = (mu_A.alpha.mu_B)^2, s_bb = (mu_A.beta.mu_B)^2, s_ab = their product.
// The isotropic pair average uses <u_i u_q> = delta_iq/3 per atom, which turns
// the products into Frobenius contractions alpha:alpha = alpha:beta = 2 and
// beta:beta = 6, each divided by 9 and weighted by the magnitudes squared.
//==============================================================================

enum class OrientationMode { fixed, isotropic };

struct DipoleContractions {
  double aa = 0, ab = 0, bb = 0;  // quartic in the dipole magnitudes, (C m)^4
  OrientationMode mode = OrientationMode::isotropic;
};

inline DipoleContractions make_contractions(const GeometryTensors& t,
                                            double mu_a, const std::optional<Vec3>& dir_a,
                                            double mu_b, const std::optional<Vec3>& dir_b) {
  const double m2 = sqr(mu_a * mu_b);
  if (!dir_a || !dir_b)
    return {m2 * 2.0 / 9.0, m2 * 2.0 / 9.0, m2 * 2.0 / 3.0,
            OrientationMode::isotropic};
  const Vec3 ua = dir_a->normalized(), ub = dir_b->normalized();
  const double a = mu_a * mu_b * t.alpha.quad(ua, ub);
  const double b = mu_a * mu_b * t.beta.quad(ua, ub);
  return {a * a, a * b, b * b, OrientationMode::fixed};
}

}  // namespace qvdw
