#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "qvdw/atom_model.hpp"
#include "qvdw/geometry.hpp"

//! Closed-form interaction energy of the excited/ground pair after the
//! frequency integrals are done: a time-independent group oscillating at
//! twice the A wavenumber plus, once the earliest round trip 2R/c has
//! elapsed, a retarded group at twice the B wavenumber whose phase advances
//! with the detuning. Far-field and adiabatic reductions live here too.

namespace qvdw {

//==============================================================================
// Dimensionless per-line pieces. x = kR, tau = cT/R, theta = detuning * T.
// Orientation enters only through the three contraction weights.
//==============================================================================

namespace cf {

inline double poly_even(double x, const DipoleContractions& s) {
  const double x2 = x * x;
  return s.bb - x2 * (s.bb + 2.0 * s.ab) + x2 * x2 * s.aa;
}

inline double poly_odd(double x, const DipoleContractions& s) {
  return 2.0 * x * (s.bb - x * x * s.ab);
}

//! Time-independent group, phase 2x.
inline double stationary_group(double x, const DipoleContractions& s) {
  return poly_even(x, s) * std::cos(2.0 * x) + poly_odd(x, s) * std::sin(2.0 * x);
}

//! Retarded group, phase 2x + theta.
inline double transient_group(double x, double theta,
                              const DipoleContractions& s) {
  return poly_even(x, s) * std::cos(2.0 * x + theta) +
         poly_odd(x, s) * std::sin(2.0 * x + theta);
}

inline double core(double x_a, double x_b, double theta,
                   const DipoleContractions& s) {
  return stationary_group(x_a, s) - transient_group(x_b, theta, s);
}

//! Leading large-x part: only the transverse x^4 terms survive.
inline double far_field_core(double x_a, double x_b, double theta, double s_aa) {
  const double xa4 = sqr(sqr(x_a)), xb4 = sqr(sqr(x_b));
  return s_aa * (xa4 * std::cos(2.0 * x_a) - xb4 * std::cos(2.0 * x_b + theta));
}

//! Product form with the additional xb^4 -> xa^4 replacement (error of the
//! order of the detuning over the optical frequency).
inline double far_field_factorized(double x_a, double x_b, double tau,
                                   double s_aa) {
  const double half_sum = x_a * (1.0 + 0.5 * tau) + x_b * (1.0 - 0.5 * tau);
  const double half_diff = (x_a - x_b) * (1.0 - 0.5 * tau);
  return -2.0 * s_aa * sqr(sqr(x_a)) * std::sin(half_sum) * std::sin(half_diff);
}

//! Exact two-product rewriting of far_field_core, no approximation:
//!   p cosX - q cosY = -(p+q) sin((X+Y)/2) sin((X-Y)/2)
//!                     + (p-q) cos((X+Y)/2) cos((X-Y)/2),  p,q = halves of x^4.
inline double far_field_two_product(double x_a, double x_b, double theta,
                                    double s_aa) {
  const double xa4 = sqr(sqr(x_a)), xb4 = sqr(sqr(x_b));
  const double hs = 0.5 * (2.0 * x_a + 2.0 * x_b + theta);
  const double hd = 0.5 * (2.0 * x_a - 2.0 * x_b - theta);
  return s_aa * (-(xa4 + xb4) * std::sin(hs) * std::sin(hd) +
                 (xa4 - xb4) * std::cos(hs) * std::cos(hd));
}

}  // namespace cf

//==============================================================================
// Assembly over lines, units, result record.
//==============================================================================

struct EnergyResult {
  double value = 0;         // joules
  double value_scaled = 0;  // value * R^6 / U0, dimensionless
  std::string method;
  double error_scale = 0;   // size of neglected terms, max |detuning|/frequency
  std::optional<double> value_factorized;  // far-field product form, joules
};

namespace detail {

//! Signed energy prefactor of one B line, 1 / [(4 pi eps0)^2 hbar Delta].
//! The dipole magnitudes already sit inside the contractions.
inline double line_prefactor(const PairSystem& sys, std::size_t i) {
  const double fourpieps = 4.0 * pi * si::eps0;
  return 1.0 / (sqr(fourpieps) * si::hbar * sys.detunings[i]);
}

//! Scale used for the dimensionless output; positive by construction.
inline double u0_scale(const PairSystem& sys) {
  const double mu2a = sqr(sys.atom_A.mu_mag);
  double mu2b_sum = 0;
  for (const auto& b : sys.atom_B_lines) mu2b_sum += sqr(b.mu_mag);
  const double fourpieps = 4.0 * pi * si::eps0;
  return mu2a * mu2b_sum /
         (sqr(fourpieps) * si::hbar * std::abs(sys.mean_detuning()));
}

inline double regime_error_scale(const PairSystem& sys) {
  double m = 0;
  for (std::size_t i = 0; i < sys.atom_B_lines.size(); ++i)
    m = std::max(m, std::abs(sys.detunings[i]) /
                        (0.5 * (sys.atom_A.omega + sys.atom_B_lines[i].omega)));
  return m;
}

struct LineGeometry {
  double x_a = 0, x_b = 0;
  DipoleContractions s;
};

inline LineGeometry line_geometry(const PairSystem& sys, double R_m,
                                  std::size_t i, const GeometryTensors& t) {
  LineGeometry lg;
  lg.x_a = sys.atom_A.k() * R_m;
  lg.x_b = sys.atom_B_lines[i].k() * R_m;
  lg.s = make_contractions(t, sys.atom_A.mu_mag, sys.atom_A.mu_dir,
                           sys.atom_B_lines[i].mu_mag, sys.atom_B_lines[i].mu_dir);
  return lg;
}

inline GeometryTensors tensors_for(const PairSystem& sys, double R_m) {
  return make_tensors(SeparationGeometry(sys.direction, R_m));
}

inline EnergyResult finish(const PairSystem& sys, double R_m, double sum,
                           std::string method,
                           std::optional<double> factorized_sum = {}) {
  EnergyResult r;
  const double r6 = std::pow(R_m, 6);
  r.value = sum / r6;
  r.value_scaled = sum / u0_scale(sys);
  r.method = std::move(method);
  r.error_scale = regime_error_scale(sys);
  if (factorized_sum) r.value_factorized = *factorized_sum / r6;
  return r;
}

}  // namespace detail

//! Compared against the round-trip time in the same form callers compute it,
//! so T = 2R/c built by that division is gated to zero.
inline bool before_front(double R_m, double T_s) {
  return T_s <= 2.0 * R_m / si::c;
}

//! Full result at explicit separation. Zero exactly up to and including the
//! front T = 2R/c, then the sum over B lines of the closed form.
inline EnergyResult energy_full_at(const PairSystem& sys, double R_m, double T_s) {
  if (T_s < 0) throw DomainError("time must be non-negative");
  if (before_front(R_m, T_s)) {
    EnergyResult r = detail::finish(sys, R_m, 0.0, "closed-form");
    return r;
  }
  const GeometryTensors t = detail::tensors_for(sys, R_m);
  double sum = 0;
  for (std::size_t i = 0; i < sys.atom_B_lines.size(); ++i) {
    const auto lg = detail::line_geometry(sys, R_m, i, t);
    const double theta = sys.detunings[i] * T_s;
    sum += detail::line_prefactor(sys, i) * cf::core(lg.x_a, lg.x_b, theta, lg.s);
  }
  return detail::finish(sys, R_m, sum, "closed-form");
}

inline EnergyResult energy_full(const PairSystem& sys, double T_s) {
  return energy_full_at(sys, sys.geom().R(), T_s);
}

inline constexpr double far_field_min_kR = 10.0;

//! Keeps only the transverse 1/R^2 terms. Requires kR above threshold for
//! every participating wavenumber. The result also carries the product form,
//! which additionally replaces the B-line x^4 weight by the A one; an internal
//! consistency check compares the kept terms against their exact two-product
//! rewriting.
inline EnergyResult energy_far_field_at(const PairSystem& sys, double R_m,
                                        double T_s,
                                        double min_kR = far_field_min_kR) {
  if (T_s < 0) throw DomainError("time must be non-negative");
  double min_x = sys.atom_A.k() * R_m;
  for (const auto& b : sys.atom_B_lines) min_x = std::min(min_x, b.k() * R_m);
  if (min_x < min_kR)
    throw FarFieldDomainError("far-field form needs kR >= " +
                              std::to_string(min_kR));
  if (before_front(R_m, T_s)) {
    EnergyResult r = detail::finish(sys, R_m, 0.0, "far-field", 0.0);
    return r;
  }
  const GeometryTensors t = detail::tensors_for(sys, R_m);
  const double tau = si::c * T_s / R_m;
  double sum = 0, fact_sum = 0;
  for (std::size_t i = 0; i < sys.atom_B_lines.size(); ++i) {
    const auto lg = detail::line_geometry(sys, R_m, i, t);
    const double theta = sys.detunings[i] * T_s;
    const double pref = detail::line_prefactor(sys, i);
    const double direct = cf::far_field_core(lg.x_a, lg.x_b, theta, lg.s.aa);
    const double rewritten =
        cf::far_field_two_product(lg.x_a, lg.x_b, theta, lg.s.aa);
    const double scale = lg.s.aa * (sqr(sqr(lg.x_a)) + sqr(sqr(lg.x_b)));
    if (scale > 0 && std::abs(direct - rewritten) > 1e-9 * scale)
      throw DomainError("far-field internal consistency check failed");
    sum += pref * direct;
    fact_sum += pref * cf::far_field_factorized(lg.x_a, lg.x_b, tau, lg.s.aa);
  }
  return detail::finish(sys, R_m, sum, "far-field", fact_sum);
}

inline EnergyResult energy_far_field(const PairSystem& sys, double T_s,
                                     double min_kR = far_field_min_kR) {
  return energy_far_field_at(sys, sys.geom().R(), T_s, min_kR);
}

//! Time-independent group only; equals the long-window time average of the
//! full result for any separation.
inline EnergyResult energy_adiabatic_at(const PairSystem& sys, double R_m) {
  const GeometryTensors t = detail::tensors_for(sys, R_m);
  double sum = 0;
  for (std::size_t i = 0; i < sys.atom_B_lines.size(); ++i) {
    const auto lg = detail::line_geometry(sys, R_m, i, t);
    sum += detail::line_prefactor(sys, i) * cf::stationary_group(lg.x_a, lg.s);
  }
  return detail::finish(sys, R_m, sum, "adiabatic");
}

inline EnergyResult energy_adiabatic(const PairSystem& sys) {
  return energy_adiabatic_at(sys, sys.geom().R());
}

//! Uniform window mean of energy_full over [T0, T0 + dT], done analytically.
//! The pre-front part of the window contributes zero; inside the window the
//! retarded cosine and sine average to their antiderivatives at the ends.
inline EnergyResult time_average_at(const PairSystem& sys, double R_m,
                                    double T0_s, double dT_s) {
  if (!(dT_s > 0)) throw DomainError("averaging window must be positive");
  const double T1 = T0_s + dT_s;
  const double front = 2.0 * R_m / si::c;
  if (T1 <= front) return detail::finish(sys, R_m, 0.0, "closed-form");
  const double lo = std::max(T0_s, front);
  const GeometryTensors t = detail::tensors_for(sys, R_m);
  double sum = 0;
  for (std::size_t i = 0; i < sys.atom_B_lines.size(); ++i) {
    const auto lg = detail::line_geometry(sys, R_m, i, t);
    const double d = sys.detunings[i];
    const double phase_lo = 2.0 * lg.x_b + d * lo;
    const double phase_hi = 2.0 * lg.x_b + d * T1;
    // means of cos/sin(2x_b + d T) over [lo, T1], times the covered fraction
    const double inv = 1.0 / (d * dT_s);
    const double mean_cos = (std::sin(phase_hi) - std::sin(phase_lo)) * inv;
    const double mean_sin = -(std::cos(phase_hi) - std::cos(phase_lo)) * inv;
    const double stationary =
        cf::stationary_group(lg.x_a, lg.s) * ((T1 - lo) / dT_s);
    const double transient = cf::poly_even(lg.x_b, lg.s) * mean_cos +
                             cf::poly_odd(lg.x_b, lg.s) * mean_sin;
    sum += detail::line_prefactor(sys, i) * (stationary - transient);
  }
  return detail::finish(sys, R_m, sum, "closed-form");
}

//! Probability that atom B has been excited, normalized to unit amplitude.
//! Defined per line, so multi-line systems are rejected.
inline double excitation_probability_at(const PairSystem& sys, double R_m,
                                        double T_s) {
  if (sys.atom_B_lines.size() != 1)
    throw MultiLineError("excitation probability is defined per line");
  if (T_s <= R_m / si::c) return 0.0;
  return sqr(std::sin(0.5 * sys.detunings[0] * (R_m / si::c - T_s)));
}

inline double excitation_probability(const PairSystem& sys, double T_s) {
  return excitation_probability_at(sys, sys.geom().R(), T_s);
}

}  // namespace qvdw
