#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qvdw/core.hpp"
#include "qvdw/geometry.hpp"

//! Two-atom system description. Atom A carries one transition (initially
//! excited), atom B one or more ground-state transitions. All internal
//! quantities are SI; constructors take spectroscopist units.

namespace qvdw {

struct TransitionLine {
  double nu_tilde = 0;          // spectroscopic wavenumber, 1/m
  double omega = 0;             // angular frequency, rad/s
  double mu_mag = 0;            // dipole matrix element magnitude, C*m
  std::optional<Vec3> mu_dir;   // fixed orientation; empty = isotropic
  double gamma = 0;             // linewidth, rad/s
  std::string label;

  TransitionLine() = default;
  TransitionLine(double nu_tilde_per_m, double mu_Cm, double gamma_rad_s,
                 std::optional<Vec3> dir = {}, std::string name = {})
      : nu_tilde(nu_tilde_per_m),
        omega(si::c * 2.0 * pi * nu_tilde_per_m),
        mu_mag(mu_Cm),
        mu_dir(std::move(dir)),
        gamma(gamma_rad_s),
        label(std::move(name)) {
    if (!(nu_tilde > 0)) throw DomainError("transition wavenumber must be positive");
    if (!(mu_mag > 0)) throw DomainError("dipole magnitude must be positive");
    if (gamma < 0) throw DomainError("linewidth must be non-negative");
  }

  static TransitionLine from_cm(double nu_tilde_cm, double mu_debye,
                                double gamma_hz, std::optional<Vec3> dir = {},
                                std::string name = {}) {
    return TransitionLine(nu_tilde_cm * 100.0, mu_debye * si::debye,
                          2.0 * pi * gamma_hz, std::move(dir), std::move(name));
  }

  double k() const { return 2.0 * pi * nu_tilde; }  // angular wavenumber, rad/m
};

struct PairSystem {
  TransitionLine atom_A;
  std::vector<TransitionLine> atom_B_lines;
  Vec3 direction{0, 0, 1};           // unit vector from A towards B
  std::optional<double> R_default;   // metres; absent if only scans are meant
  std::vector<double> detunings;     // omega_A - omega_B per line, rad/s
  std::string name;

  PairSystem(TransitionLine a, std::vector<TransitionLine> b_lines,
             Vec3 dir = {0, 0, 1}, std::optional<double> R_m = {},
             std::string sys_name = {})
      : atom_A(std::move(a)),
        atom_B_lines(std::move(b_lines)),
        direction(dir.normalized()),
        R_default(R_m),
        name(std::move(sys_name)) {
    if (atom_B_lines.empty()) throw DomainError("atom B needs at least one line");
    if (R_default && !(*R_default > 0))
      throw DomainError("separation must be positive");
    detunings.reserve(atom_B_lines.size());
    for (const auto& line : atom_B_lines) {
      const double d = atom_A.omega - line.omega;
      if (d == 0.0)
        throw DomainError("degenerate pair: atom B line resonant with atom A");
      if (atom_A.mu_dir.has_value() != line.mu_dir.has_value())
        throw DomainError(
            "dipole orientation must be fixed for both atoms or neither");
      detunings.push_back(d);
    }
  }

  SeparationGeometry geom() const {
    if (!R_default) throw DomainError("system has no separation set");
    return SeparationGeometry(direction, *R_default);
  }

  //! Plain mean of the B-line frequencies, used for beat-scale estimates.
  double mean_omega_B() const {
    double s = 0;
    for (const auto& line : atom_B_lines) s += line.omega;
    return s / static_cast<double>(atom_B_lines.size());
  }

  double mean_detuning() const { return atom_A.omega - mean_omega_B(); }
};

//==============================================================================
// Regime validation. The model assumes every exchange channel is
// quasi-resonant: linewidths below the detuning, detuning well below the
// optical frequency. The report flags violations but never throws; callers
// decide whether an out-of-regime evaluation is still wanted.
//==============================================================================

struct RegimeReport {
  struct PerLine {
    std::string label;
    double detuning = 0;            // rad/s
    double detuning_over_omega = 0; // |Delta| / mean of the two frequencies
    double gamma_over_detuning = 0; // max(Gamma_A, Gamma_B) / |Delta|
    bool quasi_resonant = false;
    bool linewidth_ok = false;
  };
  std::vector<PerLine> lines;
  bool quasi_resonant = false;  // all lines
  bool linewidth_ok = false;    // all lines
  double observation_window = 0;  // seconds, 2*pi / Gamma_A (inf if undamped)
  double error_scale = 0;         // max over lines of |Delta| / omega
};

inline constexpr double quasi_resonant_ratio_max = 0.1;

inline RegimeReport validate_regime(const PairSystem& sys) {
  RegimeReport rep;
  rep.quasi_resonant = true;
  rep.linewidth_ok = true;
  const double ga = sys.atom_A.gamma;
  rep.observation_window =
      ga > 0 ? 2.0 * pi / ga : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sys.atom_B_lines.size(); ++i) {
    const auto& b = sys.atom_B_lines[i];
    const double d = std::abs(sys.detunings[i]);
    const double omega_bar = 0.5 * (sys.atom_A.omega + b.omega);
    RegimeReport::PerLine pl;
    pl.label = b.label;
    pl.detuning = sys.detunings[i];
    pl.detuning_over_omega = d / omega_bar;
    pl.gamma_over_detuning = std::max(ga, b.gamma) / d;
    pl.linewidth_ok = d > 0.5 * (ga + b.gamma);
    pl.quasi_resonant = ga < d && b.gamma < d &&
                        pl.detuning_over_omega < quasi_resonant_ratio_max;
    rep.quasi_resonant = rep.quasi_resonant && pl.quasi_resonant;
    rep.linewidth_ok = rep.linewidth_ok && pl.linewidth_ok;
    rep.error_scale = std::max(rep.error_scale, pl.detuning_over_omega);
    rep.lines.push_back(std::move(pl));
  }
  return rep;
}

}  // namespace qvdw
