#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qvdw/config_io.hpp"
#include "qvdw/contour.hpp"
#include "qvdw/pv_quadrature.hpp"

//! Grid scans over separation or time, producing tabular datasets ready for
//! serialization, plus windowed time averages. Rows are evaluated in parallel
//! (VDW_THREADS caps the worker count) into preallocated slots, so the result
//! is identical for any thread count.

namespace qvdw {

enum class ScanVariable { R, T };
enum class Method { closed_form, far_field, adiabatic, causal, quadrature };
enum class EnergyUnits { rad_per_s, joules, scaled };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::closed_form: return "closed-form";
    case Method::far_field: return "far-field";
    case Method::adiabatic: return "adiabatic";
    case Method::causal: return "causal";
    case Method::quadrature: return "quadrature";
  }
  return {};
}

inline Method method_from_name(const std::string& name) {
  for (Method m : {Method::closed_form, Method::far_field, Method::adiabatic,
                   Method::causal, Method::quadrature})
    if (method_name(m) == name) return m;
  throw UsageError("unknown method '" + name + "'");
}

inline std::string units_label(EnergyUnits u) {
  switch (u) {
    case EnergyUnits::rad_per_s: return "rad/s";
    case EnergyUnits::joules: return "J";
    case EnergyUnits::scaled: return "1";
  }
  return {};
}

struct ScanSpec {
  ScanVariable variable = ScanVariable::R;
  double min = 0, max = 0;  // metres for R scans, seconds for T scans
  int points = 0;
  double fixed = 0;  // the variable held constant
  std::vector<Method> methods;
  bool per_line = false;  // add one column per B line per method
  EnergyUnits units = EnergyUnits::rad_per_s;
  std::string id;
};

struct DatasetColumn {
  std::string name;
  std::string unit;
  std::vector<double> values;  // NaN marks a cell whose evaluation failed
};

struct Dataset {
  std::string id;
  std::string variable;  // "R" or "T"
  double fixed_value = 0;
  std::string fixed_unit;
  std::vector<DatasetColumn> columns;  // first column is the grid
  std::string system_hash;             // fingerprint of the system config
  std::string timestamp;               // ISO 8601 UTC; not part of any hash
  std::vector<std::string> diagnostics;

  const DatasetColumn& column(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return c;
    throw UsageError("dataset has no column '" + name + "'");
  }

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].values.size(); }
};

namespace scan_detail {

inline int thread_count(int rows) {
  long n = 0;
  if (const char* env = std::getenv("VDW_THREADS")) {
    char* end = nullptr;
    n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1)
      throw UsageError("VDW_THREADS must be a positive integer");
  } else {
    n = static_cast<long>(std::thread::hardware_concurrency());
    n = std::clamp(n, 1l, 8l);
  }
  return static_cast<int>(std::min<long>({n, 32, std::max(rows, 1)}));
}

inline std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline EnergyResult eval_cell(const PairSystem& sys, Method m, double R_m,
                              double T_s, const QuadratureConfig& qcfg) {
  switch (m) {
    case Method::closed_form: return energy_full_at(sys, R_m, T_s);
    case Method::far_field: return energy_far_field_at(sys, R_m, T_s);
    case Method::adiabatic: return energy_adiabatic_at(sys, R_m);
    case Method::causal: return evaluate_causal(sys, R_m, T_s);
    case Method::quadrature: return causal_by_quadrature(sys, R_m, T_s, qcfg);
  }
  throw UsageError("unknown method");
}

inline double in_units(const EnergyResult& r, EnergyUnits u, double R_m,
                       double u0_full) {
  switch (u) {
    case EnergyUnits::rad_per_s: return r.value / si::hbar;
    case EnergyUnits::joules: return r.value;
    // scale by the full system's U0 so per-line columns stay additive
    case EnergyUnits::scaled: return r.value * std::pow(R_m, 6) / u0_full;
  }
  return 0;
}

}  // namespace scan_detail

inline Dataset scan(const PairSystem& sys, const ScanSpec& spec,
                    const QuadratureConfig& qcfg = {}) {
  if (spec.points < 1) throw UsageError("scan needs at least one point");
  if (spec.points == 1) {
    if (spec.min != spec.max)
      throw UsageError("a single-point scan needs min == max");
  } else if (!(spec.max > spec.min)) {
    throw UsageError("scan range must satisfy max > min");
  }
  if (spec.methods.empty()) throw UsageError("scan needs at least one method");
  for (std::size_t i = 0; i < spec.methods.size(); ++i)
    for (std::size_t j = i + 1; j < spec.methods.size(); ++j)
      if (spec.methods[i] == spec.methods[j])
        throw UsageError("duplicate method in scan spec");

  const bool r_scan = spec.variable == ScanVariable::R;
  if (r_scan) {
    if (!(spec.min > 0)) throw DomainError("separation must be positive");
    if (spec.fixed < 0) throw DomainError("time must be non-negative");
  } else {
    if (spec.min < 0) throw DomainError("time must be non-negative");
    if (!(spec.fixed > 0)) throw DomainError("separation must be positive");
  }

  // far-field preconditions are checked for the whole range up front
  if (std::count(spec.methods.begin(), spec.methods.end(), Method::far_field)) {
    double k_min = sys.atom_A.k();
    for (const auto& b : sys.atom_B_lines) k_min = std::min(k_min, b.k());
    const double R_min = r_scan ? spec.min : spec.fixed;
    if (k_min * R_min < far_field_min_kR)
      throw FarFieldDomainError("far-field scan needs kR >= " +
                                std::to_string(far_field_min_kR) +
                                " over the whole range");
  }

  const int n = spec.points;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i)
    grid[i] = n == 1 ? spec.min
                     : spec.min + (spec.max - spec.min) * double(i) / (n - 1);

  std::vector<PairSystem> line_systems;
  if (spec.per_line)
    for (std::size_t l = 0; l < sys.atom_B_lines.size(); ++l)
      line_systems.emplace_back(sys.atom_A,
                                std::vector<TransitionLine>{sys.atom_B_lines[l]},
                                sys.direction, sys.R_default, sys.name);

  Dataset ds;
  ds.id = spec.id;
  ds.variable = r_scan ? "R" : "T";
  ds.fixed_value = spec.fixed;
  ds.fixed_unit = r_scan ? "s" : "m";
  ds.system_hash = hex64(fnv1a64(serialize_system(sys)));
  ds.timestamp = scan_detail::utc_now();

  const std::string unit = units_label(spec.units);
  ds.columns.push_back({r_scan ? "R" : "T", r_scan ? "m" : "s", grid});
  for (Method m : spec.methods) {
    ds.columns.push_back({method_name(m), unit, std::vector<double>(n)});
    for (std::size_t l = 0; l < line_systems.size(); ++l) {
      std::string label = sys.atom_B_lines[l].label;
      if (label.empty()) label = "line" + std::to_string(l);
      ds.columns.push_back(
          {method_name(m) + ":" + label, unit, std::vector<double>(n)});
    }
  }

  const double u0_full = detail::u0_scale(sys);
  const int n_threads = scan_detail::thread_count(n);
  std::vector<std::vector<std::string>> thread_diags(n_threads);
  std::vector<std::exception_ptr> thread_errors(n_threads);

  auto worker = [&](int t) {
    try {
      const int lo = n * t / n_threads, hi = n * (t + 1) / n_threads;
      for (int i = lo; i < hi; ++i) {
        const double R_m = r_scan ? grid[i] : spec.fixed;
        const double T_s = r_scan ? spec.fixed : grid[i];
        std::size_t col = 1;
        for (Method m : spec.methods) {
          auto one = [&](const PairSystem& s, std::size_t c) {
            try {
              ds.columns[c].values[i] = scan_detail::in_units(
                  scan_detail::eval_cell(s, m, R_m, T_s, qcfg), spec.units, R_m,
                  u0_full);
            } catch (const DomainError& e) {
              ds.columns[c].values[i] =
                  std::numeric_limits<double>::quiet_NaN();
              thread_diags[t].push_back("row " + std::to_string(i) + ", " +
                                        ds.columns[c].name + ": " + e.what());
            }
          };
          one(sys, col++);
          for (const auto& ls : line_systems) one(ls, col++);
        }
      }
    } catch (...) {
      thread_errors[t] = std::current_exception();
    }
  };

  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (auto& err : thread_errors)
    if (err) std::rethrow_exception(err);
  for (auto& dv : thread_diags)
    for (auto& d : dv) ds.diagnostics.push_back(std::move(d));
  return ds;
}

//! Uniform time average over [start, start + window]. The window must begin
//! after the round trip and span at least ten detuning periods; as it grows
//! the result approaches the adiabatic value like 1/window.
inline EnergyResult time_average(const PairSystem& sys, double R_m,
                                 double window_s,
                                 Method method = Method::closed_form,
                                 std::optional<double> start_s = {}) {
  if (!(window_s > 0)) throw DomainError("averaging window must be positive");
  double d_min = std::abs(sys.detunings[0]), d_max = d_min;
  for (double d : sys.detunings) {
    d_min = std::min(d_min, std::abs(d));
    d_max = std::max(d_max, std::abs(d));
  }
  if (window_s * d_min < 10.0 * 2.0 * pi)
    throw UsageError("averaging window must span at least ten detuning periods");
  const double front = 2.0 * R_m / si::c;
  const double T0 = start_s ? *start_s : front + 1e-3 * window_s;
  if (!(T0 > front))
    throw UsageError("averaging window must start after the round trip");

  if (method == Method::closed_form)
    return time_average_at(sys, R_m, T0, window_s);
  if (method != Method::causal)
    throw UsageError("time averaging supports closed-form and causal only");

  // composite 5-point Gauss-Legendre, two segments per fastest period
  static constexpr double gl_x[5] = {-0.906179845938664, -0.5384693101056831,
                                     0.0, 0.5384693101056831,
                                     0.906179845938664};
  static constexpr double gl_w[5] = {0.23692688505618909, 0.47862867049936647,
                                     0.5688888888888889, 0.47862867049936647,
                                     0.23692688505618909};
  const int segs = static_cast<int>(
      std::min(2e6, std::ceil(window_s * d_max / pi)));
  double val = 0, scaled = 0;
  for (int s = 0; s < segs; ++s) {
    const double a = T0 + window_s * s / segs;
    const double b = T0 + window_s * (s + 1) / segs;
    for (int j = 0; j < 5; ++j) {
      const double T = 0.5 * (a + b) + 0.5 * (b - a) * gl_x[j];
      const EnergyResult r = evaluate_causal(sys, R_m, T);
      val += gl_w[j] * 0.5 * (b - a) * r.value;
      scaled += gl_w[j] * 0.5 * (b - a) * r.value_scaled;
    }
  }
  EnergyResult out;
  out.value = val / window_s;
  out.value_scaled = scaled / window_s;
  out.method = "contour:causal:window-mean";
  out.error_scale = detail::regime_error_scale(sys);
  return out;
}

}  // namespace qvdw
