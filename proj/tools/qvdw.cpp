// Command-line front end for desk-scale studies: single-point evaluation,
// grid scans, prescription comparison, regime validation, spatial beat
// extraction, and excitation-transfer probability.
//
// Exit codes: 0 success, 1 domain error (bad physics input, failed run),
// 2 usage error (bad flags); usage errors print the synopsis on stderr.

#include <CLI11.hpp>

#include <qvdw/beat.hpp>
#include <qvdw/config_io.hpp>
#include <qvdw/contour.hpp>
#include <qvdw/dataset_io.hpp>
#include <qvdw/scan.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;
using qvdw::Dataset;
using qvdw::DatasetColumn;
using qvdw::EnergyUnits;
using qvdw::PairSystem;

PairSystem load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qvdw::UsageError("cannot open system file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return qvdw::load_system(buf.str());
}

//! A flag value that is either a scalar "7.5" or a range "min:max:count".
struct Axis {
  double min = 0, max = 0;
  int count = 1;
  bool is_range = false;

  double scalar(const char* flag) const {
    if (is_range)
      throw qvdw::UsageError(std::string(flag) +
                             " must be a single value here, not a range");
    return min;
  }
};

Axis parse_axis(const std::string& text, const char* flag) {
  Axis a;
  try {
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) {
      a.min = a.max = qvdw::parse_double(text);
      return a;
    }
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos || text.find(':', c2 + 1) != std::string::npos)
      throw qvdw::ParseError("expected min:max:count");
    a.min = qvdw::parse_double(text.substr(0, c1));
    a.max = qvdw::parse_double(text.substr(c1 + 1, c2 - c1 - 1));
    const std::string tail = text.substr(c2 + 1);
    std::size_t pos = 0;
    const int n = std::stoi(tail, &pos);
    if (pos != tail.size() || n < 1) throw qvdw::ParseError("bad point count");
    a.count = n;
    a.is_range = true;
  } catch (const std::exception& e) {
    throw qvdw::UsageError(std::string(flag) + ": cannot parse '" + text +
                           "' (" + e.what() + ")");
  }
  return a;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw qvdw::UsageError("cannot open output file '" + out_path + "'");
  out << text;
  if (!out) throw qvdw::UsageError("failed while writing '" + out_path + "'");
}

void report_diagnostics(const Dataset& ds) {
  for (const auto& d : ds.diagnostics) std::cerr << "warning: " << d << "\n";
}

std::string serialize(const Dataset& ds, const std::string& format) {
  if (format == "csv") return qvdw::to_csv(ds);
  if (format == "json") return qvdw::to_json(ds);
  throw qvdw::UsageError("unknown format '" + format + "' (use csv or json)");
}

double rad_per_s(double joules) { return joules / qvdw::si::hbar; }

std::string system_fingerprint(const PairSystem& sys) {
  return qvdw::hex64(qvdw::fnv1a64(qvdw::serialize_system(sys)));
}

EnergyUnits pick_units(bool joules, bool scaled) {
  if (joules) return EnergyUnits::joules;
  if (scaled) return EnergyUnits::scaled;
  return EnergyUnits::rad_per_s;
}

// ---------------------------------------------------------------------------

struct EvalOpts {
  std::string system, out, R_text, T_text, method = "closed-form";
  double window_periods = 0;
  bool has_window = false;
  bool joules = false;
};

int run_eval(const EvalOpts& o) {
  const PairSystem sys = load_system_file(o.system);
  const double R_um = parse_axis(o.R_text, "--R-um").scalar("--R-um");
  const double R_m = R_um * 1e-6;
  const qvdw::Method method = qvdw::method_from_name(o.method);
  std::optional<double> T_ps;
  if (!o.T_text.empty())
    T_ps = parse_axis(o.T_text, "--T-ps").scalar("--T-ps");
  std::optional<double> T_s;
  if (T_ps) T_s = *T_ps * 1e-12;

  qvdw::EnergyResult res;
  if (o.has_window) {
    if (!(o.window_periods > 0))
      throw qvdw::UsageError("--average-window-periods must be positive");
    double d_min = std::abs(sys.detunings[0]);
    for (double d : sys.detunings) d_min = std::min(d_min, std::abs(d));
    const double window_s = o.window_periods * 2.0 * qvdw::pi / d_min;
    res = qvdw::time_average(sys, R_m, window_s, method, T_s);
  } else {
    if (!T_s && method != qvdw::Method::adiabatic)
      throw qvdw::UsageError(
          "eval needs --T-ps (only --method adiabatic runs without it)");
    res = qvdw::scan_detail::eval_cell(sys, method, R_m, T_s.value_or(0.0), {});
  }

  json j;
  j["method"] = res.method;
  j["R_um"] = R_um;
  if (T_ps) j["T_ps"] = *T_ps;
  if (o.has_window) j["window_periods"] = o.window_periods;
  j["value_rad_per_s"] = rad_per_s(res.value);
  j["value_scaled"] = res.value_scaled;
  if (o.joules) j["value_joules"] = res.value;
  j["error_scale"] = res.error_scale;
  if (res.value_factorized)
    j["value_factorized_rad_per_s"] = rad_per_s(*res.value_factorized);
  emit(j.dump(2) + "\n", o.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct ScanOpts {
  std::string system, out, R_text, T_text, format = "csv";
  std::vector<std::string> methods;
  bool per_line = false, joules = false, scaled = false;
};

int run_scan(const ScanOpts& o) {
  const PairSystem sys = load_system_file(o.system);
  const Axis r = parse_axis(o.R_text, "--R-um");
  const Axis t = parse_axis(o.T_text, "--T-ps");
  if (r.is_range == t.is_range)
    throw qvdw::UsageError(
        "exactly one of --R-um and --T-ps must be a min:max:count range");

  qvdw::ScanSpec spec;
  if (r.is_range) {
    spec.variable = qvdw::ScanVariable::R;
    spec.min = r.min * 1e-6;
    spec.max = r.max * 1e-6;
    spec.points = r.count;
    spec.fixed = t.min * 1e-12;
  } else {
    spec.variable = qvdw::ScanVariable::T;
    spec.min = t.min * 1e-12;
    spec.max = t.max * 1e-12;
    spec.points = t.count;
    spec.fixed = r.min * 1e-6;
  }
  std::vector<std::string> names = o.methods;
  if (names.empty()) names.push_back("closed-form");
  for (const auto& name : names)
    spec.methods.push_back(qvdw::method_from_name(name));
  spec.per_line = o.per_line;
  spec.units = pick_units(o.joules, o.scaled);
  spec.id = sys.name.empty() ? std::string("scan") : sys.name;

  const Dataset ds = qvdw::scan(sys, spec);
  report_diagnostics(ds);
  emit(serialize(ds, o.format), o.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct CompareOpts {
  std::string system, out, R_text, T_text, format = "csv";
  bool joules = false, scaled = false;
};

int run_compare(const CompareOpts& o) {
  const PairSystem sys = load_system_file(o.system);
  const double T_s = parse_axis(o.T_text, "--T-ps").scalar("--T-ps") * 1e-12;
  const Axis r = parse_axis(o.R_text, "--R-um");
  std::vector<double> grid(r.count);
  for (int i = 0; i < r.count; ++i) {
    const double f = r.count == 1 ? 0.0 : double(i) / (r.count - 1);
    grid[i] = (r.min + f * (r.max - r.min)) * 1e-6;
  }
  const auto rows = qvdw::compare_prescriptions(sys, T_s, grid);

  const EnergyUnits units = pick_units(o.joules, o.scaled);
  const std::string ulabel = qvdw::units_label(units);
  auto value_in = [&](double joules, double scaled) {
    if (units == EnergyUnits::joules) return joules;
    if (units == EnergyUnits::scaled) return scaled;
    return rad_per_s(joules);
  };

  Dataset ds;
  ds.id = sys.name.empty() ? std::string("compare") : sys.name + ", compare";
  ds.variable = "R";
  ds.fixed_value = T_s;
  ds.fixed_unit = "s";
  ds.system_hash = system_fingerprint(sys);
  ds.timestamp = qvdw::scan_detail::utc_now();
  ds.columns.push_back({"R", "m", grid});

  // rows arrive grouped by separation, one block of prescriptions each
  const std::size_t per = rows.size() / grid.size();
  for (std::size_t p = 0; p < per; ++p) {
    DatasetColumn val{rows[p].name, ulabel, {}};
    DatasetColumn far{rows[p].name + ":far-field", ulabel, {}};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& row = rows[i * per + p];
      val.values.push_back(value_in(row.result.value, row.result.value_scaled));
      far.values.push_back(value_in(row.far_field_value, row.far_field_scaled));
    }
    ds.columns.push_back(std::move(val));
    ds.columns.push_back(std::move(far));
  }
  emit(serialize(ds, o.format), o.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct ValidateOpts {
  std::string system, out;
};

int run_validate(const ValidateOpts& o) {
  const PairSystem sys = load_system_file(o.system);
  const qvdw::RegimeReport rep = qvdw::validate_regime(sys);

  json j;
  j["system"] = sys.name;
  j["quasi_resonant"] = rep.quasi_resonant;
  j["linewidth_ok"] = rep.linewidth_ok;
  if (std::isfinite(rep.observation_window))
    j["observation_window_s"] = rep.observation_window;
  else
    j["observation_window_s"] = nullptr;
  j["error_scale"] = rep.error_scale;
  json lines = json::array();
  for (const auto& pl : rep.lines) {
    json l;
    l["label"] = pl.label;
    l["detuning_rad_per_s"] = pl.detuning;
    l["detuning_over_omega"] = pl.detuning_over_omega;
    l["gamma_over_detuning"] = pl.gamma_over_detuning;
    l["quasi_resonant"] = pl.quasi_resonant;
    l["linewidth_ok"] = pl.linewidth_ok;
    lines.push_back(std::move(l));
  }
  j["lines"] = std::move(lines);
  emit(j.dump(2) + "\n", o.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct BeatOpts {
  std::string system, out, R_text, T_text, method = "closed-form";
};

int run_beat(const BeatOpts& o) {
  const PairSystem sys = load_system_file(o.system);
  const Axis r = parse_axis(o.R_text, "--R-um");
  if (!r.is_range)
    throw qvdw::UsageError("beat needs --R-um as a min:max:count range");
  const double T_s = parse_axis(o.T_text, "--T-ps").scalar("--T-ps") * 1e-12;

  qvdw::ScanSpec spec;
  spec.variable = qvdw::ScanVariable::R;
  spec.min = r.min * 1e-6;
  spec.max = r.max * 1e-6;
  spec.points = r.count;
  spec.fixed = T_s;
  spec.methods = {qvdw::method_from_name(o.method)};
  spec.id = sys.name.empty() ? std::string("beat") : sys.name;

  const Dataset ds = qvdw::scan(sys, spec);
  report_diagnostics(ds);
  const std::string column = qvdw::method_name(spec.methods[0]);
  const qvdw::BeatResult res = qvdw::beat_analysis(ds, column);

  json j;
  j["column"] = column;
  j["points"] = r.count;
  j["short_period_um"] = res.short_period * 1e6;
  if (res.long_period > 0)
    j["long_period_um"] = res.long_period * 1e6;
  else
    j["long_period_um"] = nullptr;  // single tone cluster, no beat envelope
  json tones = json::array();
  for (const auto& t : res.tones) {
    json tj;
    tj["frequency_cycles_per_m"] = t.frequency;
    tj["amplitude"] = t.amplitude;
    tj["phase_rad"] = t.phase;
    tones.push_back(std::move(tj));
  }
  j["tones"] = std::move(tones);
  emit(j.dump(2) + "\n", o.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct ProbOpts {
  std::string system, out, R_text, T_text, format = "csv";
};

int run_probability(const ProbOpts& o) {
  const PairSystem sys = load_system_file(o.system);
  const double R_um = parse_axis(o.R_text, "--R-um").scalar("--R-um");
  const double R_m = R_um * 1e-6;
  const Axis t = parse_axis(o.T_text, "--T-ps");

  if (!t.is_range) {
    const double T_s = t.min * 1e-12;
    json j;
    j["R_um"] = R_um;
    j["T_ps"] = t.min;
    j["probability"] = qvdw::excitation_probability_at(sys, R_m, T_s);
    emit(j.dump(2) + "\n", o.out);
    return 0;
  }

  Dataset ds;
  ds.id = sys.name.empty() ? std::string("probability") : sys.name;
  ds.variable = "T";
  ds.fixed_value = R_m;
  ds.fixed_unit = "m";
  ds.system_hash = system_fingerprint(sys);
  ds.timestamp = qvdw::scan_detail::utc_now();
  DatasetColumn grid{"T", "s", {}};
  DatasetColumn prob{"probability", "1", {}};
  for (int i = 0; i < t.count; ++i) {
    const double f = t.count == 1 ? 0.0 : double(i) / (t.count - 1);
    const double T_s = (t.min + f * (t.max - t.min)) * 1e-12;
    grid.values.push_back(T_s);
    prob.values.push_back(qvdw::excitation_probability_at(sys, R_m, T_s));
  }
  ds.columns.push_back(std::move(grid));
  ds.columns.push_back(std::move(prob));
  emit(serialize(ds, o.format), o.out);
  return 0;
}

// ---------------------------------------------------------------------------

//! Synopsis of the subcommand being parsed, falling back to the whole app.
void print_synopsis(CLI::App& app) {
  CLI::App* scope = &app;
  for (CLI::App* sub : app.get_subcommands()) scope = sub;
  std::cerr << "\n" << scope->help();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Interaction energy of an excited/ground atom pair after switch-on"};
  app.require_subcommand(1);

  EvalOpts eo;
  ScanOpts so;
  CompareOpts co;
  ValidateOpts vo;
  BeatOpts bo;
  ProbOpts po;

  const char* system_help = "system config (JSON)";
  const char* out_help = "write the result here instead of stdout";
  const char* R_help = "separation in micrometres";
  const char* T_help = "time after switch-on in picoseconds";
  const char* range_help_R = "separation in micrometres, scalar or min:max:count";
  const char* range_help_T = "time in picoseconds, scalar or min:max:count";
  const char* format_help = "output format: csv or json";
  const char* method_help =
      "closed-form | far-field | adiabatic | causal | quadrature";

  auto* eval = app.add_subcommand("eval", "energy at one separation and time");
  eval->add_option("--system", eo.system, system_help)->required();
  eval->add_option("--R-um", eo.R_text, R_help)->required();
  eval->add_option("--T-ps", eo.T_text, T_help);
  eval->add_option("--method", eo.method, method_help);
  auto* wopt = eval->add_option(
      "--average-window-periods", eo.window_periods,
      "report the window mean over this many periods of the slowest detuning; "
      "--T-ps then sets the window start");
  eval->add_flag("--joules", eo.joules, "also report the energy in joules");
  eval->add_option("--out", eo.out, out_help);

  auto* scan = app.add_subcommand("scan", "sweep separation or time to a table");
  scan->add_option("--system", so.system, system_help)->required();
  scan->add_option("--R-um", so.R_text, range_help_R)->required();
  scan->add_option("--T-ps", so.T_text, range_help_T)->required();
  scan->add_option("--method", so.methods, method_help)->delimiter(',');
  scan->add_flag("--per-line", so.per_line,
                 "add one column per transition line of atom B");
  auto* sj = scan->add_flag("--joules", so.joules, "energies in joules");
  auto* ss = scan->add_flag("--scaled", so.scaled,
                            "dimensionless energies, value * R^6 / U0");
  sj->excludes(ss);
  scan->add_option("--format", so.format, format_help);
  scan->add_option("--out", so.out, out_help);

  auto* compare = app.add_subcommand(
      "compare", "pole-handling prescriptions side by side over separation");
  compare->add_option("--system", co.system, system_help)->required();
  compare->add_option("--R-um", co.R_text, range_help_R)->required();
  compare->add_option("--T-ps", co.T_text, T_help)->required();
  auto* cj = compare->add_flag("--joules", co.joules, "energies in joules");
  auto* cs = compare->add_flag("--scaled", co.scaled,
                               "dimensionless energies, value * R^6 / U0");
  cj->excludes(cs);
  compare->add_option("--format", co.format, format_help);
  compare->add_option("--out", co.out, out_help);

  auto* validate =
      app.add_subcommand("validate", "check the quasi-resonant regime");
  validate->add_option("--system", vo.system, system_help)->required();
  validate->add_option("--out", vo.out, out_help);

  auto* beat = app.add_subcommand(
      "beat", "carrier and envelope periods of a separation sweep");
  beat->add_option("--system", bo.system, system_help)->required();
  beat->add_option("--R-um", bo.R_text, "separation range min:max:count, um")
      ->required();
  beat->add_option("--T-ps", bo.T_text, T_help)->required();
  beat->add_option("--method", bo.method, method_help);
  beat->add_option("--out", bo.out, out_help);

  auto* probability = app.add_subcommand(
      "probability", "excitation transfer probability (single-line systems)");
  probability->add_option("--system", po.system, system_help)->required();
  probability->add_option("--R-um", po.R_text, R_help)->required();
  probability->add_option("--T-ps", po.T_text, range_help_T)->required();
  probability->add_option("--format", po.format, format_help);
  probability->add_option("--out", po.out, out_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success))
      return app.exit(e);  // --help and friends
    std::cerr << "usage error: " << e.what() << "\n";
    print_synopsis(app);
    return 2;
  }

  try {
    eo.has_window = wopt->count() > 0;
    if (eval->parsed()) return run_eval(eo);
    if (scan->parsed()) return run_scan(so);
    if (compare->parsed()) return run_compare(co);
    if (validate->parsed()) return run_validate(vo);
    if (beat->parsed()) return run_beat(bo);
    if (probability->parsed()) return run_probability(po);
    return 2;
  } catch (const qvdw::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    print_synopsis(app);
    return 2;
  } catch (const qvdw::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
