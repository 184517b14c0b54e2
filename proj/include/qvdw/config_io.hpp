#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qvdw/atom_model.hpp"

//! System description files: JSON in, JSON out, strict about what it accepts.
//! Frequencies come in as cm^-1, dipoles in debye, linewidths in Hz (cycles),
//! separations in micrometres. Everything is converted to SI on load.

namespace qvdw {

namespace detail {

using nlohmann::json;

inline void require_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed,
                         std::initializer_list<const char*> required) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ParseError(where + ": unknown field '" + item.key() + "'");
  }
  for (const char* k : required)
    if (!obj.contains(k))
      throw ParseError(where + ": missing field '" + std::string(k) + "'");
}

inline double positive_number(const json& obj, const std::string& where,
                              const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number())
    throw ParseError(where + "." + key + ": expected a number");
  const double d = v.get<double>();
  if (!(d > 0) || !std::isfinite(d))
    throw ParseError(where + "." + key + ": must be positive and finite");
  return d;
}

inline Vec3 read_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3)
    throw ParseError(where + ": expected an array of 3 numbers");
  for (const auto& c : v)
    if (!c.is_number()) throw ParseError(where + ": expected numbers");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline TransitionLine read_line(const json& obj, const std::string& where) {
  require_keys(obj, where, {"nu_tilde_cm", "mu_debye", "gamma_hz", "dir", "label"},
               {"nu_tilde_cm", "mu_debye"});
  const double nu = positive_number(obj, where, "nu_tilde_cm");
  const double mu = positive_number(obj, where, "mu_debye");
  double gamma_hz = 0;
  if (obj.contains("gamma_hz")) {
    const auto& g = obj.at("gamma_hz");
    if (!g.is_number()) throw ParseError(where + ".gamma_hz: expected a number");
    gamma_hz = g.get<double>();
    if (gamma_hz < 0 || !std::isfinite(gamma_hz))
      throw ParseError(where + ".gamma_hz: must be non-negative and finite");
  }
  std::optional<Vec3> dir;
  if (obj.contains("dir")) dir = read_vec3(obj.at("dir"), where + ".dir");
  std::string label;
  if (obj.contains("label")) {
    if (!obj.at("label").is_string())
      throw ParseError(where + ".label: expected a string");
    label = obj.at("label").get<std::string>();
  }
  try {
    return TransitionLine::from_cm(nu, mu, gamma_hz, dir, label);
  } catch (const DomainError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline json write_line(const TransitionLine& line) {
  json j;
  j["nu_tilde_cm"] = line.nu_tilde / 100.0;
  j["mu_debye"] = line.mu_mag / si::debye;
  j["gamma_hz"] = line.gamma / (2.0 * pi);
  if (line.mu_dir) {
    const Vec3 u = line.mu_dir->normalized();
    j["dir"] = {u.x, u.y, u.z};
  }
  if (!line.label.empty()) j["label"] = line.label;
  return j;
}

}  // namespace detail

inline PairSystem load_system(const std::string& config_text) {
  using detail::json;
  json root;
  try {
    root = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  detail::require_keys(root, "config", {"name", "atoms", "geometry"}, {"atoms"});
  const auto& atoms = root.at("atoms");
  detail::require_keys(atoms, "atoms", {"A", "B"}, {"A", "B"});
  TransitionLine a = detail::read_line(atoms.at("A"), "atoms.A");
  detail::require_keys(atoms.at("B"), "atoms.B", {"lines"}, {"lines"});
  const auto& lines = atoms.at("B").at("lines");
  if (!lines.is_array() || lines.empty())
    throw ParseError("atoms.B.lines: expected a non-empty array");
  std::vector<TransitionLine> b;
  for (std::size_t i = 0; i < lines.size(); ++i)
    b.push_back(detail::read_line(lines[i],
                                  "atoms.B.lines[" + std::to_string(i) + "]"));

  Vec3 direction{0, 0, 1};
  std::optional<double> R_m;
  if (root.contains("geometry")) {
    const auto& g = root.at("geometry");
    detail::require_keys(g, "geometry", {"R_um", "direction"}, {});
    if (g.contains("R_um"))
      R_m = detail::positive_number(g, "geometry", "R_um") * 1e-6;
    if (g.contains("direction"))
      direction = detail::read_vec3(g.at("direction"), "geometry.direction");
  }
  std::string name;
  if (root.contains("name")) {
    if (!root.at("name").is_string())
      throw ParseError("config.name: expected a string");
    name = root.at("name").get<std::string>();
  }
  try {
    return PairSystem(std::move(a), std::move(b), direction, R_m, name);
  } catch (const DomainError& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
}

inline std::string serialize_system(const PairSystem& sys) {
  using detail::json;
  json root;
  if (!sys.name.empty()) root["name"] = sys.name;
  root["atoms"]["A"] = detail::write_line(sys.atom_A);
  json lines = json::array();
  for (const auto& line : sys.atom_B_lines) lines.push_back(detail::write_line(line));
  root["atoms"]["B"]["lines"] = std::move(lines);
  root["geometry"]["direction"] = {sys.direction.x, sys.direction.y, sys.direction.z};
  if (sys.R_default) root["geometry"]["R_um"] = *sys.R_default * 1e6;
  return root.dump(2) + "\n";
}

}  // namespace qvdw
