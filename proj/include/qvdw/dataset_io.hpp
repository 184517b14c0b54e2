#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "qvdw/scan.hpp"

//! Dataset serialization. CSV gets a comment preamble plus a units-bearing
//! header row, JSON carries the same content as one object. Numbers use the
//! shortest representation that parses back to the same bits, so a
//! serialize/parse/serialize cycle is byte-identical. Failed cells are empty
//! in CSV and null in JSON.

namespace qvdw {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ParseError("bad number '" + std::string(text) + "'");
  return v;
}

//! Content fingerprint; covers everything except the timestamp.
inline std::string dataset_hash(const Dataset& ds) {
  std::string acc;
  auto put = [&](std::string_view s) {
    acc.append(s);
    acc.push_back('\x1f');
  };
  put(ds.id);
  put(ds.variable);
  put(format_double(ds.fixed_value));
  put(ds.fixed_unit);
  put(ds.system_hash);
  for (const auto& c : ds.columns) {
    put(c.name);
    put(c.unit);
    for (double v : c.values) put(format_double(v));
  }
  for (const auto& d : ds.diagnostics) put(d);
  return hex64(fnv1a64(acc));
}

inline std::string to_csv(const Dataset& ds) {
  std::string out;
  out += "# dataset: " + ds.id + "\n";
  out += "# variable: " + ds.variable +
         ", fixed: " + format_double(ds.fixed_value) + " " + ds.fixed_unit +
         "\n";
  out += "# system: " + ds.system_hash + "\n";
  out += "# generated: " + ds.timestamp + "\n";
  for (const auto& d : ds.diagnostics) out += "# diagnostic: " + d + "\n";
  for (std::size_t c = 0; c < ds.columns.size(); ++c) {
    if (c) out += ",";
    out += ds.columns[c].name + " [" + ds.columns[c].unit + "]";
  }
  out += "\n";
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
      if (c) out += ",";
      const double v = ds.columns[c].values[i];
      if (std::isfinite(v)) out += format_double(v);
    }
    out += "\n";
  }
  return out;
}

inline Dataset from_csv(const std::string& text) {
  Dataset ds;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto strip = [&](std::string_view prefix) -> std::string_view {
        if (line.substr(0, prefix.size()) == prefix)
          return line.substr(prefix.size());
        return {};
      };
      if (auto v = strip("# dataset: "); !v.empty() || line == "# dataset: ")
        ds.id = std::string(v);
      else if (auto v2 = strip("# variable: "); !v2.empty()) {
        const std::size_t comma = v2.find(", fixed: ");
        if (comma == std::string_view::npos)
          throw ParseError("bad variable line in CSV");
        ds.variable = std::string(v2.substr(0, comma));
        std::string_view rest = v2.substr(comma + 9);
        const std::size_t sp = rest.rfind(' ');
        if (sp == std::string_view::npos)
          throw ParseError("bad variable line in CSV");
        ds.fixed_value = parse_double(rest.substr(0, sp));
        ds.fixed_unit = std::string(rest.substr(sp + 1));
      } else if (auto v3 = strip("# system: "); !v3.empty())
        ds.system_hash = std::string(v3);
      else if (auto v4 = strip("# generated: "); !v4.empty())
        ds.timestamp = std::string(v4);
      else if (auto v5 = strip("# diagnostic: "); !v5.empty())
        ds.diagnostics.push_back(std::string(v5));
      continue;
    }
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(
          start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!have_header) {
      for (std::string_view cell : cells) {
        const std::size_t br = cell.rfind(" [");
        if (br == std::string_view::npos || cell.back() != ']')
          throw ParseError("CSV header cell '" + std::string(cell) +
                           "' lacks a unit");
        DatasetColumn col;
        col.name = std::string(cell.substr(0, br));
        col.unit = std::string(cell.substr(br + 2, cell.size() - br - 3));
        ds.columns.push_back(std::move(col));
      }
      have_header = true;
      continue;
    }
    if (cells.size() != ds.columns.size())
      throw ParseError("CSV row has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(ds.columns.size()));
    for (std::size_t c = 0; c < cells.size(); ++c)
      ds.columns[c].values.push_back(
          cells[c].empty() ? std::numeric_limits<double>::quiet_NaN()
                           : parse_double(cells[c]));
  }
  if (!have_header) throw ParseError("CSV has no header row");
  return ds;
}

inline std::string to_json(const Dataset& ds) {
  nlohmann::json j;
  j["id"] = ds.id;
  j["variable"] = ds.variable;
  j["fixed_value"] = ds.fixed_value;
  j["fixed_unit"] = ds.fixed_unit;
  j["system_hash"] = ds.system_hash;
  j["timestamp"] = ds.timestamp;
  j["diagnostics"] = ds.diagnostics;
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : ds.columns) {
    nlohmann::json jc;
    jc["name"] = c.name;
    jc["unit"] = c.unit;
    nlohmann::json vals = nlohmann::json::array();
    for (double v : c.values) {
      if (std::isfinite(v))
        vals.push_back(v);
      else
        vals.push_back(nullptr);
    }
    jc["values"] = std::move(vals);
    cols.push_back(std::move(jc));
  }
  j["columns"] = std::move(cols);
  return j.dump(2) + "\n";
}

inline Dataset from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("dataset: ") + e.what());
  }
  Dataset ds;
  try {
    ds.id = j.at("id").get<std::string>();
    ds.variable = j.at("variable").get<std::string>();
    ds.fixed_value = j.at("fixed_value").get<double>();
    ds.fixed_unit = j.at("fixed_unit").get<std::string>();
    ds.system_hash = j.at("system_hash").get<std::string>();
    ds.timestamp = j.at("timestamp").get<std::string>();
    for (const auto& d : j.at("diagnostics"))
      ds.diagnostics.push_back(d.get<std::string>());
    for (const auto& jc : j.at("columns")) {
      DatasetColumn col;
      col.name = jc.at("name").get<std::string>();
      col.unit = jc.at("unit").get<std::string>();
      for (const auto& v : jc.at("values"))
        col.values.push_back(v.is_null()
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : v.get<double>());
      ds.columns.push_back(std::move(col));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset: ") + e.what());
  }
  return ds;
}

}  // namespace qvdw
