// File formats: CSV atom lists (x_1,...,x_d,mass per row), grid measures as
// a JSON descriptor next to a row-major values CSV, and PGM image dumps of
// 2-d grids.  Numbers are written with 17 significant digits so that a
// write/read round trip is exact.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hkb/measures.hpp"

namespace hkb {
namespace io {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(strip(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  return out;
}

}  // namespace detail

// Atom-list CSV: one atom per row as x_1,...,x_d,mass.  Lines starting with
// '#' are comments; a first row whose cells are not all numeric is treated
// as a header and skipped.  All data rows must share one width.
inline std::vector<Atom> read_atoms_csv(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::vector<Atom> atoms;
  std::string line;
  std::size_t width = 0, lineno = 0;
  bool first_data = true;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::strip(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> cells = detail::split_csv(t);
    std::vector<double> vals(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (!detail::parse_double(cells[i], vals[i])) {
        numeric = false;
        break;
      }
    if (!numeric) {
      if (first_data) {  // header row
        first_data = false;
        continue;
      }
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-numeric cell");
    }
    first_data = false;
    if (vals.size() < 2)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": need at least one coordinate and a mass");
    if (width == 0)
      width = vals.size();
    else if (vals.size() != width)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": inconsistent column count");
    Atom a;
    a.position.assign(vals.begin(), vals.end() - 1);
    a.mass = vals.back();
    if (!(a.mass >= 0.0) || !std::isfinite(a.mass))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": mass must be finite and >= 0");
    atoms.push_back(std::move(a));
  }
  if (atoms.empty()) throw std::runtime_error(path + ": no atoms found");
  return atoms;
}

inline void write_atoms_csv(const std::string& path, const std::vector<Atom>& atoms) {
  std::ofstream out = detail::open_output(path);
  if (atoms.empty()) throw std::invalid_argument("write_atoms_csv: empty atom list");
  std::size_t d = atoms[0].position.size();
  for (std::size_t i = 0; i < d; ++i) out << "x_" << (i + 1) << ",";
  out << "mass\n";
  for (const Atom& a : atoms) {
    for (double c : a.position) out << format_double(c) << ",";
    out << format_double(a.mass) << "\n";
  }
}

// Point cloud -> DiscreteMeasure; the domain defaults to the exact bounding
// box of the atoms unless explicit bounds are supplied.
inline DiscreteMeasure read_discrete_csv(const std::string& path,
                                         const std::vector<double>& lower = {},
                                         const std::vector<double>& upper = {}) {
  std::vector<Atom> atoms = read_atoms_csv(path);
  std::size_t d = atoms[0].position.size();
  std::vector<double> lo = lower, hi = upper;
  if (lo.empty() != hi.empty())
    throw std::invalid_argument("read_discrete_csv: lower/upper must be given together");
  if (lo.empty()) {
    lo.assign(d, inf);
    hi.assign(d, -inf);
    for (const Atom& a : atoms)
      for (std::size_t i = 0; i < d; ++i) {
        lo[i] = std::min(lo[i], a.position[i]);
        hi[i] = std::max(hi[i], a.position[i]);
      }
    for (std::size_t i = 0; i < d; ++i)
      if (!(lo[i] < hi[i])) {  // degenerate box: pad so Domain validates
        lo[i] -= 0.5;
        hi[i] += 0.5;
      }
  }
  return DiscreteMeasure(Domain(lo, hi), std::move(atoms));
}

// Grid measure on disk: a JSON descriptor
//   {"dim":d, "shape":[...], "lower":[...], "upper":[...], "values":"rel.csv"}
// plus a row-major values CSV.  "values" is optional and defaults to the
// descriptor's basename with extension .csv.
inline GridMeasure read_grid_json(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw std::runtime_error(path + ": missing field '" + key + "'");
    return j.at(key);
  };
  std::size_t dim = need("dim").get<std::size_t>();
  std::vector<std::size_t> shape = need("shape").get<std::vector<std::size_t>>();
  std::vector<double> lower = need("lower").get<std::vector<double>>();
  std::vector<double> upper = need("upper").get<std::vector<double>>();
  if (shape.size() != dim || lower.size() != dim || upper.size() != dim)
    throw std::runtime_error(path + ": dim/shape/lower/upper are inconsistent");

  std::filesystem::path vpath;
  if (j.contains("values"))
    vpath = std::filesystem::path(j.at("values").get<std::string>());
  else
    vpath = std::filesystem::path(path).filename().replace_extension(".csv");
  if (vpath.is_relative()) vpath = std::filesystem::path(path).parent_path() / vpath;

  std::ifstream vin = detail::open_input(vpath.string());
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(vin, line)) {
    ++lineno;
    std::string t = detail::strip(line);
    if (t.empty() || t[0] == '#') continue;
    for (const std::string& cell : detail::split_csv(t)) {
      double v;
      if (!detail::parse_double(cell, v))
        throw std::runtime_error(vpath.string() + ":" + std::to_string(lineno) +
                                 ": non-numeric cell");
      values.push_back(v);
    }
  }
  return GridMeasure(Domain(lower, upper), shape, std::move(values));
}

// Writes descriptor `path` (should end in .json) and the values CSV next to
// it, one grid row per line in row-major order.
inline void write_grid_json(const std::string& path, const GridMeasure& g) {
  std::filesystem::path jpath(path);
  std::filesystem::path vpath = jpath;
  vpath.replace_extension(".csv");

  nlohmann::json j;
  j["dim"] = g.domain().dim();
  j["shape"] = g.shape();
  j["lower"] = g.domain().lower();
  j["upper"] = g.domain().upper();
  j["values"] = vpath.filename().string();
  std::ofstream out = detail::open_output(jpath.string());
  out << j.dump(2) << "\n";

  std::ofstream vout = detail::open_output(vpath.string());
  std::size_t row = g.shape().back();
  for (std::size_t k = 0; k < g.size(); ++k) {
    vout << format_double(g.values()[k]);
    vout << ((k % row == row - 1) ? "\n" : ",");
  }
}

// ASCII PGM (P2) dump of a 2-d grid; the maximum value maps to 255.
inline void write_grid_pgm(const std::string& path, const GridMeasure& g) {
  if (g.domain().dim() != 2)
    throw std::invalid_argument("write_grid_pgm: grid must be 2-d");
  double mx = 0.0;
  for (double v : g.values()) mx = std::max(mx, v);
  std::ofstream out = detail::open_output(path);
  std::size_t rows = g.shape()[0], cols = g.shape()[1];
  out << "P2\n" << cols << " " << rows << "\n255\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      int v = mx > 0.0 ? static_cast<int>(std::lround(255.0 * g.values()[r * cols + c] / mx)) : 0;
      out << v << (c + 1 == cols ? "\n" : " ");
    }
  }
}

}  // namespace io
}  // namespace hkb
