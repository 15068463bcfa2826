#pragma once

// Run configuration (JSON), CSV series and artifact checksums.
//
// Config schema, version 1. Every key is optional unless marked.
//   schema_version: 1 (required)
//   potential: {name: double_well | triple_well | planar_two_well | quadratic |
//               quartic | polynomial, beta, kappa, dim, terms: [{c, e: [..]}],
//               wells: [[..]], lambda}
//   wells: [[a-], [a+]]              connect: endpoints (required)
//   via: [[..], ..]                  seed vertices
//   solver: {nodes, max_iter, tol, memory, max_rounds, coarse_nodes, rule}
//   equipartition: {t_max, t_required, output_nodes, floor_fraction}
//   tolerances: {equipartition, action_gap, stall_gradient, sti_relative}
//   double: {space: sin_example | line, points, window, symmetry, quotient,
//            seeds: {minus: {via}, plus: {via}}, path_nodes, x2_nodes,
//            outer_iterations, t_max, funnel: {enabled, p0, c, eps0, scan_start},
//            residual_margin, residual_tolerance, line_t_max, line_nodes}
//   counterexample: {g: {type: inverse_square | power, exponent}, n_max, base,
//                    radii, nodes, max_iter, penalty}

#include <boost/crc.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hetcon/errors.hpp"
#include "hetcon/geodesic.hpp"
#include "hetcon/heteroclinic.hpp"
#include "hetcon/metric.hpp"
#include "hetcon/potentials.hpp"

namespace hetcon {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Configuration problems; the message names the offending field.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Artifact files that fail their checksum or schema.
class ArtifactError : public Error {
 public:
  using Error::Error;
};

namespace config {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError("missing required field '" + path + key + "'");
  return j.at(key);
}

template <class T>
T get_or(const json& j, const std::string& key, const T& fallback, const std::string& path = "") {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + path + key + "' has the wrong type");
  }
}

inline Point point(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError("field '" + field + "' must be a nonempty array of numbers");
  Point p(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("field '" + field + "' must contain numbers only");
    p[static_cast<Index>(i)] = j[i].get<double>();
  }
  return p;
}

inline std::vector<Point> points(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError("field '" + field + "' must be an array of points");
  std::vector<Point> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(point(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

inline void check_schema(const json& cfg) {
  const auto& v = require(cfg, "schema_version", "");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
    throw ConfigError("field 'schema_version' must be " + std::to_string(kSchemaVersion));
}

inline Potential potential(const json& cfg) {
  const auto& p = require(cfg, "potential", "");
  const auto name = get_or<std::string>(p, "name", "", "potential.");
  if (name.empty()) throw ConfigError("missing required field 'potential.name'");
  if (name == "double_well") return potentials::double_well();
  if (name == "triple_well") return potentials::triple_well();
  if (name == "planar_two_well")
    return potentials::planar_two_well(get_or(p, "beta", 2.0, "potential."), get_or(p, "kappa", 1.0, "potential."));
  if (name == "quadratic") return potentials::quadratic(get_or<Index>(p, "dim", 1, "potential."));
  if (name == "quartic") return potentials::quartic();
  if (name == "polynomial") {
    const auto dim = get_or<Index>(p, "dim", 0, "potential.");
    if (dim < 1) throw ConfigError("field 'potential.dim' must be a positive integer");
    std::vector<potentials::Monomial> terms;
    for (const auto& t : require(p, "terms", "potential.")) {
      potentials::Monomial m;
      m.coefficient = get_or(t, "c", 0.0, "potential.terms.");
      m.exponents = get_or<std::vector<int>>(t, "e", {}, "potential.terms.");
      if (static_cast<Index>(m.exponents.size()) != dim)
        throw ConfigError("field 'potential.terms.e' must have one exponent per dimension");
      terms.push_back(std::move(m));
    }
    auto wells = points(require(p, "wells", "potential."), "potential.wells");
    return potentials::polynomial(dim, std::move(terms), std::move(wells), get_or(p, "lambda", 0.0, "potential."));
  }
  throw ConfigError("field 'potential.name' has unknown value '" + name + "'");
}

inline GeodesicOptions geodesic(const json& cfg) {
  GeodesicOptions o;
  const json s = cfg.value("solver", json::object());
  o.nodes = get_or(s, "nodes", o.nodes, "solver.");
  o.max_iter = get_or(s, "max_iter", o.max_iter, "solver.");
  o.tol = get_or(s, "tol", o.tol, "solver.");
  o.memory = get_or(s, "memory", o.memory, "solver.");
  o.max_rounds = get_or(s, "max_rounds", o.max_rounds, "solver.");
  o.coarse_nodes = get_or(s, "coarse_nodes", o.coarse_nodes, "solver.");
  const auto rule = get_or<std::string>(s, "rule", "midpoint", "solver.");
  if (rule == "simpson")
    o.rule = Quadrature::simpson;
  else if (rule != "midpoint")
    throw ConfigError("field 'solver.rule' must be 'midpoint' or 'simpson'");
  if (o.nodes < 3) throw ConfigError("field 'solver.nodes' must be at least 3");
  if (cfg.contains("via")) o.via = points(cfg.at("via"), "via");
  return o;
}

inline EquipartitionOptions equipartition(const json& cfg) {
  EquipartitionOptions o;
  const json e = cfg.value("equipartition", json::object());
  o.t_max = get_or(e, "t_max", o.t_max, "equipartition.");
  o.t_required = get_or(e, "t_required", o.t_required, "equipartition.");
  o.output_nodes = get_or(e, "output_nodes", o.output_nodes, "equipartition.");
  o.floor_fraction = get_or(e, "floor_fraction", o.floor_fraction, "equipartition.");
  return o;
}

}  // namespace config

/// CRC-32 of a file's bytes as 8 hex digits.
inline std::string file_crc32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  std::ostringstream hex;
  hex << std::hex << std::setw(8) << std::setfill('0') << crc.checksum();
  return hex.str();
}

/// Header line plus rows, full precision, LF endings.
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  out << std::setprecision(17);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ArtifactError("csv has no column '" + name + "'");
  }
};

/// Reads a numeric CSV; every row must have as many fields as the header.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw ArtifactError(path + ": missing header");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || cell.empty())
        throw ArtifactError(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != t.header.size())
      throw ArtifactError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " fields");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline json point_json(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

}  // namespace hetcon
