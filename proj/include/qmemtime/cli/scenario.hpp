#pragma once

// Scenario files (JSON, schema_version "1").
//
//   {
//     "schema_version": "1",
//     "mode": "single" | "interconnection",
//     "oscillator":  {"nu": 2, "R": [[...]], "M": [[...]], "D": [[...]]},      // single
//     "oscillators": [{"nu", "R", "M", "D", "N"}, {...}], "R12": [[...]],     // interconnection
//     "P": [[...]],                                   // optional, default I/2
//     "isolation": {"s": 2, "F_override": [[...]]},   // both optional
//     "analysis": {"t_max": 1.0, "grid_points": 2001, "epsilon": 1e-5,
//                  "eps_grid": [1e-2, 1e-3]},         // all optional
//     "seed": 42
//   }
//
// Matrices are row-major nested arrays. System variables are ordered
// (q1, p1, q2, p2, ...); only dimensions can be checked against that.
// D defaults to the identity (all output fields selected), R12 to zero.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmemtime/errors.hpp"
#include "qmemtime/numerics.hpp"
#include "qmemtime/oqho_model.hpp"

namespace qmemtime::cli {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

struct SingleOscillator {
  int nu = 0;
  OqhoParams params;
};

struct IsolationSettings {
  std::optional<int> s;  // default: d = n - rank M
  std::optional<RealMatrix> F_override;
};

struct AnalysisSettings {
  std::optional<double> t_max;
  std::size_t grid_points = 2001;
  std::optional<double> epsilon;
  std::vector<double> eps_grid;
};

struct Scenario {
  std::string schema_version = kSchemaVersion;
  std::string mode;  // "single" or "interconnection"
  std::optional<SingleOscillator> single;
  std::optional<InterconnectionSpec> interconnection;
  std::optional<RealMatrix> P;
  IsolationSettings isolation;
  AnalysisSettings analysis;
  std::uint64_t seed = 0;

  bool is_interconnection() const { return mode == "interconnection"; }
  int n() const {
    return single ? 2 * single->nu
                  : 2 * (interconnection->osc[0].nu + interconnection->osc[1].nu);
  }
};

inline json matrix_to_json(const RealMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

class Reader {
 public:
  std::vector<std::string> issues;

  std::optional<RealMatrix> matrix(const json& parent, const std::string& key,
                                   const std::string& path, bool required) {
    if (!parent.contains(key)) {
      if (required) issues.push_back(path + ": missing");
      return std::nullopt;
    }
    const json& v = parent.at(key);
    if (!v.is_array() || v.empty()) {
      issues.push_back(path + ": expected a non-empty array of rows");
      return std::nullopt;
    }
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (!v[i].is_array() || v[i].empty()) {
        issues.push_back(path + ": row " + std::to_string(i) + " is not a non-empty array");
        return std::nullopt;
      }
      if (i == 0) cols = v[i].size();
      if (v[i].size() != cols) {
        issues.push_back(path + ": ragged rows (row 0 has " + std::to_string(cols) +
                         " entries, row " + std::to_string(i) + " has " +
                         std::to_string(v[i].size()) + ")");
        return std::nullopt;
      }
    }
    RealMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const json& x = v[i][j];
        if (!x.is_number()) {
          issues.push_back(path + ": entry (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") is not a number");
          return std::nullopt;
        }
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x.get<double>();
      }
    }
    return m;
  }

  std::optional<int> integer(const json& parent, const std::string& key,
                             const std::string& path, bool required) {
    if (!parent.contains(key)) {
      if (required) issues.push_back(path + ": missing");
      return std::nullopt;
    }
    const json& v = parent.at(key);
    if (!v.is_number_integer()) {
      issues.push_back(path + ": expected an integer");
      return std::nullopt;
    }
    return v.get<int>();
  }

  std::optional<double> number(const json& parent, const std::string& key,
                               const std::string& path) {
    if (!parent.contains(key)) return std::nullopt;
    const json& v = parent.at(key);
    if (!v.is_number()) {
      issues.push_back(path + ": expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }
};

inline std::optional<OscillatorSpec> read_oscillator(Reader& rd, const json& o,
                                                     const std::string& path,
                                                     bool with_n) {
  if (!o.is_object()) {
    rd.issues.push_back(path + ": expected an object");
    return std::nullopt;
  }
  OscillatorSpec spec;
  const auto nu = rd.integer(o, "nu", path + ".nu", true);
  auto r = rd.matrix(o, "R", path + ".R", true);
  auto m = rd.matrix(o, "M", path + ".M", true);
  auto d = rd.matrix(o, "D", path + ".D", false);
  std::optional<RealMatrix> n;
  if (with_n) n = rd.matrix(o, "N", path + ".N", true);
  if (!nu || !r || !m || (with_n && !n)) return std::nullopt;
  if (*nu < 1) {
    rd.issues.push_back(path + ".nu: must be >= 1");
    return std::nullopt;
  }
  spec.nu = *nu;
  spec.m = static_cast<int>(m->rows());
  if (spec.m < 2 || spec.m % 2 != 0) {
    rd.issues.push_back(path + ".M: number of rows (field channels) must be even and >= 2, got " +
                        std::to_string(m->rows()));
    return std::nullopt;
  }
  spec.R = std::move(*r);
  spec.M = std::move(*m);
  spec.D = d ? std::move(*d) : RealMatrix::Identity(spec.m, spec.m);
  if (n) spec.N = std::move(*n);
  return spec;
}

}  // namespace detail

/// Converts a parsed JSON document into a validated Scenario. All problems
/// are collected and reported together.
inline Scenario scenario_from_json(const json& doc) {
  detail::Reader rd;
  Scenario sc;
  if (!doc.is_object()) {
    throw Error(ErrorKind::kValidation, "scenario: top level must be a JSON object",
                {"<root>: expected an object"});
  }
  if (!doc.contains("schema_version") || !doc["schema_version"].is_string()) {
    rd.issues.push_back("schema_version: missing or not a string");
  } else if (doc["schema_version"].get<std::string>() != kSchemaVersion) {
    rd.issues.push_back("schema_version: unsupported version '" +
                        doc["schema_version"].get<std::string>() + "', expected '" +
                        kSchemaVersion + "'");
  }
  if (!doc.contains("mode") || !doc["mode"].is_string()) {
    rd.issues.push_back("mode: missing or not a string");
  } else {
    sc.mode = doc["mode"].get<std::string>();
  }

  if (sc.mode == "single") {
    if (!doc.contains("oscillator")) {
      rd.issues.push_back("oscillator: missing");
    } else if (auto o = detail::read_oscillator(rd, doc["oscillator"], "oscillator", false)) {
      collect_param_issues({o->R, o->M, o->D}, make_ccr(o->nu, o->m), "oscillator.",
                           rd.issues);
      sc.single = SingleOscillator{o->nu, {o->R, o->M, o->D}};
    }
  } else if (sc.mode == "interconnection") {
    if (!doc.contains("oscillators") || !doc["oscillators"].is_array() ||
        doc["oscillators"].size() != 2) {
      rd.issues.push_back("oscillators: expected an array of exactly two oscillators");
    } else {
      auto o1 = detail::read_oscillator(rd, doc["oscillators"][0], "oscillators[0]", true);
      auto o2 = detail::read_oscillator(rd, doc["oscillators"][1], "oscillators[1]", true);
      auto r12 = rd.matrix(doc, "R12", "R12", false);
      if (o1 && o2) {
        InterconnectionSpec spec;
        spec.osc = {std::move(*o1), std::move(*o2)};
        spec.R12 = r12 ? std::move(*r12)
                       : RealMatrix::Zero(2 * spec.osc[0].nu, 2 * spec.osc[1].nu);
        collect_interconnection_issues(spec, rd.issues);
        sc.interconnection = std::move(spec);
      }
    }
  } else if (!sc.mode.empty()) {
    rd.issues.push_back("mode: expected 'single' or 'interconnection', got '" + sc.mode + "'");
  }

  const bool have_model = sc.single.has_value() || sc.interconnection.has_value();
  const Eigen::Index n = have_model ? sc.n() : 0;
  sc.P = rd.matrix(doc, "P", "P", false);
  if (sc.P && have_model && (sc.P->rows() != n || sc.P->cols() != n)) {
    rd.issues.push_back("P: expected " + std::to_string(n) + "x" + std::to_string(n) +
                        ", got " + shape_of(*sc.P));
  }
  if (doc.contains("isolation")) {
    const json& iso = doc["isolation"];
    if (!iso.is_object()) {
      rd.issues.push_back("isolation: expected an object");
    } else {
      sc.isolation.s = rd.integer(iso, "s", "isolation.s", false);
      sc.isolation.F_override = rd.matrix(iso, "F_override", "isolation.F_override", false);
      if (sc.isolation.s && *sc.isolation.s < 1) {
        rd.issues.push_back("isolation.s: must be >= 1");
      }
      if (sc.isolation.F_override && have_model && sc.isolation.F_override->cols() != n) {
        rd.issues.push_back("isolation.F_override: expected s x " + std::to_string(n) +
                            ", got " + shape_of(*sc.isolation.F_override));
      }
    }
  }
  if (doc.contains("analysis")) {
    const json& an = doc["analysis"];
    if (!an.is_object()) {
      rd.issues.push_back("analysis: expected an object");
    } else {
      sc.analysis.t_max = rd.number(an, "t_max", "analysis.t_max");
      if (sc.analysis.t_max && !(*sc.analysis.t_max > 0.0)) {
        rd.issues.push_back("analysis.t_max: must be > 0");
      }
      if (auto g = rd.integer(an, "grid_points", "analysis.grid_points", false)) {
        if (*g < 2) {
          rd.issues.push_back("analysis.grid_points: must be >= 2");
        } else {
          sc.analysis.grid_points = static_cast<std::size_t>(*g);
        }
      }
      sc.analysis.epsilon = rd.number(an, "epsilon", "analysis.epsilon");
      if (sc.analysis.epsilon && !(*sc.analysis.epsilon > 0.0)) {
        rd.issues.push_back("analysis.epsilon: must be > 0");
      }
      if (an.contains("eps_grid")) {
        const json& eg = an["eps_grid"];
        if (!eg.is_array()) {
          rd.issues.push_back("analysis.eps_grid: expected an array of numbers");
        } else {
          for (const auto& e : eg) {
            if (!e.is_number() || !(e.get<double>() > 0.0)) {
              rd.issues.push_back("analysis.eps_grid: entries must be positive numbers");
              break;
            }
            sc.analysis.eps_grid.push_back(e.get<double>());
          }
        }
      }
    }
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) {
      rd.issues.push_back("seed: expected a non-negative integer");
    } else {
      sc.seed = doc["seed"].get<std::uint64_t>();
    }
  }

  if (!rd.issues.empty()) {
    std::ostringstream os;
    os << "scenario validation failed with " << rd.issues.size() << " issue"
       << (rd.issues.size() == 1 ? "" : "s") << ": " << rd.issues.front();
    throw Error(ErrorKind::kValidation, os.str(), rd.issues);
  }
  return sc;
}

/// Parses scenario text; JSON syntax errors report line and column.
inline Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "scenario parse error at line " << line << ", column " << col << ": " << e.what();
    throw Error(ErrorKind::kParse, os.str());
  }
  return scenario_from_json(doc);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

namespace detail {
inline json oscillator_to_json(const OscillatorSpec& o, bool with_n) {
  json j;
  j["nu"] = o.nu;
  j["R"] = matrix_to_json(o.R);
  j["M"] = matrix_to_json(o.M);
  j["D"] = matrix_to_json(o.D);
  if (with_n) j["N"] = matrix_to_json(o.N);
  return j;
}
}  // namespace detail

inline json scenario_to_json(const Scenario& sc) {
  json doc;
  doc["schema_version"] = sc.schema_version;
  doc["mode"] = sc.mode;
  if (sc.single) {
    OscillatorSpec o;
    o.nu = sc.single->nu;
    o.R = sc.single->params.R;
    o.M = sc.single->params.M;
    o.D = sc.single->params.D;
    doc["oscillator"] = detail::oscillator_to_json(o, false);
  }
  if (sc.interconnection) {
    doc["oscillators"] = json::array({detail::oscillator_to_json(sc.interconnection->osc[0], true),
                                      detail::oscillator_to_json(sc.interconnection->osc[1], true)});
    doc["R12"] = matrix_to_json(sc.interconnection->R12);
  }
  if (sc.P) doc["P"] = matrix_to_json(*sc.P);
  json iso = json::object();
  if (sc.isolation.s) iso["s"] = *sc.isolation.s;
  if (sc.isolation.F_override) iso["F_override"] = matrix_to_json(*sc.isolation.F_override);
  doc["isolation"] = iso;
  json an = json::object();
  if (sc.analysis.t_max) an["t_max"] = *sc.analysis.t_max;
  an["grid_points"] = sc.analysis.grid_points;
  if (sc.analysis.epsilon) an["epsilon"] = *sc.analysis.epsilon;
  if (!sc.analysis.eps_grid.empty()) an["eps_grid"] = sc.analysis.eps_grid;
  doc["analysis"] = an;
  doc["seed"] = sc.seed;
  return doc;
}

}  // namespace qmemtime::cli
