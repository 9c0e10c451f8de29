#pragma once

// File formats.
//
// Reading goes through nlohmann::json and is lenient about key order and
// unknown keys.  Writing is hand-rolled: field order is fixed, numbers are
// printed with 17 significant digits (%.17g round-trips any double), and the
// same input always produces the same bytes.

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "planner.hpp"
#include "splits.hpp"

namespace flatplan {

struct ParseError : Error { using Error::Error; };

namespace io {

inline std::string fmt(double x) {
  if (x == 0.0) x = 0.0; // normalize -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

inline std::string to_json(const DecreasingMeasure& m) {
  std::string out = "{\"l\": " + fmt(m.seg.l) + ", \"r\": " + fmt(m.seg.r) +
                    ", \"atom\": " + fmt(m.atom) + ", \"parts\": [";
  for (size_t i = 0; i < m.parts.size(); ++i) {
    if (i) out += ", ";
    out += "[" + fmt(m.parts[i].hi) + ", " + fmt(m.parts[i].w) + "]";
  }
  return out + "]}";
}

inline std::string to_json(const MeasureTuple& t) {
  std::string out = "{\"items\": [";
  for (size_t i = 0; i < t.items.size(); ++i) {
    if (i) out += ", ";
    out += to_json(t.items[i]);
  }
  return out + "]}";
}

inline std::string to_json(const FlatVerdict& v) {
  std::string out = std::string("{\"flat\": ") + (v.flat ? "true" : "false") +
                    ", \"C\": " + fmt(v.c) + ", \"witness\": ";
  out += v.witness ? std::to_string(v.witness) : std::string("null");
  out += ", \"slacks\": [";
  for (size_t i = 0; i < v.slacks.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v.slacks[i]);
  }
  return out + "]}";
}

inline std::string to_json(const SplitResult& s) {
  return std::string("{\"alpha\": ") + fmt(s.alpha) + ", \"kind\": \"" +
         split_kind_name(s.kind) + "\", \"a\": " + to_json(s.a) +
         ", \"b\": " + to_json(s.b) + "}";
}

inline std::string to_json(const RefineNode& n) {
  if (!n.a) {
    return std::string("{\"irreducible\": ") + (n.irreducible ? "true" : "false") +
           ", \"tuple\": " + to_json(n.tuple) + "}";
  }
  return std::string("{\"alpha\": ") + fmt(n.alpha) + ", \"kind\": \"" +
         split_kind_name(n.kind) + "\", \"tuple\": " + to_json(n.tuple) +
         ", \"a\": " + to_json(*n.a) + ", \"b\": " + to_json(*n.b) + "}";
}

inline std::string to_json(const Grid& g, double C) {
  std::string out = "{\"h\": " + fmt(g.h) + ", \"C\": " + fmt(C) + ", \"axes\": [";
  for (size_t k = 0; k < g.axes.size(); ++k) {
    if (k) out += ", ";
    out += "[";
    for (size_t i = 0; i < g.axes[k].size(); ++i) {
      if (i) out += ", ";
      out += fmt(g.axes[k][i]);
    }
    out += "]";
  }
  return out + "]}";
}

// Rows sorted lexicographically by index vector; indices are 0-based.
inline std::string to_csv(const Coupling& c, const Grid& g) {
  const size_t n = g.axes.size();
  std::vector<size_t> order(c.w.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return c.idx[a] < c.idx[b]; });
  std::string out;
  for (size_t k = 1; k <= n; ++k) out += "i" + std::to_string(k) + ",";
  for (size_t k = 1; k <= n; ++k) out += "x" + std::to_string(k) + ",";
  out += "weight\n";
  for (size_t e : order) {
    for (size_t k = 0; k < n; ++k)
      out += std::to_string(c.idx[e][k]) + ",";
    const std::vector<double> x = coupling_point(c, g, e);
    for (size_t k = 0; k < n; ++k) out += fmt(x[k]) + ",";
    out += fmt(c.w[e]) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Readers
// ---------------------------------------------------------------------------

inline nlohmann::json parse_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

namespace detail {

inline double number_at(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ParseError(std::string("expected a number at key \"") + key + "\"");
  return j.at(key).get<double>();
}

inline std::vector<double> numbers_at(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw ParseError(std::string("expected an array at key \"") + key + "\"");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number())
      throw ParseError(std::string("non-numeric entry under \"") + key + "\"");
    out.push_back(v.get<double>());
  }
  return out;
}

} // namespace detail

// Accepts either the native form {"l","r","atom","parts"} or a step density
// {"breakpoints","values","atom"}; the latter is converted on ingestion.
inline DecreasingMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("a measure must be a JSON object");
  if (j.contains("breakpoints")) {
    StepDensity s;
    s.breakpoints = detail::numbers_at(j, "breakpoints");
    s.values = j.contains("values") ? detail::numbers_at(j, "values")
                                    : std::vector<double>{};
    s.atom = j.contains("atom") ? detail::number_at(j, "atom") : 0.0;
    return from_step_density(s);
  }
  const double l = detail::number_at(j, "l");
  const double r = detail::number_at(j, "r");
  const double atom = j.contains("atom") ? detail::number_at(j, "atom") : 0.0;
  std::vector<UniformPart> parts;
  if (j.contains("parts")) {
    if (!j.at("parts").is_array()) throw ParseError("\"parts\" must be an array");
    for (const auto& p : j.at("parts")) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw ParseError("each part must be a [t, w] pair of numbers");
      parts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  }
  return make_measure({l, r}, atom, std::move(parts));
}

inline MeasureTuple tuple_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("items") || !j.at("items").is_array())
    throw ParseError("a tuple must be an object with an \"items\" array");
  std::vector<DecreasingMeasure> items;
  for (const auto& e : j.at("items")) items.push_back(measure_from_json(e));
  return make_tuple(std::move(items));
}

struct GridFile {
  Grid grid;
  double c = 0.0;
};

inline GridFile grid_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("a grid must be a JSON object");
  GridFile gf;
  gf.grid.h = detail::number_at(j, "h");
  gf.c = detail::number_at(j, "C");
  if (!j.contains("axes") || !j.at("axes").is_array())
    throw ParseError("expected an array at key \"axes\"");
  for (const auto& axis : j.at("axes")) {
    std::vector<double> nodes;
    if (!axis.is_array() || axis.empty())
      throw ParseError("each grid axis must be a nonempty array of nodes");
    for (const auto& v : axis) {
      if (!v.is_number()) throw ParseError("non-numeric grid node");
      nodes.push_back(v.get<double>());
    }
    gf.grid.axes.push_back(std::move(nodes));
  }
  if (gf.grid.h <= 0) throw ParseError("grid spacing must be positive");
  return gf;
}

struct CouplingFile {
  size_t n = 0;                          // marginals per row
  Coupling coupling;                     // index vectors + weights
  std::vector<std::vector<double>> pts;  // coordinates as given in the file
};

inline CouplingFile coupling_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty coupling file");
  size_t n = 0;
  {
    std::istringstream hdr(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(hdr, field, ',')) fields.push_back(field);
    if (fields.size() < 3 || fields.back() != "weight" || fields.size() % 2 == 0)
      throw ParseError("coupling header must be i1,..,iN,x1,..,xN,weight");
    n = (fields.size() - 1) / 2;
    for (size_t k = 0; k < n; ++k)
      if (fields[k] != "i" + std::to_string(k + 1) ||
          fields[n + k] != "x" + std::to_string(k + 1))
        throw ParseError("coupling header must be i1,..,iN,x1,..,xN,weight");
  }
  CouplingFile cf;
  cf.n = n;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 2 * n + 1)
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(2 * n + 1) + " fields");
    try {
      std::vector<int> idx(n);
      std::vector<double> x(n);
      for (size_t k = 0; k < n; ++k) idx[k] = std::stoi(fields[k]);
      for (size_t k = 0; k < n; ++k) x[k] = std::stod(fields[n + k]);
      cf.coupling.idx.push_back(std::move(idx));
      cf.coupling.w.push_back(std::stod(fields.back()));
      cf.pts.push_back(std::move(x));
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return cf;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("short write to " + path);
}

inline MeasureTuple load_tuple(const std::string& path) {
  return tuple_from_json(parse_text(read_file(path)));
}

} // namespace io
} // namespace flatplan
