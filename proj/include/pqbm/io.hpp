#pragma once

#include "pqbm/bodies.hpp"
#include "pqbm/boundary.hpp"
#include "pqbm/conditions.hpp"
#include "pqbm/density.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pqbm::io {

using json = nlohmann::ordered_json;

class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

inline constexpr int kSummarySchemaVersion = 1;

// Fixed-width text for reports; identical inputs give identical bytes.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += csv_field(cells[i]);
  }
  return line + "\n";
}

// --- schema helpers --------------------------------------------------------

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline double get_num(const json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_number()) throw SchemaError(where + ": field '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

inline double get_num(const json& j, const char* key, const std::string& where, double dflt) {
  return j.contains(key) ? get_num(j, key, where) : dflt;
}

inline int get_int(const json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_number_integer()) throw SchemaError(where + ": field '" + std::string(key) + "' must be an integer");
  return v.get<int>();
}

inline std::string get_str(const json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_string()) throw SchemaError(where + ": field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

inline Vec get_vec(const json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_array() || v.empty()) throw SchemaError(where + ": field '" + std::string(key) + "' must be a nonempty array");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw SchemaError(where + ": field '" + std::string(key) + "' must hold numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

inline std::vector<double> get_list(const json& j, const char* key, const std::string& where) {
  const Vec v = get_vec(j, key, where);
  return {v.data(), v.data() + v.size()};
}

inline void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw SchemaError(where + ": unknown field '" + it.key() + "'");
  }
}

// --- catalog ---------------------------------------------------------------

// {"kind": "ball", "n": 2, "radius": 1.3}
// {"kind": "box", "half_widths": [1, 2]}
// {"kind": "cube", "n": 3, "half_width": 1}
// {"kind": "ellipsoid", "semi_axes": [2, 1]}
// {"kind": "lq_ball", "n": 2, "q": 3, "scale": 1}
// {"kind": "cross_polytope", "n": 2, "scale": 1}
// {"kind": "shifted_ball", "radius": 1, "center": [5, 0]}
// {"kind": "polygon", "angles": [...], "heights": [...]}
// {"kind": "polytope", "normals": [[...], ...], "heights": [...]}
inline Body parse_body(const json& j, const std::string& where = "body") {
  const std::string kind = get_str(j, "kind", where);
  const std::string at = where + " (" + kind + ")";
  if (kind == "ball") {
    only_keys(j, {"kind", "n", "radius"}, at);
    return Body::ball(get_int(j, "n", at), get_num(j, "radius", at));
  }
  if (kind == "box") {
    only_keys(j, {"kind", "half_widths"}, at);
    return Body::box(get_vec(j, "half_widths", at));
  }
  if (kind == "cube") {
    only_keys(j, {"kind", "n", "half_width"}, at);
    return Body::cube(get_int(j, "n", at), get_num(j, "half_width", at));
  }
  if (kind == "ellipsoid") {
    only_keys(j, {"kind", "semi_axes"}, at);
    return Body::ellipsoid(get_vec(j, "semi_axes", at));
  }
  if (kind == "lq_ball") {
    only_keys(j, {"kind", "n", "q", "scale"}, at);
    return Body::lq_ball(get_int(j, "n", at), get_num(j, "q", at), get_num(j, "scale", at, 1.0));
  }
  if (kind == "cross_polytope") {
    only_keys(j, {"kind", "n", "scale"}, at);
    return Body::cross_polytope(get_int(j, "n", at), get_num(j, "scale", at, 1.0));
  }
  if (kind == "shifted_ball") {
    only_keys(j, {"kind", "radius", "center"}, at);
    return Body::shifted_ball(get_num(j, "radius", at), get_vec(j, "center", at));
  }
  if (kind == "polygon") {
    only_keys(j, {"kind", "angles", "heights"}, at);
    return Body::polygon(get_list(j, "angles", at), get_list(j, "heights", at));
  }
  if (kind == "polytope") {
    only_keys(j, {"kind", "normals", "heights"}, at);
    const auto& rows = field(j, "normals", at);
    if (!rows.is_array() || rows.empty()) throw SchemaError(at + ": 'normals' must be a nonempty array");
    const Vec h = get_vec(j, "heights", at);
    if (static_cast<Eigen::Index>(rows.size()) != h.size()) throw SchemaError(at + ": normals/heights length mismatch");
    const std::size_t n = rows[0].is_array() ? rows[0].size() : 0;
    Mat A(h.size(), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || rows[i].size() != n) throw SchemaError(at + ": ragged normal matrix");
      for (std::size_t k = 0; k < n; ++k) {
        if (!rows[i][k].is_number()) throw SchemaError(at + ": normals must hold numbers");
        A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
      }
    }
    return Body::polytope(HPolytope(A, h));
  }
  throw SchemaError(where + ": unknown body kind '" + kind + "'");
}

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// Inverse of parse_body.
inline json body_json(const Body& k) {
  const int n = k.dim();
  return std::visit(
      overloaded{[&](const BallShape& s) { return json{{"kind", "ball"}, {"n", n}, {"radius", s.radius}}; },
                 [&](const BoxShape& s) { return json{{"kind", "box"}, {"half_widths", vec_json(s.half_widths)}}; },
                 [&](const EllipsoidShape& s) { return json{{"kind", "ellipsoid"}, {"semi_axes", vec_json(s.semi_axes)}}; },
                 [&](const LqBallShape& s) { return json{{"kind", "lq_ball"}, {"n", n}, {"q", s.q}, {"scale", s.scale}}; },
                 [&](const CrossPolytopeShape& s) { return json{{"kind", "cross_polytope"}, {"n", n}, {"scale", s.scale}}; },
                 [&](const ShiftedBallShape& s) {
                   return json{{"kind", "shifted_ball"}, {"radius", s.radius}, {"center", vec_json(s.center)}};
                 },
                 [&](const HPolytope& p) {
                   json rows = json::array();
                   for (Eigen::Index i = 0; i < p.normals().rows(); ++i) rows.push_back(vec_json(p.normals().row(i).transpose()));
                   return json{{"kind", "polytope"}, {"normals", rows}, {"heights", vec_json(p.heights())}};
                 }},
      k.shape());
}

// {"kind": "disk", "radius": 1} | {"kind": "ball", "n": 3, "radius": 1}
// {"kind": "ellipsoid", "semi_axes": [2, 1]}
// {"kind": "smoothed_box", "half_widths": [1, 1], "eps": 0.05}
inline SmoothBody parse_smooth_body(const json& j, const std::string& where = "body") {
  const std::string kind = get_str(j, "kind", where);
  const std::string at = where + " (" + kind + ")";
  if (kind == "disk") {
    only_keys(j, {"kind", "radius"}, at);
    return SmoothBody::disk(get_num(j, "radius", at, 1.0));
  }
  if (kind == "ball") {
    only_keys(j, {"kind", "n", "radius"}, at);
    return SmoothBody::ball(get_int(j, "n", at), get_num(j, "radius", at, 1.0));
  }
  if (kind == "ellipsoid") {
    only_keys(j, {"kind", "semi_axes"}, at);
    return SmoothBody::ellipsoid(get_vec(j, "semi_axes", at));
  }
  if (kind == "smoothed_box") {
    only_keys(j, {"kind", "half_widths", "eps"}, at);
    return SmoothBody::smoothed_box(get_vec(j, "half_widths", at), get_num(j, "eps", at, 0.05));
  }
  throw SchemaError(where + ": unknown smooth body kind '" + kind + "'");
}

inline std::string describe(const SmoothBody& s) {
  std::string out = s.label + "(";
  if (s.kind == SmoothBody::Kind::Trig) return out + ")";
  out += fmt_vec(s.a);
  if (s.kind == SmoothBody::Kind::SmoothedBox) out += ",eps=" + fmt_num(s.eps);
  return out + ")";
}

// {"kind": "gaussian" | "lebesgue" | "power", "n": 2, "alpha": 4}
inline Density parse_density(const json& j, int n_default = 0, const std::string& where = "density") {
  if (j.is_string()) {
    if (n_default <= 0) throw SchemaError(where + ": dimension unknown");
    return parse_density(json{{"kind", j.get<std::string>()}}, n_default, where);
  }
  only_keys(j, {"kind", "n", "alpha"}, where);
  const std::string kind = get_str(j, "kind", where);
  const int n = j.contains("n") ? get_int(j, "n", where) : n_default;
  if (n <= 0) throw SchemaError(where + ": dimension unknown");
  if (kind == "gaussian") return Density::gaussian(n);
  if (kind == "lebesgue") return Density::lebesgue(n);
  if (kind == "power") return Density::power(n, get_num(j, "alpha", where, 4.0));
  throw SchemaError(where + ": unknown density kind '" + kind + "'");
}

// {"n":3, "p":0, "q":0, "r":1.41, "R":2, "k1":1, "k2":1, "c_poin":1}
// or with "density": "gaussian" | "lebesgue" filling k1 and k2.
inline ConditionInput parse_condition(const json& j, const std::string& where = "row") {
  only_keys(j, {"n", "p", "q", "r", "R", "k1", "k2", "c_poin", "density", "label"}, where);
  ConditionInput in;
  in.n = get_int(j, "n", where);
  in.p = get_num(j, "p", where);
  in.q = get_num(j, "q", where, 0.0);
  in.r = get_num(j, "r", where);
  if (j.contains("R")) in.R = get_num(j, "R", where);
  if (j.contains("density")) {
    const std::string d = get_str(j, "density", where);
    if (d == "gaussian") {
      in.k1 = 1.0;
      in.k2 = 1.0;
    } else if (d == "lebesgue") {
      in.k1 = 0.0;
      in.k2 = 0.0;
    } else {
      throw SchemaError(where + ": density must be 'gaussian' or 'lebesgue'");
    }
  }
  in.k1 = get_num(j, "k1", where, in.k1);
  in.k2 = get_num(j, "k2", where, in.k2);
  if (j.contains("c_poin")) in.c_poin = get_num(j, "c_poin", where);
  return in;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

}  // namespace pqbm::io
