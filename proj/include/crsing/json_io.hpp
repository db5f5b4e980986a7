#pragma once

// ManifoldSpec <-> JSON, plus serializers for the reports the CLI emits.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "manifold.hpp"

namespace crsing {

using json = nlohmann::json;

// ---- scalars ------------------------------------------------------------------

template <class K>
K scalar_from_json(const json& v);

template <>
inline Exact scalar_from_json<Exact>(const json& v) {
  auto part = [](const json& x) -> Exact {
    if (x.is_null()) return Exact();
    if (x.is_string()) return parse_exact_real(x.get<std::string>());
    if (x.is_number_integer()) return Exact(x.get<long>());
    if (x.is_number()) return parse_exact_real(x.dump());
    throw Error("scalar: expected a number or a string");
  };
  if (v.is_object()) {
    Exact re = part(v.value("re", json())), im = part(v.value("im", json()));
    return re + im * Exact::I();
  }
  return part(v);
}

template <>
inline cplx scalar_from_json<cplx>(const json& v) {
  auto part = [](const json& x) -> double {
    if (x.is_null()) return 0;
    if (x.is_number()) return x.get<double>();
    if (x.is_string()) return parse_exact_real(x.get<std::string>()).to_complex().real();
    throw Error("scalar: expected a number or a string");
  };
  if (v.is_object()) return {part(v.value("re", json())), part(v.value("im", json()))};
  return part(v);
}

inline json scalar_to_json(const Exact& x) {
  json o;
  o["re"] = exact_real_str(x.re());
  if (!x.im().is_zero()) o["im"] = exact_real_str(x.im());
  return o;
}

inline json scalar_to_json(const cplx& x) {
  json o;
  o["re"] = x.real();
  if (x.imag() != 0) o["im"] = x.imag();
  return o;
}

inline json complex_to_json(cplx x) { return json::array({x.real(), x.imag()}); }

// ---- series -------------------------------------------------------------------

// Terms of a series in (z_1..z_p, w_1..w_p) as {z_exp, zbar_exp, coeff}; other variable counts use "exp".
template <class K>
json series_to_json(const Series<K>& s, int p = -1) {
  json terms = json::array();
  for (auto& [m, v] : s) {
    json t;
    auto e = m.vec();
    if (p > 0 && int(e.size()) == 2 * p) {
      t["z_exp"] = std::vector<int>(e.begin(), e.begin() + p);
      t["zbar_exp"] = std::vector<int>(e.begin() + p, e.end());
    } else {
      t["exp"] = e;
    }
    t["coeff"] = scalar_to_json(v);
    terms.push_back(t);
  }
  return terms;
}

template <class K>
Series<K> series_from_json(const json& terms, int nvars, int order) {
  Series<K> s(nvars, order);
  if (!terms.is_array()) throw Error("series: expected an array of terms");
  for (auto& t : terms) {
    std::vector<int> e;
    if (t.contains("exp")) {
      e = t.at("exp").get<std::vector<int>>();
    } else {
      e = t.at("z_exp").get<std::vector<int>>();
      auto w = t.at("zbar_exp").get<std::vector<int>>();
      e.insert(e.end(), w.begin(), w.end());
    }
    if (int(e.size()) != nvars) throw Error("series: exponent length " + std::to_string(e.size()) + ", expected " +
                                            std::to_string(nvars));
    Multiindex m(nvars);
    for (int i = 0; i < nvars; ++i) {
      if (e[i] < 0) throw Error("series: negative exponent");
      m.set(i, e[i]);
    }
    s.add(m, scalar_from_json<K>(t.at("coeff")));
  }
  return s;
}

template <class K>
json jet_to_json(const JetMap<K>& f, int p = -1) {
  json a = json::array();
  for (auto& c : f.components()) a.push_back(series_to_json(c, p));
  return a;
}

template <class K>
json matrix_to_json(const Matrix<K>& M) {
  json a = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < M.cols(); ++j) r.push_back(scalar_to_json(M(i, j)));
    a.push_back(r);
  }
  return a;
}

// ---- manifold spec --------------------------------------------------------------

inline Kind kind_from_string(const std::string& s) {
  if (s == "elliptic" || s == "e") return Kind::elliptic;
  if (s == "hyperbolic" || s == "h") return Kind::hyperbolic;
  if (s == "complex" || s == "s") return Kind::complex;
  throw Error("unknown component type '" + s + "'");
}

template <class K>
Component<K> component_from_json(const json& c) {
  Component<K> out;
  out.kind = kind_from_string(c.at("type").get<std::string>());
  const json& g = c.at("gamma");
  if (g.is_string() && (g.get<std::string>() == "inf" || g.get<std::string>() == "infinity")) {
    out.infinite = true;
    out.gamma = Field<K>::zero();
  } else {
    out.gamma = scalar_from_json<K>(g);
  }
  out.bishop = c.value("bishop", false);
  if (c.contains("rotation")) {
    const json& r = c.at("rotation");
    Rotation rot;
    if (r.is_string()) {
      if (r.get<std::string>() != "irrational") throw Error("rotation: expected \"irrational\" or {num, den}");
      rot.irrational = true;
    } else {
      rot.irrational = r.value("irrational", false);
      rot.num = r.value("num", 0L);
      rot.den = r.value("den", 1L);
      if (!rot.irrational && rot.den <= 0) throw Error("rotation: den must be positive");
    }
    out.rotation = rot;
  }
  return out;
}

template <class K>
json component_to_json(const Component<K>& c) {
  json o;
  o["type"] = kind_name(c.kind);
  if (c.infinite) o["gamma"] = "inf";
  else o["gamma"] = scalar_to_json(c.gamma);
  if (c.bishop) o["bishop"] = true;
  if (c.rotation) {
    if (c.rotation->irrational) o["rotation"] = "irrational";
    else o["rotation"] = {{"num", c.rotation->num}, {"den", c.rotation->den}};
  }
  return o;
}

// Build a spec from the documented schema. "truncation" can be overridden by order > 0.
// An "equations" array (as emitted by spec_to_json) replaces the quadric plus perturbation.
template <class K>
ManifoldSpec<K> spec_from_json(const json& j, int order = 0) {
  if (!j.is_object()) throw Error("spec: top level must be an object");
  int N = order > 0 ? order : j.value("truncation", 6);
  if (N < 2) throw Error("spec: truncation must be >= 2");
  std::vector<Component<K>> comps;
  for (auto& c : j.at("components")) comps.push_back(component_from_json<K>(c));
  auto m = build_product_quadric<K>(comps, N, true);
  if (j.contains("p") && j.at("p").get<int>() != m.p)
    throw Error("spec: p = " + std::to_string(j.at("p").get<int>()) + " but components cover " + std::to_string(m.p) +
                " slots");
  int p = m.p, n = 2 * p;
  if (j.contains("square_form")) {
    const json& sf = j.at("square_form");
    SquareForm<K> sq;
    sq.B = Matrix<K>(p, p);
    auto& B = sf.at("B");
    if (int(B.size()) != p) throw Error("square_form: B must be p x p");
    for (int a = 0; a < p; ++a) {
      if (int(B[a].size()) != p) throw Error("square_form: B must be p x p");
      for (int b = 0; b < p; ++b) sq.B(a, b) = scalar_from_json<K>(B[a][b]);
    }
    auto& R = sf.at("R");
    if (int(R.size()) != p) throw Error("square_form: R needs p entries");
    for (int a = 0; a < p; ++a) sq.R.push_back(series_from_json<K>(R[a], n, N + 1));
    m.square = sq;
    square_to_E(m);
  }
  if (j.contains("equations")) {
    auto& E = j.at("equations");
    if (int(E.size()) != p) throw Error("equations: need p entries");
    m.square.reset();
    for (int a = 0; a < p; ++a) m.E[a] = series_from_json<K>(E[a], n, N + 1);
    m.roots.assign(p, std::nullopt);
    if (j.contains("roots")) {
      auto& R = j.at("roots");
      for (int a = 0; a < p && a < int(R.size()); ++a)
        if (!R[a].is_null()) m.roots[a] = series_from_json<K>(R[a], n, N + 1);
    }
  }
  if (j.contains("perturbation")) {
    std::vector<PerturbationTerm<K>> terms;
    for (auto& t : j.at("perturbation")) {
      PerturbationTerm<K> pt;
      pt.target = t.at("target").get<int>();
      pt.z_exp = t.at("z_exp").get<std::vector<int>>();
      pt.w_exp = t.at("zbar_exp").get<std::vector<int>>();
      pt.coeff = scalar_from_json<K>(t.at("coeff"));
      pt.inside = t.value("inside", false);
      terms.push_back(pt);
    }
    apply_perturbation(m, terms);
  }
  for (int a = 0; a < p; ++a) {
    for (auto& [mi, v] : m.E[a])
      if (mi.degree() < 2) throw Error("equation " + std::to_string(a + 1) + " has a constant or linear term");
  }
  return m;
}

template <class K>
json spec_to_json(const ManifoldSpec<K>& m) {
  json o;
  o["p"] = m.p;
  o["truncation"] = m.N;
  for (auto& c : m.components) o["components"].push_back(component_to_json(c));
  for (auto& e : m.E) o["equations"].push_back(series_to_json(e, m.p));
  bool any = false;
  json roots = json::array();
  for (auto& r : m.roots) {
    roots.push_back(r ? series_to_json(*r, m.p) : json());
    any = any || bool(r);
  }
  if (any) o["roots"] = roots;
  return o;
}

// Parse errors carry the line and column of the offending byte.
inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

}  // namespace crsing
