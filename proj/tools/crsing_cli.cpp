// crsing: command-line front end.
//
//   crsing <command> <spec.json> [--order N] [--backend exact|float] [--tolerance t]
//          [--kmax k] [--output json|text] [--seed s] [--eps-class 1,-1,...] [--grid n]
//
// Exit codes: 0 success, 1 mathematical obstruction, 2 input error, 3 budget exceeded.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "crsing/attach.hpp"
#include "crsing/json_io.hpp"
#include "crsing/rigidity.hpp"

using namespace crsing;

namespace {

struct RunConfig {
  std::string command, input;
  int order = 0;
  std::string backend = "exact";
  double tolerance = 1e-9;
  int kmax = 6;
  std::string output = "json";
  unsigned seed = 12345;
  std::string eps_class;
  int grid = 4;
};

struct Outcome {
  json report;
  int status = 0;
};

template <class K>
json spectrum_json(const SlotSpectrum<K>& s) {
  json o;
  o["kind"] = kind_name(s.kind);
  if (s.infinite) o["gamma"] = "inf";
  else o["gamma"] = scalar_to_json(s.gamma);
  o["lambda"] = complex_to_json(s.lambda_c);
  o["mu"] = complex_to_json(s.mu_c);
  if constexpr (Field<K>::exact) {
    if (s.lambda) o["lambda_exact"] = scalar_to_json(*s.lambda);
    if (s.mu) o["mu_exact"] = scalar_to_json(*s.mu);
  }
  o["parabolic"] = s.parabolic;
  o["root_of_unity"] = s.root_of_unity;
  o["normalized"] = s.normalized;
  return o;
}

json divisors_json(const SmallDivisorReport& r) {
  json o;
  o["kind"] = r.kind;
  o["omega"] = r.omega;
  o["brjuno_partial"] = r.brjuno_partial;
  o["resonant"] = r.resonant;
  o["evaluated"] = r.evaluated;
  if (r.kind == "poincare") {
    o["d"] = r.d;
    o["c"] = r.c;
  }
  return o;
}

template <class K>
std::vector<json> series_list(const std::vector<Series<K>>& v, int p = -1) {
  std::vector<json> out;
  for (auto& s : v) out.push_back(series_to_json(s, p));
  return out;
}

SignVector parse_signs(const std::string& s) {
  SignVector v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "1" || tok == "+1" || tok == "+") v.push_back(1);
    else if (tok == "-1" || tok == "-") v.push_back(-1);
    else throw Error("--eps-class: expected a comma separated list of +1/-1, got '" + tok + "'");
  }
  return v;
}

template <class K>
Outcome cmd_classify(const RunConfig& cfg, const ManifoldSpec<K>& m) {
  Outcome out;
  auto rep = classify(m);
  auto cb = check_condition_B(m, 20, cfg.seed);
  json& r = out.report;
  r["p"] = rep.p;
  for (auto& s : rep.slots) r["slots"].push_back(spectrum_json(s));
  r["conditionB"] = cb.holds;
  r["conditionB_method"] = cb.method;
  if (cb.method != "exact") r["conditionB_seed"] = cfg.seed;
  r["conditionJ"] = rep.conditionJ;
  r["distinct_eigenvalues"] = rep.distinct;
  r["nonresonant"] = rep.nonresonant;
  r["notes"] = rep.notes;
  out.status = cb.holds && rep.conditionJ ? 0 : 1;
  return out;
}

template <class K>
Outcome cmd_deck(const RunConfig&, const ManifoldSpec<K>& m) {
  Outcome out;
  json& r = out.report;
  int full = 1 << m.p;
  auto search = search_deck_group(m);
  r["group_order"] = search.group_order;
  r["expected_order"] = full;
  r["square_form"] = bool(m.square);
  json seeds = json::array();
  for (int k = 0; k < int(search.obstructed_degree.size()); ++k) {
    json s;
    s["mask"] = k + 1;
    s["lifts"] = search.obstructed_degree[k] < 0;
    if (search.obstructed_degree[k] >= 0) {
      s["obstructed_degree"] = search.obstructed_degree[k];
      s["residual"] = search.residual[k];
    }
    seeds.push_back(s);
  }
  r["seeds"] = seeds;
  if (search.group_order < full) {
    r["conditionD"] = false;
    out.status = 1;
    return out;
  }
  auto fam = build_deck_family(m);
  auto v = verify_family(fam, m);
  r["conditionD"] = fam.conditionD;
  r["fast_path"] = fam.square_path;
  r["abelian"] = v.abelian;
  r["passed"] = v.passed;
  r["residuals"] = {{"involution", v.involution},     {"commutation", v.commutation},
                    {"invariance", v.invariance},     {"rho_intertwining", v.rho_intertwining},
                    {"reversibility", v.reversibility}, {"sigma_commutation", v.sigma_commutation}};
  r["partner"] = fam.partner;
  for (auto& t : fam.tau1) r["tau1"].push_back(jet_to_json(t, m.p));
  r["notes"] = fam.notes;
  out.status = v.passed ? 0 : 1;
  return out;
}

template <class K>
Outcome cmd_normal_form(const RunConfig&, const ManifoldSpec<K>& m) {
  Outcome out;
  json& r = out.report;
  auto fam = build_deck_family(m);
  auto nf = mw_normalform(fam, m.components);
  r["Lambda1"] = series_list(nf.Lambda1);
  r["M"] = series_list(nf.M);
  r["residuals"] = {{"commutation", nf.commutation_residual}, {"shape", nf.shape_residual},
                    {"product", nf.product_residual},         {"reality", nf.reality_residual},
                    {"rho", nf.rho_residual},                 {"lambda0", nf.lambda0_residual}};
  r["warnings"] = nf.warnings;
  bool elliptic = true;
  for (auto k : nf.alg.kind) elliptic = elliptic && k == Kind::elliptic;
  if (elliptic) {
    auto rf = realize_normal_form(nf);
    r["realized"] = {{"A", series_list(rf.A)}, {"B", series_list(rf.B)}, {"flatness_residual", rf.flatness_residual}};
  } else {
    r["realized"] = nullptr;
  }
  return out;
}

template <class K>
Outcome cmd_rigidity(const RunConfig&, const ManifoldSpec<K>& m) {
  Outcome out;
  json& r = out.report;
  auto res = rigidity_pipeline(m);
  for (auto& s : res.steps)
    r["steps"].push_back({{"stage", s.stage}, {"coefficients", s.coefficients}, {"residual", s.residual}});
  r["final_residual"] = res.final_residual;
  r["pair_normalized"] = res.pair_normalized;
  r["family_normalized"] = res.family_normalized;
  r["order"] = res.order;
  r["phi"] = jet_to_json(res.phi, m.p);
  out.status = detail::small<K>(res.final_residual) ? 0 : 1;
  return out;
}

template <class K>
json attach_json(const AttachResult<K>& a, const InvarianceReport& inv) {
  json o;
  o["eps"] = a.eps;
  for (auto& v : a.nu) o["nu"].push_back(complex_to_json(Field<K>::to_c(v)));
  o["A"] = matrix_to_json(a.A);
  o["A_tilde"] = matrix_to_json(a.At);
  o["rho1"] = jet_to_json(a.rho1);
  o["rho2"] = jet_to_json(a.rho2);
  o["K"] = series_list(a.K_eq);
  if (!a.f.empty()) {
    o["f"] = series_list(a.f);
    o["f_star"] = series_list(a.fstar);
  }
  o["unique"] = a.unique;
  for (auto& rp : a.resonant) o["resonant"].push_back({{"j", rp.j}, {"Q", rp.Q}});
  o["notes"] = a.notes;
  o["residuals"] = {{"involution", a.involution_residual},
                    {"branch", a.branch_residual},
                    {"conjugate_branch", a.conjugate_branch_residual},
                    {"linear", a.linear_residual},
                    {"sigma_invariance", inv.sigma_residual},
                    {"tau_exchange", inv.tau_residual}};
  o["tangent"] = std::string(inv.tangent.begin(), inv.tangent.end());
  o["tangent_expected"] = std::string(inv.expected.begin(), inv.expected.end());
  o["tangent_ok"] = inv.tangent_ok;
  return o;
}

template <class K>
Outcome cmd_attach(const RunConfig& cfg, const ManifoldSpec<K>& m) {
  Outcome out;
  json& r = out.report;
  std::vector<AttachResult<K>> pairs;
  if (!cfg.eps_class.empty()) pairs.push_back(attach_solve(m, parse_signs(cfg.eps_class)));
  else pairs = enumerate_pairs(m);
  auto fam = build_deck_family(m);
  bool ok = true;
  for (auto& a : pairs) {
    auto inv = invariance_check(a, fam, m.components);
    ok = ok && inv.tangent_ok && inv.max_residual() <= cfg.tolerance;
    r["pairs"].push_back(attach_json(a, inv));
  }
  r["count"] = pairs.size();
  r["passed"] = ok;
  out.status = ok ? 0 : 1;
  return out;
}

template <class K>
Outcome cmd_small_divisors(const RunConfig& cfg, const ManifoldSpec<K>& m) {
  Outcome out;
  json& r = out.report;
  auto alg = IndexAlgebra<K>::from_components(m.components, cfg.tolerance);
  r["kmax"] = cfg.kmax;
  r["ideal"] = divisors_json(omega_ideal(sigma_diagonals(alg), cfg.kmax));
  bool hyperbolic = false, elliptic = false;
  for (auto k : alg.kind) {
    hyperbolic = hyperbolic || k == Kind::hyperbolic;
    elliptic = elliptic || k == Kind::elliptic;
  }
  if (!hyperbolic) r["poincare"] = divisors_json(poincare_report(alg, 1 << cfg.kmax));
  if (!elliptic) {
    SignVector eps;
    if (!cfg.eps_class.empty()) eps = parse_signs(cfg.eps_class);
    else {
      int count = 0;
      for (auto& c : m.components) count += c.kind != Kind::elliptic;
      eps.assign(count, 1);
    }
    auto [A, At] = asymptotic_linear(m.components, eps);
    Matrix<K> D = inverse(At) * A;
    std::vector<cplx> nu;
    for (int j = 0; j < m.p; ++j) nu.push_back(Field<K>::to_c(D(j, j)));
    auto rep = divisors_json(omega_nu(nu, cfg.kmax));
    rep["eps"] = eps;
    for (auto& v : nu) rep["nu"].push_back(complex_to_json(v));
    r["nu"] = rep;
  }
  return out;
}

template <class K>
Outcome cmd_hull(const RunConfig& cfg, const ManifoldSpec<K>& m) {
  Outcome out;
  json& r = out.report;
  for (auto& c : m.components)
    if (c.kind != Kind::elliptic)
      throw Obstruction("NotElliptic", -1, 0, "hull polydiscs exist only for pure elliptic singularities");
  if (cfg.grid < 1) throw Error("--grid must be >= 1");
  auto fam = build_deck_family(m);
  auto nf = mw_normalform(fam, m.components);
  auto rf = realize_normal_form(nf);
  double eps = hull_default_eps(rf);
  r["eps"] = eps;
  r["C1"] = detail::hull_C1(rf);
  bool ok = true;
  for (int i = 0; i <= cfg.grid; ++i) {
    std::vector<double> x(m.p, eps * double(i) / double(cfg.grid));
    auto h = hull_polydiscs(rf, x, eps);
    ok = ok && h.contained;
    r["rows"].push_back({{"x", h.x},
                         {"semi_major", h.semi_major},
                         {"semi_minor", h.semi_minor},
                         {"lambda", h.lambda},
                         {"contained", h.contained},
                         {"max_ratio", h.max_ratio},
                         {"degenerate", h.degenerate}});
  }
  r["contained"] = ok;
  out.status = ok ? 0 : 1;
  return out;
}

template <class K>
Outcome dispatch(const RunConfig& cfg, const json& input) {
  auto m = spec_from_json<K>(input, cfg.order);
  Outcome o;
  const auto& c = cfg.command;
  if (c == "classify") o = cmd_classify(cfg, m);
  else if (c == "deck") o = cmd_deck(cfg, m);
  else if (c == "normal-form") o = cmd_normal_form(cfg, m);
  else if (c == "rigidity") o = cmd_rigidity(cfg, m);
  else if (c == "attach") o = cmd_attach(cfg, m);
  else if (c == "small-divisors") o = cmd_small_divisors(cfg, m);
  else if (c == "hull") o = cmd_hull(cfg, m);
  else throw Error("unknown command '" + c + "'");
  o.report["spec"] = spec_to_json(m);
  return o;
}

void print_text(const json& j, const std::string& indent, std::ostream& os) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const json& v = it.value();
    if (it.key() == "spec") continue;
    if (v.is_object()) {
      os << indent << it.key() << ":\n";
      print_text(v, indent + "  ", os);
    } else if (v.is_array() && !v.empty() && (v[0].is_array() || v[0].is_object())) {
      bool rows = v[0].is_object() && !v[0].contains("coeff");
      if (rows) {
        os << indent << it.key() << ":\n";
        for (std::size_t k = 0; k < v.size(); ++k) {
          os << indent << "  [" << k << "]\n";
          print_text(v[k], indent + "    ", os);
        }
      } else {
        os << indent << it.key() << ": [" << v.size() << " entries]\n";
      }
    } else {
      os << indent << it.key() << ": " << v.dump() << "\n";
    }
  }
}

void emit(const RunConfig& cfg, const json& j) {
  if (cfg.output == "text") print_text(j, "", std::cout);
  else std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"formal normal forms at maximal CR singularities"};
  app.add_option("command", cfg.command, "classify | deck | normal-form | rigidity | attach | small-divisors | hull")
      ->required()
      ->check(CLI::IsMember({"classify", "deck", "normal-form", "rigidity", "attach", "small-divisors", "hull"}));
  app.add_option("input", cfg.input, "ManifoldSpec JSON file")->required();
  app.add_option("--order", cfg.order, "truncation order N (overrides the spec)")->check(CLI::Range(2, 64));
  app.add_option("--backend", cfg.backend, "exact | float")->check(CLI::IsMember({"exact", "float"}));
  app.add_option("--tolerance", cfg.tolerance, "resonance tolerance and residual bound")->check(CLI::PositiveNumber);
  app.add_option("--kmax", cfg.kmax, "largest k in the small divisor sequences")->check(CLI::Range(1, 30));
  app.add_option("--output", cfg.output, "json | text")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--seed", cfg.seed, "seed for probabilistic checks");
  app.add_option("--eps-class", cfg.eps_class, "sign vector for attach, e.g. 1,-1");
  app.add_option("--grid", cfg.grid, "hull: number of grid steps on [0, eps]");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  auto fail = [&](const std::string& status, const std::string& msg, json extra = json::object()) {
    std::cerr << "crsing: " << msg << "\n";
    extra["status"] = status;
    extra["message"] = msg;
    emit(cfg, extra);
  };
  try {
    json input = read_json_file(cfg.input);
    Outcome o = cfg.backend == "exact" ? dispatch<Exact>(cfg, input) : dispatch<cplx>(cfg, input);
    o.report["status"] = o.status == 0 ? "ok" : "condition-failed";
    o.report["backend"] = cfg.backend;
    o.report["seed"] = cfg.seed;
    emit(cfg, o.report);
    return o.status;
  } catch (const BudgetExceeded& e) {
    fail("budget", e.what());
    return 3;
  } catch (const Obstruction& e) {
    fail("obstruction", e.what(),
         {{"kind", e.kind}, {"degree", e.degree}, {"residual", e.residual}, {"stage", e.stage}});
    return 1;
  } catch (const Error& e) {
    fail("input-error", e.what());
    return 2;
  } catch (const json::exception& e) {
    fail("input-error", std::string("schema: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    fail("input-error", e.what());
    return 2;
  }
}
