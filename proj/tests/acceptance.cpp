// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "crsing/attach.hpp"
#include "crsing/rigidity.hpp"
#include "crsing/samples.hpp"

using namespace crsing;
using S = Series<Exact>;
using J = JetMap<Exact>;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
  void need(bool c, const std::string& what) {
    if (!c) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

Exact q(long a, long b = 1) { return Exact::rational(a, b); }

std::string num(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

J random_map(int n, int N, std::mt19937& rng, int density) {
  std::uniform_int_distribution<int> c(-4, 4);
  J f = J::identity(n, N);
  for (int i = 0; i < n; ++i)
    for (int k = 2; k <= N; ++k)
      for (auto& m : monomials_of_degree(n, k))
        if (rng() % density == 0) f[i].add(m, q(c(rng), 1 + rng() % 4) + q(c(rng), 1 + rng() % 4) * Exact::I());
  return f;
}

Component<Exact> hyperbolic(Exact g) {
  auto c = samples::component(Kind::hyperbolic, g);
  c.rotation = Rotation{true, 0, 1};
  return c;
}

// 1. Bishop deck transformation
Verdict deck_exactness() {
  Verdict v;
  int N = 6;
  auto m = build_product_quadric<Exact>({samples::component(Kind::elliptic, q(2, 5))}, N);
  J t = solve_deck_general(m, linear_seeds(m).generators[0]);
  S z = S::variable(2, N, 0), w = S::variable(2, N, 1);
  v.need(t[0] == z, "z component");
  v.need(t[1] == -w - z.scaled(q(5, 2)), "w component");
  v.need(compose(t, t) == J::identity(2, N), "tau^2");
  auto Et = detail::compose_E(std::vector<S>{m.E[0].with_order(N)}, t);
  v.need((Et[0] - m.E[0].with_order(N)).is_zero(), "E o tau");
  return v;
}

// 2. complex-type spectrum
Verdict complex_spectrum() {
  Verdict v;
  auto m = build_product_quadric<Exact>({samples::component(Kind::complex, q(1, 4))}, 3);
  auto fam = build_deck_family(m);
  Matrix<Exact> L = fam.sigma_all.linear_part();
  int n = L.rows();
  Exact mu = Exact::rational(1) / q(1, 4).conj() - Exact::rational(1);  // conj(gamma)^{-1} - 1
  v.need(mu == q(3), "mu_s");
  // exact: (L - 3)(L - 1/3) = 0 and each factor is singular
  Matrix<Exact> I = Matrix<Exact>::identity(n);
  Matrix<Exact> a = L - I.scaled(q(3)), b = L - I.scaled(q(1, 3));
  v.need((a * b).is_zero(), "minimal polynomial");
  v.need(determinant(a).is_zero() && determinant(b).is_zero(), "3 and 1/3 are eigenvalues");
  auto ev = eigenvalues(L);
  std::vector<double> want{1.0 / 3, 1.0 / 3, 3, 3}, got;
  for (auto e : ev) {
    v.need(std::abs(e.imag()) < 1e-12, "real spectrum");
    got.push_back(e.real());
  }
  std::sort(got.begin(), got.end());
  double err = 0;
  for (int k = 0; k < 4; ++k) err = std::max(err, std::abs(got[k] - want[k]));
  v.need(err < 1e-12, "numeric eigenvalues off by " + num(err));
  return v;
}

// 3. condition D fails for z_{p+j} = z_j w_j + w_j^2/4 + w_{j-1}^3
Verdict condition_d_failure() {
  Verdict v;
  int N = 6;
  ManifoldSpec<Exact> m;
  m.p = 2;
  m.N = N;
  m.components = {samples::component(Kind::elliptic, q(1, 4)), samples::component(Kind::elliptic, q(1, 4))};
  for (int j = 0; j < 2; ++j) {
    S z = S::variable(4, N + 1, j), w = S::variable(4, N + 1, 2 + j), wp = S::variable(4, N + 1, 3 - j);
    m.E.push_back(z * w + (w * w).scaled(q(1, 4)) + wp * wp * wp);
  }
  m.roots.assign(2, std::nullopt);
  auto s = search_deck_group(m);
  v.need(s.group_order == 1, "group order " + std::to_string(s.group_order));
  for (int d : s.obstructed_degree) v.need(d >= 2, "a nontrivial seed lifted");
  v.need(s.obstructed_degree.size() == 3, "seed count");
  return v;
}

// 4. square-form completeness
Verdict square_form_completeness() {
  Verdict v;
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> coef(-3, 3);
  int N = 6, p = 2, n = 4;
  for (int trial = 0; trial < 20; ++trial) {
    ManifoldSpec<Exact> m;
    m.p = p;
    m.N = N;
    SquareForm<Exact> sf{Matrix<Exact>(p, p), {}};
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        int c = coef(rng);
        if (a == b && c == 0) c = 1;
        if (a > b) c = 0;
        sf.B(a, b) = q(c, 1 + rng() % 3);
      }
    for (int j = 0; j < p; ++j) {
      S r = S::variable(n, N + 1, j);
      for (auto& mi : monomials_of_degree(n, 3))
        if (rng() % 4 == 0) r.set(mi, q(coef(rng), 1 + rng() % 3));
      sf.R.push_back(r);
    }
    m.square = sf;
    square_to_E(m);
    auto fam = build_deck_family(m);
    auto rep = verify_family(fam, m);
    v.need(fam.group_order == 4, "trial " + std::to_string(trial) + " order " + std::to_string(fam.group_order));
    v.need(rep.max_residual() == 0, "trial " + std::to_string(trial) + " residual " + num(rep.max_residual()));
  }
  return v;
}

// 5. decomposition F = H o G^{-1}
Verdict decomposition() {
  Verdict v;
  std::mt19937 rng(99);
  int n = 4, N = 6;
  DiagonalFamily<Exact> D;
  D.mu = {{q(4), q(1), q(1, 4), q(1)}, {q(1), q(9), q(1), q(1, 9)}};
  std::vector<J> lin;
  for (int i = 0; i < 2; ++i) lin.push_back(J::linear(D.matrix(i), N));
  for (int trial = 0; trial < 20; ++trial) {
    J F = random_map(n, N, rng, 3);
    auto d = decompose_wrt_D(F, D);
    std::string t = "trial " + std::to_string(trial);
    v.need(compose(d.H, invert(d.G)) == F, t + " reconstruction");
    J id = J::identity(n, N);
    for (int c = 0; c < n; ++c) {
      for (auto& [mi, x] : (d.H[c] - id[c])) v.need(!D.resonant(mi, c), t + " resonant term in H");
      for (auto& [mi, x] : (d.G[c] - id[c])) v.need(D.resonant(mi, c), t + " nonresonant term in G");
    }
    for (auto& L : lin) v.need(compose(d.G, L) == compose(L, d.G), t + " G does not commute");
  }
  return v;
}

// 6. abelian normal form of the coupled elliptic example
Verdict abelian_normal_form() {
  Verdict v;
  auto m = samples::coupled_elliptic_default<Exact>(6);
  auto fam = build_deck_family(m);
  auto rep = verify_family(fam, m);
  v.need(rep.abelian, "family not abelian");
  auto nf = mw_normalform(fam, m.components);
  v.need(nf.commutation_residual == 0, "commutation " + num(nf.commutation_residual));
  v.need(nf.shape_residual == 0, "shape " + num(nf.shape_residual));
  v.need(nf.reality_residual == 0, "reality " + num(nf.reality_residual));
  v.need(nf.rho_residual == 0, "rho " + num(nf.rho_residual));
  v.need(nf.Lambda1[0].constant_term() == q(2), "Lambda_1(0)");
  v.need(nf.Lambda1[1].constant_term() == q(3), "Lambda_2(0)");
  // float backend agrees within tolerance
  auto mf = samples::coupled_elliptic_default<cplx>(6);
  auto nff = mw_normalform(build_deck_family(mf), mf.components);
  double r = std::max({nff.commutation_residual, nff.shape_residual, nff.reality_residual, nff.rho_residual});
  v.need(r <= 1e-10, "float residual " + num(r));
  return v;
}

// 7. realization round trip
Verdict realization() {
  Verdict v;
  for (auto [gn, gd, lam] : {std::tuple{2, 5, 2}, std::tuple{3, 10, 3}}) {
    auto a = IndexAlgebra<Exact>::from_components({samples::component(Kind::elliptic, q(gn, gd))});
    auto rf = realize_normal_form(a, {S::constant(1, 4, q(lam))});
    auto g = infer_gammas(realized_quadric(rf), a);
    v.need(std::abs(g[0] - double(gn) / gd) < 1e-12, "gamma round trip " + num(std::abs(g[0])));
    v.need(rf.flatness_residual == 0, "flatness");
    if (lam == 2) {
      v.need(rf.A[0] == S::constant(1, 4, q(5, 9)), "A_e");
      v.need(rf.B[0] == S::constant(1, 4, q(2, 9)), "B_e");
    }
  }
  return v;
}

// 8. Poincare witnesses, checked against the definition directly
Verdict poincare() {
  Verdict v;
  auto a = IndexAlgebra<Exact>::from_components(
      {samples::component(Kind::elliptic, q(2, 5)), samples::component(Kind::elliptic, q(3, 10))});
  int p = 2, n = 4, top = 64;
  auto pc = poincare_constants(a);
  double d = std::pow(std::min(std::max(4.0, 0.25), std::max(9.0, 1.0 / 9)), 1.0 / (2 * p));
  v.need(std::abs(pc.d - d) < 1e-15, "d = " + num(pc.d));
  std::vector<std::vector<double>> fam{{4, 1, 0.25, 1}, {1, 9, 1, 1.0 / 9}};
  auto power = [&](int k, const std::vector<int>& Q) {
    double r = 1;
    for (int t = 0; t < n; ++t) r *= std::pow(fam[k][t], Q[t]);
    return r;
  };
  auto same = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(std::abs(x), std::abs(y)); };
  long checked = 0, failures = 0;
  for (int deg = 2; deg <= top; ++deg)
    for (auto& mi : monomials_of_degree(n, deg)) {
      auto Q = mi.vec();
      for (int j = 0; j < n; ++j) {
        bool some = false;
        for (int k = 0; k < p; ++k) some |= !same(power(k, Q), fam[k][j]);
        if (!some) continue;
        ++checked;
        try {
          auto w = poincare_witness(a, j, Q, pc.d, pc.c);
          bool ok = w.i >= 0 && w.i < p && !same(power(w.i, w.Qp), fam[w.i][j]);
          bool up = false, down = false;
          int dq = 0;
          for (int t = 0; t < n; ++t) {
            up |= w.Qp[t] > Q[t];
            down |= w.Qp[t] < Q[t];
            dq += w.Qp[t];
          }
          ok &= !(up && down);
          for (int k = 0; k < p; ++k) ok &= same(power(k, w.Qp), power(k, Q));
          double pw = power(w.i, w.Qp);
          ok &= std::max(pw, 1 / pw) > std::pow(pc.d, dq) / pc.c;
          failures += !ok;
        } catch (const Error&) {
          ++failures;
        }
      }
    }
  v.need(failures == 0, std::to_string(failures) + " of " + std::to_string(checked) + " witnesses fail");
  v.detail = v.ok ? std::to_string(checked) + " witnesses" : v.detail;
  return v;
}

// 9. rigidity round trip for hyperbolic x complex
Verdict rigidity() {
  Verdict v;
  int N = 5;
  std::vector<Component<Exact>> comps{samples::component(Kind::hyperbolic, q(5, 6)),
                                      samples::component(Kind::complex, q(1, 4))};
  auto fam0 = build_deck_family(build_product_quadric<Exact>(comps, N));
  // sparse, Gaussian-integer coefficients keep the exact rationals small
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> c(-2, 2);
  J f = J::identity(2 * fam0.p, N);
  for (int i = 0; i < 2 * fam0.p; ++i)
    for (int k = 2; k <= N; ++k)
      for (auto& m : monomials_of_degree(2 * fam0.p, k))
        if (rng() % 16 == 0) f[i].add(m, q(c(rng)) + q(c(rng)) * Exact::I());
  J phi = (f + conjugate_by(fam0.rho, f)).scaled(q(1, 2));
  v.need(conjugate_by(fam0.rho, phi) == phi, "phi does not commute with rho");
  auto fam = family_conjugated(fam0, phi);
  auto r = rigidity_pipeline(fam, comps);
  v.need(r.final_residual == 0, "final residual " + num(r.final_residual));
  v.need(r.pair_normalized == 0 && r.family_normalized == 0, "normalized decompositions");
  return v;
}

// 10. attached submanifolds
Verdict attachment() {
  Verdict v;
  {
    auto m = build_product_quadric<Exact>({samples::component(Kind::hyperbolic, q(1))}, 6);
    auto r = attach_solve(m, {1});
    S z = S::variable(1, 7, 0);
    v.need(r.K_eq[0] == (z * z).scaled(q(-3)), "(a) K");
    v.need(r.K_eq[0] == (z * z).scaled(q(1) - q(4)), "(a) 1 - 4 gamma^2");
  }
  {
    int N = 5;
    auto m = build_product_quadric<Exact>({hyperbolic(q(5, 6)), hyperbolic(q(1))}, N);
    S L2 = *m.roots[1];
    m.E[0] = m.E[0] + L2 * L2 * L2;
    m.roots[0].reset();
    m.square.reset();
    try {
      attach_solve(m, {1, 1});
      v.need(false, "(b) no obstruction");
    } catch (const Obstruction& o) {
      v.need(o.kind == "DivisibilityObstruction" && o.degree == 3, "(b) " + std::string(o.what()));
    }
  }
  {
    int N = 6;
    auto m = build_product_quadric<Exact>({hyperbolic(q(5, 6)), samples::component(Kind::complex, q(1, 4))}, N);
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> c(-5, 5);
    std::vector<PerturbationTerm<Exact>> ts;
    for (int tgt = 0; tgt < 3; ++tgt)
      for (auto& mi : monomials_of_degree(6, 4))
        if (rng() % 40 == 0) {
          auto e = mi.vec();
          PerturbationTerm<Exact> t;
          t.target = tgt;
          t.z_exp = {e[0], e[1], e[2]};
          t.w_exp = {e[3], e[4], e[5]};
          t.coeff = q(c(rng), 1 + rng() % 5) + q(c(rng), 1 + rng() % 5) * Exact::I();
          t.inside = true;
          ts.push_back(t);
        }
    apply_perturbation(m, ts);
    auto pairs = enumerate_pairs(m);
    v.need(pairs.size() == 2, "(c) " + std::to_string(pairs.size()) + " pairs");
    auto fam = build_deck_family(m);
    for (auto& r : pairs) {
      v.need(r.involution_residual == 0, "(c) involution " + num(r.involution_residual));
      v.need(r.branch_residual == 0 && r.conjugate_branch_residual == 0, "(c) branch agreement");
      auto inv = invariance_check(r, fam, m.components);
      v.need(inv.max_residual() <= 1e-10, "(c) invariance " + num(inv.max_residual()));
      v.need(inv.tangent_ok, "(c) tangent space");
    }
  }
  return v;
}

// 11. small divisor sequences against brute force
Verdict small_divisors() {
  Verdict v;
  auto r = omega_nu({2.0}, 10);
  for (int k = 1; k <= 10; ++k) {
    double best = 1e300;
    for (int a = 2; a <= (1 << k); ++a)
      best = std::min({best, std::abs(std::pow(2.0, a) - 2.0), std::abs(std::pow(2.0, a) - 0.5)});
    v.need(r.omega[k - 1] == best && best == 2.0, "omega_nu(2) at k = " + std::to_string(k));
  }
  auto a = IndexAlgebra<Exact>::from_components({[] {
    auto c = samples::component(Kind::hyperbolic, q(1));
    c.rotation = Rotation{false, 1, 3};
    return c;
  }()});
  auto lam = a.lambda[0].to_complex();
  auto rr = omega_nu({lam * lam}, 3);
  v.need(rr.resonant && rr.omega[1] == 0, "root of unity not flagged");
  std::vector<std::vector<cplx>> maps{{2.0, 0.5}};
  auto ri = omega_ideal(maps, 6);
  for (int k = 1; k <= 6; ++k) {
    double best = 1e300;
    for (int x = 0; x <= (1 << k); ++x)
      for (int y = 0; x + y <= (1 << k); ++y) {
        if (x + y < 2 || (x > 0 && y > 0)) continue;
        double val = std::pow(2.0, x) * std::pow(0.5, y);
        for (double t : {2.0, 0.5})
          if (std::abs(val - t) >= 1e-9) best = std::min(best, std::abs(val - t));
      }
    v.need(std::abs(ri.omega[k - 1] - best) <= 1e-15 * best, "omega_ideal at k = " + std::to_string(k));
  }
  return v;
}

// 12. hull polydiscs for Lambda = 2
Verdict hull() {
  Verdict v;
  auto a = IndexAlgebra<Exact>::from_components({samples::component(Kind::elliptic, q(2, 5))});
  auto rf = realize_normal_form(a, {S::constant(1, 4, q(2))});
  double eps = hull_default_eps(rf);
  for (double t : {eps / 8, eps / 3, eps}) {
    auto h = hull_polydiscs(rf, {t}, eps);
    v.need(std::abs(h.semi_major[0] - 3 * std::sqrt(t / 2)) <= 1e-12, "semi-major at " + num(t));
    v.need(std::abs(h.semi_minor[0] - std::sqrt(t / 2)) <= 1e-12, "semi-minor at " + num(t));
    for (auto& z : hull_boundary(h, 0, 64)) v.need(std::abs(z) <= h.C1 * std::sqrt(t), "boundary outside radius");
  }
  v.need(hull_polydiscs(rf, {0.0}, eps).degenerate, "x = 0 not degenerate");
  return v;
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Verdict()>>> items{
      {"deck-exactness", deck_exactness},
      {"complex-spectrum", complex_spectrum},
      {"condition-D-failure", condition_d_failure},
      {"square-form-completeness", square_form_completeness},
      {"decomposition", decomposition},
      {"abelian-normal-form", abelian_normal_form},
      {"realization-round-trip", realization},
      {"poincare-witnesses", poincare},
      {"rigidity-round-trip", rigidity},
      {"attachment", attachment},
      {"small-divisors", small_divisors},
      {"hull-geometry", hull},
  };
  int failed = 0, k = 0;
  for (auto& [name, fn] : items) {
    ++k;
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.ok;
    std::printf("%s %2d %-26s %6.2fs %s\n", v.ok ? "PASS" : "FAIL", k, name.c_str(), secs, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
