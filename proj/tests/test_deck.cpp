#include <gtest/gtest.h>

#include <random>

#include "crsing/deck.hpp"

using namespace crsing;
using S = Series<Exact>;
using J = JetMap<Exact>;

namespace {

Exact q(long a, long b = 1) { return Exact::rational(a, b); }

Component<Exact> comp(Kind k, Exact g) {
  Component<Exact> c;
  c.kind = k;
  c.gamma = g;
  return c;
}

ManifoldSpec<Exact> example_2_3(int N) {
  // z_{p+j} = z_j w_j + gamma w_j^2 + eps w_{j-1}^3, p = 2
  ManifoldSpec<Exact> m;
  m.p = 2;
  m.N = N;
  m.components = {comp(Kind::elliptic, q(1, 4)), comp(Kind::elliptic, q(1, 4))};
  int n = 4;
  for (int j = 0; j < 2; ++j) {
    S z = S::variable(n, N + 1, j), w = S::variable(n, N + 1, 2 + j), wp = S::variable(n, N + 1, 2 + (1 - j));
    m.E.push_back(z * w + (w * w).scaled(q(1, 4)) + wp * wp * wp);
  }
  return m;
}

}  // namespace

TEST(Manifold, ProductQuadricCoefficients) {
  auto m = build_product_quadric<Exact>({comp(Kind::elliptic, q(2, 5))}, 4);
  S z = S::variable(2, 5, 0), w = S::variable(2, 5, 1);
  S L = z + w.scaled(q(4, 5));
  EXPECT_EQ(m.E[0], L * L);
  auto c = build_product_quadric<Exact>({comp(Kind::complex, q(1, 4))}, 4);
  EXPECT_EQ(c.square->B(0, 1), q(1, 2));
  EXPECT_EQ(c.square->B(1, 0), q(3, 2));
  EXPECT_THROW(build_product_quadric<Exact>({}, 4), Error);
  EXPECT_THROW(build_product_quadric<Exact>({comp(Kind::elliptic, q(3, 5))}, 4), Error);
}

TEST(Manifold, ClassifyExamples) {
  auto r = classify(build_product_quadric<Exact>({comp(Kind::elliptic, q(2, 5))}, 4));
  EXPECT_EQ(*r.slots[0].lambda, q(2));
  EXPECT_EQ(*r.slots[0].mu, q(4));
  EXPECT_TRUE(r.conditionB);
  EXPECT_TRUE(r.conditionJ);

  auto h = classify(build_product_quadric<Exact>({comp(Kind::hyperbolic, q(1))}, 4));
  Exact lam = *h.slots[0].lambda;
  EXPECT_NEAR(std::arg(lam.to_complex()), M_PI / 3, 1e-15);
  EXPECT_TRUE(h.slots[0].root_of_unity);
  EXPECT_EQ(*h.slots[0].mu * *h.slots[0].mu * *h.slots[0].mu, q(1));

  auto s = classify(build_product_quadric<Exact>({comp(Kind::complex, q(1, 4))}, 4));
  EXPECT_EQ(*s.slots[0].mu, q(3));
  EXPECT_EQ(*s.slots[1].mu, q(1, 3));
}

TEST(Manifold, ParabolicIsConditionJFailure) {
  auto m = build_product_quadric<Exact>({comp(Kind::elliptic, q(1, 2))}, 4, true);
  auto r = classify(m);
  EXPECT_FALSE(r.conditionJ);
  EXPECT_TRUE(r.slots[0].parabolic);
}

TEST(Manifold, ConditionB) {
  std::vector<Series<Exact>> qq;
  Series<Exact> a(2, 2), b(2, 2);
  a.set(Multiindex{1, 1}, q(1));
  b.set(Multiindex{0, 2}, q(1));
  EXPECT_FALSE(check_condition_B_q<Exact>({a, b}).holds);
  Series<Exact> c(1, 2);
  c.set(Multiindex{2}, q(3));
  EXPECT_TRUE(check_condition_B_q<Exact>({c}).holds);
  auto m = build_product_quadric<Exact>({comp(Kind::elliptic, q(2, 5)), comp(Kind::complex, q(1, 4))}, 3);
  auto cb = check_condition_B(m);
  EXPECT_TRUE(cb.holds);
  EXPECT_EQ(cb.method, "exact-monomial");
}

TEST(Manifold, CrDetComplex) {
  auto m = build_product_quadric<Exact>({comp(Kind::complex, q(1, 4))}, 3);
  S C = cr_det(m);
  // det = -4 * (z1 + w2/2)(z2 + 3 w1/2) * (1/2)(3/2)
  int n = 4;
  S z1 = S::variable(n, 4, 0), z2 = S::variable(n, 4, 1), w1 = S::variable(n, 4, 2), w2 = S::variable(n, 4, 3);
  S expect = ((z1 + w2.scaled(q(1, 2))) * (z2 + w1.scaled(q(3, 2)))).scaled(q(-3));
  EXPECT_EQ(C.with_order(4), expect);
}

TEST(Manifold, QuadTransformBishop) {
  // Bishop gamma = 2/5 vs the normal-form quadric A_e|z|^2 - B_e (z^2 + w^2) with A_e = 5/9, B_e = 2/9
  Component<Exact> c = comp(Kind::elliptic, q(2, 5));
  c.bishop = true;
  auto m = build_product_quadric<Exact>({c}, 2);
  auto [h, qq] = split_quadratic(m);
  Matrix<Exact> A = Matrix<Exact>::identity(1), U(1, 1);
  U(0, 0) = q(9, 5);  // scale so that the |z|^2 coefficient is 5/9
  auto [h2, q2] = quad_transform(h, qq, A, U);
  EXPECT_EQ(h2[0].coeff(Multiindex{1, 1}), q(5, 9));
  EXPECT_EQ(h2[0].coeff(Multiindex{2, 0}), q(2, 9));
  EXPECT_EQ(q2[0].coeff(Multiindex{0, 2}), q(2, 9));
}

TEST(Deck, BishopExact) {
  auto m = build_product_quadric<Exact>({comp(Kind::elliptic, q(2, 5))}, 6);
  auto seeds = linear_seeds(m);
  J t = solve_deck_general(m, seeds.generators[0]);
  S z = S::variable(2, 6, 0), w = S::variable(2, 6, 1);
  EXPECT_EQ(t[1], -w - z.scaled(q(5, 2)));
  EXPECT_EQ(compose(t, t), J::identity(2, 6));
}

TEST(Deck, ComplexGenerators) {
  int N = 4;
  auto m = build_product_quadric<Exact>({comp(Kind::complex, q(1, 4))}, N);
  auto fam = build_deck_family(m);
  int n = 4;
  S z1 = S::variable(n, N, 0), z2 = S::variable(n, N, 1), w1 = S::variable(n, N, 2), w2 = S::variable(n, N, 3);
  EXPECT_EQ(fam.tau1[0][2], -w1 - z2.scaled(q(4, 3)));
  EXPECT_EQ(fam.tau1[1][3], -w2 - z1.scaled(q(4)));
  EXPECT_EQ(fam.partner[0], 1);
  auto ev = eigenvalues(fam.sigma_all.linear_part());
  std::vector<double> mags;
  for (auto e : ev) mags.push_back(std::abs(e));
  std::sort(mags.begin(), mags.end());
  EXPECT_NEAR(mags[0], 1.0 / 3, 1e-12);
  EXPECT_NEAR(mags[3], 3.0, 1e-12);
  auto rep = verify_family(fam, m);
  EXPECT_TRUE(rep.passed);
  EXPECT_TRUE(rep.abelian);
  // general solver agrees with the square-form fast path
  ManifoldSpec<Exact> g = m;
  g.square.reset();
  auto fam2 = build_deck_family(g);
  EXPECT_EQ(fam2.tau1[0], fam.tau1[0]);
  EXPECT_EQ(fam2.tau1[1], fam.tau1[1]);
}

TEST(Deck, ComplexSigmaSlotEigenvalues) {
  auto m = build_product_quadric<Exact>({comp(Kind::complex, Exact::gauss(mpq_class(1, 8), mpq_class(1, 8)))}, 3);
  auto fam = build_deck_family(m);
  auto rep = classify(m);
  cplx mu = rep.slots[0].mu_c;
  EXPECT_NEAR(std::abs(mu - cplx(3, 4)), 0, 1e-14);
  auto ev = eigenvalues(fam.sigma[0].linear_part());
  bool hit = false;
  for (auto e : ev) hit |= std::abs(e - mu) < 1e-12;
  EXPECT_TRUE(hit);
  auto ev2 = eigenvalues(fam.sigma[1].linear_part());
  bool hit2 = false;
  for (auto e : ev2) hit2 |= std::abs(e - rep.slots[1].mu_c) < 1e-12;
  EXPECT_TRUE(hit2);
}

TEST(Deck, Example23Obstructed) {
  auto m = example_2_3(4);
  auto s = search_deck_group(m);
  EXPECT_EQ(s.group_order, 1);
  for (int d : s.obstructed_degree) EXPECT_GE(d, 2);
  EXPECT_THROW(build_deck_family(m), Obstruction);
}

TEST(Deck, SquareFormRandomCubic) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> coef(-3, 3);
  int N = 5, p = 2, n = 4;
  ManifoldSpec<Exact> m;
  m.p = p;
  m.N = N;
  SquareForm<Exact> sf{Matrix<Exact>(p, p), {}};
  sf.B(0, 0) = q(1);
  sf.B(0, 1) = q(1, 2);
  sf.B(1, 1) = q(2);
  for (int j = 0; j < p; ++j) {
    S r = S::variable(n, N, j);
    for (auto& mi : monomials_of_degree(n, 3))
      if (rng() % 4 == 0) r.set(mi, q(coef(rng), 1 + rng() % 3));
    sf.R.push_back(r);
  }
  m.square = sf;
  square_to_E(m);
  auto fam = build_deck_family(m);
  auto rep = verify_family(fam, m);
  EXPECT_EQ(rep.max_residual(), 0.0);
}

TEST(Deck, RealizeRoundTripBishop) {
  int N = 4;
  auto m = build_product_quadric<Exact>({comp(Kind::elliptic, q(2, 5))}, N);
  auto fam = build_deck_family(m);
  auto real = realize_manifold_full(fam.tau1, fam.rho, m.components);
  auto fam2 = build_deck_family(real.spec);
  // realized family is the original conjugated by chi
  J back = compose(real.chi, compose(fam.tau1[0], real.psi));
  EXPECT_EQ(back, fam2.tau1[0]);
  // quadric linearly equivalent: E = (z + (4/5) w)^2 / (4 gamma^2)-type scaling
  auto [h, qq] = split_quadratic(real.spec);
  auto [h0, q0] = split_quadratic(m);
  Exact ratio = h[0].coeff(Multiindex{2, 0}) / h0[0].coeff(Multiindex{2, 0});
  EXPECT_EQ(h[0], h0[0].scaled(ratio).with_order(h[0].order()));
}

TEST(Deck, RealizeRejectsDuplicateGenerator) {
  int N = 3;
  auto m = build_product_quadric<Exact>({comp(Kind::elliptic, q(2, 5)), comp(Kind::elliptic, q(1, 5))}, N);
  auto fam = build_deck_family(m);
  EXPECT_THROW(realize_manifold<Exact>({fam.tau1[0], fam.tau1[0]}, fam.rho), Error);
}

TEST(Deck, NonAbelianCubicPerturbation) {
  int N = 4;
  Component<Exact> a = comp(Kind::elliptic, q(2, 5)), b = comp(Kind::elliptic, q(1, 5));
  auto m = build_product_quadric<Exact>({a, b}, N);
  // cubic coupling inside the square keeps all four deck transformations
  PerturbationTerm<Exact> t{0, {1, 0}, {0, 2}, q(1), true};
  apply_perturbation(m, {t});
  auto fam = build_deck_family(m);
  auto rep = verify_family(fam, m);
  EXPECT_TRUE(rep.passed);
  EXPECT_FALSE(rep.abelian);
  EXPECT_GT(rep.sigma_commutation, 0.0);
}
