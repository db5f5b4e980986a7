#include <gtest/gtest.h>

#include "crsing/attach.hpp"
#include "crsing/samples.hpp"

using namespace crsing;
using S = Series<Exact>;
using J = JetMap<Exact>;

namespace {

Exact q(long a, long b = 1) { return Exact::rational(a, b); }

Component<Exact> hyperbolic(Exact g) {
  auto c = samples::component(Kind::hyperbolic, g);
  c.rotation = Rotation{true, 0, 1};
  return c;
}

ManifoldSpec<Exact> hyp_complex(Exact gs, int N) {
  return build_product_quadric<Exact>({hyperbolic(q(5, 6)), samples::component(Kind::complex, gs)}, N);
}

void expect_clean(const AttachResult<Exact>& r) {
  EXPECT_EQ(r.involution_residual, 0.0);
  EXPECT_EQ(r.branch_residual, 0.0);
  EXPECT_EQ(r.conjugate_branch_residual, 0.0);
  EXPECT_EQ(r.linear_residual, 0.0);
}

}  // namespace

TEST(Attach, HyperbolicOneQuadric) {
  auto m = build_product_quadric<Exact>({samples::component(Kind::hyperbolic, q(1))}, 4);
  auto r = attach_solve(m, {1});
  expect_clean(r);
  S z = S::variable(1, 5, 0);
  EXPECT_EQ(r.K_eq[0], (z * z).scaled(q(-3)));
}

TEST(Attach, EllipticRejected) {
  auto m = build_product_quadric<Exact>({samples::component(Kind::elliptic, q(2, 5))}, 3);
  try {
    attach_solve(m, {1});
    FAIL();
  } catch (const Obstruction& o) {
    EXPECT_EQ(o.kind, "EllipticObstruction");
  }
}

TEST(Attach, CubicCouplingNotDivisible) {
  int N = 4;
  auto m = build_product_quadric<Exact>({hyperbolic(q(5, 6)), samples::component(Kind::hyperbolic, q(1))}, N);
  S L2 = *m.roots[1];
  m.E[0] = m.E[0] + L2 * L2 * L2;
  m.roots[0].reset();
  m.square.reset();
  try {
    attach_solve(m, {1, 1});
    FAIL();
  } catch (const Obstruction& o) {
    EXPECT_EQ(o.kind, "DivisibilityObstruction");
    EXPECT_EQ(o.degree, 3);
  }
}

TEST(Attach, QuarticInsideSquareTwoPairs) {
  int N = 6;
  auto m = hyp_complex(q(1, 4), N);
  PerturbationTerm<Exact> t;
  t.target = 0;
  t.z_exp = {2, 1, 0};
  t.w_exp = {1, 0, 0};
  t.coeff = q(1, 3);
  t.inside = true;
  apply_perturbation(m, {t});
  auto pairs = enumerate_pairs(m);
  ASSERT_EQ(pairs.size(), 2u);
  auto fam = build_deck_family(m);
  for (auto& r : pairs) {
    expect_clean(r);
    EXPECT_FALSE(r.notes.empty());
    auto inv = invariance_check(r, fam, m.components);
    EXPECT_EQ(inv.sigma_residual, 0.0);
    EXPECT_EQ(inv.tau_residual, 0.0);
    EXPECT_TRUE(inv.tangent_ok);
  }
}

TEST(Attach, CubicPerturbationComplexGamma) {
  int N = 5;
  auto m = hyp_complex(Exact::gauss(mpq_class(-1, 40), mpq_class(3, 40)), N);
  std::vector<PerturbationTerm<Exact>> ts;
  for (int tgt = 0; tgt < 3; ++tgt) {
    PerturbationTerm<Exact> t;
    t.target = tgt;
    t.z_exp = {tgt == 0, 1, tgt == 2};
    t.w_exp = {0, tgt == 1, 1};
    t.coeff = q(tgt + 1, 5);
    t.inside = true;
    ts.push_back(t);
  }
  apply_perturbation(m, ts);
  auto pairs = enumerate_pairs(m);
  ASSERT_EQ(pairs.size(), 2u);
  auto fam = build_deck_family(m);
  for (auto& r : pairs) {
    expect_clean(r);
    EXPECT_TRUE(r.unique);
    auto inv = invariance_check(r, fam, m.components);
    EXPECT_EQ(inv.max_residual(), 0.0);
    EXPECT_TRUE(inv.tangent_ok);
  }
}

TEST(Attach, FloatMatchesExact) {
  auto me = build_product_quadric<Exact>({hyperbolic(q(5, 6)), samples::component(Kind::complex, q(1, 4))}, 4);
  Component<cplx> h;
  h.kind = Kind::hyperbolic;
  h.gamma = 5.0 / 6;
  h.rotation = Rotation{true, 0, 1};
  auto mf = build_product_quadric<cplx>({h, samples::component<cplx>(Kind::complex, 0.25)}, 4);
  auto re = attach_solve(me, {1, -1});
  auto rf = attach_solve(mf, {1, -1});
  for (int j = 0; j < 3; ++j)
    for (auto& [mi, v] : re.rho1[j]) EXPECT_NEAR(std::abs(v.to_complex() - rf.rho1[j].coeff(mi)), 0, 1e-10);
  EXPECT_LT(rf.branch_residual, 1e-10);
}
