#include <gtest/gtest.h>

#include <random>

#include "crsing/rigidity.hpp"
#include "crsing/samples.hpp"

using namespace crsing;
using S = Series<Exact>;
using J = JetMap<Exact>;

namespace {

Exact q(long a, long b = 1) { return Exact::rational(a, b); }

J random_map(int n, int N, unsigned seed, int density = 3) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> c(-4, 4);
  J f = J::identity(n, N);
  for (int i = 0; i < n; ++i)
    for (int k = 2; k <= N; ++k)
      for (auto& m : monomials_of_degree(n, k))
        if (rng() % density == 0) {
          Exact re = q(c(rng), 1 + rng() % 4), im = q(c(rng), 1 + rng() % 4);
          f[i].add(m, re + im * Exact::gauss(0, 1));
        }
  return f;
}

J symmetrize(const J& f, const AntiJetMap<Exact>& rho) {
  return (f + conjugate_by(rho, f)).scaled(q(1, 2));
}

IndexAlgebra<Exact> alg(const std::vector<Component<Exact>>& c) { return IndexAlgebra<Exact>::from_components(c); }

std::vector<Component<Exact>> two_elliptic() {
  return {samples::component(Kind::elliptic, q(2, 5)), samples::component(Kind::elliptic, q(3, 10))};
}

std::vector<Component<Exact>> hyperbolic_complex() {
  return {samples::component(Kind::hyperbolic, q(5, 6)), samples::component(Kind::complex, q(1, 4))};
}

DeckFamily<Exact> perturbed_quadric(const std::vector<Component<Exact>>& comps, int N, unsigned seed) {
  auto m = build_product_quadric<Exact>(comps, N);
  auto fam = build_deck_family(m);
  J phi = symmetrize(random_map(2 * fam.p, N, seed, 6), fam.rho);
  return family_conjugated(fam, phi);
}

}  // namespace

TEST(FamilyDecompose, EllipticSTRho) {
  auto a = alg(two_elliptic());
  int N = 4;
  J F = symmetrize(random_map(4, N, 3), detail::rho_std(a, N));
  auto d = decompose_wrt_family(F, FamilyMode::S_T1_rho, a);
  EXPECT_EQ(compose(d.H, invert(d.G)), F);
  EXPECT_EQ(centralizer_defect(d.G, FamilyMode::S_T1_rho, a), 0.0);
  auto again = decompose_wrt_family(d.H, FamilyMode::S_T1_rho, a);
  EXPECT_EQ(again.G, J::identity(4, N));
}

TEST(FamilyDecompose, EllipticT1T2Rho) {
  auto a = alg(two_elliptic());
  int N = 5;
  J F = symmetrize(random_map(4, N, 5), detail::rho_std(a, N));
  auto d = decompose_wrt_family(F, FamilyMode::T1_T2_rho, a);
  EXPECT_EQ(compose(d.H, invert(d.G)), F);
  EXPECT_EQ(centralizer_defect(d.G, FamilyMode::T1_T2_rho, a), 0.0);
  auto again = decompose_wrt_family(d.H, FamilyMode::T1_T2_rho, a);
  EXPECT_EQ(again.G, J::identity(4, N));
}

TEST(FamilyDecompose, HyperbolicComplexBothModes) {
  auto a = alg(hyperbolic_complex());
  int N = 4;
  J F = symmetrize(random_map(6, N, 11, 8), detail::rho_std(a, N));
  for (auto mode : {FamilyMode::S_T1_rho, FamilyMode::T1_T2_rho}) {
    auto d = decompose_wrt_family(F, mode, a);
    EXPECT_EQ(compose(d.H, invert(d.G)), F);
    EXPECT_EQ(centralizer_defect(d.G, mode, a), 0.0);
  }
}

TEST(Rigidity, BishopPerturbation) {
  auto comps = std::vector<Component<Exact>>{samples::component(Kind::elliptic, q(2, 5))};
  auto fam = perturbed_quadric(comps, 5, 1);
  auto r = rigidity_pipeline(fam, comps);
  EXPECT_EQ(r.final_residual, 0.0);
  EXPECT_EQ(r.pair_normalized, 0.0);
  EXPECT_EQ(r.family_normalized, 0.0);
}

TEST(Rigidity, TwoEllipticPerturbation) {
  auto comps = two_elliptic();
  auto fam = perturbed_quadric(comps, 4, 2);
  auto r = rigidity_pipeline(fam, comps);
  EXPECT_EQ(r.final_residual, 0.0);
  EXPECT_EQ(r.pair_normalized, 0.0);
  EXPECT_EQ(r.family_normalized, 0.0);
}

TEST(Rigidity, HyperbolicComplexPerturbation) {
  auto comps = hyperbolic_complex();
  auto fam = perturbed_quadric(comps, 4, 4);
  auto r = rigidity_pipeline(fam, comps);
  EXPECT_EQ(r.final_residual, 0.0);
  EXPECT_EQ(r.pair_normalized, 0.0);
  EXPECT_EQ(r.family_normalized, 0.0);
}

TEST(Rigidity, NonlinearizableSigmaRejected) {
  auto m = samples::coupled_elliptic_default<Exact>(5);
  try {
    rigidity_pipeline(m);
    FAIL() << "expected an obstruction";
  } catch (const Obstruction& o) {
    EXPECT_EQ(o.stage, "sigma");
  }
}
