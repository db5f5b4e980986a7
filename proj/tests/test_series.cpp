#include <gtest/gtest.h>

#include "crsing/jet.hpp"

using namespace crsing;
using S = Series<Exact>;
using J = JetMap<Exact>;

namespace {

Exact q(long a, long b = 1) { return Exact::rational(a, b); }

S x1(int N) { return S::variable(1, N, 0); }

}  // namespace

TEST(Scalar, SqrtForms) {
  auto r = exact_sqrt(q(-3));
  ASSERT_TRUE(r);
  EXPECT_EQ(*r * *r, q(-3));
  EXPECT_EQ(r->d(), 3);
  auto s = exact_sqrt(Exact::gauss(3, 4));
  ASSERT_TRUE(s);
  EXPECT_EQ(*s, Exact::gauss(2, 1));
  EXPECT_EQ(*exact_sqrt(q(9, 4)), q(3, 2));
  EXPECT_FALSE(exact_sqrt(Exact::gauss(1, 1)));
}

TEST(Scalar, QuadraticFieldArithmetic) {
  Exact s3 = *exact_sqrt(q(3));
  Exact lam = (q(1) + Exact::I() * s3) / q(2);
  Exact mu = lam * lam;
  EXPECT_EQ(mu * lam, q(-1));
  EXPECT_EQ(lam * lam.conj(), q(1));
  EXPECT_EQ(lam.inv(), lam.conj());
  Exact s2 = *exact_sqrt(q(2));
  EXPECT_THROW(s2 * s3, Error);
}

TEST(Scalar, ParseRoundTrip) {
  Exact x = parse_exact_real("1/2-3/4*sqrt(12)");
  EXPECT_EQ(x.d(), 3);
  EXPECT_EQ(parse_exact_real(exact_real_str(x)), x);
  EXPECT_EQ(parse_exact_real("0.25"), q(1, 4));
  EXPECT_EQ(parse_exact_real("0.4"), q(2, 5));
  EXPECT_EQ(parse_exact_real("-1.5"), q(-3, 2));
  EXPECT_EQ(parse_exact_real("+.5"), q(1, 2));
  EXPECT_EQ(parse_exact_real("010/4"), q(5, 2));
  EXPECT_EQ(parse_exact_real("+1/3"), q(1, 3));
  EXPECT_THROW(parse_exact_real("1/x"), Error);
}

TEST(Series, MulExamples) {
  int N = 2;
  S one = S::constant(1, N, q(1));
  S a = one + x1(N);
  S r = a * a;
  EXPECT_EQ(r.coeff(Multiindex{0}), q(1));
  EXPECT_EQ(r.coeff(Multiindex{1}), q(2));
  EXPECT_EQ(r.coeff(Multiindex{2}), q(1));
  S xN = S::monomial(1, N, Multiindex{2});
  EXPECT_TRUE((xN * x1(N)).is_zero());

  S x = S::variable(2, 3, 0), y = S::variable(2, 3, 1);
  S d = (x + y) * (x - y);
  EXPECT_EQ(d, x * x - y * y);
}

TEST(Jet, ComposeExample) {
  int N = 4;
  J f(1, N, {x1(N) * x1(N)});
  J g(1, N, {x1(N) + x1(N) * x1(N)});
  J h = compose(f, g);
  EXPECT_EQ(h[0].coeff(Multiindex{2}), q(1));
  EXPECT_EQ(h[0].coeff(Multiindex{3}), q(2));
  EXPECT_EQ(h[0].coeff(Multiindex{4}), q(1));
  EXPECT_EQ(compose(J::identity(1, N), g), g);
}

TEST(Jet, BishopInvolutionSquaresToIdentity) {
  int N = 5;
  S z = S::variable(2, N, 0), w = S::variable(2, N, 1);
  J tau(2, N, {z, -w - z.scaled(q(5, 2))});
  EXPECT_EQ(compose(tau, tau), J::identity(2, N));
}

TEST(Jet, InvertExample) {
  int N = 3;
  J f(1, N, {x1(N) + x1(N) * x1(N)});
  J g = invert(f);
  EXPECT_EQ(g[0].coeff(Multiindex{1}), q(1));
  EXPECT_EQ(g[0].coeff(Multiindex{2}), q(-1));
  EXPECT_EQ(g[0].coeff(Multiindex{3}), q(2));
  EXPECT_EQ(invert(g), f);
  EXPECT_EQ(compose(f, g), J::identity(1, N));
}

TEST(Jet, InvertLinear) {
  Matrix<Exact> A(2, 2);
  A(0, 0) = q(2);
  A(0, 1) = q(1);
  A(1, 1) = q(3);
  J f = J::linear(A, 3);
  EXPECT_EQ(invert(f), J::linear(inverse(A), 3));
}

TEST(Jet, ReynoldsTwoElementGroup) {
  int N = 6;
  J phi0(1, N, {x1(N) + x1(N) * x1(N).scaled(q(1, 2))});
  J t = compose(invert(phi0), compose(J::linear(Matrix<Exact>::diag({q(-1)}), N), phi0));
  EXPECT_EQ(compose(t, t), J::identity(1, N));
  J phi = reynolds_linearize<Exact>({J::identity(1, N), t});
  J lhs = compose(phi, t);
  J rhs = compose(J::linear(t.linear_part(), N), phi);
  EXPECT_EQ(lhs, rhs);
  EXPECT_EQ(phi.linear_part(), Matrix<Exact>::identity(1));
}

TEST(Jet, ReynoldsExampleQuadratic) {
  // tau(z) = -z + z^2 is an involution to second order; phi = z - z^2/2.
  int N = 2;
  J t(1, N, {-x1(N) + x1(N) * x1(N)});
  J phi = reynolds_linearize<Exact>({J::identity(1, N), t});
  EXPECT_EQ(phi[0].coeff(Multiindex{2}), q(-1, 2));
  EXPECT_EQ(compose(phi, t), phi.scaled(q(-1)));
}

TEST(Jet, AntiComposition) {
  int N = 3;
  S z = S::variable(2, N, 0), w = S::variable(2, N, 1);
  using A = AntiJetMap<Exact>;
  A rho{J(2, N, {w, z})};
  J f(2, N, {z + (z * w).scaled(Exact::I()), w});
  J g = conjugate_by(rho, f);
  // rho f rho (z,w) = (w conj, z conj) -> ... -> second component conj(i) z w
  EXPECT_EQ(g[1].coeff(Multiindex{1, 1}), Exact::gauss(0, -1));
  EXPECT_EQ(compose(rho, rho), J::identity(2, N));
}

TEST(Series, FloatBackend) {
  using SF = Series<cplx>;
  SF x = SF::variable(1, 4, 0);
  SF a = SF::constant(1, 4, 1.0) + x;
  SF r = a.reciprocal();
  EXPECT_NEAR(r.coeff(Multiindex{3}).real(), -1.0, 1e-14);
  SF s = a.power(1, 2);
  EXPECT_NEAR(s.coeff(Multiindex{2}).real(), -0.125, 1e-14);
}

TEST(Series, PowerExact) {
  S x = x1(4);
  S a = S::constant(1, 4, q(1)) + x;
  S s = a.power(1, 4);
  S s4 = s * s * s * s;
  EXPECT_EQ(s4, a);
}
