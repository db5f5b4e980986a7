#pragma once

// Small catalogue of manifolds used by the tests, the CLI and the acceptance run.

#include "manifold.hpp"

namespace crsing::samples {

template <class K>
Component<K> component(Kind k, const K& gamma, bool bishop = false) {
  Component<K> c;
  c.kind = k;
  c.gamma = gamma;
  c.bishop = bishop;
  return c;
}

// z3 = |z1|^2 + g1 (z1^2 + zb1^2),  z4 = (z2 + 2 g2 zb2 + z2 z3)^2
template <class K>
ManifoldSpec<K> coupled_elliptic(const K& g1, const K& g2, int N) {
  using S = Series<K>;
  using F = Field<K>;
  auto m = build_product_quadric<K>({component(Kind::elliptic, g1, true), component(Kind::elliptic, g2)}, N);
  int n = 4, NE = N + 1;
  S z1 = S::variable(n, NE, 0), z2 = S::variable(n, NE, 1), w1 = S::variable(n, NE, 2), w2 = S::variable(n, NE, 3);
  m.E[0] = z1 * w1 + (z1 * z1 + w1 * w1).scaled(g1);
  S L = z2 + w2.scaled(F::from_int(2) * g2) + z2 * m.E[0];
  m.E[1] = L * L;
  m.roots[1] = L;
  m.square.reset();
  return m;
}

template <class K>
ManifoldSpec<K> coupled_elliptic_default(int N) {
  return coupled_elliptic<K>(Field<K>::from_ratio(2, 5), Field<K>::from_ratio(3, 10), N);
}

// z3 = (z1 + 2 g1 zb1)^2 + (z2 + 2 g2 zb2)^3,  z4 = (z2 + 2 g2 zb2)^2
template <class K>
ManifoldSpec<K> cubic_coupled_squares(const K& g1, const K& g2, int N) {
  using S = Series<K>;
  using F = Field<K>;
  auto m = build_product_quadric<K>({component(Kind::elliptic, g1), component(Kind::elliptic, g2)}, N);
  int n = 4, NE = N + 1;
  S z1 = S::variable(n, NE, 0), z2 = S::variable(n, NE, 1), w1 = S::variable(n, NE, 2), w2 = S::variable(n, NE, 3);
  S L1 = z1 + w1.scaled(F::from_int(2) * g1), L2 = z2 + w2.scaled(F::from_int(2) * g2);
  m.E[0] = L1 * L1 + L2 * L2 * L2;
  m.E[1] = L2 * L2;
  m.roots[0].reset();
  m.roots[1] = L2;
  m.square.reset();
  return m;
}

}  // namespace crsing::samples
