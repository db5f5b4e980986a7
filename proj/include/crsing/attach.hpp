#pragma once

#include <string>
#include <vector>

#include "deck.hpp"
#include "normalform.hpp"

namespace crsing {

// One sign per hyperbolic component and per complex pair, in component order.
using SignVector = std::vector<int>;

struct ResonantPair {
  int j = 0;
  std::vector<int> Q;
};

template <class K>
struct AttachResult {
  SignVector eps;
  std::vector<K> nu;                // per slot
  Matrix<K> A, At, gamma;           // gamma = B / 2
  JetMap<K> rho1, rho2;             // holomorphic representatives w' = rho_i(z')
  std::vector<Series<K>> f, fstar;  // z-side and conjugate-side roots (square form only)
  std::vector<Series<K>> K_eq;      // z_{p+j} = K_eq[j](z')
  std::vector<ResonantPair> resonant;  // zero determinants with consistent right-hand side
  bool unique = true;
  std::vector<std::string> notes;
  double involution_residual = 0;
  double branch_residual = 0;       // the two K-equation sets
  double conjugate_branch_residual = 0;
  double linear_residual = 0;       // A conj(A) - I, At conj(At) - I, At + gamma^-1 + A, nu
  int order = 0;
};

struct InvarianceReport {
  double sigma_residual = 0;    // sigma(H) in H
  double tau_residual = 0;      // tau_1(H_1) = H_2
  bool tangent_ok = false;
  std::vector<char> tangent;    // per slot: 'x' (xi direction) or 'e' (eta direction)
  std::vector<char> expected;
  double max_residual() const { return std::max(sigma_residual, tau_residual); }
};

namespace detail {

template <class K>
struct AttachLayout {
  std::vector<Slot<K>> slots;
  std::vector<int> signed_slots;  // component index of each sign entry
  Matrix<K> B;
};

template <class K>
AttachLayout<K> attach_layout(const std::vector<Component<K>>& comps) {
  using F = Field<K>;
  AttachLayout<K> L;
  L.slots = slot_layout(comps);
  int p = int(L.slots.size());
  L.B = Matrix<K>(p, p);
  K two = F::from_int(2);
  for (int c = 0; c < int(comps.size()); ++c) {
    if (comps[c].kind == Kind::elliptic)
      throw Obstruction("EllipticObstruction", -1, 0,
                        "a_e + conj(a_e) = -1/gamma_e, |a_e| = 1 has no solution for 0 < gamma_e < 1/2");
    L.signed_slots.push_back(c);
  }
  for (int j = 0; j < p; ++j) {
    const auto& s = L.slots[j];
    const auto& c = comps[s.component];
    if (s.kind == Kind::hyperbolic) L.B(j, j) = two * c.gamma;
    else L.B(j, s.partner) = s.first ? two * c.gamma : two * (F::one() - F::conj(c.gamma));
  }
  return L;
}

template <class K>
bool near_zero(const K& x) {
  if constexpr (Field<K>::exact) return Field<K>::is_zero(x);
  else return std::abs(x) < 1e-10;
}

// Single-monomial linear form c * z_t; returns t and c.
template <class K>
std::pair<int, K> linear_monomial(const Series<K>& l) {
  int t = -1;
  K c{};
  for (auto& [m, v] : l) {
    if (m.degree() != 1 || t >= 0) throw Error("attach: branch linear form is not a single coordinate");
    for (int i = 0; i < m.size(); ++i)
      if (m[i]) t = i;
    c = v;
  }
  if (t < 0) throw Error("attach: branch linear form vanishes (transversality fails)");
  return {t, c};
}

// D / (c z_t), or nullopt if some monomial misses z_t.
template <class K>
std::optional<Series<K>> divide_linear(const Series<K>& D, int t, const K& c) {
  Series<K> q(D.nvars(), D.order());
  K ic = Field<K>::one() / c;
  for (auto& [m, v] : D) {
    if (near_zero(v)) continue;
    if (m[t] == 0) return std::nullopt;
    Multiindex r = m;
    r.set(t, m[t] - 1);
    q.set(r, v * ic);
  }
  return q;
}

// Monomial matrix: row i has its single entry in column col[i].
template <class K>
void monomial_pattern(const Matrix<K>& M, std::vector<int>& col, std::vector<K>& val) {
  int n = M.rows();
  col.assign(n, -1);
  val.assign(n, Field<K>::zero());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!near_zero(M(i, j))) {
        if (col[i] >= 0) throw Error("attach: linear part is not a monomial matrix");
        col[i] = j;
        val[i] = M(i, j);
      }
}

template <class K>
std::vector<Series<K>> graph(const JetMap<K>& g, int order) {
  int p = g.n_in();
  std::vector<Series<K>> v;
  for (int i = 0; i < p; ++i) v.push_back(Series<K>::variable(p, order, i));
  for (int i = 0; i < p; ++i) v.push_back(g[i].with_order(order));
  return v;
}

// (w, g(w)) as inner map for conj(E)(w, z)
template <class K>
std::vector<Series<K>> cograph(const JetMap<K>& ginv, int order) {
  return graph(ginv, order);
}

}  // namespace detail

// Linear parts of rho_1, rho_2 for a sign vector (slot layout coordinates).
template <class K>
std::pair<Matrix<K>, Matrix<K>> asymptotic_linear(const std::vector<Component<K>>& comps, const SignVector& eps) {
  using F = Field<K>;
  auto L = detail::attach_layout(comps);
  int p = int(L.slots.size());
  if (eps.size() != L.signed_slots.size())
    throw Error("attach: sign vector needs " + std::to_string(L.signed_slots.size()) + " entries");
  for (int e : eps)
    if (e != 1 && e != -1) throw Error("attach: signs must be +1 or -1");
  // distinct eigenvalues
  // a real gamma_s makes mu_{s'} = mu_s^{-1}; that coincidence inside one pair is tolerated
  std::vector<cplx> ev;
  std::vector<int> owner;
  for (int j = 0; j < p; ++j) {
    auto sp = slot_spectrum(comps[L.slots[j].component], L.slots[j].first);
    if (!sp.mu) throw Error("attach: missing eigenvalue");
    ev.push_back(F::to_c(*sp.mu));
    ev.push_back(1.0 / F::to_c(*sp.mu));
    owner.push_back(L.slots[j].component);
    owner.push_back(L.slots[j].component);
  }
  for (size_t a = 0; a < ev.size(); ++a)
    for (size_t b = a + 1; b < ev.size(); ++b)
      if (std::abs(ev[a] - ev[b]) < 1e-12 && !(owner[a] == owner[b] && comps[owner[a]].kind == Kind::complex))
        throw Obstruction("RepeatedEigenvalue", -1, 0, "mu_j^{+-1} are not distinct");
  Matrix<K> A(p, p), At(p, p);
  for (int j = 0; j < p; ++j) {
    const auto& s = L.slots[j];
    int c = s.component;
    int sign = eps[std::find(L.signed_slots.begin(), L.signed_slots.end(), c) - L.signed_slots.begin()];
    auto sp = slot_spectrum(comps[c], true);
    if (s.kind == Kind::hyperbolic) {
      K lam = *sp.lambda;
      A(j, j) = sign > 0 ? -lam : -F::conj(lam);
      At(j, j) = sign > 0 ? -F::conj(lam) : -lam;
    } else if (s.first) {
      K mu = *sp.mu, one = F::one();
      K a = sign > 0 ? -(one / mu) : -one, at = sign > 0 ? -one : -(one / mu);
      A(j, s.partner) = a;
      At(j, s.partner) = at;
      A(s.partner, j) = one / F::conj(a);
      At(s.partner, j) = one / F::conj(at);
    }
  }
  return {A, At};
}

template <class K>
AttachResult<K> attach_solve(const ManifoldSpec<K>& m, const SignVector& eps) {
  using F = Field<K>;
  using S = Series<K>;
  auto lay = detail::attach_layout(m.components);
  int p = m.p, N = m.N, n = 2 * p;
  if (int(lay.slots.size()) != p) throw Error("attach: components do not match p");
  AttachResult<K> out;
  out.eps = eps;
  out.order = N;
  auto [A, At] = asymptotic_linear(m.components, eps);
  out.A = A;
  out.At = At;
  out.gamma = lay.B.scaled(F::from_ratio(1, 2));
  for (auto& c : m.components)
    if (c.kind == Kind::complex && std::abs(F::to_c(c.gamma).imag()) < 1e-14)
      out.notes.push_back("real gamma_s: mu_{s'} = mu_s^{-1}, resonances expected");
  Matrix<K> I = Matrix<K>::identity(p);
  Matrix<K> Bi = inverse(lay.B), Bci = inverse(lay.B.conj());
  // quadratic part must be the product quadric (z_j + (B w)_j)^2
  std::vector<S> Lj;
  for (int j = 0; j < p; ++j) {
    S l = S::variable(n, N + 1, j);
    for (int k = 0; k < p; ++k)
      if (!F::is_zero(lay.B(j, k))) l = l + S::variable(n, N + 1, p + k, lay.B(j, k));
    Lj.push_back(l);
    if ((m.E[j].homogeneous(2) - (l * l).homogeneous(2)).max_abs() > 1e-12)
      throw Error("attach: quadratic part of E_" + std::to_string(j + 1) + " is not the product quadric");
  }
  out.linear_residual = std::max({(A * A.conj() - I).max_abs(), (At * At.conj() - I).max_abs(),
                                  (At + inverse(out.gamma) + A).max_abs()});
  if (F::abs(determinant(Matrix<K>(At - A))) < 1e-14) throw Error("attach: K_1, K_2 are not transversal");
  Matrix<K> D = inverse(At) * A;
  for (int j = 0; j < p; ++j) {
    out.nu.push_back(D(j, j));
    for (int k = 0; k < p; ++k)
      if (k != j) out.linear_residual = std::max(out.linear_residual, F::abs(D(j, k)));
  }
  // conj(E)(w, z): swap roles of the two blocks
  std::vector<S> Ec;
  for (int j = 0; j < p; ++j) Ec.push_back(m.E[j].conj());
  // branch linear forms l_j(z) = L_j(z, A z), m_j(y) = conj(L_j)(y, A^{-1} y)
  Matrix<K> Ai = inverse(A), Ati = inverse(At);
  JetMap<K> g1 = JetMap<K>::linear(A, N), g2 = JetMap<K>::linear(At, N);
  std::vector<std::pair<int, K>> lf, mf;
  for (int j = 0; j < p; ++j) {
    lf.push_back(detail::linear_monomial(Lj[j].compose(detail::graph(g1, 1), 1).homogeneous(1)));
    JetMap<K> gi = JetMap<K>::linear(Ai, N);
    mf.push_back(detail::linear_monomial(Lj[j].conj().compose(detail::graph(gi, 1), 1).homogeneous(1)));
  }
  std::vector<int> col1, col2;
  std::vector<K> val1, val2;
  detail::monomial_pattern(Ai, col1, val1);
  detail::monomial_pattern(Ati, col2, val2);
  if (col1 != col2) throw Error("attach: A and A~ have different monomial patterns");
  // A^{-1} e_j = alpha_j e_{pi(j)}
  std::vector<int> pi(p);
  std::vector<K> alpha(p), alpha_t(p);
  for (int i = 0; i < p; ++i) {
    pi[col1[i]] = i;
    alpha[col1[i]] = val1[i];
    alpha_t[col2[i]] = val2[i];
  }
  for (int k = 2; k <= N; ++k) {
    std::vector<S> Y(p, S(p, N)), Z(p, S(p, N));
    {
      auto G1 = detail::graph(g1, k + 1), G2 = detail::graph(g2, k + 1);
      std::vector<S> X;
      for (int j = 0; j < p; ++j) {
        S Dk = (m.E[j].compose(G1, k + 1) - m.E[j].compose(G2, k + 1)).homogeneous(k + 1);
        auto q = detail::divide_linear(Dk, lf[j].first, F::from_int(2) * lf[j].second);
        if (!q)
          throw Obstruction("DivisibilityObstruction", k + 1, Dk.max_abs(),
                            "component " + std::to_string(j + 1) + ": right-hand side not divisible by z_" +
                                std::to_string(lf[j].first + 1));
        X.push_back(q->with_order(N));
      }
      for (int j = 0; j < p; ++j)
        for (int l = 0; l < p; ++l)
          if (!F::is_zero(Bi(j, l))) Y[j] = Y[j] - X[l].scaled(Bi(j, l));
    }
    {
      JetMap<K> h1 = invert(g1), h2 = invert(g2);
      auto G1 = detail::cograph(h1, k + 1), G2 = detail::cograph(h2, k + 1);
      std::vector<S> X;
      for (int j = 0; j < p; ++j) {
        S Dk = (Ec[j].compose(G1, k + 1) - Ec[j].compose(G2, k + 1)).homogeneous(k + 1);
        auto q = detail::divide_linear(Dk, mf[j].first, F::from_int(2) * mf[j].second);
        if (!q)
          throw Obstruction("DivisibilityObstruction", k + 1, Dk.max_abs(),
                            "conjugate component " + std::to_string(j + 1) + ": right-hand side not divisible by w_" +
                                std::to_string(mf[j].first + 1));
        X.push_back(q->with_order(N));
      }
      for (int j = 0; j < p; ++j)
        for (int l = 0; l < p; ++l)
          if (!F::is_zero(Bci(j, l))) Z[j] = Z[j] + X[l].scaled(Bci(j, l));
    }
    for (int j = 0; j < p; ++j)
      for (auto& Q : monomials_of_degree(p, k)) {
        // image of z^Q e_j under R -> A^{-1} R(A^{-1} y)
        Multiindex img(p);
        K c = alpha[j], ct = alpha_t[j];
        for (int i = 0; i < p; ++i) {
          if (!Q[i]) continue;
          img.set(col1[i], Q[i]);
          c = c * detail::ipow(val1[i], Q[i]);
          ct = ct * detail::ipow(val2[i], Q[i]);
        }
        K y = Y[j].coeff(Q), z = Z[pi[j]].coeff(img);
        K det = ct - c;
        K r;
        if (detail::near_zero(det)) {
          K incons = z - c * y;
          std::vector<int> qv = Q.vec();
          if (!detail::near_zero(incons))
            throw Obstruction("ResonanceViolation", k, F::abs(incons),
                              "nu^Q = nu_j^{-1} at j = " + std::to_string(j + 1) + " with inconsistent right-hand side");
          out.resonant.push_back({j, qv});
          out.unique = false;
          r = F::zero();
        } else {
          r = (ct * y - z) / det;
        }
        g1[j].add(Q, r);
        g2[j].add(Q, y - r);
      }
  }
  out.rho1 = g1;
  out.rho2 = g2;
  JetMap<K> id = JetMap<K>::identity(p, N);
  out.involution_residual = std::max(detail::jet_defect(compose(g1.conj(), g1), id),
                                     detail::jet_defect(compose(g2.conj(), g2), id));
  auto G1 = detail::graph(g1, N + 1), G2 = detail::graph(g2, N + 1);
  JetMap<K> h1 = invert(g1), h2 = invert(g2);
  auto H1 = detail::cograph(h1, N + 1), H2 = detail::cograph(h2, N + 1);
  for (int j = 0; j < p; ++j) {
    S k1 = m.E[j].compose(G1, N + 1), k2 = m.E[j].compose(G2, N + 1);
    out.K_eq.push_back(k1);
    out.branch_residual = std::max(out.branch_residual, (k1 - k2).max_abs());
    out.conjugate_branch_residual =
        std::max(out.conjugate_branch_residual, (Ec[j].compose(H1, N + 1) - Ec[j].compose(H2, N + 1)).max_abs());
    if (m.roots[j]) {
      out.f.push_back(-m.roots[j]->compose(G1, N + 1));
      out.fstar.push_back(-m.roots[j]->conj().compose(H1, N + 1));
    }
  }
  return out;
}

// All sign classes modulo eps ~ -eps (first sign fixed to +1).
template <class K>
std::vector<AttachResult<K>> enumerate_pairs(const ManifoldSpec<K>& m, std::vector<std::string>* failures = nullptr) {
  auto lay = detail::attach_layout(m.components);
  int s = int(lay.signed_slots.size());
  std::vector<AttachResult<K>> out;
  for (int mask = 0; mask < (1 << std::max(0, s - 1)); ++mask) {
    SignVector eps(s, 1);
    for (int i = 1; i < s; ++i) eps[i] = (mask >> (i - 1) & 1) ? -1 : 1;
    try {
      out.push_back(attach_solve(m, eps));
    } catch (const Obstruction& o) {
      if (!failures) throw;
      failures->push_back(o.what());
    }
  }
  return out;
}

// Checks that H = {w' = rho_1(z')} is sigma-invariant, tau_1 H = {w' = rho_2(z')},
// and that T_0 H is spanned by the predicted normal-coordinate directions.
template <class K>
InvarianceReport invariance_check(const AttachResult<K>& res, const DeckFamily<K>& fam,
                                  const std::vector<Component<K>>& comps) {
  using F = Field<K>;
  InvarianceReport rep;
  int p = fam.p, N = std::min(fam.N, res.order), n = 2 * p;
  auto embed = [&](const JetMap<K>& g) {
    std::vector<Series<K>> c = detail::graph(g, N);
    return JetMap<K>(p, N, c);
  };
  auto defect_on = [&](const JetMap<K>& image, const JetMap<K>& g) {
    // image = (u, v) as functions of z'; residual v - g(u)
    std::vector<Series<K>> u(image.components().begin(), image.components().begin() + p);
    double r = 0;
    for (int j = 0; j < p; ++j) r = std::max(r, (image[p + j] - g[j].compose(u, N)).truncated(N).max_abs());
    return r;
  };
  JetMap<K> g1 = res.rho1.with_order(N), g2 = res.rho2.with_order(N);
  JetMap<K> phi1 = embed(g1);
  rep.sigma_residual = defect_on(compose(fam.sigma_all.with_order(N), phi1), g1);
  rep.tau_residual = defect_on(compose(fam.tau1_all.with_order(N), phi1), g2);
  // tangent space
  auto alg = IndexAlgebra<K>::from_components(comps);
  auto nc = normal_coords(fam, alg);
  auto lay = detail::attach_layout(comps);
  for (int j = 0; j < p; ++j) {
    int c = lay.slots[j].component;
    int sign = res.eps[std::find(lay.signed_slots.begin(), lay.signed_slots.end(), c) - lay.signed_slots.begin()];
    // complex: nu_s = conj(mu_s)^{eps} = mu_{s'}^{-eps}, so eps = +1 picks the eta directions
    bool xi = lay.slots[j].kind == Kind::complex ? sign < 0 : sign > 0;
    rep.expected.push_back(xi ? 'x' : 'e');
  }
  // a standard direction v lies in T_0 H iff (L v)_w = A (L v)_z
  auto in_tangent = [&](int col) {
    std::vector<K> v(n);
    for (int r = 0; r < n; ++r) v[r] = nc.L(r, col);
    double d = 0;
    for (int j = 0; j < p; ++j) {
      K s = F::zero();
      for (int k = 0; k < p; ++k) s = s + res.A(j, k) * v[k];
      d = std::max(d, F::abs(v[p + j] - s));
    }
    return d < 1e-9;
  };
  rep.tangent_ok = true;
  for (int j = 0; j < p; ++j) {
    bool x = in_tangent(j), e = in_tangent(p + j);
    rep.tangent.push_back(x && !e ? 'x' : (e && !x ? 'e' : '?'));
    rep.tangent_ok = rep.tangent_ok && rep.tangent[j] == rep.expected[j];
  }
  return rep;
}

}  // namespace crsing
