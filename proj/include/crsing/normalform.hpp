#pragma once

#include <string>
#include <vector>

#include "deck.hpp"
#include "resonance.hpp"

namespace crsing {

// ---- diagonal families and resonance of monomial vector fields ---------------

namespace detail {

template <class K>
K ipow(const K& x, int e) {
  using F = Field<K>;
  K base = e < 0 ? F::one() / x : x, r = F::one();
  for (int k = 0; k < std::abs(e); ++k) r = r * base;
  return r;
}

template <class K>
K mono_value(const std::vector<K>& mu, const Multiindex& Q) {
  K r = Field<K>::one();
  for (int v = 0; v < Q.size(); ++v)
    if (Q[v]) r = r * ipow(mu[v], Q[v]);
  return r;
}

}  // namespace detail

// mu[i][c]: eigenvalue of D_i on coordinate c.
template <class K>
struct DiagonalFamily {
  using F = Field<K>;
  std::vector<std::vector<K>> mu;

  static DiagonalFamily from_matrices(const std::vector<Matrix<K>>& D) {
    DiagonalFamily d;
    for (auto& A : D) {
      for (int r = 0; r < A.rows(); ++r)
        for (int c = 0; c < A.cols(); ++c)
          if (r != c && !F::is_zero(A(r, c))) throw Error("linear part is not diagonal");
      std::vector<K> row;
      for (int r = 0; r < A.rows(); ++r) row.push_back(A(r, r));
      d.mu.push_back(row);
    }
    return d;
  }

  int size() const { return int(mu.size()); }

  K divisor(int i, const Multiindex& Q, int c) const { return detail::mono_value(mu[i], Q) - mu[i][c]; }

  bool vanishes(int i, const Multiindex& Q, int c) const {
    K d = divisor(i, Q, c);
    if constexpr (F::exact) {
      return F::is_zero(d);
    } else {
      double scale = std::max({1.0, std::abs(detail::mono_value(mu[i], Q)), std::abs(mu[i][c])});
      double r = std::abs(d) / scale;
      if (r < 1e-11) return true;
      if (r < 1e-8) throw Error("UndecidableResonance: |mu^Q - mu_ij| within tolerance band; use exact input");
      return false;
    }
  }

  bool resonant(const Multiindex& Q, int c) const {
    for (int i = 0; i < size(); ++i)
      if (!vanishes(i, Q, c)) return false;
    return true;
  }

  Matrix<K> matrix(int i) const { return Matrix<K>::diag(mu[i]); }
};

template <class K>
struct Decomposition {
  JetMap<K> H, G;
};

namespace detail {

template <class K>
void require_tangent_to_identity(const JetMap<K>& F, const char* who) {
  if (!(F.linear_part() == Matrix<K>::identity(F.n_in())))
    throw Error(std::string(who) + ": map must be tangent to the identity");
}

template <class K>
double jet_defect(const JetMap<K>& a, const JetMap<K>& b) {
  return (a - b).max_abs();
}

}  // namespace detail

// F = H o G^{-1}, H without resonant terms, G with resonant terms only.
template <class K>
Decomposition<K> decompose_wrt_D(const JetMap<K>& F, const DiagonalFamily<K>& D) {
  detail::require_tangent_to_identity(F, "decompose_wrt_D");
  int n = F.n_in(), N = F.order();
  JetMap<K> G = JetMap<K>::identity(n, N), H = G;
  for (int k = 2; k <= N; ++k) {
    JetMap<K> r = compose(F, G, k).homogeneous(k);
    for (int c = 0; c < n; ++c)
      for (auto& [m, v] : r[c]) {
        if (D.resonant(m, c)) G[c].add(m, -v);
        else H[c].add(m, v);
      }
  }
  return {H, G};
}

// ---- abelian normal form ------------------------------------------------------

template <class K>
struct AbelianNormalForm {
  JetMap<K> psi;
  std::vector<JetMap<K>> family;
  DiagonalFamily<K> D;
  bool integrable = true;  // resonant terms of component j divisible by x_j
  double conjugacy_residual = 0, commutation_residual = 0;
  int solved = 0, resonant_terms = 0;
};

template <class K>
AbelianNormalForm<K> normalize_abelian(const std::vector<JetMap<K>>& fam) {
  using F = Field<K>;
  if (fam.empty()) throw Error("normalize_abelian: empty family");
  int n = fam[0].n_in(), N = fam[0].order(), m = int(fam.size());
  std::vector<Matrix<K>> lin;
  for (auto& f : fam) lin.push_back(f.linear_part());
  AbelianNormalForm<K> out;
  out.D = DiagonalFamily<K>::from_matrices(lin);
  for (int i = 0; i < m; ++i)
    for (int l = i + 1; l < m; ++l) {
      double d = detail::jet_defect(compose(fam[i], fam[l]), compose(fam[l], fam[i]));
      if (!detail::small<K>(d)) throw Obstruction("NonCommutingFamily", -1, d, "family members do not commute");
    }
  JetMap<K> psi = JetMap<K>::identity(n, N);
  std::vector<JetMap<K>> hat;
  for (auto& L : lin) hat.push_back(JetMap<K>::linear(L, N));
  for (int k = 2; k <= N; ++k) {
    std::vector<JetMap<K>> R;
    for (int i = 0; i < m; ++i)
      R.push_back(compose(fam[i], psi, k).homogeneous(k) - compose(psi, hat[i], k).homogeneous(k));
    for (int c = 0; c < n; ++c) {
      std::vector<Multiindex> seen;
      for (int i = 0; i < m; ++i)
        for (auto& [q, v] : R[i][c]) seen.push_back(q);
      std::sort(seen.begin(), seen.end(), GrlexLess());
      seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
      for (auto& Q : seen) {
        if (out.D.resonant(Q, c)) {
          for (int i = 0; i < m; ++i) hat[i][c].add(Q, R[i][c].coeff(Q));
          ++out.resonant_terms;
          if (Q[c] == 0) out.integrable = false;
          continue;
        }
        int best = -1;
        double bv = -1;
        for (int i = 0; i < m; ++i) {
          if (out.D.vanishes(i, Q, c)) continue;
          double a = F::abs(out.D.divisor(i, Q, c));
          if (a > bv) bv = a, best = i;
        }
        K x = R[best][c].coeff(Q) / out.D.divisor(best, Q, c);
        for (int i = 0; i < m; ++i) {
          K rest = R[i][c].coeff(Q) - out.D.divisor(i, Q, c) * x;
          bool ok = F::exact ? F::is_zero(rest) : F::abs(rest) < 1e-9;
          if (ok) continue;
          if (out.D.vanishes(i, Q, c))
            throw Obstruction("NoSolvableEquation", k, F::abs(rest),
                              "nonresonant term forced into member " + std::to_string(i + 1));
          throw Obstruction("NonCommutingFamily", k, F::abs(rest), "homological equations disagree");
        }
        psi[c].add(Q, x);
        ++out.solved;
      }
    }
  }
  out.psi = psi;
  out.family = hat;
  for (int i = 0; i < m; ++i) {
    out.conjugacy_residual =
        std::max(out.conjugacy_residual, detail::jet_defect(compose(fam[i], psi), compose(psi, hat[i])));
    for (int l = 0; l < m; ++l) {
      JetMap<K> Dl = JetMap<K>::linear(out.D.matrix(l), N);
      out.commutation_residual =
          std::max(out.commutation_residual, detail::jet_defect(compose(hat[i], Dl), compose(Dl, hat[i])));
    }
  }
  return out;
}

// ---- standard linear model ----------------------------------------------------

template <class K>
Matrix<K> std_T1(const IndexAlgebra<K>& a, int j) {
  using F = Field<K>;
  int p = a.p;
  Matrix<K> M = Matrix<K>::identity(2 * p);
  M(j, j) = F::zero();
  M(p + j, p + j) = F::zero();
  M(j, p + j) = a.lambda[j];
  M(p + j, j) = F::one() / a.lambda[j];
  return M;
}

template <class K>
Matrix<K> std_T1_all(const IndexAlgebra<K>& a) {
  Matrix<K> M = Matrix<K>::identity(2 * a.p);
  for (int j = 0; j < a.p; ++j) M = M * std_T1(a, j);
  return M;
}

// rho(x) = P conj(x)
template <class K>
Matrix<K> std_rho(const IndexAlgebra<K>& a) {
  using F = Field<K>;
  int p = a.p;
  Matrix<K> M(2 * p, 2 * p);
  for (int j = 0; j < p; ++j) {
    switch (a.kind[j]) {
      case Kind::elliptic:
        M(j, p + j) = F::one();
        M(p + j, j) = F::one();
        break;
      case Kind::hyperbolic:
        M(j, j) = F::one();
        M(p + j, p + j) = F::one();
        break;
      case Kind::complex:
        M(j, a.partner[j]) = F::one();
        M(p + j, p + a.partner[j]) = F::one();
        break;
    }
  }
  return M;
}

template <class K>
std::vector<K> std_S_diag(const IndexAlgebra<K>& a, int j) {
  using F = Field<K>;
  std::vector<K> d(2 * a.p, F::one());
  d[j] = a.mu[j];
  d[a.p + j] = F::one() / a.mu[j];
  return d;
}

template <class K>
DiagonalFamily<K> std_S_family(const IndexAlgebra<K>& a) {
  DiagonalFamily<K> D;
  for (int j = 0; j < a.p; ++j) D.mu.push_back(std_S_diag(a, j));
  return D;
}

template <class K>
struct NormalCoordinates {
  Matrix<K> L, Linv;  // original = L * standard
  IndexAlgebra<K> alg;
};

namespace detail {

template <class K>
std::vector<K> conj_vec(const std::vector<K>& v) {
  std::vector<K> r;
  for (auto& x : v) r.push_back(Field<K>::conj(x));
  return r;
}

template <class K>
bool same(const Matrix<K>& a, const Matrix<K>& b) {
  return Field<K>::exact ? a == b : (a - b).max_abs() < 1e-9;
}

}  // namespace detail

// Linear change of coordinates bringing tau_1j, rho to the standard model.
template <class K>
NormalCoordinates<K> normal_coords(const DeckFamily<K>& fam, const IndexAlgebra<K>& alg) {
  using F = Field<K>;
  int p = fam.p, n = 2 * p;
  if (alg.p != p) throw Error("normal_coords: index algebra has the wrong size");
  std::vector<Matrix<K>> T1, Sig;
  for (auto& t : fam.tau1) T1.push_back(t.linear_part());
  for (auto& s : fam.sigma) Sig.push_back(s.linear_part());
  Matrix<K> P0 = fam.rho.h.linear_part();
  Matrix<K> I = Matrix<K>::identity(n);
  Matrix<K> L(n, n);
  std::vector<bool> done(p, false);
  auto set_col = [&](int c, const std::vector<K>& v) {
    for (int r = 0; r < n; ++r) L(r, c) = v[r];
  };
  for (int j = 0; j < p; ++j) {
    if (done[j]) continue;
    std::vector<Matrix<K>> blocks{Sig[j] - I.scaled(alg.mu[j])};
    for (int k = 0; k < p; ++k)
      if (k != j) {
        blocks.push_back(Sig[k] - I);
        blocks.push_back(T1[k] - I);
      }
    Matrix<K> A(n * int(blocks.size()), n);
    for (int b = 0; b < int(blocks.size()); ++b)
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) A(b * n + r, c) = blocks[b](r, c);
    auto ns = nullspace(A);
    if (ns.size() != 1)
      throw Error("normal coordinates: joint eigenspace for slot " + std::to_string(j + 1) + " has dimension " +
                  std::to_string(ns.size()));
    std::vector<K> v = ns[0];
    if (alg.kind[j] == Kind::complex) {
      int k = alg.partner[j];
      std::vector<K> vk = P0.apply(detail::conj_vec(v));
      set_col(j, v);
      set_col(p + j, T1[j].scaled(alg.lambda[j]).apply(v));
      set_col(k, vk);
      set_col(p + k, T1[k].scaled(alg.lambda[k]).apply(vk));
      done[k] = true;
    } else {
      std::vector<K> w = alg.kind[j] == Kind::elliptic ? T1[j].scaled(alg.lambda[j]).apply(v) : v;
      std::vector<K> u = P0.apply(detail::conj_vec(v));
      int r0 = 0;
      for (int r = 0; r < n; ++r)
        if (F::abs(w[r]) > F::abs(w[r0])) r0 = r;
      K kappa = u[r0] / w[r0];
      K c = F::one() + kappa;
      if (F::is_zero(c)) c = F::i();
      for (auto& x : v) x = x * c;
      set_col(j, v);
      set_col(p + j, T1[j].scaled(alg.lambda[j]).apply(v));
    }
    done[j] = true;
  }
  bool ok = detail::same(P0 * L.conj(), L * std_rho(alg));
  for (int j = 0; j < p && ok; ++j) ok = detail::same(T1[j] * L, L * std_T1(alg, j));
  if (!ok) throw Error("normal coordinates: linear family is not conjugate to the standard model");
  return {L, inverse(L), alg};
}

template <class K>
JetMap<K> conjugate_linear(const JetMap<K>& f, const Matrix<K>& L, const Matrix<K>& Linv) {
  int N = f.order();
  return compose(JetMap<K>::linear(Linv, N), compose(f, JetMap<K>::linear(L, N)));
}

// Family expressed in standard coordinates.
template <class K>
DeckFamily<K> family_in_coords(const DeckFamily<K>& fam, const Matrix<K>& L, const Matrix<K>& Linv) {
  std::vector<JetMap<K>> t;
  for (auto& x : fam.tau1) t.push_back(conjugate_linear(x, L, Linv));
  Matrix<K> P = Linv * fam.rho.h.linear_part() * L.conj();
  auto out = assemble_family(t, AntiJetMap<K>::linear(P, fam.N));
  out.partner = fam.partner;
  for (int j = 0; j < out.p; ++j) out.sigma[j] = compose(out.tau1[j], out.tau2[out.partner[j]]);
  return out;
}

// Conjugate every map of the family by a holomorphic phi (tangent to identity) commuting with rho.
template <class K>
DeckFamily<K> family_conjugated(const DeckFamily<K>& fam, const JetMap<K>& phi) {
  JetMap<K> inv = invert(phi);
  std::vector<JetMap<K>> t;
  for (auto& x : fam.tau1) t.push_back(conjugate(x, phi, inv));
  auto out = assemble_family(t, fam.rho);
  out.partner = fam.partner;
  for (int j = 0; j < out.p; ++j) out.sigma[j] = compose(out.tau1[j], out.tau2[out.partner[j]]);
  return out;
}

// ---- Moser-Webster normal form -----------------------------------------------

namespace detail {

template <class K>
std::vector<Series<K>> zeta_vars(int p, int N) {
  int n = 2 * p;
  std::vector<Series<K>> z;
  for (int i = 0; i < p; ++i) z.push_back(Series<K>::variable(n, N, i) * Series<K>::variable(n, N, p + i));
  return z;
}

// f(zeta) as a function of (xi, eta)
template <class K>
Series<K> in_xi_eta(const Series<K>& f, int N) {
  int p = f.nvars();
  return f.with_order(N).compose(zeta_vars<K>(p, N));
}

// permutation of zeta exponents induced by rho: swaps the slots of each complex pair
template <class K>
Multiindex rho_z(const IndexAlgebra<K>& a, const Multiindex& P) {
  Multiindex r(a.p);
  for (int i = 0; i < a.p; ++i) r.set(a.kind[i] == Kind::complex ? a.partner[i] : i, P[i]);
  return r;
}

// conj(f o rho_z)
template <class K>
Series<K> conj_rho_z(const IndexAlgebra<K>& a, const Series<K>& f) {
  Series<K> r(f.nvars(), f.order());
  for (auto& [m, v] : f) r.set(rho_z(a, m), Field<K>::conj(v));
  return r;
}

}  // namespace detail

// xi_j' = lam(zeta) eta_j, eta_j' = lam(zeta)^{-1} xi_j, other coordinates fixed.
template <class K>
JetMap<K> tau_model(const Series<K>& lam, int j, int p, int N) {
  int n = 2 * p;
  JetMap<K> t = JetMap<K>::identity(n, N);
  t[j] = detail::in_xi_eta(lam, N) * Series<K>::variable(n, N, p + j);
  t[p + j] = detail::in_xi_eta(lam.reciprocal(), N) * Series<K>::variable(n, N, j);
  return t;
}

template <class K>
JetMap<K> sigma_model(const Series<K>& M, int j, int p, int N) {
  int n = 2 * p;
  JetMap<K> t = JetMap<K>::identity(n, N);
  t[j] = detail::in_xi_eta(M, N) * Series<K>::variable(n, N, j);
  t[p + j] = detail::in_xi_eta(M.reciprocal(), N) * Series<K>::variable(n, N, p + j);
  return t;
}

// Lambda from the xi_j component: terms zeta^P eta_j.
template <class K>
Series<K> extract_lambda(const JetMap<K>& t, int j, int p) {
  int N = t.order(), Nz = (N - 1) / 2;
  Series<K> lam(p, Nz);
  for (auto& [m, v] : t[j]) {
    bool ok = m[p + j] == m[j] + 1;
    for (int i = 0; i < p && ok; ++i)
      if (i != j && m[i] != m[p + i]) ok = false;
    if (!ok) continue;
    Multiindex z(p);
    for (int i = 0; i < p; ++i) z.set(i, m[i]);
    lam.set(z, v);
  }
  return lam;
}

template <class K>
struct NormalFormResult {
  IndexAlgebra<K> alg;
  Matrix<K> L;                  // original = L * standard (linear)
  AbelianNormalForm<K> abelian;  // sigma family in standard coordinates
  JetMap<K> phi2;               // xi_j -> a_j(zeta) xi_j
  JetMap<K> conjugator;         // standard normal coordinates -> original coordinates
  std::vector<JetMap<K>> sigma_star, tau1_star;
  std::vector<Series<K>> Lambda1, Lambda1_raw, Lambda2_raw, M;  // series in zeta
  double commutation_residual = 0;  // sigma*_j vs S_i
  double shape_residual = 0;        // tau*_1j vs the model
  double product_residual = 0;      // Lambda_1 Lambda_2 - 1 before rescaling
  double reality_residual = 0;
  double rho_residual = 0;
  double lambda0_residual = 0;
  std::vector<std::string> warnings;
};

template <class K>
double reality_defect(const IndexAlgebra<K>& a, const std::vector<Series<K>>& lam) {
  double r = 0;
  for (int j = 0; j < a.p; ++j) {
    Series<K> lhs = a.kind[j] == Kind::elliptic ? lam[j] : lam[j].reciprocal();
    const Series<K>& other = a.kind[j] == Kind::complex ? lam[a.partner[j]] : lam[j];
    r = std::max(r, (lhs - detail::conj_rho_z(a, other)).max_abs());
  }
  return r;
}

template <class K>
NormalFormResult<K> mw_normalform(const DeckFamily<K>& fam, const std::vector<Component<K>>& comps) {
  using F = Field<K>;
  using S = Series<K>;
  int p = fam.p, n = 2 * p, N = fam.N;
  for (int i = 0; i < p; ++i)
    for (int l = i + 1; l < p; ++l) {
      double d = detail::jet_defect(compose(fam.sigma[i], fam.sigma[l]), compose(fam.sigma[l], fam.sigma[i]));
      if (!detail::small<K>(d))
        throw Obstruction("NonAbelian", -1, d, "sigma_" + std::to_string(i + 1) + " and sigma_" +
                                                   std::to_string(l + 1) + " do not commute");
    }
  NormalFormResult<K> out;
  out.alg = IndexAlgebra<K>::from_components(comps);
  const auto& a = out.alg;
  for (int j = 0; j < p; ++j) {
    if (a.kind[j] == Kind::hyperbolic)
      out.warnings.push_back("hyperbolic slot " + std::to_string(j + 1) + ": formal computation only");
    if (a.kind[j] == Kind::complex && a.partner[j] > j && std::abs(F::to_c(comps[0].gamma).real()) >= 0.5)
      out.warnings.push_back("Re gamma_s >= 1/2");
  }
  auto nc = normal_coords(fam, a);
  out.L = nc.L;
  auto sf = family_in_coords(fam, nc.L, nc.Linv);
  for (int j = 0; j < p; ++j)
    if (sf.partner[j] != (a.kind[j] == Kind::complex ? a.partner[j] : j))
      throw Error("mw_normalform: partner involutions do not match the slot layout");
  out.abelian = normalize_abelian(sf.sigma);
  const JetMap<K>& psi = out.abelian.psi;
  JetMap<K> psi_inv = invert(psi);
  int Nz = (N - 1) / 2;
  std::vector<JetMap<K>> t1, t2;
  for (int j = 0; j < p; ++j) {
    t1.push_back(conjugate(sf.tau1[j], psi, psi_inv));
    t2.push_back(conjugate(sf.tau2[sf.partner[j]], psi, psi_inv));
  }
  std::vector<S> a4(p);
  for (int j = 0; j < p; ++j) {
    S l1 = extract_lambda(t1[j], j, p), l2 = extract_lambda(t2[j], j, p);
    out.Lambda1_raw.push_back(l1);
    out.Lambda2_raw.push_back(l2);
    out.shape_residual = std::max(out.shape_residual, detail::jet_defect(t1[j], tau_model(l1, j, p, N)));
    out.shape_residual = std::max(out.shape_residual, detail::jet_defect(t2[j], tau_model(l2, j, p, N)));
    S prod = l1 * l2;
    out.product_residual = std::max(out.product_residual, (prod - S::constant(p, Nz, F::one())).max_abs());
    S M = l1 * l2.reciprocal();
    out.M.push_back(M);
    K lam = a.lambda[j];
    // principal root normalized by Lambda(0) = lambda
    S lt = M.scaled(F::one() / (lam * lam)).power(1, 2).scaled(lam);
    out.Lambda1.push_back(lt);
    a4[j] = prod.power(1, 4);
    out.lambda0_residual = std::max(out.lambda0_residual, F::abs(lt.constant_term() - lam));
  }
  if (!detail::small<K>(out.shape_residual))
    out.warnings.push_back("normalized involutions are not in the zeta-form to working order");
  JetMap<K> phi2 = JetMap<K>::identity(n, N);
  for (int j = 0; j < p; ++j) {
    phi2[j] = detail::in_xi_eta(a4[j], N) * S::variable(n, N, j);
    phi2[p + j] = detail::in_xi_eta(a4[j].reciprocal(), N) * S::variable(n, N, p + j);
  }
  out.phi2 = phi2;
  JetMap<K> phi2_inv = invert(phi2);
  JetMap<K> full = compose(psi, phi2);
  out.conjugator = compose(JetMap<K>::linear(nc.L, N), full);
  JetMap<K> full_inv = invert(full);
  for (int j = 0; j < p; ++j) {
    out.sigma_star.push_back(conjugate(sf.sigma[j], full, full_inv));
    out.tau1_star.push_back(conjugate(t1[j], phi2, phi2_inv));
    out.shape_residual = std::max(out.shape_residual,
                                  detail::jet_defect(out.tau1_star[j], tau_model(out.Lambda1[j], j, p, N)));
  }
  auto SD = std_S_family(a);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) {
      JetMap<K> Si = JetMap<K>::linear(SD.matrix(i), N);
      out.commutation_residual = std::max(
          out.commutation_residual,
          detail::jet_defect(compose(out.sigma_star[j], Si), compose(Si, out.sigma_star[j])));
    }
  AntiJetMap<K> rs = AntiJetMap<K>::linear(std_rho(a), N);
  out.rho_residual = detail::jet_defect(conjugate_by(rs, full), full);
  out.reality_residual = reality_defect(a, out.Lambda1);
  if (!detail::small<K>(out.reality_residual))
    throw Obstruction("BranchInconsistency", -1, out.reality_residual,
                      "principal roots violate the reality relations to working order");
  return out;
}

// ---- realization --------------------------------------------------------------

template <class K>
struct RealizedNormalForm {
  IndexAlgebra<K> alg;
  std::vector<Series<K>> Lambda, A, B;  // series in zeta
  std::vector<Series<K>> Z;             // z_{p+j} = Lambda_j(zeta) zeta_j
  double flatness_residual = 0;
  int order = 0;
};

template <class K>
RealizedNormalForm<K> realize_normal_form(const IndexAlgebra<K>& a, const std::vector<Series<K>>& Lambda) {
  using F = Field<K>;
  using S = Series<K>;
  RealizedNormalForm<K> out;
  out.alg = a;
  out.Lambda = Lambda;
  int p = a.p;
  if (int(Lambda.size()) != p) throw Error("realize_normal_form: need one Lambda per slot");
  out.order = Lambda.empty() ? 0 : Lambda[0].order();
  for (int j = 0; j < p; ++j) {
    if (a.kind[j] == Kind::hyperbolic) throw Error("realize_normal_form: hyperbolic slots are not covered");
    const S& L = Lambda[j];
    S one = S::constant(p, L.order(), F::one());
    S L2 = L * L;
    S d = one - L2;
    if (F::is_zero(d.constant_term()) || F::abs(d.constant_term()) < 1e-14)
      throw Error("realize_normal_form: lambda^2 = 1 is a pole of A and B");
    S inv = (d * d).reciprocal();
    out.A.push_back(a.kind[j] == Kind::elliptic ? (one + L2) * inv : (L + L * L2) * inv);
    out.B.push_back(L * inv);
    out.Z.push_back(L * S::variable(p, L.order(), j));
  }
  for (int j = 0; j < p; ++j) {
    if (a.kind[j] == Kind::elliptic) {
      out.flatness_residual = std::max(out.flatness_residual, (out.Z[j] - detail::conj_rho_z(a, out.Z[j])).max_abs());
    } else {
      S L2i = (Lambda[j] * Lambda[j]).reciprocal();
      S lhs = out.Z[j] * L2i;
      out.flatness_residual =
          std::max(out.flatness_residual, (lhs - detail::conj_rho_z(a, out.Z[a.partner[j]])).max_abs());
    }
  }
  return out;
}

template <class K>
RealizedNormalForm<K> realize_normal_form(const NormalFormResult<K>& nf) {
  return realize_normal_form(nf.alg, nf.Lambda1);
}

// Quadratic part of the realization with Lambda replaced by Lambda(0), as a manifold spec.
template <class K>
ManifoldSpec<K> realized_quadric(const RealizedNormalForm<K>& rf, int N = 2) {
  using S = Series<K>;
  const auto& a = rf.alg;
  int p = a.p, n = 2 * p;
  ManifoldSpec<K> m;
  m.p = p;
  m.N = N;
  for (int j = 0; j < p; ++j) {
    K lam = rf.Lambda[j].constant_term(), A = rf.A[j].constant_term(), B = rf.B[j].constant_term();
    S z = S::variable(n, N + 1, j);
    S zeta(n, N + 1);
    if (a.kind[j] == Kind::elliptic) {
      S w = S::variable(n, N + 1, p + j);
      zeta = (z * w).scaled(A) - (z * z + w * w).scaled(B);
    } else {
      S w = S::variable(n, N + 1, p + a.partner[j]);
      zeta = (z * w).scaled(A) - (z * z + (w * w).scaled(lam * lam)).scaled(B);
    }
    m.E.push_back(zeta.scaled(lam));
  }
  m.roots.assign(p, std::nullopt);
  return m;
}

// Bishop invariants recovered from the linear deck group of a quadratic part.
template <class K>
std::vector<cplx> infer_gammas(const ManifoldSpec<K>& m, const IndexAlgebra<K>& a) {
  auto seeds = linear_seeds(m);
  int p = m.p;
  Matrix<K> P = standard_rho_matrix<K>(p);
  std::vector<Matrix<K>> T2;
  for (auto& T : seeds.generators) T2.push_back(P * T.conj() * P);
  auto part = partners(seeds.generators, T2);
  std::vector<cplx> out;
  for (int j = 0; j < p; ++j) {
    if (a.kind[j] == Kind::complex && a.partner[j] < j) continue;
    // slot j of the realization is reflected by the generator acting on w_j (or w_partner)
    int g = -1;
    int target = a.kind[j] == Kind::complex ? a.partner[j] : j;
    for (int k = 0; k < p; ++k)
      if (seeds.reflected[k] == target) g = k;
    if (g < 0) throw Error("infer_gammas: no generator for slot " + std::to_string(j + 1));
    auto ev = eigenvalues(Matrix<K>(seeds.generators[g] * T2[part[g]]));
    cplx mu = 1;
    for (auto e : ev)
      if (std::abs(e - 1.0) > 1e-9 && std::abs(e) >= std::abs(mu) - 1e-12) mu = e;
    if (a.kind[j] == Kind::elliptic) {
      out.push_back(std::sqrt(mu) / (1.0 + mu));
    } else if (a.kind[j] == Kind::complex) {
      out.push_back(std::conj(1.0 / (1.0 + mu)));
    } else {
      out.push_back(1.0 / (2.0 * std::abs(std::sqrt(mu).real())));
    }
  }
  return out;
}

// zeta solving the realization equations at z' (float evaluation).
template <class K>
std::vector<cplx> solve_zeta(const RealizedNormalForm<K>& rf, const std::vector<cplx>& z, double r0 = 1e-2,
                             int max_iter = 50, double tol = 1e-12) {
  const auto& a = rf.alg;
  int p = a.p;
  if (int(z.size()) != p) throw Error("solve_zeta: point has the wrong dimension");
  double nz = 0;
  for (auto& x : z) nz = std::max(nz, std::abs(x));
  if (nz > r0) throw Error("solve_zeta: |z'| above the radius guard");
  std::vector<cplx> zeta(p, 0.0);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<cplx> nzeta(p);
    for (int j = 0; j < p; ++j) {
      cplx A = evaluate(rf.A[j], zeta), B = evaluate(rf.B[j], zeta), L = evaluate(rf.Lambda[j], zeta);
      if (a.kind[j] == Kind::elliptic) {
        nzeta[j] = A * std::norm(z[j]) - B * (z[j] * z[j] + std::conj(z[j] * z[j]));
      } else {
        cplx zb = std::conj(z[a.partner[j]]);
        nzeta[j] = A * z[j] * zb - B * (z[j] * z[j] + L * L * zb * zb);
      }
    }
    double d = 0;
    for (int j = 0; j < p; ++j) d = std::max(d, std::abs(nzeta[j] - zeta[j]));
    zeta = nzeta;
    if (d < tol) return zeta;
  }
  throw Obstruction("NoConvergence", max_iter, 0, "zeta iteration did not converge");
}

// ---- hull polydiscs -------------------------------------------------------------

struct HullPolydisc {
  std::vector<double> x, zeta, S, A, B, semi_major, semi_minor, lambda;
  double C1 = 0, eps = 0;
  bool contained = true;
  double max_ratio = 0;  // largest semi-axis over C1 sqrt(x_j)
  bool degenerate = false;
};

namespace detail {

template <class K>
void require_elliptic(const IndexAlgebra<K>& a) {
  for (auto k : a.kind)
    if (k != Kind::elliptic) throw Error("hull polydiscs require a pure elliptic normal form");
}

// Newton for zeta_j Lambda_j(zeta) = x_j.
template <class K>
std::vector<double> invert_R(const RealizedNormalForm<K>& rf, const std::vector<double>& x, double* jac_ratio) {
  int p = rf.alg.p;
  std::vector<cplx> z(p);
  for (int j = 0; j < p; ++j) z[j] = x[j] / Field<K>::to_c(rf.Lambda[j].constant_term()).real();
  std::vector<std::vector<Series<K>>> dL(p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) dL[j].push_back(rf.Lambda[j].derivative(i));
  auto jac = [&](const std::vector<cplx>& zz) {
    Matrix<cplx> J(p, p);
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < p; ++i)
        J(j, i) = (i == j ? evaluate(rf.Lambda[j], zz) : 0.0) + zz[j] * evaluate(dL[j][i], zz);
    return J;
  };
  bool conv = false;
  for (int it = 0; it < 50; ++it) {
    std::vector<cplx> res(p);
    double nr = 0;
    for (int j = 0; j < p; ++j) {
      res[j] = z[j] * evaluate(rf.Lambda[j], z) - x[j];
      nr = std::max(nr, std::abs(res[j]));
    }
    if (nr < 1e-15) {
      conv = true;
      break;
    }
    auto sol = solve(jac(z), res);
    for (int j = 0; j < p; ++j) z[j] -= sol.x[j];
  }
  if (!conv) throw Obstruction("NoConvergence", 50, 0, "Newton inversion of R failed");
  if (jac_ratio) {
    cplx d0 = determinant(jac(std::vector<cplx>(p, 0.0))), d = determinant(jac(z));
    *jac_ratio = std::abs(d / d0);
  }
  std::vector<double> out;
  for (auto& v : z) out.push_back(v.real());
  return out;
}

template <class K>
double hull_C1(const RealizedNormalForm<K>& rf) {
  double c = 0;
  for (auto& L : rf.Lambda) {
    double l = Field<K>::to_c(L.constant_term()).real();
    c = std::max(c, (1 + l) * std::sqrt(1 / l));
  }
  return 1.1 * c;
}

}  // namespace detail

// Largest dyadic eps <= 1e-2 with the Jacobian of R within a factor 2 of its value at 0 on [0, eps]^p.
template <class K>
double hull_default_eps(const RealizedNormalForm<K>& rf) {
  detail::require_elliptic(rf.alg);
  int p = rf.alg.p;
  double eps = 1.0 / 128;  // largest power of two <= 1e-2
  for (int t = 0; t < 30; ++t, eps /= 2) {
    bool ok = true;
    for (int mask = 1; mask < (1 << p) && ok; ++mask) {
      std::vector<double> x(p, 0.0);
      for (int j = 0; j < p; ++j)
        if (mask >> j & 1) x[j] = eps;
      try {
        double r = 0;
        detail::invert_R(rf, x, &r);
        ok = r > 0.5 && r < 2;
      } catch (const Error&) {
        ok = false;
      }
    }
    if (ok) return eps;
  }
  throw Error("hull: no eps passes the Jacobian guard");
}

template <class K>
HullPolydisc hull_polydiscs(const RealizedNormalForm<K>& rf, const std::vector<double>& x, double eps = -1) {
  detail::require_elliptic(rf.alg);
  int p = rf.alg.p;
  if (int(x.size()) != p) throw Error("hull: point has the wrong dimension");
  for (double v : x)
    if (v < 0) throw Error("hull: x'' must be nonnegative");
  HullPolydisc h;
  h.eps = eps > 0 ? eps : hull_default_eps(rf);
  for (double v : x)
    if (v > h.eps) throw Error("hull: x'' outside [0, eps]^p");
  h.x = x;
  h.C1 = detail::hull_C1(rf);
  h.degenerate = true;
  for (double v : x) h.degenerate = h.degenerate && v == 0;
  h.zeta = detail::invert_R(rf, x, nullptr);
  std::vector<cplx> zc(h.zeta.begin(), h.zeta.end());
  for (int j = 0; j < p; ++j) {
    double L = evaluate(rf.Lambda[j], zc).real();
    double S = 1 / L;  // zeta_j = x_j S_j
    double den = (1 - L * L) * (1 - L * L);
    double A = (1 + L * L) / den / S, B = L / den / S;
    h.lambda.push_back(L);
    h.S.push_back(S);
    h.A.push_back(A);
    h.B.push_back(B);
    double a = std::sqrt(x[j] / (A - 2 * B)), b = std::sqrt(x[j] / (A + 2 * B));
    h.semi_major.push_back(a);
    h.semi_minor.push_back(b);
    if (x[j] > 0) {
      double ratio = std::max(a, b) / (h.C1 * std::sqrt(x[j]));
      h.max_ratio = std::max(h.max_ratio, ratio);
      if (ratio > 1) h.contained = false;
    }
  }
  return h;
}

// Boundary points of the j-th ellipse: (A-2B) u^2 + (A+2B) v^2 = x_j.
inline std::vector<cplx> hull_boundary(const HullPolydisc& h, int j, int count) {
  std::vector<cplx> out;
  for (int k = 0; k < count; ++k) {
    double t = 2 * M_PI * k / count;
    out.push_back({h.semi_major[j] * std::cos(t), h.semi_minor[j] * std::sin(t)});
  }
  return out;
}

}  // namespace crsing
