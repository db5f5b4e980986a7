#pragma once

#include <map>

#include "normalform.hpp"

namespace crsing {

// Maps in standard coordinates (xi, eta) are written I + (U, V):
// U_{j,PQ} is the coefficient of xi^P eta^Q in component j,
// V_{j,QP} the coefficient of xi^Q eta^P in component p + j.

namespace detail {

inline Multiindex join(const std::vector<int>& P, const std::vector<int>& Q) {
  int p = int(P.size());
  Multiindex m(2 * p);
  for (int i = 0; i < p; ++i) {
    m.set(i, P[i]);
    m.set(p + i, Q[i]);
  }
  return m;
}

inline IndexPair split(const Multiindex& m, int j) {
  int p = m.size() / 2;
  IndexPair r;
  r.j = j;
  for (int i = 0; i < p; ++i) {
    r.P.push_back(m[i]);
    r.Q.push_back(m[p + i]);
  }
  return r;
}

template <class K>
K U_at(const JetMap<K>& f, const IndexPair& pq) {
  return f[pq.j].coeff(join(pq.P, pq.Q));
}

template <class K>
K V_at(const JetMap<K>& f, const IndexPair& pq) {
  int p = int(pq.P.size());
  return f[p + pq.j].coeff(join(pq.Q, pq.P));
}

template <class K>
void set_U(JetMap<K>& f, const IndexPair& pq, const K& v) {
  f[pq.j].set(join(pq.P, pq.Q), v);
}

template <class K>
void set_V(JetMap<K>& f, const IndexPair& pq, const K& v) {
  int p = int(pq.P.size());
  f[p + pq.j].set(join(pq.Q, pq.P), v);
}

template <class K>
K sgn(int s) {
  return s > 0 ? Field<K>::one() : -Field<K>::one();
}

template <class K>
std::vector<IndexPair> pairs_of_degree(const IndexAlgebra<K>& a, int j, int k, bool in_N) {
  std::vector<IndexPair> out;
  for (auto& m : monomials_of_degree(2 * a.p, k)) {
    IndexPair pq = split(m, j);
    if (in_N ? in_Nj(a, pq) : (in_Rj(a, pq) && !in_Nj(a, pq))) out.push_back(pq);
  }
  return out;
}

template <class K>
AntiJetMap<K> rho_std(const IndexAlgebra<K>& a, int N) {
  return AntiJetMap<K>::linear(std_rho(a), N);
}

template <class K>
double upto(const JetMap<K>& a, const JetMap<K>& b, int k) {
  return (a.truncated(k) - b.truncated(k)).max_abs();
}

}  // namespace detail

// ---- normalized decompositions ------------------------------------------------

enum class FamilyMode { S_T1_rho, T1_T2_rho };

// Splits a homogeneous map into (normalized part, centralizer part).
template <class K>
std::pair<JetMap<K>, JetMap<K>> split_homogeneous(const JetMap<K>& r, int k, FamilyMode mode,
                                                  const IndexAlgebra<K>& a) {
  using F = Field<K>;
  int p = a.p;
  K half = F::from_ratio(1, 2);
  JetMap<K> cen(2 * p, r.order(), std::vector<Series<K>>(2 * p, Series<K>(2 * p, r.order())));
  auto reflect = [&](const IndexPair& pq, bool use_iota) -> K {
    int j = pq.j;
    auto maps = index_maps(a, pq);
    switch (a.kind[j]) {
      case Kind::elliptic: {
        if (use_iota) return F::conj(detail::U_at(r, iota_e(a, pq)));
        return detail::sgn<K>(nu_values(a, pq).nu) * F::conj(detail::U_at(r, maps.rho_e));
      }
      case Kind::hyperbolic:
      case Kind::complex:
        return F::conj(detail::U_at(r, maps.rho));
    }
    return F::zero();
  };
  for (int j = 0; j < p; ++j) {
    if (mode == FamilyMode::S_T1_rho) {
      for (bool n : {true, false})
        for (auto& pq : detail::pairs_of_degree(a, j, k, n)) {
          K u = half * (detail::U_at(r, pq) + reflect(pq, false));
          detail::set_U(cen, pq, u);
          detail::set_V(cen, pq, detail::sgn<K>(nu_values(a, pq).nu) * u);
        }
    } else {
      for (auto& pq : detail::pairs_of_degree(a, j, k, true)) {
        K u = half * (detail::U_at(r, pq) + reflect(pq, true));
        detail::set_U(cen, pq, u);
        detail::set_V(cen, pq, detail::sgn<K>(nu_values(a, pq).nu) * u);
      }
      for (auto& pq : detail::pairs_of_degree(a, j, k, false)) {
        auto nu = nu_values(a, pq);
        K u = detail::sgn<K>(nu.nu_plus) * detail::U_at(cen, ab_map(a, pq));
        detail::set_U(cen, pq, u);
        detail::set_V(cen, pq, detail::sgn<K>(nu.nu) * u);
      }
    }
  }
  return {r - cen, cen};
}

// F = H o G^{-1} with G in the centralizer of the family and H normalized.
template <class K>
Decomposition<K> decompose_wrt_family(const JetMap<K>& F, FamilyMode mode, const IndexAlgebra<K>& a) {
  detail::require_tangent_to_identity(F, "decompose_wrt_family");
  int n = F.n_in(), N = F.order();
  if (n != 2 * a.p) throw Error("decompose_wrt_family: dimension mismatch");
  JetMap<K> G = JetMap<K>::identity(n, N), H = G;
  for (int k = 2; k <= N; ++k) {
    JetMap<K> r = compose(F, G, k).homogeneous(k);
    auto [h, g] = split_homogeneous(r, k, mode, a);
    H = H + h;
    G = G - g;
  }
  return {H, G};
}

// Residual of membership in the centralizer of {S, T1, rho} or {T1_j, rho}.
template <class K>
double centralizer_defect(const JetMap<K>& G, FamilyMode mode, const IndexAlgebra<K>& a) {
  int N = G.order(), p = a.p;
  double r = 0;
  auto D = std_S_family(a);
  auto rs = detail::rho_std(a, N);
  r = std::max(r, detail::jet_defect(conjugate_by(rs, G), G));
  auto check = [&](const Matrix<K>& M) {
    JetMap<K> L = JetMap<K>::linear(M, N);
    r = std::max(r, detail::jet_defect(compose(G, L), compose(L, G)));
  };
  if (mode == FamilyMode::S_T1_rho) {
    for (int i = 0; i < p; ++i) check(D.matrix(i));
    check(std_T1_all(a));
  } else {
    for (int j = 0; j < p; ++j) check(std_T1(a, j));
  }
  return r;
}

// ---- linearization of the involutions -------------------------------------------

struct LinearizationStep {
  std::string stage;
  int coefficients = 0;
  double residual = 0;
};

template <class K>
struct TauLinearization {
  JetMap<K> psi;
  LinearizationStep info;
};

// Psi in the centralizer of {S, rho} with Psi^{-1} tau_1 Psi = T_1 (tau_1 = product of the tau_1j).
template <class K>
TauLinearization<K> linearize_tau_pair(const JetMap<K>& tau1, const IndexAlgebra<K>& a) {
  using F = Field<K>;
  int p = a.p, n = 2 * p, N = tau1.order();
  JetMap<K> T1 = JetMap<K>::linear(std_T1_all(a), N);
  if (!detail::same(tau1.linear_part(), std_T1_all(a))) throw Error("linearize_tau_pair: linear part is not T_1");
  auto rs = detail::rho_std(a, N);
  JetMap<K> psi = JetMap<K>::identity(n, N);
  TauLinearization<K> out;
  out.info.stage = "tau_pair";
  K half = F::from_ratio(1, 2);
  for (int k = 2; k <= N; ++k) {
    JetMap<K> E = compose(tau1, psi, k).homogeneous(k);
    JetMap<K> step(n, N, std::vector<Series<K>>(n, Series<K>(n, N)));
    for (int j = 0; j < p; ++j) {
      K lam = a.lambda[j];
      for (bool inN : {true, false})
        for (auto& pq : detail::pairs_of_degree(a, j, k, inN)) {
          K g = E[p + j].coeff(detail::join(pq.P, pq.Q));
          K nu = detail::sgn<K>(nu_values(a, pq).nu);
          if (a.kind[j] == Kind::elliptic) {
            detail::set_U(step, pq, -(half * lam * g));
            detail::set_V(step, pq, half * nu * lam * g);
          } else {
            detail::set_V(step, pq, nu * lam * g);
          }
          ++out.info.coefficients;
        }
    }
    psi = psi + step;
    double res = std::max(detail::upto(compose(tau1, psi, k), compose(psi, T1, k), k),
                          detail::upto(conjugate_by(rs, psi), psi, k));
    out.info.residual = std::max(out.info.residual, res);
    if (!detail::small<K>(res))
      throw Obstruction("ObstructionAtDegree", k, res, "tau_1 is not linearizable in the centralizer of S and rho",
                        "tau_pair");
  }
  out.psi = psi;
  return out;
}

// Psi commuting with S, T_1, rho with Psi^{-1} tau_1j Psi = T_1j for every j.
template <class K>
TauLinearization<K> linearize_tau_family(const std::vector<JetMap<K>>& tau1, const IndexAlgebra<K>& a) {
  using F = Field<K>;
  int p = a.p, n = 2 * p, N = tau1.at(0).order();
  std::vector<JetMap<K>> T;
  for (int j = 0; j < p; ++j) {
    T.push_back(JetMap<K>::linear(std_T1(a, j), N));
    if (!detail::same(tau1[j].linear_part(), std_T1(a, j)))
      throw Error("linearize_tau_family: linear part of tau_1" + std::to_string(j + 1) + " is not standard");
  }
  auto rs = detail::rho_std(a, N);
  // f_{l,j}: nonlinear part of the xi_j component of tau_1l
  auto f_of = [&](int l, int j) {
    Series<K> s = tau1[l][j];
    if (l == j) s = s - Series<K>::variable(n, N, p + j, a.lambda[j]);
    else s = s - Series<K>::variable(n, N, j);
    return s;
  };
  JetMap<K> psi = JetMap<K>::identity(n, N);
  TauLinearization<K> out;
  out.info.stage = "tau_family";
  K half = F::from_ratio(1, 2);
  for (int k = 2; k <= N; ++k) {
    JetMap<K> step(n, N, std::vector<Series<K>>(n, Series<K>(n, N)));
    for (int j = 0; j < p; ++j) {
      auto Npairs = detail::pairs_of_degree(a, j, k, true);
      if (a.kind[j] == Kind::elliptic && !Npairs.empty()) {
        Series<K> rhs = f_of(j, j).compose(compose(tau1[j], psi, k).components(), k).homogeneous(k);
        for (auto& pq : Npairs) {
          K u = half * rhs.coeff(detail::join(pq.P, pq.Q));
          detail::set_U(step, pq, u);
          detail::set_V(step, pq, detail::sgn<K>(nu_values(a, pq).nu) * u);
          ++out.info.coefficients;
        }
      }
      // R_j \ N_j: telescoping over the slots with p_l < q_l
      std::map<unsigned, Series<K>> cache;
      for (auto& pq : detail::pairs_of_degree(a, j, k, false)) {
        unsigned mask = 0;
        std::vector<int> L;
        for (int l = 0; l < p; ++l)
          if (l != j && pq.P[l] < pq.Q[l]) mask |= 1u << l, L.push_back(l);
        auto it = cache.find(mask);
        if (it == cache.end()) {
          Matrix<K> TL = Matrix<K>::identity(n);
          for (int l : L) TL = TL * std_T1(a, l);
          Series<K> uj = step[j].compose(JetMap<K>::linear(TL, N).components(), k).homogeneous(k);
          Series<K> sum(n, N);
          JetMap<K> inner = psi;
          for (int l : L) {
            sum = sum + f_of(l, j).compose(inner.components(), k).homogeneous(k);
            inner = compose(tau1[l], inner, k);
          }
          it = cache.emplace(mask, uj - sum).first;
        }
        K u = it->second.coeff(detail::join(pq.P, pq.Q));
        detail::set_U(step, pq, u);
        detail::set_V(step, pq, detail::sgn<K>(nu_values(a, pq).nu) * u);
        ++out.info.coefficients;
      }
    }
    psi = psi + step;
    double res = detail::upto(conjugate_by(rs, psi), psi, k);
    for (int j = 0; j < p; ++j)
      res = std::max(res, detail::upto(compose(tau1[j], psi, k), compose(psi, T[j], k), k));
    out.info.residual = std::max(out.info.residual, res);
    if (!detail::small<K>(res))
      throw Obstruction("ObstructionAtDegree", k, res, "tau_1j are not simultaneously linearizable", "tau_family");
  }
  out.psi = psi;
  return out;
}

// ---- rigidity pipeline -------------------------------------------------------------

template <class K>
struct RigidityResult {
  IndexAlgebra<K> alg;
  Matrix<K> L;
  JetMap<K> psi_sigma, psi_pair, psi_family;
  JetMap<K> phi;  // standard coordinates -> original coordinates
  std::vector<LinearizationStep> steps;
  double final_residual = 0;   // Phi^{-1} tau_1j Phi - T_1j and rho
  double pair_normalized = 0;  // defect of G = id when decomposing psi_pair
  double family_normalized = 0;
  int order = 0;
};

template <class K>
RigidityResult<K> rigidity_pipeline(const DeckFamily<K>& fam, const std::vector<Component<K>>& comps) {
  RigidityResult<K> out;
  int p = fam.p, n = 2 * p, N = fam.N;
  out.order = N;
  out.alg = IndexAlgebra<K>::from_components(comps);
  const auto& a = out.alg;
  auto nc = normal_coords(fam, a);
  out.L = nc.L;
  auto sf = family_in_coords(fam, nc.L, nc.Linv);
  // sigma
  auto ab = normalize_abelian(sf.sigma);
  for (int j = 0; j < p; ++j)
    if (!ab.family[j].is_linear())
      throw Obstruction("NotLinearizable", -1, (ab.family[j] - JetMap<K>::linear(ab.D.matrix(j), N)).max_abs(),
                        "sigma family has resonant nonlinear terms", "sigma");
  out.psi_sigma = ab.psi;
  out.steps.push_back({"sigma", ab.solved, ab.conjugacy_residual});
  auto f1 = family_conjugated(sf, ab.psi);
  // tau_1 and tau_2
  auto pair = linearize_tau_pair(f1.tau1_all, a);
  out.psi_pair = pair.psi;
  out.steps.push_back(pair.info);
  auto f2 = family_conjugated(f1, pair.psi);
  auto famlin = linearize_tau_family(f2.tau1, a);
  out.psi_family = famlin.psi;
  out.steps.push_back(famlin.info);
  JetMap<K> psi = compose(ab.psi, compose(pair.psi, famlin.psi));
  out.phi = compose(JetMap<K>::linear(nc.L, N), psi);
  JetMap<K> inv = invert(out.phi);
  for (int j = 0; j < p; ++j)
    out.final_residual = std::max(
        out.final_residual, detail::jet_defect(conjugate(fam.tau1[j], out.phi, inv), JetMap<K>::linear(std_T1(a, j), N)));
  // rho in standard coordinates: Phi^{-1} rho Phi = rho_std
  JetMap<K> back = compose(inv, compose(fam.rho.h, out.phi.conj()));
  out.final_residual =
      std::max(out.final_residual, detail::jet_defect(back, JetMap<K>::linear(std_rho(a), N)));
  auto d2 = decompose_wrt_family(pair.psi, FamilyMode::S_T1_rho, a);
  out.pair_normalized = detail::jet_defect(d2.G, JetMap<K>::identity(n, N));
  auto d3 = decompose_wrt_family(famlin.psi, FamilyMode::T1_T2_rho, a);
  out.family_normalized = detail::jet_defect(d3.G, JetMap<K>::identity(n, N));
  return out;
}

template <class K>
RigidityResult<K> rigidity_pipeline(const ManifoldSpec<K>& m) {
  DeckFamily<K> fam;
  try {
    fam = build_deck_family(m);
  } catch (Obstruction& o) {
    o.stage = "deck";
    throw;
  }
  return rigidity_pipeline(fam, m.components);
}

}  // namespace crsing
