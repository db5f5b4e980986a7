#pragma once

#include <map>
#include <string>
#include <vector>

#include "manifold.hpp"

namespace crsing {

template <class K>
struct DeckFamily {
  int p = 0, N = 0;
  std::vector<JetMap<K>> tau1, tau2;
  AntiJetMap<K> rho;
  std::vector<int> partner;  // tau2 index not commuting with tau1[j]
  std::vector<JetMap<K>> sigma;
  JetMap<K> tau1_all, tau2_all, sigma_all;
  int group_order = 1;
  bool conditionD = false;
  bool square_path = false;
  std::vector<std::string> notes;
};

template <class K>
struct FamilyReport {
  double involution = 0, commutation = 0, invariance = 0, rho_intertwining = 0, reversibility = 0,
         sigma_commutation = 0;
  bool abelian = false;
  bool passed = false;
  double max_residual() const {
    return std::max({involution, commutation, invariance, rho_intertwining, reversibility});
  }
};

namespace detail {

template <class K>
double defect(const JetMap<K>& a, const JetMap<K>& b) {
  return (a - b).max_abs();
}

template <class K>
bool small(double r) {
  return Field<K>::exact ? r == 0 : r <= 1e-10;
}

template <class K>
std::vector<Series<K>> compose_E(const std::vector<Series<K>>& E, const JetMap<K>& f, int limit = -1) {
  std::vector<Series<K>> out;
  for (auto& e : E) out.push_back(e.compose(f.components(), limit));
  return out;
}

}  // namespace detail

// E(z, f(z, w)) = E(z, w) solved degree by degree from a linear seed.
template <class K>
JetMap<K> solve_deck_general(const ManifoldSpec<K>& m, const Matrix<K>& seed) {
  using F = Field<K>;
  using S = Series<K>;
  int p = m.p, n = 2 * p, N = m.N, M = N + 1;
  std::vector<S> E;
  for (auto& e : m.E) E.push_back(e.with_order(M));
  std::vector<S> comps;
  for (int i = 0; i < n; ++i) {
    S s(n, M);
    for (int j = 0; j < n; ++j) s.set(Multiindex::unit(n, j), seed(i, j));
    comps.push_back(s);
  }
  for (int i = 0; i < p; ++i)
    if (!(comps[i] == S::variable(n, M, i))) throw Error("deck seed must preserve z'");
  JetMap<K> f(n, M, comps);
  // operator: sum_l d_{w_l} E^{(2)}_i (z, seed) * f_{k,l}
  std::vector<std::vector<S>> G(p, std::vector<S>(p));
  for (int i = 0; i < p; ++i) {
    S e2 = E[i].homogeneous(2);
    for (int l = 0; l < p; ++l) G[i][l] = e2.derivative(p + l).compose(f.components());
  }
  auto check_low = [&](int upto) {
    auto Ef = detail::compose_E(E, f, upto);
    for (int i = 0; i < p; ++i) {
      S d = (Ef[i] - E[i]).truncated(upto);
      if (!d.is_zero()) return d.max_abs();
    }
    return 0.0;
  };
  if (double r = check_low(2); r != 0 && (F::exact || r > 1e-10))
    throw Error("seed is not a deck transformation of the quadratic part");
  for (int k = 2; k <= N; ++k) {
    auto Ef = detail::compose_E(E, f, k + 1);
    auto cols = monomials_of_degree(n, k);
    auto rows = monomials_of_degree(n, k + 1);
    std::map<Multiindex, int, GrlexLess> ridx;
    for (int r = 0; r < int(rows.size()); ++r) ridx[rows[r]] = r;
    int nr = p * int(rows.size()), nc = p * int(cols.size());
    Matrix<K> A(nr, nc);
    std::vector<K> b(nr, F::zero());
    for (int i = 0; i < p; ++i) {
      S d = (Ef[i] - E[i]).homogeneous(k + 1);
      for (auto& [mi, v] : d) b[i * rows.size() + ridx[mi]] = -v;
      for (int l = 0; l < p; ++l)
        for (auto& [t, c] : G[i][l]) {
          int var = 0;
          while (t[var] == 0) ++var;
          for (int cc = 0; cc < int(cols.size()); ++cc) {
            Multiindex mm = cols[cc];
            mm.set(var, mm[var] + 1);
            A(i * int(rows.size()) + ridx[mm], l * int(cols.size()) + cc) += c;
          }
        }
    }
    auto sol = solve(A, b);
    if (!sol.consistent)
      throw Obstruction("ObstructedAtDegree", k, sol.residual,
                        "no deck transformation extends this seed past degree " + std::to_string(k - 1));
    if (sol.rank < nc) throw Error("SingularSystem: deck equation not uniquely solvable (condition B?)");
    for (int l = 0; l < p; ++l)
      for (int cc = 0; cc < int(cols.size()); ++cc) f[p + l].add(cols[cc], sol.x[l * cols.size() + cc]);
  }
  // final check through degree N+1
  if (double r = check_low(M); r != 0 && (F::exact || r > 1e-9))
    throw Obstruction("ObstructedAtDegree", M, r, "residual at the final degree");
  return f.with_order(N);
}

// B w~ + R(z, w~) = S (B w + R(z, w)) solved by contraction.
template <class K>
JetMap<K> solve_deck_square_form(const ManifoldSpec<K>& m, const std::vector<int>& signs) {
  using F = Field<K>;
  using S = Series<K>;
  if (!m.square) throw Error("spec has no square form");
  int p = m.p, n = 2 * p, N = m.N;
  Matrix<K> Bi;
  try {
    Bi = inverse(m.square->B);
  } catch (const Error&) {
    throw Error("square form: singular B");
  }
  const auto& B = m.square->B;
  std::vector<S> R;
  for (auto& r : m.square->R) R.push_back(r.with_order(N));
  std::vector<S> rhs(p, S(n, N));
  for (int j = 0; j < p; ++j) {
    S L = R[j];
    for (int k = 0; k < p; ++k) L += S::variable(n, N, p + k, B(j, k));
    rhs[j] = signs[j] < 0 ? -L : L;
  }
  std::vector<S> sub;
  for (int i = 0; i < p; ++i) sub.push_back(S::variable(n, N, i));
  std::vector<S> wt(p, S(n, N));
  for (int it = 0; it <= N; ++it) {
    std::vector<S> full = sub;
    for (auto& w : wt) full.push_back(w);
    std::vector<S> t(p, S(n, N));
    for (int j = 0; j < p; ++j) t[j] = rhs[j] - R[j].compose(full);
    std::vector<S> nw(p, S(n, N));
    for (int a = 0; a < p; ++a)
      for (int j = 0; j < p; ++j)
        if (!F::is_zero(Bi(a, j))) nw[a] += t[j].scaled(Bi(a, j));
    bool same = true;
    for (int a = 0; a < p; ++a) same = same && (nw[a] == wt[a]);
    wt = nw;
    if (same && it > 0) break;
  }
  std::vector<S> comps = sub;
  for (auto& w : wt) comps.push_back(w);
  return JetMap<K>(n, N, comps);
}

template <class K>
AntiJetMap<K> standard_rho(int p, int N) {
  return AntiJetMap<K>::linear(standard_rho_matrix<K>(p), N);
}

// Fill tau2, partners, sigma from generators and rho.
template <class K>
DeckFamily<K> assemble_family(std::vector<JetMap<K>> tau1, const AntiJetMap<K>& rho) {
  DeckFamily<K> fam;
  fam.p = int(tau1.size());
  fam.N = tau1.empty() ? 0 : tau1[0].order();
  fam.tau1 = std::move(tau1);
  fam.rho = rho;
  int n = 2 * fam.p;
  for (auto& t : fam.tau1) fam.tau2.push_back(conjugate_by(rho, t));
  std::vector<Matrix<K>> L1, L2;
  for (auto& t : fam.tau1) L1.push_back(t.linear_part());
  for (auto& t : fam.tau2) L2.push_back(t.linear_part());
  bool unique = true;
  fam.partner = partners(L1, L2, &unique);
  if (!unique) fam.notes.push_back("linear parts not in product form: partner of tau_1j taken as tau_2j");
  for (int j = 0; j < fam.p; ++j) fam.sigma.push_back(compose(fam.tau1[j], fam.tau2[fam.partner[j]]));
  fam.tau1_all = JetMap<K>::identity(n, fam.N);
  fam.tau2_all = fam.tau1_all;
  for (auto& t : fam.tau1) fam.tau1_all = compose(fam.tau1_all, t);
  for (auto& t : fam.tau2) fam.tau2_all = compose(fam.tau2_all, t);
  fam.sigma_all = compose(fam.tau1_all, fam.tau2_all);
  fam.group_order = 1 << fam.p;
  fam.conditionD = true;
  return fam;
}

template <class K>
DeckFamily<K> build_deck_family(const ManifoldSpec<K>& m) {
  int p = m.p;
  auto cb = check_condition_B(m);
  if (!cb.holds) throw Obstruction("ConditionB", -1, 0, "q^{-1}(0) != {0}");
  if (m.square) {
    std::vector<JetMap<K>> gens;
    std::vector<std::pair<int, JetMap<K>>> tagged;
    for (int j = 0; j < p; ++j) {
      std::vector<int> s(p, 1);
      s[j] = -1;
      JetMap<K> t = solve_deck_square_form(m, s);
      int l = 0;
      Matrix<K> T = t.linear_part();
      for (int a = 0; a < p; ++a)
        if (!Field<K>::is_zero(T(p + a, p + a) - Field<K>::one())) {
          l = a;
          break;
        }
      tagged.push_back({l, t});
    }
    std::stable_sort(tagged.begin(), tagged.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (auto& [l, t] : tagged) gens.push_back(t);
    auto fam = assemble_family(gens, standard_rho<K>(p, m.N));
    fam.square_path = true;
    return fam;
  }
  auto seeds = linear_seeds(m);
  // try every nontrivial subset product; generators are the singletons
  std::vector<JetMap<K>> gens;
  std::vector<bool> ok(p, false);
  int found = 0;
  DeckFamily<K> partial;
  partial.p = p;
  partial.N = m.N;
  for (int j = 0; j < p; ++j) {
    try {
      gens.push_back(solve_deck_general(m, seeds.generators[j]));
      ok[j] = true;
      ++found;
    } catch (const Obstruction& o) {
      partial.notes.push_back("generator " + std::to_string(j + 1) + ": " + o.what() + " (degree " +
                              std::to_string(o.degree) + ")");
    }
  }
  if (found < p) {
    // count the deck group found: subsets of solvable generators whose products also lift
    int order = 1;
    for (int mask = 1; mask < (1 << p); ++mask) {
      Matrix<K> T = Matrix<K>::identity(2 * p);
      for (int j = 0; j < p; ++j)
        if (mask >> j & 1) T = T * seeds.generators[j];
      try {
        solve_deck_general(m, T);
        ++order;
      } catch (const Obstruction&) {
      }
    }
    partial.group_order = order;
    partial.conditionD = false;
    throw Obstruction("ConditionD", -1, 0,
                      "deck group of order " + std::to_string(order) + " < 2^p; " +
                          (partial.notes.empty() ? std::string() : partial.notes.front()));
  }
  return assemble_family(gens, standard_rho<K>(p, m.N));
}

// Group order and per-seed outcomes without throwing.
template <class K>
struct DeckSearch {
  int group_order = 1;
  std::vector<int> obstructed_degree;  // per nontrivial subset mask (index mask-1), -1 if it lifts
  std::vector<double> residual;
};

template <class K>
DeckSearch<K> search_deck_group(const ManifoldSpec<K>& m) {
  int p = m.p;
  auto seeds = linear_seeds(m);
  DeckSearch<K> out;
  for (int mask = 1; mask < (1 << p); ++mask) {
    Matrix<K> T = Matrix<K>::identity(2 * p);
    for (int j = 0; j < p; ++j)
      if (mask >> j & 1) T = T * seeds.generators[j];
    try {
      if (m.square) {
        // square form: every sign pattern lifts
        ++out.group_order;
        out.obstructed_degree.push_back(-1);
        out.residual.push_back(0);
        continue;
      }
      solve_deck_general(m, T);
      ++out.group_order;
      out.obstructed_degree.push_back(-1);
      out.residual.push_back(0);
    } catch (const Obstruction& o) {
      out.obstructed_degree.push_back(o.degree);
      out.residual.push_back(o.residual);
    }
  }
  return out;
}

template <class K>
FamilyReport<K> verify_family(const DeckFamily<K>& fam, const ManifoldSpec<K>& m) {
  FamilyReport<K> r;
  int n = 2 * fam.p, N = fam.N;
  JetMap<K> id = JetMap<K>::identity(n, N);
  for (auto& t : fam.tau1) r.involution = std::max(r.involution, detail::defect(compose(t, t), id));
  for (int i = 0; i < fam.p; ++i)
    for (int j = i + 1; j < fam.p; ++j)
      r.commutation = std::max(
          r.commutation, detail::defect(compose(fam.tau1[i], fam.tau1[j]), compose(fam.tau1[j], fam.tau1[i])));
  std::vector<Series<K>> E;
  for (auto& e : m.E) E.push_back(e.with_order(N));
  for (auto& t : fam.tau1) {
    auto Et = detail::compose_E(E, t);
    for (int i = 0; i < fam.p; ++i) r.invariance = std::max(r.invariance, (Et[i] - E[i]).max_abs());
  }
  for (int j = 0; j < fam.p; ++j)
    r.rho_intertwining = std::max(r.rho_intertwining, detail::defect(conjugate_by(fam.rho, fam.tau1[j]), fam.tau2[j]));
  r.reversibility = detail::defect(compose(fam.sigma_all, conjugate_by(fam.rho, fam.sigma_all)), id);
  for (int i = 0; i < fam.p; ++i)
    for (int j = i + 1; j < fam.p; ++j)
      r.sigma_commutation =
          std::max(r.sigma_commutation, detail::defect(compose(fam.sigma[i], fam.sigma[j]),
                                                       compose(fam.sigma[j], fam.sigma[i])));
  r.abelian = detail::small<K>(r.sigma_commutation);
  r.passed = detail::small<K>(r.max_residual());
  return r;
}

// ---- realization from an involution family ------------------------------------

template <class K>
struct Realization {
  ManifoldSpec<K> spec;
  JetMap<K> chi, psi;  // chi: original coordinates -> (z', w'); psi = chi^{-1}
  JetMap<K> phi;       // Reynolds linearization
};

template <class K>
Realization<K> realize_manifold_full(const std::vector<JetMap<K>>& gens, const AntiJetMap<K>& rho,
                                     const std::vector<Component<K>>& components = {}) {
  using F = Field<K>;
  using S = Series<K>;
  int p = int(gens.size());
  if (p == 0) throw Error("realize_manifold: no generators");
  int n = 2 * p, N = gens[0].order();
  if (gens[0].n_in() != n) throw Error("realize_manifold: generators must act on C^{2p}");
  JetMap<K> id = JetMap<K>::identity(n, N);
  for (auto& g : gens)
    if (!detail::small<K>(detail::defect(compose(g, g), id))) throw Error("realize_manifold: generator is not an involution");
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (!detail::small<K>(detail::defect(compose(gens[i], gens[j]), compose(gens[j], gens[i]))))
        throw Error("realize_manifold: generators do not commute");
  std::vector<JetMap<K>> group;
  for (int mask = 0; mask < (1 << p); ++mask) {
    JetMap<K> g = id;
    for (int j = 0; j < p; ++j)
      if (mask >> j & 1) g = compose(g, gens[j]);
    group.push_back(g);
  }
  JetMap<K> phi = reynolds_linearize(group);
  std::vector<Matrix<K>> T;
  for (auto& g : gens) T.push_back(g.linear_part());
  // invariant covectors a: a T_j = a for all j
  Matrix<K> Sys(n * p, n);
  for (int j = 0; j < p; ++j)
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) Sys(j * n + c, r) = T[j](r, c) - (r == c ? F::one() : F::zero());
  auto inv = nullspace(Sys);
  if (int(inv.size()) != p)
    throw Error("realize_manifold: invariant linear functions have dimension " + std::to_string(inv.size()) +
                " != p (fixed hypersurfaces not transversal)");
  std::vector<std::vector<K>> skew;
  for (int j = 0; j < p; ++j) {
    Matrix<K> Sj(n * p, n);
    for (int k = 0; k < p; ++k)
      for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r)
          Sj(k * n + c, r) = T[k](r, c) - (r == c ? (k == j ? -F::one() : F::one()) : F::zero());
    auto b = nullspace(Sj);
    if (b.size() != 1)
      throw Error("realize_manifold: skew-invariant function for generator " + std::to_string(j + 1) +
                  " is not unique (dimension " + std::to_string(b.size()) + ")");
    skew.push_back(b[0]);
  }
  auto covector = [&](const std::vector<K>& a) {
    S s(n, N);
    for (int r = 0; r < n; ++r)
      if (!F::is_zero(a[r])) s += phi[r].scaled(a[r]);
    return s;
  };
  std::vector<S> A, Bf;
  for (auto& a : inv) A.push_back(covector(a));
  for (auto& b : skew) Bf.push_back(covector(b));
  // chi = (A, conj(A o rho))
  std::vector<S> chic = A;
  for (int i = 0; i < p; ++i) chic.push_back(A[i].compose(rho.h.components()).conj());
  JetMap<K> chi(n, N, chic);
  if (F::exact ? F::is_zero(determinant(chi.linear_part())) : std::abs(F::to_c(determinant(chi.linear_part()))) < 1e-12)
    throw Error("realize_manifold: linear invariants of tau_1 and tau_2 intersect nontrivially");
  JetMap<K> psi = invert(chi);
  Realization<K> out;
  out.chi = chi;
  out.psi = psi;
  out.phi = phi;
  ManifoldSpec<K>& m = out.spec;
  m.p = p;
  m.N = N;
  m.components = components;
  SquareForm<K> sf{Matrix<K>(p, p), {}};
  for (int j = 0; j < p; ++j) {
    S root = Bf[j].compose(psi.components());
    S rest = root;
    for (int k = 0; k < p; ++k) {
      Multiindex w = Multiindex::unit(n, p + k);
      sf.B(j, k) = root.coeff(w);
      rest.set(w, F::zero());
    }
    sf.R.push_back(rest);
  }
  m.square = sf;
  square_to_E(m);
  return out;
}

template <class K>
ManifoldSpec<K> realize_manifold(const std::vector<JetMap<K>>& gens, const AntiJetMap<K>& rho,
                                 const std::vector<Component<K>>& components = {}) {
  return realize_manifold_full(gens, rho, components).spec;
}

}  // namespace crsing
