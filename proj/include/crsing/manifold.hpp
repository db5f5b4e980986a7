#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "jet.hpp"

namespace crsing {

enum class Kind { elliptic, hyperbolic, complex };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::elliptic: return "elliptic";
    case Kind::hyperbolic: return "hyperbolic";
    default: return "complex";
  }
}

// Declared rotation number theta/pi of lambda_h = e^{i theta}.
struct Rotation {
  bool irrational = false;
  long num = 0, den = 1;
};

template <class K>
struct Component {
  Kind kind = Kind::elliptic;
  K gamma{};
  bool infinite = false;            // gamma_h = infinity
  std::optional<Rotation> rotation;  // hyperbolic only
  bool bishop = false;              // z w + gamma (z^2 + w^2) instead of the square form
  int slots() const { return kind == Kind::complex ? 2 : 1; }
};

template <class K>
struct SquareForm {
  Matrix<K> B;                 // p x p, coefficient of w
  std::vector<Series<K>> R;    // remainder R_j(z, w), includes the z-linear part
};

// z_{p+j} = E_j(z', w'), variables ordered (z_1..z_p, w_1..w_p).
template <class K>
struct ManifoldSpec {
  int p = 0;
  int N = 8;
  std::vector<Component<K>> components;
  std::vector<Series<K>> E;  // stored to degree N+1
  std::optional<SquareForm<K>> square;
  std::vector<std::optional<Series<K>>> roots;  // E_j = roots[j]^2 where known

  int nvars() const { return 2 * p; }
};

template <class K>
struct Slot {
  Kind kind;
  int component;
  int partner;  // complex: the other slot of the pair; otherwise itself
  bool first;   // complex: true for s, false for s'
};

template <class K>
std::vector<Slot<K>> slot_layout(const std::vector<Component<K>>& comps) {
  std::vector<Slot<K>> out;
  for (int c = 0; c < int(comps.size()); ++c) {
    int j = int(out.size());
    if (comps[c].kind == Kind::complex) {
      out.push_back({Kind::complex, c, j + 1, true});
      out.push_back({Kind::complex, c, j, false});
    } else {
      out.push_back({comps[c].kind, c, j, true});
    }
  }
  return out;
}

template <class K>
bool is_parabolic(const Component<K>& c) {
  using F = Field<K>;
  return c.kind != Kind::complex && !c.infinite && F::near(c.gamma, F::from_ratio(1, 2), 1e-14);
}

template <class K>
void validate_component(const Component<K>& c, bool allow_parabolic = false) {
  cplx g = Field<K>::to_c(c.gamma);
  const double t = 1e-15;
  if (c.kind == Kind::complex) {
    if (c.infinite) throw Error("complex component cannot have infinite gamma");
    if (g.real() > 0.5 + t || g.imag() < -t || std::abs(g) < t || std::abs(g - 0.5) < t)
      throw Error("complex gamma out of range (Re <= 1/2, Im >= 0, not 0 or 1/2)");
    return;
  }
  if (std::abs(g.imag()) > t) throw Error("Bishop invariant must be real");
  if (c.infinite) {
    if (c.kind != Kind::hyperbolic) throw Error("gamma = infinity is hyperbolic");
    return;
  }
  if (allow_parabolic && is_parabolic(c)) return;
  if (c.kind == Kind::elliptic && !(g.real() > t && g.real() < 0.5 - t))
    throw Error("elliptic gamma out of range (0, 1/2)");
  if (c.kind == Kind::hyperbolic && !(g.real() > 0.5 + t)) throw Error("hyperbolic gamma out of range (1/2, inf]");
}

// Rebuild E from the square form when present.
template <class K>
void square_to_E(ManifoldSpec<K>& s) {
  if (!s.square) return;
  int p = s.p, n = 2 * p;
  s.E.clear();
  s.roots.clear();
  for (int j = 0; j < p; ++j) {
    Series<K> L = s.square->R[j].with_order(s.N + 1);
    for (int k = 0; k < p; ++k) L += Series<K>::variable(n, s.N + 1, p + k, s.square->B(j, k));
    s.E.push_back(L * L);
    s.roots.push_back(L);
  }
}

template <class K>
ManifoldSpec<K> build_product_quadric(const std::vector<Component<K>>& comps, int N = 8,
                                      bool allow_parabolic = false) {
  using F = Field<K>;
  using S = Series<K>;
  if (comps.empty()) throw Error("build_product_quadric: empty component list");
  for (auto& c : comps) validate_component(c, allow_parabolic);
  auto slots = slot_layout(comps);
  ManifoldSpec<K> m;
  m.p = int(slots.size());
  m.N = N;
  m.components = comps;
  int p = m.p, n = 2 * p;
  bool square = true;
  int NE = N + 1;  // E carries one extra degree so deck maps are determined through degree N
  SquareForm<K> sf{Matrix<K>(p, p), std::vector<S>(p, S(n, NE))};
  m.E.assign(p, S(n, NE));
  m.roots.assign(p, std::nullopt);
  K two = F::from_int(2);
  for (int j = 0; j < p; ++j) {
    const auto& c = comps[slots[j].component];
    S z = S::variable(n, NE, j), w = S::variable(n, NE, p + j);
    if (c.kind == Kind::complex) {
      int other = slots[j].partner;
      S wo = S::variable(n, NE, p + other);
      K coef = slots[j].first ? two * c.gamma : two * (F::one() - F::conj(c.gamma));
      sf.B(j, other) = coef;
      sf.R[j] = z;
      S L = z + wo.scaled(coef);
      m.E[j] = L * L;
      m.roots[j] = L;
      continue;
    }
    if (c.infinite) {
      square = false;
      m.E[j] = z * z + w * w;
    } else if (c.bishop) {
      square = false;
      m.E[j] = z * w + (z * z + w * w).scaled(c.gamma);
    } else {
      sf.B(j, j) = two * c.gamma;
      sf.R[j] = z;
      S L = z + w.scaled(two * c.gamma);
      m.E[j] = L * L;
      m.roots[j] = L;
    }
  }
  if (square) m.square = sf;
  return m;
}

// A perturbation term c z^a w^b added to E_j (outside) or inside the square root of E_j.
template <class K>
struct PerturbationTerm {
  int target = 0;  // 0-based slot
  std::vector<int> z_exp, w_exp;
  K coeff{};
  bool inside = false;
};

template <class K>
void apply_perturbation(ManifoldSpec<K>& m, const std::vector<PerturbationTerm<K>>& terms) {
  int p = m.p, n = 2 * p;
  bool outside = false;
  for (auto& t : terms) {
    if (t.target < 0 || t.target >= p) throw Error("perturbation target out of range");
    if (int(t.z_exp.size()) != p || int(t.w_exp.size()) != p) throw Error("perturbation exponent length must be p");
    Multiindex mi(n);
    for (int i = 0; i < p; ++i) {
      mi.set(i, t.z_exp[i]);
      mi.set(p + i, t.w_exp[i]);
    }
    if (t.inside) {
      if (mi.degree() < 2) throw Error("inside perturbation must have degree >= 2");
      if (int(m.roots.size()) != p || !m.roots[t.target])
        throw Error("inside perturbation targets an equation that is not a square");
      m.roots[t.target]->add(mi, t.coeff);
      if (m.square) m.square->R[t.target].add(mi, t.coeff);
    } else {
      if (mi.degree() < 2) throw Error("perturbation must have degree >= 2");
      outside = true;
    }
  }
  for (int j = 0; j < int(m.roots.size()); ++j)
    if (m.roots[j]) m.E[j] = *m.roots[j] * *m.roots[j];
  for (auto& t : terms) {
    if (t.inside) continue;
    Multiindex mi(n);
    for (int i = 0; i < p; ++i) {
      mi.set(i, t.z_exp[i]);
      mi.set(p + i, t.w_exp[i]);
    }
    m.E[t.target].add(mi, t.coeff);
    if (int(m.roots.size()) == p) m.roots[t.target].reset();
  }
  if (outside) m.square.reset();
}

// ---- quadratic part and linear deck seeds ------------------------------------

template <class K>
struct LinearSeeds {
  std::vector<int> reflected;            // coordinate index (0-based, among w) per generator
  std::vector<Matrix<K>> generators;     // 2p x 2p
};

// Generators of the linear deck group of the quadratic part.
template <class K>
LinearSeeds<K> linear_seeds(const ManifoldSpec<K>& m) {
  using F = Field<K>;
  int p = m.p, n = 2 * p;
  LinearSeeds<K> out;
  if (m.square) {
    const auto& B = m.square->B;
    Matrix<K> Bi;
    try {
      Bi = inverse(B);
    } catch (const Error&) {
      throw Error("square form: singular B");
    }
    // z-linear part of R
    Matrix<K> C(p, p);
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < p; ++k) C(j, k) = m.square->R[j].coeff(Multiindex::unit(n, k));
    for (int j = 0; j < p; ++j) {
      // w~ = B^{-1} E_j B w + B^{-1}(E_j - I) C z with E_j flipping row j
      Matrix<K> Ej = Matrix<K>::identity(p);
      Ej(j, j) = -F::one();
      Matrix<K> Aw = Bi * Ej * B;
      Matrix<K> Az = Bi * (Ej - Matrix<K>::identity(p)) * C;
      Matrix<K> T = Matrix<K>::identity(n);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
          T(p + a, b) = Az(a, b);
          T(p + a, p + b) = Aw(a, b);
        }
      // reflected direction: w-coordinate with the largest change (for ordering)
      int l = 0;
      for (int a = 0; a < p; ++a)
        if (!F::is_zero(Aw(a, a) - F::one())) {
          l = a;
          break;
        }
      out.reflected.push_back(l);
      out.generators.push_back(T);
    }
    // order by reflected coordinate index
    std::vector<int> idx(p);
    for (int i = 0; i < p; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return out.reflected[a] < out.reflected[b]; });
    LinearSeeds<K> sorted;
    for (int i : idx) {
      sorted.reflected.push_back(out.reflected[i]);
      sorted.generators.push_back(out.generators[i]);
    }
    return sorted;
  }
  // product form: each equation i has quadratic w-part beta w_l^2 and mixed part w_l * sum alpha_t z_t
  std::vector<int> used(p, -1);
  struct Ref {
    int l;
    std::vector<K> alpha;
    K beta;
  };
  std::vector<Ref> refs;
  for (int i = 0; i < p; ++i) {
    Series<K> q2 = m.E[i].homogeneous(2);
    int l = -1;
    K beta = F::zero();
    std::vector<K> alpha(p, F::zero());
    for (auto& [mi, v] : q2) {
      int zdeg = 0, wdeg = 0;
      for (int a = 0; a < p; ++a) zdeg += mi[a], wdeg += mi[p + a];
      if (wdeg == 2) {
        int ll = -1;
        for (int a = 0; a < p; ++a)
          if (mi[p + a] == 2) ll = a;
        if (ll < 0 || (l >= 0 && ll != l)) throw Error("quadratic part is not in a recognized product form");
        l = ll;
        beta = v;
      }
    }
    if (l < 0) throw Error("quadratic part is not in a recognized product form (no pure w^2 term)");
    for (auto& [mi, v] : q2) {
      int zdeg = 0, wdeg = 0;
      for (int a = 0; a < p; ++a) zdeg += mi[a], wdeg += mi[p + a];
      if (wdeg == 1) {
        if (mi[p + l] != 1) throw Error("quadratic part is not in a recognized product form (mixed term)");
        for (int a = 0; a < p; ++a)
          if (mi[a]) alpha[a] = v;
      }
    }
    if (used[l] >= 0) throw Error("quadratic part is not in a recognized product form (shared direction)");
    used[l] = i;
    refs.push_back({l, alpha, beta});
  }
  // w_l must not appear in the quadratic part of other equations
  for (int i = 0; i < p; ++i)
    for (auto& [mi, v] : m.E[i].homogeneous(2))
      for (int a = 0; a < p; ++a)
        if (mi[p + a] && a != refs[i].l) throw Error("quadratic part is not in a recognized product form (coupling)");
  std::vector<int> order(p);
  for (int i = 0; i < p; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return refs[a].l < refs[b].l; });
  for (int i : order) {
    const auto& r = refs[i];
    Matrix<K> T = Matrix<K>::identity(n);
    T(p + r.l, p + r.l) = -F::one();
    K ib = F::one() / r.beta;
    for (int a = 0; a < p; ++a) T(p + r.l, a) = -(r.alpha[a] * ib);
    out.reflected.push_back(r.l);
    out.generators.push_back(T);
  }
  return out;
}

// Holomorphic part of rho(z, w) = (conj w, conj z).
template <class K>
Matrix<K> standard_rho_matrix(int p) {
  Matrix<K> P(2 * p, 2 * p);
  for (int i = 0; i < p; ++i) {
    P(i, p + i) = Field<K>::one();
    P(p + i, i) = Field<K>::one();
  }
  return P;
}

// Partner: the unique tau_{2k} not commuting with tau_{1j}.
template <class K>
std::vector<int> partners(const std::vector<Matrix<K>>& T1, const std::vector<Matrix<K>>& T2,
                          bool* unique = nullptr) {
  int p = int(T1.size());
  std::vector<int> out(p, -1);
  if (unique) *unique = true;
  for (int j = 0; j < p; ++j) {
    int found = -1, count = 0;
    for (int k = 0; k < p; ++k) {
      Matrix<K> c = T1[j] * T2[k] - T2[k] * T1[j];
      bool commute = Field<K>::exact ? c.is_zero() : c.max_abs() < 1e-9;
      if (!commute) {
        found = k;
        ++count;
      }
    }
    if (count != 1) {
      if (!unique) throw Error("partner involution is not unique");
      *unique = false;
      found = j;
    }
    out[j] = found;
  }
  return out;
}

template <class K>
struct SlotSpectrum {
  Kind kind;
  bool parabolic = false;
  K gamma{};
  bool infinite = false;
  std::optional<K> lambda, mu;  // exact/float values when representable
  cplx lambda_c, mu_c;
  std::optional<Rotation> rotation;
  bool root_of_unity = false;
  bool normalized = true;
};

template <class K>
struct SpectrumReport {
  int p = 0;
  std::vector<SlotSpectrum<K>> slots;
  bool conditionB = false;
  std::string conditionB_method;
  bool conditionJ = false;
  bool distinct = false;
  bool nonresonant = false;
  std::vector<std::string> notes;
};

template <class K>
struct ConditionB {
  bool holds = false;
  std::string method;
  unsigned seed = 0;
};

template <class K>
std::vector<Series<K>> quadratic_q(const ManifoldSpec<K>& m) {
  int p = m.p;
  std::vector<Series<K>> q;
  for (int i = 0; i < p; ++i) {
    Series<K> s(p, 2);
    for (auto& [mi, v] : m.E[i].homogeneous(2)) {
      bool wonly = true;
      for (int a = 0; a < p; ++a)
        if (mi[a]) wonly = false;
      if (!wonly) continue;
      Multiindex w(p);
      for (int a = 0; a < p; ++a) w.set(a, mi[p + a]);
      s.set(w, v);
    }
    q.push_back(s);
  }
  return q;
}

template <class K>
ConditionB<K> check_condition_B_q(const std::vector<Series<K>>& q, int lines = 20, unsigned seed = 12345) {
  using F = Field<K>;
  int p = int(q.size());
  ConditionB<K> res;
  if (p == 1) {
    res.method = "exact";
    res.holds = !F::is_zero(q[0].coeff(Multiindex{2}));
    return res;
  }
  if (p == 2) {
    res.method = "exact-resultant";
    auto c = [&](int i, int a, int b) { return q[i].coeff(Multiindex{a, b}); };
    K a1 = c(0, 2, 0), b1 = c(0, 1, 1), c1 = c(0, 0, 2);
    K a2 = c(1, 2, 0), b2 = c(1, 1, 1), c2 = c(1, 0, 2);
    K r = (a1 * c2 - a2 * c1) * (a1 * c2 - a2 * c1) - (a1 * b2 - a2 * b1) * (b1 * c2 - b2 * c1);
    res.holds = !F::is_zero(r);
    return res;
  }
  // each q_i = beta w_{pi(i)}^2 with pi a permutation: exact
  std::vector<int> hit(p, 0);
  bool mono = true;
  for (int i = 0; i < p && mono; ++i) {
    if (q[i].size() != 1) {
      mono = false;
      break;
    }
    const auto& mi = q[i].begin()->first;
    int l = -1;
    for (int a = 0; a < p; ++a)
      if (mi[a] == 2) l = a;
    if (l < 0 || hit[l]) mono = false;
    else hit[l] = 1;
  }
  if (mono) {
    res.method = "exact-monomial";
    res.holds = true;
    return res;
  }
  res.method = "probabilistic";
  res.seed = seed;
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  res.holds = true;
  for (int t = 0; t < lines; ++t) {
    std::vector<cplx> v(p);
    for (auto& x : v) x = {nd(rng), nd(rng)};
    double mx = 0;
    for (int i = 0; i < p; ++i) {
      cplx s = 0;
      for (auto& [mi, c] : q[i]) {
        cplx term = F::to_c(c);
        for (int a = 0; a < p; ++a) term *= std::pow(v[a], mi[a]);
        s += term;
      }
      mx = std::max(mx, std::abs(s));
    }
    if (mx < 1e-12) res.holds = false;
  }
  return res;
}

template <class K>
ConditionB<K> check_condition_B(const ManifoldSpec<K>& m, int lines = 20, unsigned seed = 12345) {
  return check_condition_B_q(quadratic_q(m), lines, seed);
}

// lambda from gamma: gamma lambda^2 - lambda + gamma = 0, root > 1 (elliptic) or with Im > 0 (hyperbolic).
template <class K>
SlotSpectrum<K> slot_spectrum(const Component<K>& c, bool first) {
  using F = Field<K>;
  SlotSpectrum<K> s;
  s.kind = c.kind;
  s.gamma = c.gamma;
  s.infinite = c.infinite;
  s.rotation = c.rotation;
  if (c.kind == Kind::complex) {
    K mu = F::one() / F::conj(c.gamma) - F::one();
    if (!first) mu = F::one() / F::conj(mu);
    s.mu = mu;
    auto lam = F::sqrt(mu);
    if constexpr (F::exact) {
      if (!lam) throw Error("complex lambda not representable in the exact backend; use the float backend");
    }
    K l = *lam;
    cplx lc = F::to_c(l);
    if (first && std::abs(lc) < 1) l = -l;
    if (!first) {
      // lambda_{s'} = 1 / conj(lambda_s) with lambda_s the principal root of mu_s
      K mus = F::one() / F::conj(mu);
      K ls = field_sqrt(mus);
      l = F::one() / F::conj(ls);
    }
    s.lambda = l;
    s.lambda_c = F::to_c(l);
    s.mu_c = F::to_c(mu);
    double am = std::abs(F::to_c(first ? mu : F::one() / F::conj(mu)));
    s.normalized = am > 1 + 1e-14 && std::abs(F::to_c(first ? l : F::one() / F::conj(l)) - cplx(0, 1)) > 1e-14;
    return s;
  }
  if (c.infinite) {
    s.lambda = F::i();
    s.mu = -F::one();
    s.lambda_c = {0, 1};
    s.mu_c = -1;
    s.root_of_unity = true;
    return s;
  }
  if (is_parabolic(c)) {
    s.parabolic = true;
    s.lambda = F::one();
    s.mu = F::one();
    s.lambda_c = s.mu_c = 1;
    s.normalized = false;
    return s;
  }
  K disc = F::one() - F::from_int(4) * c.gamma * c.gamma;
  K r = field_sqrt(disc);  // real for elliptic, i*real for hyperbolic
  K l = (F::one() + r) / (F::from_int(2) * c.gamma);
  cplx lc = F::to_c(l);
  if (c.kind == Kind::elliptic && lc.real() < 1) l = (F::one() - r) / (F::from_int(2) * c.gamma);
  if (c.kind == Kind::hyperbolic && lc.imag() < 0) l = (F::one() - r) / (F::from_int(2) * c.gamma);
  s.lambda = l;
  s.mu = l * l;
  s.lambda_c = F::to_c(l);
  s.mu_c = F::to_c(*s.mu);
  if (c.kind == Kind::hyperbolic) {
    if (c.rotation && !c.rotation->irrational) {
      double th = M_PI * double(c.rotation->num) / double(c.rotation->den);
      if (std::abs(std::arg(s.lambda_c) - th) > 1e-9 && std::abs(std::arg(s.lambda_c) + th) > 1e-9)
        throw Error("declared rotation number inconsistent with gamma");
      s.root_of_unity = true;
    } else if (!c.rotation && F::exact) {
      K pw = *s.mu;
      for (int k = 1; k <= 24; ++k) {
        if (pw == F::one()) s.root_of_unity = true;
        pw = pw * *s.mu;
      }
    }
  }
  return s;
}

template <class K>
Matrix<K> linear_sigma(const ManifoldSpec<K>& m, std::vector<int>* part = nullptr) {
  auto seeds = linear_seeds(m);
  int p = m.p;
  Matrix<K> P = standard_rho_matrix<K>(p);
  std::vector<Matrix<K>> T2;
  for (auto& T : seeds.generators) T2.push_back(P * T.conj() * P);
  Matrix<K> t1 = Matrix<K>::identity(2 * p), t2 = t1;
  for (auto& T : seeds.generators) t1 = t1 * T;
  for (auto& T : T2) t2 = t2 * T;
  if (part) *part = partners(seeds.generators, T2);
  return t1 * t2;
}

template <class K>
SpectrumReport<K> classify(const ManifoldSpec<K>& m) {
  using F = Field<K>;
  SpectrumReport<K> rep;
  rep.p = m.p;
  auto slots = slot_layout(m.components);
  if (int(slots.size()) != m.p) throw Error("classify: components do not cover p slots");
  for (auto& sl : slots) rep.slots.push_back(slot_spectrum(m.components[sl.component], sl.first));
  auto cb = check_condition_B(m);
  rep.conditionB = cb.holds;
  rep.conditionB_method = cb.method;
  // distinct eigenvalues mu_j^{+-1}
  std::vector<cplx> ev;
  for (auto& s : rep.slots) {
    ev.push_back(s.mu_c);
    ev.push_back(1.0 / s.mu_c);
  }
  rep.distinct = true;
  for (std::size_t a = 0; a < ev.size(); ++a)
    for (std::size_t b = a + 1; b < ev.size(); ++b)
      if (std::abs(ev[a] - ev[b]) < 1e-12) rep.distinct = false;
  // condition J: product over distinct eigenvalues of (sigma - mu) vanishes
  bool parabolic = false;
  for (auto& s : rep.slots) parabolic |= s.parabolic;
  try {
    Matrix<K> sig = linear_sigma(m);
    int n = 2 * m.p;
    std::vector<K> vals;
    for (auto& s : rep.slots) {
      for (K v : {*s.mu, F::one() / *s.mu}) {
        bool dup = false;
        for (auto& u : vals) dup |= F::near(u, v, 1e-12);
        if (!dup) vals.push_back(v);
      }
    }
    Matrix<K> prod = Matrix<K>::identity(n);
    for (auto& v : vals) prod = prod * (sig - Matrix<K>::identity(n).scaled(v));
    rep.conditionJ = F::exact ? prod.is_zero() : prod.max_abs() < 1e-8;
  } catch (const Error& e) {
    rep.conditionJ = false;
    rep.notes.push_back(std::string("condition J undecided: ") + e.what());
  }
  if (parabolic) {
    rep.conditionJ = false;
    rep.notes.push_back("parabolic component (gamma = 1/2): sigma'(0) is not diagonalizable");
  }
  // non-resonance: no mu_j root of unity and no relation mu^K = 1 with 0 < |K| <= N
  rep.nonresonant = true;
  for (auto& s : rep.slots)
    if (s.root_of_unity || s.parabolic) rep.nonresonant = false;
  for (auto& s : rep.slots)
    if (!s.normalized) rep.notes.push_back("slot not in normalized range");
  return rep;
}

// ---- quad_transform and C(z', w') -------------------------------------------

template <class K>
std::pair<std::vector<Series<K>>, std::vector<Series<K>>> quad_transform(const std::vector<Series<K>>& h,
                                                                         const std::vector<Series<K>>& q,
                                                                         const Matrix<K>& A, const Matrix<K>& U) {
  int p = A.rows(), n = 2 * p;
  Matrix<K> Ui = inverse(U);
  (void)inverse(A);
  int N = h.empty() ? 2 : h[0].order();
  // (z, w) -> (A z, conj(A) w)
  std::vector<Series<K>> sub;
  Matrix<K> Ab = A.conj();
  for (int i = 0; i < p; ++i) {
    Series<K> s(n, N);
    for (int j = 0; j < p; ++j) s.set(Multiindex::unit(n, j), A(i, j));
    sub.push_back(s);
  }
  for (int i = 0; i < p; ++i) {
    Series<K> s(n, N);
    for (int j = 0; j < p; ++j) s.set(Multiindex::unit(n, p + j), Ab(i, j));
    sub.push_back(s);
  }
  auto tr = [&](const std::vector<Series<K>>& v) {
    std::vector<Series<K>> c;
    for (auto& s : v) c.push_back(s.compose(sub));
    std::vector<Series<K>> out;
    for (int i = 0; i < p; ++i) {
      Series<K> r(n, N);
      for (int j = 0; j < p; ++j) r += c[j].scaled(Ui(i, j));
      out.push_back(r);
    }
    return out;
  };
  return {tr(h), tr(q)};
}

// Split the quadratic part of E into h (mixed and z-only) and q (w-only), both in 2p variables.
template <class K>
std::pair<std::vector<Series<K>>, std::vector<Series<K>>> split_quadratic(const ManifoldSpec<K>& m) {
  int p = m.p;
  std::vector<Series<K>> h, q;
  for (int i = 0; i < p; ++i) {
    Series<K> hs(2 * p, 2), qs(2 * p, 2);
    for (auto& [mi, v] : m.E[i].homogeneous(2)) {
      bool wonly = true;
      for (int a = 0; a < p; ++a)
        if (mi[a]) wonly = false;
      (wonly ? qs : hs).set(mi, v);
    }
    h.push_back(hs);
    q.push_back(qs);
  }
  return {h, q};
}

template <class K>
Series<K> series_det(std::vector<std::vector<Series<K>>> M) {
  int n = int(M.size());
  if (n == 1) return M[0][0];
  Series<K> r(M[0][0].nvars(), M[0][0].order());
  for (int c = 0; c < n; ++c) {
    std::vector<std::vector<Series<K>>> minor;
    for (int i = 1; i < n; ++i) {
      std::vector<Series<K>> row;
      for (int j = 0; j < n; ++j)
        if (j != c) row.push_back(M[i][j]);
      minor.push_back(row);
    }
    Series<K> t = M[0][c] * series_det(minor);
    if (c % 2) r -= t;
    else r += t;
  }
  return r;
}

template <class K>
Series<K> cr_det(const ManifoldSpec<K>& m) {
  int p = m.p;
  std::vector<std::vector<Series<K>>> J(p, std::vector<Series<K>>(p));
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) J[i][j] = m.E[i].derivative(p + j);
  return series_det(J);
}

}  // namespace crsing
