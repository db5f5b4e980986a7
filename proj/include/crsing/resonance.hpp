#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "manifold.hpp"

namespace crsing {

enum class Decision { exact, rotation, tolerance };

inline const char* decision_name(Decision d) {
  switch (d) {
    case Decision::exact: return "exact";
    case Decision::rotation: return "rotation";
    default: return "tolerance";
  }
}

struct IndexPair {
  std::vector<int> P, Q;
  int j = 0;
  int degree() const {
    return std::accumulate(P.begin(), P.end(), 0) + std::accumulate(Q.begin(), Q.end(), 0);
  }
  friend bool operator==(const IndexPair& a, const IndexPair& b) { return a.P == b.P && a.Q == b.Q && a.j == b.j; }
};

// Resonance bookkeeping for the linear family S_j, T_{ij}, rho in normal coordinates.
template <class K>
struct IndexAlgebra {
  using F = Field<K>;
  int p = 0;
  std::vector<Kind> kind;
  std::vector<int> partner;
  std::vector<K> lambda, mu;
  std::vector<std::optional<Rotation>> rotation;
  double eps = 1e-9;
  // cached: order[i] = least m with lambda_i^m = +-1 (0 if none), order_sign[i] = lambda_i^m
  std::vector<long> order;
  std::vector<int> order_sign;

  static IndexAlgebra from_components(const std::vector<Component<K>>& comps, double eps_res = 1e-9) {
    IndexAlgebra a;
    auto slots = slot_layout(comps);
    a.p = int(slots.size());
    a.eps = eps_res;
    for (auto& s : slots) {
      auto sp = slot_spectrum(comps[s.component], s.first);
      if (sp.parabolic) throw Error("index algebra: parabolic component");
      a.kind.push_back(s.kind);
      a.partner.push_back(s.partner);
      a.lambda.push_back(*sp.lambda);
      a.mu.push_back(*sp.mu);
      a.rotation.push_back(sp.rotation);
    }
    a.finalize();
    return a;
  }

  void finalize() {
    order.assign(p, 0);
    order_sign.assign(p, 1);
    if constexpr (F::exact) {
      for (int i = 0; i < p; ++i) {
        const K& l = lambda[i];
        if (!(l * F::conj(l) == F::one())) continue;
        // roots of unity in Q(i)(sqrt d) have order dividing 24
        K pw = F::one();
        for (long m = 1; m <= 24; ++m) {
          pw = pw * l;
          if (pw == F::one() || pw == -F::one()) {
            order[i] = m;
            order_sign[i] = pw == F::one() ? 1 : -1;
            break;
          }
        }
      }
    }
  }

  Decision mode(int i) const {
    if (rotation[i] && hyperbolic(i)) return Decision::rotation;
    return F::exact ? Decision::exact : Decision::tolerance;
  }

  bool hyperbolic(int i) const { return kind[i] == Kind::hyperbolic; }

  // +1 if lambda_i^k = 1, -1 if lambda_i^k = -1, 0 otherwise.
  int lambda_power_sign(int i, long k) const {
    if (k < 0) k = -k;
    if (k == 0) return 1;
    if (rotation[i] && hyperbolic(i)) {
      if (rotation[i]->irrational) return 0;
      long num = rotation[i]->num, den = rotation[i]->den;
      long t = k * num;
      if (t % den != 0) return 0;
      return ((t / den) % 2 == 0) ? 1 : -1;
    }
    if constexpr (F::exact) {
      if (int(order.size()) != p) throw Error("index algebra not finalized");
      long m = order[i];
      if (m == 0 || k % m != 0) return 0;
      return ((k / m) % 2 == 0 || order_sign[i] == 1) ? 1 : -1;
    } else {
      double r = std::abs(lambda[i]);
      if (std::abs(r - 1) > eps) return 0;
      cplx v = std::pow(lambda[i], double(k));
      double hit = 1e-12 * double(std::max<long>(1, k));
      if (std::abs(v - 1.0) < hit) return 1;
      if (std::abs(v + 1.0) < hit) return -1;
      if (std::min(std::abs(v - 1.0), std::abs(v + 1.0)) > eps) return 0;
      throw Error("UndecidableResonance: |lambda^k -+ 1| within tolerance band; declare a rotation number");
    }
  }

  bool mu_power_is_one(int i, long k) const { return lambda_power_sign(i, k) != 0; }

  void check(const IndexPair& pq) const {
    if (int(pq.P.size()) != p || int(pq.Q.size()) != p || pq.j < 0 || pq.j >= p)
      throw Error("index pair has wrong length");
  }
};

template <class K>
bool in_Rj(const IndexAlgebra<K>& a, const IndexPair& pq) {
  a.check(pq);
  if (pq.degree() < 2) return false;
  for (int i = 0; i < a.p; ++i) {
    long k = pq.P[i] - pq.Q[i] - (i == pq.j ? 1 : 0);
    if (!a.mu_power_is_one(i, k)) return false;
  }
  // consequences of the resonance conditions
  for (int i = 0; i < a.p; ++i) {
    if (a.hyperbolic(i)) continue;
    int want = i == pq.j ? pq.Q[i] + 1 : pq.Q[i];
    if (pq.P[i] != want) throw Error("in_Rj: resonance consequence violated (mu_s root of unity?)");
  }
  return true;
}

template <class K>
bool in_Nj(const IndexAlgebra<K>& a, const IndexPair& pq) {
  if (!in_Rj(a, pq)) return false;
  for (int i = 0; i < a.p; ++i)
    if (i != pq.j && pq.P[i] < pq.Q[i]) return false;
  return true;
}

struct NuValues {
  int nu = 1, nu_plus = 1;
};

template <class K>
NuValues nu_values(const IndexAlgebra<K>& a, const IndexPair& pq) {
  if (!in_Rj(a, pq)) throw Error("nu_values: pair outside R_j");
  NuValues v;
  int j = pq.j;
  for (int h = 0; h < a.p; ++h) {
    if (!a.hyperbolic(h)) continue;
    long e = pq.Q[h] - pq.P[h];
    if (h == j) {
      v.nu *= a.lambda_power_sign(h, pq.P[h] - pq.Q[h] - 1);
      continue;
    }
    int s = a.lambda_power_sign(h, e);
    v.nu *= s;
    if (pq.Q[h] > pq.P[h]) v.nu_plus *= s;
  }
  if (a.p == 1) v.nu_plus = 1;
  if (v.nu == 0 || v.nu_plus == 0) throw Error("nu_values: power is not +-1");
  return v;
}

struct IndexMaps {
  IndexPair rho, rho_e, AB;
  std::vector<int> rho_a, rho_b;
};

// rho(PQ) = (rho_a, rho_b), rho_e(PQ) = (rho_b, rho_a) and the projection (A_j, B_j).
template <class K>
IndexMaps index_maps(const IndexAlgebra<K>& a, const IndexPair& pq) {
  a.check(pq);
  IndexMaps m;
  int p = a.p;
  m.rho_a.resize(p);
  m.rho_b.resize(p);
  for (int k = 0; k < p; ++k) {
    switch (a.kind[k]) {
      case Kind::elliptic:
        m.rho_a[k] = pq.Q[k];
        m.rho_b[k] = pq.P[k];
        break;
      case Kind::hyperbolic:
        m.rho_a[k] = pq.P[k];
        m.rho_b[k] = pq.Q[k];
        break;
      case Kind::complex:
        m.rho_a[k] = pq.P[a.partner[k]];
        m.rho_b[k] = pq.Q[a.partner[k]];
        break;
    }
  }
  int jr = a.kind[pq.j] == Kind::complex ? a.partner[pq.j] : pq.j;
  m.rho = {m.rho_a, m.rho_b, jr};
  m.rho_e = {m.rho_b, m.rho_a, pq.j};
  m.AB = pq;
  for (int k = 0; k < p; ++k) {
    if (k == pq.j) continue;
    m.AB.P[k] = std::max(pq.P[k], pq.Q[k]);
    m.AB.Q[k] = std::min(pq.P[k], pq.Q[k]);
  }
  return m;
}

template <class K>
IndexPair ab_map(const IndexAlgebra<K>& a, const IndexPair& pq) {
  return index_maps(a, pq).AB;
}

// iota_e = (A_e, B_e) o rho_e
template <class K>
IndexPair iota_e(const IndexAlgebra<K>& a, const IndexPair& pq) {
  return ab_map(a, index_maps(a, pq).rho_e);
}

// ---- Poincare type ----------------------------------------------------------

struct PoincareWitness {
  int j = 0;
  std::vector<int> Q, Qp;
  int i = 0;
  double lhs = 0, rhs = 0;  // max(|mu_i^Q'|, |mu_i^-Q'|) and c^{-1} d^{|Q'|}
};

struct PoincareConstants {
  double d = 1, c = 1;
};

namespace detail {

// family S_i on (xi, eta): mu_{i,i} = mu_i, mu_{i,i+p} = mu_i^{-1}, else 1.
// mu_i^Q - mu_{ij} vanishes iff mu_i^{q_i - q_{i+p} - e} = 1.
inline long divisor_exponent(int p, int i, int j, const std::vector<int>& Q) {
  long e = j == i ? 1 : (j == i + p ? -1 : 0);
  return long(Q[i]) - long(Q[i + p]) - e;
}

inline std::vector<int> cancel_pairs(int p, const std::vector<int>& Q) {
  std::vector<int> r = Q;
  for (int i = 0; i < p; ++i) {
    int m = std::min(r[i], r[i + p]);
    r[i] -= m;
    r[i + p] -= m;
  }
  return r;
}

template <class K>
double mod_power(const IndexAlgebra<K>& a, int i, const std::vector<int>& Q) {
  double r = Field<K>::abs(a.mu[i]);
  double v = std::pow(r, double(Q[i]) - double(Q[i + a.p]));
  return std::max(v, 1.0 / v);
}

template <class K>
int choose_index(const IndexAlgebra<K>& a, int j, const std::vector<int>& Qp) {
  int p = a.p, deg = 0;
  for (int v : Qp) deg += v;
  int best = -1, bw = -1;
  for (int i = 0; i < p; ++i) {
    int w = Qp[i] + Qp[i + p];
    bool nz = !a.mu_power_is_one(i, divisor_exponent(p, i, j, Qp));
    if (deg <= 2 * p && !nz) continue;
    if (w > bw) {
      bw = w;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

template <class K>
PoincareConstants poincare_constants(const IndexAlgebra<K>& a) {
  PoincareConstants pc;
  int p = a.p;
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p; ++i) {
    double r = Field<K>::abs(a.mu[i]);
    m = std::min(m, std::max(r, 1.0 / r));
  }
  pc.d = std::pow(m, 1.0 / (2 * p));
  if (pc.d <= 1 + 1e-12) throw Error("NotPoincareType: some |mu_i| = 1");
  // c from the finitely many reduced Q' with |Q'| <= 2p, with a factor 2 margin
  double need = 1;
  for (int deg = 0; deg <= 2 * p; ++deg)
    for (auto& mi : monomials_of_degree(2 * p, deg)) {
      auto Q = mi.vec();
      bool reduced = true;
      for (int i = 0; i < p; ++i) reduced &= std::min(Q[i], Q[i + p]) == 0;
      if (!reduced) continue;
      for (int j = 0; j < 2 * p; ++j) {
        int i = detail::choose_index(a, j, Q);
        if (i < 0) continue;
        double lhs = detail::mod_power(a, i, Q);
        need = std::max(need, std::pow(pc.d, deg) / lhs);
      }
    }
  pc.c = 2 * need;
  return pc;
}

template <class K>
PoincareWitness poincare_witness(const IndexAlgebra<K>& a, int j, const std::vector<int>& Q, double d, double c) {
  int p = a.p;
  if (int(Q.size()) != 2 * p || j < 0 || j >= 2 * p) throw Error("poincare_witness: bad index");
  bool some = false;
  for (int m = 0; m < p; ++m) some |= !a.mu_power_is_one(m, detail::divisor_exponent(p, m, j, Q));
  if (!some) throw Error("poincare_witness: (j, Q) is resonant for every member");
  PoincareWitness w;
  w.j = j;
  w.Q = Q;
  w.Qp = detail::cancel_pairs(p, Q);
  w.i = detail::choose_index(a, j, w.Qp);
  int deg = 0;
  for (int v : w.Qp) deg += v;
  if (w.i < 0 || !(!a.mu_power_is_one(w.i, detail::divisor_exponent(p, w.i, j, w.Qp))))
    throw Error("NotPoincareType: no index with nonzero divisor");
  w.lhs = detail::mod_power(a, w.i, w.Qp);
  w.rhs = std::pow(d, deg) / c;
  if (!(w.lhs > w.rhs)) throw Error("NotPoincareType: witness bound fails");
  return w;
}

// ---- small divisor sequences ------------------------------------------------

struct SmallDivisorReport {
  std::string kind;
  std::vector<double> omega;           // omega[k-1] = omega(k)
  std::vector<double> brjuno_partial;  // sum_{k' <= k} -log omega(k') / 2^k'
  bool resonant = false;
  std::vector<PoincareWitness> witnesses;
  double d = 0, c = 0;
  long long evaluated = 0;
};

inline constexpr double kOmegaZero = 1e-9;
inline constexpr double kOmegaBudget = 1e7;

namespace detail {

inline double binom(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

// visit every exponent vector of total degree exactly deg in n slots
template <class Fn>
void for_each_degree(int n, int deg, std::vector<int>& e, int pos, Fn&& fn) {
  if (pos == n - 1) {
    e[pos] = deg;
    fn(e);
    e[pos] = 0;
    return;
  }
  for (int v = deg; v >= 0; --v) {
    e[pos] = v;
    for_each_degree(n, deg - v, e, pos + 1, fn);
  }
  e[pos] = 0;
}

struct LogNum {
  double logr = 0, arg = 0;
  static LogNum of(cplx z) { return {std::log(std::abs(z)), std::arg(z)}; }
};

inline cplx power_of(const std::vector<LogNum>& base, const std::vector<int>& e, bool* huge) {
  double lr = 0, th = 0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (!e[k]) continue;
    lr += e[k] * base[k].logr;
    th += e[k] * base[k].arg;
  }
  *huge = lr > 600;
  if (*huge) return 0;
  return std::polar(std::exp(lr), th);
}

inline void finish(SmallDivisorReport& r) {
  double s = 0;
  r.brjuno_partial.clear();
  for (std::size_t k = 0; k < r.omega.size(); ++k) {
    if (r.omega[k] <= 0) {
      r.resonant = true;
      s = std::numeric_limits<double>::infinity();
    } else {
      s += -std::log(r.omega[k]) / std::ldexp(1.0, int(k + 1));
    }
    r.brjuno_partial.push_back(s);
  }
}

}  // namespace detail

inline SmallDivisorReport omega_nu(const std::vector<cplx>& nu, int k_max) {
  if (k_max < 1) throw Error("omega_nu: empty range (k_max < 1)");
  int p = int(nu.size());
  if (p == 0) throw Error("omega_nu: empty nu");
  if (k_max > 30) throw BudgetExceeded("omega_nu: k_max too large");
  long top = 1L << k_max;
  double count = (detail::binom(int(top) + p, p) - 1 - p) * p;
  if (count > kOmegaBudget) throw BudgetExceeded("omega_nu: enumeration of " + std::to_string(count) + " terms exceeds budget");
  std::vector<detail::LogNum> base;
  for (auto v : nu) {
    if (std::abs(v) == 0) throw Error("omega_nu: zero entry");
    base.push_back(detail::LogNum::of(v));
  }
  SmallDivisorReport r;
  r.kind = "omega_nu";
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> e(p, 0);
  long deg = 2;
  for (int k = 1; k <= k_max; ++k) {
    for (; deg <= (1L << k); ++deg)
      detail::for_each_degree(p, int(deg), e, 0, [&](const std::vector<int>& P) {
        bool huge;
        cplx v = detail::power_of(base, P, &huge);
        if (huge) return;
        for (int i = 0; i < p; ++i) {
          ++r.evaluated;
          double d = std::min(std::abs(v - nu[i]), std::abs(v - 1.0 / nu[i]));
          if (d < kOmegaZero) d = 0;
          best = std::min(best, d);
        }
      });
    r.omega.push_back(best);
  }
  detail::finish(r);
  return r;
}

// maps[i][m] = mu_{i,m}; n = maps[i].size() is even and I = (x_m x_{m+n/2}).
inline SmallDivisorReport omega_ideal(const std::vector<std::vector<cplx>>& maps, int k_max) {
  if (k_max < 1) throw Error("omega_ideal: empty range (k_max < 1)");
  if (maps.empty()) throw Error("omega_ideal: no maps");
  int n = int(maps[0].size());
  if (n % 2) throw Error("omega_ideal: odd dimension");
  for (auto& m : maps)
    if (int(m.size()) != n) throw Error("omega_ideal: maps of different sizes");
  int p = n / 2;
  if (k_max > 30) throw BudgetExceeded("omega_ideal: k_max too large");
  long top = 1L << k_max;
  // outside I, each pair (q_m, q_{m+p}) is (a, 0) or (0, a): a signed vector in Z^p
  double signed_count = 0;
  for (int deg = 0; deg <= top; ++deg) {
    double c = 0;
    for (int s = 1; s <= std::min(p, deg); ++s) c += detail::binom(p, s) * detail::binom(deg - 1, s - 1) * std::ldexp(1.0, s);
    if (deg >= 2) signed_count += c;
  }
  if (signed_count * n > kOmegaBudget)
    throw BudgetExceeded("omega_ideal: enumeration of " + std::to_string(signed_count * n) + " terms exceeds budget");
  std::vector<std::vector<detail::LogNum>> base(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i)
    for (auto v : maps[i]) {
      if (std::abs(v) == 0) throw Error("omega_ideal: zero eigenvalue");
      base[i].push_back(detail::LogNum::of(v));
    }
  SmallDivisorReport r;
  r.kind = "omega_ideal";
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> a(p, 0), Q(n, 0);
  long deg = 2;
  for (int k = 1; k <= k_max; ++k) {
    for (; deg <= (1L << k); ++deg)
      detail::for_each_degree(p, int(deg), a, 0, [&](const std::vector<int>& A) {
        int nz = 0;
        for (int v : A) nz += v > 0;
        for (int mask = 0; mask < (1 << nz); ++mask) {
          int b = 0;
          for (int m = 0; m < p; ++m) {
            Q[m] = Q[m + p] = 0;
            if (!A[m]) continue;
            ((mask >> b++) & 1 ? Q[m + p] : Q[m]) = A[m];
          }
          std::vector<cplx> pw(maps.size());
          bool skip = false;
          for (std::size_t i = 0; i < maps.size(); ++i) {
            bool huge;
            pw[i] = detail::power_of(base[i], Q, &huge);
            skip |= huge;
          }
          if (skip) continue;
          for (int j = 0; j < n; ++j) {
            ++r.evaluated;
            double mx = 0;
            for (std::size_t i = 0; i < maps.size(); ++i) mx = std::max(mx, std::abs(pw[i] - maps[i][j]));
            if (mx < kOmegaZero) {
              r.resonant = true;
              continue;
            }
            best = std::min(best, mx);
          }
        }
      });
    r.omega.push_back(best);
  }
  bool res = r.resonant;
  detail::finish(r);
  r.resonant = res;
  return r;
}

// Linear parts S_i of the sigma family as diagonal lists on (xi, eta).
template <class K>
std::vector<std::vector<cplx>> sigma_diagonals(const IndexAlgebra<K>& a) {
  std::vector<std::vector<cplx>> out;
  for (int i = 0; i < a.p; ++i) {
    std::vector<cplx> d(2 * a.p, 1.0);
    cplx m = Field<K>::to_c(a.mu[i]);
    d[i] = m;
    d[i + a.p] = 1.0 / m;
    out.push_back(d);
  }
  return out;
}

// Witnesses for every (j, Q) with 2 <= |Q| <= max_degree that is not resonant for all members.
template <class K>
SmallDivisorReport poincare_report(const IndexAlgebra<K>& a, int max_degree, bool keep_witnesses = false) {
  SmallDivisorReport r;
  r.kind = "poincare";
  auto pc = poincare_constants(a);
  r.d = pc.d;
  r.c = pc.c;
  int p = a.p;
  double count = (detail::binom(max_degree + 2 * p, 2 * p) - 1 - 2 * p) * 2 * p;
  if (count > kOmegaBudget) throw BudgetExceeded("poincare_report: enumeration exceeds budget");
  std::vector<int> e(2 * p, 0);
  for (int deg = 2; deg <= max_degree; ++deg)
    detail::for_each_degree(2 * p, deg, e, 0, [&](const std::vector<int>& Q) {
      for (int j = 0; j < 2 * p; ++j) {
        bool some = false;
        for (int m = 0; m < p && !some; ++m) some = !a.mu_power_is_one(m, detail::divisor_exponent(p, m, j, Q));
        if (!some) continue;
        auto w = poincare_witness(a, j, Q, pc.d, pc.c);
        ++r.evaluated;
        if (keep_witnesses) r.witnesses.push_back(w);
      }
    });
  return r;
}

}  // namespace crsing
