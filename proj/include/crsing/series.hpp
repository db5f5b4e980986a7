#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "scalar.hpp"

namespace crsing {

inline constexpr int kMaxVars = 12;

struct Multiindex {
  std::array<std::uint8_t, kMaxVars> e{};
  std::uint8_t n = 0;
  std::uint16_t deg = 0;

  Multiindex() = default;
  explicit Multiindex(int nv) : n(std::uint8_t(nv)) {
    if (nv > kMaxVars) throw Error("too many variables");
  }
  Multiindex(std::initializer_list<int> v) : Multiindex(int(v.size())) {
    int k = 0;
    for (int x : v) set(k++, x);
  }
  static Multiindex from(const std::vector<int>& v) {
    Multiindex m(int(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) m.set(int(k), v[k]);
    return m;
  }
  static Multiindex unit(int nv, int i) {
    Multiindex m(nv);
    m.set(i, 1);
    return m;
  }

  int operator[](int i) const { return e[i]; }
  int size() const { return n; }
  int degree() const { return deg; }
  void set(int i, int v) {
    if (v < 0 || v > 255) throw Error("exponent out of range");
    deg = std::uint16_t(deg - e[i] + v);
    e[i] = std::uint8_t(v);
  }
  std::vector<int> vec() const { return std::vector<int>(e.begin(), e.begin() + n); }

  friend Multiindex operator+(const Multiindex& a, const Multiindex& b) {
    Multiindex r(a.n);
    for (int i = 0; i < a.n; ++i) r.e[i] = std::uint8_t(a.e[i] + b.e[i]);
    r.deg = std::uint16_t(a.deg + b.deg);
    return r;
  }
  friend bool operator==(const Multiindex& a, const Multiindex& b) {
    return a.n == b.n && a.e == b.e;
  }
};

// Graded lex: lower degree first, then larger leading exponent first.
struct GrlexLess {
  bool operator()(const Multiindex& a, const Multiindex& b) const {
    if (a.deg != b.deg) return a.deg < b.deg;
    for (int i = 0; i < a.n; ++i)
      if (a.e[i] != b.e[i]) return a.e[i] > b.e[i];
    return false;
  }
};

// All monomials of degree exactly k in n variables, graded-lex order.
inline std::vector<Multiindex> monomials_of_degree(int n, int k) {
  std::vector<Multiindex> out;
  Multiindex m(n);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      m.set(i, left);
      out.push_back(m);
      m.set(i, 0);
      return;
    }
    for (int v = left; v >= 0; --v) {
      m.set(i, v);
      rec(i + 1, left - v);
    }
    m.set(i, 0);
  };
  if (n == 0) {
    if (k == 0) out.push_back(m);
    return out;
  }
  rec(0, k);
  return out;
}

template <class K>
class Series {
 public:
  using F = Field<K>;
  using Map = std::map<Multiindex, K, GrlexLess>;

  Series() = default;
  Series(int n, int N) : n_(n), N_(N) {}

  static Series constant(int n, int N, const K& c) {
    Series s(n, N);
    s.set(Multiindex(n), c);
    return s;
  }
  static Series variable(int n, int N, int i, const K& c = F::one()) {
    Series s(n, N);
    s.set(Multiindex::unit(n, i), c);
    return s;
  }
  static Series monomial(int n, int N, const Multiindex& m, const K& c = F::one()) {
    Series s(n, N);
    s.set(m, c);
    return s;
  }

  int nvars() const { return n_; }
  int order() const { return N_; }
  const Map& terms() const { return c_; }
  bool empty() const { return c_.empty(); }
  std::size_t size() const { return c_.size(); }
  auto begin() const { return c_.begin(); }
  auto end() const { return c_.end(); }

  K coeff(const Multiindex& m) const {
    auto it = c_.find(m);
    return it == c_.end() ? F::zero() : it->second;
  }
  void set(const Multiindex& m, const K& v) {
    if (m.degree() > N_) return;
    if (F::is_zero(v)) {
      c_.erase(m);
      return;
    }
    c_[m] = v;
  }
  void add(const Multiindex& m, const K& v) {
    if (m.degree() > N_ || F::is_zero(v)) return;
    auto [it, fresh] = c_.try_emplace(m, v);
    if (!fresh) {
      it->second += v;
      if (F::is_zero(it->second)) c_.erase(it);
    }
  }

  int valuation() const { return c_.empty() ? N_ + 1 : c_.begin()->first.degree(); }
  int max_degree() const { return c_.empty() ? -1 : c_.rbegin()->first.degree(); }

  Series homogeneous(int k) const {
    Series r(n_, N_);
    for (auto& [m, v] : c_)
      if (m.degree() == k) r.c_.emplace_hint(r.c_.end(), m, v);
    return r;
  }
  Series truncated(int k) const {
    Series r(n_, N_);
    for (auto& [m, v] : c_) {
      if (m.degree() > k) break;
      r.c_.emplace_hint(r.c_.end(), m, v);
    }
    return r;
  }
  Series from_degree(int k) const {
    Series r(n_, N_);
    for (auto& [m, v] : c_)
      if (m.degree() >= k) r.c_.emplace_hint(r.c_.end(), m, v);
    return r;
  }
  Series with_order(int N) const {
    Series r(n_, N);
    for (auto& [m, v] : c_) {
      if (m.degree() > N) break;
      r.c_.emplace_hint(r.c_.end(), m, v);
    }
    return r;
  }

  Series& operator+=(const Series& b) {
    check(b);
    for (auto& [m, v] : b.c_) add(m, v);
    return *this;
  }
  Series& operator-=(const Series& b) {
    check(b);
    for (auto& [m, v] : b.c_) add(m, -v);
    return *this;
  }
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator-(const Series& a) {
    Series r(a.n_, a.N_);
    for (auto& [m, v] : a.c_) r.c_.emplace_hint(r.c_.end(), m, -v);
    return r;
  }
  Series scaled(const K& k) const {
    Series r(n_, N_);
    if (F::is_zero(k)) return r;
    for (auto& [m, v] : c_) r.set(m, v * k);
    return r;
  }
  friend Series operator*(const K& k, const Series& a) { return a.scaled(k); }

  // Cauchy product truncated at N (or at `limit` if smaller).
  Series mul(const Series& b, int limit = -1) const {
    check(b);
    int N = limit < 0 ? N_ : std::min(N_, limit);
    Series r(n_, N_);
    for (auto& [ma, va] : c_) {
      int room = N - ma.degree();
      if (room < 0) break;
      for (auto& [mb, vb] : b.c_) {
        if (mb.degree() > room) break;
        r.add(ma + mb, va * vb);
      }
    }
    return r;
  }
  friend Series operator*(const Series& a, const Series& b) { return a.mul(b); }

  Series derivative(int i) const {
    Series r(n_, N_);
    for (auto& [m, v] : c_) {
      if (m[i] == 0) continue;
      Multiindex mm = m;
      mm.set(i, m[i] - 1);
      r.add(mm, v * F::from_int(m[i]));
    }
    return r;
  }

  Series conj() const {
    Series r(n_, N_);
    for (auto& [m, v] : c_) r.c_.emplace_hint(r.c_.end(), m, F::conj(v));
    return r;
  }

  // Rename/permute variables: variable i of this becomes variable map[i] of an nv-variable series.
  Series relabel(int nv, const std::vector<int>& map) const {
    Series r(nv, N_);
    for (auto& [m, v] : c_) {
      Multiindex mm(nv);
      for (int i = 0; i < n_; ++i)
        if (m[i]) mm.set(map[i], mm[map[i]] + m[i]);
      r.add(mm, v);
    }
    return r;
  }

  // Substitution x_i -> g[i]; every g[i] must have zero constant term.
  Series compose(const std::vector<Series>& g, int limit = -1) const;
  // compose with powers taken from a cache shared between several outer series
  template <class Cache>
  Series compose_cached(Cache& pc, int n_out, int limit) const {
    int N = std::min(N_, limit);
    Series r(n_out, N_);
    for (auto& [m, v] : c_) {
      if (m.degree() > N) break;
      for (auto& [mm, vv] : pc.get(m).terms()) r.add(mm, v * vv);
    }
    return r;
  }

  // 1/s for s(0) != 0.
  Series reciprocal() const;
  // s^alpha for s(0) == 1 and rational alpha (binomial series).
  Series power(long num, long den) const;

  K constant_term() const { return coeff(Multiindex(n_)); }

  double max_abs() const {
    double m = 0;
    for (auto& [k, v] : c_) m = std::max(m, F::abs(v));
    return m;
  }
  bool is_zero() const { return c_.empty(); }

  friend bool operator==(const Series& a, const Series& b) {
    if (a.n_ != b.n_) return false;
    if constexpr (F::exact) {
      return a.c_.size() == b.c_.size() &&
             std::equal(a.c_.begin(), a.c_.end(), b.c_.begin(),
                        [](auto& x, auto& y) { return x.first == y.first && x.second == y.second; });
    } else {
      return (a - b).max_abs() < 1e-12;
    }
  }

  void check(const Series& b) const {
    if (b.n_ != n_) throw Error("series dimension mismatch");
  }

 private:
  int n_ = 0, N_ = 0;
  Map c_;
};

// Power cache used by compose: g^Q built as g^{Q-e_i} * g_i with i the last nonzero slot.
template <class K>
class PowerCache {
 public:
  PowerCache(const std::vector<Series<K>>& g, int n_out, int N) : g_(g), n_out_(n_out), N_(N) {}
  const Series<K>& get(const Multiindex& q) {
    auto it = cache_.find(q);
    if (it != cache_.end()) return it->second;
    if (q.degree() == 0) return cache_.emplace(q, Series<K>::constant(n_out_, N_, Field<K>::one())).first->second;
    int i = q.size() - 1;
    while (q[i] == 0) --i;
    if (q.degree() == 1) return cache_.emplace(q, g_[i].with_order(N_)).first->second;
    Multiindex r = q;
    r.set(i, q[i] - 1);
    Series<K> prod = get(r).mul(g_[i], N_);
    return cache_.emplace(q, std::move(prod)).first->second;
  }

 private:
  const std::vector<Series<K>>& g_;
  int n_out_, N_;
  std::map<Multiindex, Series<K>, GrlexLess> cache_;
};

template <class K>
Series<K> Series<K>::compose(const std::vector<Series<K>>& g, int limit) const {
  if (int(g.size()) != n_) throw Error("compose: dimension mismatch");
  int n_out = g.empty() ? 0 : g[0].nvars();
  for (auto& s : g) {
    if (s.nvars() != n_out) throw Error("compose: inner dimension mismatch");
    if (!F::is_zero(s.constant_term())) throw Error("compose: inner map has nonzero constant term");
  }
  int N = limit < 0 ? N_ : std::min(N_, limit);
  PowerCache<K> pc(g, n_out, N);
  return compose_cached(pc, n_out, N);
}

template <class K>
Series<K> Series<K>::reciprocal() const {
  K c0 = constant_term();
  if (F::is_zero(c0)) throw Error("reciprocal of a series with zero constant term");
  K ic = F::one() / c0;
  // 1/(c0(1+u)) = ic * sum (-u)^k
  Series u = (*this - constant(n_, N_, c0)).scaled(ic);
  Series r = constant(n_, N_, F::one()), pw = r;
  for (int k = 1; k <= N_; ++k) {
    pw = pw.mul(-u);
    if (pw.empty()) break;
    r += pw;
  }
  return r.scaled(ic);
}

template <class K>
Series<K> Series<K>::power(long num, long den) const {
  K c0 = constant_term();
  if (!(c0 == F::one()) && !(F::exact ? false : F::near(c0, F::one(), 1e-14)))
    throw Error("power: constant term must be 1");
  Series u = *this - constant(n_, N_, c0);
  Series r = constant(n_, N_, F::one()), pw = r;
  K binom = F::one();
  K a = F::from_ratio(num, den);
  for (int k = 1; k <= N_; ++k) {
    binom = binom * (a - F::from_int(k - 1)) / F::from_int(k);
    pw = pw.mul(u);
    if (pw.empty()) break;
    r += pw.scaled(binom);
  }
  return r;
}

template <class K>
cplx evaluate(const Series<K>& s, const std::vector<cplx>& x) {
  cplx r = 0;
  for (auto& [m, v] : s) {
    cplx t = Field<K>::to_c(v);
    for (int i = 0; i < m.size(); ++i)
      if (m[i]) t *= std::pow(x[i], m[i]);
    r += t;
  }
  return r;
}

}  // namespace crsing
