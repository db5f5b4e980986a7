#pragma once

#include <vector>

#include "linalg.hpp"
#include "series.hpp"

namespace crsing {

template <class K>
class JetMap {
 public:
  using F = Field<K>;
  JetMap() = default;
  JetMap(int n_in, int N, std::vector<Series<K>> comps) : n_in_(n_in), N_(N), c_(std::move(comps)) {
    for (auto& s : c_) {
      if (s.nvars() != n_in_) throw Error("jet component dimension mismatch");
      if (!F::is_zero(s.constant_term())) throw Error("jet map must fix the origin");
    }
  }
  static JetMap identity(int n, int N) {
    std::vector<Series<K>> c;
    for (int i = 0; i < n; ++i) c.push_back(Series<K>::variable(n, N, i));
    return JetMap(n, N, std::move(c));
  }
  static JetMap linear(const Matrix<K>& A, int N) {
    std::vector<Series<K>> c;
    for (int i = 0; i < A.rows(); ++i) {
      Series<K> s(A.cols(), N);
      for (int j = 0; j < A.cols(); ++j) s.set(Multiindex::unit(A.cols(), j), A(i, j));
      c.push_back(std::move(s));
    }
    return JetMap(A.cols(), N, std::move(c));
  }

  int n_in() const { return n_in_; }
  int n_out() const { return int(c_.size()); }
  int order() const { return N_; }
  const Series<K>& operator[](int i) const { return c_[i]; }
  Series<K>& operator[](int i) { return c_[i]; }
  const std::vector<Series<K>>& components() const { return c_; }

  Matrix<K> linear_part() const {
    Matrix<K> A(n_out(), n_in_);
    for (int i = 0; i < n_out(); ++i)
      for (int j = 0; j < n_in_; ++j) A(i, j) = c_[i].coeff(Multiindex::unit(n_in_, j));
    return A;
  }
  JetMap homogeneous(int k) const {
    std::vector<Series<K>> c;
    for (auto& s : c_) c.push_back(s.homogeneous(k));
    return JetMap(n_in_, N_, std::move(c));
  }
  JetMap truncated(int k) const {
    std::vector<Series<K>> c;
    for (auto& s : c_) c.push_back(s.truncated(k));
    return JetMap(n_in_, N_, std::move(c));
  }
  JetMap with_order(int N) const {
    std::vector<Series<K>> c;
    for (auto& s : c_) c.push_back(s.with_order(N));
    return JetMap(n_in_, N, std::move(c));
  }
  JetMap conj() const {
    std::vector<Series<K>> c;
    for (auto& s : c_) c.push_back(s.conj());
    return JetMap(n_in_, N_, std::move(c));
  }
  friend JetMap operator+(JetMap a, const JetMap& b) {
    for (int i = 0; i < a.n_out(); ++i) a.c_[i] += b.c_[i];
    return a;
  }
  friend JetMap operator-(JetMap a, const JetMap& b) {
    for (int i = 0; i < a.n_out(); ++i) a.c_[i] -= b.c_[i];
    return a;
  }
  JetMap scaled(const K& k) const {
    std::vector<Series<K>> c;
    for (auto& s : c_) c.push_back(s.scaled(k));
    return JetMap(n_in_, N_, std::move(c));
  }
  double max_abs() const {
    double m = 0;
    for (auto& s : c_) m = std::max(m, s.max_abs());
    return m;
  }
  bool is_zero() const {
    for (auto& s : c_)
      if (!s.is_zero()) return false;
    return true;
  }
  bool is_linear() const {
    for (auto& s : c_)
      if (s.max_degree() > 1) return false;
    return true;
  }
  friend bool operator==(const JetMap& a, const JetMap& b) {
    return a.n_in_ == b.n_in_ && a.c_ == b.c_;
  }

 private:
  int n_in_ = 0, N_ = 0;
  std::vector<Series<K>> c_;
};

// f o g truncated at min(order) (or `limit`).
template <class K>
JetMap<K> compose(const JetMap<K>& f, const JetMap<K>& g, int limit = -1) {
  if (f.n_in() != g.n_out()) throw Error("compose: dimension mismatch");
  for (auto& s : g.components())
    if (!Field<K>::is_zero(s.constant_term())) throw Error("compose: inner map has nonzero constant term");
  int N = limit < 0 ? f.order() : std::min(f.order(), limit);
  PowerCache<K> pc(g.components(), g.n_in(), N);
  std::vector<Series<K>> c;
  for (int i = 0; i < f.n_out(); ++i) c.push_back(f[i].compose_cached(pc, g.n_in(), N));
  return JetMap<K>(g.n_in(), f.order(), std::move(c));
}

template <class K>
JetMap<K> invert(const JetMap<K>& f) {
  int n = f.n_in(), N = f.order();
  if (f.n_out() != n) throw Error("invert: map is not square");
  Matrix<K> Ai;
  try {
    Ai = inverse(f.linear_part());
  } catch (const Error&) {
    throw Error("invert: singular linear part");
  }
  JetMap<K> g = JetMap<K>::linear(Ai, N);
  for (int k = 2; k <= N; ++k) {
    JetMap<K> r = compose(f, g, k).homogeneous(k);
    if (r.is_zero()) continue;
    JetMap<K> corr = compose(JetMap<K>::linear(Ai, N), r);
    g = g - corr;
  }
  return g;
}

// z -> h(conj z).
template <class K>
struct AntiJetMap {
  JetMap<K> h;
  int n() const { return h.n_in(); }
  // Linear anti map z -> P conj(z).
  static AntiJetMap linear(const Matrix<K>& P, int N) { return {JetMap<K>::linear(P, N)}; }
};

template <class K>
AntiJetMap<K> compose(const AntiJetMap<K>& a, const JetMap<K>& b, int limit = -1) {
  return {compose(a.h, b.conj(), limit)};
}
template <class K>
AntiJetMap<K> compose(const JetMap<K>& a, const AntiJetMap<K>& b, int limit = -1) {
  return {compose(a, b.h, limit)};
}
template <class K>
JetMap<K> compose(const AntiJetMap<K>& a, const AntiJetMap<K>& b, int limit = -1) {
  return compose(a.h, b.h.conj(), limit);
}

// rho o f o rho for anti-holomorphic rho.
template <class K>
JetMap<K> conjugate_by(const AntiJetMap<K>& rho, const JetMap<K>& f) {
  return compose(compose(rho, f), rho);
}

template <class K>
JetMap<K> conjugate(const JetMap<K>& f, const JetMap<K>& phi, const JetMap<K>& phi_inv) {
  return compose(phi_inv, compose(f, phi));
}

// phi = |G|^{-1} sum (Lg)^{-1} o g.
template <class K>
JetMap<K> reynolds_linearize(const std::vector<JetMap<K>>& group) {
  using F = Field<K>;
  if (group.empty()) throw Error("reynolds_linearize: empty group");
  int n = group[0].n_in(), N = group[0].order();
  // closure: products must land in the group (up to degree N)
  for (auto& a : group)
    for (auto& b : group) {
      JetMap<K> ab = compose(a, b);
      bool found = false;
      for (auto& c : group)
        if ((ab - c).is_zero() || (!F::exact && (ab - c).max_abs() < 1e-9)) {
          found = true;
          break;
        }
      if (!found) throw Error("reynolds_linearize: group is not closed mod degree N+1");
    }
  JetMap<K> phi(n, N, std::vector<Series<K>>(n, Series<K>(n, N)));
  for (auto& g : group) {
    Matrix<K> Li = inverse(g.linear_part());
    phi = phi + compose(JetMap<K>::linear(Li, N), g);
  }
  return phi.scaled(F::one() / F::from_int(long(group.size())));
}

}  // namespace crsing
