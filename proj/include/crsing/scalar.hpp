#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace crsing {

using cplx = std::complex<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A mathematical "no": obstruction, condition failure, resonance.
struct Obstruction : Error {
  std::string kind;
  int degree = -1;
  double residual = 0;
  std::string stage;
  Obstruction(std::string k, int deg, double res, const std::string& msg, std::string st = "")
      : Error(k + ": " + msg), kind(std::move(k)), degree(deg), residual(res), stage(std::move(st)) {}
};

struct BudgetExceeded : Error {
  using Error::Error;
};

// Gaussian rational re + i*im.
struct QI {
  mpq_class re, im;
  QI() : re(0), im(0) {}
  QI(mpq_class r, mpq_class i = 0) : re(std::move(r)), im(std::move(i)) {}
  bool zero() const { return sgn(re) == 0 && sgn(im) == 0; }
  bool real() const { return sgn(im) == 0; }
};

inline QI operator+(const QI& a, const QI& b) { return {a.re + b.re, a.im + b.im}; }
inline QI operator-(const QI& a, const QI& b) { return {a.re - b.re, a.im - b.im}; }
inline QI operator-(const QI& a) { return {-a.re, -a.im}; }
inline QI operator*(const QI& a, const QI& b) {
  if (a.real() && b.real()) return {a.re * b.re, 0};
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline QI qi_conj(const QI& a) { return {a.re, -a.im}; }
inline QI qi_inv(const QI& a) {
  if (a.zero()) throw Error("division by zero");
  if (a.real()) return {1 / a.re, 0};
  mpq_class n = a.re * a.re + a.im * a.im;
  return {a.re / n, -a.im / n};
}
inline bool operator==(const QI& a, const QI& b) { return a.re == b.re && a.im == b.im; }

// Element a + b*sqrt(d) of Q(i)(sqrt d), d squarefree positive; d == 1 means b == 0.
class Exact {
 public:
  Exact() = default;
  Exact(long n) : a_(mpq_class(n)) {}
  Exact(const mpq_class& r) : a_(r) {}
  Exact(QI a) : a_(std::move(a)) {}
  Exact(QI a, QI b, long d) : a_(std::move(a)), b_(std::move(b)), d_(d) { norm(); }

  static Exact rational(long n, long m = 1) {
    mpq_class r(n, m);
    r.canonicalize();
    return Exact(r);
  }
  static Exact gauss(mpq_class re, mpq_class im) {
    re.canonicalize();
    im.canonicalize();
    return Exact(QI(re, im));
  }
  static Exact I() { return Exact(QI(0, 1)); }

  const QI& a() const { return a_; }
  const QI& b() const { return b_; }
  long d() const { return d_; }

  bool is_zero() const { return a_.zero() && b_.zero(); }
  bool in_qi() const { return b_.zero(); }
  bool is_real() const { return a_.real() && b_.real(); }

  Exact conj() const { return Exact(qi_conj(a_), qi_conj(b_), d_); }
  Exact re() const { return Exact(QI(a_.re), QI(b_.re), d_); }
  Exact im() const { return Exact(QI(a_.im), QI(b_.im), d_); }

  cplx to_complex() const {
    double s = std::sqrt(double(d_));
    return {a_.re.get_d() + b_.re.get_d() * s, a_.im.get_d() + b_.im.get_d() * s};
  }

  friend Exact operator+(const Exact& x, const Exact& y) {
    return Exact(x.a_ + y.a_, x.b_ + y.b_, join(x, y));
  }
  friend Exact operator-(const Exact& x, const Exact& y) {
    return Exact(x.a_ - y.a_, x.b_ - y.b_, join(x, y));
  }
  friend Exact operator-(const Exact& x) { return Exact(-x.a_, -x.b_, x.d_); }
  friend Exact operator*(const Exact& x, const Exact& y) {
    if (x.b_.zero() && y.b_.zero()) return Exact(x.a_ * y.a_);
    long d = join(x, y);
    QI a = x.a_ * y.a_;
    if (!x.b_.zero() && !y.b_.zero()) a = a + x.b_ * y.b_ * QI(mpq_class(d));
    return Exact(a, x.a_ * y.b_ + x.b_ * y.a_, d);
  }
  friend Exact operator/(const Exact& x, const Exact& y) { return x * y.inv(); }
  Exact inv() const {
    if (b_.zero()) return Exact(qi_inv(a_));
    // (a - b sqrt d) / (a^2 - b^2 d)
    QI n = a_ * a_ - b_ * b_ * QI(mpq_class(d_));
    QI ni = qi_inv(n);
    return Exact(a_ * ni, -(b_ * ni), d_);
  }
  Exact& operator+=(const Exact& y) {
    if (b_.zero() && y.b_.zero()) {
      a_.re += y.a_.re;
      a_.im += y.a_.im;
      return *this;
    }
    return *this = *this + y;
  }
  Exact& operator-=(const Exact& y) { return *this = *this - y; }
  Exact& operator*=(const Exact& y) { return *this = *this * y; }
  Exact& operator/=(const Exact& y) { return *this = *this / y; }
  friend bool operator==(const Exact& x, const Exact& y) {
    return x.a_ == y.a_ && x.b_ == y.b_ && (x.b_.zero() || x.d_ == y.d_);
  }
  friend bool operator!=(const Exact& x, const Exact& y) { return !(x == y); }

  std::string str() const;

 private:
  QI a_, b_;
  long d_ = 1;

  void norm() {
    if (b_.zero() || d_ == 1) {
      if (d_ == 1 && !b_.zero()) a_ = a_ + b_;
      b_ = QI();
      d_ = 1;
    }
  }
  static long join(const Exact& x, const Exact& y) {
    if (x.b_.zero()) return y.d_;
    if (y.b_.zero()) return x.d_;
    if (x.d_ != y.d_)
      throw Error("exact backend: mixed square roots sqrt(" + std::to_string(x.d_) + ") and sqrt(" +
                  std::to_string(y.d_) + "); use the float backend");
    return x.d_;
  }
};

namespace detail {

// n = s^2 * d with d squarefree (n > 0, trial division; inputs are small).
inline void squarefree_split(const mpz_class& n, mpz_class& s, mpz_class& d) {
  s = 1;
  d = 1;
  mpz_class m = n;
  for (mpz_class f = 2; f * f <= m; ++f) {
    int e = 0;
    while (m % f == 0) {
      m /= f;
      ++e;
    }
    for (int i = 0; i + 1 < e; i += 2) s *= f;
    if (e % 2) d *= f;
  }
  d *= m;
}

inline std::optional<mpq_class> rational_sqrt(const mpq_class& q) {
  if (sgn(q) < 0) return std::nullopt;
  mpz_class n = q.get_num(), m = q.get_den();
  if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(m.get_mpz_t()))
    return std::nullopt;
  mpz_class rn, rm;
  mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
  mpz_sqrt(rm.get_mpz_t(), m.get_mpz_t());
  return mpq_class(rn, rm);
}

inline std::string q_str(const mpq_class& q) { return q.get_str(); }

}  // namespace detail

// Principal square root if representable; nullopt otherwise.
inline std::optional<Exact> exact_sqrt(const Exact& x) {
  if (x.is_zero()) return Exact();
  if (!x.in_qi()) return std::nullopt;
  const QI& a = x.a();
  if (a.real()) {
    mpq_class r = abs(a.re);
    if (auto s = detail::rational_sqrt(r)) {
      return sgn(a.re) > 0 ? Exact(*s) : Exact(QI(0, *s));
    }
    mpz_class nd = r.get_num() * r.get_den(), s, d;
    detail::squarefree_split(nd, s, d);
    if (!d.fits_slong_p()) return std::nullopt;
    mpq_class coef(s, r.get_den());
    coef.canonicalize();
    QI b = sgn(a.re) > 0 ? QI(coef) : QI(0, coef);
    return Exact(QI(), b, d.get_si());
  }
  auto mod = detail::rational_sqrt(a.re * a.re + a.im * a.im);
  if (!mod) return std::nullopt;
  auto xr = detail::rational_sqrt((a.re + *mod) / 2);
  if (!xr || sgn(*xr) == 0) return std::nullopt;
  mpq_class yi = a.im / (2 * *xr);
  return Exact(QI(*xr, yi));
}

inline std::string Exact::str() const {
  auto part = [&](const mpq_class& u, const mpq_class& v) {
    std::string s = detail::q_str(u);
    if (sgn(v) != 0) {
      s += (sgn(v) > 0 ? "+" : "-");
      s += detail::q_str(abs(v)) + "*sqrt(" + std::to_string(d_) + ")";
    }
    return s;
  };
  std::string re = part(a_.re, b_.re), im = part(a_.im, b_.im);
  if (im == "0") return re;
  return "(" + re + ")+i*(" + im + ")";
}

// ---- backend traits -------------------------------------------------------

template <class K>
struct Field;

template <>
struct Field<Exact> {
  static constexpr bool exact = true;
  static constexpr const char* name = "exact";
  static Exact zero() { return Exact(); }
  static Exact one() { return Exact(1); }
  static Exact from_int(long n) { return Exact(n); }
  static Exact from_ratio(long n, long m) { return Exact::rational(n, m); }
  static Exact i() { return Exact::I(); }
  static bool is_zero(const Exact& x) { return x.is_zero(); }
  static Exact conj(const Exact& x) { return x.conj(); }
  static cplx to_c(const Exact& x) { return x.to_complex(); }
  static double abs(const Exact& x) { return std::abs(x.to_complex()); }
  static std::optional<Exact> sqrt(const Exact& x) { return exact_sqrt(x); }
  static Exact from_c(cplx) { throw Error("exact backend cannot represent a float value"); }
  static Exact clean(Exact x) { return x; }
  static bool near(const Exact& x, const Exact& y, double = 0) { return x == y; }
};

template <>
struct Field<cplx> {
  static constexpr bool exact = false;
  static constexpr const char* name = "float";
  static constexpr double drop = 1e-14;
  static cplx zero() { return 0.0; }
  static cplx one() { return 1.0; }
  static cplx from_int(long n) { return double(n); }
  static cplx from_ratio(long n, long m) { return double(n) / double(m); }
  static cplx i() { return {0.0, 1.0}; }
  static bool is_zero(const cplx& x) { return std::abs(x) < drop; }
  static cplx conj(const cplx& x) { return std::conj(x); }
  static cplx to_c(const cplx& x) { return x; }
  static double abs(const cplx& x) { return std::abs(x); }
  static std::optional<cplx> sqrt(const cplx& x) { return std::sqrt(x); }
  static cplx from_c(cplx x) { return x; }
  static cplx clean(cplx x) { return is_zero(x) ? cplx(0.0) : x; }
  static bool near(const cplx& x, const cplx& y, double tol = 1e-9) {
    return std::abs(x - y) <= tol * std::max(1.0, std::abs(y));
  }
};

template <class K>
K field_sqrt(const K& x) {
  auto r = Field<K>::sqrt(x);
  if (!r) throw Error("square root not representable in the exact backend; use the float backend");
  return *r;
}

// Parse one real part: "p/q", "p/q+r/s*sqrt(d)", a decimal or "inf".
namespace detail {
inline mpq_class parse_rational(std::string s) {
  if (!s.empty() && s[0] == '+') s = s.substr(1);
  mpq_class q;
  if (s.empty() || q.set_str(s, 10) != 0) throw Error("cannot parse '" + s + "' as a rational");
  q.canonicalize();
  return q;
}
}  // namespace detail

inline Exact parse_exact_real(const std::string& text) {
  std::string s;
  for (char c : text)
    if (c != ' ') s += c;
  if (s.empty()) return Exact();
  auto sq = s.find("*sqrt(");
  if (sq == std::string::npos) {
    auto dot = s.find('.');
    if (dot != std::string::npos && s.find_first_of("eE/") == std::string::npos) {
      // plain decimal: read it as the rational it spells
      std::string digits = s.substr(s[0] == '+' ? 1 : 0, dot - (s[0] == '+' ? 1 : 0)) + s.substr(dot + 1);
      mpz_class den = 1;
      for (std::size_t k = dot + 1; k < s.size(); ++k) den *= 10;
      mpq_class q{mpz_class(digits == "-" || digits.empty() ? "0" : digits, 10), den};
      q.canonicalize();
      return Exact(q);
    }
    if (dot != std::string::npos || s.find_first_of("eE") != std::string::npos) {
      mpq_class q(0);
      mpf_class f(s, 256);
      q = mpq_class(f);
      return Exact(q);
    }
    return Exact(detail::parse_rational(s));
  }
  // split "a+b*sqrt(d)" at the sign before b
  std::size_t cut = std::string::npos;
  for (std::size_t k = sq; k-- > 0;) {
    if ((s[k] == '+' || s[k] == '-') && k > 0) {
      cut = k;
      break;
    }
  }
  mpq_class a(0), b;
  std::string bs;
  if (cut == std::string::npos) {
    bs = s.substr(0, sq);
  } else {
    a = detail::parse_rational(s.substr(0, cut));
    bs = s.substr(cut, sq - cut);
  }
  b = detail::parse_rational(bs);
  long d = std::stol(s.substr(sq + 6, s.find(')', sq) - sq - 6));
  mpz_class sf, dd;
  detail::squarefree_split(mpz_class(d), sf, dd);
  b *= sf;
  return Exact(QI(a), QI(b), dd.get_si());
}

inline std::string exact_real_str(const Exact& x) {
  std::string s = x.a().re.get_str();
  if (!x.b().zero()) {
    const mpq_class& v = x.b().re;
    s += (sgn(v) >= 0 ? "+" : "-");
    s += mpq_class(abs(v)).get_str() + "*sqrt(" + std::to_string(x.d()) + ")";
  }
  return s;
}

}  // namespace crsing
