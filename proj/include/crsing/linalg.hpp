#pragma once

#include <Eigen/Dense>

#include <vector>

#include "scalar.hpp"

namespace crsing {

template <class K>
class Matrix {
 public:
  using F = Field<K>;
  Matrix() = default;
  Matrix(int r, int c) : r_(r), c_(c), a_(std::size_t(r) * c, F::zero()) {}
  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = F::one();
    return m;
  }
  static Matrix diag(const std::vector<K>& d) {
    Matrix m(int(d.size()), int(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(int(i), int(i)) = d[i];
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  K& operator()(int i, int j) { return a_[std::size_t(i) * c_ + j]; }
  const K& operator()(int i, int j) const { return a_[std::size_t(i) * c_ + j]; }

  friend Matrix operator*(const Matrix& x, const Matrix& y) {
    if (x.c_ != y.r_) throw Error("matrix product dimension mismatch");
    Matrix m(x.r_, y.c_);
    for (int i = 0; i < x.r_; ++i)
      for (int k = 0; k < x.c_; ++k) {
        if (F::is_zero(x(i, k))) continue;
        for (int j = 0; j < y.c_; ++j)
          if (!F::is_zero(y(k, j))) m(i, j) += x(i, k) * y(k, j);
      }
    return m;
  }
  friend Matrix operator+(Matrix x, const Matrix& y) {
    for (std::size_t i = 0; i < x.a_.size(); ++i) x.a_[i] += y.a_[i];
    return x;
  }
  friend Matrix operator-(Matrix x, const Matrix& y) {
    for (std::size_t i = 0; i < x.a_.size(); ++i) x.a_[i] -= y.a_[i];
    return x;
  }
  Matrix scaled(const K& s) const {
    Matrix m = *this;
    for (auto& v : m.a_) v = v * s;
    return m;
  }
  std::vector<K> apply(const std::vector<K>& v) const {
    std::vector<K> out(r_, F::zero());
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j)
        if (!F::is_zero((*this)(i, j))) out[i] += (*this)(i, j) * v[j];
    return out;
  }
  Matrix conj() const {
    Matrix m = *this;
    for (auto& v : m.a_) v = F::conj(v);
    return m;
  }
  Matrix transpose() const {
    Matrix m(c_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
    return m;
  }
  double max_abs() const {
    double m = 0;
    for (auto& v : a_) m = std::max(m, F::abs(v));
    return m;
  }
  bool is_zero() const {
    for (auto& v : a_)
      if (!F::is_zero(v)) return false;
    return true;
  }
  friend bool operator==(const Matrix& x, const Matrix& y) {
    if (x.r_ != y.r_ || x.c_ != y.c_) return false;
    if constexpr (F::exact) return x.a_ == y.a_;
    else return (x - y).max_abs() < 1e-12;
  }

  Eigen::MatrixXcd to_eigen() const {
    Eigen::MatrixXcd m(r_, c_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(i, j) = F::to_c((*this)(i, j));
    return m;
  }

 private:
  int r_ = 0, c_ = 0;
  std::vector<K> a_;
};

template <class K>
struct SolveResult {
  bool consistent = false;
  int rank = 0;
  std::vector<K> x;            // a particular solution (free variables set to zero)
  double residual = 0;         // max |Ax-b| (float) or max |inconsistent rhs| (exact)
  std::vector<int> free_cols;  // columns without pivots
};

namespace detail {

// Row echelon form in place on [A | B]; returns pivot columns.
template <class K>
std::vector<int> row_reduce(Matrix<K>& A, Matrix<K>& B) {
  using F = Field<K>;
  int r = A.rows(), c = A.cols(), bc = B.cols();
  std::vector<int> piv;
  int row = 0;
  for (int col = 0; col < c && row < r; ++col) {
    int best = -1;
    if constexpr (F::exact) {
      for (int i = row; i < r; ++i)
        if (!F::is_zero(A(i, col))) {
          best = i;
          break;
        }
    } else {
      double bv = 0;
      for (int i = row; i < r; ++i)
        if (std::abs(A(i, col)) > bv) bv = std::abs(A(i, col)), best = i;
      if (bv < 1e-12) best = -1;
    }
    if (best < 0) continue;
    if (best != row) {
      for (int j = 0; j < c; ++j) std::swap(A(row, j), A(best, j));
      for (int j = 0; j < bc; ++j) std::swap(B(row, j), B(best, j));
    }
    K inv = F::one() / A(row, col);
    for (int j = col; j < c; ++j)
      if (!F::is_zero(A(row, j))) A(row, j) = A(row, j) * inv;
    for (int j = 0; j < bc; ++j)
      if (!F::is_zero(B(row, j))) B(row, j) = B(row, j) * inv;
    std::vector<int> nz;
    for (int j = col + 1; j < c; ++j)
      if (!F::is_zero(A(row, j))) nz.push_back(j);
    std::vector<int> nzb;
    for (int j = 0; j < bc; ++j)
      if (!F::is_zero(B(row, j))) nzb.push_back(j);
    for (int i = 0; i < r; ++i) {
      if (i == row || F::is_zero(A(i, col))) continue;
      K f = A(i, col);
      A(i, col) = F::zero();
      for (int j : nz) A(i, j) = F::clean(A(i, j) - f * A(row, j));
      for (int j : nzb) B(i, j) = F::clean(B(i, j) - f * B(row, j));
    }
    piv.push_back(col);
    ++row;
  }
  return piv;
}

}  // namespace detail

// Solve A x = b. Exact: Gauss-Jordan. Float: Eigen column-pivoted QR with rank tolerance 1e-9*|A|.
template <class K>
SolveResult<K> solve(const Matrix<K>& A, const std::vector<K>& b) {
  using F = Field<K>;
  SolveResult<K> res;
  int r = A.rows(), c = A.cols();
  if constexpr (F::exact) {
    Matrix<K> M = A, B(r, 1);
    for (int i = 0; i < r; ++i) B(i, 0) = b[i];
    auto piv = detail::row_reduce(M, B);
    res.rank = int(piv.size());
    res.consistent = true;
    for (int i = res.rank; i < r; ++i)
      if (!F::is_zero(B(i, 0))) {
        res.consistent = false;
        res.residual = std::max(res.residual, F::abs(B(i, 0)));
      }
    res.x.assign(c, F::zero());
    std::vector<bool> is_piv(c, false);
    for (int k = 0; k < res.rank; ++k) {
      res.x[piv[k]] = B(k, 0);
      is_piv[piv[k]] = true;
    }
    for (int j = 0; j < c; ++j)
      if (!is_piv[j]) res.free_cols.push_back(j);
  } else {
    Eigen::MatrixXcd M = A.to_eigen();
    Eigen::VectorXcd v(r);
    for (int i = 0; i < r; ++i) v(i) = b[i];
    res.x.assign(c, 0.0);
    if (r == 0 || c == 0) {
      res.consistent = v.size() == 0 || v.norm() < 1e-10;
      res.residual = v.size() ? v.cwiseAbs().maxCoeff() : 0;
      return res;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(M);
    double nrm = M.cwiseAbs().maxCoeff();
    qr.setThreshold(1e-9 * std::max(1.0, nrm) / std::max(1e-300, qr.maxPivot()));
    res.rank = int(qr.rank());
    Eigen::VectorXcd x = qr.solve(v);
    for (int j = 0; j < c; ++j) res.x[j] = F::clean(x(j));
    double rr = (M * x - v).cwiseAbs().maxCoeff();
    res.residual = rr;
    res.consistent = rr <= 1e-9 * std::max(1.0, v.cwiseAbs().maxCoeff());
    if (res.rank < c) {
      for (int j = res.rank; j < c; ++j) res.free_cols.push_back(int(qr.colsPermutation().indices()(j)));
    }
  }
  return res;
}

template <class K>
int rank(const Matrix<K>& A) {
  if constexpr (Field<K>::exact) {
    Matrix<K> M = A, B(A.rows(), 0);
    return int(detail::row_reduce(M, B).size());
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A.to_eigen());
    double nrm = A.max_abs();
    qr.setThreshold(1e-9 * std::max(1.0, nrm) / std::max(1e-300, qr.maxPivot()));
    return int(qr.rank());
  }
}

// Basis of the right null space (columns returned as vectors).
template <class K>
std::vector<std::vector<K>> nullspace(const Matrix<K>& A) {
  using F = Field<K>;
  std::vector<std::vector<K>> out;
  int c = A.cols();
  if constexpr (F::exact) {
    Matrix<K> M = A, B(A.rows(), 0);
    auto piv = detail::row_reduce(M, B);
    std::vector<int> where(c, -1);
    for (std::size_t k = 0; k < piv.size(); ++k) where[piv[k]] = int(k);
    for (int j = 0; j < c; ++j) {
      if (where[j] >= 0) continue;
      std::vector<K> v(c, F::zero());
      v[j] = F::one();
      for (std::size_t k = 0; k < piv.size(); ++k) v[piv[k]] = -M(int(k), j);
      out.push_back(std::move(v));
    }
  } else {
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(A.to_eigen());
    lu.setThreshold(1e-9);
    Eigen::MatrixXcd ker = lu.kernel();
    if (lu.rank() == c) return out;
    for (int k = 0; k < ker.cols(); ++k) {
      std::vector<K> v(c);
      for (int j = 0; j < c; ++j) v[j] = F::clean(ker(j, k));
      out.push_back(std::move(v));
    }
  }
  return out;
}

template <class K>
Matrix<K> inverse(const Matrix<K>& A) {
  using F = Field<K>;
  int n = A.rows();
  if (A.cols() != n) throw Error("inverse of a non-square matrix");
  if constexpr (F::exact) {
    Matrix<K> M = A, B = Matrix<K>::identity(n);
    auto piv = detail::row_reduce(M, B);
    if (int(piv.size()) != n) throw Error("singular matrix");
    return B;
  } else {
    Eigen::MatrixXcd m = A.to_eigen();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
    if (!lu.isInvertible()) throw Error("singular matrix");
    double cond = m.norm() * lu.inverse().norm();
    if (cond > 1e12) throw Error("ill-conditioned matrix");
    Eigen::MatrixXcd inv = lu.inverse();
    Matrix<K> out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = F::clean(inv(i, j));
    return out;
  }
}

template <class K>
K determinant(const Matrix<K>& A) {
  using F = Field<K>;
  int n = A.rows();
  if constexpr (F::exact) {
    Matrix<K> M = A;
    K det = F::one();
    for (int col = 0; col < n; ++col) {
      int p = -1;
      for (int i = col; i < n; ++i)
        if (!F::is_zero(M(i, col))) {
          p = i;
          break;
        }
      if (p < 0) return F::zero();
      if (p != col) {
        for (int j = 0; j < n; ++j) std::swap(M(p, j), M(col, j));
        det = -det;
      }
      det *= M(col, col);
      K inv = F::one() / M(col, col);
      for (int i = col + 1; i < n; ++i) {
        if (F::is_zero(M(i, col))) continue;
        K f = M(i, col) * inv;
        for (int j = col; j < n; ++j) M(i, j) -= f * M(col, j);
      }
    }
    return det;
  } else {
    return A.to_eigen().determinant();
  }
}

// Numeric eigenvalues (always via Eigen).
template <class K>
std::vector<cplx> eigenvalues(const Matrix<K>& A) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A.to_eigen(), false);
  std::vector<cplx> out;
  for (int i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

}  // namespace crsing
