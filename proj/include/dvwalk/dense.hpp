#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "error.hpp"

namespace dvwalk {

using cplx = std::complex<double>;

/// Square dense complex matrix, row-major.
class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {}

  static CMatrix identity(std::size_t dim) {
    CMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  static CMatrix diagonal(const std::vector<double>& d) {
    CMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t dim() const { return dim_; }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

  const std::vector<cplx>& data() const { return data_; }

  CMatrix adjoint() const {
    CMatrix a(dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) a(c, r) = std::conj((*this)(r, c));
    return a;
  }

  cplx trace() const {
    cplx t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  /// Induced 1-norm (max column sum).
  double norm1() const {
    double best = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < dim_; ++r) s += std::abs((*this)(r, c));
      best = std::max(best, s);
    }
    return best;
  }

  /// Induced infinity-norm (max row sum).
  double norm_inf() const {
    double best = 0.0;
    for (std::size_t r = 0; r < dim_; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim_; ++c) s += std::abs((*this)(r, c));
      best = std::max(best, s);
    }
    return best;
  }

  double frobenius() const {
    double s = 0.0;
    for (const auto& z : data_) s += std::norm(z);
    return std::sqrt(s);
  }

  CMatrix& operator*=(cplx s) {
    for (auto& z : data_) z *= s;
    return *this;
  }

  CMatrix& operator+=(const CMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  CMatrix& operator-=(const CMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }

  friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    a.check_same(b);
    const std::size_t n = a.dim_;
    CMatrix r(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const cplx aik = a(i, k);
        if (aik == cplx(0.0, 0.0)) continue;
        for (std::size_t j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, cplx s) { return a *= s; }

  friend bool operator==(const CMatrix& a, const CMatrix& b) { return a.dim_ == b.dim_ && a.data_ == b.data_; }

 private:
  void check_same(const CMatrix& o) const {
    if (o.dim_ != dim_) throw InputError("matrix dimension mismatch");
  }

  std::size_t dim_ = 0;
  std::vector<cplx> data_;
};

/// Max-abs entrywise distance.
inline double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).max_abs(); }

}  // namespace dvwalk
