#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "dense.hpp"
#include "error.hpp"

namespace dvwalk {

/// Upper bound on dense oracle dimension.
inline constexpr std::size_t kOracleMaxDim = 512;

struct Eigensystem {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // column k is the eigenvector of values[k]
};

namespace detail {

inline double off_diagonal_norm(const CMatrix& a) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c)
      if (r != c) s += std::norm(a(r, c));
  return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi diagonalisation of a Hermitian matrix. Each rotation first removes the
/// phase of a(p,q), then applies the real symmetric Jacobi rotation. Stops when the
/// off-diagonal Frobenius mass drops below 1e-14 ||H||_F.
inline Eigensystem jacobi_eigh(const CMatrix& h) {
  const std::size_t n = h.dim();
  if (n == 0) throw InputError("empty matrix");
  if (n > kOracleMaxDim) throw InputError("oracle dimension cap exceeded");
  if (!h.all_finite()) throw InputError("matrix has NaN/Inf entries");
  const double scale = h.frobenius();
  if (max_abs_diff(h, h.adjoint()) > 1e-10 * std::max(1.0, scale)) throw InputError("matrix is not Hermitian");

  CMatrix a = h;
  for (std::size_t i = 0; i < n; ++i) a(i, i) = a(i, i).real();
  CMatrix v = CMatrix::identity(n);
  const double target = 1e-14 * scale;

  for (int sweep = 0; sweep < 100 && detail::off_diagonal_norm(a) > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double g = std::abs(a(p, q));
        if (g == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Negligible relative to both diagonal entries: zero it outright.
        if (sweep > 3 && std::abs(app) + 1e3 * g == std::abs(app) && std::abs(aqq) + 1e3 * g == std::abs(aqq)) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const cplx phase = a(p, q) / g;  // a(p,q) = g e^{i phi}
        const double theta = (aqq - app) / (2.0 * g);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on the (p, q) plane; a <- U^H a U.
        const cplx upq = s;
        const cplx uqp = -s * std::conj(phase);
        const cplx uqq = c * std::conj(phase);
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * c + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * c + vkq * uqp;
          v(k, q) = vkp * upq + vkq * uqq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });
  Eigensystem es{std::vector<double>(n), CMatrix(n)};
  for (std::size_t k = 0; k < n; ++k) {
    es.values[k] = a(order[k], order[k]).real();
    for (std::size_t r = 0; r < n; ++r) es.vectors(r, k) = v(r, order[k]);
  }
  return es;
}

/// e^{tau H} = V diag(e^{tau lambda}) V^H for Hermitian H.
inline CMatrix expm_eig(const CMatrix& h, cplx tau) {
  const Eigensystem es = jacobi_eigh(h);
  const std::size_t n = h.dim();
  CMatrix r(n);
  std::vector<cplx> f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = std::exp(tau * es.values[k]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      cplx s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += es.vectors(i, k) * f[k] * std::conj(es.vectors(j, k));
      r(i, j) = s;
    }
  return r;
}

/// Tr e^{tau H} from the spectrum.
inline cplx trace_expm_eig(const CMatrix& h, cplx tau) {
  cplx s = 0.0;
  for (double lam : jacobi_eigh(h).values) s += std::exp(tau * lam);
  return s;
}

/// Scaling-and-squaring Taylor exponential: s = max(0, ceil(log2 ||tau H||_1)) squarings,
/// series stopped once a term falls below 1e-18 of the running sum. Works for any square H.
inline CMatrix expm_series(const CMatrix& h, cplx tau) {
  const std::size_t n = h.dim();
  if (n == 0) throw InputError("empty matrix");
  if (n > kOracleMaxDim) throw InputError("oracle dimension cap exceeded");
  if (!h.all_finite()) throw InputError("matrix has NaN/Inf entries");
  CMatrix x = h;
  x *= tau;
  const double norm = x.norm1();
  int squarings = norm > 1.0 ? static_cast<int>(std::ceil(std::log2(norm))) : 0;
  x *= cplx(std::ldexp(1.0, -squarings), 0.0);

  CMatrix sum = CMatrix::identity(n);
  CMatrix term = CMatrix::identity(n);
  for (int k = 1; k < 200; ++k) {
    term = term * x;
    term *= cplx(1.0 / k, 0.0);
    sum += term;
    const double tn = term.max_abs();
    if (tn == 0.0 || tn < 1e-18 * sum.max_abs()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace dvwalk
