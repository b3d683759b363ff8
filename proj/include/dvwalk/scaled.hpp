#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace dvwalk {

using cplx = std::complex<double>;

/// Complex number stored as mantissa * 2^exponent, for quantities like tau^q/q! that leave
/// the double range long before q = 10^4.
struct ScaledComplex {
  cplx mantissa{0.0, 0.0};
  std::int64_t exponent = 0;

  static ScaledComplex from(cplx z) {
    ScaledComplex s{z, 0};
    s.normalize();
    return s;
  }

  /// e^{z} without forming e^{Re z} directly.
  static ScaledComplex exp(cplx z) {
    const double k = std::floor(z.real() / std::numbers::ln2);
    ScaledComplex s{std::exp(z.real() - k * std::numbers::ln2) * cplx(std::cos(z.imag()), std::sin(z.imag())),
                    static_cast<std::int64_t>(k)};
    s.normalize();
    return s;
  }

  void normalize() {
    const double m = std::max(std::abs(mantissa.real()), std::abs(mantissa.imag()));
    if (m == 0.0 || !std::isfinite(m)) {
      if (m == 0.0) exponent = 0;
      return;
    }
    int e = 0;
    std::frexp(m, &e);
    mantissa = cplx(std::ldexp(mantissa.real(), -e), std::ldexp(mantissa.imag(), -e));
    exponent += e;
  }

  bool is_zero() const { return mantissa.real() == 0.0 && mantissa.imag() == 0.0; }

  cplx to_complex() const {
    if (exponent > 4096) return mantissa * HUGE_VAL;
    if (exponent < -4096) return cplx(0.0, 0.0);
    const int e = static_cast<int>(exponent);
    return cplx(std::ldexp(mantissa.real(), e), std::ldexp(mantissa.imag(), e));
  }

  /// Natural log of the modulus; -inf for zero.
  double log_abs() const {
    if (is_zero()) return -HUGE_VAL;
    return std::log(std::abs(mantissa)) + static_cast<double>(exponent) * std::numbers::ln2;
  }

  friend ScaledComplex operator*(const ScaledComplex& a, const ScaledComplex& b) {
    ScaledComplex r{a.mantissa * b.mantissa, a.exponent + b.exponent};
    r.normalize();
    return r;
  }
  friend ScaledComplex operator*(const ScaledComplex& a, cplx b) {
    ScaledComplex r{a.mantissa * b, a.exponent};
    r.normalize();
    return r;
  }
};

/// Neumaier-compensated complex accumulator. Summation order is the caller's order, so
/// identical add sequences give identical bits.
class CompensatedSum {
 public:
  void add(cplx x) {
    add_part(sum_re_, comp_re_, x.real());
    add_part(sum_im_, comp_im_, x.imag());
  }

  /// Merge another accumulator (its running sum and compensation, in that order).
  void merge(const CompensatedSum& other) {
    add_part(sum_re_, comp_re_, other.sum_re_);
    add_part(sum_im_, comp_im_, other.sum_im_);
    add_part(sum_re_, comp_re_, other.comp_re_);
    add_part(sum_im_, comp_im_, other.comp_im_);
  }

  cplx value() const { return {sum_re_ + comp_re_, sum_im_ + comp_im_}; }

 private:
  static void add_part(double& sum, double& comp, double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }

  double sum_re_ = 0.0, comp_re_ = 0.0;
  double sum_im_ = 0.0, comp_im_ = 0.0;
};

/// Canonical complex parameter: signed zeros folded to +0 so tau built from -beta and from
/// -i*(-i*beta) carry identical bits.
inline cplx canonical(cplx z) { return {z.real() + 0.0, z.imag() + 0.0}; }

inline cplx tau_from_beta(cplx beta) { return canonical(-beta); }
inline cplx tau_from_time(cplx t) { return canonical(cplx(0.0, -1.0) * t); }

}  // namespace dvwalk
