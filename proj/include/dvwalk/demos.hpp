#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace dvwalk {

// Order-weight concentration on the lattice: W(q) = q*^q e^{-q*} / q! against its normal limit.

inline constexpr double kMaxQStar = 1e6;

struct QStarRow {
  std::size_t q = 0;
  double poisson = 0.0;
  double gaussian = 0.0;
};

struct QStarProfile {
  double q_star = 0.0;
  std::vector<QStarRow> rows;
  double max_abs_deviation = 0.0;
  std::size_t argmax = 0;
  /// Standard deviation of the Poisson column over the tabulated range.
  double width = 0.0;
  double poisson_sum = 0.0;
};

namespace detail {

// log(n!) - (n + 1/2) log n + n - log(sqrt(2 pi)), by its asymptotic series for larger n.
inline double stirling_error(double n) {
  if (n < 15.0) return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n - 0.5 * std::log(2.0 * std::numbers::pi);
  const double nn = n * n;
  return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0) / nn) / nn) / nn) / n;
}

// x log(x / m) + m - x without cancellation near x = m.
inline double deviance(double x, double m) {
  if (std::abs(x - m) < 0.1 * (x + m)) {
    const double v = (x - m) / (x + m);
    double s = (x - m) * v, ej = 2.0 * x * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v * v;
      const double next = s + ej / (2 * j + 1);
      if (next == s) break;
      s = next;
    }
    return s;
  }
  return x * std::log(x / m) + m - x;
}

}  // namespace detail

/// q*^q e^{-q*} / q!, in the saddle-point form that stays accurate for large q*.
inline double poisson_weight(double q_star, std::size_t q) {
  if (q_star == 0.0) return q == 0 ? 1.0 : 0.0;
  if (q == 0) return std::exp(-q_star);
  const double qq = static_cast<double>(q);
  return std::exp(-detail::stirling_error(qq) - detail::deviance(qq, q_star)) /
         std::sqrt(2.0 * std::numbers::pi * qq);
}

inline double gaussian_weight(double q_star, std::size_t q) {
  const double d = static_cast<double>(q) - q_star;
  return std::exp(-d * d / (2.0 * q_star)) / std::sqrt(2.0 * std::numbers::pi * q_star);
}

/// Tabulates q = 0 .. ceil(q* + 20 sqrt(q*)) (at least 20).
inline QStarProfile qstar_profile(double q_star) {
  if (!(q_star > 0.0) || !(q_star <= kMaxQStar)) throw InputError("q* must lie in (0, 1e6]");
  QStarProfile p;
  p.q_star = q_star;
  const auto last = static_cast<std::size_t>(std::ceil(q_star + 20.0 * std::sqrt(q_star)));
  const std::size_t hi = last < 20 ? 20 : last;
  p.rows.reserve(hi + 1);
  double best = -1.0, s0 = 0.0, s1 = 0.0;
  for (std::size_t q = 0; q <= hi; ++q) {
    QStarRow r{q, poisson_weight(q_star, q), gaussian_weight(q_star, q)};
    p.max_abs_deviation = std::max(p.max_abs_deviation, std::abs(r.poisson - r.gaussian));
    if (r.poisson > best) {
      best = r.poisson;
      p.argmax = q;
    }
    s0 += r.poisson;
    s1 += r.poisson * static_cast<double>(q);
    p.rows.push_back(r);
  }
  const double mean = s1 / s0;
  double s2 = 0.0;
  for (const auto& r : p.rows) {
    const double d = static_cast<double>(r.q) - mean;
    s2 += r.poisson * d * d;
  }
  p.width = std::sqrt(s2 / s0);
  p.poisson_sum = s0;
  return p;
}

// Displacement of an n-step +-1 walk: exact binomial law, its normal limit, and a simulation.

inline double normal_cdf(double x, double variance) { return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance)); }

/// P(D = 2k - n) = C(n, k) / 2^n.
inline double binomial_displacement_pmf(std::uint64_t n, std::uint64_t k) {
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  return std::exp(std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0) - nn * std::numbers::ln2);
}

/// sup_x |F_n(x) - Phi(x / sqrt n)|, checked on both sides of every jump.
inline double kolmogorov_distance(std::uint64_t n) {
  if (n == 0) throw InputError("steps must be at least 1");
  const double var = static_cast<double>(n);
  double cdf = 0.0, dist = 0.0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    const double x = 2.0 * static_cast<double>(k) - var;
    const double phi = normal_cdf(x, var);
    dist = std::max(dist, std::abs(cdf - phi));
    cdf += binomial_displacement_pmf(n, k);
    dist = std::max(dist, std::abs(cdf - phi));
  }
  return dist;
}

struct CltRow {
  std::int64_t displacement = 0;
  std::uint64_t count = 0;
  double empirical = 0.0;
  double binomial = 0.0;
  /// Normal(0, n) mass on the bin of width 2 around the displacement.
  double gaussian = 0.0;
};

struct CltResult {
  std::uint64_t steps = 0;
  std::uint64_t walkers = 0;
  std::vector<CltRow> rows;
  double empirical_mean = 0.0;
  double kolmogorov = 0.0;
};

/// W walkers of n steps each; step signs come from xorshift64* seeded via SplitMix64.
inline CltResult clt_demo(std::uint64_t steps, std::uint64_t walkers, std::uint64_t seed) {
  if (steps < 1) throw InputError("steps must be at least 1");
  if (walkers < 1) throw InputError("walkers must be at least 1");
  Xorshift64Star rng(seed);
  std::vector<std::uint64_t> counts(steps + 1, 0);  // indexed by number of +1 steps
  double total = 0.0;
  for (std::uint64_t w = 0; w < walkers; ++w) {
    std::uint64_t ups = 0;
    for (std::uint64_t s = 0; s < steps; ++s) ups += rng.sign() > 0 ? 1 : 0;
    ++counts[ups];
    total += 2.0 * static_cast<double>(ups) - static_cast<double>(steps);
  }
  CltResult out;
  out.steps = steps;
  out.walkers = walkers;
  out.empirical_mean = total / static_cast<double>(walkers);
  out.kolmogorov = kolmogorov_distance(steps);
  const double var = static_cast<double>(steps);
  out.rows.reserve(steps + 1);
  for (std::uint64_t k = 0; k <= steps; ++k) {
    CltRow r;
    r.displacement = 2 * static_cast<std::int64_t>(k) - static_cast<std::int64_t>(steps);
    r.count = counts[k];
    r.empirical = static_cast<double>(counts[k]) / static_cast<double>(walkers);
    r.binomial = binomial_displacement_pmf(steps, k);
    const double x = static_cast<double>(r.displacement);
    r.gaussian = normal_cdf(x + 1.0, var) - normal_cdf(x - 1.0, var);
    out.rows.push_back(r);
  }
  return out;
}

}  // namespace dvwalk
