#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"
#include "rng.hpp"
#include "scaled.hpp"

namespace dvwalk {

/// Options fixing the reference shift and the expected spread of the energies.
struct DivDiffOptions {
  /// Reference energy c; the table works with E - c. Defaults to the first pushed energy.
  std::optional<double> center;
  /// Expected max |E - c|. Sizing the product count up front avoids rebuilds while pushing.
  double radius = 0.0;
};

namespace detail {

inline const std::vector<double>& inverse_factorials() {
  static const std::vector<double> table = [] {
    std::vector<double> t(171);
    t[0] = 1.0;
    for (std::size_t k = 1; k < t.size(); ++k) t[k] = t[k - 1] / static_cast<double>(k);
    return t;
  }();
  return table;
}

// Binomial weights C(n,j) (m/(m+1))^j (1/(m+1))^(n-j), j = 0..n, cached by (n, m).
class BinomialWeights {
 public:
  std::span<const double> get(std::size_t n, std::size_t m) {
    if (n >= kCacheLimit) {
      fill(scratch_, n, m);
      return scratch_;
    }
    if (cache_.size() <= n) cache_.resize(n + 1);
    auto& rows = cache_[n];
    while (rows.size() < m) {
      rows.emplace_back();
      fill(rows.back(), n, rows.size());
    }
    return rows[m - 1];
  }

 private:
  static constexpr std::size_t kCacheLimit = 2048;

  static void fill(std::vector<double>& out, std::size_t n, std::size_t m) {
    out.resize(n + 1);
    const double lp = std::log1p(-1.0 / static_cast<double>(m + 1));
    const double lq = -std::log1p(static_cast<double>(m));
    const double nn = static_cast<double>(n);
    const double lfn = std::lgamma(nn + 1.0);
    for (std::size_t j = 0; j <= n; ++j) {
      const double jj = static_cast<double>(j);
      out[j] = std::exp(lfn - std::lgamma(jj + 1.0) - std::lgamma(nn - jj + 1.0) + jj * lp + (nn - jj) * lq);
    }
  }

  std::vector<std::vector<std::vector<double>>> cache_;
  std::vector<double> scratch_;
};

}  // namespace detail

/// Incremental divided differences of s -> e^{tau s} over a growing list of energies.
///
/// The exponential is split as e^{tau c} * g^s with g(x) = e^{sigma (x - c)}, sigma = tau/s,
/// and s chosen so |sigma (E - c)| <= 1 for every energy. Divided differences of g come
/// from a normalised moment series (no subtraction of nearby nodes); the s-fold product is
/// assembled with the Leibniz rule. All per-level quantities are scaled to O(1), with the
/// factor tau^q/q! kept as a mantissa/exponent pair, so thousands of nodes neither underflow
/// nor overflow.
///
/// Every per-level quantity is stored, so pop() restores the previous state exactly.
class DivDiffTable {
 public:
  /// Bound on |sigma (E - c)| per factor.
  static constexpr double kPieceRadius = 1.0;
  static constexpr std::size_t kMoments = 48;

  explicit DivDiffTable(cplx tau, DivDiffOptions opts = {}) {
    if (!std::isfinite(tau.real()) || !std::isfinite(tau.imag())) throw InputError("tau must be finite");
    s_.tau = canonical(tau);
    if (opts.center) set_center(*opts.center);
    s_.pieces = pieces_for(opts.radius);
    s_.sigma = s_.tau / static_cast<double>(s_.pieces);
  }

  void push(double energy) {
    if (!std::isfinite(energy)) throw InputError("energy must be finite");
    if (!s_.has_center) set_center(energy);
    const std::size_t need = pieces_for(std::abs(energy - s_.center));
    if (need > s_.pieces) {
      checkpoints_.emplace_back(s_.nodes.size(), s_);
      rebuild(std::max(need, 2 * s_.pieces));
    }
    append(energy);
  }

  /// Removes the most recently pushed energy.
  void pop() {
    if (s_.nodes.size() < 2) throw InputError("pop requires at least two energies");
    const std::size_t n = s_.nodes.size() - 1;
    if (!checkpoints_.empty() && checkpoints_.back().first == n) {
      s_ = std::move(checkpoints_.back().second);
      checkpoints_.pop_back();
      return;
    }
    s_.nodes.pop_back();
    s_.moments.resize(n * (kMoments + 1));
    s_.prods.resize(n * s_.pieces);
    s_.prefactor.pop_back();
    if (s_.pieces > 1) s_.windows.resize(n * (n + 1) / 2);
  }

  std::size_t size() const { return s_.nodes.size(); }
  bool empty() const { return s_.nodes.empty(); }
  /// q, the divided-difference order (size - 1).
  std::size_t order() const { return s_.nodes.empty() ? 0 : s_.nodes.size() - 1; }
  cplx tau() const { return s_.tau; }
  std::span<const double> energies() const { return s_.nodes; }
  std::size_t pieces() const { return s_.pieces; }

  /// q! tau^{-q} e^{tau[E_0..E_q]}, the O(1) part of the value.
  ScaledComplex normalized() const {
    require_nonempty();
    return s_.base * s_.prods[last_level() * s_.pieces + (s_.pieces - 1)];
  }

  /// e^{tau[E_0..E_q]} with a separate binary exponent.
  ScaledComplex scaled_value() const {
    require_nonempty();
    return normalized() * s_.prefactor.back();
  }

  cplx value() const { return scaled_value().to_complex(); }

 private:
  struct State {
    cplx tau{0.0, 0.0};
    cplx sigma{0.0, 0.0};
    double center = 0.0;
    bool has_center = false;
    std::size_t pieces = 1;
    ScaledComplex base = ScaledComplex::from(1.0);
    std::vector<double> nodes;
    std::vector<cplx> moments;   // per level: v_m = E[(sigma sum t_i y_i)^m], m = 0..kMoments
    std::vector<cplx> windows;   // level n: scaled g[x_j..x_n], j = 0..n (only when pieces > 1)
    std::vector<cplx> prods;     // level n: scaled (g^m)[x_0..x_n], m = 1..pieces
    std::vector<ScaledComplex> prefactor;  // level n: tau^n / n!
  };

  void set_center(double c) {
    if (!std::isfinite(c)) throw InputError("center must be finite");
    s_.center = c;
    s_.has_center = true;
    s_.base = ScaledComplex::exp(s_.tau * c);
  }

  std::size_t pieces_for(double radius) const {
    const double r = std::abs(s_.tau) * radius / kPieceRadius;
    if (!(r > 1.0)) return 1;
    if (r > 1e7) throw InputError("energy spread too large for divided differences");
    return static_cast<std::size_t>(std::ceil(r));
  }

  std::size_t last_level() const { return s_.nodes.size() - 1; }

  void require_nonempty() const {
    if (s_.nodes.empty()) throw InputError("divided difference over an empty energy list");
  }

  void rebuild(std::size_t pieces) {
    std::vector<double> nodes = std::move(s_.nodes);
    s_.nodes.clear();
    s_.moments.clear();
    s_.windows.clear();
    s_.prods.clear();
    s_.prefactor.clear();
    s_.pieces = pieces;
    s_.sigma = s_.tau / static_cast<double>(pieces);
    for (double e : nodes) append(e);
  }

  void append(double energy) {
    const std::size_t n = s_.nodes.size();
    const std::size_t K = kMoments;
    const cplx z = s_.sigma * (energy - s_.center);
    s_.nodes.push_back(energy);

    // Moments of the new node set from the old ones: v'_m = (n v_m + m z v'_{m-1}) / (n + m).
    s_.moments.resize((n + 1) * (K + 1));
    cplx* v = s_.moments.data() + n * (K + 1);
    const cplx* vo = n > 0 ? s_.moments.data() + (n - 1) * (K + 1) : nullptr;
    const double nn = static_cast<double>(n);
    v[0] = 1.0;
    for (std::size_t m = 1; m <= K; ++m) {
      const double mm = static_cast<double>(m);
      const cplx carry = mm * z * v[m - 1];
      v[m] = vo ? (nn * vo[m] + carry) / (nn + mm) : carry / mm;
    }
    const auto& inv_fact = detail::inverse_factorials();
    cplx g = v[0];
    int small = 0;
    for (std::size_t m = 1; m <= K; ++m) {
      const cplx term = v[m] * inv_fact[m];
      g += term;
      small = (std::abs(term) < 1e-18 * std::abs(g)) ? small + 1 : 0;
      if (small == 3) break;
    }

    const std::size_t P = s_.pieces;
    s_.prods.resize((n + 1) * P);
    cplx* pi = s_.prods.data() + n * P;
    pi[0] = g;
    if (P > 1) {
      // New column of windows g[x_j..x_n] by the product-only swap recurrence
      // g[S, x_n] = g[S, x_{j-1}] + (x_n - x_{j-1}) g[x_{j-1}, S, x_n].
      const std::size_t off = n * (n + 1) / 2;
      s_.windows.resize(off + n + 1);
      cplx* w = s_.windows.data() + off;
      const cplx* wo = n > 0 ? s_.windows.data() + (n - 1) * n / 2 : nullptr;
      w[0] = g;
      for (std::size_t j = 1; j < n; ++j) {
        const double dx = energy - s_.nodes[j - 1];
        w[j] = wo[j - 1] + dx * s_.sigma * w[j - 1] / static_cast<double>(n - j + 1);
      }
      if (n > 0) w[n] = std::exp(z);
      for (std::size_t m = 1; m < P; ++m) {
        const auto b = weights_.get(n, m);
        cplx acc = 0.0;
        for (std::size_t j = 0; j <= n; ++j) acc += b[j] * s_.prods[j * P + (m - 1)] * w[j];
        pi[m] = acc;
      }
    }

    if (n == 0)
      s_.prefactor.push_back(ScaledComplex::from(1.0));
    else
      s_.prefactor.push_back(s_.prefactor.back() * (s_.tau / nn));
  }

  State s_;
  std::vector<std::pair<std::size_t, State>> checkpoints_;
  detail::BinomialWeights weights_;
};

inline void require_energies(std::span<const double> energies) {
  if (energies.empty()) throw InputError("energy list must be nonempty");
  for (double e : energies)
    if (!std::isfinite(e)) throw InputError("energy list has NaN/Inf");
}

/// Mean and population variance (divisor q+1).
struct StatsSummary {
  double mu = 0.0;
  double sigma2 = 0.0;
};

inline StatsSummary stats(std::span<const double> x) {
  require_energies(x);
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double s2 = 0.0;
  for (double v : x) s2 += (v - mu) * (v - mu);
  return {mu, s2 / static_cast<double>(x.size())};
}

namespace detail {

inline DivDiffTable batch_table(std::span<const double> energies, cplx tau) {
  require_energies(energies);
  const double mu = stats(energies).mu;
  double radius = 0.0;
  for (double e : energies) radius = std::max(radius, std::abs(e - mu));
  DivDiffTable t(tau, DivDiffOptions{mu, radius});
  for (double e : energies) t.push(e);
  return t;
}

}  // namespace detail

/// Divided difference of s -> e^{tau s} over the energies, centred on their mean.
inline cplx exp_divdiff(std::span<const double> energies, cplx tau) {
  return detail::batch_table(energies, tau).value();
}

inline ScaledComplex exp_divdiff_scaled(std::span<const double> energies, cplx tau) {
  return detail::batch_table(energies, tau).scaled_value();
}

/// e^{tau delta} e^{tau[E]}, equal to e^{tau[E + delta]}.
inline cplx shift(std::span<const double> energies, double delta, cplx tau) {
  if (!std::isfinite(delta)) throw InputError("shift must be finite");
  return std::exp(tau * delta) * exp_divdiff(energies, tau);
}

/// Both sides of e^{[-beta x_0..-beta x_q]} = (-beta)^{-q} e^{-beta[x_0..x_q]}.
inline std::pair<cplx, cplx> scaling_identity_check(std::span<const double> energies, double beta) {
  require_energies(energies);
  const std::size_t q = energies.size() - 1;
  if (beta == 0.0 && q > 0) throw InputError("scaling identity needs beta != 0");
  std::vector<double> scaled(energies.begin(), energies.end());
  for (double& e : scaled) e *= -beta;
  const cplx lhs = exp_divdiff(scaled, 1.0);
  ScaledComplex rhs = exp_divdiff_scaled(energies, -beta);
  for (std::size_t k = 0; k < q; ++k) rhs = rhs * cplx(-1.0 / beta, 0.0);
  return {lhs, rhs.to_complex()};
}

/// mu + sigma^2 / (2(q+2)), the large-q estimate of log(q! e^{[x_0..x_q]}).
inline double asymptotic_estimate(std::span<const double> energies) {
  const auto s = stats(energies);
  const double q = static_cast<double>(energies.size() - 1);
  return s.mu + s.sigma2 / (2.0 * (q + 2.0));
}

/// log(q! e^{[x_0..x_q]}) computed exactly through the table's normalised value.
inline double log_factorial_divdiff(std::span<const double> energies) {
  return detail::batch_table(energies, 1.0).normalized().log_abs();
}

struct MonteCarloEstimate {
  cplx value;
  double std_error = 0.0;
};

/// Simplex-integral estimate of e^{tau[E_0..E_q]}: tau^q/q! times the mean of
/// e^{tau sum t_i E_i} over uniform points of the simplex. Test oracle for q <= 5.
inline MonteCarloEstimate hermite_genocchi_oracle(std::span<const double> energies, cplx tau, std::size_t samples,
                                                  std::uint64_t seed = 0) {
  require_energies(energies);
  if (energies.size() > 6) throw InputError("Hermite-Genocchi oracle supports at most 6 energies");
  if (energies.size() == 1) return {std::exp(tau * energies[0]), 0.0};
  if (samples < 100000) throw InputError("Hermite-Genocchi oracle needs at least 1e5 samples");
  const std::size_t q = energies.size() - 1;
  Xorshift64Star rng(seed);
  double sr = 0.0, si = 0.0, sr2 = 0.0, si2 = 0.0;
  std::vector<double> t(energies.size());
  for (std::size_t k = 0; k < samples; ++k) {
    double total = 0.0;
    for (auto& ti : t) {
      ti = -std::log(rng.uniform_open0());
      total += ti;
    }
    double arg = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) arg += t[i] / total * energies[i];
    const cplx f = std::exp(tau * arg);
    sr += f.real();
    si += f.imag();
    sr2 += f.real() * f.real();
    si2 += f.imag() * f.imag();
  }
  const double n = static_cast<double>(samples);
  const cplx mean(sr / n, si / n);
  const double var = (sr2 / n - mean.real() * mean.real()) + (si2 / n - mean.imag() * mean.imag());
  cplx scale = 1.0;
  for (std::size_t k = 1; k <= q; ++k) scale *= tau / static_cast<double>(k);
  return {scale * mean, std::abs(scale) * std::sqrt(std::max(var, 0.0) / n)};
}

}  // namespace dvwalk
