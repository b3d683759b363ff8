#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include <dvwalk/pmr.hpp>
#include <dvwalk/rng.hpp>

namespace dvwalk::fixtures {

/// Hermitian PMR systems with |E| <= 1 and hops at most 1/M in magnitude, so the row-sum
/// norm is at most 2. Terms are fixed-point-free involutions (self-adjoint on their own) or
/// pairs (P, P^-1) whose coefficients are conjugate mirrors.
inline Permutation random_matching(Xorshift64Star& g, std::size_t n) {
  std::vector<BasisIndex> order(n), map(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[g.below(i)]);
  for (std::size_t i = 0; i + 1 < n; i += 2) {
    map[order[i]] = order[i + 1];
    map[order[i + 1]] = order[i];
  }
  return Permutation(map);
}

inline Permutation random_derangement(Xorshift64Star& g, std::size_t n) {
  for (;;) {
    std::vector<BasisIndex> map(n);
    std::iota(map.begin(), map.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(map[i - 1], map[g.below(i)]);
    Permutation p(map);
    if (p.is_fixed_point_free()) return p;
  }
}

inline cplx random_hop(Xorshift64Star& g, double gamma_max, double density) {
  if (g.uniform() >= density) return 0.0;
  return std::polar(g.uniform(0.0, gamma_max), g.uniform(0.0, 6.283185307179586));
}

inline PmrHamiltonian random_hermitian_pmr(Xorshift64Star& g, std::size_t dim, std::size_t terms,
                                           double density = 0.8) {
  const double gamma_max = terms ? 1.0 / static_cast<double>(terms) : 0.0;
  for (;;) {
    std::vector<double> d0(dim);
    for (auto& e : d0) e = g.uniform(-1.0, 1.0);
    std::vector<PmrTerm> out;
    std::size_t left = terms;
    while (left > 0) {
      const bool pair = left >= 2 && (dim % 2 == 1 || g.uniform() < 0.5) && dim >= 3;
      if (pair) {
        Permutation p = random_derangement(g, dim);
        if (p == p.inverse()) continue;
        std::vector<cplx> cp(dim), cq(dim);
        for (BasisIndex z = 0; z < dim; ++z) {
          cp[p(z)] = random_hop(g, gamma_max, density);
          cq[z] = std::conj(cp[p(z)]);
        }
        out.push_back({p.inverse(), DiagonalOp{std::move(cq)}});
        out.push_back({std::move(p), DiagonalOp{std::move(cp)}});
        left -= 2;
      } else {
        Permutation p = random_matching(g, dim);
        std::vector<cplx> c(dim);
        for (BasisIndex z = 0; z < dim; ++z)
          if (z < p(z)) {
            c[p(z)] = random_hop(g, gamma_max, density);
            c[z] = std::conj(c[p(z)]);
          }
        out.push_back({std::move(p), DiagonalOp{std::move(c)}});
        left -= 1;
      }
    }
    bool distinct = true;
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t b = a + 1; b < out.size(); ++b) distinct = distinct && !(out[a].perm == out[b].perm);
    if (distinct) return PmrHamiltonian(std::move(d0), std::move(out));
  }
}

/// dim in [2, max_dim] and M in [1, max_terms], respecting parity (odd dim needs paired terms).
inline PmrHamiltonian random_system(Xorshift64Star& g, std::size_t max_dim, std::size_t max_terms) {
  for (;;) {
    const std::size_t dim = 2 + g.below(max_dim - 1);
    std::size_t m = 1 + g.below(max_terms);
    if (dim % 2 == 1 && m % 2 == 1) continue;
    if (dim == 2) m = 1;
    return random_hermitian_pmr(g, dim, m);
  }
}

}  // namespace dvwalk::fixtures
