#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dense.hpp"
#include "error.hpp"

namespace dvwalk {

using BasisIndex = std::size_t;

/// Bijection on {0..dim-1}; map[z] is the image of z.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<BasisIndex> map) : map_(std::move(map)) {
    std::vector<char> seen(map_.size(), 0);
    for (BasisIndex z : map_) {
      if (z >= map_.size() || seen[z]) throw InputError("permutation map is not a bijection");
      seen[z] = 1;
    }
  }

  static Permutation identity(std::size_t dim) {
    std::vector<BasisIndex> m(dim);
    std::iota(m.begin(), m.end(), BasisIndex{0});
    return Permutation(std::move(m));
  }

  /// Cyclic shift z -> z + k mod dim.
  static Permutation shift(std::size_t dim, std::ptrdiff_t k) {
    std::vector<BasisIndex> m(dim);
    const auto n = static_cast<std::ptrdiff_t>(dim);
    for (std::ptrdiff_t z = 0; z < n; ++z) m[z] = static_cast<BasisIndex>(((z + k) % n + n) % n);
    return Permutation(std::move(m));
  }

  std::size_t dim() const { return map_.size(); }
  BasisIndex operator()(BasisIndex z) const { return map_[z]; }
  const std::vector<BasisIndex>& map() const { return map_; }

  bool is_identity() const {
    for (std::size_t z = 0; z < map_.size(); ++z)
      if (map_[z] != z) return false;
    return true;
  }

  bool is_fixed_point_free() const {
    for (std::size_t z = 0; z < map_.size(); ++z)
      if (map_[z] == z) return false;
    return true;
  }

  Permutation inverse() const {
    std::vector<BasisIndex> inv(map_.size());
    for (std::size_t z = 0; z < map_.size(); ++z) inv[map_[z]] = z;
    return Permutation(std::move(inv));
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<BasisIndex> map_;
};

/// Diagonal coefficients indexed by the landing state: coeff[z'] = d_j(z').
struct DiagonalOp {
  std::vector<cplx> coeff;

  friend bool operator==(const DiagonalOp&, const DiagonalOp&) = default;
};

struct PmrTerm {
  Permutation perm;
  DiagonalOp diag;

  friend bool operator==(const PmrTerm&, const PmrTerm&) = default;
};

/// H = D0 + sum_j D_j P_j over an explicit basis of size dim.
class PmrHamiltonian {
 public:
  PmrHamiltonian() = default;

  PmrHamiltonian(std::vector<double> d0, std::vector<PmrTerm> terms) : d0_(std::move(d0)), terms_(std::move(terms)) {
    validate();
  }

  std::size_t dim() const { return d0_.size(); }
  std::size_t num_terms() const { return terms_.size(); }
  const std::vector<double>& d0() const { return d0_; }
  const std::vector<PmrTerm>& terms() const { return terms_; }
  const PmrTerm& term(std::size_t j) const { return terms_.at(j); }

  /// Largest hop strength |d_j(z)| over all terms and states.
  double max_hop() const {
    double g = 0.0;
    for (const auto& t : terms_)
      for (const auto& c : t.diag.coeff) g = std::max(g, std::abs(c));
    return g;
  }

  double max_abs_energy() const {
    double e = 0.0;
    for (double x : d0_) e = std::max(e, std::abs(x));
    return e;
  }

  CMatrix to_dense() const {
    CMatrix m = CMatrix::diagonal(d0_);
    for (const auto& t : terms_)
      for (std::size_t z = 0; z < dim(); ++z) {
        const BasisIndex zp = t.perm(z);
        m(zp, z) += t.diag.coeff[zp];
      }
    return m;
  }

  friend bool operator==(const PmrHamiltonian&, const PmrHamiltonian&) = default;

 private:
  void validate() const {
    const std::size_t n = d0_.size();
    if (n == 0) throw InputError("PMR Hamiltonian needs dim >= 1");
    for (double e : d0_)
      if (!std::isfinite(e)) throw InputError("non-finite diagonal energy");
    for (std::size_t j = 0; j < terms_.size(); ++j) {
      const auto& t = terms_[j];
      if (t.perm.dim() != n || t.diag.coeff.size() != n)
        throw InputError("term " + std::to_string(j) + " has wrong dimension");
      if (!t.perm.is_fixed_point_free())
        throw InputError("term " + std::to_string(j) + " permutation has a fixed point");
      for (const auto& c : t.diag.coeff)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
          throw InputError("term " + std::to_string(j) + " has a non-finite coefficient");
      for (std::size_t k = 0; k < j; ++k)
        if (terms_[k].perm == t.perm)
          throw InputError("terms " + std::to_string(k) + " and " + std::to_string(j) + " share a permutation");
    }
  }

  std::vector<double> d0_;
  std::vector<PmrTerm> terms_;
};

/// Entries below this magnitude do not seed permutations during decomposition.
inline constexpr double kStructuralZero = 1e-15;

namespace detail {

// Completes a partial injective assignment to a fixed-point-free bijection; released
// entries (at most one) are returned to the caller's pool.
inline std::vector<std::pair<BasisIndex, BasisIndex>> complete_derangement(std::vector<BasisIndex>& map,
                                                                       std::vector<char>& carries) {
  const std::size_t n = map.size();
  constexpr BasisIndex none = static_cast<BasisIndex>(-1);
  std::vector<std::pair<BasisIndex, BasisIndex>> released;
  auto free_sets = [&](std::vector<BasisIndex>& src, std::vector<BasisIndex>& dst) {
    src.clear();
    dst.clear();
    std::vector<char> hit(n, 0);
    for (std::size_t z = 0; z < n; ++z) {
      if (map[z] == none)
        src.push_back(z);
      else
        hit[map[z]] = 1;
    }
    for (std::size_t z = 0; z < n; ++z)
      if (!hit[z]) dst.push_back(z);
  };
  std::vector<BasisIndex> src, dst;
  free_sets(src, dst);
  if (src.size() == 1 && src[0] == dst[0]) {
    // Single leftover would be a fixed point: give back one carried entry and re-route.
    for (std::size_t a = 0; a < n; ++a) {
      if (map[a] != none && carries[a]) {
        released.emplace_back(map[a], a);
        map[a] = none;
        carries[a] = 0;
        break;
      }
    }
    free_sets(src, dst);
  }
  for (std::size_t i = 0; i < src.size(); ++i) map[src[i]] = dst[i];
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (map[src[i]] != src[i]) continue;
    const std::size_t k = (i + 1 < src.size()) ? i + 1 : i - 1;
    std::swap(map[src[i]], map[src[k]]);
  }
  return released;
}

}  // namespace detail

/// Decomposes a dense matrix into PMR form: d0 = diagonal, off-diagonal entries greedily
/// packed row by row into fixed-point-free permutations completed with zero coefficients.
/// Deterministic in the input ordering.
inline PmrHamiltonian from_dense(const CMatrix& a) {
  const std::size_t n = a.dim();
  if (n == 0) throw InputError("empty matrix");
  if (!a.all_finite()) throw InputError("matrix has NaN/Inf entries");
  std::vector<double> d0(n);
  for (std::size_t z = 0; z < n; ++z) {
    if (a(z, z).imag() != 0.0) throw InputError("diagonal entry " + std::to_string(z) + " is not real");
    d0[z] = a(z, z).real();
  }

  // pending[row] holds columns with uncovered significant entries; entry (row, col) means
  // a hop col -> row with coefficient a(row, col).
  std::vector<std::vector<BasisIndex>> pending(n);
  std::size_t remaining = 0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (r != c && std::abs(a(r, c)) >= kStructuralZero) {
        pending[r].push_back(c);
        ++remaining;
      }

  std::vector<PmrTerm> terms;
  auto absorb = [&](PmrTerm& t) {
    for (std::size_t r = 0; r < n; ++r) {
      auto& cols = pending[r];
      for (auto it = cols.begin(); it != cols.end();) {
        if (t.perm(*it) == r && t.diag.coeff[r] == cplx(0.0, 0.0)) {
          t.diag.coeff[r] = a(r, *it);
          it = cols.erase(it);
          --remaining;
        } else {
          ++it;
        }
      }
    }
  };

  constexpr BasisIndex none = static_cast<BasisIndex>(-1);
  while (remaining > 0) {
    std::vector<BasisIndex> map(n, none);
    std::vector<char> carries(n, 0);
    std::vector<char> used_target(n, 0);
    std::vector<std::pair<BasisIndex, BasisIndex>> taken;
    for (std::size_t r = 0; r < n; ++r) {
      auto& cols = pending[r];
      for (auto it = cols.begin(); it != cols.end(); ++it) {
        if (map[*it] == none && !used_target[r]) {
          map[*it] = r;
          carries[*it] = 1;
          used_target[r] = 1;
          taken.emplace_back(r, *it);
          cols.erase(it);
          --remaining;
          break;
        }
      }
    }
    for (const auto& [r, c] : detail::complete_derangement(map, carries)) {
      auto& cols = pending[r];
      cols.insert(std::lower_bound(cols.begin(), cols.end(), c), c);
      ++remaining;
    }
    PmrTerm t{Permutation(map), DiagonalOp{std::vector<cplx>(n, cplx(0.0, 0.0))}};
    for (std::size_t z = 0; z < n; ++z)
      if (carries[z]) t.diag.coeff[t.perm(z)] = a(t.perm(z), z);
    // Zero-completed positions of earlier terms can host later entries; keeps maps distinct.
    for (auto& prev : terms) absorb(prev);
    absorb(t);
    terms.push_back(std::move(t));
  }
  return PmrHamiltonian(std::move(d0), std::move(terms));
}

/// Returns (z', d_j(z')) with z' = P_j(z).
inline std::pair<BasisIndex, cplx> apply_term(const PmrHamiltonian& h, std::size_t j, BasisIndex z) {
  if (j >= h.num_terms()) throw InputError("term index " + std::to_string(j) + " out of range");
  if (z >= h.dim()) throw InputError("basis index " + std::to_string(z) + " out of range");
  const auto& t = h.term(j);
  const BasisIndex zp = t.perm(z);
  return {zp, t.diag.coeff[zp]};
}

inline bool validate_hermitian(const PmrHamiltonian& h, double tol) {
  const CMatrix m = h.to_dense();
  return max_abs_diff(m, m.adjoint()) <= tol;
}

// JSON: { "dim": int, "d0": [real], "terms": [ { "map": [int], "coeff": [[re, im]] } ] }

inline nlohmann::json to_json(const PmrHamiltonian& h) {
  nlohmann::json j;
  j["dim"] = h.dim();
  j["d0"] = h.d0();
  j["terms"] = nlohmann::json::array();
  for (const auto& t : h.terms()) {
    nlohmann::json jt;
    jt["map"] = t.perm.map();
    auto coeff = nlohmann::json::array();
    for (const auto& c : t.diag.coeff) coeff.push_back({c.real(), c.imag()});
    jt["coeff"] = std::move(coeff);
    j["terms"].push_back(std::move(jt));
  }
  return j;
}

inline PmrHamiltonian pmr_from_json(const nlohmann::json& j) {
  try {
    const auto dim = j.at("dim").get<std::size_t>();
    auto d0 = j.at("d0").get<std::vector<double>>();
    if (d0.size() != dim) throw InputError("d0 length does not match dim");
    std::vector<PmrTerm> terms;
    for (const auto& jt : j.at("terms")) {
      auto map = jt.at("map").get<std::vector<BasisIndex>>();
      std::vector<cplx> coeff;
      for (const auto& c : jt.at("coeff")) {
        if (!c.is_array() || c.size() != 2) throw InputError("coefficient must be [re, im]");
        coeff.emplace_back(c[0].get<double>(), c[1].get<double>());
      }
      terms.push_back({Permutation(std::move(map)), DiagonalOp{std::move(coeff)}});
    }
    return PmrHamiltonian(std::move(d0), std::move(terms));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad PMR JSON: ") + e.what());
  }
}

// Dense matrix JSON: { "dim": int, "re": [[..]], "im": [[..]] } ("im" optional).

inline CMatrix dense_from_json(const nlohmann::json& j) {
  try {
    const auto dim = j.at("dim").get<std::size_t>();
    const auto re = j.at("re").get<std::vector<std::vector<double>>>();
    std::vector<std::vector<double>> im;
    if (j.contains("im")) im = j.at("im").get<std::vector<std::vector<double>>>();
    if (dim == 0 || re.size() != dim || (!im.empty() && im.size() != dim))
      throw InputError("dense matrix is not square");
    CMatrix m(dim);
    for (std::size_t r = 0; r < dim; ++r) {
      if (re[r].size() != dim || (!im.empty() && im[r].size() != dim)) throw InputError("dense matrix is not square");
      for (std::size_t c = 0; c < dim; ++c) m(r, c) = cplx(re[r][c], im.empty() ? 0.0 : im[r][c]);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad dense-matrix JSON: ") + e.what());
  }
}

inline nlohmann::json to_json(const CMatrix& m) {
  nlohmann::json j;
  j["dim"] = m.dim();
  std::vector<std::vector<double>> re(m.dim(), std::vector<double>(m.dim())), im = re;
  for (std::size_t r = 0; r < m.dim(); ++r)
    for (std::size_t c = 0; c < m.dim(); ++c) {
      re[r][c] = m(r, c).real();
      im[r][c] = m(r, c).imag();
    }
  j["re"] = re;
  j["im"] = im;
  return j;
}

}  // namespace dvwalk
