#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "oracle.hpp"
#include "pmr.hpp"
#include "potential.hpp"
#include "walksum.hpp"

namespace dvwalk {

enum class Boundary { Ring, Open };

/// 1-D particle on L sites with spacing a (hbar = 1). Site j sits at x_j = (j - L/2) a.
struct LatticeSpec {
  double mass = 1.0;
  double spacing = 1.0;
  std::size_t sites = 3;
  Boundary boundary = Boundary::Ring;
  PotentialExpr potential;

  double hop() const { return -1.0 / (2.0 * mass * spacing * spacing); }
  double kinetic_onsite() const { return 1.0 / (mass * spacing * spacing); }
  double position(std::size_t j) const {
    return (static_cast<double>(j) - static_cast<double>(sites) / 2.0) * spacing;
  }
  double box_length() const { return static_cast<double>(sites) * spacing; }
};

/// Potentials beyond this magnitude at any site are rejected.
inline constexpr double kMaxPotential = 1e12;

inline void validate(const LatticeSpec& s) {
  if (!(s.mass > 0.0) || !std::isfinite(s.mass)) throw InputError("mass must be positive");
  if (!(s.spacing > 0.0) || !std::isfinite(s.spacing)) throw InputError("spacing must be positive");
  if (s.sites < 3) throw InputError("lattice needs at least 3 sites");
}

/// H_a = -1/(2 m a^2) (P+ + P-) + sum_j (V(x_j) + 1/(m a^2)) |j><j|. Open boundaries keep the
/// cyclic shifts but give the wrap-around hops zero weight.
inline PmrHamiltonian build(const LatticeSpec& s) {
  validate(s);
  const std::size_t L = s.sites;
  std::vector<double> d0(L);
  for (std::size_t j = 0; j < L; ++j) {
    double v = 0.0;
    try {
      v = s.potential(s.position(j));
    } catch (const EvalError& e) {
      throw InputError("potential at site " + std::to_string(j) + ": " + e.what());
    }
    if (!std::isfinite(v) || std::abs(v) > kMaxPotential)
      throw InputError("potential out of range at site " + std::to_string(j));
    d0[j] = v + s.kinetic_onsite();
  }
  const cplx t = s.hop();
  std::vector<cplx> up(L, t), down(L, t);
  if (s.boundary == Boundary::Open) {
    up[0] = 0.0;        // P+ : L-1 -> 0
    down[L - 1] = 0.0;  // P- : 0 -> L-1
  }
  std::vector<PmrTerm> terms;
  terms.push_back({Permutation::shift(L, +1), DiagonalOp{std::move(up)}});
  terms.push_back({Permutation::shift(L, -1), DiagonalOp{std::move(down)}});
  return PmrHamiltonian(std::move(d0), std::move(terms));
}

/// Order at which the walk-length weight concentrates: beta / (m a^2).
inline double q_star(const LatticeSpec& s, double beta) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  return beta / (s.mass * s.spacing * s.spacing);
}

/// Spectrum of the V = 0 lattice: ring (1 - cos(2 pi k / L)) / (m a^2), k = 0..L-1;
/// open chain (1 - cos(pi k / (L+1))) / (m a^2), k = 1..L.
inline std::vector<double> free_spectrum(const LatticeSpec& s) {
  validate(s);
  const std::size_t L = s.sites;
  const double scale = s.kinetic_onsite();
  std::vector<double> e(L);
  for (std::size_t k = 0; k < L; ++k) {
    const double kk = static_cast<double>(k);
    e[k] = s.boundary == Boundary::Ring
               ? scale * (1.0 - std::cos(2.0 * std::numbers::pi * kk / static_cast<double>(L)))
               : scale * (1.0 - std::cos(std::numbers::pi * (kk + 1.0) / static_cast<double>(L + 1)));
  }
  return e;
}

enum class ReferenceKind { Free, Harmonic, Oracle };

inline ReferenceKind reference_from_string(const std::string& s) {
  if (s == "free") return ReferenceKind::Free;
  if (s == "harmonic") return ReferenceKind::Harmonic;
  if (s == "oracle") return ReferenceKind::Oracle;
  throw InputError("unknown reference '" + s + "' (expected free|harmonic|oracle)");
}

/// Dense-oracle Tr e^{-beta H_a}.
inline double lattice_partition_oracle(const LatticeSpec& s, double beta) {
  const PmrHamiltonian h = build(s);
  if (h.dim() > kOracleMaxDim) throw InputError("lattice too large for the dense oracle");
  return trace_expm_eig(h.to_dense(), -beta).real();
}

/// Constant V only: lattice-exact sum e^{-beta V} sum_k e^{-beta E_k}.
inline double free_reference(const LatticeSpec& s, double beta) {
  const double v0 = s.potential(0.0);
  for (std::size_t j = 0; j < s.sites; ++j)
    if (s.potential(s.position(j)) != v0) throw ReferenceError("free reference needs a constant potential");
  double z = 0.0;
  for (double e : free_spectrum(s)) z += std::exp(-beta * (e + v0));
  return z;
}

/// V(x) = V0 + k x^2 / 2 only: e^{-beta V0} / (2 sinh(beta omega / 2)), omega = sqrt(k/m).
inline double harmonic_reference(const LatticeSpec& s, double beta) {
  const auto& v = s.potential;
  const double v0 = v(0.0);
  const double k = v(1.0) + v(-1.0) - 2.0 * v0;
  if (!(k > 0.0)) throw ReferenceError("harmonic reference needs a confining quadratic potential");
  for (double x : {0.5, -1.5, 2.0, 3.25, -4.0, 7.5}) {
    const double expect = v0 + 0.5 * k * x * x;
    if (std::abs(v(x) - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
      throw ReferenceError("harmonic reference needs V(x) = V0 + k x^2 / 2");
  }
  const double omega = std::sqrt(k / s.mass);
  return std::exp(-beta * v0) / (2.0 * std::sinh(beta * omega / 2.0));
}

/// Template resized to spacing a with the box length held fixed.
inline LatticeSpec at_spacing(const LatticeSpec& tmpl, double a) {
  LatticeSpec s = tmpl;
  s.spacing = a;
  s.sites = static_cast<std::size_t>(std::llround(tmpl.box_length() / a));
  validate(s);
  return s;
}

struct SweepRow {
  double a = 0.0;
  double z_lattice = 0.0;
  double z_reference = 0.0;
  double abs_error = 0.0;
  /// Walk-sum value of Z_a, present when the expansion converges under the walk cap.
  std::optional<WalkSumResult> walk_sum;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Steps where the error failed to decrease.
  std::size_t non_monotone_steps = 0;
  /// Errors decrease, allowing one non-monotone step.
  bool converging = true;
};

struct SweepOptions {
  double walk_tol = 1e-8;
  std::uint64_t walk_cap = 1'000'000;
  std::size_t threads = 0;
};

/// Z_a over decreasing spacings at fixed box length, against a continuum reference.
inline SweepResult continuum_sweep(const LatticeSpec& tmpl, double beta, const std::vector<double>& spacings,
                                   ReferenceKind ref, const SweepOptions& opts = {}) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  if (spacings.empty()) throw InputError("no spacings given");
  for (std::size_t i = 0; i < spacings.size(); ++i) {
    if (!(spacings[i] > 0.0)) throw InputError("spacings must be positive");
    if (i > 0 && !(spacings[i] < spacings[i - 1])) throw InputError("spacings must be strictly decreasing");
  }
  std::optional<double> fine;
  if (ref == ReferenceKind::Oracle) fine = lattice_partition_oracle(at_spacing(tmpl, spacings.back() / 2.0), beta);

  SweepResult out;
  for (double a : spacings) {
    const LatticeSpec s = at_spacing(tmpl, a);
    SweepRow row;
    row.a = a;
    row.z_lattice = lattice_partition_oracle(s, beta);
    switch (ref) {
      case ReferenceKind::Free: row.z_reference = free_reference(s, beta); break;
      case ReferenceKind::Harmonic: row.z_reference = harmonic_reference(s, beta); break;
      case ReferenceKind::Oracle: row.z_reference = *fine; break;
    }
    row.abs_error = std::abs(row.z_lattice - row.z_reference);

    const PmrHamiltonian h = build(s);
    const cplx tau = tau_from_beta(beta);
    try {
      const std::size_t order = auto_order(h, tau, opts.walk_tol / static_cast<double>(h.dim()));
      if (detail::saturating_walk_bound(h.dim(), h.num_terms(), order) <= opts.walk_cap) {
        EvalRequest req;
        req.tau = tau;
        req.q_max = order;
        req.tol = opts.walk_tol;
        req.walk_cap = opts.walk_cap;
        req.threads = opts.threads;
        row.walk_sum = partition_function(h, req);
      }
    } catch (const ConvergenceError&) {
    }
    out.rows.push_back(std::move(row));
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (!(out.rows[i].abs_error < out.rows[i - 1].abs_error)) ++out.non_monotone_steps;
  out.converging = out.non_monotone_steps <= 1;
  return out;
}

// Spec file: { "mass": real, "spacing": real, "sites": int, "boundary": "ring"|"open", "potential": "text" }

inline LatticeSpec lattice_from_json(const nlohmann::json& j) {
  try {
    LatticeSpec s;
    s.mass = j.at("mass").get<double>();
    s.spacing = j.at("spacing").get<double>();
    s.sites = j.at("sites").get<std::size_t>();
    const auto b = j.value("boundary", std::string("ring"));
    if (b == "ring")
      s.boundary = Boundary::Ring;
    else if (b == "open")
      s.boundary = Boundary::Open;
    else
      throw InputError("boundary must be \"ring\" or \"open\"");
    s.potential = parse_potential(j.value("potential", std::string("0")));
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad lattice spec JSON: ") + e.what());
  } catch (const ParseError& e) {
    throw InputError(std::string("bad potential: ") + e.what());
  }
}

inline nlohmann::json to_json(const LatticeSpec& s) {
  return {{"mass", s.mass},
          {"spacing", s.spacing},
          {"sites", s.sites},
          {"boundary", s.boundary == Boundary::Ring ? "ring" : "open"},
          {"potential", s.potential.source()}};
}

}  // namespace dvwalk
