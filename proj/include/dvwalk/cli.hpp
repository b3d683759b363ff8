#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "demos.hpp"
#include "error.hpp"
#include "lattice.hpp"
#include "oracle.hpp"
#include "pmr.hpp"
#include "walksum.hpp"

namespace dvwalk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNotConverged = 3;
inline constexpr int kExitNoReference = 4;

/// 17 significant digits, '.' separator regardless of locale.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write to '" + path + "' failed");
}

inline void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("bad number '" + item + "' in list");
    }
  }
  if (out.empty()) throw InputError("empty list");
  return out;
}

struct EvalFlags {
  std::string pmr, output;
  std::optional<double> beta, time;
  std::optional<double> tol;
  std::optional<std::size_t> q_max;
  std::uint64_t walk_cap = kDefaultWalkCap;
  bool oracle = false;
  BasisIndex from = 0, to = 0;
};

inline constexpr double kDefaultTol = 1e-10;

inline void add_eval_flags(CLI::App* cmd, EvalFlags& f, bool endpoints) {
  cmd->add_option("--pmr", f.pmr, "PMR Hamiltonian JSON")->required();
  cmd->add_option("--output", f.output, "result JSON")->required();
  auto* b = cmd->add_option("--beta", f.beta, "inverse temperature, tau = -beta");
  auto* t = cmd->add_option("--time", f.time, "real time, tau = -i t");
  b->excludes(t);
  auto* tol = cmd->add_option("--tol", f.tol, "target tail bound (default 1e-10)");
  auto* q = cmd->add_option("--qmax", f.q_max, "fixed truncation order");
  tol->excludes(q);
  cmd->add_option("--walk-cap", f.walk_cap, "maximum walk prefixes");
  cmd->add_flag("--oracle", f.oracle, "compare against the dense oracle");
  if (endpoints) {
    cmd->add_option("--from", f.from, "initial basis state")->required();
    cmd->add_option("--to", f.to, "final basis state")->required();
  }
}

inline int run_eval(const EvalFlags& f, bool trace, std::ostream& out) {
  if (f.beta.has_value() == f.time.has_value()) throw InputError("give exactly one of --beta or --time");
  if (trace && f.beta && !(*f.beta > 0.0)) throw InputError("beta must be positive");
  const PmrHamiltonian h = pmr_from_json(read_json(f.pmr));
  EvalRequest req;
  req.tau = f.beta ? tau_from_beta(*f.beta) : tau_from_time(*f.time);
  req.q_max = f.q_max;
  req.tol = f.q_max ? f.tol.value_or(0.0) : f.tol.value_or(kDefaultTol);
  if (!f.q_max && !(req.tol > 0.0)) throw InputError("tolerance must be positive");
  req.walk_cap = f.walk_cap;
  if (!trace) req.endpoints = Endpoints{f.from, f.to};
  const WalkSumResult r = trace ? partition_function(h, req) : matrix_element(h, req);

  nlohmann::json j = to_json(r);
  out << "value = " << fmt(r.value.real()) << (r.value.imag() < 0 ? " - " : " + ") << fmt(std::abs(r.value.imag()))
      << "i\n";
  out << "q_max = " << r.q_max << ", walks = " << r.walks_evaluated << ", tail_bound = " << fmt(r.tail_bound)
      << ", converged = " << (r.converged ? "true" : "false") << "\n";
  if (f.oracle) {
    if (h.dim() > kOracleMaxDim) throw InputError("dimension too large for the dense oracle");
    const CMatrix u = expm_eig(h.to_dense(), req.tau);
    const cplx ref = trace ? u.trace() : u(f.to, f.from);
    const double diff = std::abs(ref - r.value);
    j["oracle"] = {{"value", {ref.real(), ref.imag()}}, {"abs_diff", diff}};
    out << "oracle = " << fmt(ref.real()) << (ref.imag() < 0 ? " - " : " + ") << fmt(std::abs(ref.imag()))
        << "i, |difference| = " << fmt(diff) << "\n";
  }
  write_json(f.output, j);
  return r.converged ? kExitOk : kExitNotConverged;
}

inline int run_decompose(const std::string& input, const std::string& output, bool verify, std::ostream& out) {
  const CMatrix a = dense_from_json(read_json(input));
  const PmrHamiltonian h = from_dense(a);
  write_json(output, to_json(h));
  out << "M = " << h.num_terms() << "\n";
  for (std::size_t j = 0; j < h.num_terms(); ++j) {
    std::size_t nz = 0;
    for (const auto& c : h.term(j).diag.coeff) nz += c != cplx(0.0, 0.0);
    out << "term " << j << ": " << nz << " nonzeros\n";
  }
  if (verify) out << "max reassembly error = " << fmt(max_abs_diff(h.to_dense(), a)) << "\n";
  return kExitOk;
}

inline int run_sweep(const std::string& spec_path, double beta, const std::string& spacings, const std::string& ref,
                     const std::string& output, std::ostream& out) {
  const LatticeSpec tmpl = lattice_from_json(read_json(spec_path));
  const ReferenceKind kind = reference_from_string(ref);
  const SweepResult res = continuum_sweep(tmpl, beta, parse_list(spacings), kind);
  std::string csv = "a,Z_lattice,Z_reference,abs_error\n";
  for (const auto& r : res.rows) {
    csv += fmt(r.a) + "," + fmt(r.z_lattice) + "," + fmt(r.z_reference) + "," + fmt(r.abs_error) + "\n";
    if (r.walk_sum)
      out << "a = " << fmt(r.a) << ": walk-sum Z = " << fmt(r.walk_sum->value.real())
          << " (tail_bound = " << fmt(r.walk_sum->tail_bound) << ")\n";
  }
  write_text(output, csv);
  out << "rows = " << res.rows.size() << ", non-monotone steps = " << res.non_monotone_steps << "\n";
  out << "verdict: " << (res.converging ? "converging" : "not converging") << "\n";
  return kExitOk;
}

inline int run_clt(std::uint64_t steps, std::uint64_t walkers, std::uint64_t seed, const std::string& output,
                   std::ostream& out) {
  const CltResult r = clt_demo(steps, walkers, seed);
  std::string csv = "displacement,count,empirical,binomial,gaussian\n";
  for (const auto& row : r.rows)
    csv += std::to_string(row.displacement) + "," + std::to_string(row.count) + "," + fmt(row.empirical) + "," +
           fmt(row.binomial) + "," + fmt(row.gaussian) + "\n";
  write_text(output, csv);
  out << "empirical mean = " << fmt(r.empirical_mean) << "\n";
  out << "kolmogorov distance (binomial vs normal) = " << fmt(r.kolmogorov) << "\n";
  return kExitOk;
}

inline int run_qstar(double beta, double mass, double spacing, const std::string& output, std::ostream& out) {
  if (!(mass > 0.0) || !(spacing > 0.0)) throw InputError("mass and spacing must be positive");
  LatticeSpec s;
  s.mass = mass;
  s.spacing = spacing;
  const QStarProfile p = qstar_profile(q_star(s, beta));
  std::string csv = "q,poisson,gaussian\n";
  for (const auto& r : p.rows) csv += std::to_string(r.q) + "," + fmt(r.poisson) + "," + fmt(r.gaussian) + "\n";
  write_text(output, csv);
  out << "q_star = " << fmt(p.q_star) << ", argmax = " << p.argmax << ", width = " << fmt(p.width) << "\n";
  out << "max |poisson - gaussian| = " << fmt(p.max_abs_deviation) << "\n";
  return kExitOk;
}

/// Parses argv and runs one subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Walk sums on Hamiltonian graphs"};
  app.require_subcommand(1);

  std::string input, output, spec, spacings, reference;
  bool verify = false;
  auto* decompose = app.add_subcommand("pmr-decompose", "dense matrix JSON to PMR JSON");
  decompose->add_option("--input", input, "dense matrix JSON")->required();
  decompose->add_option("--output", output, "PMR JSON")->required();
  decompose->add_flag("--verify", verify, "report the reassembly error");

  EvalFlags part, amp;
  add_eval_flags(app.add_subcommand("partition", "Tr e^{-beta H} as a closed-walk sum"), part, false);
  add_eval_flags(app.add_subcommand("amplitude", "<to| e^{-i t H} |from> as a walk sum"), amp, true);

  double beta = 1.0;
  auto* sweep = app.add_subcommand("lattice-sweep", "Z_a over decreasing spacings");
  sweep->add_option("--spec", spec, "lattice spec JSON")->required();
  sweep->add_option("--beta", beta, "inverse temperature")->required();
  sweep->add_option("--spacings", spacings, "comma-separated decreasing spacings")->required();
  sweep->add_option("--reference", reference, "free|harmonic|oracle")->required();
  sweep->add_option("--output", output, "CSV")->required();

  std::uint64_t steps = 0, walkers = 0, seed = 0;
  auto* clt = app.add_subcommand("clt-demo", "+-1 walk displacement histogram");
  clt->add_option("--steps", steps, "steps per walker")->required();
  clt->add_option("--walkers", walkers, "number of walkers")->required();
  clt->add_option("--seed", seed, "PRNG seed (default 0)");
  clt->add_option("--output", output, "CSV")->required();

  double mass = 1.0, spacing = 1.0;
  auto* qs = app.add_subcommand("qstar-demo", "walk-length weight profile");
  qs->add_option("--beta", beta, "inverse temperature")->required();
  qs->add_option("--mass", mass, "particle mass")->required();
  qs->add_option("--spacing", spacing, "lattice spacing")->required();
  qs->add_option("--output", output, "CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (*decompose) return run_decompose(input, output, verify, out);
    if (app.got_subcommand("partition")) return run_eval(part, true, out);
    if (app.got_subcommand("amplitude")) return run_eval(amp, false, out);
    if (*sweep) return run_sweep(spec, beta, spacings, reference, output, out);
    if (*clt) return run_clt(steps, walkers, seed, output, out);
    if (*qs) return run_qstar(beta, mass, spacing, output, out);
  } catch (const ReferenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNoReference;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace dvwalk::cli
