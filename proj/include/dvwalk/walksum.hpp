#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "divdiff.hpp"
#include "error.hpp"
#include "pmr.hpp"
#include "scaled.hpp"

namespace dvwalk {

/// Hard cap on the truncation order chosen by auto_order.
inline constexpr std::size_t kHardOrderCap = 10000;
inline constexpr std::uint64_t kDefaultWalkCap = 100'000'000;

/// A walk z_0 -> z_q: term indices (0-based), visited states, and the product of hop strengths.
struct Walk {
  std::vector<std::size_t> indices;
  std::vector<BasisIndex> states;
  cplx weight{1.0, 0.0};
};

struct WalkSumResult {
  cplx value{0.0, 0.0};
  std::size_t q_max = 0;
  std::uint64_t walks_evaluated = 0;
  double tail_bound = 0.0;
  bool converged = true;
};

struct Endpoints {
  BasisIndex from = 0;
  BasisIndex to = 0;
};

/// tau is -beta for thermal quantities and -i t for real-time amplitudes. Leaving
/// `endpoints` unset selects trace mode.
struct EvalRequest {
  cplx tau{0.0, 0.0};
  std::optional<Endpoints> endpoints;
  std::optional<std::size_t> q_max;
  double tol = 0.0;
  std::uint64_t walk_cap = kDefaultWalkCap;
  /// Worker count; 0 reads WALKSUM_THREADS (default 1).
  std::size_t threads = 0;
};

/// Positive integer from WALKSUM_THREADS, else 1.
inline std::size_t threads_from_env() {
  const char* s = std::getenv("WALKSUM_THREADS");
  if (!s || !*s) return 1;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1) throw InputError("WALKSUM_THREADS must be a positive integer");
  return static_cast<std::size_t>(std::min<long>(v, 256));
}

namespace detail {

// log of sum_{q > order} x^q / q!, or -inf when x == 0.
inline double log_poisson_tail(double x, std::size_t order) {
  if (x <= 0.0) return -HUGE_VAL;
  const double lx = std::log(x);
  double ref = -HUGE_VAL, acc = 0.0;
  for (std::size_t q = order + 1;; ++q) {
    const double qq = static_cast<double>(q);
    const double lt = qq * lx - std::lgamma(qq + 1.0);
    if (lt > ref) {
      acc = acc * std::exp(ref - lt) + 1.0;
      ref = lt;
    } else {
      acc += std::exp(lt - ref);
    }
    if (qq > x && lt - ref < -50.0) break;
  }
  return ref + std::log(acc);
}

inline std::uint64_t saturating_walk_bound(std::size_t starts, std::size_t terms, std::size_t order) {
  const double bound = [&] {
    double s = 0.0, p = 1.0;
    for (std::size_t q = 0; q <= order; ++q) {
      s += p;
      p *= static_cast<double>(terms);
      if (s > 1e19) return 1e19;
    }
    return s * static_cast<double>(starts);
  }();
  return bound >= 1.8e19 ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(bound);
}

inline DivDiffOptions table_options(const PmrHamiltonian& h) {
  const auto [lo, hi] = std::minmax_element(h.d0().begin(), h.d0().end());
  return DivDiffOptions{0.5 * (*lo + *hi), 0.5 * (*hi - *lo)};
}

// Depth-first walk sum from the table's current top state. Adds w * e^{tau[...]} for every
// prefix landing on `target` (any target when target == none).
class WalkSummer {
 public:
  WalkSummer(const PmrHamiltonian& h, cplx tau, std::size_t order, BasisIndex target)
      : h_(h), table_(tau, table_options(h)), order_(order), target_(target) {}

  void run_from(BasisIndex start, std::optional<std::size_t> first_term) {
    table_.push(h_.d0()[start]);
    if (!first_term) {
      visit(start, cplx(1.0, 0.0), 0);
      return;
    }
    if (order_ == 0) return;
    const auto [z1, d] = apply_term(h_, *first_term, start);
    if (d == cplx(0.0, 0.0)) return;
    table_.push(h_.d0()[z1]);
    visit(z1, d, 1);
  }

  /// Contributions of walks strictly longer than zero steps are descended; with
  /// first_term unset, the empty walk is included and no deeper descent happens.
  void visit(BasisIndex z, cplx weight, std::size_t depth) {
    ++walks_;
    if (z == target_) sum_.add(weight * table_.value());
    if (depth == 0 || depth >= order_) return;
    for (std::size_t j = 0; j < h_.num_terms(); ++j) {
      const auto& t = h_.term(j);
      const BasisIndex zn = t.perm(z);
      const cplx d = t.diag.coeff[zn];
      if (d == cplx(0.0, 0.0)) continue;
      table_.push(h_.d0()[zn]);
      visit(zn, weight * d, depth + 1);
      table_.pop();
    }
  }

  const CompensatedSum& sum() const { return sum_; }
  std::uint64_t walks() const { return walks_; }

 private:
  const PmrHamiltonian& h_;
  DivDiffTable table_;
  std::size_t order_;
  BasisIndex target_;
  CompensatedSum sum_;
  std::uint64_t walks_ = 0;
};

struct Task {
  BasisIndex start;
  BasisIndex target;
  std::optional<std::size_t> first_term;
};

struct TaskResult {
  CompensatedSum sum;
  std::uint64_t walks = 0;
};

inline std::vector<TaskResult> run_tasks(const PmrHamiltonian& h, cplx tau, std::size_t order,
                                         const std::vector<Task>& tasks, std::size_t threads) {
  std::vector<TaskResult> out(tasks.size());
  auto work = [&](std::size_t i) {
    WalkSummer ws(h, tau, order, tasks[i].target);
    ws.run_from(tasks[i].start, tasks[i].first_term);
    out[i].sum = ws.sum();
    out[i].walks = ws.walks();
  };
  threads = std::max<std::size_t>(1, std::min(threads, tasks.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < tasks.size(); i = next++) work(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace detail

/// Rigorous bound on the omitted orders q > order of a single matrix element:
/// sum_{q>order} (M Gamma |tau|)^q / q! * e^{|Re tau| ||E||_inf}.
inline double tail_bound(const PmrHamiltonian& h, cplx tau, std::size_t order) {
  const double x = static_cast<double>(h.num_terms()) * h.max_hop() * std::abs(tau);
  const double lt = detail::log_poisson_tail(x, order);
  if (lt == -HUGE_VAL) return 0.0;
  return std::exp(lt + std::abs(tau.real()) * h.max_abs_energy());
}

/// Smallest order whose tail bound is <= tol, capped at kHardOrderCap.
inline std::size_t auto_order(const PmrHamiltonian& h, cplx tau, double tol) {
  if (!(tol > 0.0)) throw InputError("tolerance must be positive");
  if (tail_bound(h, tau, 0) <= tol) return 0;
  const double at_cap = tail_bound(h, tau, kHardOrderCap);
  if (at_cap > tol)
    throw ConvergenceError("auto_order: tolerance unreachable below order cap", at_cap);
  std::size_t lo = 0, hi = kHardOrderCap;  // tail(lo) > tol >= tail(hi)
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (tail_bound(h, tau, mid) <= tol ? hi : lo) = mid;
  }
  return hi;
}

/// Walks of exactly q steps from z_in ending at z_out, depth-first with ascending term
/// index at each depth; zero-weight prefixes are pruned.
inline void for_each_walk(const PmrHamiltonian& h, BasisIndex z_in, BasisIndex z_out, std::size_t q,
                          const std::function<void(const Walk&)>& fn) {
  if (z_in >= h.dim() || z_out >= h.dim()) throw InputError("endpoint out of range");
  Walk w;
  w.states.push_back(z_in);
  std::function<void(std::size_t)> rec = [&](std::size_t depth) {
    const BasisIndex z = w.states.back();
    if (depth == q) {
      if (z == z_out) fn(w);
      return;
    }
    for (std::size_t j = 0; j < h.num_terms(); ++j) {
      const auto [zn, d] = apply_term(h, j, z);
      if (d == cplx(0.0, 0.0)) continue;
      const cplx saved = w.weight;
      w.indices.push_back(j);
      w.states.push_back(zn);
      w.weight = saved * d;
      rec(depth + 1);
      w.weight = saved;
      w.indices.pop_back();
      w.states.pop_back();
    }
  };
  rec(0);
}

inline std::vector<Walk> enumerate_walks(const PmrHamiltonian& h, BasisIndex z_in, BasisIndex z_out, std::size_t q) {
  std::vector<Walk> out;
  for_each_walk(h, z_in, z_out, q, [&](const Walk& w) { out.push_back(w); });
  return out;
}

namespace detail {

inline WalkSumResult evaluate_walk_sum(const PmrHamiltonian& h, const EvalRequest& req) {
  if (!std::isfinite(req.tau.real()) || !std::isfinite(req.tau.imag())) throw InputError("tau must be finite");
  if (!req.q_max && !(req.tol > 0.0)) throw InputError("either q_max or a positive tolerance is required");
  const cplx tau = canonical(req.tau);
  const bool trace = !req.endpoints;
  const std::size_t starts = trace ? h.dim() : 1;
  const double multiplicity = static_cast<double>(starts);

  bool converged = true;
  std::size_t order = 0;
  if (req.q_max) {
    order = *req.q_max;
  } else {
    try {
      order = auto_order(h, tau, req.tol / multiplicity);
    } catch (const ConvergenceError&) {
      converged = false;
      order = kHardOrderCap;
    }
  }
  // Largest order whose unpruned prefix count fits under the walk cap.
  while (order > 0 && saturating_walk_bound(starts, h.num_terms(), order) > req.walk_cap) {
    converged = false;
    --order;
  }

  std::vector<Task> tasks;
  for (BasisIndex z = 0; z < h.dim(); ++z) {
    if (!trace && z != req.endpoints->from) continue;
    const BasisIndex target = trace ? z : req.endpoints->to;
    tasks.push_back({z, target, std::nullopt});
    for (std::size_t j = 0; j < h.num_terms(); ++j) tasks.push_back({z, target, j});
  }
  const std::size_t threads = req.threads ? req.threads : threads_from_env();
  const auto results = run_tasks(h, tau, order, tasks, threads);

  CompensatedSum total;
  WalkSumResult out;
  for (const auto& r : results) {
    total.merge(r.sum);
    out.walks_evaluated += r.walks;
  }
  out.value = total.value();
  out.q_max = order;
  out.tail_bound = multiplicity * tail_bound(h, tau, order);
  if (req.tol > 0.0 && !(out.tail_bound <= req.tol)) converged = false;
  out.converged = converged;
  return out;
}

}  // namespace detail

/// <z_out| e^{tau H} |z_in> as a truncated walk sum.
inline WalkSumResult matrix_element(const PmrHamiltonian& h, const EvalRequest& req) {
  if (!req.endpoints) throw InputError("matrix_element needs endpoints");
  if (req.endpoints->from >= h.dim() || req.endpoints->to >= h.dim()) throw InputError("endpoint out of range");
  return detail::evaluate_walk_sum(h, req);
}

/// Tr e^{tau H} as a sum over closed walks from every basis state.
inline WalkSumResult partition_function(const PmrHamiltonian& h, const EvalRequest& req) {
  if (req.endpoints) throw InputError("partition_function works in trace mode (no endpoints)");
  return detail::evaluate_walk_sum(h, req);
}

// JSON: { "value": [re, im], "q_max": int, "walks": int, "tail_bound": real, "converged": bool }

inline nlohmann::json to_json(const WalkSumResult& r) {
  nlohmann::json j;
  j["value"] = {r.value.real(), r.value.imag()};
  j["q_max"] = r.q_max;
  j["walks"] = r.walks_evaluated;
  j["tail_bound"] = r.tail_bound;
  j["converged"] = r.converged;
  return j;
}

inline WalkSumResult walksum_from_json(const nlohmann::json& j) {
  try {
    WalkSumResult r;
    const auto& v = j.at("value");
    r.value = cplx(v.at(0).get<double>(), v.at(1).get<double>());
    r.q_max = j.at("q_max").get<std::size_t>();
    r.walks_evaluated = j.at("walks").get<std::uint64_t>();
    r.tail_bound = j.at("tail_bound").get<double>();
    r.converged = j.at("converged").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad walk-sum JSON: ") + e.what());
  }
}

}  // namespace dvwalk
