#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include <dvwalk/lattice.hpp>
#include <dvwalk/oracle.hpp>
#include <dvwalk/walksum.hpp>

#include "support.hpp"

using namespace dvwalk;

namespace {

PmrHamiltonian pauli_x(double gamma) {
  return PmrHamiltonian({0.0, 0.0}, {{Permutation::shift(2, 1), DiagonalOp{{gamma, gamma}}}});
}

PmrHamiltonian free_ring(std::size_t sites) {
  LatticeSpec s;
  s.sites = sites;
  return build(s);
}

EvalRequest element(cplx tau, BasisIndex from, BasisIndex to, double tol = 1e-12) {
  EvalRequest r;
  r.tau = tau;
  r.endpoints = Endpoints{from, to};
  r.tol = tol;
  return r;
}

EvalRequest trace(cplx tau, double tol = 1e-12) {
  EvalRequest r;
  r.tau = tau;
  r.tol = tol;
  return r;
}

double binomial(unsigned n, unsigned k) { return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0))); }

}  // namespace

TEST(MatrixElement, DiagonalHamiltonian) {
  const PmrHamiltonian h({0.5, -1.0, 2.0}, {});
  const cplx tau(0.0, -0.8);
  const auto same = matrix_element(h, element(tau, 1, 1));
  EXPECT_LE(std::abs(same.value - std::exp(tau * -1.0)), 1e-15);
  EXPECT_EQ(same.walks_evaluated, 1u);
  EXPECT_EQ(same.tail_bound, 0.0);
  const auto other = matrix_element(h, element(tau, 0, 2));
  EXPECT_EQ(other.value, cplx(0.0));
  EXPECT_TRUE(other.converged);
}

TEST(MatrixElement, RabiAmplitude) {
  const auto r = matrix_element(pauli_x(1.0), element(tau_from_time(M_PI / 2), 1, 0));
  EXPECT_LE(std::abs(r.value - cplx(0.0, -1.0)), 1e-10);
  EXPECT_TRUE(r.converged);
  for (double t : {0.2, 0.9, 1.7}) {
    const double gamma = 0.8;
    const auto a = matrix_element(pauli_x(gamma), element(tau_from_time(t), 1, 0));
    EXPECT_LE(std::abs(a.value - cplx(0.0, -std::sin(gamma * t))), 1e-10);
  }
}

TEST(MatrixElement, ZeroTimeIsIdentity) {
  Xorshift64Star g(41);
  const auto h = fixtures::random_system(g, 8, 3);
  for (BasisIndex a = 0; a < h.dim(); ++a)
    for (BasisIndex b = 0; b < h.dim(); ++b) {
      const auto r = matrix_element(h, element(tau_from_time(0.0), a, b));
      EXPECT_EQ(r.value, cplx(a == b ? 1.0 : 0.0));
    }
}

TEST(MatrixElement, MatchesOracleOnRandomSystem) {
  Xorshift64Star g(42);
  const auto h = fixtures::random_hermitian_pmr(g, 8, 2);
  const CMatrix u = expm_eig(h.to_dense(), -0.3);
  for (BasisIndex a = 0; a < 8; a += 3)
    for (BasisIndex b = 0; b < 8; b += 2) {
      const auto r = matrix_element(h, element(-0.3, a, b, 1e-13));
      const double scale = std::max(std::abs(u(b, a)), 1e-3);
      EXPECT_LE(std::abs(r.value - u(b, a)) / scale, 1e-8) << a << "->" << b;
    }
}

TEST(MatrixElement, EndpointsValidated) {
  const auto h = pauli_x(1.0);
  EXPECT_THROW(matrix_element(h, element(-1.0, 0, 2)), InputError);
  EXPECT_THROW(matrix_element(h, trace(-1.0)), InputError);
  EvalRequest none = element(-1.0, 0, 0, 0.0);
  EXPECT_THROW(matrix_element(h, none), InputError);
}

TEST(PartitionFunction, ClassicalSum) {
  const auto z = partition_function(PmrHamiltonian({0.0, 1.0}, {}), trace(-1.0));
  EXPECT_NEAR(z.value.real(), 1.0 + std::exp(-1.0), 1e-15);
}

TEST(PartitionFunction, TwoLevelCosh) {
  for (double beta : {0.3, 1.0, 2.0}) {
    const auto z = partition_function(pauli_x(1.0), trace(tau_from_beta(beta)));
    EXPECT_LE(std::abs(z.value - 2.0 * std::cosh(beta)), 1e-10) << beta;
  }
}

TEST(PartitionFunction, FreeRing) {
  double expect = 0.0;
  for (int k = 0; k < 4; ++k) expect += std::exp(-0.5 * (1.0 - std::cos(2.0 * M_PI * k / 4.0)));
  const auto z = partition_function(free_ring(4), trace(-0.5, 1e-11));
  EXPECT_LE(std::abs(z.value - expect), 1e-9);
  EXPECT_THROW(partition_function(free_ring(4), element(-0.5, 0, 0)), InputError);
}

TEST(PartitionFunction, RealAndPositive) {
  Xorshift64Star g(43);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = fixtures::random_system(g, 6, 3);
    const auto z = partition_function(h, trace(-g.uniform(0.1, 1.0), 1e-10));
    EXPECT_GT(z.value.real(), 0.0);
    EXPECT_LE(std::abs(z.value.imag()), 1e-10 * std::abs(z.value));
  }
}

TEST(AutoOrder, Examples) {
  EXPECT_EQ(auto_order(PmrHamiltonian({1.0, 2.0}, {}), -3.0, 1e-12), 0u);
  // M Gamma |tau| = 1 with no exponential factor: sum_{q>14} 1/q! < 1e-12 < sum_{q>13} 1/q!
  const auto sx = pauli_x(1.0);
  EXPECT_EQ(auto_order(sx, cplx(0.0, -1.0), 1e-12), 14u);
  // the same with |Re tau| ||E|| = 1, i.e. an extra factor e
  const PmrHamiltonian shifted({1.0, 1.0}, {{Permutation::shift(2, 1), DiagonalOp{{1.0, 1.0}}}});
  EXPECT_EQ(auto_order(shifted, -1.0, 1e-12), 15u);
  EXPECT_EQ(auto_order(sx, cplx(0.0, -1.0), 10.0), 0u);
  EXPECT_THROW(auto_order(sx, -1.0, 0.0), InputError);
}

TEST(AutoOrder, MinimalityAgainstTailBound) {
  Xorshift64Star g(44);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = fixtures::random_system(g, 10, 3);
    const cplx tau(-g.uniform(0.0, 2.0), g.uniform(-2.0, 2.0));
    const double tol = std::pow(10.0, -g.uniform(3.0, 14.0));
    const std::size_t q = auto_order(h, tau, tol);
    EXPECT_LE(tail_bound(h, tau, q), tol);
    if (q > 0) {
      EXPECT_GT(tail_bound(h, tau, q - 1), tol);
    }
  }
}

TEST(AutoOrder, CapReportsBestBound) {
  const auto h = pauli_x(1e4);
  try {
    auto_order(h, -1.0, 1e-12);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.best_bound(), 1e-12);
  }
}

TEST(TailBound, ClosedForm) {
  const PmrHamiltonian h({0.5, -2.0}, {{Permutation::shift(2, 1), DiagonalOp{{0.25, 0.5}}}});
  const cplx tau(-0.6, 0.8);
  double expect = 0.0;
  for (int q = 6; q < 60; ++q) expect += std::pow(0.5, q) / std::tgamma(q + 1.0);
  expect *= std::exp(0.6 * 2.0);
  EXPECT_NEAR(tail_bound(h, tau, 5) / expect, 1.0, 1e-12);
}

TEST(Walks, EmptyWalk) {
  const auto h = pauli_x(1.0);
  EXPECT_EQ(enumerate_walks(h, 0, 0, 0).size(), 1u);
  EXPECT_EQ(enumerate_walks(h, 0, 1, 0).size(), 0u);
}

TEST(Walks, SwapParity) {
  const auto w = enumerate_walks(pauli_x(1.0), 0, 0, 2);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].indices, (std::vector<std::size_t>{0, 0}));
  EXPECT_TRUE(enumerate_walks(pauli_x(1.0), 0, 0, 3).empty());
}

TEST(Walks, FourRingCountsWrapAround) {
  // ++++ and ---- close around a four-site ring besides the C(4,2) = 6 balanced walks
  EXPECT_EQ(enumerate_walks(free_ring(4), 0, 0, 4).size(), 8u);
  EXPECT_EQ(enumerate_walks(free_ring(5), 0, 0, 4).size(), 6u);
  EXPECT_EQ(enumerate_walks(free_ring(9), 0, 0, 4).size(), 6u);
}

TEST(Walks, RingCountsMatchBinomialSums) {
  for (std::size_t L = 3; L <= 9; ++L) {
    const auto h = free_ring(L);
    for (unsigned q = 0; q <= 12; ++q)
      for (BasisIndex d = 0; d < L; ++d) {
        double expect = 0.0;
        for (unsigned k = 0; k <= q; ++k) {
          const long disp = 2 * static_cast<long>(k) - static_cast<long>(q);
          if (((disp % static_cast<long>(L)) + static_cast<long>(L)) % static_cast<long>(L) == static_cast<long>(d))
            expect += binomial(q, k);
        }
        EXPECT_EQ(static_cast<double>(enumerate_walks(h, 0, d, q).size()), expect) << L << " " << q << " " << d;
      }
  }
}

TEST(Walks, InvariantsAndOrder) {
  Xorshift64Star g(45);
  const auto h = fixtures::random_system(g, 6, 3);
  const auto walks = enumerate_walks(h, 0, 0, 4);
  for (std::size_t i = 0; i < walks.size(); ++i) {
    const auto& w = walks[i];
    ASSERT_EQ(w.states.size(), 5u);
    cplx weight = 1.0;
    for (std::size_t k = 1; k < w.states.size(); ++k) {
      EXPECT_EQ(w.states[k], h.term(w.indices[k - 1]).perm(w.states[k - 1]));
      weight *= h.term(w.indices[k - 1]).diag.coeff[w.states[k]];
    }
    EXPECT_EQ(w.weight, weight);
    EXPECT_NE(w.weight, cplx(0.0));
    if (i > 0) {
      EXPECT_LT(walks[i - 1].indices, w.indices);
    }
  }
}

TEST(Walks, ZeroWeightPrefixesPruned) {
  const PmrHamiltonian h({0, 0, 0}, {{Permutation::shift(3, 1), DiagonalOp{{1.0, 1.0, 1.0}}},
                                     {Permutation::shift(3, -1), DiagonalOp{{0.0, 0.0, 0.0}}}});
  EXPECT_EQ(enumerate_walks(h, 0, 0, 3).size(), 1u);
  const auto r = matrix_element(h, [] {
    EvalRequest q;
    q.tau = -1.0;
    q.endpoints = Endpoints{0, 0};
    q.q_max = 6;
    return q;
  }());
  // only the all-P+ prefixes are ever visited: one per depth
  EXPECT_EQ(r.walks_evaluated, 7u);
}

TEST(Properties, HermitianSymmetryInTime) {
  Xorshift64Star g(46);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = fixtures::random_system(g, 6, 3);
    const BasisIndex a = g.below(h.dim()), b = g.below(h.dim());
    const double t = g.uniform(0.1, 1.0);
    const auto fwd = matrix_element(h, element(tau_from_time(t), a, b));
    const auto back = matrix_element(h, element(tau_from_time(-t), b, a));
    EXPECT_LE(std::abs(fwd.value - std::conj(back.value)), fwd.tail_bound + back.tail_bound + 1e-12);
  }
}

TEST(Properties, Unitarity) {
  Xorshift64Star g(47);
  for (int trial = 0; trial < 6; ++trial) {
    const auto h = fixtures::random_system(g, 5, 2);
    const BasisIndex from = g.below(h.dim());
    double norm = 0.0, tails = 0.0;
    for (BasisIndex to = 0; to < h.dim(); ++to) {
      const auto r = matrix_element(h, element(tau_from_time(0.8), from, to, 1e-10));
      norm += std::norm(r.value);
      tails += r.tail_bound;
    }
    EXPECT_LE(std::abs(norm - 1.0), 10.0 * (tails + 1e-9));
  }
}

TEST(Properties, WickRotationIsBitwise) {
  Xorshift64Star g(48);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = fixtures::random_system(g, 8, 3);
    const double beta = g.uniform(0.1, 1.0);
    const BasisIndex a = g.below(h.dim()), b = g.below(h.dim());
    const auto x = matrix_element(h, element(tau_from_beta(beta), a, b, 1e-10));
    const auto y = matrix_element(h, element(tau_from_time(cplx(0.0, -beta)), a, b, 1e-10));
    EXPECT_EQ(std::memcmp(&x.value, &y.value, sizeof(cplx)), 0);
    EXPECT_EQ(x.q_max, y.q_max);
  }
}

TEST(Properties, ThreadCountDoesNotChangeBits) {
  Xorshift64Star g(49);
  const auto h = fixtures::random_system(g, 10, 3);
  EvalRequest r = trace(-0.7, 1e-9);
  r.threads = 1;
  const auto ref = partition_function(h, r);
  for (std::size_t t : {2u, 3u, 4u, 8u}) {
    r.threads = t;
    const auto z = partition_function(h, r);
    EXPECT_EQ(std::memcmp(&z.value, &ref.value, sizeof(cplx)), 0) << t;
    EXPECT_EQ(z.walks_evaluated, ref.walks_evaluated);
  }
}

TEST(Properties, WalkCountBound) {
  Xorshift64Star g(50);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = fixtures::random_system(g, 6, 3);
    const auto z = partition_function(h, trace(-0.5, 1e-8));
    double bound = 0.0;
    for (std::size_t q = 0; q <= z.q_max; ++q) bound += std::pow(static_cast<double>(h.num_terms()), q);
    EXPECT_LE(static_cast<double>(z.walks_evaluated), static_cast<double>(h.dim()) * bound);
  }
}

TEST(WalkCap, ReducesOrderAndFlags) {
  const auto h = free_ring(6);
  EvalRequest r = trace(-1.0, 1e-12);
  r.walk_cap = 2000;
  const auto z = partition_function(h, r);
  EXPECT_FALSE(z.converged);
  EXPECT_LE(z.walks_evaluated, 2000u);
  EXPECT_EQ(z.tail_bound, 6.0 * tail_bound(h, -1.0, z.q_max));
  const CMatrix u = expm_eig(h.to_dense(), -1.0);
  EXPECT_LE(std::abs(z.value - u.trace()), z.tail_bound);
}

TEST(Json, ResultRoundTrip) {
  const auto z = partition_function(pauli_x(0.5), trace(-1.0));
  const auto text = to_json(z).dump();
  const auto back = walksum_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.value, z.value);
  EXPECT_EQ(back.q_max, z.q_max);
  EXPECT_EQ(back.walks_evaluated, z.walks_evaluated);
  EXPECT_EQ(back.tail_bound, z.tail_bound);
  EXPECT_EQ(back.converged, z.converged);
  EXPECT_THROW(walksum_from_json(nlohmann::json::parse(R"({"value":[1]})")), InputError);
}
