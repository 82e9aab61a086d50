#include "cbfshield/qp.hpp"

#include "support/random_qp.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace cbfshield;
using namespace cbfshield::qp;
using testing_support::independent_kkt;
using testing_support::qp_oracle;
using testing_support::random_qp;

namespace {

QpProblem identity_problem(const Eigen::VectorXd& f) {
  return QpProblem::unconstrained(Eigen::MatrixXd::Identity(f.size(), f.size()), f);
}

}  // namespace

TEST(SolveQp, UnconstrainedMinimizer) {
  Eigen::VectorXd c(7);
  c << 1, -2, 3, -4, 5, -6, 7;
  const auto s = solve_qp(identity_problem(-c));
  EXPECT_LT((s.x - c).norm(), 1e-15);
  EXPECT_TRUE(s.active_set.empty());
}

TEST(SolveQp, ClippedCoordinate) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(7);
  f[0] = -2;
  auto p = identity_problem(f);
  p.hi[0] = 1.0;
  const auto s = solve_qp(p);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(7);
  expected[0] = 1.0;
  EXPECT_LT((s.x - expected).norm(), 1e-15);
  ASSERT_EQ(s.active_set.size(), 1u);
  EXPECT_EQ(s.active_set[0].to_string(), "box hi 0");
  EXPECT_NEAR(s.multipliers[0], 1.0, 1e-15);
}

TEST(SolveQp, ContradictoryConstraintsAreInfeasible) {
  auto p = identity_problem(Eigen::VectorXd::Zero(7));
  p.ineq.push_back({Eigen::VectorXd::Unit(7, 0), 1.0});
  p.hi[0] = 0.0;
  try {
    solve_qp(p);
    FAIL() << "expected Infeasible";
  } catch (const QpError& e) {
    EXPECT_EQ(e.failure(), QpFailure::Infeasible);
    EXPECT_EQ(e.code(), ErrorCode::Infeasible);
    ASSERT_TRUE(e.blocking().has_value());
    EXPECT_EQ(e.state().x.size(), 7);
  }
}

TEST(SolveQp, MaxIterationsCarriesState) {
  std::mt19937_64 rng(5);
  QpProblem p;
  do p = random_qp(rng, 6);
  while (p.ineq.size() < 4);
  QpSettings settings;
  settings.max_iter = 1;
  bool hit = false;
  for (int k = 0; k < 50 && !hit; ++k) {
    try {
      solve_qp(p, settings);
    } catch (const QpError& e) {
      EXPECT_EQ(e.failure(), QpFailure::MaxIterations);
      hit = true;
    }
    p = random_qp(rng, 6);
  }
  EXPECT_TRUE(hit);
}

TEST(SolveQp, RejectsMalformedProblems) {
  auto p = identity_problem(Eigen::VectorXd::Zero(7));
  p.H(0, 1) = 1e-6;
  EXPECT_THROW(solve_qp(p), Error);
  p = identity_problem(Eigen::VectorXd::Zero(7));
  p.lo[2] = 1.0;
  p.hi[2] = 0.0;
  EXPECT_THROW(solve_qp(p), Error);
  p = identity_problem(Eigen::VectorXd::Zero(7));
  p.H(3, 3) = -1.0;
  EXPECT_THROW(solve_qp(p), Error);
  p = identity_problem(Eigen::VectorXd::Zero(7));
  p.ineq.push_back({Eigen::VectorXd::Ones(6), 0.0});
  EXPECT_THROW(solve_qp(p), Error);
}

TEST(SolveQp, MatchesDualProjectedGradientOracle) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_qp(rng);
    const auto s = solve_qp(p);
    const auto ref = qp_oracle(p);
    ASSERT_LT(ref.max_violation, 1e-7) << "oracle did not converge, trial " << trial;
    EXPECT_NEAR(s.objective, ref.objective, 1e-6) << "trial " << trial;
    EXPECT_LT((s.x - ref.x).lpNorm<Eigen::Infinity>(), 1e-4) << "trial " << trial;
  }
}

TEST(SolveQp, KktCertificateRecomputedIndependently) {
  std::mt19937_64 rng(102);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_qp(rng, 12);
    const auto s = solve_qp(p);
    const auto kkt = independent_kkt(p, s);
    EXPECT_LE(kkt.stationarity, 1e-9) << trial;
    EXPECT_LE(kkt.primal, 1e-8) << trial;
    EXPECT_LE(kkt.dual, 1e-9) << trial;
    EXPECT_LE(kkt.complementarity, 1e-9) << trial;
    const auto report = kkt_report(p, s.x, s.active_set, s.multipliers);
    EXPECT_LE(report.max(), 1e-9);
    EXPECT_DOUBLE_EQ(s.kkt_residual, report.max());
  }
}

TEST(SolveQp, AddingConstraintNeverLowersObjective) {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_qp(rng, 5);
    const double before = solve_qp(p).objective;
    // Keep the problem feasible: the new row holds at the current optimum shifted inward.
    const auto x = solve_qp(p).x;
    Eigen::VectorXd a = Eigen::VectorXd::Random(7);
    p.ineq.push_back({a, a.dot(x) + 0.1});
    try {
      EXPECT_GE(solve_qp(p).objective, before - 1e-12);
    } catch (const QpError& e) {
      EXPECT_EQ(e.failure(), QpFailure::Infeasible);  // the extra row may cut off the feasible set
    }
  }
}

TEST(SolveQp, ScalingObjectiveLeavesArgminUnchanged) {
  std::mt19937_64 rng(104);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_qp(rng);
    const auto x = solve_qp(p).x;
    for (double alpha : {1e-3, 0.5, 7.0, 1e4}) {
      auto q = p;
      q.H *= alpha;
      q.f *= alpha;
      EXPECT_LT((solve_qp(q).x - x).lpNorm<Eigen::Infinity>(), 1e-9 * (1 + x.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST(SolveQp, OriginFeasibleIsNeverInfeasible) {
  std::mt19937_64 rng(105);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 500; ++trial) {
    auto p = random_qp(rng, 12);
    // Force x = 0 feasible: b <= 0 and lo <= 0 <= hi, some of them tight.
    for (auto& c : p.ineq) c.b = -std::abs(g(rng)) * (trial % 3 == 0 ? 0.0 : 1.0);
    p.lo = p.lo.cwiseMin(0.0);
    p.hi = p.hi.cwiseMax(0.0);
    EXPECT_NO_THROW(solve_qp(p)) << trial;
  }
}

TEST(SolveQp, Deterministic) {
  std::mt19937_64 rng(106);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_qp(rng, 10);
    const auto a = solve_qp(p);
    const auto b = solve_qp(p);
    EXPECT_TRUE(a.x == b.x);
    EXPECT_EQ(a.active_set, b.active_set);
    EXPECT_EQ(a.iterations, b.iterations);
  }
}

TEST(SolveQp, WarmStartHintNeverChangesTheAnswer) {
  std::mt19937_64 rng(107);
  QpWorkspace ws;
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_qp(rng, 10);
    const auto cold = solve_qp(p);
    // Hint from an unrelated previous problem, then the correct one.
    const auto warm = solve_qp(p, {}, &ws);
    EXPECT_LT((cold.x - warm.x).lpNorm<Eigen::Infinity>(), 1e-9);
    EXPECT_LE(kkt_report(p, warm.x, warm.active_set, warm.multipliers).max(), 1e-9);
    ws.warm_start_hint = cold.active_set;
    const auto hinted = solve_qp(p, {}, &ws);
    EXPECT_LT((cold.x - hinted.x).lpNorm<Eigen::Infinity>(), 1e-9);
    EXPECT_LE(hinted.iterations, cold.iterations);
  }
}

TEST(Dump, RoundTripIsBitExact) {
  std::mt19937_64 rng(108);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_qp(rng, 8);
    const auto s = solve_qp(p);
    std::stringstream ss;
    write_dump(ss, p, &s, "trial " + std::to_string(trial));
    const auto q = read_dump(ss);
    EXPECT_TRUE(q.H == p.H);
    EXPECT_TRUE(q.f == p.f);
    EXPECT_TRUE(q.lo == p.lo);
    EXPECT_TRUE(q.hi == p.hi);
    ASSERT_EQ(q.ineq.size(), p.ineq.size());
    for (std::size_t k = 0; k < p.ineq.size(); ++k) {
      EXPECT_TRUE(q.ineq[k].a == p.ineq[k].a);
      EXPECT_EQ(q.ineq[k].b, p.ineq[k].b);
    }
    EXPECT_TRUE(solve_qp(q).x == s.x);
  }
}

TEST(Dump, MalformedInputIsParseError) {
  std::stringstream ss("# cbfshield qp dump v1\nn 3\nH 1 0\n");
  try {
    read_dump(ss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
}
