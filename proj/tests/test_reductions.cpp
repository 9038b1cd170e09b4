#include "pppa/classify.hpp"
#include "pppa/instance_gen.hpp"
#include "pppa/matrix_core.hpp"
#include "pppa/oracle.hpp"
#include "pppa/reductions.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace pppa;
using namespace pppa::testing;

namespace {

QpInstance make(const Matrix& m, std::initializer_list<double> q, std::initializer_list<double> u) {
  QpInstance inst;
  inst.m = SymMatrix::from_dense(m);
  inst.q = Eigen::Map<const Vector>(q.begin(), q.size());
  inst.u = Eigen::Map<const Vector>(u.begin(), u.size());
  return inst;
}

Matrix m2(double a, double b, double c) {
  Matrix m(2, 2);
  m << a, b, b, c;
  return m;
}

Vector vec(std::initializer_list<double> v) { return Eigen::Map<const Vector>(v.begin(), v.size()); }

double qscale(const QpInstance& inst) { return 1.0 + inst.q.cwiseAbs().maxCoeff(); }

void expect_matches_oracle(const QpInstance& inst, const SolveOutcome& out) {
  const OracleResult o = enumerate_active_sets(inst);
  ASSERT_NE(o.status, OracleStatus::NoKktPoint);
  ASSERT_NE(out.status, SolveStatus::Error) << out.message;
  if (o.status == OracleStatus::Optimal) {
    ASSERT_EQ(out.status, SolveStatus::Optimal);
    EXPECT_NEAR(*out.objective, o.objective, 1e-8 * (1.0 + std::abs(o.objective)));
    EXPECT_LE(kkt_residual(inst, *out.x), 1e-8 * qscale(inst));
  } else {
    ASSERT_EQ(out.status, SolveStatus::Unbounded);
    EXPECT_TRUE(recession_check(inst, out.ray->direction));
  }
}

}  // namespace

TEST(PreprocessZeroDiag, Examples) {
  const QpInstance a = make(m2(0, 0, 2), {1, -1}, {kInf, 3});
  const ZeroDiagResult ra = preprocess_zero_diag(a);
  EXPECT_FALSE(ra.ray);
  EXPECT_EQ(ra.instance.size(), 1);
  EXPECT_EQ(ra.trace.replay_solution(vec({0.5}))(0), 0.0);

  const QpInstance b = make(m2(0, 0, 2), {-1, -1}, {2, 3});
  const ZeroDiagResult rb = preprocess_zero_diag(b);
  EXPECT_FALSE(rb.ray);
  const Vector xb = rb.trace.replay_solution(vec({0.5}));
  EXPECT_EQ(xb(0), 2.0);
  EXPECT_EQ(xb(1), 0.5);

  const QpInstance c = make(m2(0, 0, 2), {-1, -1}, {kInf, 3});
  const ZeroDiagResult rc = preprocess_zero_diag(c);
  ASSERT_TRUE(rc.ray);
  EXPECT_TRUE(recession_check(c, *rc.ray));
}

TEST(PreprocessZeroDiag, NonzeroCouplingIsInvariantViolation) {
  const QpInstance a = make(m2(0, 1, 2), {1, -1}, {kInf, 3});
  EXPECT_THROW(preprocess_zero_diag(a), Error);
}

TEST(ReduceNonpositiveRow, DropExample) {
  const QpInstance inst = make(m2(1, -1, 1), {-1, 0}, {kInf, kInf});
  const RowReduction r = reduce_nonpositive_row(inst, vec({1, 1}), vec({0, 0}), 0);
  EXPECT_EQ(r.step.kind, StepKind::Drop);
  ASSERT_EQ(r.instance.size(), 1);
  // Eliminating x1 = x2 + 1 symbolically: -x1 + (x1 - x2)^2 / 2 = -x2 - 1 + 1/2.
  EXPECT_NEAR(r.instance.m(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(r.instance.q(0), -1.0, 1e-15);

  const SolveOutcome out = solve_sbar(inst);
  ASSERT_EQ(out.status, SolveStatus::Unbounded);
  EXPECT_TRUE(recession_check(inst, out.ray->direction));
}

TEST(ReduceNonpositiveRow, FlipExample) {
  const QpInstance inst = make(m2(1, -1, 1), {-1, 0}, {2, kInf});
  const RowReduction r = reduce_nonpositive_row(inst, vec({1, 1}), vec({0, 0}), 0);
  EXPECT_EQ(r.step.kind, StepKind::Flip);
  EXPECT_DOUBLE_EQ(r.instance.q(0), -1.0);
  EXPECT_DOUBLE_EQ(r.instance.q(1), -2.0);
  EXPECT_EQ(r.instance.m.dense(), m2(1, 1, 1));
  EXPECT_EQ(r.instance.u(0), kInf);

  QpInstance again = r.instance;
  again.u(0) = 2.0;
  const RowReduction back = reduce_nonpositive_row(again, vec({1, 1}), vec({0, 0}), 0);
  EXPECT_EQ(back.instance.m.dense(), inst.m.dense());
  EXPECT_EQ(back.instance.q, inst.q);
}

TEST(ReduceNonpositiveRow, PreservesClassAndObjective) {
  Rng rng(41);
  int drops = 0, flips = 0;
  for (int t = 0; t < 300; ++t) {
    const Index n = rng.index(2, 8);
    Matrix a = random_sbar(n, rng, 0.7, 1.0);
    if (a.diagonal().minCoeff() <= 1e-6) continue;
    // Signature equal to s_i on the neighbours of i keeps row i nonpositive, so p_i = 0.
    const Index i = rng.index(0, n - 1);
    Vector sign = random_vector(n, rng, -1, 1).unaryExpr([](double v) { return v < 0 ? -1.0 : 1.0; });
    for (Index j = 0; j < n; ++j) {
      if (a(i, j) != 0.0) sign(j) = sign(i);
    }
    a = sign.asDiagonal() * dense_comparison(a) * sign.asDiagonal();
    QpInstance inst = make_instance(a, rng, rng.coin());
    inst.q(i) = -std::abs(inst.q(i)) - 0.1;
    if (rng.coin(0.3)) inst.u(i) = kInf;
    const Vector d = dominance_vector(inst.m);
    const Vector p = build_parametric_vector(inst.m, d);
    ASSERT_EQ(p(i), 0.0);
    const RowReduction r = reduce_nonpositive_row(inst, d, p, i);
    EXPECT_TRUE(is_in_sbar_plus(r.instance.m));
    (r.step.kind == StepKind::Drop ? drops : flips)++;
    if (r.step.kind == StepKind::Flip) {
      // x_i = u_i - z_i shifts the objective by a constant.
      const Vector z = random_vector(n, rng, 0.0, 1.0);
      Vector x = z;
      x(i) = inst.u(i) - z(i);
      const double c0 = inst.objective(inst.u(i) * Vector::Unit(n, i));
      EXPECT_NEAR(inst.objective(x), r.instance.objective(z) + c0, 1e-9 * (1.0 + std::abs(c0)));
    }
  }
  EXPECT_GT(drops, 20);
  EXPECT_GT(flips, 20);
}

TEST(ReduceUntilStartable, DropsOnSingularLaplacianLeaveExactZeros) {
  Matrix m(3, 3);
  m << 0.1, -0.1, 0.0, -0.1, 0.8, -0.7, 0.0, -0.7, 0.7;
  const QpInstance inst = make(m, {-1.0, -2.0, -3.0}, {kInf, kInf, kInf});
  const StartableProblem sp = reduce_until_startable(inst);
  ASSERT_TRUE(sp.ray.has_value());
  EXPECT_TRUE(recession_check(inst, *sp.ray));
  for (Index i = 0; i < sp.instance.size(); ++i) {
    const double mii = sp.instance.m(i, i);
    EXPECT_TRUE(mii == 0.0 || mii > 1e-3) << mii;
  }
  EXPECT_TRUE(sp.instance.size() == 0 || is_in_sbar_plus(sp.instance.m));
}

TEST(SolveSbar, Examples) {
  Matrix bd = Matrix::Zero(2, 2);
  bd(0, 0) = 2;
  bd(1, 1) = 4;
  const QpInstance sep = make(bd, {-3, -2}, {1, 5});
  const SolveOutcome a = solve_sbar(sep);
  ASSERT_EQ(a.status, SolveStatus::Optimal);
  EXPECT_DOUBLE_EQ((*a.x)(0), 1.0);
  EXPECT_DOUBLE_EQ((*a.x)(1), 0.5);

  const QpInstance two = make(m2(2, 1, 2), {-3, -3}, {1, 1});
  const SolveOutcome b = solve_sbar(two);
  ASSERT_EQ(b.status, SolveStatus::Optimal);
  const OracleResult o = enumerate_active_sets(two);
  EXPECT_LE((*b.x - o.x).cwiseAbs().maxCoeff(), 1e-12);

  const QpInstance unb = make(m2(1, -1, 1), {-1, 0}, {kInf, kInf});
  const SolveOutcome c = solve_sbar(unb);
  ASSERT_EQ(c.status, SolveStatus::Unbounded);
  EXPECT_TRUE(recession_check(unb, vec({1, 1})));
  EXPECT_TRUE(recession_check(unb, c.ray->direction));
}

TEST(SolveSbar, RejectsOutsideClass) {
  const QpInstance a = make(m2(1, 3, 5), {-1, -1}, {1, 1});
  EXPECT_THROW(solve_sbar(a), Error);
}

TEST(SolveSbar, TraceReplaySoundnessAndOracle) {
  Rng rng(42);
  int unbounded = 0;
  for (int t = 0; t < 300; ++t) {
    const Index n = rng.index(1, 7);
    Matrix a = random_sbar(n, rng, 0.6, 0.5);
    if (rng.coin(0.5)) {
      const Vector sign = random_vector(n, rng, -1, 1).unaryExpr([](double v) { return v < 0 ? -1.0 : 1.0; });
      a = sign.asDiagonal() * dense_comparison(a) * sign.asDiagonal();
    }
    QpInstance inst = make_instance(a, rng, false);
    for (Index i = 0; i < n; ++i) {
      if (rng.coin(0.6)) inst.u(i) = rng.uniform(0.5, 3.0);
    }
    const SolveOutcome out = solve_sbar(inst);
    expect_matches_oracle(inst, out);
    if (out.status == SolveStatus::Optimal) {
      EXPECT_GE(out.x->minCoeff(), 0.0);
      EXPECT_TRUE((out.x->array() <= inst.u.array()).all());
    }
    unbounded += out.status == SolveStatus::Unbounded;
    EXPECT_LE(out.stats.reductions, 2 * n);
  }
  EXPECT_GT(unbounded, 10);
}

TEST(AffineBox, Examples) {
  AffineBoxSystem sys;
  sys.s = Matrix::Identity(2, 2);
  sys.r = vec({-1, -1});
  sys.lo = vec({0, 0});
  sys.hi = vec({2, 2});
  sys.g_mat = Matrix::Zero(0, 2);
  sys.g = Vector::Zero(0);
  sys.g_lo = Vector::Zero(0);
  sys.g_hi = Vector::Zero(0);
  const auto x = fm_feasibility_2var(sys);
  ASSERT_TRUE(x);
  EXPECT_NEAR((*x)(0), 1.0, 1e-12);
  EXPECT_NEAR((*x)(1), 1.0, 1e-12);

  sys.hi = vec({0.5, 2});
  EXPECT_FALSE(fm_feasibility_2var(sys));
}

TEST(AffineBox, SingularSystemMatchesGridScan) {
  Rng rng(43);
  int feasible = 0, infeasible = 0;
  for (int t = 0; t < 300; ++t) {
    // Line a'x = b with S = a a', plus one coupled constraint lo_g <= g + c'x <= hi_g.
    const Vector dir = random_vector(2, rng, -1, 1);
    const Vector a = dir / dir.norm();
    const double b = rng.uniform(-1.0, 2.0);
    AffineBoxSystem sys;
    sys.s = a * a.transpose();
    sys.r = -a * b;
    sys.lo = vec({0, 0});
    sys.hi = vec({rng.uniform(0.2, 2.0), rng.coin(0.3) ? kInf : rng.uniform(0.2, 2.0)});
    sys.g_mat = random_vector(2, rng, -1, 1).transpose();
    sys.g = vec({rng.uniform(-0.5, 0.5)});
    sys.g_lo = vec({rng.uniform(-1.0, 0.0)});
    sys.g_hi = vec({rng.coin(0.3) ? kInf : rng.uniform(0.0, 1.0)});

    // Scan the solution line x = b a + s a_perp finely; margin avoids boundary cases.
    const Vector perp = vec({-a(1), a(0)});
    bool grid_ok = false, grid_strict = false;
    for (int k = -40000; k <= 40000; ++k) {
      const double s = k * 1e-4;
      const Vector x = b * a + s * perp;
      auto inside = [&](double m) {
        const double gx = sys.g(0) + sys.g_mat.row(0).dot(x);
        return x(0) >= sys.lo(0) - m && x(1) >= sys.lo(1) - m && x(0) <= sys.hi(0) + m && x(1) <= sys.hi(1) + m &&
               gx >= sys.g_lo(0) - m && gx <= sys.g_hi(0) + m;
      };
      grid_ok = grid_ok || inside(1e-3);
      grid_strict = grid_strict || inside(-1e-3);
    }
    if (grid_ok != grid_strict) continue;
    const auto x = fm_feasibility_2var(sys);
    EXPECT_EQ(x.has_value(), grid_ok);
    if (x) {
      EXPECT_LE((sys.s * *x + sys.r).cwiseAbs().maxCoeff(), 1e-9);
      (void)0;
      ++feasible;
    } else {
      ++infeasible;
    }
  }
  EXPECT_GT(feasible, 30);
  EXPECT_GT(infeasible, 30);
}

TEST(FmSolve, SmallSystems) {
  Matrix a(3, 2);
  a << 1, 0, 0, 1, -1, -1;
  const auto t = fm_solve(a, vec({1, 1, -1.5}));
  ASSERT_TRUE(t);
  EXPECT_LE(((a * *t) - vec({1, 1, -1.5})).maxCoeff(), 1e-12);
  EXPECT_FALSE(fm_solve(a, vec({1, 1, -2.5})));
}

TEST(SolveSbarN1, AgreesWithSolveSbarOnSbarInputs) {
  Rng rng(44);
  for (int t = 0; t < 100; ++t) {
    const Index n = rng.index(1, 6);
    const QpInstance inst = make_instance(random_sbar(n, rng, 0.6, 0.3), rng, true);
    const SolveOutcome a = solve_sbar(inst);
    const SolveOutcome b = solve_sbar_n1(inst);
    ASSERT_EQ(a.status, SolveStatus::Optimal);
    ASSERT_EQ(b.status, SolveStatus::Optimal) << b.message;
    EXPECT_NEAR(*a.objective, *b.objective, 1e-8 * (1.0 + std::abs(*a.objective)));
    EXPECT_LE(b.stats.subproblems, 2 * n + 1);
  }
}

TEST(SolveSbarN1, PlantedMatchesOracle) {
  int done = 0;
  for (std::uint64_t seed = 1; done < 40; ++seed) {
    const Index n = 3 + static_cast<Index>(seed % 4);
    QpInstance inst;
    try {
      inst = gen_sbar_nk(GenSpec{n, 0.6, seed, Family::SbarNk, 1});
    } catch (const Error&) {
      continue;
    }
    ASSERT_FALSE(is_in_sbar_plus(inst.m));
    const SolveOutcome out = solve_sbar_n1(inst);
    expect_matches_oracle(inst, out);
    EXPECT_LE(out.stats.subproblems, 2 * n + 1);
    ++done;
  }
}

TEST(SolveSbarN1, InteriorOptimum) {
  Rng rng(45);
  int done = 0;
  for (std::uint64_t seed = 100; done < 20; ++seed) {
    QpInstance inst;
    try {
      inst = gen_sbar_nk(GenSpec{4, 0.7, seed, Family::SbarNk, 1});
    } catch (const Error&) {
      continue;
    }
    const Vector xs = inst.u.cwiseProduct(random_vector(4, rng, 0.2, 0.8));
    inst.q = -inst.m.multiply(xs);
    const SolveOutcome out = solve_sbar_n1(inst);
    ASSERT_EQ(out.status, SolveStatus::Optimal) << out.message;
    if (is_pd(inst.m)) EXPECT_LE((*out.x - xs).cwiseAbs().maxCoeff(), 1e-7 * (1.0 + xs.maxCoeff()));
    EXPECT_LE(kkt_residual(inst, *out.x), 1e-8 * qscale(inst));
    ++done;
  }
}

TEST(SolveSbarNk, LevelTwo) {
  int done = 0;
  for (std::uint64_t seed = 1; done < 15; ++seed) {
    QpInstance inst;
    try {
      inst = gen_sbar_nk(GenSpec{4, 0.6, seed, Family::SbarNk, 1});
    } catch (const Error&) {
      continue;
    }
    const SolveOutcome a = solve_sbar_n1(inst);
    const SolveOutcome b = solve_sbar_nk(inst, 2);
    ASSERT_EQ(a.status, SolveStatus::Optimal);
    ASSERT_EQ(b.status, SolveStatus::Optimal) << b.message;
    EXPECT_NEAR(*a.objective, *b.objective, 1e-8 * (1.0 + std::abs(*a.objective)));
    ++done;
  }
  done = 0;
  for (std::uint64_t seed = 1; done < 15 && seed < 2000; ++seed) {
    QpInstance inst;
    try {
      inst = gen_sbar_nk(GenSpec{5, 0.7, seed, Family::SbarNk, 2});
    } catch (const Error&) {
      continue;
    }
    if (is_sbar_nk(inst.m, 1)) continue;
    expect_matches_oracle(inst, solve_sbar_nk(inst, 2));
    ++done;
  }
  EXPECT_GT(done, 0);
}

TEST(SolveSbarNk, UnboundedPlanted) {
  // Laplacian block on {1,2,3} coupled to x4 by (1,-1,0): psd with kernel
  // (1,1,1,0), every 3x3 block in the comparison class, the whole matrix not.
  Matrix c(4, 4);
  c << 2, -1, -1, 1, -1, 2, -1, -1, -1, -1, 2, 0, 1, -1, 0, 2;
  const Vector k = vec({1, 1, 1, 0});
  ASSERT_EQ((c * k).cwiseAbs().maxCoeff(), 0.0);
  ASSERT_GE(min_eigenvalue(c), -1e-12);
  ASSERT_LT(min_eigenvalue(dense_comparison(c)), -1e-3);
  QpInstance inst;
  inst.m = SymMatrix::from_dense(c);
  inst.q = vec({-1, 0, 0, 1});
  inst.u = vec({kInf, kInf, kInf, 1});
  ASSERT_TRUE(is_sbar_nk(inst.m, 1));
  ASSERT_FALSE(is_in_sbar_plus(inst.m));
  const SolveOutcome out = solve_sbar_nk(inst, 1);
  ASSERT_EQ(out.status, SolveStatus::Unbounded) << out.message;
  EXPECT_TRUE(recession_check(inst, out.ray->direction));
  expect_matches_oracle(inst, out);
}

TEST(SolveSbarNk, RecursionCap) {
  const QpInstance a = make(m2(2, 1, 2), {-1, -1}, {1, 1});
  try {
    solve_sbar_nk(a, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RecursionCapExceeded);
  }
}

TEST(SolveSbar, LinearTermConstancyOfFixedSubproblem) {
  Rng rng(46);
  for (int t = 0; t < 200; ++t) {
    const Index n = rng.index(2, 6);
    Matrix a = random_sbar(n, rng, 0.7, 1.0);
    const Vector sign = random_vector(n, rng, -1, 1).unaryExpr([](double v) { return v < 0 ? -1.0 : 1.0; });
    a = sign.asDiagonal() * dense_comparison(a) * sign.asDiagonal();
    const QpInstance inst = make_instance(a, rng, true);
    const Index i = rng.index(0, n - 1);
    const IndexSet rest = complement(n, {i});
    QpInstance sub;
    sub.m = inst.m.principal(rest);
    sub.q.resize(n - 1);
    sub.u.resize(n - 1);
    for (Index k = 0; k < n - 1; ++k) {
      sub.q(k) = inst.q(rest[k]);
      sub.u(k) = inst.u(rest[k]);
    }
    const SolveOutcome s = solve_sbar(sub);
    const OracleResult o = enumerate_active_sets(sub);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    ASSERT_EQ(o.status, OracleStatus::Optimal);
    double diff = 0.0;
    for (Index k = 0; k < n - 1; ++k) diff += a(i, rest[k]) * ((*s.x)(k) - o.x(k));
    EXPECT_LE(std::abs(diff), 1e-8 * qscale(inst));
  }
}
