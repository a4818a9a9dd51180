#include "roughtfe/tfe.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace roughtfe;

namespace {

ParamDomain box2() { return ParamDomain(make_vector({0.0, -1.0}), make_vector({3.0, 2.0})); }

ModelSpec scalar_constant(double sigma = 1.0) {
  return constant_drift(1, sigma, make_vector({0.0}), ParamDomain(make_vector({-2.0}), make_vector({2.0})));
}

Vector random_interior(const ParamDomain& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  Vector th(box.dim());
  for (int k = 0; k < box.dim(); ++k)
    th(k) = box.lower()(k) + u(rng) * (box.upper()(k) - box.lower()(k));
  return th;
}

}  // namespace

TEST(Contrast, ZeroAtTruthAndNonnegative) {
  const KernelSpec k(0.25);
  const GridSpec g(1.0, 256);
  const auto w = drift_weights(k, g);
  auto m = bounded_nonlinear(1.0, 0.3, box2());
  const Vector ts = make_vector({1.5, 0.5});
  const auto obs = solve_x0(m, ts, w).values;
  EXPECT_EQ(contrast(obs, m, ts, w).value, 0.0);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) EXPECT_GE(contrast(obs, m, random_interior(m.domain, rng), w).value, 0.0);
}

TEST(Contrast, ConstantDriftClosedForm) {
  // int_0^1 (t^{3/4} / Gamma(7/4))^2 dt = 1 / (2.5 Gamma(1.75)^2)
  const KernelSpec k(0.25);
  auto m = scalar_constant();
  const double exact = 1.0 / (2.5 * std::pow(std::tgamma(1.75), 2));
  EXPECT_NEAR(exact, 0.47355439715797370589264, 1e-15);
  const double quad = oracle::integrate([&](double t) { return std::pow(kernel_l1(k, t), 2); }, 0.0, 1.0);
  EXPECT_NEAR(quad, exact, 1e-12);
  for (std::size_t n : {256u, 1024u}) {
    const GridSpec g(1.0, n);
    const auto obs = solve_x0(m, make_vector({0.0}), k, g).values;
    EXPECT_NEAR(contrast(obs, m, make_vector({1.0}), k, g).value, exact, 2e-4);
  }
}

TEST(Contrast, GridMismatch) {
  auto m = scalar_constant();
  const auto obs = solve_x0(m, make_vector({0.0}), KernelSpec(0.25), GridSpec(1.0, 64)).values;
  EXPECT_THROW(contrast(obs, m, make_vector({1.0}), KernelSpec(0.25), GridSpec(1.0, 32)),
               grid_mismatch_error);
}

TEST(ContrastGradient, ZeroAtTruth) {
  const auto w = drift_weights(KernelSpec(0.25), GridSpec(1.0, 128));
  auto m = fractional_linear(2, 1.0, 1.0, box2());
  const Vector ts = make_vector({1.0, 0.5});
  const auto obs = solve_x0(m, ts, w).values;
  EXPECT_EQ(contrast_gradient(obs, m, ts, w), Vector::Zero(2));
}

TEST(ContrastGradient, ConstantDriftClosedForm) {
  const KernelSpec k(0.25);
  const GridSpec g(1.0, 512);
  const auto w = drift_weights(k, g);
  auto m = scalar_constant();
  const auto obs = solve_x0(m, make_vector({0.0}), w).values;
  // trapezoid of kernel_l1^2 on the same grid, times 2 theta
  double trap = 0.0;
  for (std::size_t i = 0; i <= g.steps(); ++i) {
    const double v = std::pow(kernel_l1(k, g.node(i)), 2);
    trap += (i == 0 || i == g.steps()) ? 0.5 * v : v;
  }
  trap *= g.step();
  for (double th : {-1.3, 0.4, 1.7})
    EXPECT_NEAR(contrast_gradient(obs, m, make_vector({th}), w)(0), 2.0 * th * trap, 1e-12);
}

TEST(ContrastGradient, MatchesFiniteDifferences) {
  const KernelSpec k(0.25);
  const GridSpec g(1.0, 256);
  const auto w = drift_weights(k, g);
  std::mt19937_64 rng(31);
  for (auto m : {fractional_linear(2, 1.0, 1.0, box2()), bounded_nonlinear(1.0, 0.3, box2())}) {
    const Vector ts = make_vector({1.2, 0.5});
    const auto clean = solve_x0(m, ts, w).values;
    const auto noisy = simulate_xeps(m, ts, 0.1, w, NoiseStream(8, 0, g, 1)).values;
    for (const StatePath* obs : {&clean, &noisy})
      for (int t = 0; t < 20; ++t) {
        const Vector th = random_interior(m.domain, rng);
        const Vector grad = contrast_gradient(*obs, m, th, w);
        for (int u = 0; u < 2; ++u) {
          const double d = 1e-5;
          Vector tp = th, tm = th;
          tp(u) += d;
          tm(u) -= d;
          const double fd = (contrast(*obs, m, tp, w).value - contrast(*obs, m, tm, w).value) / (2 * d);
          EXPECT_LE(std::abs(grad(u) - fd), 1e-5 * std::max(std::abs(fd), 1e-3)) << m.name << " u=" << u;
        }
      }
  }
}

TEST(Estimate, ZeroNoiseRecoversTruthForAllFamilies) {
  const KernelSpec k(0.25);
  const GridSpec g(1.0, 256);
  const auto w = drift_weights(k, g);
  struct Case { ModelSpec m; Vector ts; };
  const Case cases[] = {
      {scalar_constant(), make_vector({0.7})},
      {constant_drift(2, 1.0, make_vector({0.0, 0.0}),
                      ParamDomain(make_vector({-1.0, -1.0}), make_vector({1.0, 1.0}))),
       make_vector({0.3, -0.45})},
      {fractional_linear(2, 1.0, 1.0, box2()), make_vector({1.0, 0.5})},
      {bounded_nonlinear(1.0, 0.3, box2()), make_vector({1.5, 0.5})},
  };
  for (const auto& c : cases) {
    const auto r = estimate(solve_x0(c.m, c.ts, w).values, c.m, w);
    EXPECT_LT((r.theta_hat - c.ts).cwiseAbs().maxCoeff(), 1e-5) << c.m.name;
    EXPECT_TRUE(r.converged);
    EXPECT_FALSE(r.boundary_hit);
    EXPECT_TRUE(c.m.domain.contains(r.theta_hat));
    EXPECT_EQ(contrast(solve_x0(c.m, c.ts, w).values, c.m, r.theta_hat, w).value, r.q_min);
  }
}

TEST(Estimate, BoundaryTruthSetsFlag) {
  const auto w = drift_weights(KernelSpec(0.25), GridSpec(1.0, 128));
  auto m = fractional_linear(2, 1.0, 1.0, box2());
  const Vector ts = make_vector({3.0, 0.5});
  const auto r = estimate(solve_x0(m, ts, w).values, m, w);
  EXPECT_TRUE(r.boundary_hit);
  EXPECT_NEAR(r.theta_hat(0), 3.0, 1e-5);
}

TEST(Estimate, InvariantUnderStageOneOrdering) {
  const KernelSpec k(0.25);
  const GridSpec g(1.0, 128);
  const auto w = drift_weights(k, g);
  for (auto m : {fractional_linear(2, 1.0, 1.0, box2()), bounded_nonlinear(1.0, 0.3, box2())}) {
    const auto obs = simulate_xeps(m, make_vector({1.2, 0.4}), 0.2, w, NoiseStream(4, 0, g, 1)).values;
    const auto base = estimate(obs, m, w);
    for (std::uint64_t shuffle : {1u, 2u, 3u}) {
      EstimateOptions o;
      o.stage1_shuffle = shuffle;
      const auto r = estimate(obs, m, w, o);
      EXPECT_EQ(r.theta_hat, base.theta_hat);
      EXPECT_EQ(r.stage1_theta, base.stage1_theta);
    }
  }
  // Flat contrast: every Stage 1 point ties; the lexicographic minimum wins.
  auto c = scalar_constant(0.0);
  const auto obs = solve_x0(c, make_vector({0.0}), w).values;
  ModelSpec flat = c;
  flat.drift = [](const Vector&, const Vector&) { return make_vector({0.0}); };
  for (std::uint64_t shuffle : {0u, 5u}) {
    EstimateOptions o;
    o.stage1_shuffle = shuffle;
    EXPECT_EQ(estimate(obs, flat, w, o).stage1_theta(0), -2.0);
  }
}

TEST(Fisher, ConstantDriftClosedForm) {
  const double exact = 2.0 / (2.5 * std::pow(std::tgamma(1.75), 2));
  EXPECT_NEAR(exact, 0.94710879431594741178528, 1e-15);
  const auto f = fisher_matrix(scalar_constant(), make_vector({0.0}), KernelSpec(0.25), GridSpec(1.0, 512));
  EXPECT_NEAR(f.matrix(0, 0), exact, 1e-3);
  EXPECT_NEAR(f.det, f.matrix(0, 0), 1e-15);
}

TEST(Fisher, EqualsHessianOfNoiseFreeContrast) {
  const auto w = drift_weights(KernelSpec(0.25), GridSpec(1.0, 256));
  auto m = fractional_linear(2, 1.0, 1.0, box2());
  const Vector ts = make_vector({1.0, 0.5});
  const auto obs = solve_x0(m, ts, w).values;
  const auto f = fisher_matrix(m, ts, w);
  const double d = 1e-3;
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) {
      auto q = [&](double a, double b) {
        Vector th = ts;
        th(u) += a;
        th(v) += b;
        return contrast(obs, m, th, w).value;
      };
      const double hess = (q(d, d) - q(d, -d) - q(-d, d) + q(-d, -d)) / (4 * d * d);
      EXPECT_NEAR(f.matrix(u, v), hess, 1e-3 * std::abs(hess)) << u << v;
    }
}

TEST(Fisher, SymmetricPositiveSemidefiniteOnBuiltins) {
  const auto w = drift_weights(KernelSpec(0.25), GridSpec(1.0, 128));
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss;
  for (auto m : {scalar_constant(), fractional_linear(2, 1.0, 1.0, box2()), bounded_nonlinear(1.0, 0.3, box2())})
    for (int t = 0; t < 10; ++t) {
      const auto f = fisher_matrix(m, random_interior(m.domain, rng), w);
      EXPECT_LE((f.matrix - f.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      Eigen::SelfAdjointEigenSolver<Matrix> es(f.matrix);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
      for (int r = 0; r < 5; ++r) {
        Vector v(m.dtheta);
        for (int k = 0; k < m.dtheta; ++k) v(k) = gauss(rng);
        EXPECT_GE(v.dot(f.matrix * v), -1e-10);
      }
    }
}

TEST(LimitVariable, DegenerateAndSingularCases) {
  const KernelSpec k(0.25);
  const GridSpec g(1.0, 128);
  const auto w = drift_weights(k, g);
  const NoiseStream s(1, 0, g, 1);
  auto quiet = fractional_linear(2, 0.0, 1.0, box2());
  const auto lq = limit_variable(quiet, make_vector({1.0, 0.5}), w, s);
  EXPECT_EQ(lq.limit, Vector::Zero(2));

  // x0 = 0 and theta = (theta_1, 0): X^0 = 0, so d/dtheta_1 b vanishes.
  auto degenerate = fractional_linear(2, 1.0, 0.0, box2());
  EXPECT_THROW(limit_variable(degenerate, make_vector({1.0, 0.0}), w, s), singular_matrix_error);
  EXPECT_THROW(limit_variable(quiet, make_vector({0.0, 0.5}), w, s), domain_error);
}

TEST(LimitVariable, ConstantDriftIsGaussianFunctional) {
  const KernelSpec k(0.25);
  const GridSpec g(1.0, 128);
  const auto w = drift_weights(k, g);
  auto m = scalar_constant();
  const NoiseStream s(3, 9, g, 1);
  const auto l = limit_variable(m, make_vector({0.2}), w, s);
  EXPECT_EQ(l.qdot1(0), 0.0);
  // direct evaluation of -J^{-1} qdot2 with eta = kernel_l1
  const auto x0 = solve_x0(m, make_vector({0.2}), w);
  const auto z = simulate_z0(m, make_vector({0.2}), x0, w, s);
  double q2 = 0.0;
  for (std::size_t i = 0; i <= g.steps(); ++i) {
    const double v = z.values(i, 0) * kernel_l1(k, g.node(i));
    q2 += (i == 0 || i == g.steps()) ? 0.5 * v : v;
  }
  q2 *= -2.0 * g.step();
  EXPECT_NEAR(l.qdot2(0), q2, 1e-12);
  EXPECT_NEAR(l.limit(0), -q2 / l.fisher.matrix(0, 0), 1e-12);
}

TEST(LimitVariable, TracksScaledEstimationErrorAsNoiseVanishes) {
  const KernelSpec k(0.25);
  const GridSpec g(1.0, 256);
  const auto w = drift_weights(k, g);
  auto m = bounded_nonlinear(1.0, 0.3, box2());
  const Vector ts = make_vector({1.5, 0.5});
  const NoiseStream s(6, 0, g, 1);
  const auto l = limit_variable(m, ts, w, s);
  double prev = 1e9;
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto r = estimate(simulate_xeps(m, ts, eps, w, s).values, m, w);
    const double gap = ((r.theta_hat - ts) / eps - l.limit).norm();
    EXPECT_LT(gap, prev) << eps;
    prev = gap;
  }
  EXPECT_LT(prev, 0.05 * l.limit.norm() + 0.05);
}

TEST(Identifiability, FractionalLinearExponentsAndDominance) {
  const auto w = drift_weights(KernelSpec(0.25), GridSpec(1.0, 512));
  auto m = fractional_linear(2, 1.0, 1.0, box2());
  const Vector ts = make_vector({1.0, 0.5});
  const auto rep = identifiability_scan(m, ts, w);
  EXPECT_EQ(rep.I_values.front(), 0.0);
  EXPECT_EQ(rep.Q0_values.front(), 0.0);
  EXPECT_NEAR(rep.rho_hat, 2.0, 0.3);
  EXPECT_EQ(rep.ray_directions.size(), 6u);
  EXPECT_EQ(rep.rho_per_ray.size(), 6u);
  for (std::size_t m2 = 1; m2 < rep.theta_grid.size(); ++m2) {
    EXPECT_GT(rep.I_values[m2], 0.0);
    EXPECT_GE(rep.Q0_values[m2], rep.c_prime_hat * std::pow(rep.radius[m2], rep.rho_prime_hat));
    EXPECT_GE(rep.I_values[m2], rep.c_hat * std::pow(rep.radius[m2], rep.rho_hat));
  }
  EXPECT_GT(rep.c_prime_hat, 0.0);
}

TEST(Identifiability, DegenerateDriftFails) {
  const auto w = drift_weights(KernelSpec(0.25), GridSpec(1.0, 64));
  ModelSpec m = fractional_linear(2, 1.0, 1.0, box2());
  m.drift = [](const Vector&, const Vector&) { return make_vector({0.0}); };
  EXPECT_THROW(identifiability_scan(m, make_vector({1.0, 0.5}), w), degenerate_fit_error);
}
