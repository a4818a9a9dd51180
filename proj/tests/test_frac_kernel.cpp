#include "roughtfe/frac_kernel.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace roughtfe;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(KernelSpec, RejectsBoundaryExponents) {
  EXPECT_THROW(KernelSpec(0.0), domain_error);
  EXPECT_THROW(KernelSpec(0.5), domain_error);
  EXPECT_THROW(KernelSpec(-0.1), domain_error);
  EXPECT_THROW(KernelSpec(std::nan("")), domain_error);
  const KernelSpec k(0.3);
  EXPECT_DOUBLE_EQ(k.beta(), 0.8);
}

TEST(GridSpec, NodesCoverHorizon) {
  const GridSpec g(0.7, 13);
  EXPECT_EQ(g.node(0), 0.0);
  EXPECT_EQ(g.node(13), 0.7);
  for (std::size_t i = 0; i < 13; ++i) EXPECT_LT(g.node(i), g.node(i + 1));
  EXPECT_NEAR(g.step() * 13.0, 0.7, 4 * kEps);
  EXPECT_THROW(GridSpec(0.0, 4), domain_error);
  EXPECT_THROW(GridSpec(1.0, 0), domain_error);
}

TEST(KernelEval, ClosedForms) {
  const KernelSpec k(0.25);
  EXPECT_NEAR(kernel_eval(k, 1.0), 1.0 / std::tgamma(0.75), 1e-15);
  EXPECT_NEAR(kernel_eval(k, 16.0), 0.408024469549131490538543, 1e-15);
  EXPECT_NEAR(kernel_eval(k, 1.0), 0.816048939098262981077086, 1e-15);
  EXPECT_THROW(kernel_eval(k, 0.0), domain_error);
  EXPECT_THROW(kernel_eval(k, -1.0), domain_error);
}

TEST(ResolventEval, ClosedForms) {
  EXPECT_NEAR(resolvent_eval(KernelSpec(0.25), 1.0), 0.27581566283020931435995, 1e-15);
  EXPECT_NEAR(resolvent_eval(KernelSpec(0.1), 2.0), 0.29743304860244023105978, 1e-15);
  EXPECT_THROW(resolvent_eval(KernelSpec(0.25), 0.0), domain_error);
}

TEST(KernelIntegrals, MatchFrozenValuesAndQuadrature) {
  const KernelSpec k(0.25);
  EXPECT_EQ(kernel_l1(k, 0.0), 0.0);
  EXPECT_EQ(kernel_l2sq(k, 0.0), 0.0);
  EXPECT_EQ(resolvent_l1(k, 0.0), 0.0);
  EXPECT_NEAR(kernel_l1(k, 1.0), 1.08806525213101730810278, 1e-14);
  EXPECT_NEAR(kernel_l2sq(k, 1.0), 1.33187174200680104782304, 1e-14);
  EXPECT_NEAR(kernel_l2sq(KernelSpec(0.4), 2.0), 1.90581324223188367100421, 1e-14);
  EXPECT_NEAR(resolvent_l1(k, 1.0), 1.10326265132083725743978, 1e-14);
  EXPECT_NEAR(resolvent_l1(k, 4.0), 1.56024900435762709540185, 1e-14);

  for (double a : {0.05, 0.25, 0.45})
    for (double t : {0.3, 1.0, 2.5}) {
      const KernelSpec s(a);
      EXPECT_LT(rel(kernel_l1(s, t), oracle::kernel_l1_quad(s, t)), 1e-9) << a << " " << t;
      EXPECT_LT(rel(kernel_l2sq(s, t), oracle::kernel_l2sq_quad(s, t)), 1e-7) << a << " " << t;
    }
}

TEST(KernelEval, StrictlyDecreasingPositive) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(1e-3, 0.499), uu(1e-6, 50.0);
  for (int trial = 0; trial < 500; ++trial) {
    const KernelSpec k(ua(rng));
    double u1 = uu(rng), u2 = uu(rng);
    if (u1 == u2) continue;
    if (u1 > u2) std::swap(u1, u2);
    EXPECT_GT(kernel_eval(k, u1), kernel_eval(k, u2));
    EXPECT_GT(kernel_eval(k, u2), 0.0);
  }
}

TEST(DriftWeights, SmallGridsClosedForm) {
  const KernelSpec k(0.25);
  const auto w1 = drift_weights(k, GridSpec(1.0, 1));
  EXPECT_NEAR(w1(1, 0), kernel_l1(k, 1.0), 2 * kEps);
  const auto w2 = drift_weights(k, GridSpec(1.0, 2));
  EXPECT_NEAR(w2(2, 0), (1.0 - std::pow(0.5, 0.75)) / std::tgamma(1.75), 4 * kEps);
  EXPECT_EQ(w2(2, 1), w2(1, 0));
}

TEST(DriftWeights, TelescopingPropertyRandomGrids) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ua(0.01, 0.49), ut(0.1, 5.0);
  std::uniform_int_distribution<std::size_t> un(1, 3000);
  for (int trial = 0; trial < 50; ++trial) {
    const KernelSpec k(ua(rng));
    const GridSpec g(ut(rng), un(rng));
    const auto w = drift_weights(k, g);
    double acc = 0.0;
    for (std::size_t i = 1; i <= g.steps(); ++i) {
      acc += w.lag(i);
      const double exact = kernel_l1(k, g.node(i));
      ASSERT_LE(std::abs(acc - exact), 8 * kEps * exact) << "trial " << trial << " i " << i;
      ASSERT_GT(w.lag(i), 0.0);
    }
  }
}

TEST(DriftWeights, MemoryCap) {
  EXPECT_THROW(drift_weights(KernelSpec(0.25), GridSpec(1.0, 1000), 1000), resource_error);
  EXPECT_NO_THROW(drift_weights(KernelSpec(0.25), GridSpec(1.0, 1000), 1 << 20));
}

TEST(MittagLeffler, TrivialValues) {
  EXPECT_EQ(mittag_leffler(0.75, 0.0), 1.0);
  EXPECT_NEAR(mittag_leffler(1.0, 1.0), std::exp(1.0), 1e-15);
  EXPECT_THROW(mittag_leffler(0.0, 1.0), domain_error);
  EXPECT_THROW(mittag_leffler(1.2, 1.0), domain_error);
}

TEST(MittagLeffler, FrozenHighPrecisionValues) {
  struct Case { double beta, z, value; };
  const Case cases[] = {
      {0.75, -1.0, 0.39310830281575406176964},   {0.75, 1.0, 3.48586622005174387131217},
      {0.5, -3.0, 0.17900115118138995041929},    {0.75, -0.5, 0.60379034509524675558747},
      {0.75, -5.0, 0.0679239743326439421219161}, {0.5, -10.0, 0.05614099274382258585751739},
      {0.9, -8.0, 0.01709514458079680936681126}, {0.3, -2.5, 0.2449831237947869428241847},
      {0.75, 3.0, 100.8618017751002803515241},   {0.6, 12.0, 3.451543678245681906061489e+27},
      {0.99, -20.0, 0.00056162348367495244904},  {0.2, -1.5, 0.37097697838398594137},
  };
  for (const auto& c : cases) EXPECT_LT(rel(mittag_leffler(c.beta, c.z), c.value), 1e-10) << c.beta << " " << c.z;
}

TEST(MittagLeffler, AgreesWithMultiprecisionSeries) {
  for (double beta : {0.55, 0.75, 0.95})
    for (double z : {-4.0, -1.5, -1.0, -0.3, 0.4, 2.0, 6.0}) {
      const double ref = oracle::mittag_leffler_series(beta, z);
      EXPECT_LT(rel(mittag_leffler(beta, z), ref), 1e-10) << beta << " " << z;
    }
}

TEST(MittagLeffler, ExponentialWhenBetaIsOne) {
  for (int k = 0; k <= 400; ++k) {
    const double z = -20.0 + 0.1 * k;
    EXPECT_LE(rel(mittag_leffler(1.0, z), std::exp(z)), 1e-12) << z;
  }
}

TEST(MittagLeffler, MonotoneInArgument) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ub(0.3, 1.0), uz(-15.0, 15.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double beta = ub(rng);
    const double zmax = std::min(15.0, 0.99 * std::pow(kMittagLefflerGuard, beta));
    double z1 = zmax * uz(rng) / 15.0, z2 = zmax * uz(rng) / 15.0;
    if (z1 > z2) std::swap(z1, z2);
    if (z2 - z1 < 1e-6) continue;
    EXPECT_LE(mittag_leffler(beta, z1), mittag_leffler(beta, z2)) << beta << " " << z1 << " " << z2;
  }
}

TEST(MittagLeffler, OverflowGuard) {
  EXPECT_THROW(mittag_leffler(0.5, 30.0), overflow_error);
  EXPECT_THROW(mittag_leffler(0.5, -30.0), overflow_error);
  EXPECT_NO_THROW(mittag_leffler(0.5, 26.0));
}

TEST(ResolventConvolution, EntriesApproachOne) {
  const KernelSpec k(0.25);
  EXPECT_THROW(resolvent_convolution_check(k, GridSpec(1.0, 1)), domain_error);
  const auto v = resolvent_convolution_check(k, GridSpec(1.0, 4096));
  ASSERT_EQ(v.size(), 4096u);
  for (double e : v) EXPECT_LT(std::abs(e - 1.0), 0.05);
  // error shrinks with distance from the origin
  EXPECT_LT(std::abs(v.back() - 1.0), std::abs(v.front() - 1.0));
}

TEST(ResolventConvolution, RefinementReducesErrorOnCommonNodes) {
  const KernelSpec k(0.25);
  double prev = 1.0;
  for (std::size_t n : {16u, 64u, 256u, 1024u}) {
    const auto v = resolvent_convolution_check(k, GridSpec(1.0, n));
    double err = 0.0;
    for (std::size_t m = 1; m <= 16; ++m) err = std::max(err, std::abs(v[m * (n / 16) - 1] - 1.0));
    EXPECT_LT(err, prev) << n;
    prev = err;
  }
}
