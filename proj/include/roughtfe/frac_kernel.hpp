#pragma once

// Power-law Volterra kernel K(u) = u^{alpha-1/2} / Gamma(alpha+1/2), its
// first-kind resolvent L(u) = u^{-alpha-1/2} / Gamma(1/2-alpha), closed-form
// integrals of both, the Mittag-Leffler function and the product-integration
// weights shared by every solver in the library.

#include "roughtfe/errors.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

namespace roughtfe {

// Recorded in run manifests.
inline constexpr const char* kGammaImplementation = "std::tgamma (platform libm)";

class KernelSpec {
 public:
  explicit KernelSpec(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 0.5)) {
      std::ostringstream os;
      os << "kernel exponent alpha must lie in (0, 1/2), got " << alpha;
      throw domain_error(os.str());
    }
  }

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return alpha_ + 0.5; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

 private:
  double alpha_;
};

// Uniform grid t_i = i*h on [0, T], i = 0..n.
class GridSpec {
 public:
  GridSpec(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw domain_error("grid horizon T must be positive and finite");
    if (steps == 0) throw domain_error("grid must have at least one step");
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t nodes() const noexcept { return steps_ + 1; }
  double step() const noexcept { return horizon_ / static_cast<double>(steps_); }

  double node(std::size_t i) const noexcept {
    return i == steps_ ? horizon_ : static_cast<double>(i) * step();
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  double horizon_;
  std::size_t steps_;
};

inline double kernel_eval(const KernelSpec& spec, double u) {
  if (!(u > 0.0)) throw domain_error("kernel is defined only for u > 0");
  return std::pow(u, spec.alpha() - 0.5) / std::tgamma(spec.beta());
}

inline double resolvent_eval(const KernelSpec& spec, double u) {
  if (!(u > 0.0)) throw domain_error("resolvent is defined only for u > 0");
  return std::pow(u, -spec.alpha() - 0.5) / std::tgamma(0.5 - spec.alpha());
}

// int_0^t K(t-s) ds
inline double kernel_l1(const KernelSpec& spec, double t) {
  if (t < 0.0) throw domain_error("kernel_l1 requires t >= 0");
  if (t == 0.0) return 0.0;
  return std::pow(t, spec.beta()) / std::tgamma(spec.beta() + 1.0);
}

// int_0^t K(t-s)^2 ds
inline double kernel_l2sq(const KernelSpec& spec, double t) {
  if (t < 0.0) throw domain_error("kernel_l2sq requires t >= 0");
  if (t == 0.0) return 0.0;
  const double a = spec.alpha();
  const double g = std::tgamma(spec.beta());
  return std::pow(t, 2.0 * a) / (2.0 * a * g * g);
}

// int_0^t L(t-s) ds
inline double resolvent_l1(const KernelSpec& spec, double t) {
  if (t < 0.0) throw domain_error("resolvent_l1 requires t >= 0");
  if (t == 0.0) return 0.0;
  const double e = 0.5 - spec.alpha();
  return std::pow(t, e) / std::tgamma(e + 1.0);
}

// Arguments with |z|^{1/beta} above this are rejected: E_beta(z) grows like
// exp(z^{1/beta}) / beta.
inline constexpr double kMittagLefflerGuard = 700.0;

namespace detail {

// k-th series term z^k / Gamma(k*beta + 1); log space once the direct form
// would overflow.
inline double ml_term(double beta, double z, std::size_t k) {
  const double kd = static_cast<double>(k);
  const double arg = kd * beta + 1.0;
  const double log_abs = kd * std::log(std::abs(z));
  if (arg < 170.0 && log_abs < 700.0) return std::pow(z, kd) / std::tgamma(arg);
  const double mag = std::exp(log_abs - std::lgamma(arg));
  return (z < 0.0 && (k % 2 == 1)) ? -mag : mag;
}

// Power series with a certified tail. Consecutive term ratios
// z*Gamma(k*beta+1)/Gamma((k+1)*beta+1) are strictly decreasing in k (log-
// convexity of Gamma), so once |ratio| < 1:
//   z > 0: tail from t_k is at most t_k / (1 - ratio_k);
//   z < 0: alternating with decreasing magnitudes, tail at most |t_k|.
inline double ml_series(double beta, double z) {
  constexpr double kRelTol = 1e-16;
  constexpr std::size_t kMaxTerms = 200000;
  double sum = 1.0;
  double comp = 0.0;  // Neumaier compensation
  double term = ml_term(beta, z, 1);
  for (std::size_t k = 1; k < kMaxTerms; ++k) {
    const double next = ml_term(beta, z, k + 1);
    const double ratio = term != 0.0 ? next / term : 0.0;
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
    if (std::abs(ratio) < 1.0) {
      const double tail = z > 0.0 ? next / (1.0 - ratio) : std::abs(next);
      if (tail <= kRelTol * std::abs(sum + comp)) break;
    }
    term = next;
  }
  return sum + comp;
}

// E_beta(-x) for x > 0, 0 < beta < 1, via the completely monotone
// representation after the substitution r = s^{1/beta}:
//   E_beta(-x) = sin(beta*pi)/(beta*pi) *
//                int_0^inf exp(-(x s)^{1/beta}) / (s^2 + 2 s cos(beta*pi) + 1) ds.
// Used where the alternating series would cancel catastrophically.
inline double ml_negative_integral(double beta, double x) {
  const double pi = std::numbers::pi;
  const double c = std::cos(beta * pi);
  const double inv_beta = 1.0 / beta;
  auto f = [=](double s) {
    return std::exp(-std::pow(x * s, inv_beta)) / (s * s + 2.0 * s * c + 1.0);
  };
  const double tol = 1e-15;
  const double peak = c < 0.0 ? -c : 0.0;
  double integral = 0.0;
  if (peak > 0.0) {
    boost::math::quadrature::tanh_sinh<double> head;
    integral += head.integrate(f, 0.0, peak, tol);
  }
  boost::math::quadrature::exp_sinh<double> tail;
  integral += tail.integrate([&](double s) { return f(s + peak); }, tol);
  return std::sin(beta * pi) / (beta * pi) * integral;
}

}  // namespace detail

// E_beta(z) = sum_k z^k / Gamma(k beta + 1) for beta in (0, 1] and real z.
//
// The truncated series is used for z >= -1, where term magnitudes never
// exceed 1 and the relative truncation error is below 1e-12. For z < -1
// the alternating series loses digits to cancellation; there E_1(z) =
// exp(z) and for beta < 1 the integral representation above is evaluated
// by double-exponential quadrature.
inline double mittag_leffler(double beta, double z) {
  if (!(beta > 0.0 && beta <= 1.0))
    throw domain_error("Mittag-Leffler index beta must lie in (0, 1]");
  if (!std::isfinite(z)) throw domain_error("Mittag-Leffler argument must be finite");
  if (z == 0.0) return 1.0;
  if (std::pow(std::abs(z), 1.0 / beta) > kMittagLefflerGuard) {
    std::ostringstream os;
    os << "Mittag-Leffler argument |z|^{1/beta} exceeds " << kMittagLefflerGuard
       << " (beta=" << beta << ", z=" << z << ")";
    throw overflow_error(os.str());
  }
  if (z >= -1.0) return detail::ml_series(beta, z);
  if (beta == 1.0) return std::exp(z);
  return detail::ml_negative_integral(beta, -z);
}

// Product-integration weights for int_0^{t_i} K(t_i - s) f(s) ds with f
// frozen at the left node of each cell:
//   w[i][j] = [(t_i - t_j)^beta - (t_i - t_{j+1})^beta] / Gamma(beta + 1).
// On a uniform grid w[i][j] depends only on the lag k = i - j, so only the
// lag table  h^beta [k^beta - (k-1)^beta] / Gamma(beta+1), k = 1..n, is kept.
class DriftWeights {
 public:
  DriftWeights(const KernelSpec& spec, const GridSpec& grid) : spec_(spec), grid_(grid) {
    const std::size_t n = grid.steps();
    const double beta = spec.beta();
    const double scale = std::pow(grid.step(), beta) / std::tgamma(beta + 1.0);
    lag_.resize(n + 1);
    lag_[0] = 0.0;
    // Differences of the rounded cumulative values C_k = scale * k^beta.
    // C_{k-1} >= C_k / 2 for beta < 1, so each subtraction is exact and
    // running sums of the lags reproduce C_i without rounding.
    double prev = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const double cur = scale * std::pow(static_cast<double>(k), beta);
      lag_[k] = cur - prev;
      prev = cur;
    }
  }

  const KernelSpec& kernel() const noexcept { return spec_; }
  const GridSpec& grid() const noexcept { return grid_; }

  // Weight of cell j in the integral up to node i (j < i).
  double operator()(std::size_t i, std::size_t j) const noexcept { return lag_[i - j]; }
  double lag(std::size_t k) const noexcept { return lag_[k]; }

  // lag(0) = 0 followed by lag(1..n).
  std::span<const double> lags() const noexcept { return lag_; }

 private:
  KernelSpec spec_;
  GridSpec grid_;
  std::vector<double> lag_;
};

// Default cap on the weight table: 1 GiB of doubles.
inline constexpr std::size_t kDefaultWeightMemoryCap = std::size_t{1} << 30;

inline DriftWeights drift_weights(const KernelSpec& spec, const GridSpec& grid,
                                  std::size_t memory_cap_bytes = kDefaultWeightMemoryCap) {
  if ((grid.steps() + 1) > memory_cap_bytes / sizeof(double)) {
    std::ostringstream os;
    os << "weight table for n=" << grid.steps() << " exceeds memory cap of " << memory_cap_bytes
       << " bytes";
    throw resource_error(os.str());
  }
  return DriftWeights(spec, grid);
}

// Discrete (L*K)(t_i), i = 1..n, which equals 1 exactly in continuous time.
//
// One-point Gauss product rule: on each cell the resolvent L(t_i - s) is
// integrated exactly, and K is evaluated at the L-weighted centroid of the
// cell. Exact for integrands linear on each cell; neither singularity is
// ever sampled. Because both kernels are power laws, entry i depends on i
// only (not on h), and its error decreases with i; refinement therefore
// improves the entries at any fixed physical time.
inline std::vector<double> resolvent_convolution_check(const KernelSpec& spec,
                                                       const GridSpec& grid) {
  const std::size_t n = grid.steps();
  if (n < 2) throw domain_error("resolvent_convolution_check requires n >= 2");
  const double h = grid.step();
  const double e = 0.5 - spec.alpha();
  const double g_e1 = std::tgamma(e + 1.0);
  const double g_e = std::tgamma(e);

  // Per-lag exact mass and first moment of L over u in [(m-1)h, m h].
  std::vector<double> mass(n + 1), offset(n + 1);
  for (std::size_t m = 1; m <= n; ++m) {
    const double u1 = static_cast<double>(m) * h;
    const double u0 = static_cast<double>(m - 1) * h;
    const double w = (std::pow(u1, e) - std::pow(u0, e)) / g_e1;
    const double mom = (std::pow(u1, e + 1.0) - std::pow(u0, e + 1.0)) / (g_e * (e + 1.0));
    mass[m] = w;
    // centroid s* = t_i - mean(u) = t_j + (m h - mean(u)) with j = i - m
    offset[m] = u1 - mom / w;
  }

  const double kexp = spec.alpha() - 0.5;
  const double kscale = 1.0 / std::tgamma(spec.beta());
  std::vector<double> out(n);
  for (std::size_t i = 1; i <= n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      const std::size_t m = i - j;
      const double s = static_cast<double>(j) * h + offset[m];
      acc += mass[m] * std::pow(s, kexp);
    }
    out[i - 1] = acc * kscale;
  }
  return out;
}

}  // namespace roughtfe
