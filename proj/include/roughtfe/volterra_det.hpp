#pragma once

// Noise-free Volterra flow X^0(theta), its parameter sensitivities, and a
// self-convergence audit, all by explicit left-point product integration:
//   X_{t_i} = x0 + sum_{j<i} w[i][j] f(X_{t_j}).

#include "roughtfe/errors.hpp"
#include "roughtfe/fit.hpp"
#include "roughtfe/frac_kernel.hpp"
#include "roughtfe/linalg.hpp"
#include "roughtfe/model.hpp"
#include "roughtfe/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace roughtfe {

inline constexpr double kDefaultBlowup = 1e8;

namespace detail {

// sum_{j<i} lag[i-j] g[j], j ascending so the smallest weights enter first.
// Four interleaved partial sums; the order is fixed, so results are
// deterministic.
inline double causal_dot(const double* lag, const double* g, std::size_t i) noexcept {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= i; j += 4) {
    s0 += lag[i - j] * g[j];
    s1 += lag[i - j - 1] * g[j + 1];
    s2 += lag[i - j - 2] * g[j + 2];
    s3 += lag[i - j - 3] * g[j + 3];
  }
  for (; j < i; ++j) s0 += lag[i - j] * g[j];
  return (s0 + s1) + (s2 + s3);
}

inline void check_state(std::span<const double> x, std::size_t i, double blowup,
                        const char* what) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  if (!std::isfinite(sq) || std::sqrt(sq) > blowup) {
    std::ostringstream os;
    os << what << ": state norm exceeded blow-up bound " << blowup << " at node " << i;
    throw divergence_error(os.str());
  }
}

// Explicit product-integration recursion for `channels` coupled scalars:
//   V_i = base + sum_{j<i} lag(i-j) g_j  [ + scale * sum_{j<i} lag(i-j) s_j ]
// where g_j (and s_j) are produced by the callbacks from V_j. Output is
// node-major. The second channel set is kept in its own accumulator so that
// scale = 0 reproduces the single-channel result bit for bit.
template <bool WithNoise, class DriftFn, class NoiseFn>
std::vector<double> explicit_volterra(const DriftWeights& w, std::size_t channels,
                                      std::span<const double> base, DriftFn&& drift_fn,
                                      NoiseFn&& noise_fn, double scale, double blowup,
                                      const char* what) {
  const std::size_t n = w.grid().steps();
  const double* lag = w.lags().data();
  std::vector<double> values((n + 1) * channels);
  // integrands stored channel-major so causal_dot runs over contiguous memory
  std::vector<double> g(channels * (n + 1), 0.0);
  std::vector<double> s(WithNoise ? channels * (n + 1) : 0, 0.0);
  std::vector<double> gbuf(channels), sbuf(channels);

  for (std::size_t c = 0; c < channels; ++c) values[c] = base[c];
  for (std::size_t i = 0;; ++i) {
    std::span<const double> vi(values.data() + i * channels, channels);
    if (i == n) break;
    drift_fn(i, vi, std::span<double>(gbuf));
    for (std::size_t c = 0; c < channels; ++c) g[c * (n + 1) + i] = gbuf[c];
    if constexpr (WithNoise) {
      noise_fn(i, vi, std::span<double>(sbuf));
      for (std::size_t c = 0; c < channels; ++c) s[c * (n + 1) + i] = sbuf[c];
    }
    const std::size_t next = i + 1;
    double* out = values.data() + next * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      double x = base[c] + causal_dot(lag, g.data() + c * (n + 1), next);
      if constexpr (WithNoise) x += scale * causal_dot(lag, s.data() + c * (n + 1), next);
      out[c] = x;
    }
    check_state(std::span<const double>(out, channels), next, blowup, what);
  }
  return values;
}

struct NoNoise {
  void operator()(std::size_t, std::span<const double>, std::span<double>) const noexcept {}
};

inline Vector to_vector(std::span<const double> x) {
  Vector v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) v(static_cast<Eigen::Index>(k)) = x[k];
  return v;
}

inline void require_same(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) throw grid_mismatch_error(std::string(what) + ": grids differ");
}

}  // namespace detail

// out_i = sum_{j<i} w[i][j] g_j for a given integrand sampled at the nodes
// (node-major, `channels` values per node).
inline std::vector<double> product_integrate(const DriftWeights& w, std::size_t channels,
                                             std::span<const double> integrand) {
  const std::size_t n = w.grid().steps();
  if (integrand.size() != (n + 1) * channels)
    throw grid_mismatch_error("product_integrate: integrand size does not match the grid");
  std::vector<double> cm(channels * (n + 1));
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t c = 0; c < channels; ++c) cm[c * (n + 1) + j] = integrand[j * channels + c];
  std::vector<double> out((n + 1) * channels, 0.0);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t c = 0; c < channels; ++c)
      out[i * channels + c] = detail::causal_dot(w.lags().data(), cm.data() + c * (n + 1), i);
  return out;
}

inline DetPath solve_x0(const ModelSpec& model, const Vector& theta, const DriftWeights& w,
                        double blowup = kDefaultBlowup) {
  check_theta(model, theta);
  const auto d = static_cast<std::size_t>(model.d);
  std::span<const double> base(model.x0.data(), d);
  auto drift = [&](std::size_t, std::span<const double> x, std::span<double> out) {
    const Vector b = model.drift(detail::to_vector(x), theta);
    for (std::size_t k = 0; k < d; ++k) out[k] = b(static_cast<Eigen::Index>(k));
  };
  auto values = detail::explicit_volterra<false>(w, d, base, drift, detail::NoNoise{}, 0.0,
                                                 blowup, "solve_x0");
  return DetPath{StatePath(w.grid(), model.d, std::move(values)), theta};
}

inline DetPath solve_x0(const ModelSpec& model, const Vector& theta, const KernelSpec& spec,
                        const GridSpec& grid) {
  return solve_x0(model, theta, drift_weights(spec, grid));
}

// Y_i = sum_{j<i} w[i][j] [grad_x b(X_j) Y_j + grad_theta b(X_j)], Y_0 = 0.
inline SensitivityPath solve_y0(const ModelSpec& model, const Vector& theta,
                                const DetPath& x0path, const DriftWeights& w,
                                double blowup = kDefaultBlowup) {
  if (!model.drift_grad_x || !model.drift_grad_theta)
    throw unsupported_error(model.name + ": sensitivities need gradient oracles");
  detail::require_same(x0path.values.grid(), w.grid(), "solve_y0");
  check_theta(model, theta);
  const int d = model.d, p = model.dtheta;
  const auto channels = static_cast<std::size_t>(d * p);
  std::vector<double> zero(channels, 0.0);
  auto integrand = [&](std::size_t j, std::span<const double> y, std::span<double> out) {
    const Vector x = x0path.values.at(j);
    const Matrix gx = model.drift_grad_x(x, theta);
    const Matrix gt = model.drift_grad_theta(x, theta);
    const Eigen::Map<const Eigen::MatrixXd> ym(y.data(), d, p);
    const Matrix f = gx * ym + gt;
    for (int u = 0; u < p; ++u)
      for (int k = 0; k < d; ++k) out[u * d + k] = f(k, u);
  };
  auto values = detail::explicit_volterra<false>(w, channels, zero, integrand, detail::NoNoise{},
                                                 0.0, blowup, "solve_y0");
  SensitivityPath out{MatrixPath(w.grid(), d, p), theta};
  out.values.data() = std::move(values);
  return out;
}

inline SensitivityPath solve_y0(const ModelSpec& model, const Vector& theta,
                                const DetPath& x0path, const KernelSpec& spec,
                                const GridSpec& grid) {
  return solve_y0(model, theta, x0path, drift_weights(spec, grid));
}

// Differentiating the Y recursion once more in theta_v gives, per output
// component k,
//   S_i = sum_{j<i} w[i][j] [ grad_x b S_j + D2_xx b[Y_u, Y_v] + D2_{x theta_u} b Y_v
//                             + D2_{x theta_v} b Y_u + D2_{theta_u theta_v} b ].
inline SecondSensitivityPath solve_second_sensitivity(const ModelSpec& model, const Vector& theta,
                                                      const DetPath& x0path,
                                                      const SensitivityPath& y0path,
                                                      const DriftWeights& w,
                                                      double blowup = kDefaultBlowup) {
  if (!model.drift_hess) throw unsupported_error(model.name + ": no second-derivative oracle");
  if (!model.drift_grad_x) throw unsupported_error(model.name + ": no x-gradient oracle");
  detail::require_same(x0path.values.grid(), w.grid(), "solve_second_sensitivity");
  detail::require_same(y0path.values.grid(), w.grid(), "solve_second_sensitivity");
  check_theta(model, theta);
  const int d = model.d, p = model.dtheta;
  const auto channels = static_cast<std::size_t>(d * p * p);
  std::vector<double> zero(channels, 0.0);
  auto idx = [d, p](int k, int u, int v) { return static_cast<std::size_t>(k + d * (u + p * v)); };
  auto integrand = [&](std::size_t j, std::span<const double> sj, std::span<double> out) {
    const Vector x = x0path.values.at(j);
    const Matrix gx = model.drift_grad_x(x, theta);
    const DriftHessian hs = model.drift_hess(x, theta);
    const Matrix y = y0path.values.at(j);
    for (int u = 0; u < p; ++u) {
      for (int v = 0; v < p; ++v) {
        for (int k = 0; k < d; ++k) {
          double acc = hs.thetatheta[k](u, v);
          for (int l = 0; l < d; ++l) {
            acc += gx(k, l) * sj[idx(l, u, v)];
            acc += hs.xtheta[k](l, u) * y(l, v) + hs.xtheta[k](l, v) * y(l, u);
            for (int m = 0; m < d; ++m) acc += hs.xx[k](l, m) * y(l, u) * y(m, v);
          }
          out[idx(k, u, v)] = acc;
        }
      }
    }
  };
  auto values = detail::explicit_volterra<false>(w, channels, zero, integrand, detail::NoNoise{},
                                                 0.0, blowup, "solve_second_sensitivity");
  SecondSensitivityPath out{TensorPath(w.grid(), d, p), theta};
  out.values.data() = std::move(values);
  return out;
}

inline SecondSensitivityPath solve_second_sensitivity(const ModelSpec& model,
                                                      const Vector& theta,
                                                      const DetPath& x0path,
                                                      const SensitivityPath& y0path,
                                                      const KernelSpec& spec,
                                                      const GridSpec& grid) {
  return solve_second_sensitivity(model, theta, x0path, y0path, drift_weights(spec, grid));
}

struct ConvergenceReport {
  std::vector<std::size_t> steps;
  // errors[k]: sup over nodes of level k of |X^{(k)} - X^{(k+1)}|
  std::vector<double> errors;
  double order = std::numeric_limits<double>::quiet_NaN();
  bool exact = false;  // every error at round-off level; order undefined
  bool strictly_decreasing = false;
};

inline ConvergenceReport self_convergence(const ModelSpec& model, const Vector& theta,
                                          const KernelSpec& spec, double horizon,
                                          std::span<const std::size_t> ladder) {
  if (ladder.size() < 2) throw domain_error("self_convergence needs at least two resolutions");
  for (std::size_t k = 0; k + 1 < ladder.size(); ++k)
    if (!(ladder[k] < ladder[k + 1]) || ladder[k + 1] % ladder[k] != 0)
      throw domain_error("resolution ladder must be strictly increasing and nested");

  ConvergenceReport rep;
  rep.steps.assign(ladder.begin(), ladder.end());
  std::vector<DetPath> sols;
  sols.reserve(ladder.size());
  for (std::size_t n : ladder) sols.push_back(solve_x0(model, theta, spec, GridSpec(horizon, n)));

  double scale = 1.0;
  for (double v : sols.back().values.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t k = 0; k + 1 < sols.size(); ++k) {
    const std::size_t ratio = ladder[k + 1] / ladder[k];
    double err = 0.0;
    for (std::size_t i = 0; i <= ladder[k]; ++i)
      for (int c = 0; c < model.d; ++c)
        err = std::max(err, std::abs(sols[k].values(i, c) - sols[k + 1].values(i * ratio, c)));
    rep.errors.push_back(err);
  }

  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  rep.exact = true;
  for (double e : rep.errors) rep.exact = rep.exact && e <= roundoff;
  rep.strictly_decreasing = true;
  for (std::size_t k = 0; k + 1 < rep.errors.size(); ++k)
    rep.strictly_decreasing = rep.strictly_decreasing && rep.errors[k + 1] < rep.errors[k];
  if (!rep.exact && rep.errors.size() >= 2) {
    bool positive = true;
    for (double e : rep.errors) positive = positive && e > 0.0;
    if (positive) {
      std::vector<double> h;
      for (std::size_t k = 0; k + 1 < ladder.size(); ++k)
        h.push_back(horizon / static_cast<double>(ladder[k]));
      rep.order = fit_loglog(h, rep.errors).slope;
    }
  }
  return rep;
}

}  // namespace roughtfe
