#pragma once

// Stochastic path X^eps, first-order expansion process Z^0 and the coupled
// residual X^eps - X^0 - eps Z^0. The stochastic convolution uses the
// interval-averaged kernel: int_{t_j}^{t_{j+1}} K(t_i - s) dB_s is replaced
// by (w[i][j] / h) dB_j, with a(.) frozen at the left node (Ito).

#include "roughtfe/errors.hpp"
#include "roughtfe/frac_kernel.hpp"
#include "roughtfe/model.hpp"
#include "roughtfe/noise.hpp"
#include "roughtfe/paths.hpp"
#include "roughtfe/volterra_det.hpp"

#include <cstdint>
#include <vector>

namespace roughtfe {

struct StochPath {
  StatePath values;
  double epsilon = 0.0;
  Vector theta_star;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
};

struct ExpansionPath {
  StatePath values;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
};

namespace detail {

inline void check_noise(const ModelSpec& model, const NoiseStream& noise, const GridSpec& grid) {
  if (noise.dim() != model.r) throw grid_mismatch_error("noise dimension differs from model r");
  require_same(noise.grid(), grid, "noise stream");
}

// a(x) dB_j / h written into out.
inline void noise_integrand(const Matrix& a, const NoiseStream& noise, std::size_t j, double h,
                            std::span<double> out) {
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) acc += a(k, c) * noise(j, static_cast<int>(c));
    out[static_cast<std::size_t>(k)] = acc / h;
  }
}

}  // namespace detail

// X_i = x0 + sum_{j<i} w[i][j] b(X_j, theta*) + eps sum_{j<i} (w[i][j]/h) a(X_j) dB_j
inline StochPath simulate_xeps(const ModelSpec& model, const Vector& theta_star, double epsilon,
                               const DriftWeights& w, const NoiseStream& noise,
                               double blowup = kDefaultBlowup) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw domain_error("epsilon must lie in [0, 1]");
  check_theta(model, theta_star);
  detail::check_noise(model, noise, w.grid());
  const auto d = static_cast<std::size_t>(model.d);
  const double h = w.grid().step();
  std::span<const double> base(model.x0.data(), d);
  auto drift = [&](std::size_t, std::span<const double> x, std::span<double> out) {
    const Vector b = model.drift(detail::to_vector(x), theta_star);
    for (std::size_t k = 0; k < d; ++k) out[k] = b(static_cast<Eigen::Index>(k));
  };
  auto diffusion = [&](std::size_t j, std::span<const double> x, std::span<double> out) {
    detail::noise_integrand(model.diffusion(detail::to_vector(x)), noise, j, h, out);
  };
  auto values = detail::explicit_volterra<true>(w, d, base, drift, diffusion, epsilon, blowup,
                                                "simulate_xeps");
  return StochPath{StatePath(w.grid(), model.d, std::move(values)), epsilon, theta_star,
                   noise.seed(), noise.replicate()};
}

inline StochPath simulate_xeps(const ModelSpec& model, const Vector& theta_star, double epsilon,
                               const KernelSpec& spec, const GridSpec& grid,
                               const NoiseStream& noise) {
  return simulate_xeps(model, theta_star, epsilon, drift_weights(spec, grid), noise);
}

// Z_i = sum_{j<i} w[i][j] grad_x b(X0_j, theta*) Z_j + sum_{j<i} (w[i][j]/h) a(X0_j) dB_j
inline ExpansionPath simulate_z0(const ModelSpec& model, const Vector& theta_star,
                                 const DetPath& x0path, const DriftWeights& w,
                                 const NoiseStream& noise, double blowup = kDefaultBlowup) {
  if (!model.drift_grad_x) throw unsupported_error(model.name + ": no x-gradient oracle");
  check_theta(model, theta_star);
  detail::require_same(x0path.values.grid(), w.grid(), "simulate_z0");
  detail::check_noise(model, noise, w.grid());
  const auto d = static_cast<std::size_t>(model.d);
  const double h = w.grid().step();
  std::vector<double> zero(d, 0.0);
  std::vector<double> nbuf(d);
  // Both parts share one accumulator: Z is a single linear recursion.
  auto integrand = [&](std::size_t j, std::span<const double> z, std::span<double> out) {
    const Vector x = x0path.values.at(j);
    const Matrix gx = model.drift_grad_x(x, theta_star);
    detail::noise_integrand(model.diffusion(x), noise, j, h, nbuf);
    const Vector lin = gx * detail::to_vector(z);
    for (std::size_t k = 0; k < d; ++k) out[k] = lin(static_cast<Eigen::Index>(k)) + nbuf[k];
  };
  auto values = detail::explicit_volterra<false>(w, d, zero, integrand, detail::NoNoise{}, 0.0,
                                                 blowup, "simulate_z0");
  return ExpansionPath{StatePath(w.grid(), model.d, std::move(values)), noise.seed(),
                       noise.replicate()};
}

inline ExpansionPath simulate_z0(const ModelSpec& model, const Vector& theta_star,
                                 const DetPath& x0path, const KernelSpec& spec,
                                 const GridSpec& grid, const NoiseStream& noise) {
  return simulate_z0(model, theta_star, x0path, drift_weights(spec, grid), noise);
}

// E_i = X^eps_i - X^0_i - eps Z_i
inline StatePath expansion_residual(const StochPath& xeps, const DetPath& x0path,
                                    const ExpansionPath& z0) {
  detail::require_same(xeps.values.grid(), x0path.values.grid(), "expansion_residual");
  detail::require_same(xeps.values.grid(), z0.values.grid(), "expansion_residual");
  if (xeps.values.dim() != x0path.values.dim() || xeps.values.dim() != z0.values.dim())
    throw grid_mismatch_error("expansion_residual: path dimensions differ");
  if (xeps.seed != z0.seed || xeps.replicate != z0.replicate)
    throw grid_mismatch_error("expansion_residual: X^eps and Z^0 use different noise streams");
  StatePath out(xeps.values.grid(), xeps.values.dim());
  const auto& a = xeps.values.data();
  const auto& b = x0path.values.data();
  const auto& c = z0.values.data();
  for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a[k] - b[k] - xeps.epsilon * c[k];
  return out;
}

}  // namespace roughtfe
