#pragma once

// Trajectory fitting estimator: contrast Q(theta) = int_0^T |X_t - X^0_t(theta)|^2 dt,
// its gradient, the two-stage minimiser, the information matrix J(theta), the
// coupled small-noise limit variable and the identifiability scan.

#include "roughtfe/errors.hpp"
#include "roughtfe/fit.hpp"
#include "roughtfe/frac_kernel.hpp"
#include "roughtfe/model.hpp"
#include "roughtfe/nelder_mead.hpp"
#include "roughtfe/noise.hpp"
#include "roughtfe/paths.hpp"
#include "roughtfe/volterra_det.hpp"
#include "roughtfe/volterra_sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace roughtfe {

inline constexpr double kDetThreshold = 1e-10;
inline constexpr double kBoundaryMargin = 1e-9;

struct ContrastValue {
  double value = 0.0;
  Vector theta;
};

namespace detail {

// Trapezoidal rule over the grid nodes for f sampled at every node.
template <class F>
double trapezoid(const GridSpec& grid, F&& f) {
  const std::size_t n = grid.steps();
  double acc = 0.5 * (f(std::size_t{0}) + f(n));
  for (std::size_t i = 1; i < n; ++i) acc += f(i);
  return acc * grid.step();
}

inline void check_obs(const StatePath& obs, const ModelSpec& model, const DriftWeights& w) {
  require_same(obs.grid(), w.grid(), "observation");
  if (obs.dim() != model.d) throw grid_mismatch_error("observation dimension differs from model");
}

}  // namespace detail

inline ContrastValue contrast(const StatePath& obs, const ModelSpec& model, const Vector& theta,
                              const DriftWeights& w) {
  detail::check_obs(obs, model, w);
  const DetPath x0 = solve_x0(model, theta, w);
  const int d = model.d;
  const double q = detail::trapezoid(w.grid(), [&](std::size_t i) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
      const double r = obs(i, k) - x0.values(i, k);
      s += r * r;
    }
    return s;
  });
  return ContrastValue{q, theta};
}

inline ContrastValue contrast(const StatePath& obs, const ModelSpec& model, const Vector& theta,
                              const KernelSpec& spec, const GridSpec& grid) {
  return contrast(obs, model, theta, drift_weights(spec, grid));
}

// -2 int (obs_t - X^0_t(theta))^T Y^0_t(theta) dt; Y^0 is the exact derivative
// of the discrete X^0 recursion, so this is the gradient of the discrete
// contrast.
inline Vector contrast_gradient(const StatePath& obs, const ModelSpec& model, const Vector& theta,
                                const DriftWeights& w) {
  detail::check_obs(obs, model, w);
  const DetPath x0 = solve_x0(model, theta, w);
  const SensitivityPath y0 = solve_y0(model, theta, x0, w);
  const int d = model.d, p = model.dtheta;
  Vector g(p);
  for (int u = 0; u < p; ++u) {
    g(u) = -2.0 * detail::trapezoid(w.grid(), [&](std::size_t i) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += (obs(i, k) - x0.values(i, k)) * y0.values(i, k, u);
      return s;
    });
  }
  return g;
}

inline Vector contrast_gradient(const StatePath& obs, const ModelSpec& model, const Vector& theta,
                                const KernelSpec& spec, const GridSpec& grid) {
  return contrast_gradient(obs, model, theta, drift_weights(spec, grid));
}

struct EstimateOptions {
  int grid_points = 11;             // Stage 1 points per dimension
  double rel_tol = 1e-6;            // simplex diameter relative to box diameter
  int max_iter = 500;
  std::uint64_t stage1_shuffle = 0;  // nonzero: enumerate Stage 1 in a shuffled order
};

struct EstimationResult {
  Vector theta_hat;
  double q_min = 0.0;
  int evaluations = 0;
  Vector stage1_theta;
  double stage1_q = 0.0;
  std::vector<std::pair<Vector, double>> refinement;  // best vertex per NM iteration
  bool converged = false;
  bool boundary_hit = false;
};

inline bool near_boundary(const ParamDomain& box, const Vector& theta,
                          double margin = kBoundaryMargin) {
  for (int k = 0; k < box.dim(); ++k)
    if (theta(k) - box.lower()(k) <= margin || box.upper()(k) - theta(k) <= margin) return true;
  return false;
}

// Stage 1: uniform grid over the closed box, best value kept, exact ties
// resolved towards the lexicographically smallest theta.
// Stage 2: box-projected Nelder-Mead from the Stage 1 winner.
inline EstimationResult estimate(const StatePath& obs, const ModelSpec& model,
                                 const DriftWeights& w, const EstimateOptions& opts = {}) {
  detail::check_obs(obs, model, w);
  if (opts.grid_points < 2) throw domain_error("Stage 1 needs at least 2 points per dimension");
  const ParamDomain& box = model.domain;
  const int p = box.dim();
  EstimationResult res;
  auto q = [&](const Vector& theta) {
    ++res.evaluations;
    return contrast(obs, model, theta, w).value;
  };

  std::size_t total = 1;
  for (int k = 0; k < p; ++k) total *= static_cast<std::size_t>(opts.grid_points);
  std::vector<std::size_t> enumeration(total);
  std::iota(enumeration.begin(), enumeration.end(), std::size_t{0});
  if (opts.stage1_shuffle != 0) {
    std::mt19937_64 rng(opts.stage1_shuffle);
    std::shuffle(enumeration.begin(), enumeration.end(), rng);
  }

  const Vector spacing = (box.upper() - box.lower()) / static_cast<double>(opts.grid_points - 1);
  bool have = false;
  for (std::size_t flat : enumeration) {
    Vector theta(p);
    std::size_t rem = flat;
    for (int k = p - 1; k >= 0; --k) {
      const auto idx = rem % static_cast<std::size_t>(opts.grid_points);
      rem /= static_cast<std::size_t>(opts.grid_points);
      theta(k) = idx + 1 == static_cast<std::size_t>(opts.grid_points)
                     ? box.upper()(k)
                     : box.lower()(k) + static_cast<double>(idx) * spacing(k);
    }
    const double v = q(theta);
    if (!have || v < res.stage1_q ||
        (v == res.stage1_q && lexicographic_less(theta, res.stage1_theta))) {
      res.stage1_theta = theta;
      res.stage1_q = v;
      have = true;
    }
  }

  const double tol = opts.rel_tol * box.diameter();
  auto nm = nelder_mead_box(q, box, res.stage1_theta, spacing, tol, opts.max_iter);
  res.converged = nm.converged;
  res.refinement = std::move(nm.trace);
  if (nm.value <= res.stage1_q) {
    res.theta_hat = nm.x;
    res.q_min = nm.value;
  } else {
    res.theta_hat = res.stage1_theta;
    res.q_min = res.stage1_q;
  }
  res.boundary_hit = near_boundary(box, res.theta_hat);
  return res;
}

inline EstimationResult estimate(const StatePath& obs, const ModelSpec& model,
                                 const KernelSpec& spec, const GridSpec& grid,
                                 const EstimateOptions& opts = {}) {
  return estimate(obs, model, drift_weights(spec, grid), opts);
}

// eta_u(t_i) = sum_{j<i} w[i][j] d/dtheta_u [ b(X^0_{t_j}(theta), theta) ]
//            = sum_{j<i} w[i][j] (grad_x b Y_j + grad_theta b)_{., u}.
// On the grid this coincides with Y^0(theta) up to rounding.
inline MatrixPath smoothed_drift_derivative(const ModelSpec& model, const Vector& theta,
                                            const DetPath& x0, const SensitivityPath& y0,
                                            const DriftWeights& w) {
  const int d = model.d, p = model.dtheta;
  const std::size_t n = w.grid().steps();
  const auto ch = static_cast<std::size_t>(d * p);
  std::vector<double> integrand((n + 1) * ch);
  for (std::size_t j = 0; j <= n; ++j) {
    const Vector x = x0.values.at(j);
    const Matrix f = model.drift_grad_x(x, theta) * y0.values.at(j) +
                     model.drift_grad_theta(x, theta);
    for (int u = 0; u < p; ++u)
      for (int k = 0; k < d; ++k) integrand[j * ch + u * d + k] = f(k, u);
  }
  MatrixPath eta(w.grid(), d, p);
  eta.data() = product_integrate(w, ch, integrand);
  return eta;
}

struct FisherMatrix {
  Matrix matrix;
  double det = 0.0;
  Vector theta;
};

namespace detail {

inline FisherMatrix gram_matrix(const MatrixPath& eta, const Vector& theta) {
  const int d = eta.rows(), p = eta.cols();
  Matrix j(p, p);
  for (int u = 0; u < p; ++u)
    for (int v = 0; v <= u; ++v) {
      const double val = 2.0 * trapezoid(eta.grid(), [&](std::size_t i) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += eta(i, k, u) * eta(i, k, v);
        return s;
      });
      j(u, v) = val;
      j(v, u) = val;
    }
  return FisherMatrix{j, j.determinant(), theta};
}

}  // namespace detail

// J_{uv}(theta) = 2 int eta_u(t)^T eta_v(t) dt
inline FisherMatrix fisher_matrix(const ModelSpec& model, const Vector& theta,
                                  const DriftWeights& w) {
  const DetPath x0 = solve_x0(model, theta, w);
  const SensitivityPath y0 = solve_y0(model, theta, x0, w);
  return detail::gram_matrix(smoothed_drift_derivative(model, theta, x0, y0, w), theta);
}

inline FisherMatrix fisher_matrix(const ModelSpec& model, const Vector& theta,
                                  const KernelSpec& spec, const GridSpec& grid) {
  return fisher_matrix(model, theta, drift_weights(spec, grid));
}

struct LimitSample {
  Vector qdot1;
  Vector qdot2;
  Vector limit;  // -J^{-1} (qdot1 + qdot2)^T
  FisherMatrix fisher;
};

// Limit of eps^{-1}(theta_hat - theta*) driven by the given noise stream:
//   qdot1_u = -2 int (sum w grad_x b(X^0) Z^0)^T eta_u dt
//   qdot2_u = -2 int (sum (w/h) a(X^0) dB)^T eta_u dt
inline LimitSample limit_variable(const ModelSpec& model, const Vector& theta_star,
                                  const DriftWeights& w, const NoiseStream& noise) {
  if (!model.domain.is_interior(theta_star, kBoundaryMargin))
    throw domain_error("limit_variable requires theta* in the interior of the box");
  const DetPath x0 = solve_x0(model, theta_star, w);
  const SensitivityPath y0 = solve_y0(model, theta_star, x0, w);
  const MatrixPath eta = smoothed_drift_derivative(model, theta_star, x0, y0, w);
  LimitSample out;
  out.fisher = detail::gram_matrix(eta, theta_star);
  if (!(out.fisher.det > kDetThreshold))
    throw singular_matrix_error("det J(theta*) is below 1e-10: information matrix is singular");

  const ExpansionPath z0 = simulate_z0(model, theta_star, x0, w, noise);
  const int d = model.d, p = model.dtheta;
  const std::size_t n = w.grid().steps();
  const double h = w.grid().step();
  std::vector<double> lin((n + 1) * d), forcing((n + 1) * d);
  std::vector<double> buf(d);
  for (std::size_t j = 0; j <= n; ++j) {
    const Vector x = x0.values.at(j);
    const Vector l = model.drift_grad_x(x, theta_star) * z0.values.at(j);
    for (int k = 0; k < d; ++k) lin[j * d + k] = l(k);
    if (j < n) {
      detail::noise_integrand(model.diffusion(x), noise, j, h, buf);
      for (int k = 0; k < d; ++k) forcing[j * d + k] = buf[k];
    } else {
      for (int k = 0; k < d; ++k) forcing[j * d + k] = 0.0;  // never weighted
    }
  }
  const auto drift_part = product_integrate(w, static_cast<std::size_t>(d), lin);
  const auto noise_part = product_integrate(w, static_cast<std::size_t>(d), forcing);

  out.qdot1.resize(p);
  out.qdot2.resize(p);
  for (int u = 0; u < p; ++u) {
    out.qdot1(u) = -2.0 * detail::trapezoid(w.grid(), [&](std::size_t i) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += drift_part[i * d + k] * eta(i, k, u);
      return s;
    });
    out.qdot2(u) = -2.0 * detail::trapezoid(w.grid(), [&](std::size_t i) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += noise_part[i * d + k] * eta(i, k, u);
      return s;
    });
  }
  out.limit = -out.fisher.matrix.inverse() * (out.qdot1 + out.qdot2);
  return out;
}

inline LimitSample limit_variable(const ModelSpec& model, const Vector& theta_star,
                                  const KernelSpec& spec, const GridSpec& grid,
                                  const NoiseStream& noise) {
  return limit_variable(model, theta_star, drift_weights(spec, grid), noise);
}

struct ScanSpec {
  double r_min = 1e-3;
  double r_max = 1e-1;
  std::size_t radii = 9;
};

struct IdentReport {
  Vector theta_star;
  std::vector<Vector> theta_grid;  // first entry is theta* itself
  std::vector<int> ray;            // -1 for theta*
  std::vector<double> radius;
  std::vector<double> I_values;   // int |b(X^0(theta),theta) - b(X^0(theta*),theta*)|^2 dt
  std::vector<double> Q0_values;  // Q_0(theta)
  std::vector<double> bbar_sup;   // sup_t |int_0^t bbar(s) ds|
  std::vector<Vector> ray_directions;
  std::vector<double> rho_per_ray, rho_prime_per_ray;
  double rho_hat = 0.0, rho_prime_hat = 0.0;        // pooled least-squares exponents
  double log_c_fit = 0.0, log_c_prime_fit = 0.0;    // pooled least-squares intercepts
  // Largest constants for which I >= c r^rho and Q0 >= c' r^rho' hold at every
  // scan point with the fitted exponents.
  double c_hat = 0.0, c_prime_hat = 0.0;
};

// Signed coordinate axes plus, for d_theta >= 2, the two normalised main
// diagonals +-(1,...,1)/sqrt(d_theta).
inline std::vector<Vector> scan_directions(int dtheta) {
  std::vector<Vector> dirs;
  for (int k = 0; k < dtheta; ++k) {
    Vector e = Vector::Zero(dtheta);
    e(k) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (dtheta >= 2) {
    const Vector diag = Vector::Ones(dtheta) / std::sqrt(static_cast<double>(dtheta));
    dirs.push_back(diag);
    dirs.push_back(-diag);
  }
  return dirs;
}

inline IdentReport identifiability_scan(const ModelSpec& model, const Vector& theta_star,
                                        const DriftWeights& w, const ScanSpec& scan = {}) {
  if (!model.domain.is_interior(theta_star, kBoundaryMargin))
    throw domain_error("identifiability_scan requires theta* in the interior of the box");
  if (!(scan.r_min > 0.0 && scan.r_max > scan.r_min) || scan.radii < 2)
    throw domain_error("scan radii must satisfy 0 < r_min < r_max with at least two radii");
  const int d = model.d;
  const GridSpec& grid = w.grid();
  const DetPath ref = solve_x0(model, theta_star, w);
  std::vector<Vector> bref(grid.nodes());
  for (std::size_t i = 0; i < grid.nodes(); ++i) bref[i] = model.drift(ref.values.at(i), theta_star);

  IdentReport rep;
  rep.theta_star = theta_star;
  rep.ray_directions = scan_directions(model.dtheta);
  auto evaluate = [&](const Vector& theta, int ray, double r) {
    const DetPath x0 = solve_x0(model, theta, w);
    std::vector<double> bbar2(grid.nodes()), diff2(grid.nodes());
    double cum = 0.0, sup = 0.0;
    Vector prev = Vector::Zero(d);
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
      const Vector bb = model.drift(x0.values.at(i), theta) - bref[i];
      bbar2[i] = bb.squaredNorm();
      diff2[i] = (x0.values.at(i) - ref.values.at(i)).squaredNorm();
      if (i > 0) cum += 0.5 * grid.step() * (prev + bb).norm();
      sup = std::max(sup, cum);
      prev = bb;
    }
    rep.theta_grid.push_back(theta);
    rep.ray.push_back(ray);
    rep.radius.push_back(r);
    rep.I_values.push_back(detail::trapezoid(grid, [&](std::size_t i) { return bbar2[i]; }));
    rep.Q0_values.push_back(detail::trapezoid(grid, [&](std::size_t i) { return diff2[i]; }));
    rep.bbar_sup.push_back(sup);
  };

  evaluate(theta_star, -1, 0.0);
  const double lr0 = std::log(scan.r_min), lr1 = std::log(scan.r_max);
  for (std::size_t ray = 0; ray < rep.ray_directions.size(); ++ray) {
    for (std::size_t k = 0; k < scan.radii; ++k) {
      const double r = std::exp(lr0 + (lr1 - lr0) * static_cast<double>(k) /
                                           static_cast<double>(scan.radii - 1));
      const Vector theta = theta_star + r * rep.ray_directions[ray];
      if (!model.domain.contains(theta)) continue;
      evaluate(theta, static_cast<int>(ray), r);
    }
  }

  std::vector<double> rs, is, qs;
  for (std::size_t m = 1; m < rep.theta_grid.size(); ++m) {
    if (rep.I_values[m] == 0.0 || rep.Q0_values[m] == 0.0)
      throw degenerate_fit_error(
          "identifiability scan: drift discrepancy vanishes away from theta* on the grid");
    rs.push_back(rep.radius[m]);
    is.push_back(rep.I_values[m]);
    qs.push_back(rep.Q0_values[m]);
  }
  if (rs.size() < 2) throw degenerate_fit_error("identifiability scan: too few points in the box");

  for (std::size_t ray = 0; ray < rep.ray_directions.size(); ++ray) {
    std::vector<double> r1, i1, q1;
    for (std::size_t m = 1; m < rep.theta_grid.size(); ++m)
      if (rep.ray[m] == static_cast<int>(ray)) {
        r1.push_back(rep.radius[m]);
        i1.push_back(rep.I_values[m]);
        q1.push_back(rep.Q0_values[m]);
      }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.rho_per_ray.push_back(r1.size() >= 2 ? fit_loglog(r1, i1).slope : nan);
    rep.rho_prime_per_ray.push_back(r1.size() >= 2 ? fit_loglog(r1, q1).slope : nan);
  }

  const RateFit fi = fit_loglog(rs, is);
  const RateFit fq = fit_loglog(rs, qs);
  rep.rho_hat = fi.slope;
  rep.rho_prime_hat = fq.slope;
  rep.log_c_fit = fi.intercept;
  rep.log_c_prime_fit = fq.intercept;
  rep.c_hat = std::numeric_limits<double>::infinity();
  rep.c_prime_hat = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < rs.size(); ++m) {
    rep.c_hat = std::min(rep.c_hat, is[m] / std::pow(rs[m], rep.rho_hat));
    rep.c_prime_hat = std::min(rep.c_prime_hat, qs[m] / std::pow(rs[m], rep.rho_prime_hat));
  }
  return rep;
}

inline IdentReport identifiability_scan(const ModelSpec& model, const Vector& theta_star,
                                        const KernelSpec& spec, const GridSpec& grid,
                                        const ScanSpec& scan = {}) {
  return identifiability_scan(model, theta_star, drift_weights(spec, grid), scan);
}

}  // namespace roughtfe
