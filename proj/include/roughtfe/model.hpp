#pragma once

// Drift/diffusion model family for
//   X_t = x0 + eps * int K(t-s) a(X_s) dB_s + int K(t-s) b(X_s, theta) ds
// with analytic derivative oracles and the compact parameter box.

#include "roughtfe/errors.hpp"
#include "roughtfe/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace roughtfe {

class ParamDomain {
 public:
  ParamDomain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() == 0)
      throw domain_error("parameter box bounds must have equal, positive length");
    for (Eigen::Index k = 0; k < lower_.size(); ++k)
      if (!(lower_(k) < upper_(k))) throw domain_error("parameter box must be non-degenerate");
  }

  int dim() const noexcept { return static_cast<int>(lower_.size()); }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }

  bool contains(const Vector& theta) const noexcept {
    if (theta.size() != lower_.size()) return false;
    for (Eigen::Index k = 0; k < theta.size(); ++k)
      if (!(theta(k) >= lower_(k) && theta(k) <= upper_(k))) return false;
    return true;
  }

  bool is_interior(const Vector& theta, double margin = 1e-9) const noexcept {
    if (theta.size() != lower_.size()) return false;
    for (Eigen::Index k = 0; k < theta.size(); ++k)
      if (!(theta(k) > lower_(k) + margin && theta(k) < upper_(k) - margin)) return false;
    return true;
  }

  Vector project(const Vector& theta) const {
    return theta.cwiseMax(lower_).cwiseMin(upper_);
  }

  double diameter() const { return (upper_ - lower_).norm(); }

 private:
  Vector lower_;
  Vector upper_;
};

// Second derivatives of the drift. For each output component i:
//   xx[i]         d x d         d^2 b_i / dx_k dx_l
//   xtheta[i]     d x d_theta   d^2 b_i / dx_k dtheta_u
//   thetatheta[i] d_theta x d_theta
struct DriftHessian {
  std::vector<Matrix> xx;
  std::vector<Matrix> xtheta;
  std::vector<Matrix> thetatheta;
};

enum class BuiltinFamily { ConstantDrift, FractionalLinear, BoundedNonlinear };

struct ModelSpec {
  std::string name;
  Vector x0;
  int d = 1;
  int r = 1;
  int dtheta = 1;
  std::function<Vector(const Vector& x, const Vector& theta)> drift;
  std::function<Matrix(const Vector& x, const Vector& theta)> drift_grad_x;      // d x d
  std::function<Matrix(const Vector& x, const Vector& theta)> drift_grad_theta;  // d x d_theta
  std::function<DriftHessian(const Vector& x, const Vector& theta)> drift_hess;  // optional
  std::function<Matrix(const Vector& x)> diffusion;                             // d x r
  ParamDomain domain;
  std::optional<BuiltinFamily> family;  // unset for user-supplied models
};

inline void check_theta(const ModelSpec& model, const Vector& theta) {
  if (!model.domain.contains(theta)) {
    std::ostringstream os;
    os << "theta = [" << theta.transpose() << "] lies outside the parameter box";
    throw domain_error(os.str());
  }
}

inline Vector eval_drift(const ModelSpec& model, const Vector& x, const Vector& theta) {
  check_theta(model, theta);
  return model.drift(x, theta);
}

inline Matrix eval_drift_grad_x(const ModelSpec& model, const Vector& x, const Vector& theta) {
  if (!model.drift_grad_x) throw unsupported_error(model.name + ": no x-gradient oracle");
  check_theta(model, theta);
  return model.drift_grad_x(x, theta);
}

inline Matrix eval_drift_grad_theta(const ModelSpec& model, const Vector& x,
                                    const Vector& theta) {
  if (!model.drift_grad_theta) throw unsupported_error(model.name + ": no theta-gradient oracle");
  check_theta(model, theta);
  return model.drift_grad_theta(x, theta);
}

inline Matrix eval_diffusion(const ModelSpec& model, const Vector& x) { return model.diffusion(x); }

namespace detail {

inline DriftHessian zero_hessian(int d, int dtheta) {
  DriftHessian h;
  h.xx.assign(d, Matrix::Zero(d, d));
  h.xtheta.assign(d, Matrix::Zero(d, dtheta));
  h.thetatheta.assign(d, Matrix::Zero(dtheta, dtheta));
  return h;
}

}  // namespace detail

// b(x, theta) = theta, a(x) = sigma * I_d.
inline ModelSpec constant_drift(int dim, double sigma, Vector x0, ParamDomain domain) {
  if (dim < 1 || dim > kMaxDim) throw domain_error("ConstantDrift dimension out of range");
  if (x0.size() != dim || domain.dim() != dim)
    throw domain_error("ConstantDrift requires x0 and the box to have dimension d");
  ModelSpec m{.name = "constant_drift",
              .x0 = std::move(x0),
              .d = dim,
              .r = dim,
              .dtheta = dim,
              .drift = [](const Vector&, const Vector& theta) -> Vector { return theta; },
              .drift_grad_x = [dim](const Vector&, const Vector&) -> Matrix {
                return Matrix::Zero(dim, dim);
              },
              .drift_grad_theta = [dim](const Vector&, const Vector&) -> Matrix {
                return Matrix::Identity(dim, dim);
              },
              .drift_hess = [dim](const Vector&, const Vector&) {
                return detail::zero_hessian(dim, dim);
              },
              .diffusion = [dim, sigma](const Vector&) -> Matrix {
                return sigma * Matrix::Identity(dim, dim);
              },
              .domain = std::move(domain),
              .family = BuiltinFamily::ConstantDrift};
  return m;
}

// b(x, theta) = -theta_1 x + theta_2, a(x) = sigma, d = r = 1.
// With d_theta = 1 the intercept is the fixed value `offset`.
inline ModelSpec fractional_linear(int dtheta, double sigma, double x0, ParamDomain domain,
                                   double offset = 0.0) {
  if (dtheta != 1 && dtheta != 2) throw domain_error("FractionalLinear requires d_theta in {1,2}");
  if (domain.dim() != dtheta) throw domain_error("FractionalLinear box dimension mismatch");
  auto intercept = [dtheta, offset](const Vector& theta) {
    return dtheta == 2 ? theta(1) : offset;
  };
  ModelSpec m{.name = "fractional_linear",
              .x0 = make_vector({x0}),
              .d = 1,
              .r = 1,
              .dtheta = dtheta,
              .drift = [intercept](const Vector& x, const Vector& theta) -> Vector {
                return make_vector({-theta(0) * x(0) + intercept(theta)});
              },
              .drift_grad_x = [](const Vector&, const Vector& theta) -> Matrix {
                Matrix g(1, 1);
                g(0, 0) = -theta(0);
                return g;
              },
              .drift_grad_theta = [dtheta](const Vector& x, const Vector&) -> Matrix {
                Matrix g(1, dtheta);
                g(0, 0) = -x(0);
                if (dtheta == 2) g(0, 1) = 1.0;
                return g;
              },
              .drift_hess = [dtheta](const Vector&, const Vector&) {
                auto h = detail::zero_hessian(1, dtheta);
                h.xtheta[0](0, 0) = -1.0;
                return h;
              },
              .diffusion = [sigma](const Vector&) -> Matrix {
                Matrix a(1, 1);
                a(0, 0) = sigma;
                return a;
              },
              .domain = std::move(domain),
              .family = BuiltinFamily::FractionalLinear};
  return m;
}

// b(x, theta) = theta_1 tanh(x) + theta_2, a(x) = sigma (1 + cos^2 x) / 2.
inline ModelSpec bounded_nonlinear(double sigma, double x0, ParamDomain domain) {
  if (domain.dim() != 2) throw domain_error("BoundedNonlinear requires d_theta = 2");
  ModelSpec m{.name = "bounded_nonlinear",
              .x0 = make_vector({x0}),
              .d = 1,
              .r = 1,
              .dtheta = 2,
              .drift = [](const Vector& x, const Vector& theta) -> Vector {
                return make_vector({theta(0) * std::tanh(x(0)) + theta(1)});
              },
              .drift_grad_x = [](const Vector& x, const Vector& theta) -> Matrix {
                const double c = std::cosh(x(0));
                Matrix g(1, 1);
                g(0, 0) = theta(0) / (c * c);
                return g;
              },
              .drift_grad_theta = [](const Vector& x, const Vector&) -> Matrix {
                Matrix g(1, 2);
                g(0, 0) = std::tanh(x(0));
                g(0, 1) = 1.0;
                return g;
              },
              .drift_hess = [](const Vector& x, const Vector& theta) {
                auto h = detail::zero_hessian(1, 2);
                const double c = std::cosh(x(0));
                const double sech2 = 1.0 / (c * c);
                h.xx[0](0, 0) = -2.0 * theta(0) * sech2 * std::tanh(x(0));
                h.xtheta[0](0, 0) = sech2;
                return h;
              },
              .diffusion = [sigma](const Vector& x) -> Matrix {
                const double c = std::cos(x(0));
                Matrix a(1, 1);
                a(0, 0) = sigma * (1.0 + c * c) / 2.0;
                return a;
              },
              .domain = std::move(domain),
              .family = BuiltinFamily::BoundedNonlinear};
  return m;
}

struct LipschitzReport {
  double drift_ratio = 0.0;
  double diffusion_ratio = 0.0;
  std::size_t pairs = 0;
  bool above_threshold = false;
};

// Largest observed |b(x,theta) - b(x',theta)| / |x - x'| (and the operator-
// norm analogue for a) over random pairs in the ball of the given radius
// around x0. theta is drawn uniformly from the box unless fixed. Diagnostic
// only.
inline LipschitzReport lipschitz_probe(const ModelSpec& model, std::size_t samples, double radius,
                                       std::uint64_t seed,
                                       std::optional<Vector> fixed_theta = std::nullopt,
                                       double warn_threshold = 1e3) {
  if (samples < 2) throw domain_error("lipschitz_probe requires at least 2 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  LipschitzReport rep;
  for (std::size_t s = 0; s < samples; ++s) {
    Vector x(model.d), y(model.d);
    for (int k = 0; k < model.d; ++k) {
      x(k) = model.x0(k) + radius * unit(rng);
      y(k) = model.x0(k) + radius * unit(rng);
    }
    Vector theta;
    if (fixed_theta) {
      theta = *fixed_theta;
    } else {
      theta.resize(model.dtheta);
      for (int k = 0; k < model.dtheta; ++k)
        theta(k) = model.domain.lower()(k) +
                   u01(rng) * (model.domain.upper()(k) - model.domain.lower()(k));
    }
    const double dx = (x - y).norm();
    if (dx == 0.0) continue;
    const double db = (model.drift(x, theta) - model.drift(y, theta)).norm();
    const Matrix da = model.diffusion(x) - model.diffusion(y);
    const double da_op = Eigen::JacobiSVD<Matrix>(da).singularValues()(0);
    rep.drift_ratio = std::max(rep.drift_ratio, db / dx);
    rep.diffusion_ratio = std::max(rep.diffusion_ratio, da_op / dx);
    ++rep.pairs;
  }
  rep.above_threshold = rep.drift_ratio > warn_threshold || rep.diffusion_ratio > warn_threshold;
  return rep;
}

struct DerivativeCheck {
  double max_rel_error_grad_x = 0.0;
  double max_rel_error_grad_theta = 0.0;
  std::size_t points = 0;
  bool passed = true;
};

// Compares the analytic Jacobians with central differences at random
// (x, theta), theta drawn from the interior of the box. Errors are relative
// to max(1, |analytic entry|).
inline DerivativeCheck validate_derivatives(const ModelSpec& model, std::size_t points,
                                            std::uint64_t seed, double step = 1e-5,
                                            double rel_tol = 1e-6, double x_radius = 2.0) {
  if (!model.drift_grad_x || !model.drift_grad_theta)
    throw unsupported_error(model.name + ": derivative oracles missing");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> inner(0.05, 0.95);
  DerivativeCheck out;
  auto rel = [](double a, double fd) { return std::abs(a - fd) / std::max(1.0, std::abs(a)); };
  for (std::size_t p = 0; p < points; ++p) {
    Vector x(model.d), theta(model.dtheta);
    for (int k = 0; k < model.d; ++k) x(k) = model.x0(k) + x_radius * unit(rng);
    for (int k = 0; k < model.dtheta; ++k)
      theta(k) = model.domain.lower()(k) +
                 inner(rng) * (model.domain.upper()(k) - model.domain.lower()(k));
    const Matrix gx = model.drift_grad_x(x, theta);
    const Matrix gt = model.drift_grad_theta(x, theta);
    for (int k = 0; k < model.d; ++k) {
      Vector xp = x, xm = x;
      xp(k) += step;
      xm(k) -= step;
      const Vector fd = (model.drift(xp, theta) - model.drift(xm, theta)) / (2.0 * step);
      for (int i = 0; i < model.d; ++i)
        out.max_rel_error_grad_x = std::max(out.max_rel_error_grad_x, rel(gx(i, k), fd(i)));
    }
    for (int u = 0; u < model.dtheta; ++u) {
      Vector tp = theta, tm = theta;
      tp(u) += step;
      tm(u) -= step;
      const Vector fd = (model.drift(x, tp) - model.drift(x, tm)) / (2.0 * step);
      for (int i = 0; i < model.d; ++i)
        out.max_rel_error_grad_theta =
            std::max(out.max_rel_error_grad_theta, rel(gt(i, u), fd(i)));
    }
    ++out.points;
  }
  out.passed = out.max_rel_error_grad_x <= rel_tol && out.max_rel_error_grad_theta <= rel_tol;
  return out;
}

}  // namespace roughtfe
