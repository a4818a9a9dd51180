#pragma once

#include "roughtfe/errors.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace roughtfe {

struct RateFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double slope_se = std::numeric_limits<double>::quiet_NaN();  // NaN with < 3 points
  std::vector<double> residuals;                               // in log space
};

// Ordinary least squares of log(y) on log(x).
inline RateFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw domain_error("fit_loglog: x and y differ in length");
  if (x.size() < 2) throw domain_error("fit_loglog: need at least two points");
  const std::size_t m = x.size();
  std::vector<double> lx(m), ly(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0) || !std::isfinite(x[k]) || !std::isfinite(y[k]))
      throw domain_error("fit_loglog: values must be positive and finite");
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (!(sxx > 0.0)) throw domain_error("fit_loglog: x values must not all coincide");
  RateFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double rss = 0.0;
  out.residuals.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    out.residuals[k] = ly[k] - (out.intercept + out.slope * lx[k]);
    rss += out.residuals[k] * out.residuals[k];
  }
  if (m >= 3) out.slope_se = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  return out;
}

// Rate of error(eps) ~ C eps^slope from (eps, error) pairs; at least three.
inline RateFit fit_rate(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw domain_error("fit_rate: need at least three (eps, error) pairs");
  std::vector<double> x, y;
  for (const auto& [e, err] : pairs) {
    x.push_back(e);
    y.push_back(err);
  }
  return fit_loglog(x, y);
}

}  // namespace roughtfe
