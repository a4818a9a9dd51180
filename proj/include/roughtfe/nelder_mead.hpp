#pragma once

// Nelder-Mead restricted to a box: every trial point is projected onto the
// box before evaluation.

#include "roughtfe/linalg.hpp"
#include "roughtfe/model.hpp"

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

namespace roughtfe {

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<std::pair<Vector, double>> trace;  // best vertex after each iteration
};

inline bool lexicographic_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Terminates when the largest vertex distance from the best vertex drops
// below `tol` or after `max_iter` iterations.
template <class F>
NelderMeadResult nelder_mead_box(F&& f, const ParamDomain& box, const Vector& start,
                                 const Vector& step, double tol, int max_iter) {
  const int dim = box.dim();
  NelderMeadResult res;
  std::vector<Vector> pts;
  std::vector<double> vals;
  auto eval = [&](const Vector& x) {
    ++res.evaluations;
    return f(x);
  };

  const Vector x0 = box.project(start);
  pts.push_back(x0);
  for (int k = 0; k < dim; ++k) {
    Vector x = x0;
    x(k) += step(k);
    if (x(k) > box.upper()(k)) x(k) = x0(k) - step(k);
    pts.push_back(box.project(x));
  }
  for (const auto& p : pts) vals.push_back(eval(p));

  std::vector<int> order(dim + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (vals[a] != vals[b]) return vals[a] < vals[b];
      return lexicographic_less(pts[a], pts[b]);
    });
    std::vector<Vector> p2;
    std::vector<double> v2;
    for (int i : order) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };

  sort_simplex();
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    double diam = 0.0;
    for (int i = 1; i <= dim; ++i) diam = std::max(diam, (pts[i] - pts[0]).norm());
    if (diam < tol) {
      res.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(dim);
    for (int i = 0; i < dim; ++i) centroid += pts[i];
    centroid /= static_cast<double>(dim);
    const Vector& worst = pts[dim];

    const Vector xr = box.project(centroid + (centroid - worst));
    const double fr = eval(xr);
    if (fr < vals[0]) {
      const Vector xe = box.project(centroid + 2.0 * (centroid - worst));
      const double fe = eval(xe);
      if (fe < fr) {
        pts[dim] = xe;
        vals[dim] = fe;
      } else {
        pts[dim] = xr;
        vals[dim] = fr;
      }
    } else if (fr < vals[dim - 1]) {
      pts[dim] = xr;
      vals[dim] = fr;
    } else {
      bool shrink = false;
      if (fr < vals[dim]) {
        const Vector xc = box.project(centroid + 0.5 * (xr - centroid));
        const double fc = eval(xc);
        if (fc <= fr) {
          pts[dim] = xc;
          vals[dim] = fc;
        } else {
          shrink = true;
        }
      } else {
        const Vector xc = box.project(centroid + 0.5 * (worst - centroid));
        const double fc = eval(xc);
        if (fc < vals[dim]) {
          pts[dim] = xc;
          vals[dim] = fc;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (int i = 1; i <= dim; ++i) {
          pts[i] = box.project(pts[0] + 0.5 * (pts[i] - pts[0]));
          vals[i] = eval(pts[i]);
        }
      }
    }
    sort_simplex();
    res.trace.emplace_back(pts[0], vals[0]);
  }
  res.x = pts[0];
  res.value = vals[0];
  return res;
}

}  // namespace roughtfe
