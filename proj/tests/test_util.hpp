#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "ncmest/penalty.hpp"

namespace ncmest::testutil {

// Brute-force prox oracle: dense grid over [-|z|-1, |z|+1] to bracket the
// minimizer, then golden-section refinement of the best cell. Independent of
// the closed-form prox path.
inline double prox_oracle(const PenaltySpec& spec, double z, double nu, double step = 1e-3) {
  const auto f = [&](double x) { return 0.5 * (x - z) * (x - z) + nu * penalty_value(spec, x); };
  const double lo = -std::abs(z) - 1.0;
  const double hi = std::abs(z) + 1.0;
  double best_x = lo;
  double best_f = f(lo);
  for (double x = lo + step; x <= hi; x += step) {
    const double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  // golden-section inside the bracketing cell
  double a = best_x - step, b = best_x + step;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200 && (b - a) > 1e-14; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return f(x) < best_f ? x : best_x;
}

inline double prox_objective(const PenaltySpec& spec, double z, double nu, double x) {
  return 0.5 * (x - z) * (x - z) + nu * penalty_value(spec, x);
}

// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double t, double h = 1e-6) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

// Sort-based Euclidean projection onto the l1 ball of radius R.
inline Eigen::VectorXd l1_ball_projection(const Eigen::VectorXd& v, double R) {
  if (v.lpNorm<1>() <= R) return v;
  Eigen::VectorXd u = v.cwiseAbs();
  std::sort(u.data(), u.data() + u.size(), std::greater<double>());
  double cssv = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    cssv += u[i];
    const double t = (cssv - R) / static_cast<double>(i + 1);
    if (t >= (i + 1 < u.size() ? u[i + 1] : 0.0)) {
      theta = t;
      break;
    }
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v[i]) - theta, 0.0);
    out[i] = v[i] >= 0 ? mag : -mag;
  }
  return out;
}

}  // namespace ncmest::testutil
