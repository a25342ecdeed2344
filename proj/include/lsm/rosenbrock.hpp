#pragma once

#include <Eigen/Dense>

namespace lsm {

struct Rosenbrock {
  double a = 1.0;
  double b = 5.0;

  double value(const Eigen::VectorXd& x) const {
    const double u = a - x[0];
    const double v = x[1] - x[0] * x[0];
    return u * u + b * v * v;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g(2);
    const double v = x[1] - x[0] * x[0];
    g[0] = -2.0 * (a - x[0]) - 4.0 * b * x[0] * v;
    g[1] = 2.0 * b * v;
    return g;
  }

  // Target density proportional to exp(-value).
  double log_density(const Eigen::VectorXd& x) const { return -value(x); }
  Eigen::VectorXd log_density_gradient(const Eigen::VectorXd& x) const { return -gradient(x); }
};

}  // namespace lsm
