#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "lsm/common.hpp"

namespace lsm {

enum class Geometry { euclidean, spherical };

// Latent space choice. For spherical models latent positions live on the
// unit sphere embedded in R^ambient_dim (sphere dimension = ambient_dim - 1).
struct GeometrySpec {
  Geometry kind = Geometry::euclidean;
  int ambient_dim = 2;

  static GeometrySpec Euclidean(int d) {
    if (d < 1) throw std::invalid_argument("GeometrySpec: Euclidean dimension must be >= 1");
    return {Geometry::euclidean, d};
  }
  static GeometrySpec Sphere(int sphere_dim) {
    if (sphere_dim < 1) throw std::invalid_argument("GeometrySpec: sphere dimension must be >= 1");
    return {Geometry::spherical, sphere_dim + 1};
  }

  bool is_spherical() const { return kind == Geometry::spherical; }
  int sphere_dim() const { return ambient_dim - 1; }

  // Free parameters of the full model on n nodes: n*d+1 in R^d, n*(d-1)+2 on S^{d-1}.
  int free_parameter_count(int n) const {
    return is_spherical() ? n * (ambient_dim - 1) + 2 : n * ambient_dim + 1;
  }

  std::string name() const {
    return is_spherical() ? "S" + std::to_string(sphere_dim())
                          : "R" + std::to_string(ambient_dim);
  }
};

inline Eigen::VectorXd project_to_sphere(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (norm <= 0.0) throw std::invalid_argument("project_to_sphere: zero vector");
  return v / norm;
}

// Orthogonal projection of p onto the tangent space at unit vector x: (I - x x^T) p.
inline Eigen::VectorXd tangent_project(const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
  return p - x.dot(p) * x;
}

inline double geodesic_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double ip = std::clamp(u.dot(v), -1.0, 1.0);
  return std::acos(ip);
}

inline Eigen::VectorXd uniform_on_sphere(int dim, Rng& rng) {
  for (;;) {
    Eigen::VectorXd v = standard_normal_vector(dim, rng);
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

// Unit direction orthogonal to mu, uniform on the tangent sphere.
inline Eigen::VectorXd uniform_tangent_direction(const Eigen::VectorXd& mu, Rng& rng) {
  for (;;) {
    Eigen::VectorXd t = tangent_project(mu, standard_normal_vector(static_cast<int>(mu.size()), rng));
    const double norm = t.norm();
    if (norm > 1e-12) return t / norm;
  }
}

// von Mises-Fisher draw via Wood (1994) rejection sampling for the cosine
// component w = <x, mu>, combined with a uniform tangent direction.
inline Eigen::VectorXd sample_vmf(const Eigen::VectorXd& mu, double kappa, Rng& rng) {
  const int d = static_cast<int>(mu.size());
  if (d < 2) throw std::invalid_argument("sample_vmf: ambient dimension must be >= 2");
  if (kappa < 0.0) throw std::invalid_argument("sample_vmf: kappa must be >= 0");
  if (kappa < 1e-12) return uniform_on_sphere(d, rng);

  const double dm1 = static_cast<double>(d - 1);
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);

  std::gamma_distribution<double> gamma_half(dm1 / 2.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double w = 0.0;
  for (;;) {
    const double g1 = gamma_half(rng);
    const double g2 = gamma_half(rng);
    const double z = g1 / (g1 + g2);  // Beta((d-1)/2, (d-1)/2)
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = unif(rng);
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }

  const Eigen::VectorXd v = uniform_tangent_direction(mu, rng);
  Eigen::VectorXd x = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  return x / x.norm();
}

// Spherical linear interpolation between unit vectors.
inline Eigen::VectorXd slerp(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double t) {
  const double theta = geodesic_distance(u, v);
  if (theta < 1e-14) return u;
  const double s = std::sin(theta);
  return (std::sin((1.0 - t) * theta) / s) * u + (std::sin(t * theta) / s) * v;
}

// Riemannian gradient descent for the point minimizing the sum of squared
// geodesic distances. Rows of `points` are unit vectors.
inline Eigen::VectorXd frechet_mean(const Eigen::MatrixXd& points,
                                    double tol = 1e-12, int max_iters = 1000) {
  const int n = static_cast<int>(points.rows());
  if (n == 0) throw std::invalid_argument("frechet_mean: no points");
  Eigen::VectorXd z = points.colwise().mean();
  const double norm = z.norm();
  if (norm < 1e-12)
    throw std::invalid_argument("frechet_mean: degenerate configuration (balanced points)");
  z /= norm;

  for (int iter = 0; iter < max_iters; ++iter) {
    // Mean of log-map images of the points at z.
    Eigen::VectorXd step = Eigen::VectorXd::Zero(points.cols());
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd p = points.row(i);
      const double theta = geodesic_distance(z, p);
      if (theta < 1e-14) continue;
      const Eigen::VectorXd t = tangent_project(z, p);
      const double tn = t.norm();
      if (tn < 1e-14) continue;  // antipodal point: no unique direction
      step += (theta / tn) * t;
    }
    step /= static_cast<double>(n);
    const double len = step.norm();
    if (len < tol) return z;
    // Exponential map along the mean tangent.
    z = std::cos(len) * z + (std::sin(len) / len) * step;
    z /= z.norm();
  }
  throw std::runtime_error("frechet_mean: no convergence (near-degenerate configuration)");
}

enum class ProcrustesMode { euclidean, orthogonal };

// Optimal alignment of Z (rows are points) onto `reference`. Orthogonal mode
// rotates/reflects only; euclidean mode also removes translation. No scaling.
inline Eigen::MatrixXd procrustes_align(const Eigen::MatrixXd& z,
                                        const Eigen::MatrixXd& reference,
                                        ProcrustesMode mode) {
  if (z.rows() != reference.rows() || z.cols() != reference.cols())
    throw std::invalid_argument("procrustes_align: shape mismatch");

  Eigen::MatrixXd zc = z;
  Eigen::MatrixXd rc = reference;
  Eigen::RowVectorXd ref_centroid;
  if (mode == ProcrustesMode::euclidean) {
    ref_centroid = reference.colwise().mean();
    zc.rowwise() -= z.colwise().mean();
    rc.rowwise() -= ref_centroid;
  }

  const Eigen::MatrixXd m = rc.transpose() * zc;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("procrustes_align: SVD failed on degenerate cross-product");
  const Eigen::MatrixXd rotation = svd.matrixU() * svd.matrixV().transpose();

  Eigen::MatrixXd aligned = zc * rotation.transpose();
  if (mode == ProcrustesMode::euclidean) aligned.rowwise() += ref_centroid;
  return aligned;
}

}  // namespace lsm
