#pragma once

/// \file diagnostics.hpp
/// Geometric diagnostics of a loop: winding about the centroid, planarity, the minimal body
/// separation, and a least-squares circle fit.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "choreo/loop.hpp"

namespace choreo {

struct CircleFit {
  std::vector<double> center;
  double radius = 0.0;
  double rms = 0.0;
};

struct LoopDiagnostics {
  int winding = 0;
  double winding_residual = 0.0;  ///< |raw turn count - winding|
  bool degenerate = false;        ///< all samples at the centroid; winding undefined
  double planarity = 0.0;         ///< third over first gyration eigenvalue (0 when d = 2)
  double min_separation = 0.0;
  CircleFit radius_fit;
};

namespace detail {

struct PlaneFrame {
  Eigen::VectorXd centroid;
  Eigen::VectorXd e1, e2;
  Eigen::VectorXd eigenvalues;  // descending
};

inline PlaneFrame dominant_plane(const Eigen::MatrixXd& pts) {
  const Eigen::Index d = pts.cols();
  PlaneFrame f;
  f.centroid = pts.colwise().mean().transpose();
  const Eigen::MatrixXd centered = pts.rowwise() - f.centroid.transpose();
  const Eigen::MatrixXd gyration = centered.transpose() * centered / static_cast<double>(pts.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gyration);
  f.eigenvalues = es.eigenvalues().reverse();
  if (d == 2) {
    f.e1 = Eigen::Vector2d(1.0, 0.0);
    f.e2 = Eigen::Vector2d(0.0, 1.0);
    return f;
  }
  f.e1 = es.eigenvectors().col(d - 1);
  f.e2 = es.eigenvectors().col(d - 2);
  // Orient the plane consistently with the (x_1, x_2) rotation plane.
  double orient = f.e1(0) * f.e2(1) - f.e1(1) * f.e2(0);
  if (std::abs(orient) < 1e-12 && d >= 3) {
    // plane orthogonal to (x_1, x_2): orient by the normal's first nonzero component
    Eigen::Vector3d n3 = Eigen::Vector3d(f.e1(0), f.e1(1), f.e1(2)).cross(Eigen::Vector3d(f.e2(0), f.e2(1), f.e2(2)));
    orient = std::abs(n3(0)) > 1e-12 ? n3(0) : n3(1);
  }
  if (orient < 0) f.e2 = -f.e2;
  return f;
}

inline Eigen::MatrixXd sample_matrix(const FourierLoop& x, int grid, bool offset) {
  Eigen::MatrixXd pts(grid, x.dim());
  for (int j = 0; j < grid; ++j) {
    const double t = two_pi * (j + (offset ? 0.5 : 0.0)) / grid;
    const auto p = evaluate(x, t);
    for (int i = 0; i < x.dim(); ++i) pts(j, i) = p[static_cast<std::size_t>(i)];
  }
  return pts;
}

}  // namespace detail

/// Minimal distance |x(t) - x(t + h*tau)| over a grid of `grid` points (a multiple of n).
inline double min_separation(const FourierLoop& x, int n, int grid = 0) {
  if (grid == 0) grid = std::max(default_grid_size(x.cutoff(), n), ((512 + n - 1) / n) * n);
  if (grid % n != 0) throw Error("min_separation: grid must be a multiple of n");
  const SampledLoop s = sample(x, grid);
  const int step = grid / n;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid; ++j) {
    for (int h = 1; h < n; ++h) {
      const auto a = s.at(j);
      const auto b = s.at((j + h * step) % grid);
      double r2 = 0.0;
      for (int i = 0; i < s.dim; ++i) r2 += (a[i] - b[i]) * (a[i] - b[i]);
      best = std::min(best, std::sqrt(r2));
    }
  }
  return best;
}

/// Winding of x about its centroid in the dominant plane, planarity, separation and circle fit.
inline LoopDiagnostics diagnostics(const FourierLoop& x, const SystemParams& params) {
  LoopDiagnostics out;
  const int grid = std::max(1024, 16 * x.cutoff());
  const Eigen::MatrixXd pts = detail::sample_matrix(x, grid, true);
  const auto frame = detail::dominant_plane(pts);
  const int d = x.dim();

  out.planarity = (d >= 3 && frame.eigenvalues(0) > 0.0) ? frame.eigenvalues(2) / frame.eigenvalues(0) : 0.0;
  out.min_separation = min_separation(x, params.n);

  Eigen::MatrixXd planar(grid, 2);
  Eigen::VectorXd off_plane2(grid);
  double max_r = 0.0;
  for (int j = 0; j < grid; ++j) {
    const Eigen::VectorXd v = pts.row(j).transpose() - frame.centroid;
    planar(j, 0) = v.dot(frame.e1);
    planar(j, 1) = v.dot(frame.e2);
    off_plane2(j) = (v - planar(j, 0) * frame.e1 - planar(j, 1) * frame.e2).squaredNorm();
    max_r = std::max(max_r, v.norm());
  }
  if (max_r < 1e-12) {
    out.degenerate = true;
    out.radius_fit = {std::vector<double>(frame.centroid.data(), frame.centroid.data() + d), 0.0, 0.0};
    return out;
  }

  // total signed angle, skipping samples that sit on the centroid
  std::vector<int> keep;
  const double tiny = 1e-9 * max_r;
  for (int j = 0; j < grid; ++j)
    if (std::hypot(planar(j, 0), planar(j, 1)) >= tiny) keep.push_back(j);
  double total = 0.0;
  for (std::size_t q = 0; q < keep.size(); ++q) {
    const int a = keep[q];
    const int b = keep[(q + 1) % keep.size()];
    const double cr = planar(a, 0) * planar(b, 1) - planar(a, 1) * planar(b, 0);
    const double dt = planar(a, 0) * planar(b, 0) + planar(a, 1) * planar(b, 1);
    total += std::atan2(cr, dt);
  }
  const double turns = total / two_pi;
  out.winding = static_cast<int>(std::lround(turns));
  out.winding_residual = std::abs(turns - out.winding);

  // algebraic circle fit in the plane, then geometric rms including off-plane distance
  Eigen::MatrixXd A(grid, 3);
  Eigen::VectorXd rhs(grid);
  for (int j = 0; j < grid; ++j) {
    A(j, 0) = 2.0 * planar(j, 0);
    A(j, 1) = 2.0 * planar(j, 1);
    A(j, 2) = 1.0;
    rhs(j) = planar(j, 0) * planar(j, 0) + planar(j, 1) * planar(j, 1);
  }
  const Eigen::Vector3d sol = A.colPivHouseholderQr().solve(rhs);
  const double radius = std::sqrt(std::max(0.0, sol(2) + sol(0) * sol(0) + sol(1) * sol(1)));
  double ss = 0.0;
  for (int j = 0; j < grid; ++j) {
    const double dr = std::hypot(planar(j, 0) - sol(0), planar(j, 1) - sol(1)) - radius;
    ss += dr * dr + off_plane2(j);
  }
  const Eigen::VectorXd center = frame.centroid + sol(0) * frame.e1 + sol(1) * frame.e2;
  out.radius_fit = {std::vector<double>(center.data(), center.data() + d), radius, std::sqrt(ss / grid)};
  return out;
}

/// Root-mean-square distance of the loop from the origin (used as the loop's scale).
inline double gyration_radius(const FourierLoop& x) { return std::sqrt(l2_norm_squared(x) / two_pi); }

}  // namespace choreo
