#include "fcslam/tree_detect.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>

#include "fcslam/errors.hpp"
#include "fcslam/scan_odometry.hpp"

namespace fcslam {

// ---------------------------------------------------------------------------
// DP-means

namespace {

struct ClusterStats {
  double sx = 0.0, sy = 0.0;
  int n = 0;
  Point2 mean() const { return {sx / n, sy / n}; }
  void add(const Point2& p) { sx += p.x; sy += p.y; ++n; }
  void remove(const Point2& p) { sx -= p.x; sy -= p.y; --n; }
};

}  // namespace

std::vector<std::vector<int>> dp_means(std::span<const Point2> points, const DpMeansConfig& cfg, RngSeed) {
  if (!(cfg.penalty_lambda > 0.0)) throw InvalidArgument("penalty_lambda must be positive");
  const std::size_t n = points.size();
  if (n == 0) return {};
  const double lam2 = cfg.penalty_lambda * cfg.penalty_lambda;

  std::vector<int> assign(n, -1);
  std::vector<Point2> centers;

  for (int it = 0; it < std::max(1, cfg.max_iterations); ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = -1;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double d = (points[i] - centers[k]).squared_norm();
        if (d < bd) {
          bd = d;
          best = static_cast<int>(k);
        }
      }
      if (best < 0 || bd > lam2) {
        centers.push_back(points[i]);
        best = static_cast<int>(centers.size()) - 1;
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    // Recompute centroids and compact away empty clusters.
    std::vector<ClusterStats> stats(centers.size());
    for (std::size_t i = 0; i < n; ++i) stats[assign[i]].add(points[i]);
    std::vector<int> remap(centers.size(), -1);
    std::vector<Point2> next;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (stats[k].n == 0) continue;
      remap[k] = static_cast<int>(next.size());
      next.push_back(stats[k].mean());
    }
    if (next.size() != centers.size()) changed = true;
    for (std::size_t i = 0; i < n; ++i) assign[i] = remap[assign[i]];
    centers = std::move(next);
    if (!changed) break;
  }

  // Single-point moves with exact objective deltas until none improves.
  std::vector<ClusterStats> stats(centers.size());
  for (std::size_t i = 0; i < n; ++i) stats[assign[i]].add(points[i]);
  constexpr double kEps = 1e-12;
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Point2& x = points[i];
      const int a = assign[i];
      const int na = stats[a].n;
      const double remove_delta =
          na == 1 ? -lam2 : -static_cast<double>(na) / (na - 1) * (x - stats[a].mean()).squared_norm();
      double best_delta = -kEps;
      int best_target = -2;  // -2: stay, -1: open a new cluster
      for (std::size_t b = 0; b < stats.size(); ++b) {
        if (static_cast<int>(b) == a || stats[b].n == 0) continue;
        const int nb = stats[b].n;
        const double d = remove_delta + static_cast<double>(nb) / (nb + 1) * (x - stats[b].mean()).squared_norm();
        if (d < best_delta) {
          best_delta = d;
          best_target = static_cast<int>(b);
        }
      }
      if (na > 1 && remove_delta + lam2 < best_delta) {
        best_delta = remove_delta + lam2;
        best_target = -1;
      }
      if (best_target == -2) continue;
      stats[a].remove(x);
      if (best_target == -1) {
        stats.push_back({});
        best_target = static_cast<int>(stats.size()) - 1;
      }
      stats[best_target].add(x);
      assign[i] = best_target;
      moved = true;
    }
    if (!moved) break;
  }

  // Order clusters by first member.
  std::vector<int> order(stats.size(), -1);
  std::vector<std::vector<int>> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    int& slot = order[assign[i]];
    if (slot < 0) {
      slot = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[slot].push_back(static_cast<int>(i));
  }
  return clusters;
}

double dp_means_objective(std::span<const Point2> points, const std::vector<std::vector<int>>& clusters,
                          double lambda) {
  double cost = lambda * lambda * static_cast<double>(clusters.size());
  for (const auto& c : clusters) {
    Point2 mu{};
    for (int i : c) mu = mu + points[i];
    mu = mu * (1.0 / static_cast<double>(c.size()));
    for (int i : c) cost += (points[i] - mu).squared_norm();
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Circle fitting

double geometric_cost(std::span<const Point2> points, const Point2& center, double radius) {
  double cost = 0.0;
  for (const Point2& p : points) {
    const double e = distance(p, center) - radius;
    cost += e * e;
  }
  return cost;
}

double circle_residual(std::span<const Point2> points, const Point2& center, double radius) {
  if (points.empty() || !(radius > 0.0)) return std::numeric_limits<double>::infinity();
  return std::sqrt(geometric_cost(points, center, radius) / static_cast<double>(points.size())) / radius;
}

CircleFit taubin_fit(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 3) throw DegenerateGeometry("circle fit needs at least 3 points");
  double mx = 0.0, my = 0.0;
  for (const Point2& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double Mxx = 0, Myy = 0, Mxy = 0, Mxz = 0, Myz = 0, Mzz = 0;
  for (const Point2& p : points) {
    const double xi = p.x - mx, yi = p.y - my, zi = xi * xi + yi * yi;
    Mxy += xi * yi;
    Mxx += xi * xi;
    Myy += yi * yi;
    Mxz += xi * zi;
    Myz += yi * zi;
    Mzz += zi * zi;
  }
  const double inv = 1.0 / static_cast<double>(n);
  Mxx *= inv; Myy *= inv; Mxy *= inv; Mxz *= inv; Myz *= inv; Mzz *= inv;

  const double Mz = Mxx + Myy;
  const double cov_xy = Mxx * Myy - Mxy * Mxy;
  if (!(Mz > 1e-24)) throw DegenerateGeometry("coincident points");
  if (!(cov_xy > 1e-12 * Mz * Mz)) throw DegenerateGeometry("collinear points");
  const double var_z = Mzz - Mz * Mz;

  const double A3 = 4.0 * Mz;
  const double A2 = -3.0 * Mz * Mz - Mzz;
  const double A1 = var_z * Mz + 4.0 * cov_xy * Mz - Mxz * Mxz - Myz * Myz;
  const double A0 = Mxz * (Mxz * Myy - Myz * Mxy) + Myz * (Myz * Mxx - Mxz * Mxy) - var_z * cov_xy;
  const double A22 = A2 + A2, A33 = A3 + A3 + A3;

  // Newton from x = 0 toward the smallest non-negative root of the
  // characteristic polynomial.
  double x = 0.0, y = std::numeric_limits<double>::max();
  for (int it = 0; it < 99; ++it) {
    const double y_old = y;
    y = A0 + x * (A1 + x * (A2 + x * A3));
    if (std::abs(y) > std::abs(y_old)) {
      x = 0.0;
      break;
    }
    const double dy = A1 + x * (A22 + x * A33);
    if (dy == 0.0) break;
    const double x_old = x;
    x = x_old - y / dy;
    if (x < 0.0) x = 0.0;
    if (x == x_old || std::abs(x - x_old) <= 1e-14 * std::abs(x)) break;
  }

  const double det = x * x - x * Mz + cov_xy;
  if (det == 0.0) throw DegenerateGeometry("singular Taubin system");
  const double cx = (Mxz * (Myy - x) - Myz * Mxy) / det / 2.0;
  const double cy = (Myz * (Mxx - x) - Mxz * Mxy) / det / 2.0;
  CircleFit fit;
  fit.center = {cx + mx, cy + my};
  fit.radius = std::sqrt(cx * cx + cy * cy + Mz);
  if (!std::isfinite(fit.radius) || !std::isfinite(fit.center.x) || !std::isfinite(fit.center.y))
    throw DegenerateGeometry("non-finite circle");
  fit.n_points = static_cast<int>(n);
  fit.residual = circle_residual(points, fit.center, fit.radius);
  return fit;
}

CircleFit lm_refine_circle(std::span<const Point2> points, const CircleFit& init, int max_iterations,
                           double tol) {
  CircleFit start = init;
  start.n_points = static_cast<int>(points.size());
  start.residual = circle_residual(points, init.center, init.radius);
  if (points.empty() || !(init.radius > 0.0)) return start;

  Eigen::Vector3d p(init.center.x, init.center.y, init.radius);
  double cost = geometric_cost(points, init.center, init.radius);
  double lambda = 1e-3;

  for (int it = 0; it < max_iterations; ++it) {
    Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
    Eigen::Vector3d Jte = Eigen::Vector3d::Zero();
    for (const Point2& q : points) {
      const double dx = q.x - p[0], dy = q.y - p[1];
      const double d = std::hypot(dx, dy);
      if (d == 0.0) continue;
      const Eigen::Vector3d J(-dx / d, -dy / d, -1.0);
      const double e = d - p[2];
      JtJ.noalias() += J * J.transpose();
      Jte += J * e;
    }
    if (Jte.lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, cost)) break;

    bool accepted = false;
    Eigen::Vector3d step;
    while (lambda < 1e16) {
      Eigen::Matrix3d H = JtJ;
      for (int k = 0; k < 3; ++k) H(k, k) += lambda * std::max(JtJ(k, k), 1e-12);
      step = H.ldlt().solve(-Jte);
      const Eigen::Vector3d cand = p + step;
      if (cand[2] > 0.0 && step.allFinite()) {
        const double c = geometric_cost(points, {cand[0], cand[1]}, cand[2]);
        if (c < cost) {
          p = cand;
          cost = c;
          lambda = std::max(lambda * 0.1, 1e-12);
          accepted = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
    if (step.norm() <= tol * (p.norm() + tol)) break;
  }

  CircleFit out;
  out.center = {p[0], p[1]};
  out.radius = p[2];
  out.n_points = start.n_points;
  out.residual = circle_residual(points, out.center, out.radius);
  // The geometric cost never increases; also keep the radius-normalized
  // residual from increasing.
  if (out.residual > start.residual + 1e-12) return start;
  return out;
}

double arc_coverage(std::span<const Point2> points, const CircleFit& circle, double angular_resolution) {
  if (points.empty() || !(circle.radius > 0.0)) return 0.0;
  constexpr double kTwoPi = 2.0 * kPi;
  std::vector<std::pair<double, double>> iv;
  iv.reserve(points.size() * 2);
  for (const Point2& q : points) {
    const double half = angular_resolution * q.norm() / circle.radius;
    if (half >= kPi) return 1.0;
    const double phi = std::atan2(q.y - circle.center.y, q.x - circle.center.x);
    double s = std::fmod(phi - half, kTwoPi);
    if (s < 0.0) s += kTwoPi;
    const double e = s + 2.0 * half;
    if (e > kTwoPi) {
      iv.emplace_back(s, kTwoPi);
      iv.emplace_back(0.0, e - kTwoPi);
    } else {
      iv.emplace_back(s, e);
    }
  }
  std::sort(iv.begin(), iv.end());
  double covered = 0.0, cs = iv[0].first, ce = iv[0].second;
  for (std::size_t k = 1; k < iv.size(); ++k) {
    if (iv[k].first > ce) {
      covered += ce - cs;
      cs = iv[k].first;
      ce = iv[k].second;
    } else {
      ce = std::max(ce, iv[k].second);
    }
  }
  covered += ce - cs;
  return std::min(1.0, covered / kTwoPi);
}

std::vector<TreeDetection> detect_trees(const Scan& scan, const DpMeansConfig& dp,
                                        const DetectionThresholds& gate) {
  const std::vector<Point2> points = scan_to_points(scan);
  std::vector<TreeDetection> out;
  std::vector<Point2> cluster_pts;
  for (const auto& cluster : dp_means(points, dp)) {
    if (static_cast<int>(cluster.size()) < std::max(3, gate.min_points)) continue;
    cluster_pts.clear();
    for (int i : cluster) cluster_pts.push_back(points[i]);
    CircleFit fit;
    try {
      fit = taubin_fit(cluster_pts);
    } catch (const DegenerateGeometry&) {
      continue;
    }
    if (!(fit.residual < gate.algebraic_gate)) continue;
    fit = lm_refine_circle(cluster_pts, fit);
    if (!(fit.residual < gate.max_residual) || !(fit.radius > gate.min_radius)) continue;
    const double cov = arc_coverage(cluster_pts, fit, scan.angular_resolution);
    if (!(cov > gate.min_coverage)) continue;
    out.push_back({fit, cov});
  }
  return out;
}

}  // namespace fcslam
