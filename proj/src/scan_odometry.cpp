#include "fcslam/scan_odometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcslam/errors.hpp"

namespace fcslam {

std::vector<Point2> scan_to_points(const Scan& scan) {
  std::vector<Point2> pts;
  pts.reserve(scan.beams.size());
  for (const Beam& b : scan.beams)
    if (b.has_return()) pts.push_back({b.range * std::cos(b.bearing), b.range * std::sin(b.bearing)});
  return pts;
}

namespace {

class PointGrid {
 public:
  PointGrid(std::span<const Point2> pts, double cell) : pts_(pts), cell_(cell) {
    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
    double xmax = -xmin, ymax = -xmin;
    for (const Point2& p : pts) {
      xmin = std::min(xmin, p.x);
      ymin = std::min(ymin, p.y);
      xmax = std::max(xmax, p.x);
      ymax = std::max(ymax, p.y);
    }
    x0_ = xmin;
    y0_ = ymin;
    nx_ = static_cast<int>((xmax - xmin) / cell_) + 1;
    ny_ = static_cast<int>((ymax - ymin) / cell_) + 1;
    start_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
    for (const Point2& p : pts) ++start_[key(cx(p.x), cy(p.y)) + 1];
    for (std::size_t k = 1; k < start_.size(); ++k) start_[k] += start_[k - 1];
    items_.resize(pts.size());
    std::vector<int> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[key(cx(pts[i].x), cy(pts[i].y))]++] = static_cast<int>(i);
  }

  /// Nearest point within `cell` of q, or -1.
  int nearest(const Point2& q, double& dist2) const {
    const int ix = static_cast<int>(std::floor((q.x - x0_) / cell_));
    const int iy = static_cast<int>(std::floor((q.y - y0_) / cell_));
    int best = -1;
    double bd = cell_ * cell_;
    for (int y = iy - 1; y <= iy + 1; ++y) {
      if (y < 0 || y >= ny_) continue;
      for (int x = ix - 1; x <= ix + 1; ++x) {
        if (x < 0 || x >= nx_) continue;
        const std::size_t k = key(x, y);
        for (int j = start_[k]; j < start_[k + 1]; ++j) {
          const int i = items_[j];
          const double d = (pts_[i] - q).squared_norm();
          if (d < bd || (d == bd && best >= 0 && i < best)) {
            bd = d;
            best = i;
          }
        }
      }
    }
    dist2 = bd;
    return best;
  }

 private:
  int cx(double x) const { return std::clamp(static_cast<int>((x - x0_) / cell_), 0, nx_ - 1); }
  int cy(double y) const { return std::clamp(static_cast<int>((y - y0_) / cell_), 0, ny_ - 1); }
  std::size_t key(int x, int y) const { return static_cast<std::size_t>(y) * nx_ + x; }

  std::span<const Point2> pts_;
  double cell_;
  double x0_ = 0, y0_ = 0;
  int nx_ = 1, ny_ = 1;
  std::vector<int> start_;
  std::vector<int> items_;
};

}  // namespace

IcpResult icp_align(std::span<const Point2> prev, std::span<const Point2> curr, const Pose2& guess,
                    const IcpConfig& cfg) {
  if (prev.empty() || curr.empty()) throw InvalidArgument("icp_align needs non-empty point sets");
  if (cfg.max_iterations < 1 || !(cfg.convergence_tol > 0.0) || !(cfg.correspondence_cutoff > 0.0))
    throw InvalidArgument("invalid ICP configuration");

  const PointGrid index(prev, cfg.correspondence_cutoff);
  IcpResult res;
  Pose2 T = guess;
  std::vector<Point2> src, dst, kept_src, kept_dst;
  std::vector<double> dist, sorted;
  src.reserve(curr.size());
  dst.reserve(curr.size());

  auto gather = [&](const Pose2& pose, double& mean_dist) {
    src.clear();
    dst.clear();
    dist.clear();
    double sum = 0.0;
    for (const Point2& p : curr) {
      const Point2 q = se2_apply(pose, p);
      double d2;
      const int j = index.nearest(q, d2);
      if (j < 0) continue;
      src.push_back(q);
      dst.push_back(prev[j]);
      dist.push_back(std::sqrt(d2));
      sum += dist.back();
    }
    mean_dist = src.empty() ? 0.0 : sum / static_cast<double>(src.size());
  };

  for (int it = 0; it < cfg.max_iterations; ++it) {
    double mean_dist;
    gather(T, mean_dist);
    if (src.size() < 3) throw DegenerateGeometry("fewer than 3 ICP inliers");
    res.residual_log.push_back(mean_dist);
    // Pairs far beyond the typical distance are surfaces seen from one
    // viewpoint only; they are left out of the alignment.
    sorted = dist;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double keep = cfg.trim_factor * sorted[sorted.size() / 2];
    kept_src.clear();
    kept_dst.clear();
    for (std::size_t k = 0; k < src.size(); ++k)
      if (cfg.trim_factor <= 0.0 || dist[k] <= keep) {
        kept_src.push_back(src[k]);
        kept_dst.push_back(dst[k]);
      }
    if (kept_src.size() < 3) throw DegenerateGeometry("fewer than 3 ICP inliers");
    const Pose2 delta = align_point_sets(kept_src.data(), kept_dst.data(), kept_src.size());
    T = se2_compose(delta, T);
    res.iterations = it + 1;
    if (std::hypot(delta.x, delta.y) < cfg.convergence_tol && std::abs(delta.theta) < cfg.convergence_tol) {
      res.converged = true;
      break;
    }
  }

  double mean_dist;
  gather(T, mean_dist);
  if (src.size() < 3) throw DegenerateGeometry("fewer than 3 ICP inliers");
  res.transform = T;
  res.mean_residual = mean_dist;
  res.inlier_fraction = static_cast<double>(src.size()) / static_cast<double>(curr.size());
  res.reliable = res.inlier_fraction >= cfg.min_inlier_fraction;
  return res;
}

std::vector<Pose2> integrate_odometry(std::span<const Pose2> increments) {
  std::vector<Pose2> traj;
  traj.reserve(increments.size() + 1);
  traj.push_back(Pose2::identity());
  for (const Pose2& inc : increments) traj.push_back(se2_compose(traj.back(), inc));
  return traj;
}

}  // namespace fcslam
