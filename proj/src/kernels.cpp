#include "fcslam/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fcslam::kernels {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double ray_circle_distance(double ox, double oy, double dx, double dy, double cx, double cy,
                           double r) {
  const double fx = ox - cx, fy = oy - cy;
  const double b = fx * dx + fy * dy;
  const double c = fx * fx + fy * fy - r * r;
  const double disc = b * b - c;
  if (disc < 0.0) return kInf;
  const double t = -b - std::sqrt(disc);
  if (t < 0.0) return kInf;
  return t;
}

CircleGrid::CircleGrid(const CircleSet& circles, double cell_size) : circles_(circles), cell_(cell_size) {
  if (circles_.size() == 0) return;
  double xmin = kInf, ymin = kInf, xmax = -kInf, ymax = -kInf;
  for (std::size_t i = 0; i < circles_.size(); ++i) {
    xmin = std::min(xmin, circles_.cx[i] - circles_.r[i]);
    ymin = std::min(ymin, circles_.cy[i] - circles_.r[i]);
    xmax = std::max(xmax, circles_.cx[i] + circles_.r[i]);
    ymax = std::max(ymax, circles_.cy[i] + circles_.r[i]);
  }
  x0_ = xmin;
  y0_ = ymin;
  nx_ = std::max(1, static_cast<int>(std::ceil((xmax - xmin) / cell_)) + 1);
  ny_ = std::max(1, static_cast<int>(std::ceil((ymax - ymin) / cell_)) + 1);

  std::vector<std::uint32_t> counts(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
  auto cell_range = [&](std::size_t i, int& ix0, int& ix1, int& iy0, int& iy1) {
    ix0 = std::clamp(static_cast<int>(std::floor((circles_.cx[i] - circles_.r[i] - x0_) / cell_)), 0, nx_ - 1);
    ix1 = std::clamp(static_cast<int>(std::floor((circles_.cx[i] + circles_.r[i] - x0_) / cell_)), 0, nx_ - 1);
    iy0 = std::clamp(static_cast<int>(std::floor((circles_.cy[i] - circles_.r[i] - y0_) / cell_)), 0, ny_ - 1);
    iy1 = std::clamp(static_cast<int>(std::floor((circles_.cy[i] + circles_.r[i] - y0_) / cell_)), 0, ny_ - 1);
  };
  for (std::size_t i = 0; i < circles_.size(); ++i) {
    int ix0, ix1, iy0, iy1;
    cell_range(i, ix0, ix1, iy0, iy1);
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix) ++counts[static_cast<std::size_t>(iy) * nx_ + ix + 1];
  }
  for (std::size_t k = 1; k < counts.size(); ++k) counts[k] += counts[k - 1];
  cell_start_ = counts;
  items_.resize(counts.back());
  std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < circles_.size(); ++i) {
    int ix0, ix1, iy0, iy1;
    cell_range(i, ix0, ix1, iy0, iy1);
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix)
        items_[fill[static_cast<std::size_t>(iy) * nx_ + ix]++] = static_cast<std::uint32_t>(i);
  }
}

double CircleGrid::cast(double ox, double oy, double dx, double dy, double max_range) const {
  if (circles_.size() == 0) return kInf;
  const double w = nx_ * cell_, h = ny_ * cell_;
  // Clip the ray segment [0, max_range] against the grid box.
  double t0 = 0.0, t1 = max_range;
  const double lx = ox - x0_, ly = oy - y0_;
  auto slab = [&](double o, double d, double size) {
    if (d == 0.0) return o >= 0.0 && o <= size;
    double ta = (0.0 - o) / d, tb = (size - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    return t0 <= t1;
  };
  if (!slab(lx, dx, w) || !slab(ly, dy, h)) return kInf;

  const double sx = lx + t0 * dx, sy = ly + t0 * dy;
  int ix = std::clamp(static_cast<int>(std::floor(sx / cell_)), 0, nx_ - 1);
  int iy = std::clamp(static_cast<int>(std::floor(sy / cell_)), 0, ny_ - 1);
  const int stepx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int stepy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  auto next_boundary = [&](int i, int step, double o, double d) {
    if (step == 0) return kInf;
    const double edge = (step > 0 ? (i + 1) : i) * cell_;
    return (edge - o) / d;
  };
  double tmx = next_boundary(ix, stepx, lx, dx);
  double tmy = next_boundary(iy, stepy, ly, dy);
  const double tdx = stepx == 0 ? kInf : cell_ / std::abs(dx);
  const double tdy = stepy == 0 ? kInf : cell_ / std::abs(dy);

  double best = kInf;
  while (true) {
    const std::size_t cell = static_cast<std::size_t>(iy) * nx_ + ix;
    for (std::uint32_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
      const std::uint32_t i = items_[k];
      const double t = ray_circle_distance(ox, oy, dx, dy, circles_.cx[i], circles_.cy[i], circles_.r[i]);
      best = std::min(best, t);
    }
    const double t_exit = std::min(tmx, tmy);
    if (best <= t_exit || t_exit > t1) break;
    if (tmx < tmy) {
      ix += stepx;
      tmx += tdx;
    } else {
      iy += stepy;
      tmy += tdy;
    }
    if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) break;
  }
  return best <= max_range ? best : kInf;
}

void raycast_reference(const CircleSet& circles, const Pose2& origin, std::span<const double> bearings,
                       double max_range, std::span<double> ranges) {
  for (std::size_t k = 0; k < bearings.size(); ++k) {
    const double a = origin.theta + bearings[k];
    const double dx = std::cos(a), dy = std::sin(a);
    double best = kInf;
    for (std::size_t i = 0; i < circles.size(); ++i)
      best = std::min(best, ray_circle_distance(origin.x, origin.y, dx, dy, circles.cx[i], circles.cy[i],
                                                circles.r[i]));
    ranges[k] = best <= max_range ? best : kInf;
  }
}

void raycast(const CircleGrid& grid, const Pose2& origin, std::span<const double> bearings,
             double max_range, std::span<double> ranges) {
  const auto n = static_cast<std::ptrdiff_t>(bearings.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const double a = origin.theta + bearings[k];
    ranges[k] = grid.cast(origin.x, origin.y, std::cos(a), std::sin(a), max_range);
  }
}

double shifted_l1(const DescriptorView& s, const DescriptorView& t) {
  double best = kInf;
  for (int k = 0; k < s.cols; ++k) {
    double sum = 0.0;
    for (int i = 0; i < s.rows; ++i) {
      const double* trow = t.data + static_cast<std::ptrdiff_t>(i) * t.cols;
      const double* srow = s.data + static_cast<std::ptrdiff_t>(i) * s.cols;
      for (int j = 0; j < s.cols; ++j) {
        int jj = j + k;
        if (jj >= s.cols) jj -= s.cols;
        sum += std::abs(trow[j] - srow[jj]);
      }
    }
    best = std::min(best, sum);
  }
  return s.cols == 0 ? 0.0 : best;
}

void shifted_l1_matrix_reference(std::span<const DescriptorView> descriptors, std::span<double> out) {
  const std::size_t n = descriptors.size();
  for (std::size_t a = 0; a < n; ++a) {
    out[a * n + a] = 0.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d = shifted_l1(descriptors[a], descriptors[b]);
      out[a * n + b] = d;
      out[b * n + a] = d;
    }
  }
}

void shifted_l1_matrix(std::span<const DescriptorView> descriptors, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(descriptors.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t a = 0; a < n; ++a) {
    out[a * n + a] = 0.0;
    for (std::ptrdiff_t b = a + 1; b < n; ++b) {
      const double d = shifted_l1(descriptors[a], descriptors[b]);
      out[a * n + b] = d;
      out[b * n + a] = d;
    }
  }
}

namespace {
inline std::uint8_t consistent(int i, int j, int k, int l, std::span<const double> ds, int ns,
                               std::span<const double> dt, int nt, double eps) {
  if (i == k || j == l) return 0;
  const double a = ds[static_cast<std::size_t>(i) * ns + k];
  const double b = dt[static_cast<std::size_t>(j) * nt + l];
  return std::abs(a - b) <= eps ? 1 : 0;
}
}  // namespace

void consistency_adjacency_reference(std::span<const int> src, std::span<const int> dst,
                                     std::span<const double> ds, int ns, std::span<const double> dt,
                                     int nt, double eps, std::span<std::uint8_t> out) {
  const std::size_t n = src.size();
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      out[u * n + v] = u == v ? 0 : consistent(src[u], dst[u], src[v], dst[v], ds, ns, dt, nt, eps);
}

void consistency_adjacency(std::span<const int> src, std::span<const int> dst, std::span<const double> ds,
                           int ns, std::span<const double> dt, int nt, double eps,
                           std::span<std::uint8_t> out) {
  const auto n = static_cast<std::ptrdiff_t>(src.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t u = 0; u < n; ++u)
    for (std::ptrdiff_t v = 0; v < n; ++v)
      out[u * n + v] = u == v ? 0 : consistent(src[u], dst[u], src[v], dst[v], ds, ns, dt, nt, eps);
}

}  // namespace fcslam::kernels
