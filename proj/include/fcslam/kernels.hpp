#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference version
// (kept for tests and benchmarks) and an OpenMP version that must produce
// bit-identical output.

#include <cstdint>
#include <span>
#include <vector>

#include "fcslam/geometry.hpp"

namespace fcslam::kernels {

/// Circles stored as structure-of-arrays.
struct CircleSet {
  std::vector<double> cx, cy, r;

  std::size_t size() const { return r.size(); }
  void push(double x, double y, double radius) {
    cx.push_back(x);
    cy.push_back(y);
    r.push_back(radius);
  }
};

/// Distance along a unit ray to the first intersection with a circle, or
/// +inf when the ray misses it or the circle lies behind the origin.
double ray_circle_distance(double ox, double oy, double dx, double dy, double cx, double cy,
                           double r);

/// Uniform bucket grid over circles for ray traversal.
class CircleGrid {
 public:
  CircleGrid() = default;
  CircleGrid(const CircleSet& circles, double cell_size);

  const CircleSet& circles() const { return circles_; }
  double cell_size() const { return cell_; }

  /// First hit distance along the ray within [0, max_range], or +inf.
  double cast(double ox, double oy, double dx, double dy, double max_range) const;

 private:
  CircleSet circles_;
  double cell_ = 1.0;
  double x0_ = 0.0, y0_ = 0.0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> items_;
};

/// Brute-force serial ray casting: ranges[k] = first hit along heading +
/// bearings[k] from (ox, oy), +inf when nothing is hit within max_range.
void raycast_reference(const CircleSet& circles, const Pose2& origin, std::span<const double> bearings,
                       double max_range, std::span<double> ranges);

/// Grid-accelerated ray casting, parallel over beams.
void raycast(const CircleGrid& grid, const Pose2& origin, std::span<const double> bearings,
             double max_range, std::span<double> ranges);

/// Row-major dense matrices of shape rows x cols, used for GLARE histograms.
struct DescriptorView {
  const double* data = nullptr;
  int rows = 0;
  int cols = 0;
};

/// Shifted-L1 distance between two descriptors: min over cyclic column
/// shifts k of sum |t(i,j) - s(i,(j+k) mod cols)|.
double shifted_l1(const DescriptorView& s, const DescriptorView& t);

/// All pairwise shifted-L1 distances, out is n*n row-major with zero
/// diagonal. Serial reference.
void shifted_l1_matrix_reference(std::span<const DescriptorView> descriptors, std::span<double> out);
/// Same as above, parallel over pairs.
void shifted_l1_matrix(std::span<const DescriptorView> descriptors, std::span<double> out);

/// Pairwise-consistency adjacency for correspondence graphs. Vertex v stands
/// for the hypothesis (src[v], dst[v]); ds/dt are row-major intra-map distance
/// matrices of sizes ns x ns and nt x nt. out is n*n row-major with 0/1
/// entries; an edge requires distinct indices on both sides and
/// |ds(i,k) - dt(j,l)| <= eps.
void consistency_adjacency_reference(std::span<const int> src, std::span<const int> dst,
                                     std::span<const double> ds, int ns, std::span<const double> dt,
                                     int nt, double eps, std::span<std::uint8_t> out);
void consistency_adjacency(std::span<const int> src, std::span<const int> dst,
                           std::span<const double> ds, int ns, std::span<const double> dt, int nt,
                           double eps, std::span<std::uint8_t> out);

}  // namespace fcslam::kernels
