#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace fcslam {

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  bool operator==(const Point2&) const = default;
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

/// Rigid SE(2) transform. theta is kept in (-pi, pi] by every operation below.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  static Pose2 identity() { return {}; }
  Point2 translation() const { return {x, y}; }
  bool operator==(const Pose2&) const = default;
};

Pose2 make_pose(double x, double y, double theta);

Pose2 se2_compose(const Pose2& a, const Pose2& b);
Pose2 se2_inverse(const Pose2& p);
/// a^-1 * b: the pose of b expressed in the frame of a.
Pose2 se2_between(const Pose2& a, const Pose2& b);
Point2 se2_apply(const Pose2& p, const Point2& q);
/// Inverse frame transform: expresses a world point in the frame of p.
Point2 se2_apply_inverse(const Pose2& p, const Point2& q);

/// Closed-form least-squares rigid alignment (proper rotation) mapping `src`
/// onto `dst`: minimizes sum |dst_i - T(src_i)|^2. Requires equal, non-empty
/// inputs; returns identity for empty input.
Pose2 align_point_sets(const Point2* src, const Point2* dst, std::size_t n);

// ---------------------------------------------------------------------------
// Deterministic randomness

struct RngSeed {
  std::uint64_t seed = 0;
};

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
/// Derives an independent sub-seed for a named subsystem and index.
RngSeed derive_seed(RngSeed root, std::string_view stream, std::uint64_t index = 0);
inline Rng make_rng(RngSeed s) { return Rng(s.seed); }

}  // namespace fcslam
