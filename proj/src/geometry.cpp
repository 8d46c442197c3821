#include "fcslam/geometry.hpp"

namespace fcslam {

double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

Pose2 make_pose(double x, double y, double theta) { return {x, y, normalize_angle(theta)}; }

Pose2 se2_compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, normalize_angle(a.theta + b.theta)};
}

Pose2 se2_inverse(const Pose2& p) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  return {-(c * p.x + s * p.y), -(-s * p.x + c * p.y), normalize_angle(-p.theta)};
}

Pose2 se2_between(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  const double dx = b.x - a.x, dy = b.y - a.y;
  return {c * dx + s * dy, -s * dx + c * dy, normalize_angle(b.theta - a.theta)};
}

Point2 se2_apply(const Pose2& p, const Point2& q) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  return {p.x + c * q.x - s * q.y, p.y + s * q.x + c * q.y};
}

Point2 se2_apply_inverse(const Pose2& p, const Point2& q) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  const double dx = q.x - p.x, dy = q.y - p.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Pose2 align_point_sets(const Point2* src, const Point2* dst, std::size_t n) {
  if (n == 0) return {};
  Point2 ms{}, md{};
  for (std::size_t i = 0; i < n; ++i) {
    ms = ms + src[i];
    md = md + dst[i];
  }
  ms = ms * (1.0 / static_cast<double>(n));
  md = md * (1.0 / static_cast<double>(n));
  double sxx = 0, sxy = 0, syx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = src[i] - ms, b = dst[i] - md;
    sxx += a.x * b.x;
    sxy += a.x * b.y;
    syx += a.y * b.x;
    syy += a.y * b.y;
  }
  const double theta = std::atan2(sxy - syx, sxx + syy);
  const double c = std::cos(theta), s = std::sin(theta);
  return {md.x - (c * ms.x - s * ms.y), md.y - (s * ms.x + c * ms.y), normalize_angle(theta)};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngSeed derive_seed(RngSeed root, std::string_view stream, std::uint64_t index) {
  // FNV-1a over the stream name keeps sub-seeds stable across builds.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : stream) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return {splitmix64(splitmix64(root.seed ^ h) + index)};
}

}  // namespace fcslam
