#include "fcslam/glare.hpp"

#include <algorithm>
#include <cmath>

#include "fcslam/errors.hpp"

namespace fcslam {

double GlareDescriptor::sum() const {
  double s = 0.0;
  for (double v : data) s += v;
  return s;
}

GlareDescriptor GlareDescriptor::normalized() const {
  GlareDescriptor g = *this;
  const double s = sum();
  if (s > 0.0)
    for (double& v : g.data) v /= s;
  return g;
}

GlareDescriptor build_glare(std::span<const Point2> pts, const GlareConfig& cfg) {
  if (cfg.n_rho < 1 || cfg.n_theta < 1 || !(cfg.rho_max > 0.0) || cfg.blur_sigma < 0.0)
    throw InvalidArgument("invalid GLARE configuration");
  GlareDescriptor g;
  g.n_rho = cfg.n_rho;
  g.n_theta = cfg.n_theta;
  g.rho_max = cfg.rho_max;
  g.data.assign(static_cast<std::size_t>(cfg.n_rho) * cfg.n_theta, 0.0);

  constexpr int kHalf = 2;
  double w[2 * kHalf + 1][2 * kHalf + 1] = {};
  const bool blur = cfg.blur_sigma > 0.0;
  if (blur)
    for (int a = -kHalf; a <= kHalf; ++a)
      for (int b = -kHalf; b <= kHalf; ++b)
        w[a + kHalf][b + kHalf] = std::exp(-(a * a + b * b) / (2.0 * cfg.blur_sigma * cfg.blur_sigma));

  const double rho_bin = cfg.rho_max / cfg.n_rho;
  const double theta_bin = kPi / cfg.n_theta;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dx = pts[j].x - pts[i].x, dy = pts[j].y - pts[i].y;
      const double rho = std::hypot(dx, dy);
      if (rho > cfg.rho_max) continue;
      double th = std::atan2(dy, dx);
      if (th < 0.0) th += kPi;
      if (th >= kPi) th -= kPi;
      const int ri = std::min(cfg.n_rho - 1, static_cast<int>(rho / rho_bin));
      const int ti = std::min(cfg.n_theta - 1, static_cast<int>(th / theta_bin));
      if (!blur) {
        g.data[static_cast<std::size_t>(ri) * cfg.n_theta + ti] += 1.0;
        continue;
      }
      double mass = 0.0;
      for (int a = -kHalf; a <= kHalf; ++a) {
        if (ri + a < 0 || ri + a >= cfg.n_rho) continue;
        for (int b = -kHalf; b <= kHalf; ++b) mass += w[a + kHalf][b + kHalf];
      }
      for (int a = -kHalf; a <= kHalf; ++a) {
        const int r = ri + a;
        if (r < 0 || r >= cfg.n_rho) continue;
        for (int b = -kHalf; b <= kHalf; ++b) {
          const int t = ((ti + b) % cfg.n_theta + cfg.n_theta) % cfg.n_theta;
          g.data[static_cast<std::size_t>(r) * cfg.n_theta + t] += w[a + kHalf][b + kHalf] / mass;
        }
      }
    }
  }
  return g;
}

GlareDescriptor build_glare(std::span<const TreeTrack> trees, const GlareConfig& cfg) {
  std::vector<Point2> pts;
  pts.reserve(trees.size());
  for (const TreeTrack& t : trees) pts.push_back(t.position);
  return build_glare(pts, cfg);
}

double glarot_distance(const GlareDescriptor& s, const GlareDescriptor& t) {
  if (s.n_rho != t.n_rho || s.n_theta != t.n_theta) throw DimensionMismatch("GLARE descriptor shapes differ");
  return kernels::shifted_l1(s.view(), t.view());
}

namespace {

bool consecutive(std::span<const SubmapId> ids, std::size_t a, std::size_t b) {
  if (ids.empty()) return false;
  return ids[a].agent == ids[b].agent && std::abs(ids[a].sequence - ids[b].sequence) == 1;
}

}  // namespace

std::vector<LoopCandidate> find_candidates(std::span<const GlareDescriptor> descriptors,
                                           std::span<const SubmapId> ids, const CandidateConfig& cfg) {
  if (!ids.empty() && ids.size() != descriptors.size()) throw InvalidArgument("ids and descriptors differ in size");
  const std::size_t n = descriptors.size();
  std::vector<GlareDescriptor> norm;
  std::vector<kernels::DescriptorView> views;
  views.reserve(n);
  if (cfg.normalize) {
    norm.reserve(n);
    for (const auto& d : descriptors) norm.push_back(d.normalized());
    for (const auto& d : norm) views.push_back(d.view());
  } else {
    for (const auto& d : descriptors) views.push_back(d.view());
  }
  for (std::size_t k = 1; k < n; ++k)
    if (views[k].rows != views[0].rows || views[k].cols != views[0].cols)
      throw DimensionMismatch("GLARE descriptor shapes differ");

  std::vector<double> dist(n * n, 0.0);
  kernels::shifted_l1_matrix(views, dist);
  std::vector<LoopCandidate> out;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) {
      if (cfg.exclude_consecutive && consecutive(ids, s, t)) continue;
      const double d = dist[s * n + t];
      if (d < cfg.epsilon) out.push_back({static_cast<int>(s), static_cast<int>(t), d});
    }
  return out;
}

std::vector<LoopCandidate> find_candidates_against(std::span<const GlareDescriptor> earlier,
                                                   std::span<const SubmapId> earlier_ids,
                                                   const GlareDescriptor& query, const SubmapId& query_id,
                                                   const CandidateConfig& cfg) {
  const GlareDescriptor q = cfg.normalize ? query.normalized() : query;
  std::vector<LoopCandidate> out;
  for (std::size_t s = 0; s < earlier.size(); ++s) {
    if (cfg.exclude_consecutive && !earlier_ids.empty()) {
      const SubmapId& a = earlier_ids[s];
      if (a.agent == query_id.agent && std::abs(a.sequence - query_id.sequence) == 1) continue;
    }
    const double d = cfg.normalize ? glarot_distance(earlier[s].normalized(), q) : glarot_distance(earlier[s], q);
    if (d < cfg.epsilon) out.push_back({static_cast<int>(s), static_cast<int>(earlier.size()), d});
  }
  return out;
}

}  // namespace fcslam
