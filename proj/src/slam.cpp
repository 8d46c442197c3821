#include "fcslam/slam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "fcslam/errors.hpp"

namespace fcslam {

int FactorGraph::residual_count() const {
  return 3 * static_cast<int>(odometry.size() + priors.size()) + 2 * static_cast<int>(observations.size());
}

int FactorGraph::component_count() const {
  return component.empty() ? 0 : *std::max_element(component.begin(), component.end()) + 1;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

Eigen::Matrix3d diag3(double a, double b, double c) { return Eigen::Vector3d(a, b, c).asDiagonal(); }

}  // namespace

FactorGraph build_graph(std::span<const Submap> submaps, const GlobalAssociation& assoc,
                        std::span<const LoopClosure> closures, const SlamConfig& cfg) {
  if (assoc.maps.size() != submaps.size()) throw InconsistentSizes("association does not cover the submaps");
  const int n = static_cast<int>(submaps.size());
  FactorGraph g;
  g.pose_ids.reserve(submaps.size());
  for (const Submap& s : submaps) g.pose_ids.push_back(s.id);

  // Per-agent chains ordered by sequence.
  std::map<int, std::vector<int>> chains;
  for (int k = 0; k < n; ++k) chains[submaps[k].id.agent].push_back(k);
  for (auto& [agent, chain] : chains)
    std::sort(chain.begin(), chain.end(),
              [&](int a, int b) { return submaps[a].id.sequence < submaps[b].id.sequence; });

  const Eigen::Matrix3d odom_info =
      diag3(1.0 / (cfg.odom_sigma_xy * cfg.odom_sigma_xy), 1.0 / (cfg.odom_sigma_xy * cfg.odom_sigma_xy),
            1.0 / (cfg.odom_sigma_theta * cfg.odom_sigma_theta));
  for (const auto& [agent, chain] : chains)
    for (std::size_t k = 1; k < chain.size(); ++k) {
      const Submap& a = submaps[chain[k - 1]];
      const Submap& b = submaps[chain[k]];
      if (b.id.sequence != a.id.sequence + 1) continue;
      g.odometry.push_back({chain[k - 1], chain[k], se2_between(a.origin, b.origin), odom_info});
    }

  // Agent frame offsets: reference agent first, then through loop closures in
  // the order given.
  std::map<int, Pose2> offset;
  if (!chains.empty()) offset[chains.begin()->first] = Pose2::identity();
  for (bool changed = true; changed;) {
    changed = false;
    for (const LoopClosure& lc : closures) {
      if (lc.s < 0 || lc.s >= n || lc.t < 0 || lc.t >= n) throw InconsistentSizes("loop closure index out of range");
      const int as = submaps[lc.s].id.agent, at = submaps[lc.t].id.agent;
      if (as == at) continue;
      const bool ks = offset.contains(as), kt = offset.contains(at);
      if (ks == kt) continue;
      if (ks) {
        const Pose2 xt = se2_compose(se2_compose(offset[as], submaps[lc.s].origin), lc.transform);
        offset[at] = se2_compose(xt, se2_inverse(submaps[lc.t].origin));
      } else {
        const Pose2 xs = se2_compose(se2_compose(offset[at], submaps[lc.t].origin), se2_inverse(lc.transform));
        offset[as] = se2_compose(xs, se2_inverse(submaps[lc.s].origin));
      }
      changed = true;
    }
  }
  for (const auto& [agent, chain] : chains)
    if (!offset.contains(agent)) {
      offset[agent] = Pose2::identity();
      g.unaligned_agents.push_back(agent);
    }

  g.poses.resize(submaps.size());
  for (int k = 0; k < n; ++k) g.poses[k] = se2_compose(offset[submaps[k].id.agent], submaps[k].origin);

  // Observations and landmark initial values.
  const double w = 1.0 / (cfg.observation_sigma * cfg.observation_sigma);
  g.landmarks.assign(static_cast<std::size_t>(assoc.universe_size), Point2{});
  std::vector<int> seen(static_cast<std::size_t>(assoc.universe_size), 0);
  for (int k = 0; k < n; ++k) {
    if (assoc.maps[k].size() != submaps[k].trees.size())
      throw InconsistentSizes("association size differs from submap tree count");
    for (std::size_t i = 0; i < submaps[k].trees.size(); ++i) {
      const int c = assoc.maps[k][i];
      if (c < 0 || c >= assoc.universe_size) throw InconsistentSizes("universe id out of range");
      const Point2 p = submaps[k].trees[i].position;
      g.observations.push_back({k, c, p, w * Eigen::Matrix2d::Identity()});
      g.landmarks[c] = g.landmarks[c] + se2_apply(g.poses[k], p);
      ++seen[c];
    }
  }
  for (std::size_t c = 0; c < g.landmarks.size(); ++c)
    if (seen[c] > 0) g.landmarks[c] = g.landmarks[c] * (1.0 / seen[c]);

  // Connected components over poses, one anchor each. Agents are visited in
  // id order so the reference agent's first submap anchors its component.
  UnionFind uf(n);
  for (const auto& f : g.odometry) uf.unite(f.from, f.to);
  std::vector<int> first_pose(g.landmarks.size(), -1);
  for (const auto& f : g.observations) {
    if (first_pose[f.landmark] < 0)
      first_pose[f.landmark] = f.pose;
    else
      uf.unite(first_pose[f.landmark], f.pose);
  }
  g.component.assign(static_cast<std::size_t>(n), -1);
  std::map<int, int> root_to_component;
  const Eigen::Matrix3d anchor = cfg.anchor_information * Eigen::Matrix3d::Identity();
  for (const auto& [agent, chain] : chains)
    for (int k : chain) {
      const int root = uf.find(k);
      auto it = root_to_component.find(root);
      if (it == root_to_component.end()) {
        it = root_to_component.emplace(root, static_cast<int>(root_to_component.size())).first;
        g.priors.push_back({k, g.poses[k], anchor});
      }
      g.component[k] = it->second;
    }
  return g;
}

namespace {

Eigen::Matrix3d sqrt_info3(const Eigen::Matrix3d& info) { return Eigen::LLT<Eigen::Matrix3d>(info).matrixL().transpose(); }
Eigen::Matrix2d sqrt_info2(const Eigen::Matrix2d& info) { return Eigen::LLT<Eigen::Matrix2d>(info).matrixL().transpose(); }

void validate(const FactorGraph& g, std::size_t np, std::size_t nl) {
  if (np != g.poses.size() || nl != g.landmarks.size()) throw InconsistentSizes("value vectors do not match graph");
  for (const auto& f : g.odometry)
    if (f.from < 0 || f.to < 0 || f.from >= static_cast<int>(np) || f.to >= static_cast<int>(np) || f.from == f.to)
      throw InconsistentSizes("odometry factor references invalid poses");
  for (const auto& f : g.observations)
    if (f.pose < 0 || f.pose >= static_cast<int>(np) || f.landmark < 0 || f.landmark >= static_cast<int>(nl))
      throw InconsistentSizes("observation factor references invalid variables");
  for (const auto& f : g.priors)
    if (f.pose < 0 || f.pose >= static_cast<int>(np)) throw InconsistentSizes("prior references invalid pose");
}

}  // namespace

Linearization residual_and_jacobian(const FactorGraph& g, std::span<const Pose2> poses,
                                    std::span<const Point2> landmarks) {
  validate(g, poses.size(), landmarks.size());
  const int np = static_cast<int>(poses.size());
  Linearization lin;
  lin.residual.resize(g.residual_count());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(g.odometry.size() * 21 + g.observations.size() * 10 + g.priors.size() * 9));
  int row = 0;

  auto emit = [&](int r0, int c0, const auto& block) {
    for (int i = 0; i < block.rows(); ++i)
      for (int j = 0; j < block.cols(); ++j)
        if (block(i, j) != 0.0) trip.emplace_back(r0 + i, c0 + j, block(i, j));
  };

  for (const OdometryFactor& f : g.odometry) {
    const Pose2& a = poses[f.from];
    const Pose2& b = poses[f.to];
    const double ca = std::cos(a.theta), sa = std::sin(a.theta);
    const double cz = std::cos(f.z.theta), sz = std::sin(f.z.theta);
    const double dx = b.x - a.x, dy = b.y - a.y;
    const Eigen::Vector2d ht(ca * dx + sa * dy, -sa * dx + ca * dy);
    const Eigen::Vector2d d(ht.x() - f.z.x, ht.y() - f.z.y);
    Eigen::Matrix2d RzT;
    RzT << cz, sz, -sz, cz;
    Eigen::Matrix2d RaT;
    RaT << ca, sa, -sa, ca;
    Eigen::Matrix2d dRaT;
    dRaT << -sa, ca, -ca, -sa;
    Eigen::Vector3d e;
    e.head<2>() = RzT * d;
    e[2] = normalize_angle(b.theta - a.theta - f.z.theta);

    Eigen::Matrix3d Ja = Eigen::Matrix3d::Zero(), Jb = Eigen::Matrix3d::Zero();
    Ja.topLeftCorner<2, 2>() = -RzT * RaT;
    Ja.topRightCorner<2, 1>() = RzT * dRaT * Eigen::Vector2d(dx, dy);
    Ja(2, 2) = -1.0;
    Jb.topLeftCorner<2, 2>() = RzT * RaT;
    Jb(2, 2) = 1.0;

    const Eigen::Matrix3d W = sqrt_info3(f.information);
    lin.residual.segment<3>(row) = W * e;
    emit(row, 3 * f.from, Eigen::Matrix3d(W * Ja));
    emit(row, 3 * f.to, Eigen::Matrix3d(W * Jb));
    row += 3;
  }

  for (const ObservationFactor& f : g.observations) {
    const Pose2& x = poses[f.pose];
    const Point2& l = landmarks[f.landmark];
    const double c = std::cos(x.theta), s = std::sin(x.theta);
    const double dx = l.x - x.x, dy = l.y - x.y;
    Eigen::Matrix2d RT;
    RT << c, s, -s, c;
    Eigen::Matrix2d dRT;
    dRT << -s, c, -c, -s;
    const Eigen::Vector2d e = RT * Eigen::Vector2d(dx, dy) - Eigen::Vector2d(f.p.x, f.p.y);
    Eigen::Matrix<double, 2, 3> Jx;
    Jx.leftCols<2>() = -RT;
    Jx.col(2) = dRT * Eigen::Vector2d(dx, dy);
    const Eigen::Matrix2d W = sqrt_info2(f.information);
    lin.residual.segment<2>(row) = W * e;
    emit(row, 3 * f.pose, Eigen::Matrix<double, 2, 3>(W * Jx));
    emit(row, 3 * np + 2 * f.landmark, Eigen::Matrix2d(W * RT));
    row += 2;
  }

  for (const PriorFactor& f : g.priors) {
    const Pose2& x = poses[f.pose];
    const Eigen::Vector3d e(x.x - f.value.x, x.y - f.value.y, normalize_angle(x.theta - f.value.theta));
    const Eigen::Matrix3d W = sqrt_info3(f.information);
    lin.residual.segment<3>(row) = W * e;
    emit(row, 3 * f.pose, W);
    row += 3;
  }

  lin.jacobian.resize(g.residual_count(), 3 * np + 2 * static_cast<int>(landmarks.size()));
  lin.jacobian.setFromTriplets(trip.begin(), trip.end());
  return lin;
}

double graph_cost(const FactorGraph& g, std::span<const Pose2> poses, std::span<const Point2> landmarks) {
  return residual_and_jacobian(g, poses, landmarks).residual.squaredNorm();
}

OptimizeResult optimize(const FactorGraph& g, const LmConfig& cfg) {
  OptimizeResult res;
  res.poses = g.poses;
  res.landmarks = g.landmarks;
  const int np = static_cast<int>(g.poses.size());
  const int nv = g.variable_count();

  Linearization lin = residual_and_jacobian(g, res.poses, res.landmarks);
  double cost = lin.residual.squaredNorm();
  res.initial_cost = cost;
  res.stop_reason = "max_iterations";
  if (nv == 0) {
    res.stop_reason = "empty";
    return res;
  }

  double lambda = cfg.initial_lambda;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  int failures = 0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Eigen::VectorXd grad = lin.jacobian.transpose() * lin.residual;
    if (grad.lpNorm<Eigen::Infinity>() < cfg.gradient_tol) {
      res.stop_reason = "gradient";
      break;
    }
    const Eigen::SparseMatrix<double> H = lin.jacobian.transpose() * lin.jacobian;
    Eigen::VectorXd diag = H.diagonal();
    for (int k = 0; k < nv; ++k) diag[k] = std::max(diag[k], 1e-9);

    bool accepted = false;
    bool exhausted = false;
    while (!accepted) {
      Eigen::SparseMatrix<double> Hd = H;
      for (int k = 0; k < nv; ++k) Hd.coeffRef(k, k) += lambda * diag[k];
      solver.compute(Hd);
      Eigen::VectorXd step;
      if (solver.info() == Eigen::Success) step = solver.solve(-grad);
      if (solver.info() != Eigen::Success || !step.allFinite()) {
        if (++failures > 20) throw SingularSystem("damped normal equations could not be solved");
        lambda *= 10.0;
        continue;
      }
      std::vector<Pose2> poses = res.poses;
      std::vector<Point2> lms = res.landmarks;
      for (int k = 0; k < np; ++k) {
        poses[k].x += step[3 * k];
        poses[k].y += step[3 * k + 1];
        poses[k].theta = normalize_angle(poses[k].theta + step[3 * k + 2]);
      }
      for (std::size_t c = 0; c < lms.size(); ++c) {
        lms[c].x += step[3 * np + 2 * c];
        lms[c].y += step[3 * np + 2 * c + 1];
      }
      Linearization cand = residual_and_jacobian(g, poses, lms);
      const double new_cost = cand.residual.squaredNorm();
      if (new_cost < cost) {
        const double rel = (cost - new_cost) / std::max(cost, 1e-300);
        res.poses = std::move(poses);
        res.landmarks = std::move(lms);
        lin = std::move(cand);
        cost = new_cost;
        res.cost_log.push_back(cost);
        res.iterations = it + 1;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        if (rel < cfg.relative_cost_tol) exhausted = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          exhausted = true;
          break;
        }
      }
    }
    if (exhausted) {
      res.stop_reason = accepted ? "relative_cost" : "no_decrease";
      break;
    }
  }
  res.final_cost = cost;
  return res;
}

double ate(std::span<const Pose2> est, std::span<const Pose2> truth, bool align) {
  if (est.size() != truth.size()) throw LengthMismatch("trajectories differ in length");
  if (est.empty()) throw LengthMismatch("empty trajectories");
  Pose2 T = Pose2::identity();
  if (align) {
    std::vector<Point2> a, b;
    for (std::size_t k = 0; k < est.size(); ++k) {
      a.push_back(est[k].translation());
      b.push_back(truth[k].translation());
    }
    T = align_point_sets(a.data(), b.data(), a.size());
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k)
    sum += distance(se2_apply(T, est[k].translation()), truth[k].translation());
  return sum / static_cast<double>(est.size());
}

std::string dump_graph(const FactorGraph& g) {
  std::ostringstream os;
  char buf[256];
  for (std::size_t k = 0; k < g.poses.size(); ++k) {
    std::snprintf(buf, sizeof buf, "POSE %zu %d %d %.9g %.9g %.9g\n", k, g.pose_ids[k].agent, g.pose_ids[k].sequence,
                  g.poses[k].x, g.poses[k].y, g.poses[k].theta);
    os << buf;
  }
  for (std::size_t c = 0; c < g.landmarks.size(); ++c) {
    std::snprintf(buf, sizeof buf, "LANDMARK %zu %.9g %.9g\n", c, g.landmarks[c].x, g.landmarks[c].y);
    os << buf;
  }
  for (const auto& f : g.odometry) {
    std::snprintf(buf, sizeof buf, "ODOM %d %d %.9g %.9g %.9g\n", f.from, f.to, f.z.x, f.z.y, f.z.theta);
    os << buf;
  }
  for (const auto& f : g.observations) {
    std::snprintf(buf, sizeof buf, "OBS %d %d %.9g %.9g\n", f.pose, f.landmark, f.p.x, f.p.y);
    os << buf;
  }
  for (const auto& f : g.priors) {
    std::snprintf(buf, sizeof buf, "PRIOR %d %.9g %.9g %.9g\n", f.pose, f.value.x, f.value.y, f.value.theta);
    os << buf;
  }
  return os.str();
}

}  // namespace fcslam
