// Serial reference vs OpenMP kernels on inputs of realistic size.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fcslam/kernels.hpp"

using namespace fcslam;
using namespace fcslam::kernels;

namespace {

CircleSet random_circles(int n, double half_extent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-half_extent, half_extent), rad(0.1, 0.3);
  CircleSet c;
  for (int i = 0; i < n; ++i) c.push(pos(rng), pos(rng), rad(rng));
  return c;
}

std::vector<double> bearings(int beams) {
  std::vector<double> b(beams);
  for (int k = 0; k < beams; ++k) b[k] = -kPi + 2.0 * kPi * k / beams;
  return b;
}

void BM_RaycastReference(benchmark::State& state) {
  const CircleSet c = random_circles(static_cast<int>(state.range(0)), 25.0, 1);
  const auto b = bearings(1440);
  std::vector<double> out(b.size());
  for (auto _ : state) {
    raycast_reference(c, Pose2{}, b, 30.0, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_Raycast(benchmark::State& state) {
  const CircleGrid grid(random_circles(static_cast<int>(state.range(0)), 25.0, 1), 1.0);
  const auto b = bearings(1440);
  std::vector<double> out(b.size());
  for (auto _ : state) {
    raycast(grid, Pose2{}, b, 30.0, out);
    benchmark::DoNotOptimize(out.data());
  }
}

std::vector<std::vector<double>> random_descriptors(int n) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> d(n, std::vector<double>(120 * 12));
  for (auto& v : d)
    for (double& x : v) x = u(rng);
  return d;
}

template <bool kParallel>
void BM_ShiftedL1Matrix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto data = random_descriptors(n);
  std::vector<DescriptorView> views;
  for (const auto& v : data) views.push_back({v.data(), 120, 12});
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (auto _ : state) {
    if constexpr (kParallel)
      shifted_l1_matrix(views, out);
    else
      shifted_l1_matrix_reference(views, out);
    benchmark::DoNotOptimize(out.data());
  }
}

struct Hypotheses {
  std::vector<int> src, dst;
  std::vector<double> ds, dt;
  int ns = 0, nt = 0;
};

Hypotheses random_hypotheses(int trees) {
  const CircleSet s = random_circles(trees, 10.0, 3), t = random_circles(trees, 10.0, 4);
  Hypotheses h;
  h.ns = h.nt = trees;
  auto dist = [](const CircleSet& c, int n) {
    std::vector<double> d(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d[i * n + j] = std::hypot(c.cx[i] - c.cx[j], c.cy[i] - c.cy[j]);
    return d;
  };
  h.ds = dist(s, trees);
  h.dt = dist(t, trees);
  for (int i = 0; i < trees; ++i)
    for (int j = 0; j < trees; ++j)
      if (std::abs(s.r[i] - t.r[j]) < 0.05) {
        h.src.push_back(i);
        h.dst.push_back(j);
      }
  return h;
}

template <bool kParallel>
void BM_ConsistencyAdjacency(benchmark::State& state) {
  const Hypotheses h = random_hypotheses(static_cast<int>(state.range(0)));
  std::vector<std::uint8_t> out(h.src.size() * h.src.size());
  for (auto _ : state) {
    if constexpr (kParallel)
      consistency_adjacency(h.src, h.dst, h.ds, h.ns, h.dt, h.nt, 0.15, out);
    else
      consistency_adjacency_reference(h.src, h.dst, h.ds, h.ns, h.dt, h.nt, 0.15, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["hypotheses"] = static_cast<double>(h.src.size());
}

}  // namespace

BENCHMARK(BM_RaycastReference)->Arg(100)->Arg(400);
BENCHMARK(BM_Raycast)->Arg(100)->Arg(400);
BENCHMARK(BM_ShiftedL1Matrix<false>)->Arg(32)->Arg(128);
BENCHMARK(BM_ShiftedL1Matrix<true>)->Arg(32)->Arg(128);
BENCHMARK(BM_ConsistencyAdjacency<false>)->Arg(20)->Arg(40);
BENCHMARK(BM_ConsistencyAdjacency<true>)->Arg(20)->Arg(40);

BENCHMARK_MAIN();
