#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fcslam/geometry.hpp"
#include "fcslam/occupancy.hpp"
#include "fcslam/tree_detect.hpp"

namespace fcslam {

struct SubmapId {
  int agent = 0;
  int sequence = 0;
  auto operator<=>(const SubmapId&) const = default;
};

struct TreeTrack {
  int id = 0;
  Point2 position;  // submap frame
  double radius = 0.0;
  int observation_count = 1;
};

struct Submap {
  SubmapId id;
  Pose2 origin;  // in the agent's odometry frame
  std::vector<TreeTrack> trees;
  OccupancyGrid2D occupancy;  // local frame; empty when not maintained
  bool open = true;
};

struct TrackingConfig {
  double merge_distance = 0.5;
  double radius_tolerance = 0.10;
};

/// Moves sensor-frame detections into the submap frame and merges each into
/// its closest track when the centers are closer than merge_distance and the
/// relative radius difference is below radius_tolerance; otherwise a new track
/// with count 1 is appended. Merged tracks keep count-weighted running means.
/// Throws ClosedSubmap.
void update_submap(Submap& submap, std::span<const TreeDetection> detections, const Pose2& sensor_in_submap,
                   const TrackingConfig& cfg = {});

/// Drops tracks seen fewer than tau_cull times, renumbers the survivors
/// 0..n-1 and closes the submap. Throws ClosedSubmap.
void finalize_submap(Submap& submap, int tau_cull = 3);

struct SubmapConfig {
  double period = 5.0;  // seconds
  int tau_cull = 3;
  TrackingConfig tracking;
  double occupancy_half_extent = 0.0;  // local grid is (2*extent)^2 around the origin; 0 disables it
  double occupancy_resolution = 0.15;
};

/// Time-driven submap rotation for one agent. A new submap is opened at the
/// current odometry pose at t = 0 and on every period boundary; the previous
/// one is finalized and handed back to the caller.
class SubmapLifecycle {
 public:
  SubmapLifecycle(int agent, const SubmapConfig& cfg);

  /// Advances the clock. Returns the finalized submap when `t` has crossed a
  /// period boundary since the last call.
  std::optional<Submap> advance(double t, const Pose2& odom_pose);
  /// Finalizes and returns the open submap (end of mission).
  std::optional<Submap> finish();

  Submap& current() { return current_; }
  bool started() const { return started_; }
  /// Sensor pose relative to the open submap's origin.
  Pose2 sensor_in_submap(const Pose2& odom_pose) const { return se2_between(current_.origin, odom_pose); }
  /// Origins of every submap opened so far, in order.
  const std::vector<Pose2>& origins() const { return origins_; }
  /// between(origin_k, origin_{k+1}) for consecutive opened submaps.
  std::vector<Pose2> odometry_links() const;

 private:
  void open(const Pose2& odom_pose);

  int agent_;
  SubmapConfig cfg_;
  Submap current_;
  bool started_ = false;
  bool finished_ = false;
  int next_sequence_ = 0;
  int current_slot_ = 0;
  std::vector<Pose2> origins_;
};

// ---------------------------------------------------------------------------
// Wire codec
//
// Little-endian layout:
//   0  u8[2] magic 0x53 0x4D
//   2  u8    version (1)
//   3  u8    agent id
//   4  u16   sequence
//   6  i32   origin x, millimeters
//   10 i32   origin y, millimeters
//   14 i32   origin theta, micro-radians
//   18 u16   tree count
//   20       trees, 7 bytes each:
//            i16 x cm, i16 y cm (submap frame, |x|, |y| <= 327.67 m),
//            u16 radius in 5 mm units, u8 observation count (saturating at 255)

inline constexpr std::size_t kSubmapHeaderBytes = 20;
inline constexpr std::size_t kSubmapTreeBytes = 7;
inline constexpr std::size_t encoded_size(std::size_t tree_count) {
  return kSubmapHeaderBytes + kSubmapTreeBytes * tree_count;
}

/// Throws InvalidArgument for open submaps or ids that do not fit the format.
std::vector<std::uint8_t> encode_submap(const Submap& submap);
/// Closed submap with trees and origin only. Throws MalformedPayload.
Submap decode_submap(std::span<const std::uint8_t> bytes);

/// Applies the wire quantization to a submap without serializing it.
Submap quantize_submap(const Submap& submap);

}  // namespace fcslam
