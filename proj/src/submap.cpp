#include "fcslam/submap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fcslam/errors.hpp"

namespace fcslam {

void update_submap(Submap& submap, std::span<const TreeDetection> detections, const Pose2& sensor_in_submap,
                   const TrackingConfig& cfg) {
  if (!submap.open) throw ClosedSubmap("cannot update a finalized submap");
  for (const TreeDetection& det : detections) {
    const Point2 p = se2_apply(sensor_in_submap, det.circle.center);
    const double r = det.circle.radius;
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < submap.trees.size(); ++k) {
      const double d = distance(submap.trees[k].position, p);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(k);
      }
    }
    if (best >= 0) {
      TreeTrack& t = submap.trees[best];
      if (bd < cfg.merge_distance && std::abs(r - t.radius) / t.radius < cfg.radius_tolerance) {
        const double c = t.observation_count;
        t.position = (t.position * c + p) * (1.0 / (c + 1.0));
        t.radius = (t.radius * c + r) / (c + 1.0);
        ++t.observation_count;
        continue;
      }
    }
    submap.trees.push_back({static_cast<int>(submap.trees.size()), p, r, 1});
  }
}

void finalize_submap(Submap& submap, int tau_cull) {
  if (!submap.open) throw ClosedSubmap("submap already finalized");
  std::erase_if(submap.trees, [&](const TreeTrack& t) { return t.observation_count < tau_cull; });
  for (std::size_t k = 0; k < submap.trees.size(); ++k) submap.trees[k].id = static_cast<int>(k);
  submap.open = false;
}

SubmapLifecycle::SubmapLifecycle(int agent, const SubmapConfig& cfg) : agent_(agent), cfg_(cfg) {
  if (!(cfg.period > 0.0)) throw InvalidArgument("submap period must be positive");
}

void SubmapLifecycle::open(const Pose2& odom_pose) {
  current_ = Submap{};
  current_.id = {agent_, next_sequence_++};
  current_.origin = odom_pose;
  if (cfg_.occupancy_half_extent > 0.0) {
    const double e = cfg_.occupancy_half_extent;
    const int n = static_cast<int>(std::ceil(2.0 * e / cfg_.occupancy_resolution));
    current_.occupancy = OccupancyGrid2D({-e, -e}, n, n, cfg_.occupancy_resolution);
  }
  origins_.push_back(odom_pose);
}

std::optional<Submap> SubmapLifecycle::advance(double t, const Pose2& odom_pose) {
  if (finished_) throw ClosedSubmap("lifecycle already finished");
  const int slot = static_cast<int>(std::floor(t / cfg_.period + 1e-9));
  if (!started_) {
    started_ = true;
    open(odom_pose);
    current_slot_ = slot;
    return std::nullopt;
  }
  if (slot <= current_slot_) return std::nullopt;
  finalize_submap(current_, cfg_.tau_cull);
  Submap done = std::move(current_);
  open(odom_pose);
  current_slot_ = slot;
  return done;
}

std::optional<Submap> SubmapLifecycle::finish() {
  if (!started_ || finished_) return std::nullopt;
  finished_ = true;
  finalize_submap(current_, cfg_.tau_cull);
  return std::move(current_);
}

std::vector<Pose2> SubmapLifecycle::odometry_links() const {
  std::vector<Pose2> links;
  for (std::size_t k = 1; k < origins_.size(); ++k) links.push_back(se2_between(origins_[k - 1], origins_[k]));
  return links;
}

// ---------------------------------------------------------------------------
// Wire codec

namespace {

constexpr std::uint8_t kMagic0 = 0x53, kMagic1 = 0x4D, kVersion = 1;

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_i32(std::vector<std::uint8_t>& out, std::int32_t s) {
  const auto v = static_cast<std::uint32_t>(s);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>((v >> (8 * k)) & 0xFF));
}

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::int32_t get_i32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return static_cast<std::int32_t>(v);
}

std::int32_t quantize_i32(double v, double scale) {
  const double q = std::round(v * scale);
  if (!(std::abs(q) <= static_cast<double>(std::numeric_limits<std::int32_t>::max())))
    throw InvalidArgument("value out of wire range");
  return static_cast<std::int32_t>(q);
}

std::int16_t quantize_i16(double v, double scale) {
  const double q = std::round(v * scale);
  if (!(std::abs(q) <= 32767.0)) throw InvalidArgument("tree position out of wire range");
  return static_cast<std::int16_t>(q);
}

std::uint16_t quantize_radius(double r) {
  const double q = std::round(r / 0.005);
  if (!(q >= 0.0 && q <= 65535.0)) throw InvalidArgument("radius out of wire range");
  return static_cast<std::uint16_t>(q);
}

}  // namespace

std::vector<std::uint8_t> encode_submap(const Submap& s) {
  if (s.open) throw InvalidArgument("only finalized submaps can be encoded");
  if (s.id.agent < 0 || s.id.agent > 255) throw InvalidArgument("agent id does not fit in u8");
  if (s.id.sequence < 0 || s.id.sequence > 65535) throw InvalidArgument("sequence does not fit in u16");
  if (s.trees.size() > 65535) throw InvalidArgument("too many trees");
  std::vector<std::uint8_t> out;
  out.reserve(encoded_size(s.trees.size()));
  put_u8(out, kMagic0);
  put_u8(out, kMagic1);
  put_u8(out, kVersion);
  put_u8(out, static_cast<std::uint8_t>(s.id.agent));
  put_u16(out, static_cast<std::uint16_t>(s.id.sequence));
  put_i32(out, quantize_i32(s.origin.x, 1e3));
  put_i32(out, quantize_i32(s.origin.y, 1e3));
  put_i32(out, quantize_i32(s.origin.theta, 1e6));
  put_u16(out, static_cast<std::uint16_t>(s.trees.size()));
  for (const TreeTrack& t : s.trees) {
    put_u16(out, static_cast<std::uint16_t>(quantize_i16(t.position.x, 1e2)));
    put_u16(out, static_cast<std::uint16_t>(quantize_i16(t.position.y, 1e2)));
    put_u16(out, quantize_radius(t.radius));
    put_u8(out, static_cast<std::uint8_t>(std::clamp(t.observation_count, 0, 255)));
  }
  return out;
}

Submap decode_submap(std::span<const std::uint8_t> b) {
  if (b.size() < kSubmapHeaderBytes) throw MalformedPayload("truncated header");
  if (b[0] != kMagic0 || b[1] != kMagic1) throw MalformedPayload("bad magic");
  if (b[2] != kVersion) throw MalformedPayload("unsupported version " + std::to_string(b[2]));
  Submap s;
  s.open = false;
  s.id.agent = b[3];
  s.id.sequence = get_u16(&b[4]);
  s.origin.x = get_i32(&b[6]) * 1e-3;
  s.origin.y = get_i32(&b[10]) * 1e-3;
  s.origin.theta = normalize_angle(get_i32(&b[14]) * 1e-6);
  const std::size_t n = get_u16(&b[18]);
  if (b.size() != encoded_size(n))
    throw MalformedPayload("expected " + std::to_string(encoded_size(n)) + " bytes for " + std::to_string(n) +
                           " trees, got " + std::to_string(b.size()));
  s.trees.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint8_t* p = &b[kSubmapHeaderBytes + k * kSubmapTreeBytes];
    TreeTrack& t = s.trees[k];
    t.id = static_cast<int>(k);
    t.position = {static_cast<std::int16_t>(get_u16(p)) * 1e-2, static_cast<std::int16_t>(get_u16(p + 2)) * 1e-2};
    t.radius = get_u16(p + 4) * 0.005;
    t.observation_count = p[6];
  }
  return s;
}

Submap quantize_submap(const Submap& s) {
  Submap q = s;
  q.open = false;
  return decode_submap(encode_submap(q));
}

}  // namespace fcslam
