#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pis/core.hpp"

namespace pis {

/// Axis-aligned building: footprint rectangle extruded from the ground up to `height`.
struct Obstacle {
  Vec2 footprint_min;
  Vec2 footprint_max;
  double height = 0.0;

  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

struct AltitudeBounds {
  double min = 22.0;
  double max = 150.0;

  friend bool operator==(const AltitudeBounds&, const AltitudeBounds&) = default;
};

/// True iff the open segment (p, q) meets the open interior of the box. Slab method; a segment
/// that only grazes a face, edge or corner is not blocked.
inline bool segment_hits_box(Vec3 p, Vec3 q, const Obstacle& box) {
  const double lo[3] = {box.footprint_min.x, box.footprint_min.y, 0.0};
  const double hi[3] = {box.footprint_max.x, box.footprint_max.y, box.height};
  const double origin[3] = {p.x, p.y, p.z};
  const double dir[3] = {q.x - p.x, q.y - p.y, q.z - p.z};
  double t_enter = 0.0;
  double t_exit = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (dir[axis] == 0.0) {
      if (!(origin[axis] > lo[axis] && origin[axis] < hi[axis])) return false;
      continue;
    }
    double t0 = (lo[axis] - origin[axis]) / dir[axis];
    double t1 = (hi[axis] - origin[axis]) / dir[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (!(t_enter < t_exit)) return false;
  }
  return true;
}

/// Square world [0, a]^2 with box obstacles and the UAV flight band. Immutable after
/// construction, so concurrent queries are safe.
///
/// With `grid_cell > 0` obstacles are bucketed into a uniform grid and a query only tests boxes
/// whose cells overlap the segment's ground-projected bounding rectangle.
class Environment {
 public:
  Environment(double side_length, std::vector<Obstacle> obstacles, AltitudeBounds altitude = {},
              double grid_cell = 50.0)
      : side_(side_length), obstacles_(std::move(obstacles)), altitude_(altitude), cell_(grid_cell) {
    if (!(side_ > 0.0) || !std::isfinite(side_))
      throw ConfigError("environment.side_length must be positive and finite");
    if (!(altitude_.min > 0.0 && altitude_.min < altitude_.max))
      throw ConfigError("environment.altitude_bounds must satisfy 0 < h_min < h_max");
    if (!(cell_ >= 0.0) || !std::isfinite(cell_))
      throw ConfigError("environment.grid_cell must be >= 0 (0 disables the index)");
    for (std::size_t i = 0; i < obstacles_.size(); ++i) validate(obstacles_[i], i);
    if (cell_ > 0.0) build_index();
  }

  double side_length() const { return side_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  AltitudeBounds altitude_bounds() const { return altitude_; }
  double grid_cell() const { return cell_; }

  bool contains(Vec2 p) const { return p.x >= 0.0 && p.x <= side_ && p.y >= 0.0 && p.y <= side_; }

  bool segment_blocked(Vec3 p, Vec3 q) const {
    if (cell_ <= 0.0) {
      for (const auto& box : obstacles_)
        if (segment_hits_box(p, q, box)) return true;
      return false;
    }
    const int cx0 = cell_of(std::min(p.x, q.x), nx_);
    const int cx1 = cell_of(std::max(p.x, q.x), nx_);
    const int cy0 = cell_of(std::min(p.y, q.y), ny_);
    const int cy1 = cell_of(std::max(p.y, q.y), ny_);
    for (int cy = cy0; cy <= cy1; ++cy) {
      for (int cx = cx0; cx <= cx1; ++cx) {
        for (const std::size_t id : cells_[static_cast<std::size_t>(cy * nx_ + cx)]) {
          // Test each box once: only in the first queried cell it covers.
          const auto& span = spans_[id];
          if (std::max(span[0], cx0) != cx || std::max(span[1], cy0) != cy) continue;
          if (segment_hits_box(p, q, obstacles_[id])) return true;
        }
      }
    }
    return false;
  }

 private:
  void validate(const Obstacle& o, std::size_t i) const {
    const std::string where = "environment.obstacles[" + std::to_string(i) + "]";
    if (!is_finite(o.footprint_min) || !is_finite(o.footprint_max) || !std::isfinite(o.height))
      throw ConfigError(where + " has non-finite coordinates");
    if (!(o.footprint_min.x < o.footprint_max.x && o.footprint_min.y < o.footprint_max.y))
      throw ConfigError(where + " footprint_min must be < footprint_max componentwise");
    if (!(o.height > 0.0)) throw ConfigError(where + " height must be > 0");
    if (o.footprint_min.x < 0.0 || o.footprint_min.y < 0.0 || o.footprint_max.x > side_ ||
        o.footprint_max.y > side_)
      throw ConfigError(where + " footprint must lie within [0, side_length]^2");
  }

  int cell_of(double v, int n) const {
    const int c = static_cast<int>(std::floor(v / cell_));
    return std::clamp(c, 0, n - 1);
  }

  void build_index() {
    nx_ = ny_ = std::max(1, static_cast<int>(std::ceil(side_ / cell_)));
    cells_.assign(static_cast<std::size_t>(nx_ * ny_), {});
    spans_.resize(obstacles_.size());
    for (std::size_t id = 0; id < obstacles_.size(); ++id) {
      const auto& o = obstacles_[id];
      const int x0 = cell_of(o.footprint_min.x, nx_), x1 = cell_of(o.footprint_max.x, nx_);
      const int y0 = cell_of(o.footprint_min.y, ny_), y1 = cell_of(o.footprint_max.y, ny_);
      spans_[id] = {x0, y0};
      for (int cy = y0; cy <= y1; ++cy)
        for (int cx = x0; cx <= x1; ++cx) cells_[static_cast<std::size_t>(cy * nx_ + cx)].push_back(id);
    }
  }

  double side_;
  std::vector<Obstacle> obstacles_;
  AltitudeBounds altitude_;
  double cell_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::vector<std::size_t>> cells_;
  std::vector<std::array<int, 2>> spans_;
};

inline bool segment_blocked(Vec3 p, Vec3 q, const Environment& env) { return env.segment_blocked(p, q); }

/// Failure indicator: the link from the UAV to a ground user (altitude 0) is NLoS.
inline bool is_nlos(Vec3 uav, Vec2 ground_point, const Environment& env) {
  return env.segment_blocked(uav, lift(ground_point, 0.0));
}

}  // namespace pis
