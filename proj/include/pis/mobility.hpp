#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>

#include "pis/core.hpp"
#include "pis/geometry.hpp"
#include "pis/rng.hpp"

namespace pis {

enum class TrafficClass { Urllc, Embb };

struct UserState {
  Vec2 position;
  Vec2 velocity;
  double v_max = 3.0;
  TrafficClass traffic = TrafficClass::Urllc;
  std::size_t history_length = 8;
  std::deque<Vec2> history;  // oldest first

  void record_velocity() {
    history.push_back(velocity);
    while (history.size() > history_length) history.pop_front();
  }
};

struct UavState {
  Vec3 position;
  double v_max = 30.0;
};

/// Disk of positions reachable within one decision interval.
struct MobilityCircle {
  Vec2 center;
  double radius = 0.0;

  bool contains(Vec2 z) const { return distance(z, center) <= radius; }
  double area() const { return kPi * radius * radius; }
};

struct UserMotionParams {
  double side_length = 1500.0;
  double heading_sigma = 15.0 * kPi / 180.0;  // per step, radians
};

/// Folds `x` back into [0, side], flipping the matching velocity component once per bounce.
inline void reflect_into(double& x, double& v, double side) {
  while (x < 0.0 || x > side) {
    if (x < 0.0) {
      x = -x;
    } else {
      x = 2.0 * side - x;
    }
    v = -v;
  }
}

inline UserState step_user(UserState u, double dt, const UserMotionParams& params, RandomStream& rng) {
  u.position = u.position + u.velocity * dt;
  reflect_into(u.position.x, u.velocity.x, params.side_length);
  reflect_into(u.position.y, u.velocity.y, params.side_length);
  if (params.heading_sigma > 0.0) u.velocity = rotate(u.velocity, params.heading_sigma * rng.normal());
  const double speed = norm(u.velocity);
  if (speed > u.v_max) u.velocity = u.velocity * (u.v_max / speed);
  u.record_velocity();
  return u;
}

/// Applies a commanded displacement: scaled down to the speed cap, then clamped into the
/// flight volume [0, a]^2 x [h_min, h_max].
inline UavState step_uav(UavState s, Vec3 displacement, double dt, double side_length, AltitudeBounds altitude) {
  const double length = norm(displacement);
  const double max_length = s.v_max * dt;
  if (length > max_length && length > 0.0) displacement = displacement * (max_length / length);
  Vec3 p = s.position + displacement;
  p.x = std::clamp(p.x, 0.0, side_length);
  p.y = std::clamp(p.y, 0.0, side_length);
  p.z = std::clamp(p.z, altitude.min, altitude.max);
  s.position = p;
  return s;
}

/// Circle of radius speed * dt about the user (or v_max * dt in conservative mode).
inline MobilityCircle mobility_circle(const UserState& u, double dt, bool conservative = false) {
  if (!(dt > 0.0)) throw DomainError("mobility_circle: dt must be > 0");
  const double speed = conservative ? u.v_max : norm(u.velocity);
  return {u.position, speed * dt};
}

}  // namespace pis
