#pragma once

#include <cmath>
#include <vector>

#include "pis/core.hpp"
#include "pis/geometry.hpp"
#include "pis/mobility.hpp"

namespace pis {

/// Street-canyon construction with a known failure probability.
///
/// A street runs along x at y = street_y, lined on both sides by buildings. A UAV hovers over
/// the street; a cross wall of height `wall_height` stands `uav_standoff` metres further along.
/// On the ground beyond the wall the UAV is hidden up to the line x = shadow_edge_x, which is
/// independent of y. A user walking back toward the wall is placed so that the part of their
/// mobility circle behind that line has area fraction `target_pf`.
struct ShadowScenarioSpec {
  double target_pf = 0.05;
  double radius = 20.0;
  double dt = 10.0;
  double side_length = 500.0;
  double wall_x = 150.0;
  double wall_thickness = 10.0;
  double wall_height = 40.0;
  double uav_altitude = 60.0;
  double uav_standoff = 60.0;
  double street_y = 250.0;
  double street_half_width = 22.0;
  double lining_depth = 15.0;
  double lining_length = 15.0;
  double lining_gap = 3.0;
  double lining_height = 30.0;
  bool lined = true;
  double grid_cell = 50.0;

  friend bool operator==(const ShadowScenarioSpec&, const ShadowScenarioSpec&) = default;
};

struct ShadowScenario {
  Environment env;
  Vec3 uav;
  UserState user;
  MobilityCircle circle;
  double shadow_edge_x = 0.0;
  double analytic_pf = 0.0;  // exact area fraction of the disk behind the shadow edge
};

/// Area fraction of the unit disk with x < d.
inline double disk_fraction_left_of(double d) {
  if (d <= -1.0) return 0.0;
  if (d >= 1.0) return 1.0;
  return 1.0 - (std::acos(d) - d * std::sqrt(1.0 - d * d)) / kPi;
}

inline ShadowScenario make_shadow_scenario(const ShadowScenarioSpec& s) {
  if (!(s.target_pf >= 0.0 && s.target_pf <= 1.0)) throw ConfigError("shadow scenario: target_pf must be in [0, 1]");
  if (!(s.radius > 0.0 && s.dt > 0.0)) throw ConfigError("shadow scenario: radius and dt must be > 0");
  if (!(s.uav_altitude > s.wall_height)) throw ConfigError("shadow scenario: uav_altitude must exceed wall_height");
  if (!(s.street_half_width > s.radius))
    throw ConfigError("shadow scenario: street_half_width must exceed radius so the lining never blocks");

  const double w0 = s.wall_x;
  const double w1 = s.wall_x + s.wall_thickness;
  const double x_uav = w0 - s.uav_standoff;
  // Ground points beyond the wall are hidden while the ray is still below the wall top at x = w1.
  const double edge = (s.uav_altitude * w1 - s.wall_height * x_uav) / (s.uav_altitude - s.wall_height);

  double lo = -1.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (disk_fraction_left_of(mid) < s.target_pf ? lo : hi) = mid;
  }
  const double d = 0.5 * (lo + hi);
  const double cx = edge - d * s.radius;
  if (cx - s.radius < w1) throw ConfigError("shadow scenario: circle would overlap the wall; increase uav_standoff");
  if (cx + s.radius > s.side_length || x_uav < 0.0) throw ConfigError("shadow scenario: does not fit in side_length");

  std::vector<Obstacle> boxes;
  boxes.push_back({{w0, s.street_y - 100.0}, {w1, s.street_y + 100.0}, s.wall_height});
  if (s.lined) {
    const double x_begin = std::max(0.0, x_uav - 20.0);
    const double x_end = std::min(s.side_length, cx + s.radius + 20.0);
    for (double x = x_begin; x + s.lining_length <= x_end; x += s.lining_length + s.lining_gap) {
      const double y_north = s.street_y + s.street_half_width;
      const double y_south = s.street_y - s.street_half_width;
      boxes.push_back({{x, y_north}, {x + s.lining_length, y_north + s.lining_depth}, s.lining_height});
      boxes.push_back({{x, y_south - s.lining_depth}, {x + s.lining_length, y_south}, s.lining_height});
    }
  }

  UserState user;
  user.position = {cx, s.street_y};
  user.velocity = {-s.radius / s.dt, 0.0};
  user.v_max = s.radius / s.dt;
  user.traffic = TrafficClass::Urllc;
  user.history.assign(user.history_length, user.velocity);

  ShadowScenario out{Environment(s.side_length, std::move(boxes), AltitudeBounds{22.0, 150.0}, s.grid_cell),
                     Vec3{x_uav, s.street_y, s.uav_altitude},
                     user,
                     MobilityCircle{user.position, s.radius},
                     edge,
                     disk_fraction_left_of(d)};
  return out;
}

}  // namespace pis
