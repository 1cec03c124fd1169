#include "samalm/orca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace samalm {
namespace {

constexpr double kEpsilon = 1e-9;

// Optimizes along line `line_no` subject to the lines before it and the speed disc.
bool solve_on_line(std::span<const OrcaLine> lines, std::size_t line_no, double radius, Vec2 opt_velocity,
                   bool direction_opt, Vec2& result) {
  const OrcaLine& line = lines[line_no];
  const double dot_product = dot(line.point, line.direction);
  const double discriminant = dot_product * dot_product + radius * radius - norm_sq(line.point);
  if (discriminant < 0.0) return false;

  const double sqrt_disc = std::sqrt(discriminant);
  double t_left = -dot_product - sqrt_disc;
  double t_right = -dot_product + sqrt_disc;

  for (std::size_t i = 0; i < line_no; ++i) {
    const double denominator = det(line.direction, lines[i].direction);
    const double numerator = det(lines[i].direction, line.point - lines[i].point);
    if (std::abs(denominator) <= kEpsilon) {
      if (numerator < 0.0) return false;
      continue;
    }
    const double t = numerator / denominator;
    if (denominator >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = dot(opt_velocity, line.direction) > 0.0 ? line.point + t_right * line.direction
                                                      : line.point + t_left * line.direction;
  } else {
    const double t = std::clamp(dot(line.direction, opt_velocity - line.point), t_left, t_right);
    result = line.point + t * line.direction;
  }
  return true;
}

// Returns the index of the first line that could not be satisfied, or lines.size().
std::size_t solve_planar(std::span<const OrcaLine> lines, double radius, Vec2 opt_velocity, bool direction_opt,
                         Vec2& result) {
  if (direction_opt) {
    result = opt_velocity * radius;
  } else if (norm_sq(opt_velocity) > radius * radius) {
    result = normalized(opt_velocity) * radius;
  } else {
    result = opt_velocity;
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) > 0.0) {
      const Vec2 previous = result;
      if (!solve_on_line(lines, i, radius, opt_velocity, direction_opt, result)) {
        result = previous;
        return i;
      }
    }
  }
  return lines.size();
}

// Minimizes the maximum violation over all lines, starting at `begin_line`.
void solve_fallback(std::span<const OrcaLine> lines, std::size_t begin_line, double radius, Vec2& result) {
  double distance = 0.0;
  for (std::size_t i = begin_line; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) <= distance) continue;

    std::vector<OrcaLine> projected;
    projected.reserve(i);
    for (std::size_t j = 0; j < i; ++j) {
      OrcaLine line;
      const double determinant = det(lines[i].direction, lines[j].direction);
      if (std::abs(determinant) <= kEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;
        line.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        line.point = lines[i].point +
                     (det(lines[j].direction, lines[i].point - lines[j].point) / determinant) * lines[i].direction;
      }
      line.direction = normalized(lines[j].direction - lines[i].direction);
      projected.push_back(line);
    }

    const Vec2 previous = result;
    if (solve_planar(projected, radius, Vec2{-lines[i].direction.y, lines[i].direction.x}, true, result) <
        projected.size()) {
      // Numerical corner case; keep the previous value.
      result = previous;
    }
    distance = det(lines[i].direction, lines[i].point - result);
  }
}

}  // namespace

std::vector<OrcaLine> orca_constraints(const OrcaAgent& agent, std::span<const OrcaNeighbor> neighbors,
                                       double time_horizon, double dt) {
  std::vector<OrcaLine> lines;
  lines.reserve(neighbors.size());
  const double inv_horizon = 1.0 / time_horizon;

  for (const OrcaNeighbor& other : neighbors) {
    const Vec2 rel_pos = other.p - agent.p;
    const Vec2 rel_vel = agent.v - other.v;
    const double dist_sq = norm_sq(rel_pos);
    const double combined_radius = agent.radius + other.radius;
    const double combined_radius_sq = combined_radius * combined_radius;

    OrcaLine line;
    Vec2 u;
    if (dist_sq > combined_radius_sq) {
      const Vec2 w = rel_vel - inv_horizon * rel_pos;
      const double w_length_sq = norm_sq(w);
      const double dot1 = dot(w, rel_pos);

      if (dot1 < 0.0 && dot1 * dot1 > combined_radius_sq * w_length_sq) {
        // Closest point lies on the cut-off circle.
        const double w_length = std::sqrt(w_length_sq);
        const Vec2 unit_w = w / w_length;
        line.direction = {unit_w.y, -unit_w.x};
        u = (combined_radius * inv_horizon - w_length) * unit_w;
      } else {
        const double leg = std::sqrt(dist_sq - combined_radius_sq);
        if (det(rel_pos, w) > 0.0) {
          line.direction = Vec2{rel_pos.x * leg - rel_pos.y * combined_radius,
                                rel_pos.x * combined_radius + rel_pos.y * leg} /
                           dist_sq;
        } else {
          line.direction = -Vec2{rel_pos.x * leg + rel_pos.y * combined_radius,
                                 -rel_pos.x * combined_radius + rel_pos.y * leg} /
                           dist_sq;
        }
        u = dot(rel_vel, line.direction) * line.direction - rel_vel;
      }
    } else {
      // Already overlapping: resolve within one time step.
      const double inv_dt = 1.0 / dt;
      const Vec2 w = rel_vel - inv_dt * rel_pos;
      const double w_length = norm(w);
      const Vec2 unit_w = w_length > 0.0 ? w / w_length : Vec2{1.0, 0.0};
      line.direction = {unit_w.y, -unit_w.x};
      u = (combined_radius * inv_dt - w_length) * unit_w;
    }
    line.point = agent.v + other.responsibility * u;
    lines.push_back(line);
  }
  return lines;
}

Vec2 orca_velocity(const OrcaAgent& agent, std::span<const OrcaNeighbor> neighbors, double time_horizon,
                   double dt) {
  const std::vector<OrcaLine> lines = orca_constraints(agent, neighbors, time_horizon, dt);
  Vec2 result;
  const std::size_t failed = solve_planar(lines, agent.max_speed, agent.pref_v, false, result);
  if (failed < lines.size()) solve_fallback(lines, failed, agent.max_speed, result);
  return result;
}

}  // namespace samalm
