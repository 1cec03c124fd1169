#include "samalm/world_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <unordered_map>

namespace samalm::wm {
namespace {

const sim::ObservedEntity* find_entity(const std::vector<sim::ObservedEntity>& list, int id) {
  for (const auto& e : list) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::vector<sim::ObservedEntity> sorted_by_id(std::vector<sim::ObservedEntity> list) {
  std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return list;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<Vec2> parse_pair(std::string_view s) {
  s = trim(s);
  if (s.size() < 5 || s.front() != '(' || s.back() != ')') return std::nullopt;
  s = s.substr(1, s.size() - 2);
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) return std::nullopt;
  const auto x = parse_double(s.substr(0, comma));
  const auto y = parse_double(s.substr(comma + 1));
  if (!x || !y) return std::nullopt;
  return Vec2{*x, *y};
}

// "key=value key=(x,y) ..." -> map; values never contain spaces.
std::unordered_map<std::string_view, std::string_view> parse_fields(std::string_view body) {
  std::unordered_map<std::string_view, std::string_view> fields;
  while (!body.empty()) {
    body = trim(body);
    const auto space = body.find(' ');
    const std::string_view token = body.substr(0, space);
    const auto eq = token.find('=');
    if (eq != std::string_view::npos) fields[token.substr(0, eq)] = token.substr(eq + 1);
    if (space == std::string_view::npos) break;
    body.remove_prefix(space + 1);
  }
  return fields;
}

std::optional<Trend> parse_trend(std::string_view s) {
  if (s == "approaching") return Trend::Approaching;
  if (s == "receding") return Trend::Receding;
  if (s == "static") return Trend::Static;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Trend trend) {
  switch (trend) {
    case Trend::Approaching: return "approaching";
    case Trend::Receding: return "receding";
    case Trend::Static: return "static";
  }
  return "static";
}

WorldModelGraph build_graph(const sim::LocalObservation& obs, const sim::LocalObservation* prev,
                            const WorldModelParams& params) {
  WorldModelGraph g;
  g.t = obs.t;
  g.nodes.push_back({NodeKind::Self, obs.self.id, obs.self.p, obs.self.v, obs.self.goal});
  for (const auto& r : sorted_by_id(obs.robots)) g.nodes.push_back({NodeKind::Robot, r.id, r.p, r.v, std::nullopt});
  for (const auto& h : sorted_by_id(obs.humans)) g.nodes.push_back({NodeKind::Human, h.id, h.p, h.v, std::nullopt});

  const Node& self = g.nodes.front();
  g.temporal_edges.push_back({0, distance(self.p, *self.goal), 0.0, self.p + self.v * params.dt});

  for (std::size_t i = 1; i < g.nodes.size(); ++i) {
    const Node& n = g.nodes[i];
    const Vec2 rel_p = n.p - self.p;
    const Vec2 rel_v = n.v - self.v;
    const double d = norm(rel_p);
    const double range_rate = d > 0.0 ? dot(rel_v, rel_p) / d : 0.0;

    SpatialEdge edge;
    edge.to = i;
    edge.distance = d;
    edge.closing_speed = -range_rate;
    if (range_rate < -params.trend_epsilon) {
      edge.trend = Trend::Approaching;
    } else if (range_rate > params.trend_epsilon) {
      edge.trend = Trend::Receding;
    }
    g.spatial_edges.push_back(edge);

    double accel = 0.0;
    if (prev != nullptr) {
      const auto& prev_list = n.kind == NodeKind::Robot ? prev->robots : prev->humans;
      if (const auto* before = find_entity(prev_list, n.id)) accel = (norm(n.v) - norm(before->v)) / params.dt;
    }
    g.temporal_edges.push_back({i, 0.0, accel, n.p + n.v * params.dt});
  }
  return g;
}

std::string format_number(double value) {
  std::string s = fmt::format("{:.2f}", value);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string format_vec(Vec2 v) { return fmt::format("({},{})", format_number(v.x), format_number(v.y)); }

TextualWorldModel textualize(const WorldModelGraph& graph, const sim::RobotPersona& persona) {
  TextualWorldModel out;
  const Node& self = graph.nodes.front();
  const TemporalEdge& self_temporal = graph.temporal_edges.front();
  out.text = fmt::format("self: pos={} vel={} goal={} goal_dist={} pref_speed={} social_dist={}\n",
                         format_vec(self.p), format_vec(self.v), format_vec(self.goal.value_or(self.p)),
                         format_number(self_temporal.goal_distance), format_number(persona.v_pref),
                         format_number(persona.rho_pref));
  out.line_index["self"] = 0;

  // Nodes are already ordered robots-then-humans by id; edges share node order.
  int line = 1;
  for (std::size_t i = 1; i < graph.nodes.size(); ++i) {
    const Node& n = graph.nodes[i];
    const SpatialEdge& s = graph.spatial_edges[i - 1];
    const TemporalEdge& t = graph.temporal_edges[i];
    const std::string label = fmt::format("{}-{}", n.kind == NodeKind::Robot ? "robot" : "human", n.id);
    out.text += fmt::format("{}: pos={} vel={} dist={} trend={} accel={} next={}\n", label, format_vec(n.p),
                            format_vec(n.v), format_number(s.distance), to_string(s.trend), format_number(t.accel),
                            format_vec(t.p_next));
    out.line_index[label] = line++;
  }
  return out;
}

std::optional<ParsedWorldModel> parse_world_model(std::string_view text) {
  ParsedWorldModel out;
  bool have_self = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string_view label = line.substr(0, colon);
    auto fields = parse_fields(line.substr(colon + 1));

    if (label == "self") {
      const auto p = parse_pair(fields["pos"]);
      const auto v = parse_pair(fields["vel"]);
      const auto g = parse_pair(fields["goal"]);
      const auto gd = parse_double(fields["goal_dist"]);
      const auto ps = parse_double(fields["pref_speed"]);
      const auto sd = parse_double(fields["social_dist"]);
      if (!p || !v || !g || !gd || !ps || !sd) continue;
      out.p = *p;
      out.v = *v;
      out.goal = *g;
      out.goal_distance = *gd;
      out.pref_speed = *ps;
      out.social_distance = *sd;
      have_self = true;
      continue;
    }

    ParsedEntity e;
    std::string_view id_part;
    if (label.starts_with("robot-")) {
      e.kind = NodeKind::Robot;
      id_part = label.substr(6);
    } else if (label.starts_with("human-")) {
      e.kind = NodeKind::Human;
      id_part = label.substr(6);
    } else {
      continue;
    }
    const auto [ptr, ec] = std::from_chars(id_part.data(), id_part.data() + id_part.size(), e.id);
    if (ec != std::errc{} || ptr != id_part.data() + id_part.size()) continue;

    const auto p = parse_pair(fields["pos"]);
    const auto v = parse_pair(fields["vel"]);
    const auto d = parse_double(fields["dist"]);
    const auto tr = parse_trend(fields["trend"]);
    const auto a = parse_double(fields["accel"]);
    const auto nx = parse_pair(fields["next"]);
    if (!p || !v || !d || !tr || !a || !nx) continue;
    e.p = *p;
    e.v = *v;
    e.distance = *d;
    e.trend = *tr;
    e.accel = *a;
    e.p_next = *nx;
    out.entities.push_back(e);
  }
  if (!have_self) return std::nullopt;
  return out;
}

}  // namespace samalm::wm
