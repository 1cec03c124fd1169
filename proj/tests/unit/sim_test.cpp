#include <gtest/gtest.h>

#include <numbers>

#include "samalm/sim.hpp"

namespace samalm::sim {
namespace {

SimState one_robot(Vec2 p = {}, Vec2 goal = {5.0, 0.0}) {
  SimState s;
  RobotState r;
  r.id = 0;
  r.p = p;
  r.goal = goal;
  s.robots.push_back(r);
  return s;
}

TEST(Step, UniformKinematics) {
  const SimState s = one_robot();
  const std::vector<Vec2> a{{1.0, 0.0}};
  const auto res = step(s, a, {}, SimParams{});
  EXPECT_EQ(res.state.robots[0].p, (Vec2{0.25, 0.0}));
  EXPECT_EQ(res.state.robots[0].v, (Vec2{1.0, 0.0}));
  EXPECT_DOUBLE_EQ(res.state.t, 0.25);
  EXPECT_EQ(res.state.step_index, 1);
}

TEST(Step, ZeroActionKeepsPositionAndHeading) {
  SimState s = one_robot({1.0, 2.0});
  s.robots[0].heading = 0.7;
  const std::vector<Vec2> a{{0.0, 0.0}};
  const auto res = step(s, a, {}, SimParams{});
  EXPECT_EQ(res.state.robots[0].p, (Vec2{1.0, 2.0}));
  EXPECT_DOUBLE_EQ(res.state.robots[0].heading, 0.7);
}

TEST(Step, HeadingFollowsCommand) {
  const SimState s = one_robot();
  const std::vector<Vec2> a{{0.0, -1.0}};
  EXPECT_DOUBLE_EQ(step(s, a, {}, SimParams{}).state.robots[0].heading, -std::numbers::pi / 2);
}

TEST(Step, DimensionMismatchIsContractViolation) {
  const SimState s = one_robot();
  const std::vector<Vec2> none;
  const std::vector<Vec2> two{{0.0, 0.0}, {0.0, 0.0}};
  EXPECT_THROW(step(s, none, {}, SimParams{}), ContractViolation);
  EXPECT_THROW(step(s, two, {}, SimParams{}), ContractViolation);
  SimState with_human = s;
  with_human.humans.push_back({});
  const std::vector<Vec2> one{{0.0, 0.0}};
  EXPECT_THROW(step(with_human, one, {}, SimParams{}), ContractViolation);
}

TEST(Step, OverspeedAndNonFiniteRejected) {
  const SimState s = one_robot();
  const std::vector<Vec2> fast{{2.0, 0.0}};
  EXPECT_THROW(step(s, fast, {}, SimParams{}), ContractViolation);
  const std::vector<Vec2> nan{{std::nan(""), 0.0}};
  EXPECT_THROW(step(s, nan, {}, SimParams{}), ContractViolation);
}

TEST(Step, TimeIsStepIndexTimesDt) {
  SimState s = one_robot({}, {100.0, 0.0});
  SimParams p;
  p.dt = 0.1;
  p.t_max = 1000.0;
  for (int i = 0; i < 37; ++i) {
    const std::vector<Vec2> a{{0.5, 0.0}};
    s = step(s, a, {}, p).state;
    EXPECT_EQ(s.t, s.step_index * p.dt);
  }
}

TEST(Step, RobotHumanCollisionExample) {
  SimState s = one_robot();
  HumanState h;
  h.id = 4;
  h.p = {0.5, 0.0};
  h.goal = {0.5, 0.0};
  s.humans.push_back(h);
  const std::vector<Vec2> a{{0.0, 0.0}};
  const std::vector<Vec2> hv{{0.0, 0.0}};
  const auto res = step(s, a, hv, SimParams{});
  ASSERT_EQ(res.events.size(), 1u);
  EXPECT_EQ(res.events[0].kind, EventKind::RobotHumanCollision);
  EXPECT_EQ(res.events[0].first, 0);
  EXPECT_EQ(res.events[0].second, 4);
  EXPECT_EQ(res.state.robots[0].status, RobotStatus::Collided);
}

TEST(Step, FrozenRobotsStayPut) {
  SimState s = one_robot({0.0, 0.0}, {0.1, 0.0});
  RobotState other;
  other.id = 1;
  other.p = {3.0, 3.0};
  other.goal = {9.0, 9.0};
  s.robots.push_back(other);
  const std::vector<Vec2> a{{0.0, 0.0}, {1.0, 0.0}};
  auto res = step(s, a, {}, SimParams{});
  ASSERT_EQ(res.state.robots[0].status, RobotStatus::Arrived);
  const Vec2 frozen = res.state.robots[0].p;
  for (int i = 0; i < 5; ++i) {
    const std::vector<Vec2> only{{1.0, 0.0}};
    res = step(res.state, only, {}, SimParams{});
    EXPECT_EQ(res.state.robots[0].p, frozen);
    EXPECT_EQ(res.state.robots[0].v, Vec2{});
  }
}

TEST(DetectEvents, Threshold) {
  SimState s = one_robot();
  HumanState h;
  h.p = {0.59, 0.0};
  s.humans.push_back(h);
  auto ev = detect_events(s, SimParams{});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::RobotHumanCollision);
  s.humans[0].p = {0.6, 0.0};
  EXPECT_TRUE(detect_events(s, SimParams{}).empty());
}

TEST(DetectEvents, ArrivalForEveryRobot) {
  SimState s;
  for (int i = 0; i < 3; ++i) {
    RobotState r;
    r.id = i;
    r.p = {3.0 * i, 0.0};
    r.goal = r.p + Vec2{0.1, 0.0};
    s.robots.push_back(r);
  }
  const auto ev = detect_events(s, SimParams{});
  ASSERT_EQ(ev.size(), 3u);
  for (const auto& e : ev) EXPECT_EQ(e.kind, EventKind::Arrival);
}

TEST(DetectEvents, CollisionBeatsArrival) {
  SimState s = one_robot({0.0, 0.0}, {0.05, 0.0});
  HumanState h;
  h.p = {0.4, 0.0};
  s.humans.push_back(h);
  const auto ev = detect_events(s, SimParams{});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::RobotHumanCollision);
}

TEST(DetectEvents, RobotRobotCollision) {
  SimState s = one_robot();
  RobotState b;
  b.id = 1;
  b.p = {0.55, 0.0};
  b.goal = {9.0, 0.0};
  s.robots.push_back(b);
  const auto ev = detect_events(s, SimParams{});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::RobotRobotCollision);
}

TEST(DetectEvents, TimeoutAtTmax) {
  SimState s = one_robot();
  s.t = 40.0;
  const auto ev = detect_events(s, SimParams{});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::Timeout);
  s.t = 39.75;
  EXPECT_TRUE(detect_events(s, SimParams{}).empty());
}

TEST(Observe, FullFovSeesEverything) {
  SimState s = one_robot();
  for (int i = 0; i < 4; ++i) {
    HumanState h;
    h.id = i;
    h.p = from_polar(3.0, i * 1.7);
    s.humans.push_back(h);
  }
  RobotState b;
  b.id = 1;
  b.p = {-4.0, 0.0};
  s.robots.push_back(b);
  const auto obs = observe(s, 0, SimParams{});
  EXPECT_EQ(obs.humans.size(), 4u);
  EXPECT_EQ(obs.robots.size(), 1u);
  EXPECT_EQ(obs.self.id, 0);
}

TEST(Observe, NarrowFov) {
  SimParams p;
  p.fov = std::numbers::pi / 2;
  EXPECT_FALSE(in_field_of_view({}, 0.0, {0.0, 5.0}, p.fov));
  EXPECT_TRUE(in_field_of_view({}, 0.0, {5.0, 0.0}, p.fov));
  EXPECT_TRUE(in_field_of_view({}, 0.0, {5.0, 4.9}, p.fov));
  EXPECT_FALSE(in_field_of_view({}, 0.0, {5.0, 5.1}, p.fov));
}

TEST(Observe, NeverLeaksHumanGoals) {
  SimState s = one_robot();
  HumanState h;
  h.p = {2.0, 0.0};
  h.goal = {-7.0, 3.0};
  s.humans.push_back(h);
  const auto obs = observe(s, 0, SimParams{});
  ASSERT_EQ(obs.humans.size(), 1u);
  EXPECT_EQ(obs.humans[0].p, h.p);
}

TEST(HumanPolicy, UnobstructedHumanWalksToGoalAtPreferredSpeed) {
  SimState s;
  HumanState h;
  h.p = {0.0, 0.0};
  h.goal = {5.0, 0.0};
  s.humans.push_back(h);
  SimParams p;
  p.orca.p_regoal = 0.0;
  Rng rng(3);
  const auto v = human_policy_step(s, rng, p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NEAR(v[0].x, 1.0, 1e-9);
  EXPECT_NEAR(v[0].y, 0.0, 1e-9);
}

TEST(HumanPolicy, ArrivedHumanGetsNewGoal) {
  SimState s;
  HumanState h;
  h.p = {1.0, 1.0};
  h.goal = {1.1, 1.0};
  s.humans.push_back(h);
  SimParams p;
  p.orca.p_regoal = 0.0;
  Rng rng(11);
  const auto v = human_policy_step(s, rng, p);
  EXPECT_NE(s.humans[0].goal, (Vec2{1.1, 1.0}));
  const Vec2 dir = normalized(s.humans[0].goal - s.humans[0].p);
  EXPECT_NEAR(dot(normalized(v[0]), dir), 1.0, 1e-9);
  EXPECT_LE(std::abs(s.humans[0].goal.x), p.arena_side / 2);
  EXPECT_LE(std::abs(s.humans[0].goal.y), p.arena_side / 2);
}

}  // namespace
}  // namespace samalm::sim
