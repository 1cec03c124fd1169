#include <gtest/gtest.h>

#include <functional>

#include "samalm/actors.hpp"
#include "samalm/prompt_format.hpp"

namespace samalm::actors {
namespace {

class FakeBackend : public llm::Backend {
 public:
  using Fn = std::function<std::string(const llm::Prompt&)>;
  FakeBackend(Fn fn, std::vector<llm::Prompt>* seen) : fn_(std::move(fn)), seen_(seen) {}
  llm::Completion complete(const llm::Prompt& prompt) override {
    seen_->push_back(prompt);
    llm::Completion c;
    c.text = fn_(prompt);
    return c;
  }
  llm::BackendMode mode() const override { return llm::BackendMode::Scripted; }

 private:
  Fn fn_;
  std::vector<llm::Prompt>* seen_;
};

llm::Gateway fake_gateway(FakeBackend::Fn fn, std::vector<llm::Prompt>* seen) {
  llm::BackendConfig cfg;
  cfg.mode = llm::BackendMode::Scripted;
  return llm::Gateway(cfg, std::make_unique<FakeBackend>(std::move(fn), seen));
}

const sim::RobotPersona kDog = sim::RobotPersona::defaults(sim::RobotKind::RobotDog);
const TaskConfigText kTask = TaskConfigText::standard(0.25, 0.3, 0.3);

TEST(Persona, FragmentCarriesSpeedAndDistance) {
  const auto f = persona_fragment(kDog);
  EXPECT_NE(f.text.find("1.00 m/s"), std::string::npos);
  EXPECT_NE(f.text.find("0.30 m"), std::string::npos);
  EXPECT_NE(f.text.find("kind=robot_dog"), std::string::npos);
  const auto drone = persona_fragment(sim::RobotPersona::defaults(sim::RobotKind::Drone));
  EXPECT_NE(drone.text.find("pref_speed=1.50 social_dist=0.85"), std::string::npos);
}

TEST(Feedback, FifoWithCapacity) {
  FeedbackBuffer b(3);
  EXPECT_TRUE(b.empty());
  EXPECT_EQ(b.render(), "");
  for (int i = 0; i < 5; ++i) b.push({i, "l" + std::to_string(i), ""});
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b.entries().front().attempt, 2);
  EXPECT_EQ(b.entries().back().attempt, 4);
  const std::string text = b.render();
  EXPECT_EQ(text.rfind(prompt_format::kFeedbackHeader, 0), 0u);
  EXPECT_EQ(text.find("attempt 1"), std::string::npos);
  EXPECT_NE(text.find("- attempt 4: local critic: l4\n"), std::string::npos);
  b.clear();
  EXPECT_TRUE(b.empty());
}

TEST(Feedback, GlobalReasonAppended) {
  FeedbackBuffer b;
  b.push({1, "too close to human-7", "robot-0 and robot-2 converge"});
  EXPECT_NE(b.render().find("local critic: too close to human-7 | global critic: robot-0 and robot-2 converge"),
            std::string::npos);
}

TEST(Feedback, ZeroCapacityDropsEverything) {
  FeedbackBuffer b(0);
  b.push({0, "x", "y"});
  EXPECT_TRUE(b.empty());
}

TEST(ActorPrompt, Layout) {
  FeedbackBuffer empty;
  const auto p = build_actor_prompt(2, "self: pos=(0.00,0.00)", kTask, persona_fragment(kDog), empty, 0, 1.5);
  EXPECT_EQ(p.tag.str(), "actor:2");
  EXPECT_EQ(p.nonce, 0);
  EXPECT_EQ(p.system.rfind(kTask.text, 0), 0u);
  EXPECT_NE(p.system.find("step by step"), std::string::npos);
  EXPECT_NE(p.system.find("\"action\""), std::string::npos);
  EXPECT_NE(p.user.find("time: t=1.50"), std::string::npos);
  EXPECT_NE(p.user.find("self: pos=(0.00,0.00)"), std::string::npos);
  EXPECT_EQ(p.user.find(prompt_format::kFeedbackHeader), std::string::npos);

  FeedbackBuffer fb;
  fb.push({0, "too close", ""});
  const auto q = build_actor_prompt(2, "self: pos=(0.00,0.00)", kTask, persona_fragment(kDog), fb, 1, 1.5);
  EXPECT_EQ(q.nonce, 1);
  EXPECT_EQ(q.system, p.system);
  EXPECT_NE(q.user.find(prompt_format::kFeedbackHeader), std::string::npos);
}

TEST(ParseAction, ReadsFirstWellFormedObject) {
  const auto p = parse_action(R"(Sure. {"note": 1} then {"reasoning": ["a", "b"], "action": [0.5, -0.25]} {"action": [0, 0]})",
                              kDog);
  EXPECT_DOUBLE_EQ(p.action.x, 0.5);
  EXPECT_DOUBLE_EQ(p.action.y, -0.25);
  ASSERT_EQ(p.reasoning.size(), 2u);
  EXPECT_EQ(p.reasoning[1], "b");
}

TEST(ParseAction, BracesInsideStrings) {
  const auto p = parse_action(R"({"reasoning": ["keep } away {"], "action": [0.1, 0.2]})", kDog);
  EXPECT_DOUBLE_EQ(p.action.y, 0.2);
}

TEST(ParseAction, ClampsOntoPreferredSpeed) {
  const auto p = parse_action(R"({"action": [3.0, 4.0]})", kDog);
  EXPECT_NEAR(norm(p.action), 1.0, 1e-12);
  EXPECT_NEAR(p.action.x, 0.6, 1e-12);
  EXPECT_NEAR(p.action.y, 0.8, 1e-12);
}

TEST(ParseAction, Rejections) {
  EXPECT_THROW(parse_action("no json here", kDog), ParseError);
  EXPECT_THROW(parse_action(R"({"action": [1]})", kDog), ParseError);
  EXPECT_THROW(parse_action(R"({"action": ["a", 1]})", kDog), ParseError);
  EXPECT_THROW(parse_action(R"({"reasoning": []})", kDog), ParseError);
  EXPECT_THROW(parse_action(R"({"action": [1, 2)", kDog), ParseError);
}

TEST(Propose, FreshProposalHidesFeedback) {
  std::vector<llm::Prompt> seen;
  auto gw = fake_gateway([](const llm::Prompt&) { return std::string(R"({"action": [0.3, 0.0]})"); }, &seen);
  FeedbackBuffer fb;
  fb.push({0, "earlier", ""});
  const auto p = propose(1, "self: pos=(0.00,0.00)", kTask, kDog, fb, gw, 0, 0.0);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0].user.find(prompt_format::kFeedbackHeader), std::string::npos);
  EXPECT_FALSE(p.degraded);
  EXPECT_EQ(p.robot_id, 1);

  propose(1, "self: pos=(0.00,0.00)", kTask, kDog, fb, gw, 1, 0.0);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_NE(seen[1].user.find("earlier"), std::string::npos);
  EXPECT_EQ(seen[1].nonce, 1);
}

TEST(Propose, RetriesOnceWithParseErrorThenDegrades) {
  std::vector<llm::Prompt> seen;
  auto gw = fake_gateway([](const llm::Prompt&) { return std::string("I would rather not."); }, &seen);
  FeedbackBuffer fb;
  const auto p = propose(0, "self: pos=(0.00,0.00)", kTask, kDog, fb, gw, 0, 0.0);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_NE(seen[1].user.find("could not be parsed"), std::string::npos);
  EXPECT_TRUE(p.degraded);
  EXPECT_EQ(p.action, Vec2{});
}

TEST(Propose, SecondTrySucceeds) {
  std::vector<llm::Prompt> seen;
  int calls = 0;
  auto gw = fake_gateway(
      [&](const llm::Prompt&) { return ++calls == 1 ? std::string("garbage") : std::string(R"({"action": [0, 1]})"); },
      &seen);
  FeedbackBuffer fb;
  const auto p = propose(0, "w", kTask, kDog, fb, gw, 0, 0.0);
  EXPECT_FALSE(p.degraded);
  EXPECT_DOUBLE_EQ(p.action.y, 1.0);
}

TEST(Propose, GatewayErrorsPropagate) {
  std::vector<llm::Prompt> seen;
  auto gw = fake_gateway(
      [](const llm::Prompt&) -> std::string { throw llm::GatewayError(llm::ErrorKind::HttpStatus, "bad", 400); },
      &seen);
  FeedbackBuffer fb;
  EXPECT_THROW(propose(0, "w", kTask, kDog, fb, gw, 0, 0.0), llm::GatewayError);
}

TEST(JointActor, PromptAndParse) {
  const std::vector<JointRobotInput> robots{{0, kDog, "self: a"}, {3, sim::RobotPersona::defaults(sim::RobotKind::Drone), "self: b"}};
  const auto p = build_joint_prompt(robots, kTask, 2.0);
  EXPECT_EQ(p.tag.kind, llm::PromptKind::JointActor);
  EXPECT_LT(p.user.find("### robot-0"), p.user.find("### robot-3"));
  EXPECT_NE(p.user.find("self: b"), std::string::npos);

  const auto ok = parse_joint_actions(R"({"actions": [[2.0, 0.0], [0.0, -1.0]]})", robots);
  ASSERT_EQ(ok.size(), 2u);
  EXPECT_DOUBLE_EQ(ok[0].action.x, 1.0);
  EXPECT_EQ(ok[1].robot_id, 3);
  EXPECT_DOUBLE_EQ(ok[1].action.y, -1.0);
  EXPECT_FALSE(ok[0].degraded || ok[1].degraded);

  const auto short_reply = parse_joint_actions(R"({"actions": [[1.0, 0.0]]})", robots);
  EXPECT_TRUE(short_reply[0].degraded && short_reply[1].degraded);
  const auto partial = parse_joint_actions(R"({"actions": [[0.5, 0.0], "x"]})", robots);
  EXPECT_FALSE(partial[0].degraded);
  EXPECT_TRUE(partial[1].degraded);
  EXPECT_EQ(partial[1].action, Vec2{});
}

}  // namespace
}  // namespace samalm::actors
