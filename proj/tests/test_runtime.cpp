#include "doctest.h"
#include "mm/learner.hpp"
#include "mm/persistence.hpp"
#include "mm/runtime.hpp"
#include "support/build.hpp"

using namespace mm;
using build::frame;
using build::obj;

namespace {

Engine jump_engine() {
  return Engine{}
      .with_rule(VelocityYFact{0, -1}, VelocityYFact{0, 1}, {VariableFact{"space", true}})
      .with_rule(VelocityYFact{0, 1}, VelocityYFact{0, -1}, {VariableFact{"space", false}});
}

}  // namespace

TEST_CASE("holding space makes the bird rise and releasing it makes it fall") {
  const Frame start = frame({build::moving(0, "bird", 2, 5, 0, -1)});
  PlaySession play(jump_engine(), start, {0});
  CHECK(play.current_frame().objects.at(0).y == 5);

  Frame f = play.step(build::buttons({Button::kSpace}));
  CHECK(play.last_fired() == std::vector<int>{0});
  CHECK(f.objects.at(0).vy == 1);
  CHECK(f.objects.at(0).y == 6);
  CHECK(f.input.buttons == build::buttons({Button::kSpace}));

  f = play.step({});
  CHECK(play.last_fired() == std::vector<int>{1});
  CHECK(f.objects.at(0).vy == -1);
  CHECK(f.objects.at(0).y == 5);
  CHECK(f.input.prevButtons == build::buttons({Button::kSpace}));
  CHECK(play.tick_index() == 2);
}

TEST_CASE("play clamps falling objects at the grid edge") {
  PlaySession play(Engine{}, frame({build::moving(0, "bird", 2, 1, 0, -1)}), {0});
  for (int t = 0; t < 5; ++t) play.step({});
  CHECK(play.current_frame().objects.at(0).y == 0);
}

TEST_CASE("replaying a trace is deterministic") {
  const Project p = load_project(build::fixture("flappy.mmproj"));
  const auto frames = prepared_frames(p);
  const Engine engine = learn(frames, LearnerConfig{}).engine;
  std::vector<ButtonArray> trace;
  for (int t = 0; t < 60; ++t) trace.push_back(t % 3 == 0 ? build::buttons({Button::kSpace}) : ButtonArray{});
  const auto first = run_trace(engine, frames[0], trace);
  REQUIRE(first.size() == trace.size());
  for (int run = 0; run < 5; ++run) CHECK(run_trace(engine, frames[0], trace) == first);
}

TEST_CASE("a learned engine replays its own demonstration") {
  const Project p = load_project(build::fixture("flappy.mmproj"));
  const auto frames = prepared_frames(p);
  const Engine engine = learn(frames, LearnerConfig{}).engine;
  std::vector<ButtonArray> trace;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) trace.push_back(frames[t].input.buttons);
  const auto out = run_trace(engine, frames[0], trace);
  for (std::size_t t = 0; t < out.size(); ++t) {
    CAPTURE(t);
    CHECK(out[t].objects == frames[t + 1].objects);
  }
}

TEST_CASE("facts_to_frame inverts extract_facts") {
  Frame f = frame({build::moving(0, "player", 3, 4, 1, 0), obj(2, "crate", 4, 4, 2, 1)},
                  build::buttons({Button::kRight}));
  f.input.prevButtons = build::buttons({Button::kUp});
  f.index = 3;
  const Frame back = facts_to_frame(extract_facts(f, {0, 1, 2}), f.gridWidth, f.gridHeight, 3);
  CHECK(back.input == f.input);
  REQUIRE(back.objects.size() == 2);
  CHECK(back.objects[0].x == 3);
  CHECK(back.objects[0].vx == 1);
  CHECK(back.objects[1].sprite == SpriteRef{"crate", 2, 1});
  CHECK(back.index == 3);
}
