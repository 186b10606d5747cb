#include <algorithm>

#include "doctest.h"
#include "mm/error.hpp"
#include "mm/learner.hpp"
#include "mm/persistence.hpp"
#include "support/build.hpp"

using namespace mm;
using build::frame;
using build::obj;

namespace {

std::vector<Frame> fixture_frames(const std::string& name) {
  return prepared_frames(load_project(build::fixture(name)));
}

GameObject still(int id, int x) {
  GameObject o = obj(id, "block", x, 0);
  o.explicitVelocity = true;
  return o;
}

// x = 0, 1, 0, 2: frames 0 and 2 look identical but continue differently.
std::vector<Frame> adversarial() {
  return prepare_demonstration(std::vector<Frame>{frame({still(0, 0)}), frame({still(0, 1)}),
                                                  frame({still(0, 0)}), frame({still(0, 2)})});
}

const Rule* find_rewrite(const Engine& e, const Fact& pre, const Fact& post) {
  for (const auto& r : e.rules())
    if (r.pre == pre && r.post == post) return &r;
  return nullptr;
}

}  // namespace

TEST_CASE("unmatched_pairs pairs by slot and uses Empty for missing objects") {
  const FactSet predicted{PositionXFact{0, 1}, VelocityXFact{0, 0}, AnimationFact{0, "a", 1, 1},
                          EmptyFact{1}, RelationshipXFact{0, 2, 1}};
  const FactSet actual{PositionXFact{0, 2}, VelocityXFact{0, 0}, AnimationFact{0, "a", 1, 1},
                       AnimationFact{1, "b", 1, 1}};
  const auto pairs = unmatched_pairs(predicted, actual);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == UnmatchedPair{EmptyFact{1}, AnimationFact{1, "b", 1, 1}});
  CHECK(pairs[1] == UnmatchedPair{PositionXFact{0, 1}, PositionXFact{0, 2}});
  CHECK(unmatched_pairs(actual, actual).empty());
}

TEST_CASE("add, modify and remove build the expected engines") {
  const FactSet current = extract_facts(frame({obj(0, "a", 3, 4)}), {0});
  const Engine added = add_rule(Engine{}, current, {PositionXFact{0, 3}, PositionXFact{0, 4}});
  REQUIRE(added.size() == 1);
  CHECK(added.rules()[0].conditions.size() == current.size());
  CHECK(FactSet(added.rules()[0].conditions.begin(), added.rules()[0].conditions.end()) == current);

  const FactSet elsewhere = extract_facts(frame({obj(0, "a", 3, 7)}), {0});
  const auto narrowed = modify_rule(added, 0, elsewhere);
  REQUIRE(narrowed);
  CHECK(narrowed->rules()[0].conditions.size() == current.size() - 1);
  CHECK(std::find(narrowed->rules()[0].conditions.begin(), narrowed->rules()[0].conditions.end(),
                  Fact{PositionYFact{0, 4}}) == narrowed->rules()[0].conditions.end());

  CHECK_FALSE(modify_rule(added, 0, FactSet{EmptyFact{9}}));
  CHECK_THROWS_AS(modify_rule(added, 7, current), NotFoundError);
  CHECK(remove_rule(added, 0).empty());
}

TEST_CASE("score_engine sums normalized distances") {
  const auto frames = prepare_demonstration(std::vector<Frame>{frame({still(0, 1)}), frame({still(0, 2)})});
  LearnerConfig config;
  config.kinematics = false;
  const Demonstration demo = make_demonstration(frames, config);
  // 5 object facts + 10 inputs per frame; only PositionX differs.
  const double expected = 2.0 / (15 + 15);
  CHECK(score_engine(Engine{}, demo, 1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(score_engine(Engine{}, demo, 0) == 0.0);
  CHECK(score_engine(Engine{}, demo, 99) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("a static demonstration converges to the empty engine") {
  const std::vector<Frame> frames(4, frame({obj(0, "a", 5, 5)}));
  const auto result = learn(prepare_demonstration(frames), LearnerConfig{});
  CHECK(result.converged);
  CHECK(result.engine.empty());
  CHECK(result.totalError == 0.0);
}

TEST_CASE("learning needs two frames and a valid config") {
  const std::vector<Frame> one{frame({obj(0, "a", 1, 1)})};
  CHECK_THROWS_AS(learn(one, LearnerConfig{}), InsufficientDataError);
  LearnerConfig bad;
  bad.maxIterations = 0;
  const std::vector<Frame> two(2, frame({obj(0, "a", 1, 1)}));
  CHECK_THROWS_AS(learn(two, bad), InvalidArgumentError);
}

TEST_CASE("the learned engine reproduces every transition it was shown") {
  for (const char* name : {"flappy.mmproj", "sokoban.mmproj"}) {
    CAPTURE(name);
    const auto frames = fixture_frames(name);
    const LearnerConfig config;
    const auto result = learn(frames, config);
    CHECK(result.converged);
    CHECK(result.totalError == 0.0);
    const Demonstration demo = make_demonstration(frames, config);
    for (std::size_t t = 0; t < demo.transitions(); ++t) {
      const auto p = predict_transition(result.engine, demo, demo.facts[t], t);
      CHECK(frame_distance(p, demo.facts[t + 1]).raw == 0);
    }
  }
}

TEST_CASE("flappy yields one generalized jump rule guarded by space") {
  const auto result = learn(fixture_frames("flappy.mmproj"), LearnerConfig{});
  REQUIRE(result.converged);
  int jumps = 0;
  for (const auto& r : result.engine.rules())
    if (r.pre == Fact{VelocityYFact{0, -1}} && r.post == Fact{VelocityYFact{0, 1}}) ++jumps;
  CHECK(jumps == 1);
  const Rule* jump = find_rewrite(result.engine, VelocityYFact{0, -1}, VelocityYFact{0, 1});
  REQUIRE(jump != nullptr);
  const auto& c = jump->conditions;
  CHECK(std::find(c.begin(), c.end(), Fact{VariableFact{"space", true}}) != c.end());
  // The bird jumps at several heights, so the height must have been dropped.
  CHECK(std::none_of(c.begin(), c.end(), [](const Fact& f) {
    return tag_of(f) == FactTag::kPositionY && object_of(f) == 0;
  }));
}

TEST_CASE("two jumps at different heights narrow the first rule instead of adding one") {
  auto bird = [](int y, int vy, bool space) {
    return frame({build::moving(0, "bird", 2, y, 0, vy)},
                 space ? build::buttons({Button::kSpace}) : ButtonArray{});
  };
  // Jumps at y=6 and again at y=5.
  const std::vector<Frame> frames{bird(6, -1, true), bird(7, 1, false), bird(6, -1, false),
                                  bird(5, -1, true), bird(6, 1, false)};
  LearnerConfig config;
  const auto result = learn(prepare_demonstration(frames), config);
  REQUIRE(result.converged);
  int jumps = 0;
  for (const auto& r : result.engine.rules())
    if (r.pre == Fact{VelocityYFact{0, -1}} && r.post == Fact{VelocityYFact{0, 1}}) ++jumps;
  CHECK(jumps == 1);
}

TEST_CASE("an unsatisfiable demonstration spends at most the budget and keeps the best engine") {
  const auto frames = adversarial();
  for (int budget : {1, 3, 10}) {
    CAPTURE(budget);
    LearnerConfig config;
    config.kinematics = false;
    config.maxIterations = budget;
    LearnStats stats;
    const auto result = learn(frames, config, Engine{}, &stats);
    CHECK_FALSE(result.converged);
    REQUIRE_FALSE(stats.visits.empty());
    for (const auto& v : stats.visits) CHECK(v.searchIterations <= budget);

    const Demonstration demo = make_demonstration(frames, config);
    double best = score_engine(Engine{}, demo, demo.transitions());
    for (double s : stats.acceptedScores) best = std::min(best, s);
    CHECK(result.totalError == best);
    CHECK(result.totalError == score_engine(result.engine, demo, demo.transitions()));
    // Accepted updates only ever improve.
    for (std::size_t k = 1; k < stats.acceptedScores.size(); ++k)
      CHECK(stats.acceptedScores[k] < stats.acceptedScores[k - 1]);
  }
}

TEST_CASE("engine_search only reports strict improvements") {
  const auto frames = adversarial();
  LearnerConfig config;
  config.kinematics = false;
  const Demonstration demo = make_demonstration(frames, config);
  const auto first = engine_search(Engine{}, demo, 0, config);
  CHECK(first.updated);
  CHECK(first.score < score_engine(Engine{}, demo, demo.transitions()));
  const auto again = engine_search(first.engine, demo, 0, config);
  if (!again.updated) CHECK(again.engine == first.engine);
  CHECK_THROWS_AS(generate_neighbors(Engine{}, demo, 3, config), RangeError);
}

TEST_CASE("learning is deterministic") {
  const auto frames = fixture_frames("sokoban.mmproj");
  const std::string first = export_engine_json(learn(frames, LearnerConfig{}).engine);
  for (int run = 0; run < 5; ++run) CHECK(export_engine_json(learn(frames, LearnerConfig{}).engine) == first);
}

TEST_CASE("a warm start from a converged engine changes nothing") {
  const auto frames = fixture_frames("flappy.mmproj");
  const auto cold = learn(frames, LearnerConfig{});
  LearnStats stats;
  const auto warm = learn(frames, LearnerConfig{}, cold.engine, &stats);
  CHECK(warm.converged);
  CHECK(warm.engine == cold.engine);
  CHECK(stats.updates == 0);
}
