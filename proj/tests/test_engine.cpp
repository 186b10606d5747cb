#include <algorithm>
#include <iterator>
#include <random>

#include "doctest.h"
#include "mm/engine.hpp"
#include "mm/error.hpp"
#include "support/build.hpp"

using namespace mm;
using build::frame;
using build::obj;

namespace {

FactSet facts_of(const Frame& f) { return extract_facts(f, {0, 1}); }

int symmetric_difference_size(const FactSet& a, const FactSet& b) {
  std::vector<Fact> diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  return static_cast<int>(diff.size());
}

// Draws from a small vocabulary so random sets overlap often.
FactSet random_facts(std::mt19937_64& rng) {
  FactSet out;
  const int n = static_cast<int>(rng() % 12);
  for (int i = 0; i < n; ++i) {
    const int id = static_cast<int>(rng() % 3);
    const int v = static_cast<int>(rng() % 5) - 2;
    switch (rng() % 6) {
      case 0: out.insert(VelocityXFact{id, v}); break;
      case 1: out.insert(VelocityYFact{id, v}); break;
      case 2: out.insert(PositionXFact{id, v + 2}); break;
      case 3: out.insert(VariableFact{std::string(kButtonNames[rng() % kButtonCount]), v > 0}); break;
      case 4: out.insert(RelationshipXFact{id, (id + 1) % 3, v}); break;
      default: out.insert(EmptyFact{id}); break;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("the empty engine only applies kinematics") {
  const Frame f = frame({build::moving(0, "bird", 2, 5, 1, -1)});
  const FactSet before = facts_of(f);

  const auto still = predict_facts(Engine{}, before, {.kinematics = false});
  CHECK(still.predictedFacts == before);
  CHECK(still.firedRuleIds.empty());

  const auto moved = predict_facts(Engine{}, before);
  CHECK(moved.predictedFacts.contains(Fact{PositionXFact{0, 3}}));
  CHECK(moved.predictedFacts.contains(Fact{PositionYFact{0, 4}}));
  CHECK(frame_distance(moved.predictedFacts, before).raw == 4);
}

TEST_CASE("kinematics clamps to the grid") {
  const Frame f = frame({build::moving(0, "bird", 11, 0, 2, -3)});
  const auto out = predict_facts(Engine{}, facts_of(f));
  CHECK(out.predictedFacts.contains(Fact{PositionXFact{0, 11}}));
  CHECK(out.predictedFacts.contains(Fact{PositionYFact{0, 0}}));
}

TEST_CASE("rules rewrite pre to post and the first rule wins a slot") {
  const Frame f = frame({build::moving(0, "bird", 2, 5, 0, -1)}, build::buttons({Button::kSpace}));
  const FactSet before = facts_of(f);
  const Engine engine = Engine{}
                            .with_rule(VelocityYFact{0, -1}, VelocityYFact{0, 1},
                                       {VariableFact{"space", true}})
                            .with_rule(VelocityYFact{0, -1}, VelocityYFact{0, 0},
                                       {AnimationFact{0, "bird", 1, 1}});
  const auto out = predict_facts(engine, before);
  CHECK(out.firedRuleIds == std::vector<int>{0});
  CHECK(out.predictedFacts.contains(Fact{VelocityYFact{0, 1}}));
  CHECK_FALSE(out.predictedFacts.contains(Fact{VelocityYFact{0, -1}}));
  CHECK(out.predictedFacts.contains(Fact{PositionYFact{0, 6}}));

  // Without space only the second rule fires.
  const FactSet released = facts_of(frame({build::moving(0, "bird", 2, 5, 0, -1)}));
  const auto other = predict_facts(engine, released);
  CHECK(other.firedRuleIds == std::vector<int>{1});
  CHECK(other.predictedFacts.contains(Fact{PositionYFact{0, 5}}));
}

TEST_CASE("a rule that sets a position suppresses kinematics on that axis") {
  const Frame f = frame({build::moving(0, "pipe", 0, 0, -1, 0)});
  const Engine wrap =
      Engine{}.with_rule(PositionXFact{0, 0}, PositionXFact{0, 11}, {VelocityXFact{0, -1}});
  const auto out = predict_facts(wrap, facts_of(f));
  CHECK(out.predictedFacts.contains(Fact{PositionXFact{0, 11}}));
  CHECK_FALSE(out.predictedFacts.contains(Fact{PositionXFact{0, 10}}));
}

TEST_CASE("disappear and appear rules keep objects consistent") {
  const Frame f = frame({obj(0, "coin", 3, 3)});
  const FactSet before = extract_facts(f, {0});
  const Engine vanish =
      Engine{}.with_rule(AnimationFact{0, "coin", 1, 1}, EmptyFact{0}, {PositionXFact{0, 3}});
  const auto gone = predict_facts(vanish, before);
  CHECK(gone.predictedFacts.contains(Fact{EmptyFact{0}}));
  for (const auto& fact : gone.predictedFacts)
    if (tag_of(fact) != FactTag::kEmpty) CHECK_FALSE(is_object_fact(fact));

  const Engine back = Engine{}.with_rule(EmptyFact{0}, AnimationFact{0, "coin", 1, 1},
                                         {VariableFact{"space", false}});
  const auto appeared = predict_facts(back, gone.predictedFacts);
  CHECK(appeared.predictedFacts.contains(Fact{AnimationFact{0, "coin", 1, 1}}));
  CHECK_FALSE(appeared.predictedFacts.contains(Fact{EmptyFact{0}}));
}

TEST_CASE("validate_rule rejects broken rules") {
  const Fact v{VelocityYFact{0, -1}};
  CHECK_NOTHROW(validate_rule(Rule{0, v, VelocityYFact{0, 1}, {VariableFact{"space", true}}}));
  CHECK_THROWS_AS(validate_rule(Rule{0, v, v, {VariableFact{"space", true}}}), InvalidArgumentError);
  CHECK_THROWS_AS(validate_rule(Rule{0, v, VelocityYFact{0, 1}, {}}), InvalidArgumentError);
  CHECK_THROWS_AS(validate_rule(Rule{0, v, VelocityYFact{0, 1},
                                     {VariableFact{"space", true}, VariableFact{"space", true}}}),
                  InvalidArgumentError);
  CHECK_THROWS_AS(validate_rule(Rule{0, v, VelocityXFact{0, 1}, {VariableFact{"space", true}}}),
                  InvalidArgumentError);
  CHECK_THROWS_AS(validate_rule(Rule{0, EmptyFact{1}, AnimationFact{0, "a", 1, 1},
                                     {VariableFact{"space", true}}}),
                  InvalidArgumentError);
  CHECK_THROWS_AS(Engine({Rule{3, v, VelocityYFact{0, 1}, {VariableFact{"up", true}}},
                          Rule{3, v, VelocityYFact{0, 0}, {VariableFact{"up", false}}}},
                         0),
                  InvalidArgumentError);
}

TEST_CASE("engine edits return new engines and allocate fresh ids") {
  const Engine a = Engine{}.with_rule(VelocityYFact{0, -1}, VelocityYFact{0, 1},
                                      {VariableFact{"space", true}, PositionYFact{0, 4}});
  const Engine b = a.with_conditions(0, {VariableFact{"space", true}});
  CHECK(a.rules()[0].conditions.size() == 2);
  CHECK(b.rules()[0].conditions.size() == 1);
  CHECK(b.complexity() == 1);
  const Engine c = b.without_rule(0);
  CHECK(c.empty());
  CHECK(c.next_rule_id() == 1);
  CHECK(c.with_rule(VelocityXFact{0, 0}, VelocityXFact{0, 1}, {VariableFact{"right", true}})
            .rules()[0]
            .id == 1);
  CHECK_THROWS_AS(c.without_rule(0), NotFoundError);
}

TEST_CASE("rules compare conditions as a set") {
  const Rule a{0, VelocityYFact{0, -1}, VelocityYFact{0, 1}, {VariableFact{"space", true}, PositionYFact{0, 4}}};
  Rule b = a;
  std::reverse(b.conditions.begin(), b.conditions.end());
  CHECK(a == b);
  b.id = 5;
  CHECK_FALSE(a == b);
  CHECK(same_behavior(a, b));
}

TEST_CASE("frame_distance is a metric on random fact sets") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const FactSet a = random_facts(rng);
    const FactSet b = random_facts(rng);
    const FactSet c = random_facts(rng);
    const auto ab = frame_distance(a, b);
    const auto ba = frame_distance(b, a);
    REQUIRE(ab.raw == symmetric_difference_size(a, b));
    REQUIRE(ab.raw == ba.raw);
    REQUIRE(ab.normalized == ba.normalized);
    REQUIRE(frame_distance(a, a).raw == 0);
    REQUIRE(frame_distance(a, a).normalized == 0.0);
    REQUIRE(ab.raw <= frame_distance(a, c).raw + frame_distance(c, b).raw);
    REQUIRE(ab.normalized >= 0.0);
    REQUIRE(ab.normalized <= 1.0);
    if (a != b) REQUIRE(ab.raw > 0);
  }
  CHECK(frame_distance({}, {}).normalized == 0.0);
  CHECK(frame_distance({EmptyFact{0}}, {}).normalized == 1.0);
}

TEST_CASE("with_observed_inputs swaps only the variable facts") {
  const FactSet predicted{VariableFact{"space", true}, PositionXFact{0, 1}};
  const FactSet observed{VariableFact{"space", false}, VariableFact{"up", true}, PositionXFact{0, 9}};
  const FactSet out = with_observed_inputs(predicted, observed);
  CHECK(out == FactSet{VariableFact{"space", false}, VariableFact{"up", true}, PositionXFact{0, 1}});
}
