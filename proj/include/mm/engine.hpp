#pragma once

// Rules, engines, one-step prediction and the fact-set distance.

#include <optional>
#include <vector>

#include "mm/fact.hpp"

namespace mm {

// A guarded fact rewrite: when every condition holds and `pre` is present,
// `pre` is replaced by `post` in the next frame.
//
// Besides same-slot rewrites, two cross-slot families exist for objects that
// appear (Empty(id) -> object fact of id) or disappear (object fact of id ->
// Empty(id)).
//
// Conditions keep the order they were built in (it drives the text export),
// but compare as a set.
struct Rule {
  int id = 0;
  Fact pre;
  Fact post;
  std::vector<Fact> conditions;

  friend bool operator==(const Rule& a, const Rule& b);
};

// Throws InvalidArgumentError when the rule breaks a structural invariant.
void validate_rule(const Rule& rule);

// Slot a firing rule claims; at most one rule fires per key.
Slot conflict_key(const Rule& rule);

// Same rewrite and same condition set, ignoring id and condition order.
bool same_behavior(const Rule& a, const Rule& b);

class Engine {
 public:
  Engine() = default;
  Engine(std::vector<Rule> rules, int nextRuleId);

  const std::vector<Rule>& rules() const { return rules_; }
  int next_rule_id() const { return nextRuleId_; }
  bool empty() const { return rules_.empty(); }
  std::size_t size() const { return rules_.size(); }

  const Rule* find(int ruleId) const;

  // Value-returning edits; the receiver is never modified.
  Engine with_rule(Fact pre, Fact post, std::vector<Fact> conditions) const;
  Engine with_conditions(int ruleId, std::vector<Fact> conditions) const;
  Engine without_rule(int ruleId) const;

  // Total number of condition facts across all rules.
  std::size_t complexity() const;

  friend bool operator==(const Engine&, const Engine&) = default;

 private:
  std::vector<Rule> rules_;
  int nextRuleId_ = 0;
};

struct PredictOptions {
  bool kinematics = true;
  int gridWidth = kDefaultGridWidth;
  int gridHeight = kDefaultGridHeight;
};

struct PredictionResult {
  FactSet predictedFacts;
  std::vector<int> firedRuleIds;
  std::optional<double> distanceToActual;
};

bool rule_fires(const Rule& rule, const FactSet& facts);

// One-step prediction:
//  1. rules fire in engine order, first rule wins per conflict key;
//  2. fired rules rewrite pre -> post;
//  3. objects touched by appear/disappear rewrites are made consistent
//     (no Animation means no object facts and an Empty fact);
//  4. with kinematics, positions advance by the (post-rewrite) velocity and
//     clamp to the grid, except on axes a fired rule set directly; relation
//     facts are then recomputed from the new positions.
PredictionResult predict_facts(const Engine& engine, const FactSet& facts,
                               const PredictOptions& options = {});

struct FrameDistance {
  int raw = 0;            // |a \ b| + |b \ a|
  double normalized = 0;  // raw / (|a| + |b|), 0 when both are empty
};

FrameDistance frame_distance(const FactSet& predicted, const FactSet& actual);

// Replaces the Variable facts of `predicted` with those of `observed`. Player
// input is supplied, never predicted, so every comparison of a prediction
// against a recorded next frame takes that frame's input as given.
FactSet with_observed_inputs(FactSet predicted, const FactSet& observed);

}  // namespace mm
