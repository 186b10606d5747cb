#pragma once

// Search-based engine learning from demonstrated frames.
//
// The learner walks the demonstration's transitions with the current engine.
// Whenever a prediction misses the next frame by more than `theta` facts, it
// searches the engine's neighborhood (add, modify and remove one rule) for an
// engine that lowers the total prediction error, restarting from the first
// frame after each accepted change.

#include <span>
#include <vector>

#include "mm/engine.hpp"
#include "mm/fact.hpp"

namespace mm {

struct LearnerConfig {
  int theta = 0;  // raw fact-distance tolerance per transition
  int maxIterations = 10;
  int vmax = kDefaultVmax;
  bool kinematics = true;
  // Hard stop on accepted updates in one learn call.
  int maxUpdates = 1000;

  void validate() const;
};

struct UnmatchedPair {
  Fact have;
  Fact want;
  friend bool operator==(const UnmatchedPair&, const UnmatchedPair&) = default;
};

// Fact sets of a demonstration plus the grid they live on.
struct Demonstration {
  std::vector<FactSet> facts;
  PredictOptions options;

  std::size_t transitions() const { return facts.empty() ? 0 : facts.size() - 1; }
};

// Frames must already be prepared (see prepare_demonstration).
Demonstration make_demonstration(std::span<const Frame> frames, const LearnerConfig& config);

// Prediction for transition t -> t+1 starting from `from`, with the input
// facts of frame t+1 taken as observed.
FactSet predict_transition(const Engine& engine, const Demonstration& demo, const FactSet& from,
                           std::size_t t);

// Per-slot disagreements between a prediction and the actual next frame,
// ordered by slot. A slot missing on one side is paired with Empty(id).
// Relationship slots present on one side only cannot be expressed as a
// rewrite and are skipped.
std::vector<UnmatchedPair> unmatched_pairs(const FactSet& predicted, const FactSet& actual);

// Appends one rule pre=have, post=want guarded by all of `currentFacts`.
Engine add_rule(const Engine& engine, const FactSet& currentFacts, const UnmatchedPair& pair);

// Narrows a rule's conditions to those also true in `currentFacts`. Returns
// nullopt when nothing would remain. Throws NotFoundError for unknown ids.
std::optional<Engine> modify_rule(const Engine& engine, int ruleId, const FactSet& currentFacts);

Engine remove_rule(const Engine& engine, int ruleId);

// Sum of normalized distances over transitions [0, uptoIndex).
double score_engine(const Engine& engine, const Demonstration& demo, std::size_t uptoIndex);

enum class NeighborKind { kAdd, kModify, kRemove };

struct Neighbor {
  Engine engine;
  NeighborKind kind = NeighborKind::kAdd;
  int ruleId = -1;  // rule added, modified or removed
};

// All neighbors for the transition failingIndex -> failingIndex + 1, in
// generation order: adds (per unmatched pair), modifies (rules whose slot is
// implicated), removes (every rule).
std::vector<Neighbor> generate_neighbors(const Engine& engine, const Demonstration& demo,
                                         std::size_t failingIndex, const LearnerConfig& config);

struct SearchResult {
  Engine engine;
  bool updated = false;
  double score = 0;  // score of `engine` over the whole demonstration
  std::size_t neighborsEvaluated = 0;
};

// Best neighbor by whole-demonstration score; ties prefer the smaller
// engine, then generation order. `updated` is true iff it strictly beats
// `engine`; otherwise `engine` is returned unchanged.
SearchResult engine_search(const Engine& engine, const Demonstration& demo,
                           std::size_t failingIndex, const LearnerConfig& config);

struct LearnStats {
  struct Visit {
    std::size_t transition = 0;
    int searchIterations = 0;
    bool repaired = false;
  };
  std::vector<Visit> visits;  // one entry per failing-transition visit
  int updates = 0;
  std::size_t neighborsEvaluated = 0;
  std::vector<double> acceptedScores;  // incumbent score after each update
};

struct LearnResult {
  Engine engine;
  double totalError = 0;
  bool converged = false;
};

// Throws InsufficientDataError for fewer than two frames.
LearnResult learn(std::span<const Frame> frames, const LearnerConfig& config,
                  const Engine& initialEngine = {}, LearnStats* stats = nullptr);

LearnResult learn(const Demonstration& demo, const LearnerConfig& config,
                  const Engine& initialEngine = {}, LearnStats* stats = nullptr);

}  // namespace mm
