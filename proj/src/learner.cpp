#include "mm/learner.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "mm/error.hpp"

namespace mm {

namespace {

constexpr double kScoreEpsilon = 1e-12;

using SlotIndex = std::map<Slot, Fact>;

SlotIndex index_by_slot(const FactSet& facts) {
  SlotIndex out;
  for (const auto& f : facts) out.insert_or_assign(slot_of(f), f);
  return out;
}

// Re-anchors a pair's `have` side to the fact the source frame holds for
// that slot, so the resulting rule can fire on the source frame.
std::optional<Fact> anchor(const Fact& have, const SlotIndex& source) {
  if (auto it = source.find(slot_of(have)); it != source.end()) return it->second;
  if (auto id = object_of(have)) {
    auto it = source.find(Slot{FactTag::kAnimation, *id, -1, {}});
    if (it != source.end() && tag_of(it->second) == FactTag::kEmpty) return it->second;
  }
  return std::nullopt;
}

using EngineSignature = std::vector<std::tuple<Fact, Fact, FactSet>>;

EngineSignature signature(const Engine& e) {
  EngineSignature sig;
  for (const auto& r : e.rules())
    sig.emplace_back(r.pre, r.post, FactSet(r.conditions.begin(), r.conditions.end()));
  return sig;
}

struct Scored {
  std::size_t index = 0;
  double score = 0;
  std::size_t complexity = 0;
};

bool better(const Scored& a, const Scored& b) {
  if (a.score < b.score - kScoreEpsilon) return true;
  if (b.score < a.score - kScoreEpsilon) return false;
  if (a.complexity != b.complexity) return a.complexity < b.complexity;
  return a.index < b.index;
}

// Best neighbor of `engine` not already in `visited`.
std::optional<std::pair<Neighbor, double>> best_neighbor(
    const Engine& engine, const Demonstration& demo, std::size_t failingIndex,
    const LearnerConfig& config, const std::set<EngineSignature>* visited,
    std::size_t& evaluated) {
  auto candidates = generate_neighbors(engine, demo, failingIndex, config);
  std::optional<Scored> best;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (visited != nullptr && visited->contains(signature(candidates[k].engine))) continue;
    ++evaluated;
    Scored s{k, score_engine(candidates[k].engine, demo, demo.transitions()),
             candidates[k].engine.complexity()};
    if (!best || better(s, *best)) best = s;
  }
  if (!best) return std::nullopt;
  return std::make_pair(std::move(candidates[best->index]), best->score);
}

}  // namespace

void LearnerConfig::validate() const {
  if (theta < 0) throw InvalidArgumentError("theta must be non-negative");
  if (maxIterations < 1) throw InvalidArgumentError("maxIterations must be at least 1");
  if (vmax < 1) throw InvalidArgumentError("vmax must be positive");
  if (maxUpdates < 1) throw InvalidArgumentError("maxUpdates must be at least 1");
}

Demonstration make_demonstration(std::span<const Frame> frames, const LearnerConfig& config) {
  Demonstration demo;
  if (!frames.empty()) {
    demo.options.gridWidth = frames.front().gridWidth;
    demo.options.gridHeight = frames.front().gridHeight;
  }
  demo.options.kinematics = config.kinematics;
  const auto universe = universe_ids(frames);
  demo.facts.reserve(frames.size());
  for (const auto& f : frames) demo.facts.push_back(extract_facts(f, universe));
  return demo;
}

std::vector<UnmatchedPair> unmatched_pairs(const FactSet& predicted, const FactSet& actual) {
  const SlotIndex p = index_by_slot(predicted);
  const SlotIndex a = index_by_slot(actual);
  std::set<Slot> slots;
  for (const auto& [s, f] : p) slots.insert(s);
  for (const auto& [s, f] : a) slots.insert(s);

  std::vector<UnmatchedPair> out;
  for (const auto& slot : slots) {
    auto pi = p.find(slot);
    auto ai = a.find(slot);
    if (pi != p.end() && ai != a.end()) {
      if (pi->second != ai->second) out.push_back({pi->second, ai->second});
      continue;
    }
    const Fact& present = pi != p.end() ? pi->second : ai->second;
    auto id = object_of(present);
    if (!id) continue;  // relationship or variable slot on one side only
    if (pi != p.end()) out.push_back({present, EmptyFact{*id}});
    else out.push_back({EmptyFact{*id}, present});
  }
  return out;
}

FactSet predict_transition(const Engine& engine, const Demonstration& demo, const FactSet& from,
                           std::size_t t) {
  return with_observed_inputs(predict_facts(engine, from, demo.options).predictedFacts,
                              demo.facts.at(t + 1));
}

Engine add_rule(const Engine& engine, const FactSet& currentFacts, const UnmatchedPair& pair) {
  return engine.with_rule(pair.have, pair.want, presentation_order(currentFacts));
}

std::optional<Engine> modify_rule(const Engine& engine, int ruleId, const FactSet& currentFacts) {
  const Rule* rule = engine.find(ruleId);
  if (rule == nullptr) throw NotFoundError("no rule with id " + std::to_string(ruleId));
  std::vector<Fact> kept;
  for (const auto& c : rule->conditions)
    if (currentFacts.contains(c)) kept.push_back(c);
  if (kept.empty()) return std::nullopt;
  return engine.with_conditions(ruleId, std::move(kept));
}

Engine remove_rule(const Engine& engine, int ruleId) { return engine.without_rule(ruleId); }

double score_engine(const Engine& engine, const Demonstration& demo, std::size_t uptoIndex) {
  uptoIndex = std::min(uptoIndex, demo.transitions());
  double total = 0;
  for (std::size_t t = 0; t < uptoIndex; ++t) {
    total += frame_distance(predict_transition(engine, demo, demo.facts[t], t), demo.facts[t + 1])
                 .normalized;
  }
  return total;
}

std::vector<Neighbor> generate_neighbors(const Engine& engine, const Demonstration& demo,
                                         std::size_t failingIndex, const LearnerConfig& config) {
  if (failingIndex >= demo.transitions())
    throw RangeError("transition " + std::to_string(failingIndex) + " out of range");
  const FactSet& source = demo.facts[failingIndex];
  const FactSet& actual = demo.facts[failingIndex + 1];
  const auto predicted = predict_transition(engine, demo, source, failingIndex);
  const SlotIndex sourceSlots = index_by_slot(source);

  std::vector<Neighbor> out;
  std::set<Slot> implicated;
  std::set<std::pair<Fact, Fact>> seenRewrites;
  for (const auto& pair : unmatched_pairs(predicted, actual)) {
    implicated.insert(slot_of(pair.have));
    implicated.insert(slot_of(pair.want));
    // Relations are recomputed from positions when kinematics is on.
    if (config.kinematics && (is_relationship(pair.have) || is_relationship(pair.want))) continue;
    auto pre = anchor(pair.have, sourceSlots);
    if (!pre || *pre == pair.want) continue;
    if (!seenRewrites.emplace(*pre, pair.want).second) continue;
    try {
      Engine next = add_rule(engine, source, UnmatchedPair{*pre, pair.want});
      out.push_back({std::move(next), NeighborKind::kAdd, engine.next_rule_id()});
    } catch (const InvalidArgumentError&) {
      // Not expressible as a rule (incompatible slots).
    }
  }

  for (const auto& rule : engine.rules()) {
    if (!implicated.contains(conflict_key(rule)) && !implicated.contains(slot_of(rule.pre)))
      continue;
    auto modified = modify_rule(engine, rule.id, source);
    if (!modified || *modified == engine) continue;
    out.push_back({std::move(*modified), NeighborKind::kModify, rule.id});
  }

  for (const auto& rule : engine.rules())
    out.push_back({remove_rule(engine, rule.id), NeighborKind::kRemove, rule.id});
  return out;
}

SearchResult engine_search(const Engine& engine, const Demonstration& demo,
                           std::size_t failingIndex, const LearnerConfig& config) {
  SearchResult result;
  const double current = score_engine(engine, demo, demo.transitions());
  auto best = best_neighbor(engine, demo, failingIndex, config, nullptr, result.neighborsEvaluated);
  if (best && best->second < current - kScoreEpsilon) {
    result.engine = std::move(best->first.engine);
    result.score = best->second;
    result.updated = true;
  } else {
    result.engine = engine;
    result.score = current;
  }
  return result;
}

LearnResult learn(std::span<const Frame> frames, const LearnerConfig& config,
                  const Engine& initialEngine, LearnStats* stats) {
  if (frames.size() < 2)
    throw InsufficientDataError("learning needs at least two frames, got " +
                                std::to_string(frames.size()));
  for (const auto& f : frames) validate_frame(f);
  return learn(make_demonstration(frames, config), config, initialEngine, stats);
}

LearnResult learn(const Demonstration& demo, const LearnerConfig& config,
                  const Engine& initialEngine, LearnStats* stats) {
  config.validate();
  if (demo.facts.size() < 2)
    throw InsufficientDataError("learning needs at least two frames, got " +
                                std::to_string(demo.facts.size()));
  LearnStats local;
  LearnStats& st = stats != nullptr ? *stats : local;

  Engine engine = initialEngine;
  double incumbent = score_engine(engine, demo, demo.transitions());
  const std::size_t n = demo.transitions();
  bool passClean = true;
  bool budgetHit = false;

  std::size_t i = 0;
  FactSet current = demo.facts[0];
  while (i < n) {
    auto pred = predict_transition(engine, demo, current, i);
    if (frame_distance(pred, demo.facts[i + 1]).raw <= config.theta) {
      current = std::move(pred);
      ++i;
      continue;
    }

    // Repair this transition within the iteration budget. Iterations that
    // find no improvement move to the best unvisited neighbor so the search
    // can cross plateaus; only strict improvements over the incumbent are
    // ever kept.
    LearnStats::Visit visit{i, 0, false};
    Engine walker = engine;
    std::set<EngineSignature> visited{signature(engine)};
    while (visit.searchIterations < config.maxIterations) {
      ++visit.searchIterations;
      auto best = best_neighbor(walker, demo, i, config, &visited, st.neighborsEvaluated);
      if (!best) break;
      if (best->second < incumbent - kScoreEpsilon) {
        engine = std::move(best->first.engine);
        incumbent = best->second;
        visit.repaired = true;
        break;
      }
      walker = std::move(best->first.engine);
      visited.insert(signature(walker));
    }
    st.visits.push_back(visit);

    if (visit.repaired) {
      ++st.updates;
      st.acceptedScores.push_back(incumbent);
      if (st.updates >= config.maxUpdates) {
        budgetHit = true;
        break;
      }
      i = 0;
      current = demo.facts[0];
      passClean = true;
      continue;
    }
    // Budget spent: keep the incumbent (the lowest-scoring engine seen) and
    // move on from the actual next frame.
    passClean = false;
    ++i;
    current = demo.facts[i];
  }

  LearnResult result;
  result.totalError = score_engine(engine, demo, n);
  bool withinTheta = true;
  for (std::size_t t = 0; t < n && withinTheta; ++t) {
    const auto p = predict_transition(engine, demo, demo.facts[t], t);
    withinTheta = frame_distance(p, demo.facts[t + 1]).raw <= config.theta;
  }
  result.converged = passClean && !budgetHit && withinTheta;
  result.engine = std::move(engine);
  return result;
}

}  // namespace mm
