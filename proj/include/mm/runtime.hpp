#pragma once

// Play Mode: runs a learned engine against live input, one tick at a time.

#include <set>
#include <span>
#include <vector>

#include "mm/engine.hpp"
#include "mm/learner.hpp"

namespace mm {

inline constexpr double kDefaultTickRate = 6.0;  // ticks per second

// Rebuilds a frame from facts. Objects need Animation and both position
// facts; Empty ids are omitted.
Frame facts_to_frame(const FactSet& facts, int gridWidth, int gridHeight, int index = 0);

class PlaySession {
 public:
  PlaySession(Engine engine, const Frame& initialFrame, std::set<int> universeIds,
              LearnerConfig config = {});

  // Applies `buttons` as this tick's input (the previous tick's input becomes
  // the Prev variables), predicts the next state and returns it as a frame.
  Frame step(const ButtonArray& buttons);

  const Engine& engine() const { return engine_; }
  const FactSet& current_facts() const { return facts_; }
  int tick_index() const { return tick_; }
  Frame current_frame() const;
  const std::vector<int>& last_fired() const { return lastFired_; }

 private:
  Engine engine_;
  FactSet facts_;
  std::set<int> universe_;
  LearnerConfig config_;
  PredictOptions options_;
  ButtonArray buttons_{};
  std::vector<int> lastFired_;
  int tick_ = 0;
};

// Variable facts are all false in the starting state.
PlaySession start_play(const Engine& engine, const Frame& initialFrame,
                       const std::set<int>& universeIds, const LearnerConfig& config = {});

// Folds step over the trace; one output frame per input.
std::vector<Frame> run_trace(const Engine& engine, const Frame& frame0,
                             std::span<const ButtonArray> inputTrace,
                             const LearnerConfig& config = {});

}  // namespace mm
