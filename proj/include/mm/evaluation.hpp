#pragma once

#include <span>
#include <vector>

#include "json.hpp"
#include "mm/engine.hpp"
#include "mm/learner.hpp"

namespace mm {

struct EvalReport {
  std::vector<double> perTransitionError;
  double meanError = 0;
  double baselineMeanError = 0;
  bool beatBaseline = false;
};

// Frame Error: mean normalized distance between the engine's prediction from
// each reference frame and the next reference frame. Reference frames are
// used as given; the input facts of each predicted frame are observed, not
// predicted. Throws InsufficientDataError for fewer than two frames.
EvalReport frame_error(const Engine& engine, std::span<const Frame> referenceFrames,
                       const LearnerConfig& config = {});

// Mean distance when each frame is predicted as an unchanged copy of the
// previous one (the player's input for the next frame is taken as given, as
// in frame_error).
double baseline_error(std::span<const Frame> referenceFrames);

nlohmann::json report_to_json(const EvalReport& report);

}  // namespace mm
