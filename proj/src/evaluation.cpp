#include "mm/evaluation.hpp"

#include <numeric>

#include "mm/error.hpp"

namespace mm {

namespace {

void require_transitions(std::span<const Frame> frames) {
  if (frames.size() < 2)
    throw InsufficientDataError("evaluation needs at least two reference frames, got " +
                                std::to_string(frames.size()));
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvalReport frame_error(const Engine& engine, std::span<const Frame> referenceFrames,
                       const LearnerConfig& config) {
  require_transitions(referenceFrames);
  const Demonstration demo = make_demonstration(referenceFrames, config);
  EvalReport report;
  for (std::size_t t = 0; t + 1 < demo.facts.size(); ++t) {
    report.perTransitionError.push_back(
        frame_distance(predict_transition(engine, demo, demo.facts[t], t), demo.facts[t + 1])
            .normalized);
  }
  report.meanError = mean(report.perTransitionError);
  report.baselineMeanError = baseline_error(referenceFrames);
  report.beatBaseline = report.meanError < report.baselineMeanError;
  return report;
}

double baseline_error(std::span<const Frame> referenceFrames) {
  require_transitions(referenceFrames);
  const auto universe = universe_ids(referenceFrames);
  std::vector<double> errors;
  FactSet previous = extract_facts(referenceFrames[0], universe);
  for (std::size_t t = 1; t < referenceFrames.size(); ++t) {
    FactSet next = extract_facts(referenceFrames[t], universe);
    errors.push_back(frame_distance(with_observed_inputs(previous, next), next).normalized);
    previous = std::move(next);
  }
  return mean(errors);
}

nlohmann::json report_to_json(const EvalReport& report) {
  return nlohmann::json{{"perTransitionError", report.perTransitionError},
                        {"meanError", report.meanError},
                        {"baselineMeanError", report.baselineMeanError},
                        {"beatBaseline", report.beatBaseline}};
}

}  // namespace mm
