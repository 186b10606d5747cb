#include <algorithm>
#include <iterator>

#include "doctest.h"
#include "mm/error.hpp"
#include "mm/evaluation.hpp"
#include "mm/persistence.hpp"
#include "support/build.hpp"

using namespace mm;
using build::frame;
using build::obj;

namespace {

// Copy-the-previous-frame error computed from scratch: inputs of the next
// frame are given, everything else is compared as is.
double baseline_oracle(const std::vector<Frame>& frames) {
  const auto ids = universe_ids(frames);
  double sum = 0;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const FactSet prev = extract_facts(frames[t - 1], ids);
    const FactSet next = extract_facts(frames[t], ids);
    FactSet guess;
    for (const auto& f : prev)
      if (tag_of(f) != FactTag::kVariable) guess.insert(f);
    for (const auto& f : next)
      if (tag_of(f) == FactTag::kVariable) guess.insert(f);
    std::vector<Fact> diff;
    std::set_symmetric_difference(guess.begin(), guess.end(), next.begin(), next.end(),
                                  std::back_inserter(diff));
    sum += static_cast<double>(diff.size()) / static_cast<double>(guess.size() + next.size());
  }
  return sum / static_cast<double>(frames.size() - 1);
}

}  // namespace

TEST_CASE("baseline matches an independent computation on both fixtures") {
  for (const char* name : {"flappy.mmproj", "sokoban.mmproj"}) {
    CAPTURE(name);
    const auto frames = prepared_frames(load_project(build::fixture(name)));
    const double b = baseline_error(frames);
    CHECK(b == doctest::Approx(baseline_oracle(frames)).epsilon(1e-12));
    CHECK(b > 0.0);
  }
}

TEST_CASE("the empty engine without kinematics scores exactly the baseline") {
  const auto frames = prepared_frames(load_project(build::fixture("flappy.mmproj")));
  LearnerConfig config;
  config.kinematics = false;
  const auto report = frame_error(Engine{}, frames, config);
  CHECK(report.meanError == report.baselineMeanError);
  CHECK_FALSE(report.beatBaseline);
  CHECK(report.perTransitionError.size() == frames.size() - 1);
}

TEST_CASE("a static scene has zero baseline") {
  const std::vector<Frame> frames(3, frame({obj(0, "a", 1, 1)}));
  CHECK(baseline_error(frames) == 0.0);
  CHECK(frame_error(Engine{}, frames).meanError == 0.0);
}

TEST_CASE("learned engines score zero and beat the baseline") {
  for (const char* name : {"flappy.mmproj", "sokoban.mmproj"}) {
    CAPTURE(name);
    const auto frames = prepared_frames(load_project(build::fixture(name)));
    const auto report = frame_error(learn(frames, LearnerConfig{}).engine, frames);
    CHECK(report.meanError == 0.0);
    CHECK(report.beatBaseline);
    const auto j = report_to_json(report);
    CHECK(j.at("meanError") == 0.0);
    CHECK(j.at("perTransitionError").size() == frames.size() - 1);
  }
}

TEST_CASE("evaluation needs two frames") {
  const std::vector<Frame> one{frame({obj(0, "a", 1, 1)})};
  CHECK_THROWS_AS(frame_error(Engine{}, one), InsufficientDataError);
  CHECK_THROWS_AS(baseline_error(one), InsufficientDataError);
}
