#pragma once

// One editing session: the project being authored, the engine learned from
// its frames, ghost predictions and Play Mode. Messages are JSON objects
// {type, requestId, payload}; see docs/protocol.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mm/learner.hpp"
#include "mm/persistence.hpp"
#include "mm/runtime.hpp"

namespace mm {

struct SessionOptions {
  LearnerConfig config;  // project config overrides apply on top
  std::filesystem::path fixtureDir;  // where eval.run looks up fixture names
  std::optional<std::filesystem::path> eventLog;
  double tickRate = kDefaultTickRate;
};

struct Reply {
  nlohmann::json response;  // null when the message needs no response
  std::vector<nlohmann::json> notifications;
};

// Everything a background learn needs, copied out of the session.
struct LearnJob {
  std::vector<Frame> frames;  // prepared
  LearnerConfig config;
  Engine initial;
  std::uint64_t editGeneration = 0;
};

struct LearnOutcome {
  LearnResult result;
  std::uint64_t editGeneration = 0;
  std::optional<std::string> error;  // set when the learn threw
};

// Warm start from job.initial; if that does not converge, a cold start from
// the empty engine is tried and the lower-error result kept.
LearnOutcome run_learn_job(const LearnJob& job);

class Session {
 public:
  explicit Session(SessionOptions options = {});

  // Never throws; every failure becomes an error response.
  Reply handle(const nlohmann::json& message);
  Reply handle_line(const std::string& line);

  // True when frames changed since the served engine was learned.
  bool relearn_policy() const { return dirty_; }

  // Snapshot for a background learn, or nullopt when there is nothing to
  // learn from (fewer than two frames). Throws if the frames cannot be
  // prepared.
  std::optional<LearnJob> learn_job() const;

  // Installs the outcome if no edit happened since its job was taken;
  // returns the notifications to push (none for a stale outcome).
  std::vector<nlohmann::json> apply_learn(const LearnOutcome& outcome);

  // Play Mode tick with the held buttons; empty when not playing.
  std::vector<nlohmann::json> tick();

  bool playing() const { return play_.has_value(); }
  double tick_rate() const { return options_.tickRate; }
  const Project& project() const { return project_; }
  const Engine& engine() const { return engine_; }
  int learn_generation() const { return learnGeneration_; }
  std::uint64_t edit_generation() const { return editGeneration_; }
  LearnerConfig config() const { return project_.config.apply(options_.config); }

 private:
  nlohmann::json dispatch(const std::string& type, const nlohmann::json& payload,
                          std::vector<nlohmann::json>& notes);

  nlohmann::json project_load(const nlohmann::json& payload);
  nlohmann::json project_save(const nlohmann::json& payload);
  nlohmann::json frame_set(const nlohmann::json& payload);
  nlohmann::json frame_get(const nlohmann::json& payload) const;
  nlohmann::json input_set(const nlohmann::json& payload);
  nlohmann::json predict_get(const nlohmann::json& payload);
  nlohmann::json predict_accept(const nlohmann::json& payload);
  nlohmann::json learn_run(std::vector<nlohmann::json>& notes);
  nlohmann::json play_start(const nlohmann::json& payload, std::vector<nlohmann::json>& notes);
  nlohmann::json play_input(const nlohmann::json& payload);
  nlohmann::json play_tick(const nlohmann::json& payload, std::vector<nlohmann::json>& notes);
  nlohmann::json play_stop(std::vector<nlohmann::json>& notes);
  nlohmann::json eval_run(const nlohmann::json& payload) const;
  nlohmann::json status() const;

  Frame ghost(int index) const;
  void edited(int frameIndex);
  void log(EventKind kind, nlohmann::json payload = nlohmann::json::object());

  SessionOptions options_;
  Project project_;
  Engine engine_;
  int learnGeneration_ = 0;
  std::uint64_t editGeneration_ = 0;
  bool dirty_ = false;
  std::optional<PlaySession> play_;
  ButtonArray held_{};
  std::optional<EventLog> log_;
};

}  // namespace mm
