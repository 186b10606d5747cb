#include "mm/session.hpp"

#include "mm/error.hpp"
#include "mm/evaluation.hpp"

namespace mm {

using json = nlohmann::json;

namespace {

class BadRequest : public Error {
 public:
  explicit BadRequest(const std::string& what) : Error("bad-request", what) {}
};

class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, json details)
      : Error("not-converged", what), details_(std::move(details)) {}
  const json& details() const { return details_; }

 private:
  json details_;
};

constexpr int kMaxTicksPerRequest = 10000;

json ok(const json& id, json payload) {
  return json{{"requestId", id}, {"ok", true}, {"payload", std::move(payload)}};
}

json fail(const json& id, const std::string& code, const std::string& message,
          json details = nullptr) {
  json error{{"code", code}, {"message", message}};
  if (!details.is_null()) error["details"] = std::move(details);
  return json{{"requestId", id}, {"ok", false}, {"error", std::move(error)}};
}

json note(const std::string& event, json payload) {
  return json{{"event", event}, {"payload", std::move(payload)}};
}

const json* field(const json& payload, const char* key) {
  auto it = payload.find(key);
  return it == payload.end() ? nullptr : &*it;
}

int int_field(const json& payload, const char* key) {
  const json* v = field(payload, key);
  if (v == nullptr) throw BadRequest(std::string("payload.") + key + " is required");
  if (!v->is_number_integer()) throw BadRequest(std::string("payload.") + key + " must be an integer");
  const auto value = v->get<std::int64_t>();
  if (value < INT32_MIN || value > INT32_MAX)
    throw BadRequest(std::string("payload.") + key + " is out of range");
  return static_cast<int>(value);
}

int int_field_or(const json& payload, const char* key, int fallback) {
  return field(payload, key) == nullptr ? fallback : int_field(payload, key);
}

std::string string_field(const json& payload, const char* key) {
  const json* v = field(payload, key);
  if (v == nullptr) throw BadRequest(std::string("payload.") + key + " is required");
  if (!v->is_string()) throw BadRequest(std::string("payload.") + key + " must be a string");
  return v->get<std::string>();
}

void check_index(int index, std::size_t upper, const std::string& what) {
  if (index < 0 || static_cast<std::size_t>(index) >= upper)
    throw RangeError(what + " " + std::to_string(index) + " out of range [0, " +
                     std::to_string(upper) + ")");
}

void reindex(std::vector<Frame>& frames) {
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i].index = static_cast<int>(i);
}

}  // namespace

LearnOutcome run_learn_job(const LearnJob& job) {
  LearnOutcome out;
  out.editGeneration = job.editGeneration;
  try {
    out.result = learn(job.frames, job.config, job.initial);
    if (!out.result.converged && !job.initial.empty()) {
      LearnResult cold = learn(job.frames, job.config, Engine{});
      if (cold.converged || cold.totalError < out.result.totalError) out.result = std::move(cold);
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

Session::Session(SessionOptions options) : options_(std::move(options)) {
  if (options_.eventLog) log_.emplace(*options_.eventLog);
}

Reply Session::handle_line(const std::string& line) {
  json message;
  try {
    message = json::parse(line);
  } catch (const json::parse_error& e) {
    return Reply{fail(nullptr, "bad-request", std::string("invalid JSON: ") + e.what()), {}};
  }
  return handle(message);
}

Reply Session::handle(const json& message) {
  Reply reply;
  json id = nullptr;
  try {
    if (!message.is_object()) throw BadRequest("message must be a JSON object");
    if (auto it = message.find("requestId"); it != message.end() && it->is_number_integer())
      id = *it;
    else
      throw BadRequest("requestId must be an integer");
    auto type = message.find("type");
    if (type == message.end() || !type->is_string()) throw BadRequest("type must be a string");
    json payload = json::object();
    if (auto it = message.find("payload"); it != message.end() && !it->is_null()) {
      if (!it->is_object()) throw BadRequest("payload must be an object");
      payload = *it;
    }
    reply.response = ok(id, dispatch(type->get<std::string>(), payload, reply.notifications));
  } catch (const NotConverged& e) {
    reply.response = fail(id, e.code(), e.what(), e.details());
  } catch (const Error& e) {
    reply.response = fail(id, e.code(), e.what());
  } catch (const json::exception& e) {
    reply.response = fail(id, "bad-request", e.what());
  } catch (const std::exception& e) {
    reply.response = fail(id, "internal", e.what());
  }
  return reply;
}

json Session::dispatch(const std::string& type, const json& payload, std::vector<json>& notes) {
  if (type == "project.load") return project_load(payload);
  if (type == "project.save") return project_save(payload);
  if (type == "project.get") {
    Project p = project_;
    p.engine = engine_;
    return json{{"project", project_to_json(p)}};
  }
  if (type == "frame.set") return frame_set(payload);
  if (type == "frame.get") return frame_get(payload);
  if (type == "input.set") return input_set(payload);
  if (type == "predict.get") return predict_get(payload);
  if (type == "predict.accept") return predict_accept(payload);
  if (type == "learn.run") return learn_run(notes);
  if (type == "engine.export")
    return json{{"text", export_engine_text(engine_)}, {"json", engine_to_json(engine_)}};
  if (type == "play.start") return play_start(payload, notes);
  if (type == "play.input") return play_input(payload);
  if (type == "play.tick") return play_tick(payload, notes);
  if (type == "play.stop") return play_stop(notes);
  if (type == "eval.run") return eval_run(payload);
  if (type == "session.status") return status();
  throw Error("unknown-type", "unknown message type '" + type + "'");
}

json Session::project_load(const json& payload) {
  Project p;
  if (const json* inline_ = field(payload, "project")) {
    p = project_from_json(*inline_);
  } else {
    p = load_project(string_field(payload, "path"));
  }
  validate_project(p);
  reindex(p.frames);
  project_ = std::move(p);
  engine_ = project_.engine.value_or(Engine{});
  play_.reset();
  ++editGeneration_;
  dirty_ = !project_.engine && project_.frames.size() >= 2;
  return json{{"name", project_.name},
              {"frameCount", project_.frames.size()},
              {"grid", {{"width", project_.gridWidth}, {"height", project_.gridHeight}}},
              {"ruleCount", engine_.size()}};
}

json Session::project_save(const json& payload) {
  const std::string path = string_field(payload, "path");
  Project p = project_;
  p.engine = engine_;
  save_project(p, path);
  log(EventKind::kProjectSaved, {{"path", path}});
  return json{{"path", path}};
}

json Session::frame_set(const json& payload) {
  const int index = int_field(payload, "index");
  std::string mode = "replace";
  if (field(payload, "mode") != nullptr) mode = string_field(payload, "mode");
  const json* frameJson = field(payload, "frame");
  if (frameJson == nullptr) throw BadRequest("payload.frame is required");
  Frame frame = frame_from_json(*frameJson, project_.sprites, project_.gridWidth,
                                project_.gridHeight, "payload.frame");
  validate_frame(frame);
  auto& frames = project_.frames;
  if (mode == "replace") {
    check_index(index, frames.size(), "frame");
    frames[index] = std::move(frame);
  } else if (mode == "insert") {
    check_index(index, frames.size() + 1, "insert position");
    frames.insert(frames.begin() + index, std::move(frame));
  } else {
    throw BadRequest("payload.mode must be 'replace' or 'insert'");
  }
  reindex(frames);
  edited(index);
  return json{{"index", index}, {"frameCount", frames.size()}};
}

json Session::frame_get(const json& payload) const {
  const int index = int_field(payload, "index");
  check_index(index, project_.frames.size(), "frame");
  return json{{"index", index}, {"frame", frame_to_json(project_.frames[index])}};
}

json Session::input_set(const json& payload) {
  const int index = int_field(payload, "index");
  check_index(index, project_.frames.size(), "frame");
  const json* buttons = field(payload, "buttons");
  if (buttons == nullptr) throw BadRequest("payload.buttons is required");
  buttons_from_json(*buttons, "payload.buttons");  // validates names and values
  auto& state = project_.frames[index].input.buttons;
  for (const auto& [name, value] : buttons->items())
    state[static_cast<std::size_t>(*button_from_name(name))] = value.get<bool>();
  edited(index);
  return json{{"index", index}, {"buttons", buttons_to_json(state)}};
}

Frame Session::ghost(int index) const {
  const auto& frames = project_.frames;
  if (frames.empty()) throw InsufficientDataError("the project has no frames");
  check_index(index, frames.size() + 1, "frame");
  if (index == 0) return frames[0];
  if (engine_.empty()) {
    // Nothing learned yet: the ghost assumes nothing changes.
    Frame out = frames[index - 1];
    out.index = index;
    if (static_cast<std::size_t>(index) < frames.size()) out.input = frames[index].input;
    return out;
  }
  // Velocities of frame index-1 depend only on the frames before it.
  const auto prefix = prepare_demonstration(
      std::span<const Frame>(frames).first(static_cast<std::size_t>(index)), config().vmax);
  const auto universe = universe_ids(frames);
  PredictOptions options;
  options.kinematics = config().kinematics;
  options.gridWidth = project_.gridWidth;
  options.gridHeight = project_.gridHeight;
  auto predicted = predict_facts(engine_, extract_facts(prefix.back(), universe), options);
  Frame out = facts_to_frame(predicted.predictedFacts, project_.gridWidth, project_.gridHeight,
                             index);
  if (static_cast<std::size_t>(index) < frames.size()) out.input = frames[index].input;
  return out;
}

json Session::predict_get(const json& payload) {
  const int index = int_field(payload, "index");
  Frame g = ghost(index);
  log(EventKind::kPredictionShown, {{"frameIndex", index}});
  return json{{"index", index}, {"frame", frame_to_json(g)}, {"learnGeneration", learnGeneration_}};
}

json Session::predict_accept(const json& payload) {
  const int index = int_field(payload, "index");
  Frame g = ghost(index);
  for (auto& o : g.objects) o.explicitVelocity = false;
  auto& frames = project_.frames;
  if (static_cast<std::size_t>(index) < frames.size()) frames[index] = std::move(g);
  else frames.push_back(std::move(g));
  reindex(frames);
  log(EventKind::kPredictionAccepted, {{"frameIndex", index}});
  edited(index);
  return json{{"index", index}, {"frameCount", frames.size()}};
}

std::optional<LearnJob> Session::learn_job() const {
  if (project_.frames.size() < 2) return std::nullopt;
  LearnJob job;
  job.config = config();
  job.frames = prepare_demonstration(project_.frames, job.config.vmax);
  job.initial = engine_;
  job.editGeneration = editGeneration_;
  return job;
}

std::vector<json> Session::apply_learn(const LearnOutcome& outcome) {
  if (outcome.editGeneration != editGeneration_) return {};
  if (outcome.error) return {note("learn.failed", {{"message", *outcome.error}})};
  engine_ = outcome.result.engine;
  ++learnGeneration_;
  dirty_ = false;
  const json summary{{"learnGeneration", learnGeneration_},
                     {"converged", outcome.result.converged},
                     {"totalError", outcome.result.totalError},
                     {"ruleCount", engine_.size()}};
  log(EventKind::kLearnFinished, summary);
  return {note("learn.finished", summary)};
}

json Session::learn_run(std::vector<json>& notes) {
  auto job = learn_job();
  if (!job)
    throw InsufficientDataError("learning needs at least two frames, have " +
                                std::to_string(project_.frames.size()));
  log(EventKind::kLearnStarted, {{"frameCount", job->frames.size()}});
  notes.push_back(note("learn.started", {{"frameCount", job->frames.size()}}));
  const LearnOutcome outcome = run_learn_job(*job);
  if (outcome.error) throw Error("learn-failed", *outcome.error);
  for (auto& n : apply_learn(outcome)) notes.push_back(std::move(n));
  json payload{{"learnGeneration", learnGeneration_},
               {"converged", outcome.result.converged},
               {"totalError", outcome.result.totalError},
               {"engine", engine_to_json(engine_)}};
  if (!outcome.result.converged)
    throw NotConverged("no engine reproduces every transition; serving the closest one found",
                       std::move(payload));
  return payload;
}

json Session::play_start(const json& payload, std::vector<json>& notes) {
  const int from = int_field_or(payload, "frameIndex", 0);
  const auto& frames = project_.frames;
  check_index(from, frames.size(), "frame");
  const auto prefix = prepare_demonstration(
      std::span<const Frame>(frames).first(static_cast<std::size_t>(from) + 1), config().vmax);
  play_.emplace(engine_, prefix.back(), universe_ids(frames), config());
  held_ = {};
  log(EventKind::kPlayStarted, {{"frameIndex", from}});
  notes.push_back(note("play.frame", {{"tick", 0},
                                      {"frame", frame_to_json(play_->current_frame())},
                                      {"firedRuleIds", json::array()}}));
  return json{{"tickRate", options_.tickRate}, {"tick", 0}};
}

json Session::play_input(const json& payload) {
  if (!play_) throw Error("not-playing", "no play session is running");
  const json* buttons = field(payload, "buttons");
  if (buttons == nullptr) throw BadRequest("payload.buttons is required");
  buttons_from_json(*buttons, "payload.buttons");
  for (const auto& [name, value] : buttons->items())
    held_[static_cast<std::size_t>(*button_from_name(name))] = value.get<bool>();
  return json{{"buttons", buttons_to_json(held_)}};
}

std::vector<json> Session::tick() {
  if (!play_) return {};
  Frame f = play_->step(held_);
  return {note("play.frame", {{"tick", play_->tick_index()},
                              {"frame", frame_to_json(f)},
                              {"firedRuleIds", play_->last_fired()}})};
}

json Session::play_tick(const json& payload, std::vector<json>& notes) {
  if (!play_) throw Error("not-playing", "no play session is running");
  const int count = int_field_or(payload, "count", 1);
  if (count < 1 || count > kMaxTicksPerRequest)
    throw RangeError("payload.count must be in [1, " + std::to_string(kMaxTicksPerRequest) + "]");
  for (int i = 0; i < count; ++i)
    for (auto& n : tick()) notes.push_back(std::move(n));
  return json{{"tick", play_->tick_index()}};
}

json Session::play_stop(std::vector<json>& notes) {
  if (!play_) throw Error("not-playing", "no play session is running");
  const int ticks = play_->tick_index();
  play_.reset();
  log(EventKind::kPlayEnded, {{"ticks", ticks}});
  notes.push_back(note("play.stopped", {{"ticks", ticks}}));
  return json{{"ticks", ticks}};
}

json Session::eval_run(const json& payload) const {
  const std::string name = string_field(payload, "fixture");
  std::filesystem::path path = name;
  if (!path.has_parent_path() && path.extension() != ".mmproj")
    path = options_.fixtureDir / (name + ".mmproj");
  const Project reference = load_project(path);
  const auto frames = prepared_frames(reference);
  json report = report_to_json(frame_error(engine_, frames, reference.config.apply(config())));
  report["fixture"] = name;
  return report;
}

json Session::status() const {
  return json{{"learnGeneration", learnGeneration_},
              {"editGeneration", editGeneration_},
              {"dirty", dirty_},
              {"frameCount", project_.frames.size()},
              {"ruleCount", engine_.size()},
              {"playing", playing()}};
}

void Session::edited(int frameIndex) {
  ++editGeneration_;
  dirty_ = true;
  log(EventKind::kFrameEdited, {{"frameIndex", frameIndex}});
}

void Session::log(EventKind kind, json payload) {
  if (!log_) return;
  try {
    log_->append(kind, std::move(payload));
  } catch (const Error&) {
    // A broken log must not take the session down.
  }
}

}  // namespace mm
