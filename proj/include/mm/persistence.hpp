#pragma once

// Project files, engine serialization and the event log.
//
//   *.mmproj        project JSON (schemaVersion 1)
//   *.engine.json   structured engine
//   *.engine.txt    rule listing, one RULE block per rule
//   events.jsonl    append-only event log, one JSON object per line

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "mm/engine.hpp"
#include "mm/learner.hpp"

namespace mm {

inline constexpr int kSchemaVersion = 1;

struct ConfigOverrides {
  std::optional<int> theta;
  std::optional<int> maxIterations;
  std::optional<int> vmax;
  std::optional<bool> kinematics;

  LearnerConfig apply(LearnerConfig base) const;
  bool operator==(const ConfigOverrides&) const = default;
};

struct Project {
  std::string name;
  int gridWidth = kDefaultGridWidth;
  int gridHeight = kDefaultGridHeight;
  std::vector<SpriteRef> sprites;
  std::vector<Frame> frames;
  std::optional<Engine> engine;
  ConfigOverrides config;

  const SpriteRef* sprite(const std::string& name) const;
  bool operator==(const Project&) const = default;
};

// The project's frames ready for learning or evaluation (see
// prepare_demonstration), using the project's vmax.
std::vector<Frame> prepared_frames(const Project& project);

// Throws SchemaError if a frame uses an undeclared sprite (or one whose
// extents disagree with the declaration) or has the wrong grid size.
void validate_project(const Project& project);

// JSON conversions. Parsing throws SchemaError naming the offending path.
nlohmann::json fact_to_json(const Fact& fact);
Fact fact_from_json(const nlohmann::json& j, const std::string& path = "");
// Button maps keyed by button name; absent buttons are released.
nlohmann::json buttons_to_json(const ButtonArray& buttons);
ButtonArray buttons_from_json(const nlohmann::json& j, const std::string& path = "");
nlohmann::json frame_to_json(const Frame& frame);
// Objects name their sprite; the name must be one of `sprites`.
Frame frame_from_json(const nlohmann::json& j, std::span<const SpriteRef> sprites, int gridWidth,
                      int gridHeight, const std::string& path = "");
nlohmann::json engine_to_json(const Engine& engine);
Engine engine_from_json(const nlohmann::json& j, const std::string& path = "");
nlohmann::json project_to_json(const Project& project);
Project project_from_json(const nlohmann::json& j);

// Parses text, reporting syntax errors with line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& source = "input");

std::string export_engine_json(const Engine& engine);
Engine import_engine_json(const std::string& text);

// One "RULE: <id> <pre>-><post>" header per rule followed by its
// conditions indented by four spaces, each line newline-terminated.
std::string export_engine_text(const Engine& engine);

std::string serialize_project(const Project& project);
Project deserialize_project(const std::string& text, const std::string& source = "input");

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

void save_project(const Project& project, const std::filesystem::path& path);
Project load_project(const std::filesystem::path& path);

void save_engine(const Engine& engine, const std::filesystem::path& path);
Engine load_engine(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Event log

enum class EventKind {
  kFrameEdited,
  kPredictionShown,
  kPredictionAccepted,
  kLearnStarted,
  kLearnFinished,
  kPlayStarted,
  kPlayEnded,
  kProjectSaved,
};

std::string_view event_kind_name(EventKind kind);
std::optional<EventKind> event_kind_from_name(std::string_view name);

struct EventRecord {
  std::int64_t timestamp = 0;  // ms since epoch
  EventKind kind = EventKind::kFrameEdited;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const EventRecord&) const = default;
};

// Appends one JSON line. Throws IoError if the file cannot be opened.
void append_event(const std::filesystem::path& logPath, const EventRecord& record);
std::vector<EventRecord> read_events(const std::filesystem::path& logPath);

// Number of frame-edited events per frame index.
std::map<int, int> frame_edit_counts(const std::vector<EventRecord>& events);

// Appender that stamps records with the wall clock, never going backwards.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path) : path_(std::move(path)) {}
  void append(EventKind kind, nlohmann::json payload = nlohmann::json::object());
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::int64_t last_ = 0;
};

}  // namespace mm
