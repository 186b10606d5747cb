#include "mm/persistence.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "mm/error.hpp"

namespace mm {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  throw SchemaError("at " + (path.empty() ? std::string("/") : path) + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) schema_fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_fail(path, std::string("missing field '") + key + "'");
  return *it;
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) schema_fail(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    schema_fail(path, "integer out of range");
  return static_cast<int>(v);
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) schema_fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) schema_fail(path, "expected a string");
  return j.get<std::string>();
}

int int_field(const json& j, const char* key, const std::string& path) {
  return as_int(member(j, key, path), path + "/" + key);
}

int int_field_or(const json& j, const char* key, int fallback, const std::string& path) {
  auto it = j.find(key);
  return it == j.end() ? fallback : as_int(*it, path + "/" + key);
}

const json& array_field(const json& j, const char* key, const std::string& path) {
  const json& a = member(j, key, path);
  if (!a.is_array()) schema_fail(path + "/" + key, "expected an array");
  return a;
}

}  // namespace

json buttons_to_json(const ButtonArray& b) {
  json out = json::object();
  for (std::size_t i = 0; i < kButtonCount; ++i) out[std::string(kButtonNames[i])] = b[i];
  return out;
}

ButtonArray buttons_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) schema_fail(path, "expected an object of button states");
  ButtonArray out{};
  for (const auto& [key, value] : j.items()) {
    auto b = button_from_name(key);
    if (!b) schema_fail(path, "unknown button '" + key + "'");
    out[static_cast<std::size_t>(*b)] = as_bool(value, path + "/" + key);
  }
  return out;
}

LearnerConfig ConfigOverrides::apply(LearnerConfig base) const {
  if (theta) base.theta = *theta;
  if (maxIterations) base.maxIterations = *maxIterations;
  if (vmax) base.vmax = *vmax;
  if (kinematics) base.kinematics = *kinematics;
  return base;
}

const SpriteRef* Project::sprite(const std::string& spriteName) const {
  for (const auto& s : sprites)
    if (s.name == spriteName) return &s;
  return nullptr;
}

void validate_project(const Project& project) {
  for (std::size_t i = 0; i < project.frames.size(); ++i) {
    const Frame& f = project.frames[i];
    const std::string where = "/frames/" + std::to_string(i);
    if (f.gridWidth != project.gridWidth || f.gridHeight != project.gridHeight)
      schema_fail(where, "grid size differs from the project grid");
    for (const auto& o : f.objects) {
      const SpriteRef* s = project.sprite(o.sprite.name);
      if (s == nullptr) schema_fail(where, "undeclared sprite '" + o.sprite.name + "'");
      if (*s != o.sprite) schema_fail(where, "sprite '" + o.sprite.name + "' extents differ");
    }
    try {
      validate_frame(f);
    } catch (const MalformedFrameError& e) {
      schema_fail(where, e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Facts

json fact_to_json(const Fact& fact) {
  return std::visit(
      Overloaded{
          [](const AnimationFact& x) {
            return json{{"type", "Animation"}, {"object", x.object}, {"sprite", x.sprite},
                        {"width", x.width}, {"height", x.height}};
          },
          [](const VelocityXFact& x) {
            return json{{"type", "VelocityX"}, {"object", x.object}, {"value", x.value}};
          },
          [](const VelocityYFact& x) {
            return json{{"type", "VelocityY"}, {"object", x.object}, {"value", x.value}};
          },
          [](const PositionXFact& x) {
            return json{{"type", "PositionX"}, {"object", x.object}, {"value", x.value}};
          },
          [](const PositionYFact& x) {
            return json{{"type", "PositionY"}, {"object", x.object}, {"value", x.value}};
          },
          [](const VariableFact& x) {
            return json{{"type", "Variable"}, {"name", x.name}, {"value", x.value}};
          },
          [](const RelationshipXFact& x) {
            return json{{"type", "RelationshipX"}, {"a", x.a}, {"b", x.b}, {"offset", x.offset}};
          },
          [](const RelationshipYFact& x) {
            return json{{"type", "RelationshipY"}, {"a", x.a}, {"b", x.b}, {"offset", x.offset}};
          },
          [](const EmptyFact& x) { return json{{"type", "Empty"}, {"object", x.object}}; },
      },
      fact);
}

Fact fact_from_json(const json& j, const std::string& path) {
  const std::string type = as_string(member(j, "type", path), path + "/type");
  auto obj = [&] { return int_field(j, "object", path); };
  auto val = [&] { return int_field(j, "value", path); };
  if (type == "Animation") {
    const std::string sprite = as_string(member(j, "sprite", path), path + "/sprite");
    if (sprite.empty()) schema_fail(path + "/sprite", "empty sprite name");
    return AnimationFact{obj(), sprite, int_field(j, "width", path), int_field(j, "height", path)};
  }
  if (type == "VelocityX") return VelocityXFact{obj(), val()};
  if (type == "VelocityY") return VelocityYFact{obj(), val()};
  if (type == "PositionX") return PositionXFact{obj(), val()};
  if (type == "PositionY") return PositionYFact{obj(), val()};
  if (type == "Variable") {
    return VariableFact{as_string(member(j, "name", path), path + "/name"),
                        as_bool(member(j, "value", path), path + "/value")};
  }
  if (type == "RelationshipX")
    return RelationshipXFact{int_field(j, "a", path), int_field(j, "b", path),
                             int_field(j, "offset", path)};
  if (type == "RelationshipY")
    return RelationshipYFact{int_field(j, "a", path), int_field(j, "b", path),
                             int_field(j, "offset", path)};
  if (type == "Empty") return EmptyFact{obj()};
  schema_fail(path + "/type", "unknown fact type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Frames

json frame_to_json(const Frame& frame) {
  json objects = json::array();
  for (const auto& o : frame.objects) {
    objects.push_back(json{{"id", o.id},
                           {"sprite", o.sprite.name},
                           {"x", o.x},
                           {"y", o.y},
                           {"vx", o.vx},
                           {"vy", o.vy},
                           {"explicitVelocity", o.explicitVelocity}});
  }
  return json{{"index", frame.index},
              {"objects", std::move(objects)},
              {"input",
               {{"buttons", buttons_to_json(frame.input.buttons)},
                {"prevButtons", buttons_to_json(frame.input.prevButtons)}}}};
}

Frame frame_from_json(const json& j, std::span<const SpriteRef> sprites, int gridWidth,
                      int gridHeight, const std::string& path) {
  Frame f;
  f.gridWidth = gridWidth;
  f.gridHeight = gridHeight;
  f.index = int_field_or(j, "index", 0, path);
  const json& objects = array_field(j, "objects", path);
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const std::string op = path + "/objects/" + std::to_string(k);
    const json& o = objects[k];
    GameObject g;
    g.id = int_field(o, "id", op);
    const std::string spriteName = as_string(member(o, "sprite", op), op + "/sprite");
    auto s = std::find_if(sprites.begin(), sprites.end(),
                          [&](const SpriteRef& r) { return r.name == spriteName; });
    if (s == sprites.end()) schema_fail(op + "/sprite", "undeclared sprite '" + spriteName + "'");
    g.sprite = *s;
    g.x = int_field(o, "x", op);
    g.y = int_field(o, "y", op);
    g.vx = int_field_or(o, "vx", 0, op);
    g.vy = int_field_or(o, "vy", 0, op);
    if (auto it = o.find("explicitVelocity"); it != o.end())
      g.explicitVelocity = as_bool(*it, op + "/explicitVelocity");
    f.objects.push_back(std::move(g));
  }
  std::sort(f.objects.begin(), f.objects.end(),
            [](const GameObject& a, const GameObject& b) { return a.id < b.id; });
  if (auto it = j.find("input"); it != j.end()) {
    if (!it->is_object()) schema_fail(path + "/input", "expected an object");
    if (auto b = it->find("buttons"); b != it->end())
      f.input.buttons = buttons_from_json(*b, path + "/input/buttons");
    if (auto b = it->find("prevButtons"); b != it->end())
      f.input.prevButtons = buttons_from_json(*b, path + "/input/prevButtons");
  }
  try {
    validate_frame(f);
  } catch (const MalformedFrameError& e) {
    schema_fail(path, e.what());
  }
  return f;
}

// ---------------------------------------------------------------------------
// Engines

json engine_to_json(const Engine& engine) {
  json rules = json::array();
  for (const auto& r : engine.rules()) {
    json conditions = json::array();
    for (const auto& c : r.conditions) conditions.push_back(fact_to_json(c));
    rules.push_back(json{{"id", r.id},
                         {"pre", fact_to_json(r.pre)},
                         {"post", fact_to_json(r.post)},
                         {"conditions", std::move(conditions)}});
  }
  return json{{"schemaVersion", kSchemaVersion},
              {"nextRuleId", engine.next_rule_id()},
              {"rules", std::move(rules)}};
}

namespace {

void check_version(const json& j, const std::string& path) {
  const int version = int_field(j, "schemaVersion", path);
  if (version != kSchemaVersion)
    throw VersionError("unsupported schemaVersion " + std::to_string(version) + " (expected " +
                       std::to_string(kSchemaVersion) + ")");
}

}  // namespace

Engine engine_from_json(const json& j, const std::string& path) {
  check_version(j, path);
  const json& rules = array_field(j, "rules", path);
  std::vector<Rule> out;
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const std::string rp = path + "/rules/" + std::to_string(k);
    const json& r = rules[k];
    Rule rule;
    rule.id = int_field(r, "id", rp);
    rule.pre = fact_from_json(member(r, "pre", rp), rp + "/pre");
    rule.post = fact_from_json(member(r, "post", rp), rp + "/post");
    const json& conds = array_field(r, "conditions", rp);
    for (std::size_t c = 0; c < conds.size(); ++c)
      rule.conditions.push_back(fact_from_json(conds[c], rp + "/conditions/" + std::to_string(c)));
    out.push_back(std::move(rule));
  }
  const int next = int_field(j, "nextRuleId", path);
  try {
    Engine engine(std::move(out), next);
    if (engine.next_rule_id() != next) schema_fail(path + "/nextRuleId", "not above every rule id");
    return engine;
  } catch (const InvalidArgumentError& e) {
    schema_fail(path + "/rules", e.what());
  }
}

std::string export_engine_json(const Engine& engine) { return engine_to_json(engine).dump(2) + "\n"; }

Engine import_engine_json(const std::string& text) {
  return engine_from_json(parse_json_text(text, "engine"));
}

std::string export_engine_text(const Engine& engine) {
  std::string out;
  for (const auto& r : engine.rules()) {
    out += "RULE: " + std::to_string(r.id) + " " + format_fact(r.pre) + "->" + format_fact(r.post) +
           "\n";
    for (const auto& c : r.conditions) out += "    " + format_fact(c) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projects

json project_to_json(const Project& project) {
  json sprites = json::array();
  for (const auto& s : project.sprites)
    sprites.push_back(json{{"name", s.name}, {"width", s.width}, {"height", s.height}});
  json frames = json::array();
  for (const auto& f : project.frames) frames.push_back(frame_to_json(f));
  json config = json::object();
  if (project.config.theta) config["theta"] = *project.config.theta;
  if (project.config.maxIterations) config["maxIterations"] = *project.config.maxIterations;
  if (project.config.vmax) config["vmax"] = *project.config.vmax;
  if (project.config.kinematics) config["kinematics"] = *project.config.kinematics;
  return json{{"schemaVersion", kSchemaVersion},
              {"name", project.name},
              {"grid", {{"width", project.gridWidth}, {"height", project.gridHeight}}},
              {"sprites", std::move(sprites)},
              {"frames", std::move(frames)},
              {"engine", project.engine ? engine_to_json(*project.engine) : json(nullptr)},
              {"config", std::move(config)}};
}

std::vector<Frame> prepared_frames(const Project& project) {
  return prepare_demonstration(project.frames, project.config.apply({}).vmax);
}

Project project_from_json(const json& j) {
  check_version(j, "");
  Project p;
  p.name = as_string(member(j, "name", ""), "/name");
  const json& grid = member(j, "grid", "");
  p.gridWidth = int_field(grid, "width", "/grid");
  p.gridHeight = int_field(grid, "height", "/grid");
  if (p.gridWidth < 1 || p.gridHeight < 1) schema_fail("/grid", "grid must be at least 1x1");

  const json& sprites = array_field(j, "sprites", "");
  for (std::size_t k = 0; k < sprites.size(); ++k) {
    const std::string sp = "/sprites/" + std::to_string(k);
    SpriteRef s{as_string(member(sprites[k], "name", sp), sp + "/name"),
                int_field(sprites[k], "width", sp), int_field(sprites[k], "height", sp)};
    if (s.name.empty() || s.width < 1 || s.height < 1) schema_fail(sp, "invalid sprite");
    if (p.sprite(s.name) != nullptr) schema_fail(sp, "duplicate sprite '" + s.name + "'");
    p.sprites.push_back(std::move(s));
  }

  const json& frames = array_field(j, "frames", "");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    Frame f = frame_from_json(frames[k], p.sprites, p.gridWidth, p.gridHeight,
                              "/frames/" + std::to_string(k));
    p.frames.push_back(std::move(f));
  }

  if (auto it = j.find("engine"); it != j.end() && !it->is_null())
    p.engine = engine_from_json(*it, "/engine");

  if (auto it = j.find("config"); it != j.end()) {
    if (!it->is_object()) schema_fail("/config", "expected an object");
    if (it->contains("theta")) p.config.theta = int_field(*it, "theta", "/config");
    if (it->contains("maxIterations"))
      p.config.maxIterations = int_field(*it, "maxIterations", "/config");
    if (it->contains("vmax")) p.config.vmax = int_field(*it, "vmax", "/config");
    if (it->contains("kinematics"))
      p.config.kinematics = as_bool(it->at("kinematics"), "/config/kinematics");
  }
  validate_project(p);
  return p;
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Convert the byte offset into a line/column pair.
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SchemaError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": malformed JSON (" + e.what() + ")");
  }
}

std::string serialize_project(const Project& project) { return project_to_json(project).dump(2) + "\n"; }

Project deserialize_project(const std::string& text, const std::string& source) {
  try {
    return project_from_json(parse_json_text(text, source));
  } catch (const SchemaError& e) {
    const std::string msg = e.what();
    if (msg.rfind(source + ":", 0) == 0) throw;
    throw SchemaError(source + ": " + msg);
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void save_project(const Project& project, const std::filesystem::path& path) {
  validate_project(project);
  write_text_file(path, serialize_project(project));
}

Project load_project(const std::filesystem::path& path) {
  return deserialize_project(read_text_file(path), path.string());
}

void save_engine(const Engine& engine, const std::filesystem::path& path) {
  write_text_file(path, export_engine_json(engine));
}

Engine load_engine(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return engine_from_json(parse_json_text(text, path.string()));
  } catch (const SchemaError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string() + ":", 0) == 0) throw;
    throw SchemaError(path.string() + ": " + msg);
  }
}

// ---------------------------------------------------------------------------
// Event log

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kEventNames = {{
    {EventKind::kFrameEdited, "frame-edited"},
    {EventKind::kPredictionShown, "prediction-shown"},
    {EventKind::kPredictionAccepted, "prediction-accepted"},
    {EventKind::kLearnStarted, "learn-started"},
    {EventKind::kLearnFinished, "learn-finished"},
    {EventKind::kPlayStarted, "play-started"},
    {EventKind::kPlayEnded, "play-ended"},
    {EventKind::kProjectSaved, "project-saved"},
}};

}  // namespace

std::string_view event_kind_name(EventKind kind) {
  for (const auto& [k, n] : kEventNames)
    if (k == kind) return n;
  return "?";
}

std::optional<EventKind> event_kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kEventNames)
    if (n == name) return k;
  return std::nullopt;
}

void append_event(const std::filesystem::path& logPath, const EventRecord& record) {
  std::ofstream out(logPath, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + logPath.string());
  const json line{{"timestamp", record.timestamp},
                  {"kind", event_kind_name(record.kind)},
                  {"payload", record.payload}};
  out << line.dump() << "\n";
  if (!out) throw IoError("failed appending to " + logPath.string());
}

std::vector<EventRecord> read_events(const std::filesystem::path& logPath) {
  std::ifstream in(logPath, std::ios::binary);
  if (!in) throw IoError("cannot read " + logPath.string());
  std::vector<EventRecord> out;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    const std::string where = logPath.string() + ":" + std::to_string(lineNo);
    const json j = parse_json_text(line, where);
    EventRecord r;
    const json& ts = member(j, "timestamp", where);
    if (!ts.is_number_integer()) schema_fail(where + "/timestamp", "expected an integer");
    r.timestamp = ts.get<std::int64_t>();
    auto kind = event_kind_from_name(as_string(member(j, "kind", where), where + "/kind"));
    if (!kind) schema_fail(where + "/kind", "unknown event kind");
    r.kind = *kind;
    if (auto it = j.find("payload"); it != j.end()) r.payload = *it;
    out.push_back(std::move(r));
  }
  return out;
}

std::map<int, int> frame_edit_counts(const std::vector<EventRecord>& events) {
  std::map<int, int> counts;
  for (const auto& e : events) {
    if (e.kind != EventKind::kFrameEdited) continue;
    auto it = e.payload.find("frameIndex");
    if (it != e.payload.end() && it->is_number_integer()) ++counts[it->get<int>()];
  }
  return counts;
}

void EventLog::append(EventKind kind, json payload) {
  using namespace std::chrono;
  const auto now =
      duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  last_ = std::max<std::int64_t>(last_, now);
  append_event(path_, EventRecord{last_, kind, std::move(payload)});
}

}  // namespace mm
