#include "mm/runtime.hpp"

#include <map>

namespace mm {

namespace {

void set_variables(FactSet& facts, const ButtonArray& current, const ButtonArray& previous) {
  std::erase_if(facts, [](const Fact& f) { return tag_of(f) == FactTag::kVariable; });
  for (std::size_t i = 0; i < kButtonCount; ++i) {
    facts.insert(VariableFact{std::string(kButtonNames[i]), current[i]});
    facts.insert(VariableFact{std::string(kButtonNames[i]) + "Prev", previous[i]});
  }
}

}  // namespace

Frame facts_to_frame(const FactSet& facts, int gridWidth, int gridHeight, int index) {
  struct Partial {
    std::optional<SpriteRef> sprite;
    std::optional<int> x, y;
    int vx = 0, vy = 0;
  };
  std::map<int, Partial> parts;
  Frame frame;
  frame.index = index;
  frame.gridWidth = gridWidth;
  frame.gridHeight = gridHeight;
  for (const auto& f : facts) {
    if (const auto* a = std::get_if<AnimationFact>(&f)) {
      parts[a->object].sprite = SpriteRef{a->sprite, a->width, a->height};
    } else if (const auto* p = std::get_if<PositionXFact>(&f)) {
      parts[p->object].x = p->value;
    } else if (const auto* p = std::get_if<PositionYFact>(&f)) {
      parts[p->object].y = p->value;
    } else if (const auto* v = std::get_if<VelocityXFact>(&f)) {
      parts[v->object].vx = v->value;
    } else if (const auto* v = std::get_if<VelocityYFact>(&f)) {
      parts[v->object].vy = v->value;
    } else if (const auto* var = std::get_if<VariableFact>(&f)) {
      std::string_view name = var->name;
      const bool prev = name.ends_with("Prev");
      if (prev) name.remove_suffix(4);
      if (auto b = button_from_name(name)) {
        auto& arr = prev ? frame.input.prevButtons : frame.input.buttons;
        arr[static_cast<std::size_t>(*b)] = var->value;
      }
    }
  }
  for (const auto& [id, p] : parts) {
    if (!p.sprite || !p.x || !p.y) continue;
    if (*p.x < 0 || *p.x >= gridWidth || *p.y < 0 || *p.y >= gridHeight) continue;
    frame.objects.push_back(GameObject{id, *p.sprite, *p.x, *p.y, p.vx, p.vy, false});
  }
  return frame;
}

PlaySession::PlaySession(Engine engine, const Frame& initialFrame, std::set<int> universeIds,
                         LearnerConfig config)
    : engine_(std::move(engine)), universe_(std::move(universeIds)), config_(config) {
  for (const auto& o : initialFrame.objects) universe_.insert(o.id);
  Frame start = initialFrame;
  start.input = InputState{};
  facts_ = extract_facts(start, universe_);
  options_.kinematics = config_.kinematics;
  options_.gridWidth = initialFrame.gridWidth;
  options_.gridHeight = initialFrame.gridHeight;
}

Frame PlaySession::step(const ButtonArray& buttons) {
  set_variables(facts_, buttons, buttons_);
  auto result = predict_facts(engine_, facts_, options_);
  facts_ = std::move(result.predictedFacts);
  // Input is never predicted during play; the held buttons stay authoritative.
  set_variables(facts_, buttons, buttons_);
  buttons_ = buttons;
  lastFired_ = std::move(result.firedRuleIds);
  ++tick_;
  return current_frame();
}

Frame PlaySession::current_frame() const {
  return facts_to_frame(facts_, options_.gridWidth, options_.gridHeight, tick_);
}

PlaySession start_play(const Engine& engine, const Frame& initialFrame,
                       const std::set<int>& universeIds, const LearnerConfig& config) {
  return PlaySession(engine, initialFrame, universeIds, config);
}

std::vector<Frame> run_trace(const Engine& engine, const Frame& frame0,
                             std::span<const ButtonArray> inputTrace, const LearnerConfig& config) {
  PlaySession session(engine, frame0, {}, config);
  std::vector<Frame> out;
  out.reserve(inputTrace.size());
  for (const auto& buttons : inputTrace) out.push_back(session.step(buttons));
  return out;
}

}  // namespace mm
