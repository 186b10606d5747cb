#include "mm/fact.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "mm/error.hpp"

namespace mm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string real(int v) { return std::to_string(v) + ".0"; }

// Zero velocities print as a bare integer, anything else with one decimal.
std::string velocity(int v) { return v == 0 ? std::string("0") : real(v); }

const char* py_bool(bool b) { return b ? "True" : "False"; }

}  // namespace

std::optional<Button> button_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kButtonCount; ++i) {
    if (kButtonNames[i] == name) return static_cast<Button>(i);
  }
  return std::nullopt;
}

const GameObject* Frame::find(int id) const {
  auto it = std::lower_bound(objects.begin(), objects.end(), id,
                             [](const GameObject& o, int v) { return o.id < v; });
  if (it != objects.end() && it->id == id) return &*it;
  // Tolerate unsorted input.
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

std::string_view tag_name(FactTag tag) {
  switch (tag) {
    case FactTag::kAnimation: return "AnimationFact";
    case FactTag::kVelocityX: return "VelocityXFact";
    case FactTag::kVelocityY: return "VelocityYFact";
    case FactTag::kPositionX: return "PositionXFact";
    case FactTag::kPositionY: return "PositionYFact";
    case FactTag::kVariable: return "VariableFact";
    case FactTag::kRelationshipX: return "RelationshipXFact";
    case FactTag::kRelationshipY: return "RelationshipYFact";
    case FactTag::kEmpty: return "EmptyFact";
  }
  return "?";
}

std::optional<int> object_of(const Fact& f) {
  return std::visit(Overloaded{
                        [](const AnimationFact& x) -> std::optional<int> { return x.object; },
                        [](const VelocityXFact& x) -> std::optional<int> { return x.object; },
                        [](const VelocityYFact& x) -> std::optional<int> { return x.object; },
                        [](const PositionXFact& x) -> std::optional<int> { return x.object; },
                        [](const PositionYFact& x) -> std::optional<int> { return x.object; },
                        [](const EmptyFact& x) -> std::optional<int> { return x.object; },
                        [](const auto&) -> std::optional<int> { return std::nullopt; },
                    },
                    f);
}

bool is_object_fact(const Fact& f) { return object_of(f).has_value(); }

bool is_relationship(const Fact& f) {
  return tag_of(f) == FactTag::kRelationshipX || tag_of(f) == FactTag::kRelationshipY;
}

Slot slot_of(const Fact& f) {
  return std::visit(
      Overloaded{
          [](const AnimationFact& x) { return Slot{FactTag::kAnimation, x.object, -1, {}}; },
          [](const VelocityXFact& x) { return Slot{FactTag::kVelocityX, x.object, -1, {}}; },
          [](const VelocityYFact& x) { return Slot{FactTag::kVelocityY, x.object, -1, {}}; },
          [](const PositionXFact& x) { return Slot{FactTag::kPositionX, x.object, -1, {}}; },
          [](const PositionYFact& x) { return Slot{FactTag::kPositionY, x.object, -1, {}}; },
          [](const VariableFact& x) { return Slot{FactTag::kVariable, -1, -1, x.name}; },
          [](const RelationshipXFact& x) { return Slot{FactTag::kRelationshipX, x.a, x.b, {}}; },
          [](const RelationshipYFact& x) { return Slot{FactTag::kRelationshipY, x.a, x.b, {}}; },
          [](const EmptyFact& x) { return Slot{FactTag::kAnimation, x.object, -1, {}}; },
      },
      f);
}

std::string to_string(const Slot& s) {
  std::ostringstream os;
  os << tag_name(s.tag) << "(";
  if (s.tag == FactTag::kVariable) {
    os << s.name;
  } else {
    os << s.a;
    if (s.b >= 0) os << "," << s.b;
  }
  os << ")";
  return os.str();
}

std::string format_fact(const Fact& f) {
  std::ostringstream os;
  os << tag_name(tag_of(f)) << ": [";
  std::visit(Overloaded{
                 [&](const AnimationFact& x) {
                   os << x.object << ", '" << x.sprite << "', " << real(x.width) << ", "
                      << real(x.height);
                 },
                 [&](const VelocityXFact& x) { os << x.object << ", " << velocity(x.value); },
                 [&](const VelocityYFact& x) { os << x.object << ", " << velocity(x.value); },
                 [&](const PositionXFact& x) { os << x.object << ", " << real(x.value); },
                 [&](const PositionYFact& x) { os << x.object << ", " << real(x.value); },
                 [&](const VariableFact& x) { os << "'" << x.name << "', " << py_bool(x.value); },
                 [&](const RelationshipXFact& x) {
                   os << x.a << ", " << x.b << ", " << real(x.offset);
                 },
                 [&](const RelationshipYFact& x) {
                   os << x.a << ", " << x.b << ", " << real(x.offset);
                 },
                 [&](const EmptyFact& x) { os << x.object; },
             },
             f);
  os << "]";
  return os.str();
}

void validate_frame(const Frame& frame) {
  if (frame.gridWidth < 1 || frame.gridHeight < 1)
    throw MalformedFrameError("frame " + std::to_string(frame.index) + ": grid must be at least 1x1");
  std::set<int> seen;
  for (const auto& o : frame.objects) {
    const std::string where =
        "frame " + std::to_string(frame.index) + ", object " + std::to_string(o.id);
    if (o.id < 0) throw MalformedFrameError(where + ": negative id");
    if (!seen.insert(o.id).second) throw MalformedFrameError(where + ": duplicate object id");
    if (o.sprite.name.empty()) throw MalformedFrameError(where + ": empty sprite name");
    if (o.sprite.width < 1 || o.sprite.height < 1)
      throw MalformedFrameError(where + ": sprite extents must be positive");
    if (o.x < 0 || o.x >= frame.gridWidth || o.y < 0 || o.y >= frame.gridHeight)
      throw MalformedFrameError(where + ": position outside the grid");
  }
}

namespace {

int derive_axis(int cur, int prev, int prevVelocity, int vmax) {
  const int delta = cur - prev;
  if (delta > vmax || delta < -vmax) return prevVelocity;  // teleport
  return delta;
}

}  // namespace

std::vector<Frame> derive_velocities(std::span<const Frame> frames, int vmax) {
  if (vmax < 1) throw InvalidArgumentError("vmax must be positive");
  std::vector<Frame> out(frames.begin(), frames.end());
  for (auto& f : out) {
    validate_frame(f);
    std::sort(f.objects.begin(), f.objects.end(),
              [](const GameObject& a, const GameObject& b) { return a.id < b.id; });
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (auto& o : out[i].objects) {
      if (o.explicitVelocity) continue;
      const GameObject* before = i > 0 ? out[i - 1].find(o.id) : nullptr;
      if (before == nullptr) {
        o.vx = 0;
        o.vy = 0;
        continue;
      }
      o.vx = derive_axis(o.x, before->x, before->vx, vmax);
      o.vy = derive_axis(o.y, before->y, before->vy, vmax);
    }
  }
  return out;
}

std::vector<Frame> link_inputs(std::span<const Frame> frames) {
  std::vector<Frame> out(frames.begin(), frames.end());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].input.prevButtons = i == 0 ? ButtonArray{} : out[i - 1].input.buttons;
  return out;
}

std::vector<Frame> prepare_demonstration(std::span<const Frame> frames, int vmax) {
  std::vector<Frame> out(frames.begin(), frames.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].index = static_cast<int>(i);
    if (out[i].gridWidth != out.front().gridWidth || out[i].gridHeight != out.front().gridHeight)
      throw MalformedFrameError("frame " + std::to_string(i) + ": grid size differs from frame 0");
  }
  out = link_inputs(out);
  return derive_velocities(out, vmax);
}

std::set<int> universe_ids(std::span<const Frame> frames) {
  std::set<int> ids;
  for (const auto& f : frames)
    for (const auto& o : f.objects) ids.insert(o.id);
  return ids;
}

namespace {

// Gap between closed integer intervals [lo1, hi1] and [lo2, hi2]; 0 when they overlap.
int interval_gap(int lo1, int hi1, int lo2, int hi2) {
  return std::max({0, lo2 - hi1, lo1 - hi2});
}

}  // namespace

std::vector<Fact> relationship_facts(std::span<const Box> boxes) {
  std::vector<Fact> out;
  for (const auto& a : boxes) {
    for (const auto& b : boxes) {
      if (a.id == b.id) continue;
      const int gx = interval_gap(a.x, a.x + a.width - 1, b.x, b.x + b.width - 1);
      const int gy = interval_gap(a.y, a.y + a.height - 1, b.y, b.y + b.height - 1);
      if (std::max(gx, gy) > 1) continue;
      out.emplace_back(RelationshipXFact{a.id, b.id, a.x - b.x});
      out.emplace_back(RelationshipYFact{a.id, b.id, a.y - b.y});
    }
  }
  return out;
}

FactSet extract_facts(const Frame& frame, const std::set<int>& universeIds) {
  validate_frame(frame);
  FactSet facts;
  std::vector<Box> boxes;
  for (const auto& o : frame.objects) {
    facts.insert(AnimationFact{o.id, o.sprite.name, o.sprite.width, o.sprite.height});
    facts.insert(VelocityXFact{o.id, o.vx});
    facts.insert(VelocityYFact{o.id, o.vy});
    facts.insert(PositionXFact{o.id, o.x});
    facts.insert(PositionYFact{o.id, o.y});
    boxes.push_back(Box{o.id, o.x, o.y, o.sprite.width, o.sprite.height});
  }
  for (std::size_t i = 0; i < kButtonCount; ++i) {
    facts.insert(VariableFact{std::string(kButtonNames[i]), frame.input.buttons[i]});
    facts.insert(VariableFact{std::string(kButtonNames[i]) + "Prev", frame.input.prevButtons[i]});
  }
  for (int id : universeIds)
    if (frame.find(id) == nullptr) facts.insert(EmptyFact{id});
  for (auto& r : relationship_facts(boxes)) facts.insert(std::move(r));
  return facts;
}

namespace {

int variable_rank(const std::string& name) {
  for (std::size_t i = 0; i < kButtonCount; ++i) {
    if (name == kButtonNames[i]) return static_cast<int>(i);
    if (name == std::string(kButtonNames[i]) + "Prev") return static_cast<int>(kButtonCount + i);
  }
  return static_cast<int>(2 * kButtonCount);
}

int object_rank(FactTag tag) {
  switch (tag) {
    case FactTag::kVelocityY: return 0;
    case FactTag::kVelocityX: return 1;
    case FactTag::kAnimation: return 2;
    case FactTag::kPositionY: return 3;
    case FactTag::kPositionX: return 4;
    default: return 5;
  }
}

}  // namespace

std::vector<Fact> presentation_order(const FactSet& facts) {
  struct Key {
    int group;  // 0 variables, 1 objects, 2 relationships, 3 empties
    int major;
    int minor;
    auto operator<=>(const Key&) const = default;
  };
  auto key = [](const Fact& f) -> Key {
    const FactTag tag = tag_of(f);
    if (tag == FactTag::kVariable) return {0, variable_rank(std::get<VariableFact>(f).name), 0};
    if (tag == FactTag::kEmpty) return {3, std::get<EmptyFact>(f).object, 0};
    if (is_relationship(f)) return {2, 0, 0};
    return {1, *object_of(f), object_rank(tag)};
  };
  std::vector<Fact> out(facts.begin(), facts.end());
  // Stable on the underlying set order, so ties fall back to fact ordering.
  std::stable_sort(out.begin(), out.end(),
                   [&](const Fact& a, const Fact& b) { return key(a) < key(b); });
  return out;
}

}  // namespace mm
