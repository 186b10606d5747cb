#pragma once

// Frames, objects, inputs and the fact vocabulary the learner observes.

#include <array>
#include <compare>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mm {

inline constexpr int kDefaultGridWidth = 12;
inline constexpr int kDefaultGridHeight = 9;
inline constexpr int kDefaultVmax = 3;

enum class Button { kSpace = 0, kUp, kDown, kLeft, kRight };
inline constexpr std::size_t kButtonCount = 5;
inline constexpr std::array<std::string_view, kButtonCount> kButtonNames = {
    "space", "up", "down", "left", "right"};

std::optional<Button> button_from_name(std::string_view name);

using ButtonArray = std::array<bool, kButtonCount>;

struct SpriteRef {
  std::string name;
  int width = 1;
  int height = 1;

  auto operator<=>(const SpriteRef&) const = default;
};

struct GameObject {
  int id = 0;
  SpriteRef sprite;
  int x = 0;
  int y = 0;
  int vx = 0;
  int vy = 0;
  // Set when the user typed the velocity in; derivation leaves it alone.
  bool explicitVelocity = false;

  auto operator<=>(const GameObject&) const = default;
};

struct InputState {
  ButtonArray buttons{};
  ButtonArray prevButtons{};

  bool pressed(Button b) const { return buttons[static_cast<std::size_t>(b)]; }
  auto operator<=>(const InputState&) const = default;
};

struct Frame {
  int index = 0;
  int gridWidth = kDefaultGridWidth;
  int gridHeight = kDefaultGridHeight;
  std::vector<GameObject> objects;  // kept sorted by id
  InputState input;

  const GameObject* find(int id) const;
  auto operator<=>(const Frame&) const = default;
};

// ---------------------------------------------------------------------------
// Facts

struct AnimationFact {
  int object = 0;
  std::string sprite;
  int width = 1;
  int height = 1;
  auto operator<=>(const AnimationFact&) const = default;
};
struct VelocityXFact {
  int object = 0;
  int value = 0;
  auto operator<=>(const VelocityXFact&) const = default;
};
struct VelocityYFact {
  int object = 0;
  int value = 0;
  auto operator<=>(const VelocityYFact&) const = default;
};
struct PositionXFact {
  int object = 0;
  int value = 0;
  auto operator<=>(const PositionXFact&) const = default;
};
struct PositionYFact {
  int object = 0;
  int value = 0;
  auto operator<=>(const PositionYFact&) const = default;
};
// Input button state; `name` is a button name, optionally suffixed "Prev".
struct VariableFact {
  std::string name;
  bool value = false;
  auto operator<=>(const VariableFact&) const = default;
};
// Signed offset a.x - b.x between two touching objects.
struct RelationshipXFact {
  int a = 0;
  int b = 0;
  int offset = 0;
  auto operator<=>(const RelationshipXFact&) const = default;
};
struct RelationshipYFact {
  int a = 0;
  int b = 0;
  int offset = 0;
  auto operator<=>(const RelationshipYFact&) const = default;
};
// The object id is not present in the frame.
struct EmptyFact {
  int object = 0;
  auto operator<=>(const EmptyFact&) const = default;
};

// Alternative order is the fact tag order used for slots and sorting.
using Fact = std::variant<AnimationFact, VelocityXFact, VelocityYFact, PositionXFact,
                          PositionYFact, VariableFact, RelationshipXFact, RelationshipYFact,
                          EmptyFact>;

enum class FactTag {
  kAnimation = 0,
  kVelocityX,
  kVelocityY,
  kPositionX,
  kPositionY,
  kVariable,
  kRelationshipX,
  kRelationshipY,
  kEmpty,
};

using FactSet = std::set<Fact>;

inline FactTag tag_of(const Fact& f) { return static_cast<FactTag>(f.index()); }
std::string_view tag_name(FactTag tag);  // "VelocityYFact", ...

// Object id an object-level fact refers to (Animation, velocity, position, Empty).
std::optional<int> object_of(const Fact& f);
bool is_object_fact(const Fact& f);
bool is_relationship(const Fact& f);

// Pairing key of a fact. Empty facts occupy the Animation slot of their id.
struct Slot {
  FactTag tag = FactTag::kAnimation;
  int a = -1;
  int b = -1;
  std::string name;
  auto operator<=>(const Slot&) const = default;
};

Slot slot_of(const Fact& f);
std::string to_string(const Slot& s);

// Rule-listing rendering, e.g. "VelocityYFact: [0, -1.0]".
std::string format_fact(const Fact& f);

// ---------------------------------------------------------------------------
// Frame operations

// Throws MalformedFrameError on duplicate ids, out-of-grid objects or bad sprites.
void validate_frame(const Frame& frame);

// Fills vx/vy from consecutive positions. Displacements beyond vmax are
// teleports and keep the previous frame's velocity.
std::vector<Frame> derive_velocities(std::span<const Frame> frames, int vmax = kDefaultVmax);

// Sets each frame's prevButtons from the preceding frame's buttons.
std::vector<Frame> link_inputs(std::span<const Frame> frames);

// Validation, consecutive re-indexing, input linking and velocity derivation.
std::vector<Frame> prepare_demonstration(std::span<const Frame> frames,
                                         int vmax = kDefaultVmax);

std::set<int> universe_ids(std::span<const Frame> frames);

struct Box {
  int id = 0;
  int x = 0;
  int y = 0;
  int width = 1;
  int height = 1;
};

// Mirrored RelationshipX/Y facts for every ordered pair of boxes whose
// Chebyshev gap is at most one cell.
std::vector<Fact> relationship_facts(std::span<const Box> boxes);

FactSet extract_facts(const Frame& frame, const std::set<int>& universeIds);

// Facts in presentation order: variables (current then Prev, fixed button
// order), then per object by ascending id (VelocityY, VelocityX, Animation,
// PositionY, PositionX), then relationships, then empties.
std::vector<Fact> presentation_order(const FactSet& facts);

}  // namespace mm
