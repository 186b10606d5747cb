#include "mm/engine.hpp"

#include <algorithm>
#include <map>

#include "mm/error.hpp"

namespace mm {

namespace {

FactSet as_set(const std::vector<Fact>& facts) { return FactSet(facts.begin(), facts.end()); }

bool is_appear(const Rule& r) {
  return tag_of(r.pre) == FactTag::kEmpty && tag_of(r.post) != FactTag::kEmpty;
}

}  // namespace

bool operator==(const Rule& a, const Rule& b) {
  return a.id == b.id && a.pre == b.pre && a.post == b.post &&
         a.conditions.size() == b.conditions.size() &&
         as_set(a.conditions) == as_set(b.conditions);
}

bool same_behavior(const Rule& a, const Rule& b) {
  return a.pre == b.pre && a.post == b.post && as_set(a.conditions) == as_set(b.conditions);
}

void validate_rule(const Rule& rule) {
  const std::string where = "rule " + std::to_string(rule.id);
  if (rule.pre == rule.post) throw InvalidArgumentError(where + ": pre and post effects are equal");
  if (rule.conditions.empty()) throw InvalidArgumentError(where + ": no conditions");
  if (as_set(rule.conditions).size() != rule.conditions.size())
    throw InvalidArgumentError(where + ": duplicate condition");
  if (slot_of(rule.pre) == slot_of(rule.post)) return;
  const bool preEmpty = tag_of(rule.pre) == FactTag::kEmpty;
  const bool postEmpty = tag_of(rule.post) == FactTag::kEmpty;
  if ((preEmpty && is_object_fact(rule.post)) || (postEmpty && is_object_fact(rule.pre))) {
    if (object_of(rule.pre) == object_of(rule.post)) return;
  }
  throw InvalidArgumentError(where + ": pre and post effects target incompatible slots");
}

Slot conflict_key(const Rule& rule) {
  return is_appear(rule) ? slot_of(rule.post) : slot_of(rule.pre);
}

Engine::Engine(std::vector<Rule> rules, int nextRuleId)
    : rules_(std::move(rules)), nextRuleId_(nextRuleId) {
  std::set<int> ids;
  for (const auto& r : rules_) {
    validate_rule(r);
    if (!ids.insert(r.id).second)
      throw InvalidArgumentError("duplicate rule id " + std::to_string(r.id));
    if (r.id >= nextRuleId_) nextRuleId_ = r.id + 1;
  }
}

const Rule* Engine::find(int ruleId) const {
  for (const auto& r : rules_)
    if (r.id == ruleId) return &r;
  return nullptr;
}

Engine Engine::with_rule(Fact pre, Fact post, std::vector<Fact> conditions) const {
  Rule rule{nextRuleId_, std::move(pre), std::move(post), std::move(conditions)};
  validate_rule(rule);
  Engine out = *this;
  out.rules_.push_back(std::move(rule));
  ++out.nextRuleId_;
  return out;
}

Engine Engine::with_conditions(int ruleId, std::vector<Fact> conditions) const {
  Engine out = *this;
  for (auto& r : out.rules_) {
    if (r.id != ruleId) continue;
    r.conditions = std::move(conditions);
    validate_rule(r);
    return out;
  }
  throw NotFoundError("no rule with id " + std::to_string(ruleId));
}

Engine Engine::without_rule(int ruleId) const {
  Engine out = *this;
  auto it = std::find_if(out.rules_.begin(), out.rules_.end(),
                         [&](const Rule& r) { return r.id == ruleId; });
  if (it == out.rules_.end()) throw NotFoundError("no rule with id " + std::to_string(ruleId));
  out.rules_.erase(it);
  return out;
}

std::size_t Engine::complexity() const {
  std::size_t n = 0;
  for (const auto& r : rules_) n += r.conditions.size();
  return n;
}

bool rule_fires(const Rule& rule, const FactSet& facts) {
  if (!facts.contains(rule.pre)) return false;
  if (rule.conditions.empty()) return false;
  return std::all_of(rule.conditions.begin(), rule.conditions.end(),
                     [&](const Fact& c) { return facts.contains(c); });
}

namespace {

struct ObjectView {
  const AnimationFact* animation = nullptr;
  std::optional<int> x, y, vx, vy;
};

std::map<int, ObjectView> collect_objects(const FactSet& facts) {
  std::map<int, ObjectView> objects;
  for (const auto& f : facts) {
    if (const auto* a = std::get_if<AnimationFact>(&f)) objects[a->object].animation = a;
    else if (const auto* p = std::get_if<PositionXFact>(&f)) objects[p->object].x = p->value;
    else if (const auto* p = std::get_if<PositionYFact>(&f)) objects[p->object].y = p->value;
    else if (const auto* v = std::get_if<VelocityXFact>(&f)) objects[v->object].vx = v->value;
    else if (const auto* v = std::get_if<VelocityYFact>(&f)) objects[v->object].vy = v->value;
  }
  return objects;
}

void erase_object_facts(FactSet& facts, int id) {
  std::erase_if(facts, [id](const Fact& f) {
    return tag_of(f) != FactTag::kEmpty && object_of(f) == std::optional<int>(id);
  });
}

bool has_animation(const FactSet& facts, int id) {
  return std::any_of(facts.begin(), facts.end(), [id](const Fact& f) {
    const auto* a = std::get_if<AnimationFact>(&f);
    return a != nullptr && a->object == id;
  });
}

}  // namespace

PredictionResult predict_facts(const Engine& engine, const FactSet& facts,
                               const PredictOptions& options) {
  PredictionResult result;
  std::set<Slot> claimed;
  std::vector<const Rule*> fired;
  for (const auto& rule : engine.rules()) {
    if (!rule_fires(rule, facts)) continue;
    if (!claimed.insert(conflict_key(rule)).second) continue;
    fired.push_back(&rule);
    result.firedRuleIds.push_back(rule.id);
  }

  FactSet next = facts;
  for (const Rule* r : fired) next.erase(r->pre);
  std::set<int> lifecycleIds;
  std::set<Slot> setByRule;
  for (const Rule* r : fired) {
    next.insert(r->post);
    setByRule.insert(slot_of(r->post));
    if (tag_of(r->pre) == FactTag::kEmpty || tag_of(r->post) == FactTag::kEmpty)
      lifecycleIds.insert(*object_of(r->pre));
  }

  for (int id : lifecycleIds) {
    if (has_animation(next, id)) {
      next.erase(EmptyFact{id});
    } else {
      erase_object_facts(next, id);
      next.insert(EmptyFact{id});
    }
  }

  if (options.kinematics) {
    auto objects = collect_objects(next);
    std::vector<Box> boxes;
    for (auto& [id, view] : objects) {
      if (view.animation == nullptr || !view.x || !view.y) continue;
      int x = *view.x;
      int y = *view.y;
      if (view.vx && !setByRule.contains(Slot{FactTag::kPositionX, id, -1, {}}))
        x = std::clamp(x + *view.vx, 0, options.gridWidth - 1);
      if (view.vy && !setByRule.contains(Slot{FactTag::kPositionY, id, -1, {}}))
        y = std::clamp(y + *view.vy, 0, options.gridHeight - 1);
      if (x != *view.x) {
        next.erase(PositionXFact{id, *view.x});
        next.insert(PositionXFact{id, x});
      }
      if (y != *view.y) {
        next.erase(PositionYFact{id, *view.y});
        next.insert(PositionYFact{id, y});
      }
      boxes.push_back(Box{id, x, y, view.animation->width, view.animation->height});
    }
    std::erase_if(next, [](const Fact& f) { return is_relationship(f); });
    for (auto& rel : relationship_facts(boxes)) next.insert(std::move(rel));
  }

  result.predictedFacts = std::move(next);
  return result;
}

FrameDistance frame_distance(const FactSet& predicted, const FactSet& actual) {
  // Both sets are ordered; a single merge pass counts the symmetric difference.
  int common = 0;
  auto a = predicted.begin();
  auto b = actual.begin();
  while (a != predicted.end() && b != actual.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++common;
      ++a;
      ++b;
    }
  }
  const int total = static_cast<int>(predicted.size() + actual.size());
  FrameDistance d;
  d.raw = total - 2 * common;
  d.normalized = total == 0 ? 0.0 : static_cast<double>(d.raw) / total;
  return d;
}

FactSet with_observed_inputs(FactSet predicted, const FactSet& observed) {
  std::erase_if(predicted, [](const Fact& f) { return tag_of(f) == FactTag::kVariable; });
  for (const auto& f : observed)
    if (tag_of(f) == FactTag::kVariable) predicted.insert(f);
  return predicted;
}

}  // namespace mm
