#include "cogboot/simulator.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "cogboot/error.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

std::string_view to_string(AffordanceCode code) {
  switch (code) {
    case AffordanceCode::GripperFull: return "GripperFull";
    case AffordanceCode::GripperEmpty: return "GripperEmpty";
    case AffordanceCode::NotInView: return "NotInView";
    case AffordanceCode::NotOpenable: return "NotOpenable";
    case AffordanceCode::AlreadyOpen: return "AlreadyOpen";
    case AffordanceCode::AlreadyClosed: return "AlreadyClosed";
    case AffordanceCode::NoKnifeHeld: return "NoKnifeHeld";
    case AffordanceCode::NotSliceable: return "NotSliceable";
    case AffordanceCode::ReceptacleClosed: return "ReceptacleClosed";
    case AffordanceCode::NoSuchEntity: return "NoSuchEntity";
  }
  return "NoSuchEntity";
}

Simulator::Simulator(FloorPlan plan) : plan_(std::move(plan)) { reset_from_plan(); }

void Simulator::reset_from_plan() {
  robot_ = plan_.robot;
  facing_.clear();
  open_.clear();
  objects_.clear();
  seen_.clear();
  for (const auto& r : plan_.receptacles) open_[r.name] = r.open;
  for (const auto& o : plan_.objects) objects_[o.id] = ObjectState{o.type, o.sliceable, o.in, {}};
  initial_countertop_.clear();
  for (const auto& [id, o] : objects_) {
    const auto* r = plan_.find_receptacle(o.location);
    if (r && text::iequals(r->type, "CounterTop")) initial_countertop_.push_back(id);
  }
}

void Simulator::shuffle(std::uint64_t seed) {
  reset_from_plan();
  std::vector<std::string> slots;
  for (const auto& [id, o] : objects_) slots.push_back(o.location);
  std::mt19937_64 rng(seed);
  for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng() % i]);
  std::size_t k = 0;
  for (auto& [id, o] : objects_) o.location = slots[k++];
  initial_countertop_.clear();
  for (const auto& [id, o] : objects_) {
    const auto* r = plan_.find_receptacle(o.location);
    if (r && text::iequals(r->type, "CounterTop")) initial_countertop_.push_back(id);
  }
}

bool Simulator::contents_visible(const std::string& receptacle) const {
  const auto* r = plan_.find_receptacle(receptacle);
  if (!r) return false;
  return !r->openable || open_.at(r->name);
}

bool Simulator::is_visible(const std::string& object_id) const {
  auto it = objects_.find(object_id);
  if (it == objects_.end()) return false;
  const auto& loc = it->second.location;
  return loc == kGripper || (!facing_.empty() && loc == facing_ && contents_visible(facing_));
}

bool Simulator::is_open(const std::string& receptacle) const {
  auto it = open_.find(receptacle);
  return it != open_.end() && it->second;
}

bool Simulator::interior_seen(const std::string& receptacle) const { return seen_.count(receptacle) > 0; }

void Simulator::mark_seen() {
  if (!facing_.empty() && contents_visible(facing_)) seen_.insert(facing_);
}

std::optional<std::string> Simulator::held() const {
  for (const auto& [id, o] : objects_)
    if (o.location == kGripper) return id;
  return std::nullopt;
}

std::string Simulator::object_location(const std::string& id) const {
  auto it = objects_.find(id);
  return it == objects_.end() ? std::string() : it->second.location;
}

const std::set<std::string>& Simulator::attributes(const std::string& id) const {
  static const std::set<std::string> kNone;
  auto it = objects_.find(id);
  return it == objects_.end() ? kNone : it->second.attributes;
}

std::vector<std::string> Simulator::object_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, o] : objects_) out.push_back(id);
  return out;
}

std::string Simulator::resolve_receptacle(std::string_view ref) const {
  if (const auto* r = plan_.find_receptacle(ref)) return r->name;
  const ReceptacleSpec* best = nullptr;
  double best_d = 0;
  for (const auto& r : plan_.receptacles) {
    if (!text::iequals(r.type, ref)) continue;
    double d = distance(robot_, r.pos);
    if (!best || d < best_d || (d == best_d && r.name < best->name)) {
      best = &r;
      best_d = d;
    }
  }
  return best ? best->name : std::string();
}

std::string Simulator::resolve_object(std::string_view ref) const {
  for (const auto& [id, o] : objects_)
    if (text::iequals(id, ref)) return id;
  std::string fallback;
  for (const auto& [id, o] : objects_) {
    if (!text::iequals(o.type, ref)) continue;
    if (is_visible(id)) return id;
    if (fallback.empty()) fallback = id;
  }
  return fallback;
}

Observation Simulator::observe() const {
  Observation obs;
  obs.location = facing_;
  obs.robot = robot_;
  for (const auto& r : plan_.receptacles)
    obs.receptacles.push_back({r.name, r.type, r.pos, r.openable, r.openable && open_.at(r.name)});
  for (const auto& [id, o] : objects_)
    if (is_visible(id)) obs.visible_objects.push_back({id, o.type, o.location, o.attributes});
  return obs;
}

StepResult Simulator::step(const ActionCommand& action) {
  if (!action.is_motor()) throw std::invalid_argument("simulator only executes motor actions");
  auto fail = [](AffordanceCode c, std::string msg) -> StepResult { return AffordanceError{c, std::move(msg)}; };

  switch (action.kind) {
    case ActionKind::MoveTo: {
      auto r = resolve_receptacle(action.target);
      if (r.empty()) return fail(AffordanceCode::NoSuchEntity, "no receptacle '" + action.target + "'");
      facing_ = r;
      robot_ = plan_.find_receptacle(r)->pos;
      break;
    }
    case ActionKind::PickUp: {
      auto o = resolve_object(action.target);
      if (o.empty()) return fail(AffordanceCode::NoSuchEntity, "no object '" + action.target + "'");
      if (held()) return fail(AffordanceCode::GripperFull, "gripper already holds " + *held());
      if (!is_visible(o)) return fail(AffordanceCode::NotInView, o + " is not in view");
      objects_[o].location = kGripper;
      break;
    }
    case ActionKind::Put: {
      auto o = resolve_object(action.target);
      auto r = resolve_receptacle(action.destination);
      if (o.empty()) return fail(AffordanceCode::NoSuchEntity, "no object '" + action.target + "'");
      if (r.empty()) return fail(AffordanceCode::NoSuchEntity, "no receptacle '" + action.destination + "'");
      auto h = held();
      if (!h) return fail(AffordanceCode::GripperEmpty, "gripper is empty");
      if (*h != o) return fail(AffordanceCode::NotInView, o + " is not in the gripper");
      if (!contents_visible(r)) return fail(AffordanceCode::ReceptacleClosed, r + " is closed");
      facing_ = r;
      robot_ = plan_.find_receptacle(r)->pos;
      objects_[o].location = r;
      break;
    }
    case ActionKind::Open:
    case ActionKind::Close: {
      auto r = resolve_receptacle(action.target);
      if (r.empty()) return fail(AffordanceCode::NoSuchEntity, "no receptacle '" + action.target + "'");
      if (r != facing_) return fail(AffordanceCode::NotInView, r + " is not in front of the robot");
      if (!plan_.find_receptacle(r)->openable) return fail(AffordanceCode::NotOpenable, r + " cannot be opened");
      bool want_open = action.kind == ActionKind::Open;
      if (open_[r] == want_open)
        return fail(want_open ? AffordanceCode::AlreadyOpen : AffordanceCode::AlreadyClosed,
                    r + (want_open ? " is already open" : " is already closed"));
      open_[r] = want_open;
      break;
    }
    case ActionKind::Slice: {
      auto o = resolve_object(action.target);
      if (o.empty()) return fail(AffordanceCode::NoSuchEntity, "no object '" + action.target + "'");
      auto h = held();
      if (!h || !text::iequals(objects_[*h].type, kKnifeType))
        return fail(AffordanceCode::NoKnifeHeld, "the robot is not holding a knife");
      if (!is_visible(o)) return fail(AffordanceCode::NotInView, o + " is not in view");
      if (!objects_[o].sliceable) return fail(AffordanceCode::NotSliceable, o + " cannot be sliced");
      objects_[o].attributes.insert(kSlicedAttr);
      break;
    }
    default:
      break;
  }
  mark_seen();
  return observe();
}

std::string Simulator::serialize_state() const {
  std::string s = "robot=" + std::to_string(robot_.x) + "," + std::to_string(robot_.y) + ";facing=" + facing_ + "\n";
  for (const auto& [name, open] : open_) s += "R|" + name + "|" + (open ? "open" : "closed") + "|" + (seen_.count(name) ? "seen" : "-") + "\n";
  for (const auto& [id, o] : objects_)
    s += "O|" + id + "|" + o.location + "|" + text::join({o.attributes.begin(), o.attributes.end()}, ",") + "\n";
  return s;
}

// ---- goals ----

namespace {

std::string binding(const TaskInstance& task, std::initializer_list<const char*> names, std::size_t position) {
  for (const char* n : names)
    if (auto it = task.bindings.find(n); it != task.bindings.end()) return it->second;
  auto vars = task.family.variables();
  if (position < vars.size())
    if (auto it = task.bindings.find(vars[position]); it != task.bindings.end()) return it->second;
  return {};
}

bool object_matches(const std::string& id, const std::string& type, std::string_view ref) {
  return text::iequals(id, ref) || text::iequals(type, ref);
}

}  // namespace

GoalResult check_goal(const Simulator& sim, const TaskInstance& task, TaskOutcome final_outcome) {
  const auto family = family_key(task.family);
  const auto& plan = sim.plan();
  auto ok = [](bool b) { return GoalResult{b, b ? 1.0 : 0.0}; };

  if (family == "find") {
    auto target = binding(task, {"object"}, 0);
    bool exists = false, seen = false;
    for (const auto& o : plan.objects) {
      if (!object_matches(o.id, o.type, target)) continue;
      exists = true;
      seen = seen || sim.is_visible(o.id);
    }
    return ok(exists ? seen : final_outcome == TaskOutcome::Quit);
  }
  if (family == "slice") {
    auto target = binding(task, {"sliceable", "object"}, 0);
    for (const auto& o : plan.objects)
      if (object_matches(o.id, o.type, target) && sim.attributes(o.id).count(kSlicedAttr)) return ok(true);
    return ok(false);
  }
  if (family == "clear") {
    const auto& initial = sim.initial_countertop_objects();
    if (initial.empty()) return ok(true);
    std::size_t moved = 0;
    for (const auto& id : initial) {
      const auto* r = plan.find_receptacle(sim.object_location(id));
      if (r && !text::iequals(r->type, "CounterTop")) ++moved;
    }
    double score = static_cast<double>(moved) / static_cast<double>(initial.size());
    return {moved == initial.size(), score};
  }
  if (family == "pick_place") {
    auto obj = binding(task, {"object"}, 0);
    auto rec = binding(task, {"receptacle"}, 1);
    for (const auto& o : plan.objects) {
      if (!object_matches(o.id, o.type, obj)) continue;
      const auto* r = plan.find_receptacle(sim.object_location(o.id));
      if (r && (text::iequals(r->name, rec) || text::iequals(r->type, rec))) return ok(true);
    }
    return ok(false);
  }
  if (family == "explore") {
    auto rec = sim.resolve_receptacle(binding(task, {"receptacle"}, 0));
    return ok(!rec.empty() && sim.interior_seen(rec));
  }
  throw Error(ErrorCode::UnknownFamily, "no goal check for '" + task.family.text() + "'");
}

// ---- options ----

std::string subtask_option(const std::string& family, const std::string& end_condition) {
  return "attend to subtask: " + family + " (Apply anytime. End condition: " + end_condition + ")";
}

OptionList list_options(const KnowledgeSnapshot& snapshot, const EndConditionRegistry& end_conditions,
                        const std::vector<std::string>& blacklist) {
  OptionList out;
  std::vector<std::string> candidates;

  for (const auto& [family, sentence] : end_conditions.entries()) candidates.push_back(subtask_option(family, sentence));

  auto spatial = snapshot.spatial;
  std::sort(spatial.begin(), spatial.end(), [](const auto& a, const auto& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.name < b.name;
  });
  for (const auto& r : spatial)
    if (r.name != snapshot.location) candidates.push_back(ActionCommand::move_to(r.name).to_option());

  const ObjectFact* held = snapshot.gripper_object();
  const ReceptacleKnowledge* here = snapshot.find_receptacle(snapshot.location);
  bool here_visible = here && here->open_state != OpenState::Closed;

  std::vector<const ObjectFact*> in_view;
  if (here_visible)
    for (const auto& o : snapshot.objects)
      if (o.location == here->name) in_view.push_back(&o);

  if (!held) {
    for (const auto* o : in_view) candidates.push_back(ActionCommand::pick_up(o->object_id).to_option());
  } else {
    for (const auto& r : spatial)
      if (r.open_state != OpenState::Closed)
        candidates.push_back(ActionCommand::put(held->object_id, r.name).to_option());
  }
  if (here && here->open_state == OpenState::Closed) candidates.push_back(ActionCommand::open(here->name).to_option());
  if (here && here->open_state == OpenState::Open) candidates.push_back(ActionCommand::close(here->name).to_option());
  if (held && text::iequals(held->object_type, kKnifeType))
    for (const auto* o : in_view)
      if (!o->attributes.count(kSlicedAttr)) candidates.push_back(ActionCommand::slice(o->object_id).to_option());

  candidates.push_back(ActionCommand::done().to_option());
  candidates.push_back(ActionCommand::quit().to_option());

  std::vector<std::string> banned;
  if (!snapshot.current_task.empty()) banned.push_back(ActionCommand::subtask(snapshot.current_task).to_option());
  for (const auto& b : blacklist)
    if (std::find(banned.begin(), banned.end(), b) == banned.end()) banned.push_back(b);

  for (auto& c : candidates) {
    bool is_banned = std::any_of(banned.begin(), banned.end(), [&](const auto& b) { return text::iequals(b, c); });
    if (!is_banned) out.options.push_back(std::move(c));
  }
  out.blacklisted = std::move(banned);
  return out;
}

}  // namespace cogboot
