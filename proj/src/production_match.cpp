#include <algorithm>
#include <limits>
#include <set>

#include "cogboot/error.hpp"
#include "cogboot/production.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

namespace {

struct MatchFail {
  std::string reason;
};

using Snapshot = KnowledgeSnapshot;

std::string value_of(const Arg& a, const BindingSet& b) {
  if (a.literal) return a.value;
  auto it = b.find(a.value);
  if (it == b.end()) {
    if (a.value == kLocationVar) throw MatchFail{"the robot is not in front of any receptacle"};
    throw Error(ErrorCode::MissingBinding, "no value for <" + a.value + ">");
  }
  return it->second;
}

bool object_matches(const ObjectFact& o, std::string_view ref) {
  return text::iequals(o.object_id, ref) || text::iequals(o.object_type, ref);
}

bool receptacle_matches(const ReceptacleKnowledge& r, std::string_view ref) {
  return text::iequals(r.name, ref) || text::iequals(r.receptacle_type, ref);
}

// Object location compared against a receptacle reference (name, type or Gripper).
bool location_matches(const Snapshot& s, const std::string& location, std::string_view ref) {
  if (text::iequals(location, ref)) return true;
  const auto* r = s.find_receptacle(location);
  return r && text::iequals(r->receptacle_type, ref);
}

bool in_view(const Snapshot& s, const ObjectFact& o) {
  if (o.location == kGripper) return true;
  if (s.location.empty() || !text::iequals(o.location, s.location)) return false;
  const auto* r = s.find_receptacle(s.location);
  return r && r->open_state != OpenState::Closed;
}

bool has_contents(const Snapshot& s, const std::string& receptacle) {
  return std::any_of(s.objects.begin(), s.objects.end(), [&](const auto& o) { return o.location == receptacle; });
}

/// Entity ids appear in statements by their type.
std::string statement_value(const Snapshot& s, const std::string& v) {
  if (const auto* r = s.find_receptacle(v)) return r->receptacle_type;
  if (const auto* o = s.find_object(v)) return o->object_type;
  return v;
}

std::string statement_text(const std::string& tmpl, const BindingSet& b, const Snapshot& s) {
  if (!b.count(kLocationVar) && tmpl.find(std::string("<") + kLocationVar + ">") != std::string::npos)
    throw MatchFail{"the robot is not in front of any receptacle"};
  BindingSet typed;
  for (const auto& [k, v] : b) typed[k] = statement_value(s, v);
  return text::canonicalize(substitute(std::string_view(tmpl), typed));
}

bool world_truth(const std::string& stmt, const MatchContext& ctx) {
  auto t = ctx.kb.get(stmt);
  if (t != Truth::Unknown) return t == Truth::True;
  if (!ctx.oracle) throw Error(ErrorCode::OracleUnavailable, "cannot resolve '" + stmt + "' without an oracle");
  try {
    return ctx.kb.resolve(stmt, *ctx.oracle);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnparsableResponse) throw MatchFail{"got unknown statement: " + stmt};
    throw;
  }
}

struct Candidate {
  std::string id;
  double distance;
};

std::vector<Candidate> domain_candidates(const Domain& d, const BindingSet& b, const MatchContext& ctx) {
  const auto& s = ctx.snapshot;
  std::vector<Candidate> out;
  auto type_ok_r = [&](const ReceptacleKnowledge& r) {
    return !d.type || text::iequals(r.receptacle_type, value_of(*d.type, b)) || text::iequals(r.name, value_of(*d.type, b));
  };

  if (d.kind == DomainKind::Objects) {
    for (const auto& o : s.objects) {
      if (d.type && !object_matches(o, value_of(*d.type, b))) continue;
      if (d.in && !location_matches(s, o.location, value_of(*d.in, b))) continue;
      double dist = std::numeric_limits<double>::infinity();
      if (o.location == kGripper) dist = 0;
      else if (const auto* r = s.find_receptacle(o.location)) dist = r->distance;
      out.push_back({o.object_id, dist});
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    return out;
  }

  std::set<std::string> storage_types;
  if (d.kind == DomainKind::StorageOf) {
    auto object_type = text::to_lower(statement_value(s, value_of(*d.of, b)));
    std::set<std::string> types;
    for (const auto& r : s.spatial) types.insert(r.receptacle_type);
    for (const auto& t : types)
      if (world_truth(text::canonicalize(object_type + " is commonly stored in " + t), ctx)) storage_types.insert(t);
  }

  for (const auto& r : s.spatial) {
    bool keep = type_ok_r(r);
    switch (d.kind) {
      case DomainKind::Receptacles:
        if (d.holding) {
          auto ref = value_of(*d.holding, b);
          keep = keep && std::any_of(s.objects.begin(), s.objects.end(), [&](const auto& o) {
                   return o.location == r.name && object_matches(o, ref);
                 });
        }
        break;
      case DomainKind::UnexploredReceptacles: keep = keep && r.exploration != Exploration::Fully; break;
      case DomainKind::EmptyReceptacles:
        keep = keep && r.exploration == Exploration::Fully && !has_contents(s, r.name);
        break;
      case DomainKind::StorageOf:
        keep = keep && storage_types.count(r.receptacle_type) &&
               (!d.unexplored_only || r.exploration != Exploration::Fully);
        break;
      case DomainKind::Objects: break;
    }
    if (keep) out.push_back({r.name, r.distance});
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  return out;
}

std::uint64_t fnv(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

namespace detail {

// Shared with the decision-tree walk.
bool eval_selector(const BindingSelector& sel, const std::string& rule_id, BindingSet& b, const MatchContext& ctx,
                   std::string& reason) {
  try {
    auto cands = domain_candidates(sel.domain, b, ctx);
    if (cands.empty()) {
      reason = "no candidate for " + to_string(sel);
      return false;
    }
    std::size_t pick = 0;
    switch (sel.strategy) {
      case Strategy::First: break;
      case Strategy::Nearest:
        for (std::size_t i = 1; i < cands.size(); ++i)
          if (cands[i].distance < cands[pick].distance) pick = i;
        break;
      case Strategy::Any:
        pick = fnv(rule_id + "|" + sel.var + "|" + fingerprint(ctx.snapshot).hex()) % cands.size();
        break;
    }
    b[sel.var] = cands[pick].id;
    return true;
  } catch (const MatchFail& f) {
    reason = f.reason;
    return false;
  }
}

bool eval_predicate(const Predicate& p, const BindingSet& b, const MatchContext& ctx) {
  const auto& s = ctx.snapshot;
  auto arg = [&](std::size_t i) { return value_of(p.args.at(i), b); };
  auto any_object = [&](auto&& pred) { return std::any_of(s.objects.begin(), s.objects.end(), pred); };
  auto any_receptacle = [&](const std::string& ref, auto&& pred) {
    return std::any_of(s.spatial.begin(), s.spatial.end(),
                       [&](const auto& r) { return receptacle_matches(r, ref) && pred(r); });
  };

  switch (p.kind) {
    case PredicateKind::GripperEmpty: return s.gripper_object() == nullptr;
    case PredicateKind::Holding: {
      const auto* g = s.gripper_object();
      return g && object_matches(*g, arg(0));
    }
    case PredicateKind::Located:
    case PredicateKind::Unlocated: {
      auto ref = arg(0);
      bool located = any_object([&](const auto& o) { return object_matches(o, ref) && o.location != kUnknownLocation; });
      return p.kind == PredicateKind::Located ? located : !located;
    }
    case PredicateKind::In: {
      auto obj = arg(0), rec = arg(1);
      return any_object([&](const auto& o) { return object_matches(o, obj) && location_matches(s, o.location, rec); });
    }
    case PredicateKind::At: {
      const auto* r = s.find_receptacle(s.location);
      return r && receptacle_matches(*r, arg(0));
    }
    case PredicateKind::Explored: {
      bool full = p.word == "full";
      return any_receptacle(arg(0), [&](const auto& r) {
        return full ? r.exploration == Exploration::Fully : r.exploration != Exploration::Unexplored;
      });
    }
    case PredicateKind::Unexplored:
      return any_receptacle(arg(0), [](const auto& r) { return r.exploration != Exploration::Fully; });
    case PredicateKind::Empty:
      return any_receptacle(arg(0), [&](const auto& r) {
        return r.exploration == Exploration::Fully && !has_contents(s, r.name);
      });
    case PredicateKind::State: {
      OpenState want = p.word == "open" ? OpenState::Open : p.word == "closed" ? OpenState::Closed : OpenState::NotOpenable;
      return any_receptacle(arg(0), [&](const auto& r) { return r.open_state == want; });
    }
    case PredicateKind::Has: {
      auto ref = arg(0);
      return any_object([&](const auto& o) { return object_matches(o, ref) && o.attributes.count(p.word); });
    }
    case PredicateKind::WorldTrue: return world_truth(statement_text(p.text, b, s), ctx);
    case PredicateKind::WorldFalse: return !world_truth(statement_text(p.text, b, s), ctx);
    case PredicateKind::Succeeded: {
      auto task = text::canonicalize(substitute(std::string_view(p.text), b));
      for (const auto& [t, ok] : s.previous_tasks)
        if (ok && text::canonicalize(t) == task) return true;
      return false;
    }
    case PredicateKind::Visible: {
      auto ref = arg(0);
      return any_object([&](const auto& o) { return object_matches(o, ref) && in_view(s, o); });
    }
    case PredicateKind::Task:
      return match_task(TaskPattern(substitute(std::string_view(p.text), b)), s.current_task).has_value();
    case PredicateKind::Exists: return !domain_candidates(*p.domain, b, ctx).empty();
    case PredicateKind::Not: return !eval_predicate(p.inner.at(0), b, ctx);
  }
  return false;
}

bool eval_predicate_reason(const Predicate& p, const BindingSet& b, const MatchContext& ctx, std::string& reason) {
  try {
    if (eval_predicate(p, b, ctx)) return true;
    reason = to_string(p);
  } catch (const MatchFail& f) {
    reason = f.reason;
  }
  return false;
}

std::optional<BindingSet> initial_bindings(const ProductionRule& rule, const Snapshot& s) {
  auto b = match_task(rule.task_pattern, s.current_task);
  if (!b) return std::nullopt;
  if (!s.location.empty()) (*b)[kLocationVar] = s.location;
  return b;
}

}  // namespace detail

bool evaluate_predicate(const Predicate& p, const BindingSet& bindings, const MatchContext& ctx, std::string* reason) {
  std::string r;
  bool ok = detail::eval_predicate_reason(p, bindings, ctx, r);
  if (reason) *reason = r;
  return ok;
}

MatchResult match(const ProductionRule& rule, const MatchContext& ctx) {
  MatchResult res;
  auto b = detail::initial_bindings(rule, ctx.snapshot);
  if (!b) {
    res.stage = MatchStage::Task;
    res.reason = "task does not match pattern: " + rule.task_pattern.text();
    return res;
  }
  for (std::size_t i = 0; i < rule.selectors.size(); ++i) {
    if (!detail::eval_selector(rule.selectors[i], rule.id, *b, ctx, res.reason)) {
      res.stage = MatchStage::Selector;
      res.index = i;
      res.bindings = std::move(*b);
      return res;
    }
  }
  for (std::size_t i = 0; i < rule.preconditions.size(); ++i) {
    if (!detail::eval_predicate_reason(rule.preconditions[i], *b, ctx, res.reason)) {
      res.stage = MatchStage::Predicate;
      res.index = i;
      res.bindings = std::move(*b);
      return res;
    }
  }
  res.ok = true;
  res.bindings = std::move(*b);
  return res;
}

ActionCommand instantiate_effect(const ProductionRule& rule, const BindingSet& bindings) {
  switch (rule.effect.kind) {
    case EffectKind::Done: return ActionCommand::done();
    case EffectKind::Quit: return ActionCommand::quit();
    case EffectKind::AttendSubtask:
      return ActionCommand::subtask(text::canonicalize_spaces(substitute(std::string_view(rule.effect.text), bindings)));
    case EffectKind::Motor: {
      auto t = substitute(std::string_view(rule.effect.text), bindings);
      auto cmd = ActionCommand::parse_motor(t);
      if (!cmd) throw Error(ErrorCode::ParseError, "rule " + rule.id + " produced an invalid motor action '" + t + "'");
      return *cmd;
    }
  }
  return ActionCommand::done();
}

ActionCommand resolve_action(const ActionCommand& action, const KnowledgeSnapshot& s) {
  auto object = [&](const std::string& ref) -> std::string {
    if (const auto* o = s.find_object(ref); o && text::iequals(o->object_id, ref)) return o->object_id;
    const ObjectFact* best = nullptr;
    int best_rank = 3;
    for (const auto& o : s.objects) {
      if (!text::iequals(o.object_type, ref)) continue;
      int rank = o.location == kGripper ? 0 : in_view(s, o) ? 1 : 2;
      if (rank < best_rank || (rank == best_rank && best && o.object_id < best->object_id)) {
        best = &o;
        best_rank = rank;
      }
    }
    return best ? best->object_id : ref;
  };
  auto receptacle = [&](const std::string& ref) -> std::string {
    if (const auto* r = s.find_receptacle(ref)) return r->name;
    if (auto r = nearest_receptacle(s, ref)) return r->name;
    return ref;
  };
  ActionCommand out = action;
  switch (action.kind) {
    case ActionKind::MoveTo:
    case ActionKind::Open:
    case ActionKind::Close: out.target = receptacle(action.target); break;
    case ActionKind::PickUp:
    case ActionKind::Slice: out.target = object(action.target); break;
    case ActionKind::Put:
      out.target = object(action.target);
      out.destination = receptacle(action.destination);
      break;
    case ActionKind::AttendSubtask: out.target = text::canonicalize_spaces(action.target); break;
    default: break;
  }
  return out;
}

static bool same_action(const ActionCommand& a, const ActionCommand& b) {
  return a.kind == b.kind && text::iequals(a.target, b.target) && text::iequals(a.destination, b.destination);
}

VerifyResult replay_verify(const ProductionRule& rule, const MatchContext& ctx, const ActionCommand& expected) {
  VerifyResult v;
  auto m = match(rule, ctx);
  if (!m.ok) {
    v.reason = m.reason;
    return v;
  }
  try {
    v.produced = resolve_action(instantiate_effect(rule, m.bindings), ctx.snapshot);
  } catch (const Error& e) {
    v.reason = e.what();
    return v;
  }
  auto want = resolve_action(expected, ctx.snapshot);
  if (!same_action(*v.produced, want)) {
    v.reason = "rule proposes \"" + v.produced->to_option() + "\" but the chosen action was \"" + want.to_option() + "\"";
    return v;
  }
  v.pass = true;
  return v;
}

}  // namespace cogboot
