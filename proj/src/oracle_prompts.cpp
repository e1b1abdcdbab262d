#include <algorithm>

#include <spdlog/spdlog.h>

#include "cogboot/error.hpp"
#include "cogboot/oracle.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

using nlohmann::json;

std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::ActionSelect: return "action_select";
    case PromptKind::DescribeRule: return "describe_rule";
    case PromptKind::GenerateRuleDSL: return "generate_rule";
    case PromptKind::RepairRule: return "repair_rule";
    case PromptKind::Critic: return "critic";
    case PromptKind::KnowledgeQuery: return "knowledge_query";
  }
  return "action_select";
}

PromptKind prompt_kind_from_string(std::string_view s) {
  for (auto k : {PromptKind::ActionSelect, PromptKind::DescribeRule, PromptKind::GenerateRuleDSL,
                 PromptKind::RepairRule, PromptKind::Critic, PromptKind::KnowledgeQuery})
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::SchemaError, "unknown prompt kind '" + std::string(s) + "'");
}

std::size_t count_tokens(std::string_view t) { return (text::codepoint_count(t) + 3) / 4; }

// ---- knowledge rendering ----

namespace {

std::string label(const std::string& id, const std::string& type) { return id + "(" + type + ")"; }

std::string listing(const std::vector<std::string>& items) {
  if (items.empty()) return "nothing";
  return text::join(items, ", ") + ", and nothing else";
}

std::vector<const ReceptacleKnowledge*> by_distance(const KnowledgeSnapshot& s) {
  std::vector<const ReceptacleKnowledge*> out;
  for (const auto& r : s.spatial) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return a->distance != b->distance ? a->distance < b->distance : a->name < b->name;
  });
  return out;
}

}  // namespace

std::string render_spatial_knowledge(const KnowledgeSnapshot& s) {
  std::string out;
  if (const auto* g = s.gripper_object())
    out += " * (0.0 units away) RobotGripper(Gripper) has " + listing({label(g->object_id, g->object_type)}) + "\n";
  else
    out += " * (0.0 units away) RobotGripper(Gripper) is empty\n";
  for (const auto* r : by_distance(s)) {
    std::vector<std::string> contents;
    for (const auto& o : s.objects)
      if (o.location == r->name) contents.push_back(label(o.object_id, o.object_type));
    out += " * (" + text::format_fixed(r->distance, 1) + " units away) " + label(r->name, r->receptacle_type);
    switch (r->exploration) {
      case Exploration::Fully:
        out += contents.empty() ? " has been fully explored: it is empty" : " has been fully explored: it has " + listing(contents);
        break;
      case Exploration::Partial: out += " has been partially explored: it is closed"; break;
      case Exploration::Unexplored: out += " has not been explored"; break;
    }
    out += "\n";
  }
  return out;
}

std::string render_object_knowledge(const KnowledgeSnapshot& s) {
  std::string out;
  std::vector<std::string> lines;
  for (const auto& r : s.spatial) {
    if (r.open_state == OpenState::Open) lines.push_back(" * " + label(r.name, r.receptacle_type) + ": opened");
    if (r.open_state == OpenState::Closed) lines.push_back(" * " + label(r.name, r.receptacle_type) + ": closed");
  }
  for (const auto& o : s.objects) {
    std::string where = o.location == kGripper         ? "at RobotGripper"
                        : o.location == kUnknownLocation ? "at an unknown location"
                                                         : "at " + o.location;
    std::string line = " * " + label(o.object_id, o.object_type) + " " + where;
    if (!o.attributes.empty()) line += ": " + text::join({o.attributes.begin(), o.attributes.end()}, ", ");
    lines.push_back(line);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) out += l + "\n";
  return out;
}

// ---- prompts ----

std::string action_system_prompt() {
  return R"(You control a household robot in a kitchen. You will be shown what the robot currently knows and a list of options, and you must choose exactly one option.

The robot:
 * knows the names and positions of all large receptacles (fridge, cabinets, countertops, sink);
 * sees objects only when they are in its gripper, or inside the receptacle it is in front of while that receptacle is open (receptacles that cannot be opened are always visible from the front);
 * holds at most one object at a time;
 * must be in front of a receptacle to open or close it, and must see an object to pick it up or slice it;
 * can only slice while holding a knife.

Options come in three kinds. A motor action is executed directly. "attend to subtask" starts a task the robot already knows how to do; its end condition says when it finishes. A special action ends the current task: 'done' when the task is accomplished, 'quit' when it cannot be accomplished. Only choose 'done' or 'quit' when you are absolutely certain.

The user prompt has these sections: [Current Task], [Current Location], [Spatial Knowledge], [Object Knowledge], [Previous Tasks], [Action History], [Possible Options] and [Blacklisted Options]. Never choose a blacklisted option.

Answer with these sections: [Current Task], [Goal Conditions], [Current Situation Analysis], [Plan], [Option Evaluation], [Option Suggestion] and [Purpose], then [End]. Under [Option Suggestion] write exactly one option in double quotes, copied from [Possible Options]; subtask variables in angle brackets must be filled in.)";
}

PromptBundle build_action_prompt(const std::string& task, const std::string& family, const BindingSet& bindings,
                                 const KnowledgeSnapshot& s, const std::vector<std::string>& options,
                                 const std::vector<std::string>& blacklist, const std::vector<HistoryEntry>& history,
                                 const EndConditionRegistry& trained) {
  PromptBundle p;
  p.kind = PromptKind::ActionSelect;
  p.system = action_system_prompt();
  std::string u;
  u += "[Current Task] " + task + "\n\n";
  u += "[Current Location] " + (s.location.empty() ? std::string("not in front of any receptacle") : "in front of " + s.location) + "\n\n";
  u += "[Spatial Knowledge]\n" + render_spatial_knowledge(s) + "\n";
  u += "[Object Knowledge]\n" + render_object_knowledge(s) + "\n";
  u += "[Previous Tasks]\n";
  for (const auto& [t, ok] : s.previous_tasks) u += " * " + t + ": " + (ok ? "True" : "False") + "\n";
  u += "\n[Action History]\n";
  for (const auto& h : history) {
    u += " * (time " + std::to_string(h.time) + ") " + h.option;
    if (!h.purpose.empty()) u += " (purpose: " + h.purpose + ")";
    u += "\n";
  }
  u += "\n[Possible Options]\n";
  for (const auto& o : options) u += " * " + o + "\n";
  u += "\n[Blacklisted Options]\n";
  for (const auto& b : blacklist) u += " * " + b + "\n";
  p.user = std::move(u);

  std::vector<std::string> families;
  for (const auto& [f, _] : trained.entries()) families.push_back(f);
  p.situation = json{{"task", task}, {"family", family}, {"bindings", bindings}, {"snapshot", s.to_json()}, {"trained", families}};
  return p;
}

PromptBundle build_description_prompt(const PromptBundle& action_prompt, const std::string& action_response) {
  PromptBundle p;
  p.kind = PromptKind::DescribeRule;
  p.system = action_prompt.system;
  p.user = action_prompt.user + "\n[Your Response]\n" + action_response + "\n\n" +
           R"([Instruction]
Turn the choice you just made into a rule that can be reused in similar situations. Answer with these sections:
[Relevant Information] the facts from the prompt that led to the choice;
[Specific Rule] one sentence "IF ... AND ... THEN choose <option>" using the concrete names;
[Generalizable Constants] which names could be replaced by variables;
[Generalized Rule] the same rule with those names replaced by <variables>; the current task must appear as its task family;
[Correspondence] the value of each variable in the current situation.)";
  p.situation = action_prompt.situation;
  return p;
}

namespace {

const char* kGrammar = R"(Rules are written in this language, one rule per answer, inside a ``` fenced block:

production <id> {
  task: "<task family with <variables>>"
  bind <var> = nearest|first|any of <domain>      (zero or more lines)
  when {
    <predicate>                                   (one per line)
  }
  then motor "<action>" | subtask "<task>" | done | quit
  desc: "<the generalized rule in English>"
}

An argument is a <variable> or a "quoted literal". <location> is always the receptacle the robot is in front of.
Domains:
  receptacles [type A] [holding A]
  unexplored receptacles [type A]
  empty receptacles [type A]
  objects [type A] [in A]
  storage of A [unexplored]        receptacles where objects like A are commonly stored
Predicates:
  gripper empty | holding A | located A | unlocated A | in A B | at A
  explored A partial|full | unexplored A | empty A | state A open|closed|na | has A <attribute>
  world true|false "<statement>" | succeeded "<task>" | visible A | task "<pattern>"
  exists <domain> | not <predicate>
Motor actions: move to R | pick up O | put O on R | open R | close R | slice O
Objects and receptacles are matched by id or by type, ignoring case.)";

}  // namespace

PromptBundle build_rule_prompt(const PromptBundle& action_prompt, const std::string& description,
                               const std::string& correspondence) {
  PromptBundle p;
  p.kind = PromptKind::GenerateRuleDSL;
  p.system = std::string("You translate English rules for a household robot into an executable rule language.\n\n") + kGrammar;
  p.user = "[Generalized Rule]\n" + description + "\n\n[Correspondence]\n" + correspondence + "\n\n" +
           "[Situation]\n" + action_prompt.user + "\n[Instruction]\n" +
           "First plan which variables need bindings and how each is chosen, then write the rule. "
           "The rule must choose the same option in the situation above.";
  p.situation = action_prompt.situation;
  return p;
}

PromptBundle build_repair_prompt(const PromptBundle& action_prompt, const std::string& source,
                                 const std::string& expected_option, const std::string& failure) {
  PromptBundle p;
  p.kind = PromptKind::RepairRule;
  p.system = std::string("You fix rules for a household robot written in an executable rule language.\n\n") + kGrammar;
  p.user = "[Rule Source]\n```\n" + source + "```\n\n[Situation]\n" + action_prompt.user + "\n" +
           "[Expected Action] " + expected_option + "\n\n" + "[Your Rule Result] " + failure + "\n\n" +
           "[Instruction]\nRewrite the rule so that it applies in the situation above and chooses the expected action.";
  p.situation = action_prompt.situation;
  return p;
}

PromptBundle build_critic_prompt(const std::string& family, const std::vector<CriticRule>& rules) {
  PromptBundle p;
  p.kind = PromptKind::Critic;
  p.system =
      "You review the rules a household robot learned for one family of tasks. First look at the rules whose effect is "
      "'done' and state in one sentence when the task is complete. Then give one verdict per rule: Keep, Remove, or "
      "Modify followed by a corrected English rule.";
  std::string u = "[Task Family] " + family + "\n\n[Production Rules]\n";
  for (const auto& r : rules) u += " * " + r.id + ": " + r.description + "\n";
  u += "\nAnswer with [End Condition] (one sentence) and [Verdicts] (lines \" * <rule id>: Keep|Remove|Modify: <rule>\").";
  p.user = std::move(u);
  json ids = json::array();
  for (const auto& r : rules) ids.push_back(r.id);
  p.situation = json{{"family", family}, {"rules", ids}};
  return p;
}

PromptBundle build_knowledge_prompt(const std::string& statement) {
  PromptBundle p;
  p.kind = PromptKind::KnowledgeQuery;
  p.system = "You answer questions about common household knowledge with a single word: Yes or No.";
  p.user = "Is the following statement true in a typical household? " + statement;
  p.situation = json{{"statement", statement}};
  return p;
}

// ---- parsers ----

std::map<std::string, std::string> parse_sections(std::string_view t) {
  std::map<std::string, std::string> out;
  std::string current;
  std::string body;
  bool in_section = false;
  auto flush = [&] {
    if (in_section && !out.count(current)) out[current] = text::trim(body);
  };
  for (const auto& line : text::split_lines(t)) {
    auto trimmed = text::trim(line);
    if (trimmed.size() > 2 && trimmed.front() == '[') {
      auto close = trimmed.find(']');
      if (close != std::string::npos) {
        flush();
        current = text::trim(std::string_view(trimmed).substr(1, close - 1));
        body = text::trim(std::string_view(trimmed).substr(close + 1));
        if (!body.empty()) body += "\n";
        in_section = true;
        continue;
      }
    }
    if (in_section) body += line + "\n";
  }
  flush();
  return out;
}

static const std::string& section(const std::map<std::string, std::string>& s, const std::string& name) {
  for (const auto& [k, v] : s)
    if (text::iequals(k, name)) return v;
  throw Error(ErrorCode::MissingSection, "response has no [" + name + "] section");
}

ActionChoice parse_action_response(std::string_view t, const std::vector<std::string>& options) {
  auto sections = parse_sections(t);
  const auto& suggestion = section(sections, "Option Suggestion");
  std::string raw = suggestion;
  if (auto q1 = raw.find('"'); q1 != std::string::npos) {
    auto q2 = raw.find('"', q1 + 1);
    raw = raw.substr(q1 + 1, q2 == std::string::npos ? std::string::npos : q2 - q1 - 1);
  } else {
    raw = text::split_lines(raw).empty() ? "" : text::split_lines(raw).front();
  }
  raw = text::trim(raw);
  if (raw.empty()) throw Error(ErrorCode::MissingSection, "[Option Suggestion] is empty");

  std::string purpose;
  for (const auto& [k, v] : sections)
    if (text::iequals(k, "Purpose")) purpose = text::canonicalize_spaces(v);

  auto chosen = ActionCommand::parse_option(raw);
  if (!chosen) throw Error(ErrorCode::OptionNotOffered, "'" + raw + "' is not an action");

  for (const auto& o : options) {
    auto offered = ActionCommand::parse_option(o);
    if (!offered || offered->kind != chosen->kind) continue;
    if (chosen->kind == ActionKind::AttendSubtask) {
      if (match_task(TaskPattern(offered->target), chosen->target))
        return {chosen->to_option(), purpose, *chosen};
      continue;
    }
    if (text::iequals(offered->target, chosen->target) && text::iequals(offered->destination, chosen->destination))
      return {offered->to_option(), purpose, *offered};
  }
  throw Error(ErrorCode::OptionNotOffered, "'" + raw + "' is not among the possible options");
}

RuleDescription parse_description(std::string_view t) {
  auto sections = parse_sections(t);
  RuleDescription d;
  d.generalized = text::canonicalize_spaces(section(sections, "Generalized Rule"));
  if (d.generalized.empty()) throw Error(ErrorCode::MissingSection, "[Generalized Rule] is empty");
  for (const auto& [k, v] : sections) {
    if (text::iequals(k, "Specific Rule")) d.specific = text::canonicalize_spaces(v);
    if (text::iequals(k, "Correspondence")) d.correspondence = v;
  }
  return d;
}

std::string parse_rule(std::string_view t) {
  auto lines = text::split_lines(t);
  std::vector<std::string> blocks;
  std::string current;
  bool inside = false;
  for (const auto& line : lines) {
    if (text::trim(line).starts_with("```")) {
      if (inside) blocks.push_back(current);
      current.clear();
      inside = !inside;
      continue;
    }
    if (inside) current += line + "\n";
  }
  if (blocks.empty()) throw Error(ErrorCode::NoCodeBlock, "response has no fenced code block");
  if (blocks.size() > 1) spdlog::warn("response has {} fenced blocks; using the first", blocks.size());
  return blocks.front();
}

CriticResult parse_critic(std::string_view t, const std::vector<std::string>& rule_ids) {
  auto sections = parse_sections(t);
  CriticResult r;
  for (const auto& [k, v] : sections)
    if (text::iequals(k, "End Condition")) r.end_condition = text::canonicalize_spaces(v);
  if (r.end_condition.empty()) throw Error(ErrorCode::MissingEndCondition, "critic gave no end condition");

  std::string verdict_text;
  for (const auto& [k, v] : sections)
    if (text::iequals(k, "Verdicts")) verdict_text = v;
  for (const auto& raw : text::split_lines(verdict_text)) {
    auto line = text::trim(raw);
    if (line.starts_with("*") || line.starts_with("-")) line = text::trim(line.substr(1));
    if (line.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    Verdict v;
    v.rule_id = text::trim(line.substr(0, colon));
    auto rest = text::trim(line.substr(colon + 1));
    if (text::starts_with_ci(rest, "keep")) {
      v.kind = VerdictKind::Keep;
    } else if (text::starts_with_ci(rest, "remove")) {
      v.kind = VerdictKind::Remove;
    } else if (text::starts_with_ci(rest, "modify")) {
      v.kind = VerdictKind::Modify;
      auto c2 = rest.find(':');
      v.new_description = c2 == std::string::npos ? "" : text::canonicalize_spaces(rest.substr(c2 + 1));
    } else {
      continue;
    }
    r.verdicts.push_back(std::move(v));
  }
  std::vector<std::string> got, want = rule_ids;
  for (const auto& v : r.verdicts) got.push_back(v.rule_id);
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  if (got != want)
    throw Error(ErrorCode::VerdictCountMismatch, std::to_string(r.verdicts.size()) + " verdicts for " +
                                                     std::to_string(rule_ids.size()) + " rules");
  return r;
}

bool parse_yes_no(std::string_view t) {
  auto words = text::split(text::canonicalize(t), ' ');
  for (auto w : words) {
    w.erase(std::remove_if(w.begin(), w.end(), [](char c) { return !std::isalpha(static_cast<unsigned char>(c)); }),
            w.end());
    if (w.empty() || w == "answer") continue;
    if (w == "yes" || w == "true") return true;
    if (w == "no" || w == "false") return false;
    break;
  }
  throw Error(ErrorCode::UnparsableResponse, "cannot read yes or no from '" + std::string(t.substr(0, 80)) + "'");
}

}  // namespace cogboot
