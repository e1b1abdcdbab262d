#include "cogboot/action.hpp"

#include "cogboot/text.hpp"

namespace cogboot {

ActionCommand ActionCommand::move_to(std::string receptacle) {
  return {ActionKind::MoveTo, std::move(receptacle), {}};
}
ActionCommand ActionCommand::pick_up(std::string object) {
  return {ActionKind::PickUp, std::move(object), {}};
}
ActionCommand ActionCommand::put(std::string object, std::string receptacle) {
  return {ActionKind::Put, std::move(object), std::move(receptacle)};
}
ActionCommand ActionCommand::open(std::string receptacle) {
  return {ActionKind::Open, std::move(receptacle), {}};
}
ActionCommand ActionCommand::close(std::string receptacle) {
  return {ActionKind::Close, std::move(receptacle), {}};
}
ActionCommand ActionCommand::slice(std::string object) {
  return {ActionKind::Slice, std::move(object), {}};
}
ActionCommand ActionCommand::subtask(std::string task) {
  return {ActionKind::AttendSubtask, std::move(task), {}};
}
ActionCommand ActionCommand::done() { return {ActionKind::Done, {}, {}}; }
ActionCommand ActionCommand::quit() { return {ActionKind::Quit, {}, {}}; }

bool ActionCommand::is_motor() const {
  return kind != ActionKind::AttendSubtask && kind != ActionKind::Done && kind != ActionKind::Quit;
}

std::string ActionCommand::motor_text() const {
  switch (kind) {
    case ActionKind::MoveTo: return "move to " + target;
    case ActionKind::PickUp: return "pick up " + target;
    case ActionKind::Put: return "put " + target + " on " + destination;
    case ActionKind::Open: return "open " + target;
    case ActionKind::Close: return "close " + target;
    case ActionKind::Slice: return "slice " + target;
    default: return {};
  }
}

std::string ActionCommand::to_option() const {
  switch (kind) {
    case ActionKind::AttendSubtask: return "attend to subtask: " + target;
    case ActionKind::Done: return "special action: 'done'";
    case ActionKind::Quit: return "special action: 'quit'";
    default: return "motor action: " + motor_text();
  }
}

std::optional<ActionCommand> ActionCommand::parse_motor(std::string_view raw) {
  const std::string s = text::canonicalize_spaces(raw);
  auto operand = [&](std::string_view verb) -> std::optional<std::string> {
    if (s.size() <= verb.size() + 1 || !text::starts_with_ci(s, verb) || s[verb.size()] != ' ') {
      return std::nullopt;
    }
    return s.substr(verb.size() + 1);
  };
  auto single = [&](std::string_view verb) -> std::optional<std::string> {
    auto rest = operand(verb);
    if (!rest || rest->find(' ') != std::string::npos) return std::nullopt;
    return rest;
  };
  if (auto r = single("move to")) return move_to(*r);
  if (auto r = single("pick up")) return pick_up(*r);
  if (auto r = single("open")) return open(*r);
  if (auto r = single("close")) return close(*r);
  if (auto r = single("slice")) return slice(*r);
  if (auto r = operand("put")) {
    auto parts = text::split(*r, ' ');
    if (parts.size() == 3 && (text::iequals(parts[1], "on") || text::iequals(parts[1], "in"))) {
      return put(parts[0], parts[2]);
    }
  }
  return std::nullopt;
}

std::optional<ActionCommand> ActionCommand::parse_option(std::string_view raw) {
  std::string s = text::trim(raw);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = text::trim(s.substr(1, s.size() - 2));
  constexpr std::string_view kMotor = "motor action:";
  constexpr std::string_view kSubtask = "attend to subtask:";
  constexpr std::string_view kSpecial = "special action:";
  if (text::starts_with_ci(s, kMotor)) return parse_motor(s.substr(kMotor.size()));
  if (text::starts_with_ci(s, kSubtask)) {
    auto task = text::trim(std::string_view(s).substr(kSubtask.size()));
    if (auto paren = task.find(" ("); paren != std::string::npos) task = text::trim(task.substr(0, paren));
    if (task.empty()) return std::nullopt;
    return subtask(task);
  }
  if (text::starts_with_ci(s, kSpecial)) {
    std::string word = text::to_lower(text::trim(std::string_view(s).substr(kSpecial.size())));
    word = text::replace_all(word, "'", "");
    word = text::replace_all(word, "\"", "");
    if (word == "done") return done();
    if (word == "quit") return quit();
  }
  return std::nullopt;
}

}  // namespace cogboot
