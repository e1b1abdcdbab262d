#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cogboot {

enum class ActionKind { MoveTo, PickUp, Put, Open, Close, Slice, AttendSubtask, Done, Quit };

/// The closed set of things the agent can do. Motor actions go to the
/// simulator; AttendSubtask, Done and Quit are handled by the agent itself.
struct ActionCommand {
  ActionKind kind = ActionKind::Done;
  std::string target;       // receptacle, object, or subtask text
  std::string destination;  // Put only

  static ActionCommand move_to(std::string receptacle);
  static ActionCommand pick_up(std::string object);
  static ActionCommand put(std::string object, std::string receptacle);
  static ActionCommand open(std::string receptacle);
  static ActionCommand close(std::string receptacle);
  static ActionCommand slice(std::string object);
  static ActionCommand subtask(std::string task);
  static ActionCommand done();
  static ActionCommand quit();

  bool is_motor() const;

  /// "put Apple_1 on CounterTop_1"; empty for non-motor actions.
  std::string motor_text() const;

  /// Option-list rendering, e.g. "motor action: open Fridge_1",
  /// "attend to subtask: find a/an egg", "special action: 'done'".
  std::string to_option() const;

  /// Parses motor text such as "pick up Egg_1". Case-insensitive verbs.
  static std::optional<ActionCommand> parse_motor(std::string_view text);

  /// Parses any option rendering; std::nullopt when it is not an action.
  static std::optional<ActionCommand> parse_option(std::string_view text);

  friend bool operator==(const ActionCommand&, const ActionCommand&) = default;
};

}  // namespace cogboot
