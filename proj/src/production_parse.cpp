#include <set>

#include "cogboot/error.hpp"
#include "cogboot/production.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

namespace {

enum class Tok { Word, String, Var, LBrace, RBrace, Equals, Colon };

struct Token {
  Tok kind;
  std::string text;
  int col;
};

struct Line {
  int number;
  std::vector<Token> tokens;
};

[[noreturn]] void fail(int line, int col, const std::string& msg) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
}

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '/' || c == '\'';
}

std::vector<Line> lex(std::string_view src) {
  std::vector<Line> out;
  int number = 0;
  for (const auto& raw : text::split_lines(src)) {
    ++number;
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      char c = raw[i];
      int col = static_cast<int>(i) + 1;
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '#') {
        break;
      } else if (c == '"') {
        std::string s;
        ++i;
        bool closed = false;
        while (i < raw.size()) {
          if (raw[i] == '\\' && i + 1 < raw.size()) {
            s += raw[i + 1];
            i += 2;
          } else if (raw[i] == '"') {
            closed = true;
            ++i;
            break;
          } else {
            s += raw[i++];
          }
        }
        if (!closed) fail(number, col, "unterminated string");
        line.tokens.push_back({Tok::String, s, col});
      } else if (c == '<') {
        auto close = raw.find('>', i);
        if (close == std::string::npos) fail(number, col, "unterminated variable");
        auto name = raw.substr(i + 1, close - i - 1);
        if (name.empty() || !std::all_of(name.begin(), name.end(), [](char ch) {
              return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
            }))
          fail(number, col, "bad variable name '<" + name + ">'");
        line.tokens.push_back({Tok::Var, name, col});
        i = close + 1;
      } else if (c == '{') {
        line.tokens.push_back({Tok::LBrace, "{", col});
        ++i;
      } else if (c == '}') {
        line.tokens.push_back({Tok::RBrace, "}", col});
        ++i;
      } else if (c == '=') {
        line.tokens.push_back({Tok::Equals, "=", col});
        ++i;
      } else if (c == ':') {
        line.tokens.push_back({Tok::Colon, ":", col});
        ++i;
      } else if (word_char(c)) {
        std::size_t j = i;
        while (j < raw.size() && word_char(raw[j])) ++j;
        line.tokens.push_back({Tok::Word, raw.substr(i, j - i), col});
        i = j;
      } else {
        fail(number, col, std::string("unexpected character '") + c + "'");
      }
    }
    if (!line.tokens.empty()) out.push_back(std::move(line));
  }
  return out;
}

// Cursor over the tokens of one line.
struct Cursor {
  const Line& line;
  std::size_t pos = 0;

  bool done() const { return pos >= line.tokens.size(); }
  int col() const { return done() ? (line.tokens.empty() ? 1 : line.tokens.back().col + 1) : line.tokens[pos].col; }
  const Token* peek() const { return done() ? nullptr : &line.tokens[pos]; }

  bool peek_word(std::string_view w) const {
    auto* t = peek();
    return t && t->kind == Tok::Word && text::iequals(t->text, w);
  }
  bool accept_word(std::string_view w) {
    if (!peek_word(w)) return false;
    ++pos;
    return true;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail(line.number, col(), "expected '" + std::string(w) + "'");
  }
  const Token& expect(Tok kind, const char* what) {
    auto* t = peek();
    if (!t || t->kind != kind) fail(line.number, col(), std::string("expected ") + what);
    ++pos;
    return *t;
  }
  std::string word(const char* what) { return expect(Tok::Word, what).text; }
  void end() {
    if (!done()) fail(line.number, col(), "unexpected '" + line.tokens[pos].text + "'");
  }

  Arg arg() {
    auto* t = peek();
    if (!t || (t->kind != Tok::Var && t->kind != Tok::String && t->kind != Tok::Word))
      fail(line.number, col(), "expected a <variable> or a quoted literal");
    ++pos;
    return Arg{t->kind != Tok::Var, t->text};
  }
};

Domain parse_domain(Cursor& c) {
  Domain d;
  auto filters = [&](bool allow_holding, bool allow_in) {
    for (;;) {
      if (c.accept_word("type")) {
        d.type = c.arg();
      } else if (allow_holding && c.accept_word("holding")) {
        d.holding = c.arg();
      } else if (allow_in && c.accept_word("in")) {
        d.in = c.arg();
      } else {
        break;
      }
    }
  };
  if (c.accept_word("receptacles")) {
    d.kind = DomainKind::Receptacles;
    filters(true, false);
  } else if (c.accept_word("unexplored")) {
    c.expect_word("receptacles");
    d.kind = DomainKind::UnexploredReceptacles;
    filters(false, false);
  } else if (c.accept_word("empty")) {
    c.expect_word("receptacles");
    d.kind = DomainKind::EmptyReceptacles;
    filters(false, false);
  } else if (c.accept_word("objects")) {
    d.kind = DomainKind::Objects;
    filters(false, true);
  } else if (c.accept_word("storage")) {
    c.expect_word("of");
    d.kind = DomainKind::StorageOf;
    d.of = c.arg();
    d.unexplored_only = c.accept_word("unexplored");
  } else {
    fail(c.line.number, c.col(), "expected a domain (receptacles, unexplored receptacles, empty receptacles, objects, storage of)");
  }
  return d;
}

Predicate parse_predicate(Cursor& c) {
  Predicate p;
  auto* t = c.peek();
  if (!t) fail(c.line.number, c.col(), "expected a predicate");
  if (t->kind != Tok::Word)
    throw Error(ErrorCode::UnknownPredicate, "line " + std::to_string(c.line.number) + ", column " +
                                                  std::to_string(t->col) + ": '" + t->text + "' is not a predicate");
  const std::string head = text::to_lower(t->text);
  ++c.pos;
  auto choice = [&](std::initializer_list<const char*> allowed) {
    int col = c.col();
    auto w = text::to_lower(c.word("a keyword"));
    for (const char* a : allowed)
      if (w == a) return w;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : "|") + a;
    fail(c.line.number, col, "expected " + list);
  };

  if (head == "gripper") {
    c.expect_word("empty");
    p.kind = PredicateKind::GripperEmpty;
  } else if (head == "holding" || head == "located" || head == "unlocated" || head == "at" ||
             head == "unexplored" || head == "empty" || head == "visible") {
    p.kind = head == "holding"     ? PredicateKind::Holding
             : head == "located"   ? PredicateKind::Located
             : head == "unlocated" ? PredicateKind::Unlocated
             : head == "at"        ? PredicateKind::At
             : head == "unexplored" ? PredicateKind::Unexplored
             : head == "empty"     ? PredicateKind::Empty
                                   : PredicateKind::Visible;
    p.args.push_back(c.arg());
  } else if (head == "in") {
    p.kind = PredicateKind::In;
    p.args.push_back(c.arg());
    p.args.push_back(c.arg());
  } else if (head == "explored") {
    p.kind = PredicateKind::Explored;
    p.args.push_back(c.arg());
    p.word = choice({"partial", "full"});
  } else if (head == "state") {
    p.kind = PredicateKind::State;
    p.args.push_back(c.arg());
    p.word = choice({"open", "closed", "na"});
  } else if (head == "has") {
    p.kind = PredicateKind::Has;
    p.args.push_back(c.arg());
    p.word = text::to_lower(c.word("an attribute"));
  } else if (head == "world") {
    p.kind = choice({"true", "false"}) == "true" ? PredicateKind::WorldTrue : PredicateKind::WorldFalse;
    p.text = c.expect(Tok::String, "a quoted statement").text;
  } else if (head == "succeeded") {
    p.kind = PredicateKind::Succeeded;
    p.text = c.expect(Tok::String, "a quoted task").text;
  } else if (head == "task") {
    p.kind = PredicateKind::Task;
    p.text = c.expect(Tok::String, "a quoted task pattern").text;
  } else if (head == "exists") {
    p.kind = PredicateKind::Exists;
    p.domain = parse_domain(c);
  } else if (head == "not") {
    p.kind = PredicateKind::Not;
    p.inner.push_back(parse_predicate(c));
  } else {
    throw Error(ErrorCode::UnknownPredicate, "line " + std::to_string(c.line.number) + ", column " +
                                                  std::to_string(t->col) + ": unknown predicate '" + t->text + "'");
  }
  return p;
}

std::vector<std::string> template_vars(std::string_view tmpl) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while ((i = tmpl.find('<', i)) != std::string_view::npos) {
    auto j = tmpl.find('>', i);
    if (j == std::string_view::npos) break;
    auto name = tmpl.substr(i + 1, j - i - 1);
    bool ident = !name.empty() && std::all_of(name.begin(), name.end(), [](char ch) {
      return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
    });
    if (ident) out.emplace_back(name);
    i = j + 1;
  }
  return out;
}

struct Scope {
  std::set<std::string> bound;
  void require(const std::string& var, int line, const std::string& where) const {
    if (!bound.count(var))
      throw Error(ErrorCode::UnboundVariable,
                  "line " + std::to_string(line) + ": <" + var + "> used in " + where + " is never bound");
  }
  void require(const Arg& a, int line, const std::string& where) const {
    if (!a.literal) require(a.value, line, where);
  }
  void require_template(std::string_view tmpl, int line, const std::string& where) const {
    for (const auto& v : template_vars(tmpl)) require(v, line, where);
  }
  void require(const Domain& d, int line, const std::string& where) const {
    for (const auto* a : {&d.type, &d.holding, &d.in, &d.of})
      if (*a) require(**a, line, where);
  }
  void require(const Predicate& p, int line) const {
    const auto where = "'" + to_string(p) + "'";
    for (const auto& a : p.args) require(a, line, where);
    if (p.kind == PredicateKind::WorldTrue || p.kind == PredicateKind::WorldFalse ||
        p.kind == PredicateKind::Succeeded || p.kind == PredicateKind::Task)
      require_template(p.text, line, where);
    if (p.domain) require(*p.domain, line, where);
    for (const auto& in : p.inner) require(in, line);
  }
};

bool valid_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
  });
}

}  // namespace

ProductionRule parse_production(std::string_view source) {
  auto lines = lex(source);
  if (lines.empty()) fail(1, 1, "empty source");
  ProductionRule rule;
  std::size_t li = 0;
  Scope scope;

  {
    Cursor c{lines[li++]};
    c.expect_word("production");
    int col = c.col();
    rule.id = c.word("a rule id");
    if (!valid_id(rule.id)) fail(c.line.number, col, "bad rule id '" + rule.id + "'");
    c.expect(Tok::LBrace, "'{'");
    c.end();
  }

  auto next_line = [&](const char* what) -> const Line& {
    if (li >= lines.size()) fail(lines.back().number + 1, 1, std::string("unexpected end of input, expected ") + what);
    return lines[li++];
  };

  {
    Cursor c{next_line("'task:'")};
    c.expect_word("task");
    c.expect(Tok::Colon, "':'");
    rule.task_pattern = TaskPattern(c.expect(Tok::String, "a quoted task pattern").text);
    c.end();
    for (const auto& v : rule.task_pattern.variables()) scope.bound.insert(v);
    scope.bound.insert(kLocationVar);
  }

  while (li < lines.size() && !lines[li].tokens.empty() && lines[li].tokens[0].kind == Tok::Word &&
         text::iequals(lines[li].tokens[0].text, "bind")) {
    Cursor c{lines[li++]};
    c.expect_word("bind");
    BindingSelector s;
    int var_col = c.col();
    s.var = c.expect(Tok::Var, "a <variable>").text;
    if (scope.bound.count(s.var)) fail(c.line.number, var_col, "<" + s.var + "> is already bound");
    c.expect(Tok::Equals, "'='");
    bool explicit_strategy = false;
    for (auto [word, strategy] : {std::pair{"nearest", Strategy::Nearest}, std::pair{"first", Strategy::First},
                                  std::pair{"any", Strategy::Any}}) {
      if (c.peek_word(word)) {
        c.accept_word(word);
        c.expect_word("of");
        s.strategy = strategy;
        explicit_strategy = true;
        break;
      }
    }
    s.domain = parse_domain(c);
    c.end();
    if (!explicit_strategy)
      s.strategy = s.domain.kind == DomainKind::Objects ? Strategy::Any : Strategy::Nearest;
    scope.require(s.domain, c.line.number, "selector for <" + s.var + ">");
    scope.bound.insert(s.var);
    rule.selectors.push_back(std::move(s));
  }

  {
    Cursor c{next_line("'when {'")};
    c.expect_word("when");
    c.expect(Tok::LBrace, "'{'");
    bool closed = false;
    if (!c.done()) {
      if (c.peek()->kind == Tok::RBrace) {
        ++c.pos;
        closed = true;
      } else {
        auto p = parse_predicate(c);
        c.expect(Tok::RBrace, "'}'");
        scope.require(p, c.line.number);
        rule.preconditions.push_back(std::move(p));
        closed = true;
      }
      c.end();
    }
    while (!closed) {
      Cursor pc{next_line("a predicate or '}'")};
      if (pc.peek()->kind == Tok::RBrace) {
        ++pc.pos;
        pc.end();
        break;
      }
      auto p = parse_predicate(pc);
      pc.end();
      scope.require(p, pc.line.number);
      rule.preconditions.push_back(std::move(p));
    }
  }

  {
    Cursor c{next_line("'then'")};
    c.expect_word("then");
    int col = c.col();
    auto kind = text::to_lower(c.word("motor, subtask, done or quit"));
    if (kind == "motor" || kind == "subtask") {
      rule.effect.kind = kind == "motor" ? EffectKind::Motor : EffectKind::AttendSubtask;
      int tcol = c.col();
      rule.effect.text = text::canonicalize_spaces(c.expect(Tok::String, "a quoted template").text);
      if (rule.effect.kind == EffectKind::Motor) {
        // Validate the verb shape with placeholder operands.
        auto probe = rule.effect.text;
        for (const auto& v : template_vars(probe)) probe = text::replace_all(probe, "<" + v + ">", "X");
        if (!ActionCommand::parse_motor(probe)) fail(c.line.number, tcol, "not a motor action: '" + rule.effect.text + "'");
      }
      scope.require_template(rule.effect.text, c.line.number, "effect");
    } else if (kind == "done") {
      rule.effect.kind = EffectKind::Done;
    } else if (kind == "quit") {
      rule.effect.kind = EffectKind::Quit;
    } else {
      fail(c.line.number, col, "expected motor, subtask, done or quit");
    }
    c.end();
  }

  if (li < lines.size() && lines[li].tokens[0].kind == Tok::Word && text::iequals(lines[li].tokens[0].text, "desc")) {
    Cursor c{lines[li++]};
    c.expect_word("desc");
    c.expect(Tok::Colon, "':'");
    rule.description = text::canonicalize_spaces(c.expect(Tok::String, "a quoted description").text);
    c.end();
  }

  {
    Cursor c{next_line("'}'")};
    c.expect(Tok::RBrace, "'}'");
    c.end();
  }
  if (li < lines.size()) fail(lines[li].number, lines[li].tokens[0].col, "text after the closing '}'");
  return rule;
}

// ---- serialization ----

namespace {

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string arg_text(const Arg& a) { return a.literal ? quote(a.value) : "<" + a.value + ">"; }

}  // namespace

std::string to_string(const Domain& d) {
  std::string s;
  switch (d.kind) {
    case DomainKind::Receptacles: s = "receptacles"; break;
    case DomainKind::UnexploredReceptacles: s = "unexplored receptacles"; break;
    case DomainKind::EmptyReceptacles: s = "empty receptacles"; break;
    case DomainKind::Objects: s = "objects"; break;
    case DomainKind::StorageOf: s = "storage of " + arg_text(*d.of) + (d.unexplored_only ? " unexplored" : ""); break;
  }
  if (d.type) s += " type " + arg_text(*d.type);
  if (d.holding) s += " holding " + arg_text(*d.holding);
  if (d.in) s += " in " + arg_text(*d.in);
  return s;
}

std::string to_string(const BindingSelector& s) {
  static const char* names[] = {"nearest", "first", "any"};
  return "bind <" + s.var + "> = " + names[static_cast<int>(s.strategy)] + " of " + to_string(s.domain);
}

std::string to_string(const Predicate& p) {
  auto a = [&](std::size_t i) { return arg_text(p.args.at(i)); };
  switch (p.kind) {
    case PredicateKind::GripperEmpty: return "gripper empty";
    case PredicateKind::Holding: return "holding " + a(0);
    case PredicateKind::Located: return "located " + a(0);
    case PredicateKind::Unlocated: return "unlocated " + a(0);
    case PredicateKind::In: return "in " + a(0) + " " + a(1);
    case PredicateKind::At: return "at " + a(0);
    case PredicateKind::Explored: return "explored " + a(0) + " " + p.word;
    case PredicateKind::Unexplored: return "unexplored " + a(0);
    case PredicateKind::Empty: return "empty " + a(0);
    case PredicateKind::State: return "state " + a(0) + " " + p.word;
    case PredicateKind::Has: return "has " + a(0) + " " + p.word;
    case PredicateKind::WorldTrue: return "world true " + quote(p.text);
    case PredicateKind::WorldFalse: return "world false " + quote(p.text);
    case PredicateKind::Succeeded: return "succeeded " + quote(p.text);
    case PredicateKind::Visible: return "visible " + a(0);
    case PredicateKind::Task: return "task " + quote(p.text);
    case PredicateKind::Exists: return "exists " + to_string(*p.domain);
    case PredicateKind::Not: return "not " + to_string(p.inner.at(0));
  }
  return {};
}

std::string serialize_production(const ProductionRule& rule) {
  std::string out = "production " + rule.id + " {\n";
  out += "  task: " + quote(rule.task_pattern.text()) + "\n";
  for (const auto& s : rule.selectors) out += "  " + to_string(s) + "\n";
  out += "  when {\n";
  for (const auto& p : rule.preconditions) out += "    " + to_string(p) + "\n";
  out += "  }\n";
  switch (rule.effect.kind) {
    case EffectKind::Motor: out += "  then motor " + quote(rule.effect.text) + "\n"; break;
    case EffectKind::AttendSubtask: out += "  then subtask " + quote(rule.effect.text) + "\n"; break;
    case EffectKind::Done: out += "  then done\n"; break;
    case EffectKind::Quit: out += "  then quit\n"; break;
  }
  out += "  desc: " + quote(rule.description) + "\n";
  out += "}\n";
  return out;
}

}  // namespace cogboot
