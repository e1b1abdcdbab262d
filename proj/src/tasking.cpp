#include "cogboot/tasking.hpp"

#include <algorithm>
#include <set>

#include "cogboot/error.hpp"
#include "cogboot/io.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Splits "<a> foo <b>" style text into literal and variable pieces.
template <class Seg>
std::vector<Seg> split_template(std::string_view s) {
  std::vector<Seg> out;
  std::string lit;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '<') {
      std::size_t j = i + 1;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      if (j < s.size() && s[j] == '>' && j > i + 1) {
        if (!lit.empty()) out.push_back({false, std::move(lit)});
        lit.clear();
        out.push_back({true, std::string(s.substr(i + 1, j - i - 1))});
        i = j + 1;
        continue;
      }
    }
    lit += s[i++];
  }
  if (!lit.empty()) out.push_back({false, std::move(lit)});
  return out;
}

struct Piece {
  bool variable;
  std::string value;
};

}  // namespace

TaskPattern::TaskPattern(std::string text) : text_(text::canonicalize_spaces(text)) {
  for (auto& p : split_template<Piece>(text_)) segments_.push_back({p.variable, p.value});
}

std::vector<std::string> TaskPattern::variables() const {
  std::vector<std::string> out;
  for (const auto& s : segments_)
    if (s.variable && std::find(out.begin(), out.end(), s.value) == out.end()) out.push_back(s.value);
  return out;
}

std::optional<BindingSet> match_task(const TaskPattern& pattern, std::string_view task_text) {
  const std::string task = text::canonicalize_spaces(task_text);
  const auto& segs = pattern.segments_;
  BindingSet bindings;

  // Backtracking over segment boundaries; variables try the longest span first.
  auto rec = [&](auto& self, std::size_t si, std::size_t pos) -> bool {
    if (si == segs.size()) return pos == task.size();
    const auto& seg = segs[si];
    if (!seg.variable) {
      if (!text::starts_with_ci(std::string_view(task).substr(pos), seg.value)) return false;
      return self(self, si + 1, pos + seg.value.size());
    }
    auto bound = bindings.find(seg.value);
    if (bound != bindings.end()) {
      const auto& v = bound->second;
      if (!text::iequals(std::string_view(task).substr(pos, v.size()), v)) return false;
      return self(self, si + 1, pos + v.size());
    }
    for (std::size_t len = task.size() - pos; len >= 1; --len) {
      bindings[seg.value] = task.substr(pos, len);
      if (self(self, si + 1, pos + len)) return true;
    }
    bindings.erase(seg.value);
    return false;
  };
  if (!rec(rec, 0, 0)) return std::nullopt;
  return bindings;
}

std::string substitute(std::string_view template_text, const BindingSet& bindings) {
  std::string out;
  for (auto& p : split_template<Piece>(template_text)) {
    if (!p.variable) {
      out += p.value;
      continue;
    }
    auto it = bindings.find(p.value);
    if (it == bindings.end())
      throw Error(ErrorCode::MissingBinding, "no value for <" + p.value + "> in '" + std::string(template_text) + "'");
    out += it->second;
  }
  return out;
}

std::string substitute(const TaskPattern& pattern, const BindingSet& bindings) {
  return substitute(std::string_view(pattern.text()), bindings);
}

TaskInstance make_task(const TaskPattern& family, const BindingSet& bindings) {
  TaskInstance t;
  t.family = family;
  t.bindings = bindings;
  t.text = substitute(family, bindings);
  return t;
}

TaskInstance instantiate_random(const TaskPattern& pattern, const FloorPlan& plan, std::mt19937_64& rng) {
  BindingSet bindings;
  const auto& text_ = pattern.text();
  for (const auto& var : pattern.variables()) {
    std::vector<std::string> candidates;
    if (var == "object") {
      candidates = plan.object_types();
    } else if (var == "sliceable") {
      candidates = plan.sliceable_types();
    } else {
      bool by_type = text_.find("a/an <" + var + ">") != std::string::npos;
      candidates = by_type ? plan.receptacle_types() : plan.receptacle_names();
    }
    if (candidates.empty())
      throw Error(ErrorCode::NoCandidates, "no candidates for <" + var + "> in '" + text_ + "'");
    bindings[var] = candidates[rng() % candidates.size()];
  }
  return make_task(pattern, bindings);
}

// ---- stack ----

bool TaskStack::contains(const std::string& family, const BindingSet& bindings) const {
  for (const auto& t : stack_) {
    if (t.family.text() != family || t.bindings.size() != bindings.size()) continue;
    bool same = std::equal(t.bindings.begin(), t.bindings.end(), bindings.begin(), [](const auto& a, const auto& b) {
      return a.first == b.first && text::iequals(a.second, b.second);
    });
    if (same) return true;
  }
  return false;
}

PushResult TaskStack::push(TaskInstance task) {
  if (contains(task.family.text(), task.bindings)) return PushResult::Duplicate;
  if (stack_.size() >= kMaxDepth) return PushResult::DepthExceeded;
  task.outcome = TaskOutcome::Pending;
  stack_.push_back(std::move(task));
  return PushResult::Pushed;
}

TaskInstance TaskStack::pop(TaskOutcome outcome) {
  if (stack_.empty()) throw Error(ErrorCode::EmptyStack, "pop on empty task stack");
  auto t = std::move(stack_.back());
  stack_.pop_back();
  t.outcome = outcome;
  history_[t.text] = outcome == TaskOutcome::Done;
  return t;
}

const TaskInstance& TaskStack::top() const {
  if (stack_.empty()) throw Error(ErrorCode::EmptyStack, "task stack is empty");
  return stack_.back();
}

// ---- end conditions ----

void EndConditionRegistry::set(const std::string& family, const std::string& sentence) {
  entries_[family] = text::canonicalize_spaces(sentence);
}

std::optional<std::string> EndConditionRegistry::get(const std::string& family) const {
  auto it = entries_.find(family);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json EndConditionRegistry::to_json() const { return entries_; }

EndConditionRegistry EndConditionRegistry::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "end conditions must be an object");
  EndConditionRegistry r;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw Error(ErrorCode::SchemaError, "end condition for '" + k + "' is not a string");
    r.set(k, v.get<std::string>());
  }
  return r;
}

// ---- curriculum ----

Curriculum parse_curriculum(std::string_view content) {
  Curriculum out;
  for (const auto& raw : text::split_lines(content)) {
    auto line = raw.substr(0, raw.find('#'));
    line = text::trim(line);
    if (!line.empty()) out.emplace_back(line);
  }
  if (out.empty()) throw Error(ErrorCode::SchemaError, "curriculum is empty");
  return out;
}

Curriculum load_curriculum(const std::filesystem::path& path) { return parse_curriculum(io::read_text(path)); }

std::optional<TaskPattern> family_of(std::string_view task, const std::vector<TaskPattern>& families) {
  for (const auto& f : families)
    if (match_task(f, task)) return f;
  return std::nullopt;
}

std::string family_key(const TaskPattern& pattern) {
  const auto t = text::to_lower(pattern.text());
  if (t.starts_with("explore")) return "explore";
  if (t.starts_with("find")) return "find";
  if (t.starts_with("pick and place")) return "pick_place";
  if (t.starts_with("slice")) return "slice";
  if (t.starts_with("put things")) return "clear";
  return text::replace_all(text::canonicalize(t), " ", "_");
}

}  // namespace cogboot
