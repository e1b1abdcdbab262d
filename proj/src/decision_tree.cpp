#include <algorithm>

#include "cogboot/error.hpp"
#include "cogboot/production.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

namespace detail {
bool eval_selector(const BindingSelector&, const std::string&, BindingSet&, const MatchContext&, std::string&);
bool eval_predicate_reason(const Predicate&, const BindingSet&, const MatchContext&, std::string&);
std::optional<BindingSet> initial_bindings(const ProductionRule&, const KnowledgeSnapshot&);
}  // namespace detail

namespace {

std::string effect_label(const EffectTemplate& e) {
  switch (e.kind) {
    case EffectKind::Motor: return "motor action: " + e.text;
    case EffectKind::AttendSubtask: return "attend to subtask: " + e.text;
    case EffectKind::Done: return "special action: 'done'";
    case EffectKind::Quit: return "special action: 'quit'";
  }
  return {};
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

DecisionTree export_decision_tree(const std::vector<ProductionRule>& rules, const UtilityStore& utilities) {
  if (rules.empty()) throw Error(ErrorCode::EmptyRuleSet, "no rules to export");
  DecisionTree tree;
  tree.rules = rules;
  std::sort(tree.rules.begin(), tree.rules.end(), [&](const auto& a, const auto& b) {
    double ua = utilities.get(a.id).utility, ub = utilities.get(b.id).utility;
    return ua != ub ? ua > ub : a.id < b.id;
  });
  tree.family = tree.rules.front().task_pattern.text();

  std::vector<int> first_node(tree.rules.size());
  std::vector<std::vector<int>> condition_nodes(tree.rules.size());
  for (std::size_t r = 0; r < tree.rules.size(); ++r) {
    const auto& rule = tree.rules[r];
    std::size_t k = 0;
    for (const auto& s : rule.selectors) {
      condition_nodes[r].push_back(static_cast<int>(tree.nodes.size()));
      tree.nodes.push_back({to_string(s), false, -1, -1, r, k++});
    }
    for (const auto& p : rule.preconditions) {
      condition_nodes[r].push_back(static_cast<int>(tree.nodes.size()));
      tree.nodes.push_back({to_string(p), false, -1, -1, r, k++});
    }
    int leaf = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({effect_label(rule.effect) + "\\n[" + rule.id + "]", true, -1, -1, r, k});
    auto& conds = condition_nodes[r];
    for (std::size_t i = 0; i < conds.size(); ++i)
      tree.nodes[conds[i]].yes = i + 1 < conds.size() ? conds[i + 1] : leaf;
    first_node[r] = conds.empty() ? leaf : conds.front();
  }
  for (std::size_t r = 0; r + 1 < tree.rules.size(); ++r)
    for (int n : condition_nodes[r]) tree.nodes[n].no = first_node[r + 1];
  tree.root = first_node.front();
  return tree;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.leaf; }));
}

std::string DecisionTree::to_dot() const {
  std::string out = "digraph \"" + dot_escape(family) + "\" {\n";
  out += "  label=\"" + dot_escape(family) + "\";\n  node [fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    out += "  n" + std::to_string(i) + " [shape=" + (n.leaf ? "ellipse" : "box") + ", label=\"" +
           text::replace_all(dot_escape(n.label), "\\\\n", "\\n") + "\"];\n";
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.yes >= 0) out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.yes) + " [label=\"yes\"];\n";
    if (n.no >= 0) out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.no) + " [label=\"no\", style=dashed];\n";
  }
  return out + "}\n";
}

std::optional<std::string> DecisionTree::walk(const MatchContext& ctx) const {
  int cur = root;
  std::size_t active = rules.size();
  BindingSet b;
  bool task_ok = false;
  while (cur >= 0) {
    const auto& n = nodes[cur];
    const auto& rule = rules[n.rule];
    if (n.rule != active) {
      active = n.rule;
      auto init = detail::initial_bindings(rule, ctx.snapshot);
      task_ok = init.has_value();
      b = init.value_or(BindingSet{});
    }
    if (!task_ok) {
      // Skip to the next rule's chain.
      int next = -1;
      for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].rule == n.rule + 1) {
          next = static_cast<int>(i);
          break;
        }
      cur = next;
      continue;
    }
    if (n.leaf) return rule.id;
    std::string reason;
    bool ok = n.condition < rule.selectors.size()
                  ? detail::eval_selector(rule.selectors[n.condition], rule.id, b, ctx, reason)
                  : detail::eval_predicate_reason(rule.preconditions[n.condition - rule.selectors.size()], b, ctx, reason);
    cur = ok ? n.yes : n.no;
  }
  return std::nullopt;
}

}  // namespace cogboot
