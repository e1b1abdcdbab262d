#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <random>
#include <set>

#include "cogboot/error.hpp"
#include "cogboot/oracle.hpp"
#include "cogboot/production.hpp"
#include "support.hpp"

using namespace cogboot;
using testsupport::compact_kb;
using testsupport::compact_snapshot;
using testsupport::CountingOracle;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, ProductionRule> corpus() {
  std::map<std::string, ProductionRule> out;
  for (const auto& dir : {testsupport::kData / "rules", testsupport::kTestData / "rules"})
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".prod") {
        auto r = parse_production(slurp(e.path()));
        out.emplace(r.id, r);
      }
  return out;
}

nlohmann::json cases() { return nlohmann::json::parse(slurp(testsupport::kTestData / "rule_cases.json")); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::ParseError;
}

const char* kSlicePutNearest = R"(production slice_put_nearest {
  task: "slice a/an <object>"
  bind <countertop> = nearest of receptacles type "CounterTop"
  when {
    task "slice a/an <object>"
    holding <object>
    world false "<location> is a suitable place for slicing"
    exists receptacles type "CounterTop"
  }
  then motor "put <object> on <countertop>"
  desc: "put it on a countertop"
})";

KnowledgeSnapshot lettuce_at_sink() {
  return compact_snapshot(nlohmann::json::parse(R"({
    "task": "slice a/an Lettuce", "location": "SinkBasin_1",
    "receptacles": [["SinkBasin_1", "SinkBasin", 0, "fully", "not_openable"],
                    ["CounterTop4", "CounterTop", 1.3, "unexplored", "not_openable"],
                    ["CounterTop1", "CounterTop", 3.1, "fully", "not_openable"]],
    "objects": [["Lettuce_895e9ec5", "Lettuce", "Gripper", []]]})"));
}

}  // namespace

TEST_CASE("reference slice rule parses with its declared shape") {
  auto r = parse_production(kSlicePutNearest);
  CHECK(r.id == "slice_put_nearest");
  CHECK(r.task_pattern.variables() == std::vector<std::string>{"object"});
  REQUIRE(r.selectors.size() == 1);
  CHECK(r.selectors[0].var == "countertop");
  CHECK(r.preconditions.size() == 4);
  CHECK(r.effect.kind == EffectKind::Motor);
  CHECK(r.effect.text == "put <object> on <countertop>");
}

TEST_CASE("parse errors") {
  CHECK(code_of([] {
          parse_production("production x {\n  task: \"find a/an <object>\"\n  when {\n  }\n  then subtask \"find a/an <tool>\"\n}");
        }) == ErrorCode::UnboundVariable);
  CHECK(code_of([] {
          parse_production("production x {\n  task: \"find a/an <object>\"\n  when {\n    levitating <object>\n  }\n  then done\n}");
        }) == ErrorCode::UnknownPredicate);
  try {
    parse_production("production x {\n  task: \"find a/an <object>\"\n  when {\n  }\n  then frobnicate\n}");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 5, column") != std::string::npos);
  }
}

TEST_CASE("corpus round-trips and serializes canonically") {
  auto rules = corpus();
  CHECK(rules.size() == 27);
  for (const auto& [id, r] : rules) {
    CAPTURE(id);
    auto text = serialize_production(r);
    auto again = parse_production(text);
    CHECK(again == r);
    CHECK(serialize_production(again) == text);
  }
}

TEST_CASE("semantically equal sources serialize identically") {
  auto a = parse_production(kSlicePutNearest);
  std::string noisy = "# spacing and comments do not matter\n"
                      "production   slice_put_nearest{\n task:\"slice a/an <object>\"\n"
                      "bind <countertop>=nearest of receptacles type \"CounterTop\"   # nearest one\n"
                      "when{\ntask \"slice a/an <object>\"\n  holding   <object>\n"
                      "world false \"<location> is a suitable place for slicing\"\n"
                      "exists receptacles type \"CounterTop\"\n}\nthen motor \"put <object> on <countertop>\"\n"
                      "desc: \"put it on a countertop\"\n}\n";
  CHECK(serialize_production(parse_production(noisy)) == serialize_production(a));
}

TEST_CASE("empty when block") {
  auto r = parse_production("production d {\n  task: \"find a/an <object>\"\n  when {\n  }\n  then done\n}");
  CHECK(r.preconditions.empty());
  auto text = serialize_production(r);
  CHECK(text.find("  when {\n  }\n") != std::string::npos);
  CHECK(parse_production(text) == r);
}

TEST_CASE("reference slice rule: bindings and option") {
  auto r = parse_production(kSlicePutNearest);
  auto snap = lettuce_at_sink();
  WorldKnowledgeBase kb;
  CountingOracle oracle(false);
  MatchContext ctx{snap, kb, &oracle};
  auto m = match(r, ctx);
  REQUIRE(m.ok);
  CHECK(m.bindings.at("object") == "Lettuce");
  CHECK(m.bindings.at("countertop") == "CounterTop4");
  CHECK(oracle.asked == std::vector<std::string>{"sinkbasin is a suitable place for slicing"});

  auto cmd = instantiate_effect(r, {{"object", "Lettuce_895e9ec5"}, {"countertop", "CounterTop4"}});
  CHECK(cmd.to_option() == "motor action: put Lettuce_895e9ec5 on CounterTop4");
  CHECK(resolve_action(instantiate_effect(r, m.bindings), snap).to_option() ==
        "motor action: put Lettuce_895e9ec5 on CounterTop4");

  auto v = replay_verify(r, ctx, ActionCommand::put("Lettuce_895e9ec5", "CounterTop4"));
  CHECK(v.pass);
  CHECK(v.reason.empty());
  CHECK(oracle.asked.size() == 1);
}

TEST_CASE("task pattern mismatch is reported first") {
  auto r = corpus().at("slice_cut");
  auto snap = lettuce_at_sink();
  snap.current_task = "find a/an egg";
  WorldKnowledgeBase kb;
  MatchContext ctx{snap, kb, nullptr};
  auto m = match(r, ctx);
  CHECK_FALSE(m.ok);
  CHECK(m.stage == MatchStage::Task);
  CHECK(m.reason.find("task does not match") != std::string::npos);
}

TEST_CASE("empty-receptacle selector failure names the selector") {
  auto r = corpus().at("clear_put_away");
  // Every cabinet holds something; a cabinet is empty only when fully explored with no contents.
  auto snap = compact_snapshot(nlohmann::json::parse(R"({
    "task": "put things on the countertop away", "location": "CounterTop_1",
    "receptacles": [["CounterTop_1", "CounterTop", 0, "fully", "not_openable"],
                    ["Cabinet_1", "Cabinet", 2, "fully", "open"],
                    ["Cabinet_2", "Cabinet", 3, "fully", "open"]],
    "objects": [["Apple_1", "Apple", "CounterTop_1", []], ["Mug_1", "Mug", "Cabinet_1", []],
                ["Cup_1", "Cup", "Cabinet_2", []]]})"));
  WorldKnowledgeBase kb;
  MatchContext ctx{snap, kb, nullptr};
  auto m = match(r, ctx);
  CHECK_FALSE(m.ok);
  CHECK(m.stage == MatchStage::Selector);
  CHECK(m.index == 1);
  CHECK(m.reason == "no candidate for " + to_string(r.selectors[1]));

  // Hand evaluation: a cabinet is empty iff it is fully explored and nothing is known inside.
  auto empty_cabinets = [&] {
    int n = 0;
    for (const auto& rk : snap.spatial)
      if (rk.receptacle_type == "Cabinet" && rk.exploration == Exploration::Fully && rk.known_contents.empty()) ++n;
    return n;
  };
  CHECK(empty_cabinets() == 0);

  snap.objects.pop_back();  // Cabinet_2 now empty
  snap.spatial[2].known_contents.clear();
  CHECK(empty_cabinets() == 1);
  auto ok = match(r, ctx);
  REQUIRE(ok.ok);
  CHECK(ok.bindings.at("cabinet") == "Cabinet_2");
  CHECK(ok.bindings.at("item") == "Apple_1");
}

TEST_CASE("effect instantiation") {
  auto r = parse_production("production t {\n  task: \"slice a/an <obj>\"\n  bind <tool> = first of objects type \"Knife\"\n"
                            "  when {\n  }\n  then subtask \"find a/an <tool>\"\n}");
  auto cmd = instantiate_effect(r, {{"obj", "Apple"}, {"tool", "Knife"}});
  CHECK(cmd.kind == ActionKind::AttendSubtask);
  CHECK(cmd.target == "find a/an Knife");
  CHECK(code_of([&] { instantiate_effect(r, {{"obj", "Apple"}}); }) == ErrorCode::MissingBinding);

  auto d = corpus().at("explore_done");
  CHECK(instantiate_effect(d, {}) == ActionCommand::done());
  CHECK(instantiate_effect(d, {{"receptacle", "Fridge_1"}, {"junk", "x"}}) == ActionCommand::done());
  CHECK(instantiate_effect(corpus().at("find_quit"), {{"object", "Mug"}}) == ActionCommand::quit());
}

TEST_CASE("replay failures carry the reason") {
  auto bad = parse_production(R"(production bad_slice {
  task: "slice a/an <object>"
  bind <countertop> = nearest of receptacles type "CounterTop"
  when {
    holding <object>
    world true "<location> is a suitable place for slicing"
  }
  then motor "put <object> on <countertop>"
})");
  auto snap = lettuce_at_sink();
  WorldKnowledgeBase kb;
  OracleClient oracle(std::make_unique<ScriptedOracle>(
      ScriptedOracle::load(testsupport::kData / "fixtures" / "scripted_oracle.json")));
  MatchContext ctx{snap, kb, &oracle};
  auto v = replay_verify(bad, ctx, ActionCommand::put("Lettuce_895e9ec5", "CounterTop4"));
  CHECK_FALSE(v.pass);
  CHECK(v.reason == "got unknown statement: sinkbasin is a suitable place for slicing");
  CHECK(kb.get("sinkbasin is a suitable place for slicing") == Truth::Unknown);

  // Matches, but binds a different countertop than the one chosen.
  auto good = parse_production(kSlicePutNearest);
  kb.set("sinkbasin is a suitable place for slicing", false);
  auto w = replay_verify(good, ctx, ActionCommand::put("Lettuce_895e9ec5", "CounterTop1"));
  CHECK_FALSE(w.pass);
  REQUIRE(w.produced);
  CHECK(w.produced->destination == "CounterTop4");
  CHECK(w.reason.find("CounterTop1") != std::string::npos);
}

TEST_CASE("every corpus rule replays on its authored case") {
  auto rules = corpus();
  std::set<std::string> covered;
  for (const auto& c : cases()) {
    auto id = c.at("rule").get<std::string>();
    CAPTURE(id);
    REQUIRE(rules.count(id));
    auto snap = compact_snapshot(c);
    auto kb = compact_kb(c);
    MatchContext ctx{snap, kb, nullptr};
    auto m = match(rules.at(id), ctx);
    CAPTURE(m.reason);
    REQUIRE(m.ok);
    auto expected = ActionCommand::parse_option(c.at("expected").get<std::string>());
    REQUIRE(expected);
    CHECK(resolve_action(instantiate_effect(rules.at(id), m.bindings), snap).to_option() == expected->to_option());
    CHECK(replay_verify(rules.at(id), ctx, *expected).pass);
    covered.insert(id);
  }
  CHECK(covered.size() == rules.size());
}

namespace {

/// Random kitchen snapshots for one task; KB covers every statement the corpus can ask.
struct SnapshotGen {
  std::mt19937_64 rng;
  explicit SnapshotGen(std::uint64_t seed) : rng(seed) {}

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
  bool coin() { return pick(2) == 0; }

  KnowledgeSnapshot make(const std::string& task) {
    static const std::vector<std::pair<std::string, std::string>> recs = {
        {"Fridge_1", "Fridge"}, {"Cabinet_1", "Cabinet"}, {"Cabinet_2", "Cabinet"},
        {"CounterTop_1", "CounterTop"}, {"CounterTop_2", "CounterTop"}, {"SinkBasin_1", "SinkBasin"}};
    static const std::vector<std::string> types = {"Apple", "Knife", "Mug", "Egg"};
    KnowledgeSnapshot s;
    s.current_task = task;
    for (const auto& [name, type] : recs) {
      ReceptacleKnowledge k;
      k.name = name;
      k.receptacle_type = type;
      k.distance = 1.0 + pick(9);
      k.exploration = static_cast<Exploration>(pick(3));
      bool openable = type == "Fridge" || type == "Cabinet";
      k.open_state = openable ? (coin() ? OpenState::Open : OpenState::Closed) : OpenState::NotOpenable;
      s.spatial.push_back(k);
    }
    auto& here = s.spatial[pick(static_cast<int>(s.spatial.size()))];
    if (coin()) {
      here.distance = 0;
      s.location = here.name;
    }
    bool gripper_used = false;
    for (std::size_t i = 0; i < types.size(); ++i) {
      if (coin()) continue;
      ObjectFact f;
      f.object_id = types[i] + "_1";
      f.object_type = types[i];
      int where = pick(static_cast<int>(s.spatial.size()) + 2);
      if (where == 0 && !gripper_used) {
        f.location = kGripper;
        gripper_used = true;
      } else if (where <= 1) {
        f.location = kUnknownLocation;
      } else {
        f.location = s.spatial[where - 2].name;
      }
      if (types[i] == "Apple" && coin()) f.attributes.insert("sliced");
      s.objects.push_back(f);
    }
    for (auto& r : s.spatial) {
      for (const auto& f : s.objects)
        if (f.location == r.name) r.known_contents.push_back(f.object_id);
    }
    return s;
  }
};

}  // namespace

TEST_CASE("matching is pure once the kb is memoized; bindings are total") {
  auto rules = corpus();
  SnapshotGen gen(11);
  const std::vector<std::string> tasks = {"explore Fridge_1", "find a/an Apple", "find a/an Mug",
                                          "pick and place a/an Apple in/on a/an Fridge", "slice a/an Apple",
                                          "put things on the countertop away"};
  for (int i = 0; i < 300; ++i) {
    auto snap = gen.make(tasks[i % tasks.size()]);
    WorldKnowledgeBase kb;
    CountingOracle warm(gen.coin());
    MatchContext warm_ctx{snap, kb, &warm};
    for (const auto& [id, r] : rules) (void)match(r, warm_ctx);

    CountingOracle cold(true);
    MatchContext ctx{snap, kb, &cold};
    for (const auto& [id, r] : rules) {
      CAPTURE(id);
      auto a = match(r, ctx);
      auto b = match(r, ctx);
      CHECK(a.ok == b.ok);
      CHECK(a.bindings == b.bindings);
      CHECK(a.reason == b.reason);
      if (a.ok) {
        CHECK_NOTHROW(instantiate_effect(r, a.bindings));
      } else if (a.stage == MatchStage::Predicate) {
        // Failure-reason fidelity: the named condition fails on its own.
        std::string reason;
        CHECK_FALSE(evaluate_predicate(r.preconditions[a.index], a.bindings, ctx, &reason));
        CHECK(reason == a.reason);
      } else if (a.stage == MatchStage::Selector) {
        auto only = r;
        only.selectors.resize(a.index + 1);
        only.preconditions.clear();
        auto m = match(only, ctx);
        CHECK_FALSE(m.ok);
        CHECK(m.stage == MatchStage::Selector);
        CHECK(m.index == a.index);
      }
    }
    CHECK(cold.asked.empty());
  }
}

TEST_CASE("decision tree shapes") {
  auto rules = corpus();
  auto family = [&](const std::string& prefix) {
    std::vector<ProductionRule> out;
    for (const auto& [id, r] : rules)
      if (id.rfind(prefix, 0) == 0) out.push_back(r);
    return out;
  };
  UtilityStore u;
  auto explore = export_decision_tree(family("explore_"), u);
  CHECK(explore.leaf_count() == 3);
  std::set<std::string> leaves;
  for (const auto& n : explore.nodes)
    if (n.leaf) leaves.insert(n.label);
  CHECK(leaves.size() == 3);
  CHECK(explore.to_dot().find("digraph") != std::string::npos);

  auto single = export_decision_tree({rules.at("find_pick")}, u);
  CHECK(single.leaf_count() == 1);
  int conditions = 0;
  for (const auto& n : single.nodes)
    if (!n.leaf) {
      ++conditions;
      CHECK(n.no == -1);
    }
  CHECK(conditions == 2);

  CHECK(code_of([&] { export_decision_tree({}, u); }) == ErrorCode::EmptyRuleSet);

  std::vector<ProductionRule> two = {rules.at("explore_move"), rules.at("explore_open")};
  UtilityStore a, b;
  a.put("explore_move", {0.9, 3});
  a.put("explore_open", {0.5, 3});
  b.put("explore_move", {0.5, 3});
  b.put("explore_open", {0.9, 3});
  auto ta = export_decision_tree(two, a);
  auto tb = export_decision_tree(two, b);
  CHECK(ta.rules[ta.nodes[ta.root].rule].id == "explore_move");
  CHECK(tb.rules[tb.nodes[tb.root].rule].id == "explore_open");
  CHECK(ta.nodes[ta.root].label != tb.nodes[tb.root].label);
  CHECK(export_decision_tree(two, a).to_dot() == ta.to_dot());
}

TEST_CASE("decision tree walk agrees with the best matching rule") {
  auto rules = corpus();
  SnapshotGen gen(5);
  std::mt19937_64 urng(9);
  const std::vector<std::pair<std::string, std::string>> families = {
      {"explore_", "explore Cabinet_1"},
      {"find_", "find a/an Apple"},
      {"pp_", "pick and place a/an Apple in/on a/an Fridge"},
      {"slice_", "slice a/an Apple"},
      {"clear_", "put things on the countertop away"}};
  for (const auto& [prefix, task] : families) {
    std::vector<ProductionRule> fam;
    for (const auto& [id, r] : rules)
      if (id.rfind(prefix, 0) == 0) fam.push_back(r);
    for (int round = 0; round < 40; ++round) {
      UtilityStore u;
      for (const auto& r : fam) u.put(r.id, {std::uniform_int_distribution<int>(0, 4)(urng) * 0.25, 1});
      auto tree = export_decision_tree(fam, u);
      for (int k = 0; k < 25; ++k) {
        auto snap = gen.make(task);
        WorldKnowledgeBase kb;
        CountingOracle oracle(gen.coin());
        MatchContext ctx{snap, kb, &oracle};
        std::optional<std::string> best;
        double best_u = 0;
        for (const auto& r : fam) {
          if (!match(r, ctx).ok) continue;
          double ur = u.get(r.id).utility;
          if (!best || ur > best_u || (ur == best_u && r.id < *best)) {
            best = r.id;
            best_u = ur;
          }
        }
        CHECK(tree.walk(ctx) == best);
      }
    }
  }
}
