// Same httplib configuration as the library, so inline definitions agree.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <thread>

#include "cogboot/error.hpp"
#include "cogboot/oracle.hpp"
#include "cogboot/production.hpp"
#include "cogboot/simulator.hpp"
#include "support.hpp"

using namespace cogboot;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::ParseError;
}

KnowledgeSnapshot lettuce_at_sink() {
  auto s = testsupport::compact_snapshot(nlohmann::json::parse(R"({
    "task": "slice a/an Lettuce", "location": "SinkBasin_1",
    "receptacles": [["SinkBasin_1", "SinkBasin", 0, "fully", "not_openable"],
                    ["CounterTop4", "CounterTop", 1.3, "unexplored", "not_openable"],
                    ["Fridge_1", "Fridge", 2.5, "partial", "closed"]],
    "objects": [["Lettuce_895e9ec5", "Lettuce", "Gripper", []]]})"));
  s.previous_tasks["find a/an Lettuce"] = true;
  return s;
}

PromptBundle action_prompt(const KnowledgeSnapshot& s, const std::vector<HistoryEntry>& history = {}) {
  EndConditionRegistry reg;
  reg.set("find a/an <object>", "the robot has found the object and has it in its gripper.");
  auto opts = list_options(s, reg, {});
  return build_action_prompt(s.current_task, "slice a/an <sliceable>", {{"sliceable", "Lettuce"}}, s, opts.options,
                             opts.blacklisted, history, reg);
}

std::string action_response(const std::string& option) {
  return "[Plan]\nFree the gripper first.\n\n[Option Suggestion]\n\"" + option +
         "\"\n\n[Purpose]\nFree the gripper so a knife can be held.\n\n[End]\n";
}

ScriptedOracle bundled() { return ScriptedOracle::load(testsupport::kData / "fixtures" / "scripted_oracle.json"); }

}  // namespace

TEST_CASE("token counting") {
  CHECK(count_tokens("") == 0);
  CHECK(count_tokens("abcd") == 1);
  CHECK(count_tokens("abcde") == 2);
  CHECK(count_tokens("\xC3\xA9t\xC3\xA9") == 1);  // three code points
}

TEST_CASE("action prompt layout") {
  auto s = lettuce_at_sink();
  auto p = action_prompt(s);
  CHECK(p.kind == PromptKind::ActionSelect);
  const std::vector<std::string> order = {"[Current Task]",   "[Current Location]", "[Spatial Knowledge]",
                                          "[Object Knowledge]", "[Previous Tasks]",  "[Action History]",
                                          "[Possible Options]", "[Blacklisted Options]"};
  std::size_t at = 0;
  for (const auto& h : order) {
    auto pos = p.user.find(h, at);
    CAPTURE(h);
    REQUIRE(pos != std::string::npos);
    at = pos;
  }
  CHECK(p.user.find("RobotGripper(Gripper) has Lettuce") != std::string::npos);
  CHECK(p.user.find("find a/an Lettuce: True") != std::string::npos);
  CHECK(p.user.find("[Action History]\n\n[Possible Options]") != std::string::npos);
  CHECK(p.user.find("motor action: put Lettuce_895e9ec5 on CounterTop4") != std::string::npos);
  // Nearer receptacles are listed first.
  CHECK(p.user.find("CounterTop4") < p.user.find("Fridge_1"));

  auto again = action_prompt(s);
  CHECK(again.user == p.user);
  CHECK(again.system == p.system);

  auto with_history = action_prompt(s, {{3, "motor action: move to SinkBasin_1", "look around"}});
  CHECK(with_history.user.find("motor action: move to SinkBasin_1") != std::string::npos);
}

TEST_CASE("parse action response") {
  auto s = lettuce_at_sink();
  auto opts = list_options(s, EndConditionRegistry{}, {}).options;
  auto choice = parse_action_response(action_response("motor action: put Lettuce_895e9ec5 on CounterTop4"), opts);
  CHECK(choice.option == "motor action: put Lettuce_895e9ec5 on CounterTop4");
  CHECK(choice.command == ActionCommand::put("Lettuce_895e9ec5", "CounterTop4"));
  CHECK(choice.purpose == "Free the gripper so a knife can be held.");

  CHECK(code_of([&] { parse_action_response("[Purpose]\nnothing\n", opts); }) == ErrorCode::MissingSection);
  CHECK(code_of([&] { parse_action_response(action_response("motor action: open CounterTop4"), opts); }) ==
        ErrorCode::OptionNotOffered);

  EndConditionRegistry reg;
  reg.set("find a/an <object>", "the robot has found the object and has it in its gripper.");
  auto with_sub = list_options(s, reg, {}).options;
  auto sub = parse_action_response(action_response("attend to subtask: find a/an Knife"), with_sub);
  CHECK(sub.command == ActionCommand::subtask("find a/an Knife"));
}

TEST_CASE("description, rule and critic parsers") {
  std::string desc =
      "[Relevant Information]\n * holding lettuce\n\n[Specific Rule]\nIF ... THEN choose x\n\n"
      "[Generalized Rule]\nIF the current task is to slice a/an <object> AND the robot is holding the <object> in its "
      "gripper THEN choose motor action: put <object> on <countertop>.\n\n[Correspondence]\n * <object> is "
      "Lettuce_895e9ec5.\n";
  auto d = parse_description(desc);
  CHECK(d.generalized.rfind("IF the current task is to slice a/an <object> AND the robot is holding the <object>", 0) ==
        0);
  CHECK(d.correspondence.find("Lettuce_895e9ec5") != std::string::npos);
  CHECK(code_of([] { parse_description("[Specific Rule]\nIF a THEN b\n"); }) == ErrorCode::MissingSection);
  CHECK(parse_description("[Generalized Rule]\nIF the robot is idle THEN choose special action: 'done'\n").generalized ==
        "IF the robot is idle THEN choose special action: 'done'");

  // The slice fixture's DSL must be accepted by the parser.
  std::string first_dsl;
  for (const auto& f : nlohmann::json::parse(std::ifstream(testsupport::kData / "fixtures" / "scripted_oracle.json")))
    if (f.at("kind") == "generate_rule" && f.at("response").get<std::string>().find("slice a/an") != std::string::npos) {
      first_dsl = f.at("response").get<std::string>();
      break;
    }
  REQUIRE_FALSE(first_dsl.empty());
  auto src = parse_rule(first_dsl);
  CHECK_NOTHROW(parse_production(src));

  CHECK(parse_rule("text\n```\nfirst\n```\nmore\n```\nsecond\n```\n") == "first\n");
  CHECK(code_of([] { parse_rule("no block at all"); }) == ErrorCode::NoCodeBlock);

  std::string critic =
      "[End Condition]\nthe robot has found the object and has it in its gripper.\n\n[Verdicts]\n"
      " * find_done: keep\n * find_quit: remove\n * find_move: modify: IF the object is known THEN move to it\n";
  auto c = parse_critic(critic, {"find_done", "find_move", "find_quit"});
  CHECK(c.end_condition == "the robot has found the object and has it in its gripper.");
  REQUIRE(c.verdicts.size() == 3);
  CHECK(c.verdicts[1].kind == VerdictKind::Remove);
  CHECK(c.verdicts[2].kind == VerdictKind::Modify);
  CHECK(c.verdicts[2].new_description == "IF the object is known THEN move to it");
  CHECK(code_of([&] { parse_critic(critic, {"find_done", "find_move"}); }) == ErrorCode::VerdictCountMismatch);
  CHECK(code_of([] { parse_critic("[Verdicts]\n * a: keep\n", {"a"}); }) == ErrorCode::MissingEndCondition);

  CHECK(parse_yes_no("Yes."));
  CHECK_FALSE(parse_yes_no("No, it is not."));
  CHECK(code_of([] { parse_yes_no("It depends."); }) == ErrorCode::UnparsableResponse);
}

TEST_CASE("repair and critic prompts") {
  auto p = action_prompt(lettuce_at_sink());
  auto r1 = build_repair_prompt(p, "production a {}", "motor action: put Lettuce_895e9ec5 on CounterTop4",
                                "got unknown statement: sinkbasin is a suitable place for slicing");
  CHECK(r1.kind == PromptKind::RepairRule);
  CHECK(r1.user.find("got unknown statement: sinkbasin is a suitable place for slicing") != std::string::npos);
  CHECK(r1.user.find("production a {}") != std::string::npos);
  CHECK(r1.user.find("motor action: put Lettuce_895e9ec5 on CounterTop4") != std::string::npos);

  auto r2 = build_repair_prompt(p, "production b {}", "x", "line 3, column 5: expected '}'");
  CHECK(r2.user.find("line 3, column 5") != std::string::npos);
  CHECK(r2.user.find("production a {}") == std::string::npos);

  auto c = build_critic_prompt("find a/an <object>", {{"find_done", "IF holding THEN done"}});
  CHECK(c.kind == PromptKind::Critic);
  CHECK(c.user.find("find_done") != std::string::npos);
}

TEST_CASE("scripted oracle is deterministic and never fabricates") {
  auto oracle = bundled();
  CHECK(oracle.size() == 95);
  auto p = action_prompt(lettuce_at_sink());
  auto a = oracle.complete(p);
  CHECK(a == oracle.complete(p));

  PromptBundle odd;
  odd.kind = PromptKind::Critic;
  odd.situation = {{"family", "dance with <partner>"}, {"rules", nlohmann::json::array()}};
  CHECK(code_of([&] { oracle.complete(odd); }) == ErrorCode::FixtureMiss);

  CHECK(code_of([] { ScriptedOracle::load("/nonexistent/fixtures.json"); }) == ErrorCode::FixtureMiss);

  OracleClient client(std::make_unique<ScriptedOracle>(bundled()));
  CHECK(client.ask_yes_no("apple is commonly stored in fridge"));
  CHECK_FALSE(client.ask_yes_no("apple is commonly stored in sinkbasin"));
  CHECK(code_of([&] { client.ask_yes_no("countertop is a suitable place for slicing"); }) ==
        ErrorCode::UnparsableResponse);
}

TEST_CASE("file-order matching within a kind") {
  auto j = nlohmann::json::parse(R"([
    {"kind": "knowledge_query", "signature": "stmt=egg*", "response": "first"},
    {"kind": "knowledge_query", "signature": "stmt=egg is*", "response": "second"},
    {"kind": "knowledge_query", "signature": "", "response": "fallback"}])");
  auto o = ScriptedOracle::from_json(j);
  CHECK(o.complete(build_knowledge_prompt("egg is white")) == "first");
  CHECK(o.complete(build_knowledge_prompt("milk is white")) == "fallback");
}

TEST_CASE("token ledger equals the sum of logged calls") {
  OracleClient client(std::make_unique<ScriptedOracle>(bundled()));
  auto p = action_prompt(lettuce_at_sink());
  std::size_t expected = 0;
  for (int i = 0; i < 3; ++i) {
    auto r = client.complete(p);
    CHECK(r.prompt_tokens == count_tokens(p.system + p.user));
    CHECK(r.response_tokens == count_tokens(r.text));
    expected += r.prompt_tokens + r.response_tokens;
  }
  auto m = client.mark();
  client.ask_yes_no("egg is commonly stored in fridge");
  CHECK(client.call_count() == 4);
  CHECK(client.call_count(PromptKind::KnowledgeQuery) == 1);
  std::size_t logged = 0;
  for (const auto& c : client.calls()) logged += c.prompt_tokens + c.response_tokens;
  CHECK(client.total_tokens() == logged);
  CHECK(client.total_tokens() == expected + client.tokens_since(m));
  auto lines = client.calls_jsonl();
  auto first = nlohmann::json::parse(lines.substr(0, lines.find('\n')));
  CHECK(first.at("kind") == "action_select");
  CHECK(first.contains("prompt_tokens"));
  CHECK(first.contains("response_tokens"));
  CHECK(first.contains("ts"));
}

TEST_CASE("disabled oracle") {
  OracleClient client(std::make_unique<DisabledOracle>());
  CHECK_FALSE(client.available());
  CHECK(code_of([&] { client.ask_yes_no("egg is commonly stored in fridge"); }) == ErrorCode::OracleUnavailable);
}

TEST_CASE("http backend speaks chat completions at temperature 0") {
  PromptBundle p;
  p.kind = PromptKind::KnowledgeQuery;
  p.system = "sys";
  p.user = "Is it?";
  auto body = HttpOracle::request_body(p, "gpt-4-0613");
  CHECK(body.at("temperature") == 0);
  CHECK(body.at("model") == "gpt-4-0613");
  CHECK(body.at("messages").size() == 2);
  CHECK(body.at("messages")[0].at("role") == "system");
  CHECK(body.at("messages")[1].at("content") == "Is it?");

  httplib::Server server;
  nlohmann::json seen;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "Yes"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("COGBOOT_TEST_KEY", "secret", 1);
  HttpOracleConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.api_key_env = "COGBOOT_TEST_KEY";
  cfg.timeout = std::chrono::seconds(5);
  OracleClient client(std::make_unique<HttpOracle>(cfg));
  CHECK(client.ask_yes_no("egg is commonly stored in fridge"));
  CHECK(seen.at("temperature") == 0);
  CHECK(seen.at("messages")[1].at("content").get<std::string>().find("egg is commonly stored in fridge") !=
        std::string::npos);
  CHECK(auth == "Bearer secret");

  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  HttpOracle broken(cfg);
  CHECK(code_of([&] { broken.complete(p); }) == ErrorCode::OracleUnavailable);

  server.stop();
  th.join();

  cfg.retries = 1;
  cfg.timeout = std::chrono::seconds(1);
  HttpOracle gone(cfg);
  CHECK(code_of([&] { gone.complete(p); }) == ErrorCode::OracleUnavailable);
}
