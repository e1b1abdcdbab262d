#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <cstdlib>

#include <spdlog/spdlog.h>

#include "cogboot/error.hpp"
#include "cogboot/io.hpp"
#include "cogboot/oracle.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

using nlohmann::json;

std::string DisabledOracle::complete(const PromptBundle& prompt) {
  throw Error(ErrorCode::OracleUnavailable, "oracle is disabled (" + std::string(to_string(prompt.kind)) + ")");
}

// ---- scripted ----

ScriptedOracle::ScriptedOracle(std::vector<Fixture> fixtures) : fixtures_(std::move(fixtures)) {}

ScriptedOracle ScriptedOracle::from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "fixtures must be a JSON array");
  std::vector<Fixture> out;
  for (const auto& f : j) {
    try {
      Fixture fx;
      fx.kind = prompt_kind_from_string(f.at("kind").get<std::string>());
      for (const auto& field : text::split(f.at("signature").get<std::string>(), ';')) {
        auto kv = text::trim(field);
        if (kv.empty()) continue;
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::SchemaError, "bad signature field '" + kv + "'");
        fx.signature[text::trim(kv.substr(0, eq))] = text::trim(kv.substr(eq + 1));
      }
      fx.response = f.at("response").get<std::string>();
      out.push_back(std::move(fx));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("fixture: ") + e.what());
    }
  }
  return ScriptedOracle(std::move(out));
}

ScriptedOracle ScriptedOracle::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::FixtureMiss, "fixture file not found: " + path.string());
  return from_json(io::read_json(path));
}

bool ScriptedOracle::knows_storage(const std::string& object_type, const std::string& receptacle_type) const {
  auto stmt = text::canonicalize(object_type + " is commonly stored in " + receptacle_type);
  for (const auto& f : fixtures_) {
    if (f.kind != PromptKind::KnowledgeQuery) continue;
    auto it = f.signature.find("stmt");
    if (it != f.signature.end() && !text::glob_match(it->second, stmt)) continue;
    try {
      return parse_yes_no(f.response);
    } catch (const Error&) {
      return false;
    }
  }
  return false;
}

namespace {

// Facts about a prompt's situation that both the signature and the slots use.
struct View {
  KnowledgeSnapshot s;
  BindingSet b;
  std::string family;
  std::string fam;
  std::string target;
  std::string target_type;
  std::string rec_ref;
  std::vector<std::string> trained;

  static View from(const json& sit) {
    View v;
    v.s = KnowledgeSnapshot::from_json(sit.at("snapshot"));
    v.b = sit.at("bindings").get<BindingSet>();
    v.family = sit.at("family").get<std::string>();
    v.fam = family_key(TaskPattern(v.family));
    v.trained = sit.value("trained", std::vector<std::string>{});
    for (const char* k : {"object", "sliceable"})
      if (auto it = v.b.find(k); it != v.b.end()) v.target = it->second;
    if (auto it = v.b.find("receptacle"); it != v.b.end()) v.rec_ref = it->second;
    v.target_type = v.target;
    if (const auto* o = v.s.find_object(v.target)) v.target_type = o->object_type;
    return v;
  }

  bool matches(const ObjectFact& o) const {
    return !target.empty() && (text::iequals(o.object_id, target) || text::iequals(o.object_type, target));
  }
  const ReceptacleKnowledge* receptacle(const std::string& name) const { return s.find_receptacle(name); }
  bool is_type(const std::string& location, std::string_view type) const {
    const auto* r = receptacle(location);
    return r && text::iequals(r->receptacle_type, type);
  }
  bool here_visible() const {
    const auto* r = receptacle(s.location);
    return r && r->open_state != OpenState::Closed;
  }
  bool empty_receptacle(const ReceptacleKnowledge& r) const {
    return r.exploration == Exploration::Fully &&
           std::none_of(s.objects.begin(), s.objects.end(), [&](const auto& o) { return o.location == r.name; });
  }

  template <class Pred>
  const ReceptacleKnowledge* nearest(Pred pred) const {
    const ReceptacleKnowledge* best = nullptr;
    for (const auto& r : s.spatial) {
      if (!pred(r)) continue;
      if (!best || r.distance < best->distance || (r.distance == best->distance && r.name < best->name)) best = &r;
    }
    return best;
  }

  const ReceptacleKnowledge* target_receptacle() const {
    if (rec_ref.empty()) return nullptr;
    if (const auto* r = receptacle(rec_ref)) return r;
    return nearest([&](const auto& r) { return text::iequals(r.receptacle_type, rec_ref); });
  }

  // held > in view here > nearest known elsewhere
  const ObjectFact* target_object(std::string* cls) const {
    const ObjectFact* known = nullptr;
    for (const auto& o : s.objects) {
      if (!matches(o)) continue;
      if (o.location == kGripper) {
        if (cls) *cls = "gripper";
        return &o;
      }
    }
    for (const auto& o : s.objects) {
      if (!matches(o) || o.location == kUnknownLocation) continue;
      if (o.location == s.location && here_visible()) {
        if (cls) *cls = "here";
        return &o;
      }
      const auto* r = receptacle(o.location);
      const auto* kr = known ? receptacle(known->location) : nullptr;
      if (!known || (r && kr && (r->distance < kr->distance || (r->distance == kr->distance && r->name < kr->name)))) {
        known = &o;
      }
    }
    if (cls) *cls = known ? "known" : (target.empty() ? "-" : "unknown");
    return known;
  }
};

std::string yn(bool b) { return b ? "y" : "n"; }

std::string open_word(OpenState s) {
  return s == OpenState::Open ? "open" : s == OpenState::Closed ? "closed" : "na";
}

}  // namespace

std::map<std::string, std::string> ScriptedOracle::features(const PromptBundle& prompt) const {
  const auto& sit = prompt.situation;
  std::map<std::string, std::string> f;
  if (prompt.kind == PromptKind::KnowledgeQuery) {
    f["stmt"] = text::canonicalize(sit.value("statement", std::string()));
    return f;
  }
  if (prompt.kind == PromptKind::Critic) {
    f["fam"] = family_key(TaskPattern(sit.value("family", std::string())));
    return f;
  }
  auto v = View::from(sit);
  const auto& s = v.s;
  f["fam"] = v.fam;
  f["task"] = text::canonicalize(sit.value("task", std::string()));
  std::vector<std::string> subs;
  for (const auto& t : v.trained) subs.push_back(family_key(TaskPattern(t)));
  std::sort(subs.begin(), subs.end());
  f["subs"] = text::join(subs, ",");

  const auto* g = s.gripper_object();
  f["grip"] = !g ? "empty" : v.matches(*g) ? "target" : text::iequals(g->object_type, "Knife") ? "knife" : "other";
  std::string cls;
  v.target_object(&cls);
  f["tloc"] = cls;
  auto any_target = [&](auto pred) {
    return std::any_of(s.objects.begin(), s.objects.end(), [&](const auto& o) { return v.matches(o) && pred(o); });
  };
  f["tsl"] = yn(any_target([](const auto& o) { return o.attributes.count("sliced") > 0; }));
  f["tct"] = yn(any_target([&](const auto& o) { return v.is_type(o.location, "CounterTop"); }));

  const auto* rec = v.target_receptacle();
  f["tin"] = yn(rec && any_target([&](const auto& o) {
                  return text::iequals(o.location, v.rec_ref) || v.is_type(o.location, v.rec_ref);
                }));
  const auto* here = v.receptacle(s.location);
  f["here"] = here ? here->receptacle_type : "-";
  f["rat"] = v.rec_ref.empty() ? "-"
                               : yn(here && (text::iequals(here->name, v.rec_ref) || text::iequals(here->receptacle_type, v.rec_ref)));
  f["rst"] = rec ? open_word(rec->open_state) : "-";
  f["rexp"] = rec ? std::string(to_string(rec->exploration)) : "-";

  auto unexplored = [](const ReceptacleKnowledge& r) { return r.exploration != Exploration::Fully; };
  f["unexp"] = yn(v.nearest(unexplored) != nullptr);
  f["stor"] = yn(!v.target.empty() && v.nearest([&](const auto& r) {
    return unexplored(r) && knows_storage(v.target_type, r.receptacle_type);
  }));
  f["ctobj"] = yn(std::any_of(s.objects.begin(), s.objects.end(), [&](const auto& o) { return v.is_type(o.location, "CounterTop"); }));
  f["ctunexp"] = yn(v.nearest([&](const auto& r) { return unexplored(r) && text::iequals(r.receptacle_type, "CounterTop"); }));
  f["cabempty"] = yn(v.nearest([&](const auto& r) { return text::iequals(r.receptacle_type, "Cabinet") && v.empty_receptacle(r); }));
  f["cabunexp"] = yn(v.nearest([&](const auto& r) { return unexplored(r) && text::iequals(r.receptacle_type, "Cabinet"); }));
  return f;
}

std::map<std::string, std::string> ScriptedOracle::slots(const PromptBundle& prompt) const {
  const auto& sit = prompt.situation;
  std::map<std::string, std::string> out;
  if (prompt.kind == PromptKind::KnowledgeQuery) {
    out["statement"] = sit.value("statement", std::string());
    return out;
  }
  if (prompt.kind == PromptKind::Critic) {
    out["family"] = sit.value("family", std::string());
    std::string verdicts;
    for (const auto& id : sit.value("rules", std::vector<std::string>{})) verdicts += " * " + id + ": Keep\n";
    out["verdicts"] = verdicts;
    return out;
  }
  auto v = View::from(sit);
  const auto& s = v.s;
  auto put = [&](const char* key, const ReceptacleKnowledge* r) {
    if (r) out[key] = r->name;
  };
  out["task"] = sit.value("task", std::string());
  out["family"] = v.family;
  if (!v.target.empty()) out["target"] = v.target;
  if (!v.target_type.empty()) out["target_type"] = v.target_type;
  if (!v.rec_ref.empty()) out["receptacle"] = v.rec_ref;
  if (!s.location.empty()) out["location"] = s.location;
  if (const auto* g = s.gripper_object()) out["grip_obj"] = g->object_id;
  if (const auto* o = v.target_object(nullptr)) {
    out["target_id"] = o->object_id;
    if (o->location != kGripper) out["target_loc"] = o->location;
  }
  put("target_rec", v.target_receptacle());
  auto unexplored = [](const ReceptacleKnowledge& r) { return r.exploration != Exploration::Fully; };
  put("nearest_countertop", v.nearest([](const auto& r) { return text::iequals(r.receptacle_type, "CounterTop"); }));
  put("nearest_unexplored", v.nearest(unexplored));
  put("storage_unexplored", v.nearest([&](const auto& r) {
        return unexplored(r) && knows_storage(v.target_type, r.receptacle_type);
      }));
  put("empty_cabinet", v.nearest([&](const auto& r) { return text::iequals(r.receptacle_type, "Cabinet") && v.empty_receptacle(r); }));
  put("unexplored_cabinet", v.nearest([&](const auto& r) { return unexplored(r) && text::iequals(r.receptacle_type, "Cabinet"); }));
  put("unexplored_countertop", v.nearest([&](const auto& r) { return unexplored(r) && text::iequals(r.receptacle_type, "CounterTop"); }));
  std::vector<std::string> ct;
  for (const auto& o : s.objects)
    if (v.is_type(o.location, "CounterTop")) ct.push_back(o.object_id);
  std::sort(ct.begin(), ct.end());
  if (!ct.empty()) out["ct_item"] = ct.front();
  return out;
}

std::string ScriptedOracle::complete(const PromptBundle& prompt) {
  auto f = features(prompt);
  for (const auto& fx : fixtures_) {
    if (fx.kind != prompt.kind) continue;
    bool ok = std::all_of(fx.signature.begin(), fx.signature.end(), [&](const auto& kv) {
      auto it = f.find(kv.first);
      return text::glob_match(kv.second, it == f.end() ? std::string() : it->second);
    });
    if (!ok) continue;
    auto values = slots(prompt);
    std::string out;
    const auto& r = fx.response;
    for (std::size_t i = 0; i < r.size();) {
      if (r.compare(i, 2, "${") == 0) {
        auto close = r.find('}', i);
        if (close == std::string::npos) throw Error(ErrorCode::SchemaError, "unterminated slot in fixture response");
        auto name = r.substr(i + 2, close - i - 2);
        auto it = values.find(name);
        if (it == values.end())
          throw Error(ErrorCode::FixtureMiss, "slot ${" + name + "} has no value for " + std::string(to_string(prompt.kind)));
        out += it->second;
        i = close + 1;
      } else {
        out += r[i++];
      }
    }
    return out;
  }
  std::string sig;
  for (const auto& [k, v] : f) sig += (sig.empty() ? "" : ";") + k + "=" + v;
  throw Error(ErrorCode::FixtureMiss, "no fixture for " + std::string(to_string(prompt.kind)) + " with " + sig);
}

// ---- http ----

HttpOracle::HttpOracle(HttpOracleConfig config) : config_(std::move(config)) {}

json HttpOracle::request_body(const PromptBundle& prompt, const std::string& model) {
  return json{{"model", model},
              {"temperature", 0},
              {"messages", json::array({{{"role", "system"}, {"content", prompt.system}},
                                        {{"role", "user"}, {"content", prompt.user}}})}};
}

std::string HttpOracle::complete(const PromptBundle& prompt) {
  const auto& url = config_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::OracleUnavailable, "bad endpoint '" + url + "'");
  auto path_start = url.find('/', scheme_end + 3);
  std::string base = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client cli(base);
  auto secs = static_cast<time_t>(config_.timeout.count());
  cli.set_connection_timeout(secs, 0);
  cli.set_read_timeout(secs, 0);
  cli.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  auto body = request_body(prompt, config_.model).dump();
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    auto res = cli.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      spdlog::warn("oracle request failed ({}), attempt {}", last_error, attempt + 1);
      continue;
    }
    if (res->status != 200)
      throw Error(ErrorCode::OracleUnavailable, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
      return json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::OracleUnavailable, std::string("malformed completion: ") + e.what());
    }
  }
  throw Error(ErrorCode::OracleUnavailable, "transport error after retries: " + last_error);
}

// ---- client ----

OracleClient::OracleClient(std::unique_ptr<OracleBackend> backend) : backend_(std::move(backend)) {}

OracleResponse OracleClient::complete(const PromptBundle& prompt) {
  OracleResponse r;
  r.text = backend_->complete(prompt);
  r.prompt_tokens = count_tokens(prompt.system + prompt.user);
  r.response_tokens = count_tokens(r.text);
  calls_.push_back({prompt.kind, r.prompt_tokens, r.response_tokens, static_cast<std::uint64_t>(calls_.size())});
  return r;
}

bool OracleClient::ask_yes_no(const std::string& statement) {
  return parse_yes_no(complete(build_knowledge_prompt(statement)).text);
}

std::size_t OracleClient::total_tokens() const { return tokens_since(0); }

std::size_t OracleClient::tokens_since(std::size_t mark) const {
  std::size_t total = 0;
  for (std::size_t i = mark; i < calls_.size(); ++i) total += calls_[i].prompt_tokens + calls_[i].response_tokens;
  return total;
}

std::size_t OracleClient::call_count(std::optional<PromptKind> kind) const {
  if (!kind) return calls_.size();
  return static_cast<std::size_t>(std::count_if(calls_.begin(), calls_.end(), [&](const auto& c) { return c.kind == *kind; }));
}

std::string OracleClient::calls_jsonl() const {
  std::string out;
  for (const auto& c : calls_)
    out += json{{"kind", to_string(c.kind)}, {"prompt_tokens", c.prompt_tokens}, {"response_tokens", c.response_tokens}, {"ts", c.ts}}.dump() + "\n";
  return out;
}

}  // namespace cogboot
