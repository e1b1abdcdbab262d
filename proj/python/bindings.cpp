// Thin bindings: structured results cross the boundary as JSON text.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <spdlog/spdlog.h>

#include "cogboot/agent.hpp"
#include "cogboot/error.hpp"
#include "cogboot/evaluation.hpp"
#include "cogboot/io.hpp"
#include "cogboot/learning.hpp"
#include "cogboot/production.hpp"
#include "cogboot/simulator.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace cogboot;
using nlohmann::json;

namespace {

json rule_json(const ProductionRule& r) {
  return {{"id", r.id}, {"task", r.task_pattern.text()}, {"source", serialize_production(r)}};
}

json observation_json(const Observation& o) {
  json objects = json::array();
  for (const auto& v : o.visible_objects)
    objects.push_back({{"id", v.id}, {"type", v.type}, {"location", v.location}, {"attributes", v.attributes}});
  json recs = json::array();
  for (const auto& r : o.receptacles)
    recs.push_back({{"name", r.name}, {"type", r.type}, {"pos", {r.pos.x, r.pos.y}}, {"open", r.open}});
  return {{"location", o.location}, {"robot", {o.robot.x, o.robot.y}}, {"receptacles", recs}, {"visible", objects}};
}

BackendFactory scripted(const fs::path& fixtures) {
  auto s = std::make_shared<ScriptedOracle>(ScriptedOracle::load(fixtures));
  return [s] { return std::make_unique<ScriptedOracle>(*s); };
}

std::string bootstrap_run(const fs::path& out, const fs::path& fixtures, const fs::path& curriculum,
                          const fs::path& scenario, std::uint64_t seed) {
  OracleClient oracle(scripted(fixtures)());
  RunState state;
  TraceSink sink;
  BootstrapConfig config;
  config.agent.seed = seed;
  auto reports = bootstrap(load_curriculum(curriculum), load_scenario(scenario), state, oracle, config, sink);
  state.save(out);
  io::write_text(out / "trace.jsonl", sink.records_jsonl());
  json j = json::array();
  for (const auto& r : reports)
    j.push_back({{"family", r.family},
                 {"instances", r.instances},
                 {"rules", r.rules},
                 {"end_condition", r.end_condition},
                 {"witnesses", r.witnesses}});
  return json{{"families", j}, {"oracle_calls", oracle.call_count()}, {"tokens", oracle.total_tokens()}}.dump();
}

std::string evaluate_run(const fs::path& run, const fs::path& manifest_path, const std::string& mode,
                         const fs::path& fixtures, const fs::path& curriculum, std::uint64_t seed) {
  EvalOptions options;
  options.mode = agent_mode_from_string(mode);
  options.seed = seed;
  RunState trained = RunState::load(run);
  if (options.mode == AgentMode::ActionOnly) {
    RunState bare;
    bare.end_conditions = trained.end_conditions;
    trained = std::move(bare);
  }
  auto manifest = EvalManifest::load(manifest_path);
  auto results = run_manifest(manifest, load_curriculum(curriculum), trained, scripted(fixtures), options);
  json trials = json::array();
  for (const auto& r : results)
    trials.push_back({{"task", r.task},
                      {"success", r.success},
                      {"score", r.score},
                      {"steps", r.steps},
                      {"oracle_calls", r.oracle_calls},
                      {"tokens", r.tokens},
                      {"success_without_llm", r.success_without_llm ? json(*r.success_without_llm) : json(nullptr)}});
  return json{{"metrics", summarize(manifest.family, options.mode, results).to_json()}, {"trials", trials}}.dump();
}

std::map<std::string, std::string> export_trees(const fs::path& run) {
  auto state = RunState::load(run);
  std::map<std::string, std::vector<ProductionRule>> by_family;
  for (const auto& s : state.rules.rules()) by_family[s.rule.task_pattern.text()].push_back(s.rule);
  std::map<std::string, std::string> out;
  for (const auto& [family, rules] : by_family) out[family] = export_decision_tree(rules, state.utilities).to_dot();
  return out;
}

class PySimulator {
 public:
  explicit PySimulator(const fs::path& scenario) : sim_(load_scenario(scenario)) {}

  /// (True, observation json) or (False, "<code>: message").
  std::pair<bool, std::string> step(const std::string& motor) {
    auto a = ActionCommand::parse_motor(motor);
    if (!a) throw Error(ErrorCode::ParseError, "not a motor action: '" + motor + "'");
    auto r = sim_.step(*a);
    if (auto* err = std::get_if<AffordanceError>(&r))
      return {false, std::string(to_string(err->code)) + ": " + err->message};
    return {true, observation_json(std::get<Observation>(r)).dump()};
  }
  std::string observe() const { return observation_json(sim_.observe()).dump(); }
  std::string state() const { return sim_.serialize_state(); }
  std::string facing() const { return sim_.facing(); }
  std::optional<std::string> held() const { return sim_.held(); }
  std::vector<std::string> object_ids() const { return sim_.object_ids(); }

 private:
  Simulator sim_;
};

}  // namespace

PYBIND11_MODULE(_cogboot, m) {
  m.doc() = "Production-rule agent core";
  spdlog::set_level(spdlog::level::warn);
  py::register_exception<Error>(m, "CogbootError", PyExc_RuntimeError);

  m.def("parse_rule", [](const std::string& text) { return rule_json(parse_production(text)).dump(); },
        py::arg("text"));
  m.def(
      "selection_probabilities",
      [](const std::vector<double>& utilities) {
        UtilityStore store;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < utilities.size(); ++i) {
          ids.push_back("r" + std::to_string(i));
          store.put(ids.back(), {utilities[i], 1});
        }
        return selection_probabilities(ids, store);
      },
      py::arg("utilities"));
  m.def(
      "reinforce_path",
      [](const std::vector<std::string>& rules, double discount) {
        std::vector<Edge> path;
        for (std::size_t i = 0; i < rules.size(); ++i)
          path.push_back({StateId{i}, rules[i], i + 1 == rules.size() ? kTerminalState : StateId{i + 1}});
        UtilityStore store;
        reinforce(store, path, LearningConfig{discount, 1.0});
        std::map<std::string, std::pair<double, std::uint64_t>> out;
        for (const auto& [id, rec] : store.records()) out[id] = {rec.utility, rec.applications};
        return out;
      },
      py::arg("rules"), py::arg("discount") = 0.95);
  m.def("bootstrap", &bootstrap_run, py::arg("out"), py::arg("fixtures"), py::arg("curriculum"), py::arg("scenario"),
        py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("evaluate", &evaluate_run, py::arg("run"), py::arg("manifest"), py::arg("mode"), py::arg("fixtures"),
        py::arg("curriculum"), py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("export_trees", &export_trees, py::arg("run"));

  py::class_<PySimulator>(m, "Simulator")
      .def(py::init<const fs::path&>(), py::arg("scenario"))
      .def("step", &PySimulator::step, py::arg("action"))
      .def("observe", &PySimulator::observe)
      .def("state", &PySimulator::state)
      .def_property_readonly("facing", &PySimulator::facing)
      .def_property_readonly("held", &PySimulator::held)
      .def("object_ids", &PySimulator::object_ids);
}
