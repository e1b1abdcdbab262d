#include "cogboot/evaluation.hpp"

#include <algorithm>

#include "cogboot/error.hpp"
#include "cogboot/io.hpp"
#include "cogboot/text.hpp"

namespace cogboot {

std::size_t EvalManifest::total_trials() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.trials;
  return n;
}

EvalManifest EvalManifest::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  try {
    EvalManifest m;
    m.family = j.at("family").get<std::string>();
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.floor_plan = base / e.at("floor_plan").get<std::string>();
      entry.task = e.at("task").get<std::string>();
      entry.trials = e.value("trials", std::size_t{1});
      entry.shuffle_seed = e.value("shuffle_seed", std::uint64_t{0});
      if (entry.trials == 0) throw Error(ErrorCode::SchemaError, "entry '" + entry.task + "' has zero trials");
      m.entries.push_back(std::move(entry));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("manifest: ") + e.what());
  }
}

EvalManifest EvalManifest::load(const std::filesystem::path& path) {
  return from_json(io::read_json(path), path.parent_path());
}

nlohmann::json MetricsRow::to_json() const {
  nlohmann::json j;
  j["family"] = family;
  j["mode"] = to_string(mode);
  j["success"] = std::to_string(successes) + "/" + std::to_string(trials);
  j["success_without_llm"] =
      successes_without_llm ? std::to_string(*successes_without_llm) + "/" + std::to_string(trials) : "n/a";
  j["mean_steps"] = mean_steps;
  j["mean_tokens"] = mean_tokens;
  return j;
}

MetricsRow summarize(const std::string& family, AgentMode mode, const std::vector<TrialResult>& trials) {
  MetricsRow row;
  row.family = family;
  row.mode = mode;
  row.trials = trials.size();
  std::size_t steps = 0;
  std::size_t tokens = 0;
  for (const auto& t : trials) {
    row.successes += t.success ? 1 : 0;
    steps += t.steps;
    tokens += t.tokens;
  }
  if (mode == AgentMode::Bootstrapped) {
    std::size_t k = 0;
    for (const auto& t : trials) k += t.success_without_llm.value_or(false) ? 1 : 0;
    row.successes_without_llm = k;
  }
  if (!trials.empty()) {
    row.mean_steps = static_cast<double>(steps) / static_cast<double>(trials.size());
    row.mean_tokens = static_cast<double>(tokens) / static_cast<double>(trials.size());
  }
  return row;
}

std::string render_metrics_table(const std::vector<MetricsRow>& rows) {
  std::vector<std::vector<std::string>> cells{{"Family", "Mode", "Success", "Success w/o LLM", "Steps", "Tokens"}};
  for (const auto& r : rows) {
    const auto j = r.to_json();
    cells.push_back({r.family, std::string(to_string(r.mode)), j["success"].get<std::string>(),
                     j["success_without_llm"].get<std::string>(), text::format_fixed(r.mean_steps, 2),
                     text::format_fixed(r.mean_tokens, 2)});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      const auto& c = cells[r][i];
      const std::string pad(width[i] - c.size(), ' ');
      line += i == 0 ? c + pad : "  " + (i >= 4 ? pad + c : c + pad);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  return out;
}

nlohmann::json metrics_json(const std::vector<MetricsRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) out.push_back(r.to_json());
  return nlohmann::json{{"rows", out}};
}

namespace {

std::uint64_t trial_seed(std::uint64_t base, std::size_t entry, std::size_t trial) {
  std::uint64_t x = base ^ (0x9e3779b97f4a7c15ULL * (entry + 1)) ^ (0xbf58476d1ce4e5b9ULL * (trial + 1));
  x ^= x >> 31;
  return x;
}

struct Outcome {
  EpisodeResult episode;
  GoalResult goal;
};

Outcome run_once(const FloorPlan& plan, std::uint64_t shuffle_seed, const TaskInstance& task,
                 const Curriculum& families, const RunState& trained, std::unique_ptr<OracleBackend> backend,
                 const AgentConfig& config, TraceSink& sink) {
  Simulator sim(plan);
  if (shuffle_seed != 0) sim.shuffle(shuffle_seed);
  RunState state = trained;
  OracleClient client(std::move(backend));
  Agent agent(config, state, client, sim, families, sink);
  auto episode = agent.run_task(task);
  const TaskOutcome final = episode.forced ? TaskOutcome::Pending : episode.outcome;
  return {episode, check_goal(sim, task, final)};
}

}  // namespace

std::vector<TrialResult> run_manifest(const EvalManifest& manifest, const Curriculum& families,
                                      const RunState& trained, const BackendFactory& backend,
                                      const EvalOptions& options, TraceSink* sink) {
  TraceSink scratch;
  TraceSink& out = sink ? *sink : scratch;
  std::vector<TrialResult> results;
  for (std::size_t e = 0; e < manifest.entries.size(); ++e) {
    const auto& entry = manifest.entries[e];
    const FloorPlan plan = options.plan_override ? *options.plan_override : load_scenario(entry.floor_plan);
    const auto family = family_of(entry.task, families);
    if (!family) throw Error(ErrorCode::UnknownFamily, "no curriculum family matches '" + entry.task + "'");
    const auto task = make_task(*family, *match_task(*family, entry.task));
    for (std::size_t t = 0; t < entry.trials; ++t) {
      AgentConfig config;
      config.mode = options.mode;
      config.training = false;
      config.max_steps_per_task = options.max_steps;
      config.max_total_steps = options.max_steps * 10;
      config.seed = trial_seed(options.seed, e, t);

      out.add({{"type", "trial"}, {"family", manifest.family}, {"task", task.text}, {"entry", e}, {"trial", t}});
      const auto with = run_once(plan, entry.shuffle_seed, task, families, trained, backend(), config, out);
      TrialResult r;
      r.family = manifest.family;
      r.task = task.text;
      r.entry = e;
      r.trial = t;
      r.success = with.goal.success;
      r.score = with.goal.score;
      r.steps = with.episode.steps;
      r.oracle_calls = with.episode.oracle_calls;
      r.tokens = with.episode.tokens;
      if (options.mode == AgentMode::Bootstrapped) {
        out.add({{"type", "trial"}, {"family", manifest.family}, {"task", task.text}, {"entry", e}, {"trial", t},
                 {"oracle", "disabled"}});
        const auto without = run_once(plan, entry.shuffle_seed, task, families, trained,
                                      std::make_unique<DisabledOracle>(), config, out);
        r.success_without_llm = without.goal.success;
      }
      results.push_back(std::move(r));
    }
  }
  return results;
}

}  // namespace cogboot
