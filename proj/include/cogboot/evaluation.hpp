#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogboot/agent.hpp"
#include "cogboot/scenario.hpp"

namespace cogboot {

struct ManifestEntry {
  std::filesystem::path floor_plan;  // resolved against the manifest's directory
  std::string task;
  std::size_t trials = 1;
  std::uint64_t shuffle_seed = 0;  // 0 keeps the authored layout
};

struct EvalManifest {
  std::string family;
  std::vector<ManifestEntry> entries;

  std::size_t total_trials() const;
  static EvalManifest from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static EvalManifest load(const std::filesystem::path& path);
};

struct TrialResult {
  std::string family;
  std::string task;
  std::size_t entry = 0;
  std::size_t trial = 0;
  bool success = false;
  double score = 0.0;
  std::size_t steps = 0;
  std::size_t oracle_calls = 0;
  std::size_t tokens = 0;
  std::optional<bool> success_without_llm;
};

struct MetricsRow {
  std::string family;
  AgentMode mode = AgentMode::Bootstrapped;
  std::size_t successes = 0;
  std::size_t trials = 0;
  std::optional<std::size_t> successes_without_llm;  // Bootstrapped only
  double mean_steps = 0.0;
  double mean_tokens = 0.0;

  nlohmann::json to_json() const;
};

MetricsRow summarize(const std::string& family, AgentMode mode, const std::vector<TrialResult>& trials);
std::string render_metrics_table(const std::vector<MetricsRow>& rows);
nlohmann::json metrics_json(const std::vector<MetricsRow>& rows);

using BackendFactory = std::function<std::unique_ptr<OracleBackend>()>;

struct EvalOptions {
  AgentMode mode = AgentMode::Bootstrapped;
  std::uint64_t seed = 0;
  std::size_t max_steps = 50;
  std::optional<FloorPlan> plan_override;  // replaces every entry's floor plan
};

/// Runs every trial with its own simulator, oracle client and copy of the
/// trained state. Bootstrapped trials are replayed with the oracle disabled
/// to fill success_without_llm.
std::vector<TrialResult> run_manifest(const EvalManifest& manifest, const Curriculum& families,
                                      const RunState& trained, const BackendFactory& backend,
                                      const EvalOptions& options, TraceSink* sink = nullptr);

}  // namespace cogboot
