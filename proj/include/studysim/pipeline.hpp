#pragma once

// Stage orchestration over a run directory with a hash-addressed manifest.
//
//   <out>/<run_id>/manifest.json     config, backend, per-stage input/output hashes
//   <out>/<run_id>/accounting.json   wall clock and call counts (not hashed)
//   <out>/<run_id>/cache.jsonl       run-local LM cache
//   <out>/<run_id>/<stage>/...       immutable stage outputs

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "studysim/config.hpp"
#include "studysim/domain.hpp"
#include "studysim/finetune.hpp"
#include "studysim/lm.hpp"

namespace studysim::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDependency = 3;
inline constexpr int kExitBackendFatal = 4;

int exit_code_for(ErrorCode code);

// "mock:<script.json>" or "openai".
std::shared_ptr<Backend> make_backend(const std::string& spec, const Config& config);

// Deterministic default run id from the config snapshot and backend identity.
std::string default_run_id(const Config& config, const Backend& backend);

// A generated QA pair with everything needed downstream.
struct GeneratedRecord {
  QAPair qa;
  std::string subject;
  int chapter_ordinal = 0;
  int trial = 0;
  std::string system_prompt;
  std::string user_prompt;
};

json to_json_value(const GeneratedRecord& r);
GeneratedRecord generated_from_json(const json& j);

enum class SplitFilter { All, Train, Test };
SplitFilter parse_split_filter(std::string_view text);

struct StageSummary {
  std::string stage;
  std::vector<std::string> outputs;  // paths relative to the run dir
  std::vector<std::string> notes;
};

class Runner {
 public:
  Runner(Config config, std::shared_ptr<Backend> backend, std::optional<std::string> run_id = std::nullopt);
  ~Runner();

  const std::string& run_id() const { return run_id_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }
  Gateway& gateway() { return *gateway_; }
  const Config& config() const { return config_; }
  json manifest() const;

  StageSummary ingest(const std::filesystem::path& corpus_dir);
  StageSummary generate(std::optional<Strategy> strategy = std::nullopt, SplitFilter split = SplitFilter::All);
  StageSummary run(SplitFilter split = SplitFilter::All);
  StageSummary utility();
  StageSummary metrics();
  StageSummary filter(std::optional<double> theta = std::nullopt);
  StageSummary emit_finetune(std::optional<finetune::ExportMode> mode = std::nullopt, bool sft = false,
                             bool submit = false);
  StageSummary report();

  // Loaded stage outputs, after the manifest hashes are verified.
  std::vector<Chapter> chapters() const;
  std::vector<GeneratedRecord> generated() const;
  std::vector<UtilityRecord> utilities() const;

 private:
  class Stage;

  void require(const std::string& stage, const std::string& needed) const;
  json load_json(const std::string& relpath) const;
  std::vector<json> load_jsonl(const std::string& relpath) const;
  StageSummary commit(Stage& stage);
  void save_manifest() const;
  void account(const std::string& stage, double seconds, const GatewayStats& before);

  Config config_;
  std::shared_ptr<Backend> backend_;
  std::string run_id_;
  std::filesystem::path run_dir_;
  std::unique_ptr<Gateway> gateway_;
  json manifest_;
};

}  // namespace studysim::pipeline
