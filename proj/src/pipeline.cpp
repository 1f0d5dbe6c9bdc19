#include "studysim/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "studysim/corpus.hpp"
#include "studysim/forge.hpp"
#include "studysim/hash.hpp"
#include "studysim/metrics.hpp"
#include "studysim/openai_http.hpp"
#include "studysim/parallel.hpp"
#include "studysim/report.hpp"
#include "studysim/simulator.hpp"
#include "studysim/utility.hpp"

namespace fs = std::filesystem;

namespace studysim::pipeline {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::DependencyError: return kExitDependency;
    case ErrorCode::Fatal: return kExitBackendFatal;
    case ErrorCode::ConfigError:
    case ErrorCode::LayoutError:
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidInput:
    case ErrorCode::SplitError:
    case ErrorCode::EmptyDataset:
    case ErrorCode::ExemplarError: return kExitValidation;
    default: return kExitFailure;
  }
}

std::shared_ptr<Backend> make_backend(const std::string& spec, const Config& config) {
  if (spec.rfind("mock:", 0) == 0) return std::make_shared<MockBackend>(MockScript::load(spec.substr(5)));
  if (spec == "openai") {
    EndpointConfig endpoint = EndpointConfig::from_env();
    if (!std::getenv("STUDYSIM_API_BASE")) endpoint.base_url = config.api_base;
    return std::make_shared<OpenAIBackend>(std::move(endpoint));
  }
  throw Error(ErrorCode::ConfigError, "unknown backend '" + spec + "'; use mock:<script.json> or openai");
}

std::string default_run_id(const Config& config, const Backend& backend) {
  return "run-" + hash_parts({config.snapshot().dump(), backend.identity()}, 12);
}

json to_json_value(const GeneratedRecord& r) {
  return json{{"qa", r.qa},           {"subject", r.subject},
              {"chapter_ordinal", r.chapter_ordinal}, {"trial", r.trial},
              {"system_prompt", r.system_prompt},     {"user_prompt", r.user_prompt}};
}

GeneratedRecord generated_from_json(const json& j) {
  GeneratedRecord r;
  r.qa = j.at("qa").get<QAPair>();
  r.subject = j.at("subject").get<std::string>();
  r.chapter_ordinal = j.at("chapter_ordinal").get<int>();
  r.trial = j.at("trial").get<int>();
  r.system_prompt = j.at("system_prompt").get<std::string>();
  r.user_prompt = j.at("user_prompt").get<std::string>();
  return r;
}

SplitFilter parse_split_filter(std::string_view text) {
  if (text == "all") return SplitFilter::All;
  if (text == "train") return SplitFilter::Train;
  if (text == "test") return SplitFilter::Test;
  throw Error(ErrorCode::InvalidInput, "split must be all, train or test");
}

namespace {

std::string_view to_string(SplitFilter s) {
  switch (s) {
    case SplitFilter::All: return "all";
    case SplitFilter::Train: return "train";
    case SplitFilter::Test: return "test";
  }
  return "all";
}

bool selected(const Chapter& c, SplitFilter s) {
  return s == SplitFilter::All || (s == SplitFilter::Train && c.split == Split::Train) ||
         (s == SplitFilter::Test && c.split == Split::Test);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::DependencyError, "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + p.string());
  out << content;
}

// Relative path -> sha256 for every regular file under `root`.
std::map<std::string, std::string> hash_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    out[fs::relative(entry.path(), root).generic_string()] = sha256_hex(read_file(entry.path()));
  }
  return out;
}

std::string theta_label(double theta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", theta);
  return buf;
}

std::string csv_to_markdown(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::string row = "|";
    std::size_t cols = 0, start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row += " " + line.substr(start, comma == std::string::npos ? std::string::npos : comma - start) + " |";
      ++cols;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    out += row + "\n";
    if (header) {
      out += "|";
      for (std::size_t i = 0; i < cols; ++i) out += "---|";
      out += "\n";
      header = false;
    }
  }
  return out;
}

std::map<std::string, std::vector<Chapter>> by_subject(const std::vector<Chapter>& chapters) {
  std::map<std::string, std::vector<Chapter>> out;
  for (const auto& c : chapters) out[c.subject.name()].push_back(c);
  return out;
}

// Training chapters of a subject, or all of its chapters when none are split.
std::vector<Chapter> exemplar_pool(const std::vector<Chapter>& subject_chapters) {
  std::vector<Chapter> train;
  for (const auto& c : subject_chapters) {
    if (c.split == Split::Train) train.push_back(c);
  }
  return train.empty() ? subject_chapters : train;
}

finetune::FineTuneExample to_example(const GeneratedRecord& r) {
  return {r.qa.id, r.subject, r.chapter_ordinal, r.qa.anchor_section, r.system_prompt, r.user_prompt,
          r.qa.question};
}

std::vector<finetune::FineTuneExample> examples_for(const std::vector<std::string>& ids,
                                                    const std::map<std::string, GeneratedRecord>& by_id) {
  std::vector<finetune::FineTuneExample> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorCode::DependencyError, "utility record " + id + " has no generated pair");
    out.push_back(to_example(it->second));
  }
  return out;
}

sim::SimulatorOptions simulator_options(const Config& c, const fs::path& attempts_dir) {
  sim::SimulatorOptions o;
  o.learner_model = c.learner.model;
  o.learner_temperature = c.learner.temperature;
  o.evaluator_model = c.evaluator.model;
  o.evaluator_temperature = c.evaluator.temperature;
  o.base_seed = c.seed;
  o.context_budget_chars = c.context_budget_chars;
  o.attempts = c.llm_attempts;
  o.attempts_dir = attempts_dir;
  return o;
}

CallSpec role_spec(const RoleModel& role, std::int64_t seed) {
  return CallSpec{role.model, role.temperature, seed, 2048, std::nullopt};
}

// Pairs of one chapter grouped by generation trial.
std::map<std::string, std::map<int, std::vector<QAPair>>> pairs_by_chapter(const std::vector<GeneratedRecord>& recs) {
  std::map<std::string, std::map<int, std::vector<QAPair>>> out;
  for (const auto& r : recs) out[r.qa.chapter_id][r.trial].push_back(r.qa);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

class Runner::Stage {
 public:
  Stage(Runner& runner, std::string name)
      : runner_(runner),
        name_(std::move(name)),
        dir_(runner.run_dir_ / ".staging" / name_),
        start_(std::chrono::steady_clock::now()),
        before_(runner.gateway_->stats()) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  ~Stage() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
    fs::remove(dir_.parent_path(), ec);
  }
  Stage(const Stage&) = delete;
  Stage& operator=(const Stage&) = delete;

  const std::string& name() const { return name_; }
  const fs::path& dir() const { return dir_; }
  fs::path path(const std::string& rel) const {
    const auto p = dir_ / rel;
    fs::create_directories(p.parent_path());
    return p;
  }
  void write(const std::string& rel, const std::string& content) { write_file(dir_ / rel, content); }
  void write_json(const std::string& rel, const json& j) { write(rel, j.dump(2) + "\n"); }
  void write_jsonl(const std::string& rel, const std::vector<json>& lines) {
    std::string body;
    for (const auto& l : lines) body += l.dump() + "\n";
    write(rel, body);
  }
  void input(const std::string& key, const std::string& digest) { inputs[key] = digest; }
  void depends_on(const std::string& stage) {
    inputs[stage] = runner_.manifest_["stages"][stage]["digest"];
  }
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  const GatewayStats& before() const { return before_; }

  json params = json::object();
  json inputs = json::object();
  std::vector<std::string> notes;

 private:
  Runner& runner_;
  std::string name_;
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
  GatewayStats before_;
};

Runner::Runner(Config config, std::shared_ptr<Backend> backend, std::optional<std::string> run_id)
    : config_(std::move(config)), backend_(std::move(backend)) {
  run_id_ = run_id.value_or(default_run_id(config_, *backend_));
  if (run_id_.empty() || run_id_.find_first_of("/\\") != std::string::npos || run_id_ == "." || run_id_ == "..") {
    throw Error(ErrorCode::ConfigError, "invalid run id '" + run_id_ + "'");
  }
  run_dir_ = config_.out_dir / run_id_;
  fs::create_directories(run_dir_);

  GatewayOptions g;
  g.max_attempts = config_.max_attempts;
  g.backoff_base = std::chrono::milliseconds(config_.backoff_base_ms);
  g.requests_per_minute = config_.requests_per_minute;
  g.run_cache_file = run_dir_ / "cache.jsonl";
  if (!config_.cache_dir.empty()) g.global_cache_dir = config_.cache_dir;
  gateway_ = std::make_unique<Gateway>(backend_, g);

  const auto manifest_path = run_dir_ / "manifest.json";
  if (fs::exists(manifest_path)) {
    manifest_ = json::parse(read_file(manifest_path));
    if (manifest_.value("config", json()) != config_.snapshot() ||
        manifest_.value("backend", std::string()) != backend_->identity()) {
      throw Error(ErrorCode::ConfigError,
                  "run " + run_id_ + " was created with a different configuration or backend; use a new --run-id");
    }
  } else {
    manifest_ = json{{"run_id", run_id_},
                     {"backend", backend_->identity()},
                     {"seed", config_.seed},
                     {"config", config_.snapshot()},
                     {"stages", json::object()}};
    save_manifest();
  }
}

Runner::~Runner() = default;

json Runner::manifest() const { return manifest_; }

void Runner::save_manifest() const { write_file(run_dir_ / "manifest.json", manifest_.dump(2) + "\n"); }

void Runner::require(const std::string& stage, const std::string& needed) const {
  const auto& stages = manifest_["stages"];
  if (!stages.contains(needed)) {
    throw Error(ErrorCode::DependencyError,
                "stage '" + stage + "' needs the outputs of '" + needed + "', which has not run in " + run_id_);
  }
  for (const auto& [rel, digest] : stages[needed]["outputs"].items()) {
    const auto p = run_dir_ / rel;
    if (!fs::exists(p) || sha256_hex(read_file(p)) != digest.get<std::string>()) {
      throw Error(ErrorCode::DependencyError,
                  "stage '" + needed + "' output " + rel + " is missing or modified; needed by '" + stage + "'");
    }
  }
}

json Runner::load_json(const std::string& relpath) const { return json::parse(read_file(run_dir_ / relpath)); }

std::vector<json> Runner::load_jsonl(const std::string& relpath) const {
  std::vector<json> out;
  std::istringstream in(read_file(run_dir_ / relpath));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

void Runner::account(const std::string& stage, double seconds, const GatewayStats& before) {
  const auto path = run_dir_ / "accounting.json";
  json acc = fs::exists(path) ? json::parse(read_file(path)) : json::object();
  const auto now = gateway_->stats();
  acc[stage] = {{"wall_seconds", seconds},
                {"backend_calls", now.backend_calls - before.backend_calls},
                {"cache_hits", now.cache_hits - before.cache_hits},
                {"retries", now.retries - before.retries}};
  write_file(path, acc.dump(2) + "\n");
}

StageSummary Runner::commit(Stage& stage) {
  json outputs = json::object();
  for (const auto& [rel, digest] : hash_tree(stage.dir())) outputs[stage.name() + "/" + rel] = digest;
  json entry{{"params", stage.params}, {"inputs", stage.inputs}, {"outputs", outputs}};
  entry["digest"] = sha256_hex(entry.dump());

  auto& stages = manifest_["stages"];
  if (stages.contains(stage.name())) {
    json previous = stages[stage.name()];
    previous.erase("jobs");
    if (previous != entry) {
      fs::remove_all(stage.dir());
      throw Error(ErrorCode::ValidationError, "stage '" + stage.name() + "' already ran in " + run_id_ +
                                                  " with different outputs; stage outputs are immutable, use a new "
                                                  "--run-id");
    }
    fs::remove_all(stage.dir());
  } else {
    const auto final_dir = run_dir_ / stage.name();
    fs::remove_all(final_dir);
    fs::rename(stage.dir(), final_dir);
    stages[stage.name()] = entry;
    save_manifest();
  }
  fs::remove_all(run_dir_ / ".staging");
  account(stage.name(), stage.seconds(), stage.before());

  StageSummary s{stage.name(), {}, stage.notes};
  for (const auto& [rel, digest] : outputs.items()) s.outputs.push_back(rel);
  return s;
}

std::vector<Chapter> Runner::chapters() const {
  require("load", "ingest");
  return load_json("ingest/chapters.json").get<std::vector<Chapter>>();
}

std::vector<GeneratedRecord> Runner::generated() const {
  require("load", "generate");
  std::vector<GeneratedRecord> out;
  for (const auto& j : load_jsonl("generate/qa_pairs.jsonl")) out.push_back(generated_from_json(j));
  return out;
}

std::vector<UtilityRecord> Runner::utilities() const {
  require("load", "utility");
  std::vector<UtilityRecord> out;
  for (const auto& j : load_jsonl("utility/utilities.jsonl")) out.push_back(j.get<UtilityRecord>());
  return out;
}

// ---------------------------------------------------------------------------
// ingest

StageSummary Runner::ingest(const fs::path& corpus_dir) {
  Stage st(*this, "ingest");
  const corpus::CorpusLayout layout = corpus::scan_corpus(corpus_dir);
  if (!layout.violations.empty()) {
    std::string all;
    for (const auto& v : layout.violations) all += "\n  " + v;
    throw Error(ErrorCode::LayoutError, std::to_string(layout.violations.size()) + " layout violation(s):" + all);
  }
  std::string corpus_digest;
  for (const auto& [rel, digest] : hash_tree(corpus_dir)) corpus_digest += rel + "\t" + digest + "\n";
  st.input("corpus", sha256_hex(corpus_digest));

  corpus::CurationOptions opts;
  opts.segmentation = role_spec(config_.segmentation, config_.seed);
  opts.annotation = role_spec(config_.annotation, config_.seed);
  opts.attempts = config_.llm_attempts;

  const auto default_example = corpus::default_few_shot();
  std::vector<corpus::CurationResult> results(layout.chapters.size());
  parallel_for(layout.chapters.size(), config_.workers, [&](std::size_t i) {
    const auto& raw = layout.chapters[i];
    const auto it = layout.few_shot.find(raw.subject.name());
    results[i] = corpus::curate_chapter(*gateway_, raw, it == layout.few_shot.end() ? default_example : it->second,
                                        opts);
  });

  std::vector<Chapter> curated;
  json rejected = json::array();
  json warnings = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    const std::string id = corpus::chapter_id(layout.chapters[i]);
    if (r.rejected) {
      rejected.push_back({{"chapter_id", id}, {"exam_questions", r.rejected->count}});
      st.notes.push_back("rejected " + id + ": " + std::to_string(r.rejected->count) + " exam questions");
      continue;
    }
    for (const auto& w : r.warnings) {
      warnings.push_back({{"chapter_id", id}, {"kind", "alignment_out_of_range"},
                          {"question_id", w.question_id}, {"section", w.section_index}});
    }
    curated.push_back(std::move(*r.chapter));
  }

  std::vector<Chapter> ordered;
  for (auto& [subject, group] : by_subject(curated)) {
    try {
      corpus::split_train_test(group);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SplitError) throw;
      warnings.push_back({{"subject", subject}, {"kind", "split"}, {"detail", e.what()}});
      st.notes.push_back(subject + ": " + e.what() + "; chapters left unassigned");
    }
    for (auto& c : group) ordered.push_back(std::move(c));
  }
  std::sort(ordered.begin(), ordered.end(), [](const Chapter& a, const Chapter& b) {
    return std::make_pair(a.subject.name(), a.ordinal) < std::make_pair(b.subject.name(), b.ordinal);
  });
  for (const auto& c : ordered) {
    const auto violations = validate_chapter(c);
    if (!violations.empty()) {
      std::string all;
      for (const auto& v : violations) all += "\n  " + std::string(to_string(v.kind)) + " " + v.field + ": " + v.detail;
      throw Error(ErrorCode::ValidationError, c.id + " failed validation:" + all);
    }
  }

  const auto stats = corpus::corpus_stats(ordered);
  st.write_json("chapters.json", json(ordered));
  st.write_json("corpus_stats.json", stats.to_json());
  st.write("corpus_stats.csv", stats.to_csv());
  st.write_json("rejected.json", rejected);
  st.write_json("warnings.json", warnings);
  st.params = {{"chapters", ordered.size()}, {"rejected", rejected.size()}};
  return commit(st);
}

// ---------------------------------------------------------------------------
// generate

StageSummary Runner::generate(std::optional<Strategy> strategy_opt, SplitFilter split) {
  require("generate", "ingest");
  Stage st(*this, "generate");
  st.depends_on("ingest");
  const Strategy strategy = strategy_opt.value_or(config_.strategy);
  std::string model = config_.question.model;
  if (strategy == Strategy::FineTuned) {
    if (!config_.finetuned_model) throw Error(ErrorCode::ConfigError, "fine-tuned strategy needs a model id");
    model = *config_.finetuned_model;
  }

  const auto all = chapters();
  const auto subjects = by_subject(all);
  std::vector<Chapter> targets;
  for (const auto& c : all) {
    if (selected(c, split)) targets.push_back(c);
  }
  if (targets.empty()) throw Error(ErrorCode::ValidationError, "no chapters selected for generation");

  std::map<std::string, std::vector<prompts::FewShotExemplar>> exemplars;
  std::map<std::string, std::map<Bloom, double>> bloom;
  for (const auto& [subject, group] : subjects) {
    const auto pool = exemplar_pool(group);
    if (strategy == Strategy::FewShot) {
      exemplars[subject] = forge::select_exemplars(pool, static_cast<std::uint64_t>(config_.seed),
                                                   config_.few_shot_exemplars);
    }
    if (strategy == Strategy::BloomBased) bloom[subject] = forge::BloomSampler::distribution_of(pool);
  }

  std::vector<std::vector<GeneratedRecord>> per_chapter(targets.size());
  parallel_for(targets.size(), config_.workers, [&](std::size_t i) {
    const Chapter& ch = targets[i];
    const std::string subject = ch.subject.name();
    std::vector<Section> sections = ch.sections;
    std::sort(sections.begin(), sections.end(), [](const Section& a, const Section& b) { return a.index < b.index; });
    for (int t = 0; t < config_.trials; ++t) {
      forge::GenerationOptions opt;
      opt.model_id = model;
      opt.temperature = config_.question.temperature;
      opt.trial = t;
      opt.seed = config_.seed + t;
      opt.attempts = config_.llm_attempts;
      if (strategy == Strategy::FewShot) opt.exemplars = exemplars.at(subject);
      std::optional<forge::BloomSampler> sampler;
      if (strategy == Strategy::BloomBased) {
        const std::string seed_hex = hash_parts({ch.id, std::to_string(t), std::to_string(config_.seed)});
        sampler.emplace(bloom.at(subject), std::stoull(seed_hex, nullptr, 16));
        opt.sampler = &*sampler;
      }
      std::vector<forge::GeneratedQuestion> questions;
      for (const auto& s : sections) {
        const auto ctx = forge::make_context(ch, s.index, config_.context_budget_chars);
        questions.push_back(forge::generate_question(*gateway_, ctx, strategy, opt));
      }
      if (questions.empty()) continue;
      forge::AnswerOptions aopt{config_.answer.model, config_.answer.temperature, config_.seed + t,
                                config_.llm_attempts};
      const auto pairs = forge::generate_answers(*gateway_, questions, aopt);
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        per_chapter[i].push_back(GeneratedRecord{pairs[k], subject, ch.ordinal, t, questions[k].system_prompt,
                                                 questions[k].user_prompt});
      }
    }
  });

  std::vector<json> lines;
  for (const auto& group : per_chapter) {
    for (const auto& r : group) lines.push_back(to_json_value(r));
  }
  st.write_jsonl("qa_pairs.jsonl", lines);
  st.params = {{"strategy", std::string(studysim::to_string(strategy))},
               {"model", model},
               {"split", std::string(to_string(split))},
               {"trials", config_.trials},
               {"chapters", targets.size()},
               {"pairs", lines.size()}};
  return commit(st);
}

// ---------------------------------------------------------------------------
// run

StageSummary Runner::run(SplitFilter split) {
  require("run", "generate");
  Stage st(*this, "run");
  st.depends_on("ingest");
  st.depends_on("generate");
  const auto grouped = pairs_by_chapter(generated());
  std::vector<Chapter> targets;
  for (const auto& c : chapters()) {
    if (selected(c, split) && grouped.count(c.id)) targets.push_back(c);
  }
  if (targets.empty()) throw Error(ErrorCode::ValidationError, "no generated chapters selected for simulation");

  sim::Simulator simulator(*gateway_, simulator_options(config_, st.dir() / "attempts"));
  const auto empty = sim::make_study_set({});
  std::vector<json> rows(targets.size());
  parallel_for(targets.size(), config_.workers, [&](std::size_t i) {
    const Chapter& ch = targets[i];
    const auto baseline = simulator.simulate(ch, empty, config_.trials);
    std::vector<double> scores;
    json study_sets = json::array();
    for (const auto& [trial, pairs] : grouped.at(ch.id)) {
      const auto set = sim::make_study_set(pairs);
      const auto agg = simulator.simulate(ch, set, 1, trial);
      scores.push_back(agg.mean);
      study_sets.push_back(set.id);
    }
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(scores.size());
    rows[i] = {{"chapter_id", ch.id},
               {"subject", ch.subject.name()},
               {"split", std::string(studysim::to_string(ch.split))},
               {"no_study_trial_scores", baseline.trial_scores},
               {"no_study", baseline.mean},
               {"trial_scores", scores},
               {"study_sets", study_sets},
               {"score", mean}};
  });

  std::map<std::string, std::pair<double, double>> sums;  // subject -> (score, baseline)
  std::map<std::string, int> counts;
  for (const auto& r : rows) {
    auto& s = sums[r["subject"].get<std::string>()];
    s.first += r["score"].get<double>();
    s.second += r["no_study"].get<double>();
    ++counts[r["subject"].get<std::string>()];
  }
  json summary = json::object();
  std::map<std::string, double> baseline;
  report::ScoreRow row;
  row.label = manifest_["stages"]["generate"]["params"]["strategy"].get<std::string>();
  for (const auto& [subject, s] : sums) {
    const double n = counts[subject];
    summary[subject] = {{"chapters", counts[subject]},
                        {"score", s.first / n},
                        {"no_study", s.second / n},
                        {"gain", (s.first - s.second) / n},
                        {"cell", report::format_score_gain(s.first / n, s.second / n)}};
    baseline[subject] = s.second / n;
    row.by_subject[subject] = s.first / n;
  }
  st.write_jsonl("exam_scores.jsonl", rows);
  st.write_json("summary.json", summary);
  st.write("table.md", report::render_score_table(baseline, {row}));
  st.params = {{"split", std::string(to_string(split))}, {"trials", config_.trials}, {"chapters", targets.size()}};
  return commit(st);
}

// ---------------------------------------------------------------------------
// utility

StageSummary Runner::utility() {
  require("utility", "generate");
  Stage st(*this, "utility");
  st.depends_on("ingest");
  st.depends_on("generate");
  const auto grouped = pairs_by_chapter(generated());
  sim::Simulator simulator(*gateway_, simulator_options(config_, st.dir() / "attempts"));

  std::vector<json> lines;
  std::string csv = "qa_id,utility,s_empty,s_full,s_single,s_all_but_one\n";
  for (const auto& ch : chapters()) {
    const auto it = grouped.find(ch.id);
    if (it == grouped.end()) continue;
    for (const auto& [trial, pairs] : it->second) {
      const auto result = utility::estimate_utilities(simulator, ch, pairs, config_.utility_trials, config_.workers);
      for (const auto& r : result.records) {
        if (!is_consistent(r)) throw Error(ErrorCode::ValidationError, "inconsistent utility record " + r.qa_id);
        json j = r;
        j["chapter_id"] = ch.id;
        j["trial"] = trial;
        lines.push_back(std::move(j));
        char buf[256];
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%.6f\n", r.utility, r.s_empty, r.s_full, r.s_single,
                      r.s_all_but_one);
        csv += r.qa_id + buf;
      }
    }
  }
  if (lines.empty()) throw Error(ErrorCode::ValidationError, "no QA pairs to score");
  st.write_jsonl("utilities.jsonl", lines);
  st.write("utilities.csv", csv);
  st.params = {{"utility_trials", config_.utility_trials}, {"records", lines.size()}};
  return commit(st);
}

// ---------------------------------------------------------------------------
// metrics

StageSummary Runner::metrics() {
  require("metrics", "utility");
  Stage st(*this, "metrics");
  st.depends_on("ingest");
  st.depends_on("generate");
  st.depends_on("utility");

  std::map<std::string, Chapter> chapter_by_id;
  for (auto& c : chapters()) chapter_by_id.emplace(c.id, std::move(c));
  std::map<std::string, GeneratedRecord> gen_by_id;
  for (auto& r : generated()) gen_by_id.emplace(r.qa.id, std::move(r));
  const auto utils = utilities();

  metrics::MetricModels models;
  models.judge_model = config_.judge.model;
  models.temperature = config_.judge.temperature;
  models.embedding_model = config_.embedding_model;
  models.seed = config_.seed;
  models.attempts = config_.llm_attempts;
  models.top_k = config_.top_k_logprobs;
  const double entropy_scale = config_.entropy_base == "2" ? 1.0 / std::log(2.0) : 1.0;

  // Bloom depth: the sampled level for Bloom-conditioned questions, otherwise
  // the annotator's label.
  std::map<std::string, std::vector<ExamQuestion>> to_label;
  for (const auto& u : utils) {
    const auto& g = gen_by_id.at(u.qa_id);
    if (!g.qa.generator.bloom_level) to_label[g.qa.chapter_id].push_back({u.qa_id, g.qa.question, {}, {}, {}});
  }
  std::vector<std::pair<std::string, std::vector<ExamQuestion>>> batches(to_label.begin(), to_label.end());
  parallel_for(batches.size(), config_.workers, [&](std::size_t i) {
    batches[i].second = corpus::classify_bloom(*gateway_, std::move(batches[i].second),
                                               role_spec(config_.annotation, config_.seed), config_.llm_attempts);
  });
  std::map<std::string, Bloom> bloom_by_id;
  for (const auto& [chapter, qs] : batches) {
    for (const auto& q : qs) bloom_by_id[q.id] = *q.bloom;
  }

  std::vector<json> rows(utils.size());
  parallel_for(utils.size(), config_.workers, [&](std::size_t i) {
    const auto& u = utils[i];
    const auto& g = gen_by_id.at(u.qa_id);
    const Chapter& ch = chapter_by_id.at(g.qa.chapter_id);
    const auto ctx = forge::make_context(ch, g.qa.anchor_section, config_.context_budget_chars);
    std::string context = ctx.preceding_text();
    if (!context.empty()) context += "\n\n";
    context += ctx.anchor.content;

    json row{{"qa_id", u.qa_id}, {"chapter_id", ch.id}, {"trial", g.trial}, {"utility", u.utility}};
    row["salience"] = metrics::salience(*gateway_, g.qa.question, context, models).value;
    row["eig"] = nullptr;
    const std::string token = metrics::first_token(g.qa.answer);
    if (!token.empty()) {
      try {
        const auto e = metrics::eig(*gateway_, g.qa.question, context, token, models);
        row["eig"] = e.eig * entropy_scale;
        row["prior_entropy"] = e.prior_entropy * entropy_scale;
        row["posterior_entropy"] = e.posterior_entropy * entropy_scale;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::MetricUnavailable) throw;
      }
    }
    const auto sim = metrics::similarity_to_exam(*gateway_, g.qa.question, ch.exam, models);
    row["max_cosine"] = sim.max_cosine ? json(*sim.max_cosine) : json(nullptr);
    row["max_rouge_l"] = sim.max_rouge_l;
    const Bloom level = g.qa.generator.bloom_level ? *g.qa.generator.bloom_level : bloom_by_id.at(u.qa_id);
    row["bloom"] = std::string(studysim::to_string(level));
    row["bloom_depth"] = metrics::bloom_depth(level);
    rows[i] = std::move(row);
  });

  auto correlate = [&](const std::string& a, const std::string& b) {
    report::CorrelationRow out{a, b, std::nullopt, std::nullopt, 0, {}};
    std::vector<double> x, y;
    for (const auto& r : rows) {
      if (r[a].is_null() || r[b].is_null()) continue;
      x.push_back(r[a].get<double>());
      y.push_back(r[b].get<double>());
    }
    out.n = x.size();
    try {
      const auto c = metrics::spearman(x, y);
      out.rho = c.rho;
      out.p_value = c.p_value;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StatError) throw;
      out.note = e.what();
    }
    return report::to_json_value(out);
  };
  const json correlations = json::array(
      {correlate("utility", "salience"), correlate("utility", "eig"), correlate("salience", "eig")});
  const json similarity = json::array({correlate("utility", "max_cosine"), correlate("utility", "max_rouge_l"),
                                       correlate("utility", "bloom_depth")});

  st.write_jsonl("metrics.jsonl", rows);
  st.write_json("correlations.json", correlations);
  st.write_json("similarity_correlations.json", similarity);
  st.params = {{"records", rows.size()}, {"entropy_base", config_.entropy_base}, {"top_k", config_.top_k_logprobs}};
  return commit(st);
}

// ---------------------------------------------------------------------------
// filter

StageSummary Runner::filter(std::optional<double> theta_opt) {
  require("filter", "utility");
  Stage st(*this, "filter");
  st.depends_on("generate");
  st.depends_on("utility");
  const double theta = theta_opt.value_or(config_.theta);
  const auto utils = utilities();
  std::map<std::string, GeneratedRecord> gen_by_id;
  for (auto& r : generated()) gen_by_id.emplace(r.qa.id, std::move(r));

  std::set<double> thetas(config_.theta_sweep.begin(), config_.theta_sweep.end());
  thetas.insert(theta);
  std::string csv = "theta,accepted,rejected\n";
  for (double t : thetas) {
    const auto res = finetune::filter_by_utility(utils, t);
    const std::string dir = "theta_" + theta_label(t) + "/";
    st.write_json(dir + "accepted.json", {{"theta", t}, {"accepted", res.accepted}, {"rejected", res.rejected}});
    if (!res.accepted.empty()) {
      st.write(dir + "finetune_cross.jsonl", finetune::render_jsonl(examples_for(res.accepted, gen_by_id)));
    } else {
      st.notes.push_back("theta " + theta_label(t) + " accepts nothing; no dataset written");
    }
    csv += theta_label(t) + "," + std::to_string(res.accepted.size()) + "," + std::to_string(res.rejected.size()) +
           "\n";
    if (t == theta) {
      st.write_json("selected.json", {{"theta", t}, {"accepted", res.accepted}, {"rejected", res.rejected}});
    }
  }
  st.write("size_vs_theta.csv", csv);
  st.params = {{"theta", theta}, {"sweep", std::vector<double>(thetas.begin(), thetas.end())}};
  return commit(st);
}

// ---------------------------------------------------------------------------
// emit-finetune

StageSummary Runner::emit_finetune(std::optional<finetune::ExportMode> mode_opt, bool sft, bool submit) {
  require("emit-finetune", "filter");
  Stage st(*this, "emit-finetune");
  st.depends_on("generate");
  st.depends_on("filter");
  const auto mode = mode_opt.value_or(finetune::parse_export_mode(config_.export_mode));
  const json selected_ids = load_json("filter/selected.json");
  std::map<std::string, GeneratedRecord> gen_by_id;
  for (auto& r : generated()) gen_by_id.emplace(r.qa.id, std::move(r));
  const auto accepted = selected_ids["accepted"].get<std::vector<std::string>>();
  const auto examples = examples_for(accepted, gen_by_id);
  const auto files = finetune::emit(examples, st.dir(), "finetune", mode);

  if (sft) {
    std::vector<Chapter> train;
    const auto all = chapters();
    for (const auto& c : all) {
      if (c.split == Split::Train) train.push_back(c);
    }
    const auto dataset = forge::build_sft_dataset(train.empty() ? all : train, config_.context_budget_chars);
    if (dataset.examples.empty()) throw Error(ErrorCode::EmptyDataset, "no aligned exam questions for SFT");
    std::vector<json> lines;
    for (const auto& e : dataset.examples) lines.push_back(forge::to_json_value(e));
    st.write_jsonl("sft.jsonl", lines);
    st.notes.push_back("SFT baseline: " + std::to_string(dataset.examples.size()) + " examples, " +
                       std::to_string(dataset.skipped_unaligned) + " unaligned questions skipped");
  }
  st.params = {{"mode", std::string(finetune::to_string(mode))},
               {"theta", selected_ids["theta"]},
               {"accepted", accepted.size()},
               {"rejected", selected_ids["rejected"].size()},
               {"sft", sft}};
  auto summary = commit(st);

  if (submit) {
    EndpointConfig endpoint = EndpointConfig::from_env();
    if (!std::getenv("STUDYSIM_API_BASE")) endpoint.base_url = config_.api_base;
    json jobs = json::object();
    for (const auto& [label, path] : files) {
      const auto final_path = run_dir_ / "emit-finetune" / path.filename();
      jobs[label] = submit_finetune(final_path, config_.finetune_base_model, endpoint);
      summary.notes.push_back("submitted " + label + " as job " + jobs[label].get<std::string>());
    }
    manifest_["stages"]["emit-finetune"]["jobs"] = jobs;
    save_manifest();
  }
  return summary;
}

// ---------------------------------------------------------------------------
// report

StageSummary Runner::report() {
  require("report", "run");
  Stage st(*this, "report");
  st.depends_on("ingest");
  st.depends_on("run");
  std::string md = "# Run " + run_id_ + "\n\nBackend: " + backend_->identity() + "\n\n";
  md += "## Corpus\n\n" + csv_to_markdown(read_file(run_dir_ / "ingest/corpus_stats.csv")) + "\n";
  md += "## End-of-chapter exam scores\n\n" + read_file(run_dir_ / "run/table.md") + "\n";
  if (manifest_["stages"].contains("metrics")) {
    require("report", "metrics");
    st.depends_on("metrics");
    std::vector<report::CorrelationRow> rows;
    for (const auto& j : load_json("metrics/correlations.json")) rows.push_back(report::correlation_from_json(j));
    md += "## Metric correlations (Spearman)\n\n" + report::render_correlation_table(rows) + "\n";
    rows.clear();
    for (const auto& j : load_json("metrics/similarity_correlations.json")) {
      rows.push_back(report::correlation_from_json(j));
    }
    md += "## Utility versus similarity and depth (Spearman)\n\n" + report::render_correlation_table(rows) + "\n";
  }
  if (manifest_["stages"].contains("filter")) {
    require("report", "filter");
    st.depends_on("filter");
    md += "## Accepted pairs by threshold\n\n" + csv_to_markdown(read_file(run_dir_ / "filter/size_vs_theta.csv")) +
          "\n";
  }
  md +=
      "## Published reference values\n\n"
      "Model-dependent figures reported for gpt-4o-mini; recorded for comparison only.\n\n"
      "- Microbiology exam score with utility-filtered questions: 0.76 against a no-study 0.46, rendered "
      "`" + report::format_score_gain(0.76, 0.46) + "`.\n"
      "- Spearman rho: utility-salience 0.097, utility-EIG -0.022, salience-EIG 0.030.\n"
      "- Utility versus max embedding similarity 0.25, versus ROUGE 0.04, versus Bloom depth 0.12.\n";
  st.write("report.md", md);
  return commit(st);
}

}  // namespace studysim::pipeline
