// studysim: question-utility pipeline command line.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "studysim/config.hpp"
#include "studysim/pipeline.hpp"

namespace sp = studysim::pipeline;

namespace {

void print(const sp::StageSummary& s, const sp::Runner& runner) {
  std::cout << s.stage << " -> " << runner.run_dir().string() << "\n";
  for (const auto& o : s.outputs) std::cout << "  " << o << "\n";
  for (const auto& n : s.notes) std::cout << "  note: " << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated-learner question utility pipeline"};
  app.require_subcommand(1);

  std::string backend = "openai";
  std::optional<std::int64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> config_path, out_dir, run_id, cache_dir;
  std::string log_level = "warn";
  app.add_option("--backend", backend, "mock:<script.json> or openai")->capture_default_str();
  app.add_option("--seed", seed, "Base seed");
  app.add_option("--config", config_path, "YAML config file");
  app.add_option("--workers", workers, "Worker pool size");
  app.add_option("--out", out_dir, "Root directory for runs");
  app.add_option("--run-id", run_id, "Run directory name (default: derived from config and backend)");
  app.add_option("--cache-dir", cache_dir, "Global LM response cache");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->capture_default_str();

  std::string corpus_dir;
  auto* ingest = app.add_subcommand("ingest", "Curate a chapter corpus");
  ingest->add_option("corpus_dir", corpus_dir, "Corpus root")->required();

  std::optional<std::string> strategy, model_id;
  std::string split = "all";
  auto* generate = app.add_subcommand("generate", "Generate QA pairs for curated chapters");
  generate->add_option("--strategy", strategy, "zero-shot|few-shot|cot|bloom|fine-tuned");
  generate->add_option("--model-id", model_id, "Model for the fine-tuned strategy");
  generate->add_option("--split", split, "all|train|test")->capture_default_str();

  std::string run_split = "all";
  auto* run = app.add_subcommand("run", "Simulate exams with and without the generated pairs");
  run->add_option("--split", run_split, "all|train|test")->capture_default_str();

  auto* utility = app.add_subcommand("utility", "Estimate per-pair utility");
  auto* metrics = app.add_subcommand("metrics", "Salience, EIG, similarity and correlations");

  std::optional<double> theta;
  auto* filter = app.add_subcommand("filter", "Threshold pairs by utility over a theta sweep");
  filter->add_option("--theta", theta, "Utility threshold (inclusive)");

  std::optional<std::string> mode;
  bool sft = false, submit = false;
  auto* emit = app.add_subcommand("emit-finetune", "Write fine-tune datasets for the selected theta");
  emit->add_option("--mode", mode, "subject|cross");
  emit->add_flag("--sft", sft, "Also write the supervised baseline dataset");
  emit->add_flag("--submit", submit, "Upload and create remote fine-tuning jobs");

  auto* report = app.add_subcommand("report", "Render tables for the run");

  std::string all_corpus;
  auto* all = app.add_subcommand("all", "ingest, generate, run, utility, metrics, filter, emit-finetune, report");
  all->add_option("corpus_dir", all_corpus, "Corpus root")->required();
  all->add_option("--strategy", strategy, "zero-shot|few-shot|cot|bloom|fine-tuned");

  app.add_subcommand("print-config", "Print the default configuration as YAML");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sp::kExitValidation;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  if (app.got_subcommand("print-config")) {
    std::cout << studysim::default_config_yaml();
    return sp::kExitOk;
  }

  try {
    studysim::Config config = config_path ? studysim::load_config(*config_path) : studysim::Config{};
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (out_dir) config.out_dir = *out_dir;
    if (cache_dir) config.cache_dir = *cache_dir;
    if (model_id) config.finetuned_model = *model_id;
    std::optional<studysim::Strategy> chosen;
    if (strategy) chosen = studysim::parse_strategy(*strategy);

    sp::Runner runner(config, sp::make_backend(backend, config), run_id);
    if (ingest->parsed()) print(runner.ingest(corpus_dir), runner);
    if (generate->parsed()) print(runner.generate(chosen, sp::parse_split_filter(split)), runner);
    if (run->parsed()) print(runner.run(sp::parse_split_filter(run_split)), runner);
    if (utility->parsed()) print(runner.utility(), runner);
    if (metrics->parsed()) print(runner.metrics(), runner);
    if (filter->parsed()) print(runner.filter(theta), runner);
    if (emit->parsed()) {
      std::optional<studysim::finetune::ExportMode> m;
      if (mode) m = studysim::finetune::parse_export_mode(*mode);
      print(runner.emit_finetune(m, sft, submit), runner);
    }
    if (report->parsed() || all->parsed()) {
      if (all->parsed()) {
        print(runner.ingest(all_corpus), runner);
        print(runner.generate(chosen), runner);
        print(runner.run(), runner);
        print(runner.utility(), runner);
        print(runner.metrics(), runner);
        print(runner.filter(), runner);
        print(runner.emit_finetune(), runner);
      }
      print(runner.report(), runner);
      std::ifstream in(runner.run_dir() / "report" / "report.md");
      std::cout << "\n" << in.rdbuf();
    }
  } catch (const studysim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sp::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sp::kExitFailure;
  }
  return sp::kExitOk;
}
