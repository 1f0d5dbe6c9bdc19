#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "studysim/config.hpp"
#include "studysim/domain.hpp"
#include "studysim/finetune.hpp"
#include "studysim/metrics.hpp"
#include "studysim/pipeline.hpp"
#include "studysim/report.hpp"
#include "studysim/utility.hpp"

namespace py = pybind11;
namespace ss = studysim;

namespace {

ss::TokenDistribution distribution(const std::vector<double>& probs) {
  ss::TokenDistribution d;
  d.probs = probs;
  for (std::size_t i = 0; i < probs.size(); ++i) d.token_labels.push_back("t" + std::to_string(i));
  return d;
}

std::vector<ss::QAPair> dummy_pairs(std::size_t n) {
  std::vector<ss::QAPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    ss::QAPair p;
    p.id = "qa-" + std::to_string(i);
    p.question = "q" + std::to_string(i);
    out.push_back(p);
  }
  return out;
}

py::dict summary(const ss::pipeline::StageSummary& s) {
  py::dict d;
  d["stage"] = s.stage;
  d["outputs"] = s.outputs;
  d["notes"] = s.notes;
  return d;
}

class PyPipeline {
 public:
  PyPipeline(const std::string& backend, const std::optional<std::string>& config_path, const std::string& out_dir,
             const std::string& cache_dir, std::optional<std::int64_t> seed, std::optional<std::string> run_id,
             std::optional<std::size_t> workers) {
    ss::Config c = config_path ? ss::load_config(*config_path) : ss::Config{};
    c.out_dir = out_dir;
    c.cache_dir = cache_dir;
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    runner_ = std::make_unique<ss::pipeline::Runner>(c, ss::pipeline::make_backend(backend, c), run_id);
  }

  std::string run_dir() const { return runner_->run_dir().string(); }
  std::string run_id() const { return runner_->run_id(); }
  py::dict ingest(const std::string& corpus) { return summary(runner_->ingest(corpus)); }
  py::dict generate(const std::optional<std::string>& strategy, const std::string& split) {
    std::optional<ss::Strategy> s;
    if (strategy) s = ss::parse_strategy(*strategy);
    return summary(runner_->generate(s, ss::pipeline::parse_split_filter(split)));
  }
  py::dict run(const std::string& split) { return summary(runner_->run(ss::pipeline::parse_split_filter(split))); }
  py::dict utility() { return summary(runner_->utility()); }
  py::dict metrics() { return summary(runner_->metrics()); }
  py::dict filter(std::optional<double> theta) { return summary(runner_->filter(theta)); }
  py::dict emit_finetune(const std::optional<std::string>& mode, bool sft) {
    std::optional<ss::finetune::ExportMode> m;
    if (mode) m = ss::finetune::parse_export_mode(*mode);
    return summary(runner_->emit_finetune(m, sft, false));
  }
  py::dict report() { return summary(runner_->report()); }
  std::string manifest() const { return runner_->manifest().dump(); }
  std::uint64_t backend_calls() const { return runner_->gateway().stats().backend_calls; }

 private:
  std::unique_ptr<ss::pipeline::Runner> runner_;
};

}  // namespace

PYBIND11_MODULE(_studysim, m) {
  m.doc() = "Question utility estimation core";

  py::register_exception<ss::Error>(m, "StudysimError");

  m.def("exam_score", &ss::exam_score, py::arg("per_question"));
  m.def("averaged_gain", &ss::averaged_gain, py::arg("s_empty"), py::arg("s_full"), py::arg("s_single"),
        py::arg("s_all_but_one"));
  m.def(
      "entropy", [](const std::vector<double>& probs) { return ss::metrics::entropy(probs); }, py::arg("probs"));
  m.def(
      "eig",
      [](const std::vector<double>& prior, const std::vector<double>& posterior) {
        return ss::metrics::eig_from_distributions(distribution(prior), distribution(posterior)).eig;
      },
      py::arg("prior"), py::arg("posterior"));
  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto r = ss::metrics::spearman(x, y);
        py::dict d;
        d["rho"] = r.rho;
        d["p_value"] = r.p_value;
        d["n"] = r.n;
        return d;
      },
      py::arg("x"), py::arg("y"));
  m.def("rouge_l", [](const std::string& a, const std::string& b) { return ss::metrics::rouge_l(a, b); },
        py::arg("candidate"), py::arg("reference"));
  m.def(
      "bloom_depth",
      [](const std::string& category) {
        const auto level = ss::parse_bloom(category);
        if (!level) throw ss::Error(ss::ErrorCode::InvalidInput, "unknown Bloom category '" + category + "'");
        return ss::metrics::bloom_depth(*level);
      },
      py::arg("category"));
  m.def(
      "distinct_study_sets",
      [](std::size_t n) { return ss::utility::plan_perturbations(dummy_pairs(n)).distinct_sets().size(); },
      py::arg("n"));
  m.def(
      "filter_by_utility",
      [](const std::vector<std::pair<std::string, double>>& items, double theta) {
        std::vector<ss::UtilityRecord> records;
        for (const auto& [id, u] : items) {
          ss::UtilityRecord r;
          r.qa_id = id;
          r.utility = u;
          records.push_back(r);
        }
        return ss::finetune::filter_by_utility(records, theta).accepted;
      },
      py::arg("items"), py::arg("theta"));
  m.def("extract_json", [](const std::string& raw) { return ss::extract_json(raw).dump(); }, py::arg("raw"));
  m.def("format_score_gain", &ss::report::format_score_gain, py::arg("score"), py::arg("baseline"));
  m.def("default_config_yaml", &ss::default_config_yaml);

  py::class_<PyPipeline>(m, "Pipeline")
      .def(py::init<const std::string&, const std::optional<std::string>&, const std::string&, const std::string&,
                    std::optional<std::int64_t>, std::optional<std::string>, std::optional<std::size_t>>(),
           py::arg("backend"), py::arg("config") = py::none(), py::arg("out_dir") = "runs",
           py::arg("cache_dir") = ".studysim-cache", py::arg("seed") = py::none(), py::arg("run_id") = py::none(),
           py::arg("workers") = py::none())
      .def_property_readonly("run_dir", &PyPipeline::run_dir)
      .def_property_readonly("run_id", &PyPipeline::run_id)
      .def("ingest", &PyPipeline::ingest, py::arg("corpus"))
      .def("generate", &PyPipeline::generate, py::arg("strategy") = py::none(), py::arg("split") = "all")
      .def("run", &PyPipeline::run, py::arg("split") = "all")
      .def("utility", &PyPipeline::utility)
      .def("metrics", &PyPipeline::metrics)
      .def("filter", &PyPipeline::filter, py::arg("theta") = py::none())
      .def("emit_finetune", &PyPipeline::emit_finetune, py::arg("mode") = py::none(), py::arg("sft") = false)
      .def("report", &PyPipeline::report)
      .def("manifest", &PyPipeline::manifest)
      .def("backend_calls", &PyPipeline::backend_calls);
}
