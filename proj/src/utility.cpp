#include "studysim/utility.hpp"

#include <mutex>
#include <set>

#include "studysim/parallel.hpp"

namespace studysim::utility {

std::vector<sim::StudySet> PerturbationPlan::distinct_sets() const {
  std::vector<sim::StudySet> out;
  std::set<std::string> seen;
  auto add = [&](const sim::StudySet& s) {
    if (seen.insert(s.id).second) out.push_back(s);
  };
  add(empty);
  add(full);
  for (const auto& p : per_pair) {
    add(p.single);
    add(p.all_but_one);
  }
  return out;
}

PerturbationPlan plan_perturbations(const std::vector<QAPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyStudySet, "utility estimation needs at least one QA pair");
  PerturbationPlan plan;
  plan.empty = sim::make_study_set({});
  plan.full = sim::make_study_set(pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::vector<QAPair> rest;
    rest.reserve(pairs.size() - 1);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      if (j != i) rest.push_back(pairs[j]);
    }
    plan.per_pair.push_back({pairs[i].id, sim::make_study_set({pairs[i]}), sim::make_study_set(std::move(rest))});
  }
  return plan;
}

std::vector<UtilityRecord> assemble_utilities(const PerturbationPlan& plan,
                                              const std::map<std::string, double>& mean_score_by_set) {
  auto score = [&](const sim::StudySet& s) {
    const auto it = mean_score_by_set.find(s.id);
    if (it == mean_score_by_set.end()) throw Error(ErrorCode::InvalidInput, "no score for study set " + s.id);
    return it->second;
  };
  const double s_empty = score(plan.empty);
  const double s_full = score(plan.full);
  std::vector<UtilityRecord> out;
  out.reserve(plan.per_pair.size());
  for (const auto& p : plan.per_pair) {
    out.push_back(make_utility_record(p.qa_id, s_empty, s_full, score(p.single), score(p.all_but_one)));
  }
  return out;
}

EstimateResult estimate_utilities(sim::Simulator& simulator, const Chapter& chapter, const std::vector<QAPair>& pairs,
                                  int trials, std::size_t workers, int first_trial) {
  const PerturbationPlan plan = plan_perturbations(pairs);
  const auto sets = plan.distinct_sets();
  std::vector<sim::TrialAggregate> results(sets.size());
  parallel_for(sets.size(), workers, [&](std::size_t i) {
    results[i] = simulator.simulate(chapter, sets[i], trials, first_trial);
  });
  EstimateResult out;
  std::map<std::string, double> means;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    means[sets[i].id] = results[i].mean;
    out.simulations.emplace(sets[i].id, std::move(results[i]));
  }
  try {
    out.records = assemble_utilities(plan, means);
  } catch (const Error& e) {
    rethrow_with_context(e, chapter.id);
  }
  return out;
}

}  // namespace studysim::utility
