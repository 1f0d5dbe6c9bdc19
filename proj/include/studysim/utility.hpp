#pragma once

// Per-pair utility from two perturbations of the full study set: studying the
// pair alone, and removing it from the full set.

#include <map>
#include <string>
#include <vector>

#include "studysim/domain.hpp"
#include "studysim/simulator.hpp"

namespace studysim::utility {

struct PairPerturbation {
  std::string qa_id;
  sim::StudySet single;
  sim::StudySet all_but_one;
};

struct PerturbationPlan {
  sim::StudySet empty;
  sim::StudySet full;
  std::vector<PairPerturbation> per_pair;

  // Every study set the plan needs, deduplicated by id; empty and full first.
  std::vector<sim::StudySet> distinct_sets() const;
};

// Throws EmptyStudySet for no pairs.
PerturbationPlan plan_perturbations(const std::vector<QAPair>& pairs);

// Assembles records from trial-mean scores keyed by study-set id.
std::vector<UtilityRecord> assemble_utilities(const PerturbationPlan& plan,
                                              const std::map<std::string, double>& mean_score_by_set);

struct EstimateResult {
  std::vector<UtilityRecord> records;
  std::map<std::string, sim::TrialAggregate> simulations;  // by study-set id
};

// Simulates every distinct set of the plan once (concurrently on `workers`
// threads) with `trials` trials each, then assembles the records.
EstimateResult estimate_utilities(sim::Simulator& simulator, const Chapter& chapter, const std::vector<QAPair>& pairs,
                                  int trials, std::size_t workers = 1, int first_trial = 0);

}  // namespace studysim::utility
