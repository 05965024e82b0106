#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pro/domain.hpp"
#include "pro/policy.hpp"
#include "pro/reward.hpp"

namespace pro {

// Uniform sample of the previous period's decision traffic.
struct MpcSample {
    std::vector<DecisionRequest> entities;
    double fraction = 1.0;  // recorded for budget rescaling
};

// Multiplicative grid on the tunable (cost) metric weights; abuse weights
// stay pinned. The all-ones factor combination is the current w.
struct CandidateGrid {
    std::vector<int> tunable_metrics;                      // cost metric indices
    std::vector<double> factors = {0.5, 0.8, 1.0, 1.25, 2.0};
};

struct CandidateEvaluation {
    WeightVector weights;
    std::vector<double> factors;      // per tunable metric, aligned with grid order
    double predicted_abuse = 0.0;     // total over abuse metrics, relative to no-action
    std::vector<double> predicted_costs;  // per budgeted metric, relative to no-action
    bool feasible = false;
    double violation = 0.0;           // sum of relative budget overruns
};

struct TuneResult {
    WeightVector weights;
    std::vector<CandidateEvaluation> candidates;  // in grid enumeration order
    std::size_t selected = 0;
};

// b_j = s * Budget_j.
double rescale_budget(double budget, double scale);

// Uniform sample without replacement of ceil(fraction * traffic) requests.
MpcSample draw_sample(const std::vector<DecisionRequest>& traffic, double fraction,
                      std::uint64_t seed, int day);

// Greedy-simulates the sample under candidate weights and totals the
// predicted metrics, each referenced to the no-action prediction so that a
// sample routed entirely to no-action scores zero. Actions must be warm for
// every requested metric; a cold cell is an error.
CandidateEvaluation evaluate_candidate(const WeightVector& w_cand, const MpcSample& sample,
                                       const ModelBundle& bundle,
                                       const std::vector<int>& metric_indices,
                                       const std::vector<int>& abuse_metrics,
                                       const std::vector<int>& budget_metrics,
                                       const std::vector<int>& allowed_actions);

// Grid search: among candidates meeting every rescaled budget, the one with
// minimal predicted abuse; if none is feasible, the least relative violation.
// Ties go to the candidate closest to the current weights in log-space.
TuneResult tune_weights(const WeightVector& current, const CandidateGrid& grid,
                        const MpcSample& sample, const ModelBundle& bundle,
                        const std::vector<int>& metric_indices,
                        const std::vector<int>& abuse_metrics,
                        const std::vector<int>& budget_metrics,
                        const std::vector<double>& rescaled_budgets,
                        const std::vector<int>& allowed_actions);

// Audit report consumed by the experiment harness.
std::string tune_result_to_json(const TuneResult& result, const MetricCatalog& catalog,
                                const std::vector<int>& budget_metrics,
                                const std::vector<double>& rescaled_budgets, int day);

}  // namespace pro
