#include "pro/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pro/rng.hpp"

namespace pro {

using nlohmann::ordered_json;

double rescale_budget(double budget, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("rescale_budget: scale must be > 0");
    return scale * budget;
}

MpcSample draw_sample(const std::vector<DecisionRequest>& traffic, double fraction,
                      std::uint64_t seed, int day) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw std::invalid_argument("draw_sample: fraction must be in (0, 1]");
    }
    if (traffic.empty()) throw std::invalid_argument("draw_sample: empty traffic");

    const std::size_t n = traffic.size();
    const std::size_t want = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n)));

    MpcSample out;
    out.fraction = fraction;
    if (want >= n) {
        out.entities = traffic;
        return out;
    }

    // Partial Fisher-Yates over an index array: uniform without replacement.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Substream stream = Substream::keyed(seed, 0, day, "mpc_sample");
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.next_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    out.entities.reserve(want);
    for (std::size_t i = 0; i < want; ++i) out.entities.push_back(traffic[idx[i]]);
    return out;
}

namespace {

WeightVector apply_factors(const WeightVector& current, const std::vector<int>& tunable,
                           const std::vector<double>& factors) {
    WeightVector w = current;
    for (std::size_t i = 0; i < tunable.size(); ++i) {
        w.w[static_cast<std::size_t>(tunable[i])] *= factors[i];
    }
    return w;
}

}  // namespace

CandidateEvaluation evaluate_candidate(const WeightVector& w_cand, const MpcSample& sample,
                                       const ModelBundle& bundle,
                                       const std::vector<int>& metric_indices,
                                       const std::vector<int>& abuse_metrics,
                                       const std::vector<int>& budget_metrics,
                                       const std::vector<int>& allowed_actions) {
    for (int k : allowed_actions) {
        for (int j : metric_indices) {
            if (!bundle.cell(j, k).warm()) {
                throw std::runtime_error("evaluate_candidate: cold cell for action " +
                                         std::to_string(k) + ", metric " + std::to_string(j));
            }
        }
    }

    if (std::find(allowed_actions.begin(), allowed_actions.end(), kNoActionIndex) ==
        allowed_actions.end()) {
        throw std::invalid_argument("evaluate_candidate: no-action must be allowed");
    }

    CandidateEvaluation eval;
    eval.weights = w_cand;
    eval.predicted_costs.assign(budget_metrics.size(), 0.0);

    // Fallback rule is irrelevant here: every cell was checked warm above.
    const RuleConfig unused_cfg;
    for (const auto& request : sample.entities) {
        const Decision d = select_action_greedy(request, bundle, w_cand, metric_indices,
                                                allowed_actions, BaselineRuleKind::RuleA,
                                                unused_cfg);
        const ActionScore* chosen = nullptr;
        const ActionScore* no_action = nullptr;
        for (const auto& s : d.scores) {
            if (s.action_index == d.chosen_action) chosen = &s;
            if (s.action_index == kNoActionIndex) no_action = &s;
        }
        // Totals are referenced to the no-action prediction for the same
        // entity, so budgets bound the predicted incremental cost of acting.
        for (int j : abuse_metrics) {
            eval.predicted_abuse += chosen->per_metric[static_cast<std::size_t>(j)].mu -
                                    no_action->per_metric[static_cast<std::size_t>(j)].mu;
        }
        for (std::size_t b = 0; b < budget_metrics.size(); ++b) {
            const int j = budget_metrics[b];
            eval.predicted_costs[b] += chosen->per_metric[static_cast<std::size_t>(j)].mu -
                                       no_action->per_metric[static_cast<std::size_t>(j)].mu;
        }
    }
    return eval;
}

TuneResult tune_weights(const WeightVector& current, const CandidateGrid& grid,
                        const MpcSample& sample, const ModelBundle& bundle,
                        const std::vector<int>& metric_indices,
                        const std::vector<int>& abuse_metrics,
                        const std::vector<int>& budget_metrics,
                        const std::vector<double>& rescaled_budgets,
                        const std::vector<int>& allowed_actions) {
    if (grid.factors.empty()) throw std::invalid_argument("tune_weights: empty factor grid");
    if (std::find(grid.factors.begin(), grid.factors.end(), 1.0) == grid.factors.end()) {
        throw std::invalid_argument("tune_weights: grid must include the current weights (factor 1)");
    }
    if (budget_metrics.size() != rescaled_budgets.size()) {
        throw std::invalid_argument("tune_weights: budget arity mismatch");
    }
    const std::size_t dims = grid.tunable_metrics.size();
    std::size_t candidate_count = 1;
    for (std::size_t i = 0; i < dims; ++i) candidate_count *= grid.factors.size();

    TuneResult result;
    result.candidates.reserve(candidate_count);

    // Odometer enumeration of the factor product; deterministic order.
    std::vector<std::size_t> digits(dims, 0);
    for (std::size_t c = 0; c < candidate_count; ++c) {
        std::vector<double> factors(dims);
        for (std::size_t i = 0; i < dims; ++i) factors[i] = grid.factors[digits[i]];

        const WeightVector w = apply_factors(current, grid.tunable_metrics, factors);
        CandidateEvaluation eval = evaluate_candidate(w, sample, bundle, metric_indices,
                                                      abuse_metrics, budget_metrics,
                                                      allowed_actions);
        eval.factors = factors;
        eval.feasible = true;
        eval.violation = 0.0;
        for (std::size_t b = 0; b < budget_metrics.size(); ++b) {
            const double budget = rescaled_budgets[b];
            if (eval.predicted_costs[b] > budget) {
                eval.feasible = false;
                const double denom = budget != 0.0 ? std::fabs(budget) : 1.0;
                eval.violation += (eval.predicted_costs[b] - budget) / denom;
            }
        }
        result.candidates.push_back(std::move(eval));

        for (std::size_t i = 0; i < dims; ++i) {
            if (++digits[i] < grid.factors.size()) break;
            digits[i] = 0;
        }
    }

    // Distance to the current weights in log-space is the factor log-norm.
    auto log_distance = [](const CandidateEvaluation& e) {
        double d = 0.0;
        for (double f : e.factors) {
            const double lf = std::log(f);
            d += lf * lf;
        }
        return d;
    };

    bool any_feasible = false;
    for (const auto& e : result.candidates) any_feasible |= e.feasible;

    std::size_t best = candidate_count;  // sentinel
    for (std::size_t c = 0; c < candidate_count; ++c) {
        const auto& e = result.candidates[c];
        if (any_feasible && !e.feasible) continue;
        if (best == candidate_count) {
            best = c;
            continue;
        }
        const auto& b = result.candidates[best];
        if (any_feasible) {
            if (e.predicted_abuse < b.predicted_abuse ||
                (e.predicted_abuse == b.predicted_abuse &&
                 log_distance(e) < log_distance(b))) {
                best = c;
            }
        } else {
            if (e.violation < b.violation ||
                (e.violation == b.violation && log_distance(e) < log_distance(b))) {
                best = c;
            }
        }
    }

    result.selected = best;
    result.weights = result.candidates[best].weights;
    return result;
}

std::string tune_result_to_json(const TuneResult& result, const MetricCatalog& catalog,
                                const std::vector<int>& budget_metrics,
                                const std::vector<double>& rescaled_budgets, int day) {
    ordered_json doc;
    doc["day"] = day;
    ordered_json budgets = ordered_json::array();
    for (std::size_t b = 0; b < budget_metrics.size(); ++b) {
        budgets.push_back(ordered_json{{"metric", catalog.metric(budget_metrics[b]).name},
                                       {"rescaled_budget", rescaled_budgets[b]}});
    }
    doc["budgets"] = std::move(budgets);
    ordered_json cands = ordered_json::array();
    for (std::size_t c = 0; c < result.candidates.size(); ++c) {
        const auto& e = result.candidates[c];
        ordered_json cj;
        cj["factors"] = e.factors;
        cj["weights"] = e.weights.w;
        cj["predicted_abuse"] = e.predicted_abuse;
        cj["predicted_costs"] = e.predicted_costs;
        cj["feasible"] = e.feasible;
        cj["violation"] = e.violation;
        cj["selected"] = c == result.selected;
        cands.push_back(std::move(cj));
    }
    doc["candidates"] = std::move(cands);
    doc["selected_weights"] = result.weights.w;
    return doc.dump(2);
}

}  // namespace pro
