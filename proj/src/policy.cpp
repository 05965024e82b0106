#include "pro/policy.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pro/rng.hpp"

namespace pro {

using nlohmann::ordered_json;

const char* decision_mode_name(DecisionMode m) {
    switch (m) {
        case DecisionMode::Thompson: return "thompson";
        case DecisionMode::GreedyMean: return "greedy_mean";
        case DecisionMode::BaselineFallback: return "baseline_fallback";
    }
    return "thompson";
}

double max_automation_score(const RawFeatures& features) {
    double best = 0.0;  // max over an empty score set is 0
    for (const char* col : {kScoreC1, kScoreC2}) {
        auto it = features.scalars.find(col);
        if (it != features.scalars.end() && it->second > best) best = it->second;
    }
    return best;
}

int baseline_rule_a(const DecisionRequest& request, const RuleConfig& cfg) {
    return max_automation_score(request.features) >= cfg.s1 ? cfg.disable_action
                                                            : kNoActionIndex;
}

int baseline_rule_b(const DecisionRequest& request, const RuleConfig& cfg) {
    if (max_automation_score(request.features) < cfg.s1) return kNoActionIndex;
    const double abuse = request.features.scalar_or(kAbuseScore, 0.0);
    const double days_since_recovery =
        request.features.scalar_or(kDaysSinceRecovery, 1.0e9);
    const double age = request.features.scalar_or(kAccountAgeDays, 1.0e9);
    if (abuse >= cfg.s2 || days_since_recovery <= static_cast<double>(cfg.n1_days) ||
        age <= static_cast<double>(cfg.n2_days)) {
        return cfg.disable_action;
    }
    return cfg.recovery_action;
}

int apply_baseline_rule(BaselineRuleKind kind, const DecisionRequest& request,
                        const RuleConfig& cfg) {
    return kind == BaselineRuleKind::RuleA ? baseline_rule_a(request, cfg)
                                           : baseline_rule_b(request, cfg);
}

namespace {

struct CombinedScores {
    bool any_cold = false;
    std::vector<ActionScore> scores;  // combined mean in `sampled`, variance stashed
    std::vector<double> variances;
};

CombinedScores combine(const DecisionRequest& request, const ModelBundle& bundle,
                       const WeightVector& weights, const std::vector<int>& metric_indices,
                       const std::vector<int>& allowed_actions) {
    CombinedScores out;
    out.scores.reserve(allowed_actions.size());
    out.variances.reserve(allowed_actions.size());
    const int n_metrics = bundle.metric_count();

    for (int k : allowed_actions) {
        ActionScore score;
        score.action_index = k;
        score.per_metric.assign(static_cast<std::size_t>(n_metrics), Prediction{});
        double mean = 0.0;
        double var = 0.0;
        for (int j : metric_indices) {
            const auto& cell = bundle.cell(j, k);
            if (!cell.warm()) {
                out.any_cold = true;
                continue;
            }
            const Prediction p = cell.predict(request.features);
            score.per_metric[static_cast<std::size_t>(j)] = p;
            const double w = weights.at(j);
            mean += w * p.mu;
            var += w * w * p.sigma_sq;
        }
        score.sampled = mean;
        out.scores.push_back(std::move(score));
        out.variances.push_back(var);
    }
    return out;
}

// argmin with ties broken toward no-action, then lowest index. No-action is
// index 0, so both rules collapse to preferring the lowest action index.
int pick_min(const std::vector<ActionScore>& scores) {
    if (scores.empty()) throw std::invalid_argument("policy: empty allowed action set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        const double v = scores[i].sampled;
        const double b = scores[best].sampled;
        if (v < b || (v == b && scores[i].action_index < scores[best].action_index)) {
            best = i;
        }
    }
    return static_cast<int>(best);
}

Decision fallback(const DecisionRequest& request, BaselineRuleKind rule,
                  const RuleConfig& cfg) {
    Decision d;
    d.mode = DecisionMode::BaselineFallback;
    d.chosen_action = apply_baseline_rule(rule, request, cfg);
    return d;
}

}  // namespace

Decision select_action_thompson(const DecisionRequest& request, const ModelBundle& bundle,
                                const WeightVector& weights,
                                const std::vector<int>& metric_indices,
                                const std::vector<int>& allowed_actions, std::uint64_t run_seed,
                                BaselineRuleKind fallback_rule, const RuleConfig& rule_cfg) {
    CombinedScores combined =
        combine(request, bundle, weights, metric_indices, allowed_actions);
    if (combined.any_cold) return fallback(request, fallback_rule, rule_cfg);

    Substream stream =
        Substream::keyed(run_seed, request.entity.value, request.day, "thompson");
    for (std::size_t i = 0; i < combined.scores.size(); ++i) {
        const double sd = std::sqrt(combined.variances[i]);
        // One draw per action from the combined Gaussian; the draw happens
        // even at zero variance so the stream layout does not depend on the
        // model parameters.
        const double z = stream.next_normal();
        combined.scores[i].sampled += sd * z;
    }

    Decision d;
    d.mode = DecisionMode::Thompson;
    const int best = pick_min(combined.scores);
    d.chosen_action = combined.scores[static_cast<std::size_t>(best)].action_index;
    d.scores = std::move(combined.scores);
    return d;
}

Decision select_action_greedy(const DecisionRequest& request, const ModelBundle& bundle,
                              const WeightVector& weights,
                              const std::vector<int>& metric_indices,
                              const std::vector<int>& allowed_actions,
                              BaselineRuleKind fallback_rule, const RuleConfig& rule_cfg) {
    CombinedScores combined =
        combine(request, bundle, weights, metric_indices, allowed_actions);
    if (combined.any_cold) return fallback(request, fallback_rule, rule_cfg);

    Decision d;
    d.mode = DecisionMode::GreedyMean;
    const int best = pick_min(combined.scores);
    d.chosen_action = combined.scores[static_cast<std::size_t>(best)].action_index;
    d.scores = std::move(combined.scores);
    return d;
}

std::string decision_to_jsonl(const Decision& decision, const DecisionRequest& request,
                              const std::string& arm_name,
                              const std::vector<int>& allowed_actions) {
    ordered_json doc;
    doc["v"] = 1;
    doc["day"] = request.day;
    doc["entity"] = request.entity.value;
    doc["arm"] = arm_name;
    doc["mode"] = decision_mode_name(decision.mode);
    doc["action"] = decision.chosen_action;
    ordered_json scores = ordered_json::array();
    for (const auto& s : decision.scores) {
        ordered_json sj;
        sj["action"] = s.action_index;
        sj["sampled"] = s.sampled;
        ordered_json mu = ordered_json::array();
        ordered_json var = ordered_json::array();
        for (const auto& p : s.per_metric) {
            mu.push_back(p.mu);
            var.push_back(p.sigma_sq);
        }
        sj["mu"] = std::move(mu);
        sj["sigma_sq"] = std::move(var);
        scores.push_back(std::move(sj));
    }
    doc["scores"] = std::move(scores);
    doc["allowed"] = allowed_actions;
    return doc.dump();
}

}  // namespace pro
