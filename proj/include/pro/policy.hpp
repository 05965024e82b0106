#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pro/domain.hpp"
#include "pro/features.hpp"
#include "pro/reward.hpp"

namespace pro {

struct DecisionRequest {
    EntityId entity;
    int day = 0;
    RawFeatures features;  // includes classifier scores at decision time
};

enum class DecisionMode { Thompson, GreedyMean, BaselineFallback };

const char* decision_mode_name(DecisionMode m);

struct ActionScore {
    int action_index = 0;
    double sampled = 0.0;              // combined sampled score (Thompson) or mean (greedy)
    std::vector<Prediction> per_metric;  // (mu, sigma^2) per declared metric
};

struct Decision {
    int chosen_action = kNoActionIndex;
    DecisionMode mode = DecisionMode::Thompson;
    std::vector<ActionScore> scores;  // one per allowed action, in allowed order
};

// Thresholds and day windows for the rule baselines.
struct RuleConfig {
    double s1 = 0.9;   // automation-score gate
    double s2 = 0.7;   // account abuse-score gate (rule B)
    int n1_days = 30;  // recent compromise-recovery window (rule B)
    int n2_days = 14;  // new-account window (rule B)
    int disable_action = 1;
    int recovery_action = 2;  // compromise recovery flow (rule B)
};

// Feature column names the rule baselines read.
inline constexpr const char* kScoreC1 = "automation_score_c1";
inline constexpr const char* kScoreC2 = "automation_score_c2";
inline constexpr const char* kAbuseScore = "abuse_score";
inline constexpr const char* kDaysSinceRecovery = "days_since_last_recovery";
inline constexpr const char* kAccountAgeDays = "account_age_days";

// max over the automation classifier scores present; empty set reads as 0.
double max_automation_score(const RawFeatures& features);

// Rule baseline: disable when the automation gate fires, otherwise no action.
int baseline_rule_a(const DecisionRequest& request, const RuleConfig& cfg);

// Rule baseline with the nested disable / compromise-recovery conditional.
int baseline_rule_b(const DecisionRequest& request, const RuleConfig& cfg);

enum class BaselineRuleKind { RuleA, RuleB };

int apply_baseline_rule(BaselineRuleKind kind, const DecisionRequest& request,
                        const RuleConfig& cfg);

// Thompson selection over the combined per-action Gaussian: one draw per
// action, v_k ~ N(sum_j w_j mu_jk, sum_j w_j^2 sigma_jk^2); picks argmin.
// Ties prefer no-action, then the lowest index. Any cold (metric, action)
// cell among the allowed actions delegates to the baseline rule.
Decision select_action_thompson(const DecisionRequest& request, const ModelBundle& bundle,
                                const WeightVector& weights,
                                const std::vector<int>& metric_indices,
                                const std::vector<int>& allowed_actions, std::uint64_t run_seed,
                                BaselineRuleKind fallback_rule, const RuleConfig& rule_cfg);

// Deterministic argmin of the combined means; used inside the MPC simulation.
Decision select_action_greedy(const DecisionRequest& request, const ModelBundle& bundle,
                              const WeightVector& weights,
                              const std::vector<int>& metric_indices,
                              const std::vector<int>& allowed_actions,
                              BaselineRuleKind fallback_rule, const RuleConfig& rule_cfg);

// Decision log line: {day, entity, mode, chosen action, sampled scores,
// per-metric mu/sigma^2}.
std::string decision_to_jsonl(const Decision& decision, const DecisionRequest& request,
                              const std::string& arm_name,
                              const std::vector<int>& allowed_actions);

}  // namespace pro
