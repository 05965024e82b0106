#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pro/domain.hpp"
#include "pro/policy.hpp"
#include "pro/training.hpp"

namespace pro {

// Behavioral template for a class of entities. Classifier score distributions
// deliberately overlap so that benign archetypes occasionally cross the
// eligibility gate, mimicking an imperfect upstream detector.
struct Archetype {
    std::string name;
    double base_request_rate = 0.0;     // Poisson mean per active day
    bool deterministic_requests = false;  // debug/test: count = round(rate)
    int request_weight_min = 1;         // per-request integer weight range
    int request_weight_max = 1;
    double activity_prob = 0.5;         // daily probability of being active
    double feedback_prob = 0.0;         // daily probability of filing a report
    double score_c1_mean = 0.1, score_c1_sd = 0.1;
    double score_c2_mean = 0.1, score_c2_sd = 0.1;
    double abuse_score_mean = 0.1, abuse_score_sd = 0.1;
    double account_age_min_days = 30.0, account_age_max_days = 2000.0;
    std::array<double, 4> device_probs = {0.25, 0.25, 0.25, 0.25};
    double sessions_mean = 1.0;         // Poisson mean per active day
    double recovery_lookback_days = 365.0;  // initial days-since-recovery ~ U[0, this]
};

// How one action lands on one archetype. The no-action row is the identity.
struct ActionEffect {
    double compliance_prob = 1.0;   // P(clears the challenge immediately)
    double abuse_multiplier = 1.0;  // request-rate factor while in effect
    double activity_multiplier = 1.0;
    double feedback_delta = 0.0;    // added to daily report probability while in effect
    int duration_days = 0;
    double dollar_cost = 0.0;       // charged once per application (e.g. SMS)

    static ActionEffect identity() { return ActionEffect{}; }
};

enum class SimEventKind { LaunchAction, InjectBug, AdversaryAdapts, AddCostMetric, ChangeBudget };

enum class ArmScope { Both, Control, Test };

struct SimEvent {
    int day = 0;
    SimEventKind kind = SimEventKind::LaunchAction;
    std::string action;     // LaunchAction / InjectBug / AdversaryAdapts
    std::string archetype;  // AdversaryAdapts target
    std::string metric;     // AddCostMetric / ChangeBudget
    double budget = 0.0;
    double initial_weight = 1.0;
    double abuse_multiplier = 0.95;  // AdversaryAdapts restored rate
    ArmScope arm = ArmScope::Test;
};

enum class PolicyKind { RuleA, RuleB, Pro };

struct MpcConfig {
    double sample_fraction = 0.1;
    double forecast_factor = 1.0;
    std::vector<double> factors = {0.5, 0.8, 1.0, 1.25, 2.0};
};

struct TrainingConfig {
    double half_life_days = 7.0;
    std::size_t cold_row_floor = 50;
    double epsilon = 0.05;
    std::size_t max_rows_per_cell = 1000000;
};

struct ExperimentPlan {
    PolicyKind control_policy = PolicyKind::RuleA;
    PolicyKind test_policy = PolicyKind::Pro;
    // Rule used during warmup and as the cold-model fallback; must be a rule.
    PolicyKind bootstrap_policy = PolicyKind::RuleA;
    int warmup_days = 14;
    int window_days = 14;
    double alpha = 0.05;
    RuleConfig rule;
    MpcConfig mpc;
    TrainingConfig training;
    std::vector<std::string> control_actions;  // empty -> all declared actions
    std::vector<std::string> test_actions;
    std::vector<std::string> initial_active_metrics;  // empty -> all declared metrics
};

// A fully scripted world: population, behavior tables, event schedule.
struct SimScenario {
    std::string name;
    int days = 60;
    double gate_threshold = 0.8;
    HorizonConfig horizon;
    MetricCatalog catalog;
    std::map<std::string, double> initial_weights;  // by metric name
    std::vector<Archetype> archetypes;
    std::vector<std::size_t> populations;  // per archetype, both arms combined
    // effects[archetype][action]; filled dense at load time.
    std::vector<std::vector<ActionEffect>> effects;
    std::vector<SimEvent> events;
    ExperimentPlan plan;
    bool emit_metric_samples = false;  // per entity-day JSONL for re-aggregation

    int archetype_index(const std::string& name) const;
    void validate() const;
};

SimScenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const SimScenario& scenario);

// Canonical feature schema emitted by the simulator; documented in
// docs/feature_schema.md. One history-window-sum step per declared action.
FeatureTransformSpec default_transform_template(int action_count);

struct ArmPolicy {
    std::string name;
    // Returns the decision and whether it came from a learned policy (Pro)
    // or a rule (Baseline); sources the observation record tag.
    std::function<Decision(const DecisionRequest&)> decide;
};

struct DecisionEvent {
    int arm = 0;  // 0 control, 1 test
    DecisionRequest request;
    Decision decision;
};

struct DayResult {
    int day = 0;
    std::vector<DecisionEvent> decisions;
    std::vector<ObservationRecord> completed;        // horizon fully elapsed
    std::vector<MetricSample> metric_samples;        // enrolled entity-days, if enabled
};

class World {
public:
    World(SimScenario scenario, std::uint64_t seed);
    ~World();
    World(const World&) = delete;
    World& operator=(const World&) = delete;

    // Events are applied at day boundaries, before decisions. World-side
    // events mutate the behavior tables and allow-lists; budget/metric events
    // (AddCostMetric, ChangeBudget) are validated here and applied by the
    // harness, which owns weights and budgets.
    void apply_event(const SimEvent& event);

    const std::vector<int>& allowed_actions(int arm) const {
        return allowed_actions_[static_cast<std::size_t>(arm)];
    }

    DayResult step_day(const std::array<ArmPolicy, 2>& policies);

    // Per-metric no-action values for the given entity on the most recently
    // stepped day, replayed with the identical random substreams.
    std::vector<double> counterfactual_baseline(std::uint64_t entity_value, int day) const;

    int current_day() const { return day_; }
    const SimScenario& scenario() const { return scenario_; }
    std::size_t entity_count() const;
    int arm_of(std::uint64_t entity_value) const;
    bool enrolled(std::uint64_t entity_value) const;

    // Per-entity raw metric sums are accumulated for each registered window;
    // window 0 is the experiment's measurement window, extras serve
    // case-study pre/post comparisons. Must be set before stepping.
    void set_measurement_windows(std::vector<DayRange> windows);

    // Raw totals over enrolled entities, indexed [arm][metric], for one day.
    const std::vector<std::array<std::vector<double>, 2>>& daily_totals() const {
        return daily_totals_;
    }
    const std::vector<std::array<std::vector<double>, 2>>& daily_counterfactual_totals() const {
        return daily_cf_totals_;
    }
    // Per-entity raw metric sums over one measurement window.
    struct WindowRow {
        std::uint64_t entity;
        int arm;
        std::vector<double> sums;
    };
    const std::vector<WindowRow>& window_rows(std::size_t window_index = 0) const {
        return windows_.at(window_index).rows;
    }
    std::size_t enrolled_count(int arm) const;

    const ActionEffect& effect(int archetype, int action) const;

private:
    struct EntityState;
    struct DayDraw;

    RawFeatures features_for(const EntityState& e, int day) const;
    DayDraw simulate_day(const EntityState& e, int day, bool counterfactual) const;
    void apply_action(EntityState& e, int action, int day);

    struct WindowAccumulator {
        DayRange range;
        std::vector<WindowRow> rows;
        std::map<std::uint64_t, std::size_t> lookup;
    };

    SimScenario scenario_;
    std::uint64_t seed_ = 0;
    int day_ = 0;
    std::vector<EntityState> entities_;
    std::map<std::uint64_t, std::size_t> entity_lookup_;
    std::array<std::vector<int>, 2> allowed_actions_;
    std::vector<std::array<std::vector<double>, 2>> daily_totals_;
    std::vector<std::array<std::vector<double>, 2>> daily_cf_totals_;
    std::vector<WindowAccumulator> windows_;
    std::vector<std::vector<double>> cf_today_;
    int cf_day_ = -1;
};

}  // namespace pro
