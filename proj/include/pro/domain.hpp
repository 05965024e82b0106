#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pro {

// Shared vocabulary: entities, actions, metrics, budgets, weights, horizons.
// Everything here is an immutable value object once constructed.

struct EntityId {
    std::uint64_t value = 0;

    friend bool operator==(EntityId a, EntityId b) { return a.value == b.value; }
    friend bool operator!=(EntityId a, EntityId b) { return a.value != b.value; }
    friend bool operator<(EntityId a, EntityId b) { return a.value < b.value; }
};

// Index 0 is always the distinguished "no action".
inline constexpr int kNoActionIndex = 0;

struct ActionId {
    int index = kNoActionIndex;
    std::string name;

    bool is_no_action() const { return index == kNoActionIndex; }
    friend bool operator==(const ActionId& a, const ActionId& b) { return a.index == b.index; }
};

enum class MetricKind { Abuse, Cost };

struct MetricSpec {
    std::string name;
    MetricKind kind = MetricKind::Abuse;
    int index = 0;          // position in the declared metric list
    std::string unit;       // free-form, e.g. "requests", "days", "dollars"
    // True for quantities where larger raw values are good (e.g. days active);
    // orientation flips them into the smaller-is-better convention.
    bool benign_positive = false;
};

struct BudgetSpec {
    int metric_index = 0;   // must reference a Cost metric
    double budget = 0.0;    // metric units per period, >= 0
};

struct WeightVector {
    std::vector<double> w;  // one non-negative multiplier per metric

    double at(int j) const { return w.at(static_cast<std::size_t>(j)); }
    std::size_t size() const { return w.size(); }
};

struct HorizonConfig {
    int horizon_days = 1;   // length of [t0, t1)
    int retrain_cadence_days = 1;

    void validate() const {
        if (horizon_days < 1) throw std::invalid_argument("horizon must be >= 1 day");
        if (retrain_cadence_days < 1) throw std::invalid_argument("retrain cadence must be >= 1 day");
    }
};

// Day range [begin, end).
struct DayRange {
    int begin = 0;
    int end = 0;

    bool contains(int day) const { return day >= begin && day < end; }
    int length() const { return end - begin; }
};

// Flips a raw metric value into the smaller-is-better orientation,
// zero-referenced to the supplied no-action baseline. With baseline 0 this is
// the raw oriented value.
double orient_metric(double raw_value, const MetricSpec& spec, double baseline_value);

struct MetricSample {
    EntityId entity;
    int day = 0;
    std::vector<double> values;  // one per declared metric
};

struct AggregateResult {
    std::vector<double> totals;      // sum over entity-days in the window
    std::vector<double> means;       // totals / number of distinct entities
    std::size_t entity_count = 0;
};

// Sums per-metric values over the window and divides by the number of
// distinct entities seen there. Empty entity set is an error.
AggregateResult aggregate_metrics(const std::vector<MetricSample>& records,
                                  DayRange window, std::size_t metric_count);

// Declared metric/action/budget universe for one run. Looked up by every
// other module; validated once at load time.
struct MetricCatalog {
    std::vector<MetricSpec> metrics;
    std::vector<ActionId> actions;
    std::vector<BudgetSpec> budgets;

    int metric_count() const { return static_cast<int>(metrics.size()); }
    int action_count() const { return static_cast<int>(actions.size()); }

    const MetricSpec& metric(int j) const { return metrics.at(static_cast<std::size_t>(j)); }
    const ActionId& action(int k) const { return actions.at(static_cast<std::size_t>(k)); }

    int metric_index(const std::string& name) const;
    int action_index(const std::string& name) const;

    // Every budget references exactly one declared Cost metric, action 0 is
    // "no action", metric indices are dense, names unique.
    void validate() const;
};

}  // namespace pro
