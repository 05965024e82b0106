#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pro/domain.hpp"
#include "pro/sim.hpp"
#include "pro/stats.hpp"

namespace pro {

struct MetricComparison {
    std::string metric;
    MetricKind kind = MetricKind::Abuse;
    bool benign_positive = false;
    double control_mean = 0.0;
    double test_mean = 0.0;
    double control_total = 0.0;
    double test_total = 0.0;
    double delta_pct = 0.0;  // (test - control) / control
    double t = 0.0;
    double p = 1.0;
    bool significant = false;  // p <= alpha
    // Significant shift in the unfavorable direction for this metric.
    bool degradation = false;
};

struct WeightSnapshot {
    int day = 0;
    std::vector<double> weights;
};

struct NmseRow {
    int day = 0;
    std::vector<double> per_metric;  // -1 when not evaluable
};

struct ExperimentReport {
    std::string scenario;
    std::uint64_t seed = 0;
    DayRange window{0, 0};
    double alpha = 0.05;
    std::vector<MetricComparison> metrics;
    // [arm][day][action]: fraction of that arm's decisions choosing the action.
    std::array<std::vector<std::vector<double>>, 2> selection_rates;
    std::array<std::vector<std::size_t>, 2> decision_counts;  // [arm][day]
    std::array<std::vector<WeightSnapshot>, 2> weight_trajectory;
    std::vector<NmseRow> model_nmse;
    // Raw and counterfactual per-day totals, [arm][day][metric].
    std::array<std::vector<std::vector<double>>, 2> daily_totals;
    std::array<std::vector<std::vector<double>>, 2> daily_counterfactual_totals;
    std::array<std::size_t, 2> enrolled{0, 0};
    // Per-entity window sums for each registered window (index 0 = main).
    std::vector<std::vector<World::WindowRow>> window_rows;
};

struct RunOptions {
    std::string out_dir;  // empty: no artifacts written
    std::vector<DayRange> extra_windows;
    bool keep_window_rows = false;  // retain per-entity sums in the report struct
};

// Executes the full protocol: warmup under the bootstrap rule, cold-start
// bootstrap, daily decide/retrain/retune loop, last-window aggregation and
// two-sample statistics.
ExperimentReport run_experiment(const SimScenario& scenario, std::uint64_t seed,
                                const RunOptions& options = {});

std::string report_to_json(const ExperimentReport& report, const MetricCatalog& catalog);
std::string report_to_csv(const ExperimentReport& report, const MetricCatalog& catalog);

// Fraction of one arm's decisions choosing the action, per day, recomputed
// from a decision log (JSONL lines).
std::vector<double> selection_rate_series(const std::vector<std::string>& decision_log_lines,
                                          int action_index, const std::string& arm_name,
                                          int days);

// Re-aggregates per-metric totals/means from a metric-sample JSONL log;
// the independent check for report aggregation.
AggregateResult reaggregate_metric_samples(const std::vector<std::string>& jsonl_lines,
                                           DayRange window, std::size_t metric_count);

}  // namespace pro
