#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pro/domain.hpp"
#include "pro/features.hpp"
#include "pro/reward.hpp"

namespace pro {

enum class RecordSource { Baseline, Pro };

const char* record_source_name(RecordSource s);
RecordSource record_source_from_name(const std::string& name);

// One (entity, timestamp, features, action, horizon outcome) training row.
// Horizon values are raw observed metric quantities over [day, day+horizon);
// orientation happens when targets are built.
struct ObservationRecord {
    EntityId entity;
    int day = 0;
    RawFeatures features;
    int action_index = 0;
    std::vector<double> horizon_values;  // one per declared metric, raw units
    RecordSource source = RecordSource::Baseline;
};

struct TrainingWindowConfig {
    double half_life_days = 7.0;     // exponential decay rate of inclusion
    std::size_t max_rows_per_cell = 1000000;
};

// Includes each record independently with probability min(1, 2^(-age/h)),
// age measured from `now_day`. Inclusion draws are keyed per record, so the
// result is invariant to input order.
std::vector<ObservationRecord> decay_sample(const std::vector<ObservationRecord>& records,
                                            int now_day, double half_life_days,
                                            std::uint64_t seed);

// Routes each record into one cell per metric: (j, record.action) with target
// orient_metric(horizon_values[j], metric j, 0). Standardization constants are
// frozen per cell. Records must have complete horizons: day + horizon <= now.
// Buckets larger than max_rows_per_cell are thinned to a uniform subset by
// keyed hashing, preserving order-invariance.
std::map<CellKey, CellDataset> build_datasets(const std::vector<ObservationRecord>& records,
                                              const MetricCatalog& catalog,
                                              const FeatureTransformSpec& transform_template,
                                              int now_day, int horizon_days,
                                              std::size_t max_rows_per_cell = 1000000);

// Re-tags records produced by a rule policy run as Baseline bootstrap data.
std::vector<ObservationRecord> bootstrap_cold_start(std::vector<ObservationRecord> baseline_log);

// JSONL persistence, one record per line, schema_version guarded.
std::string observation_to_jsonl(const ObservationRecord& rec);
ObservationRecord observation_from_jsonl(const std::string& line);

}  // namespace pro
