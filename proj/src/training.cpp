#include "pro/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pro/rng.hpp"

namespace pro {

using nlohmann::ordered_json;

const char* record_source_name(RecordSource s) {
    return s == RecordSource::Baseline ? "baseline" : "pro";
}

RecordSource record_source_from_name(const std::string& name) {
    if (name == "baseline") return RecordSource::Baseline;
    if (name == "pro") return RecordSource::Pro;
    throw std::invalid_argument("unknown record source: " + name);
}

std::vector<ObservationRecord> decay_sample(const std::vector<ObservationRecord>& records,
                                            int now_day, double half_life_days,
                                            std::uint64_t seed) {
    if (!(half_life_days > 0.0)) throw std::invalid_argument("decay_sample: half-life must be > 0");
    std::vector<ObservationRecord> kept;
    kept.reserve(records.size());
    for (const auto& rec : records) {
        const double age = static_cast<double>(now_day - rec.day);
        double p = 1.0;
        if (age > 0.0 && std::isfinite(half_life_days)) {
            p = std::exp2(-age / half_life_days);
        }
        // Keyed by (entity, record day) rather than stream position so the
        // sample is a pure function of the record set.
        Substream stream = Substream::keyed(seed, rec.entity.value, rec.day, "decay");
        if (p >= 1.0 || stream.next_unit() < p) kept.push_back(rec);
    }
    return kept;
}

std::map<CellKey, CellDataset> build_datasets(const std::vector<ObservationRecord>& records,
                                              const MetricCatalog& catalog,
                                              const FeatureTransformSpec& transform_template,
                                              int now_day, int horizon_days,
                                              std::size_t max_rows_per_cell) {
    const int n_metrics = catalog.metric_count();
    const int n_actions = catalog.action_count();

    // Group raw rows by action first; every record lands in one action bucket
    // and then fans out to one cell per metric.
    std::vector<std::vector<const ObservationRecord*>> by_action(
        static_cast<std::size_t>(n_actions));
    for (const auto& rec : records) {
        if (rec.action_index < 0 || rec.action_index >= n_actions) {
            throw std::invalid_argument("build_datasets: record with unknown action id");
        }
        if (rec.day + horizon_days > now_day) {
            throw std::invalid_argument("build_datasets: record horizon not yet elapsed");
        }
        if (rec.horizon_values.size() != static_cast<std::size_t>(n_metrics)) {
            throw std::invalid_argument("build_datasets: record metric arity mismatch");
        }
        by_action[static_cast<std::size_t>(rec.action_index)].push_back(&rec);
    }

    for (auto& bucket : by_action) {
        if (bucket.size() <= max_rows_per_cell) continue;
        // Keep the rows with the smallest keyed hashes: a uniform subset that
        // does not depend on input order.
        std::stable_sort(bucket.begin(), bucket.end(),
                         [](const ObservationRecord* a, const ObservationRecord* b) {
                             const std::uint64_t ha = hash_combine(
                                 mix64(a->entity.value), static_cast<std::uint64_t>(a->day));
                             const std::uint64_t hb = hash_combine(
                                 mix64(b->entity.value), static_cast<std::uint64_t>(b->day));
                             return ha < hb;
                         });
        bucket.resize(max_rows_per_cell);
    }

    std::map<CellKey, CellDataset> out;
    for (int k = 0; k < n_actions; ++k) {
        const auto& rows = by_action[static_cast<std::size_t>(k)];
        std::vector<RawFeatures> raw_rows;
        raw_rows.reserve(rows.size());
        for (const auto* rec : rows) raw_rows.push_back(rec->features);

        // Standardization statistics are per cell; rows are shared within an
        // action column, so the frozen spec is too.
        const FeatureTransformSpec frozen = freeze_standardization(transform_template, raw_rows);
        const int d = frozen.output_dim();

        Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), d);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const std::vector<double> phi = apply_transform(frozen, rows[r]->features);
            for (int c = 0; c < d; ++c) x(static_cast<Eigen::Index>(r), c) = phi[static_cast<std::size_t>(c)];
        }

        for (int j = 0; j < n_metrics; ++j) {
            CellDataset cell;
            cell.x = x;
            cell.transform = frozen;
            cell.y.resize(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                cell.y[static_cast<Eigen::Index>(r)] = orient_metric(
                    rows[r]->horizon_values[static_cast<std::size_t>(j)], catalog.metric(j), 0.0);
            }
            out.emplace(CellKey{j, k}, std::move(cell));
        }
    }
    return out;
}

std::vector<ObservationRecord> bootstrap_cold_start(std::vector<ObservationRecord> baseline_log) {
    for (auto& rec : baseline_log) rec.source = RecordSource::Baseline;
    return baseline_log;
}

std::string observation_to_jsonl(const ObservationRecord& rec) {
    ordered_json doc;
    doc["v"] = 1;
    doc["entity"] = rec.entity.value;
    doc["day"] = rec.day;
    doc["action"] = rec.action_index;
    doc["source"] = record_source_name(rec.source);
    ordered_json scalars;
    for (const auto& [name, value] : rec.features.scalars) scalars[name] = value;
    doc["features"] = std::move(scalars);
    ordered_json history = ordered_json::array();
    for (const auto& ev : rec.features.action_history) {
        history.push_back(ordered_json{{"action", ev.action_index}, {"days_ago", ev.days_ago}});
    }
    doc["action_history"] = std::move(history);
    doc["horizon_values"] = rec.horizon_values;
    return doc.dump();
}

ObservationRecord observation_from_jsonl(const std::string& line) {
    const ordered_json doc = ordered_json::parse(line);
    if (doc.at("v").get<int>() != 1) {
        throw std::invalid_argument("observation jsonl: unsupported schema version");
    }
    ObservationRecord rec;
    rec.entity.value = doc.at("entity").get<std::uint64_t>();
    rec.day = doc.at("day").get<int>();
    rec.action_index = doc.at("action").get<int>();
    rec.source = record_source_from_name(doc.at("source").get<std::string>());
    for (const auto& [name, value] : doc.at("features").items()) {
        rec.features.scalars[name] = value.get<double>();
    }
    for (const auto& ev : doc.at("action_history")) {
        rec.features.action_history.push_back(
            ActionEvent{ev.at("action").get<int>(), ev.at("days_ago").get<int>()});
    }
    rec.horizon_values = doc.at("horizon_values").get<std::vector<double>>();
    return rec;
}

}  // namespace pro
