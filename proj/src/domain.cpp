#include "pro/domain.hpp"

#include <cmath>
#include <set>
#include <unordered_set>

namespace pro {

double orient_metric(double raw_value, const MetricSpec& spec, double baseline_value) {
    if (!std::isfinite(raw_value) || !std::isfinite(baseline_value)) {
        throw std::invalid_argument("orient_metric: non-finite input for metric " + spec.name);
    }
    // Benign-positive quantities become "loss" relative to the baseline;
    // already-oriented ones are zero-referenced as-is.
    return spec.benign_positive ? baseline_value - raw_value : raw_value - baseline_value;
}

AggregateResult aggregate_metrics(const std::vector<MetricSample>& records,
                                  DayRange window, std::size_t metric_count) {
    AggregateResult out;
    out.totals.assign(metric_count, 0.0);
    out.means.assign(metric_count, 0.0);

    std::set<std::uint64_t> entities;
    for (const auto& rec : records) {
        if (!window.contains(rec.day)) continue;
        if (rec.values.size() != metric_count) {
            throw std::invalid_argument("aggregate_metrics: record metric arity mismatch");
        }
        entities.insert(rec.entity.value);
        for (std::size_t j = 0; j < metric_count; ++j) out.totals[j] += rec.values[j];
    }
    if (entities.empty()) {
        throw std::invalid_argument("aggregate_metrics: empty entity set in window");
    }
    out.entity_count = entities.size();
    for (std::size_t j = 0; j < metric_count; ++j) {
        out.means[j] = out.totals[j] / static_cast<double>(out.entity_count);
    }
    return out;
}

int MetricCatalog::metric_index(const std::string& name) const {
    for (const auto& m : metrics) {
        if (m.name == name) return m.index;
    }
    throw std::invalid_argument("unknown metric: " + name);
}

int MetricCatalog::action_index(const std::string& name) const {
    for (const auto& a : actions) {
        if (a.name == name) return a.index;
    }
    throw std::invalid_argument("unknown action: " + name);
}

void MetricCatalog::validate() const {
    if (actions.empty() || actions.front().index != kNoActionIndex) {
        throw std::invalid_argument("action 0 must be the distinguished no-action");
    }
    std::unordered_set<std::string> names;
    for (int j = 0; j < metric_count(); ++j) {
        if (metrics[static_cast<std::size_t>(j)].index != j) {
            throw std::invalid_argument("metric indices must be dense and ordered");
        }
        if (!names.insert(metrics[static_cast<std::size_t>(j)].name).second) {
            throw std::invalid_argument("duplicate metric name: " + metrics[static_cast<std::size_t>(j)].name);
        }
    }
    names.clear();
    for (int k = 0; k < action_count(); ++k) {
        if (actions[static_cast<std::size_t>(k)].index != k) {
            throw std::invalid_argument("action indices must be dense and ordered");
        }
        if (!names.insert(actions[static_cast<std::size_t>(k)].name).second) {
            throw std::invalid_argument("duplicate action name: " + actions[static_cast<std::size_t>(k)].name);
        }
    }
    for (const auto& b : budgets) {
        if (b.metric_index < 0 || b.metric_index >= metric_count()) {
            throw std::invalid_argument("budget references unknown metric index");
        }
        if (metric(b.metric_index).kind != MetricKind::Cost) {
            throw std::invalid_argument("budget must reference a Cost metric: " + metric(b.metric_index).name);
        }
        if (!(b.budget >= 0.0)) throw std::invalid_argument("budget must be >= 0");
    }
}

}  // namespace pro
