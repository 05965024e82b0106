#pragma once

#include <map>
#include <string>
#include <vector>

namespace pro {

// One past enforcement event carried with the raw features of a request.
struct ActionEvent {
    int action_index = 0;
    int days_ago = 0;  // >= 1; the current decision is not history
};

// Raw feature map as emitted at decision time. Scalar columns are looked up
// by name; the action history backs history-window-sum steps.
struct RawFeatures {
    std::map<std::string, double> scalars;
    std::vector<ActionEvent> action_history;

    double scalar_or(const std::string& name, double fallback) const {
        auto it = scalars.find(name);
        return it == scalars.end() ? fallback : it->second;
    }
};

enum class TransformStepKind {
    Passthrough,
    Log1p,
    OneHot,
    Standardize,
    HistoryWindowSum,
};

struct TransformStep {
    TransformStepKind kind = TransformStepKind::Passthrough;
    std::string column;      // scalar column name (unused for HistoryWindowSum)
    int cardinality = 0;     // OneHot: output slots; last slot is the reserved "other"
    double mean = 0.0;       // Standardize: frozen at fit time
    double std_dev = 1.0;    // Standardize: frozen at fit time
    int action_index = 0;    // HistoryWindowSum
    int window_days = 0;     // HistoryWindowSum

    int output_width() const { return kind == TransformStepKind::OneHot ? cardinality : 1; }
};

// Ordered transform pipeline. Deterministic given inputs; all constants are
// frozen into the steps, so a spec is a pure function of the raw map.
struct FeatureTransformSpec {
    std::vector<TransformStep> steps;

    int output_dim() const {
        int d = 0;
        for (const auto& s : steps) d += s.output_width();
        return d;
    }
};

// Missing scalars read as raw 0, except Standardize where a missing value
// yields output 0 (imputed to the frozen mean). Unknown categorical values
// land in the reserved last one-hot slot.
std::vector<double> apply_transform(const FeatureTransformSpec& spec, const RawFeatures& raw);

// Recomputes Standardize means/stds from a set of raw rows and freezes them
// into a copy of the template spec. Columns with zero variance get std 1.
FeatureTransformSpec freeze_standardization(const FeatureTransformSpec& tmpl,
                                            const std::vector<RawFeatures>& rows);

}  // namespace pro
