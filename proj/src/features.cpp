#include "pro/features.hpp"

#include <cmath>
#include <stdexcept>

namespace pro {

std::vector<double> apply_transform(const FeatureTransformSpec& spec, const RawFeatures& raw) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(spec.output_dim()));

    for (const auto& step : spec.steps) {
        switch (step.kind) {
            case TransformStepKind::Passthrough:
                out.push_back(raw.scalar_or(step.column, 0.0));
                break;
            case TransformStepKind::Log1p: {
                const double v = raw.scalar_or(step.column, 0.0);
                out.push_back(std::log1p(v < 0.0 ? 0.0 : v));
                break;
            }
            case TransformStepKind::OneHot: {
                if (step.cardinality < 1) throw std::invalid_argument("one-hot cardinality must be >= 1");
                const double v = raw.scalar_or(step.column, -1.0);
                int slot = static_cast<int>(v);
                if (slot < 0 || slot >= step.cardinality || static_cast<double>(slot) != v) {
                    slot = step.cardinality - 1;  // reserved "other"
                }
                for (int i = 0; i < step.cardinality; ++i) out.push_back(i == slot ? 1.0 : 0.0);
                break;
            }
            case TransformStepKind::Standardize: {
                auto it = raw.scalars.find(step.column);
                if (it == raw.scalars.end()) {
                    out.push_back(0.0);
                } else {
                    const double sd = step.std_dev > 0.0 ? step.std_dev : 1.0;
                    out.push_back((it->second - step.mean) / sd);
                }
                break;
            }
            case TransformStepKind::HistoryWindowSum: {
                double count = 0.0;
                for (const auto& ev : raw.action_history) {
                    if (ev.action_index == step.action_index && ev.days_ago >= 1 &&
                        ev.days_ago <= step.window_days) {
                        count += 1.0;
                    }
                }
                out.push_back(count);
                break;
            }
        }
    }

    for (double v : out) {
        if (!std::isfinite(v)) throw std::runtime_error("apply_transform: non-finite output");
    }
    return out;
}

FeatureTransformSpec freeze_standardization(const FeatureTransformSpec& tmpl,
                                            const std::vector<RawFeatures>& rows) {
    FeatureTransformSpec frozen = tmpl;
    for (auto& step : frozen.steps) {
        if (step.kind != TransformStepKind::Standardize) continue;
        double sum = 0.0;
        double sum_sq = 0.0;
        std::size_t n = 0;
        for (const auto& row : rows) {
            auto it = row.scalars.find(step.column);
            if (it == row.scalars.end()) continue;
            sum += it->second;
            sum_sq += it->second * it->second;
            ++n;
        }
        if (n == 0) {
            step.mean = 0.0;
            step.std_dev = 1.0;
            continue;
        }
        step.mean = sum / static_cast<double>(n);
        const double var = sum_sq / static_cast<double>(n) - step.mean * step.mean;
        step.std_dev = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return frozen;
}

}  // namespace pro
