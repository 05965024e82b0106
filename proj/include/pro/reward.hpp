#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pro/domain.hpp"
#include "pro/features.hpp"
#include "pro/ridge.hpp"

namespace pro {

// Cold: too little data to trust; the policy must fall back for decisions
//       that would need this cell.
// Prior: explicitly enabled for exploration with the n = 0 posterior
//        (theta = 0, sigma = I/lambda). How a new action gets onboarded.
// Fitted: enough rows, parameters learned from data.
enum class CellState { Cold, Prior, Fitted };

const char* cell_state_name(CellState s);
CellState cell_state_from_name(const std::string& name);

struct Prediction {
    double mu = 0.0;
    double sigma_sq = 0.0;
};

// One (metric j, action k) regression cell.
struct MetricActionModel {
    int metric_index = 0;
    int action_index = 0;
    Eigen::VectorXd theta;
    Eigen::MatrixXd sigma;
    double lambda = 1.0;
    double epsilon = 0.05;
    FeatureTransformSpec transform;
    std::size_t row_count = 0;
    CellState state = CellState::Cold;

    bool warm() const { return state != CellState::Cold; }

    // mu = phi' theta, sigma^2 = epsilon * (phi' Sigma phi).
    Prediction predict(const RawFeatures& raw) const;
    Prediction predict_transformed(const Eigen::VectorXd& phi) const;
};

struct TrainConfig {
    double epsilon = 0.05;
    std::vector<double> lambda_grid;     // empty -> default grid
    std::size_t cold_row_floor = 50;     // cells below this are Cold
};

struct CellDataset {
    Eigen::MatrixXd x;   // n x D, already transformed
    Eigen::VectorXd y;   // n, oriented targets
    FeatureTransformSpec transform;  // standardization frozen on this cell's rows
};

using CellKey = std::pair<int, int>;  // (metric j, action k)

class ModelBundle {
public:
    ModelBundle() = default;
    ModelBundle(int metric_count, int action_count);

    const MetricActionModel& cell(int j, int k) const;
    MetricActionModel& cell(int j, int k);

    int metric_count() const { return metric_count_; }
    int action_count() const { return action_count_; }
    int snapshot_day() const { return snapshot_day_; }
    void set_snapshot_day(int day) { snapshot_day_ = day; }

    bool warm_for(int metric_index, int action_index) const {
        return cell(metric_index, action_index).warm();
    }
    // Every declared metric cell for this action is warm.
    bool action_warm(int action_index, const std::vector<int>& metric_indices) const;
    bool action_fitted(int action_index, const std::vector<int>& metric_indices) const;

    // Converts Cold cells of the given action into Prior cells so Thompson
    // sampling can explore a freshly launched action.
    void enable_exploration(int action_index, double default_lambda);

    std::vector<MetricActionModel>& cells() { return cells_; }
    const std::vector<MetricActionModel>& cells() const { return cells_; }

private:
    int metric_count_ = 0;
    int action_count_ = 0;
    int snapshot_day_ = 0;
    std::vector<MetricActionModel> cells_;
};

// Fits the full metric x action grid; each cell independently (GCV per cell).
// Cells with fewer rows than the floor are marked Cold but still carry the
// best parameters available (the n = 0 posterior when empty).
ModelBundle train_bundle(const std::map<CellKey, CellDataset>& datasets, int metric_count,
                         int action_count, const TrainConfig& config);

// ||pred - truth||^2 / ||truth||^2. All-zero truth is an error.
double normalized_mse(std::span<const double> predictions, std::span<const double> ground_truth);

// Lossless JSON persistence: doubles encoded as hex-float strings.
std::string bundle_to_json(const ModelBundle& bundle, const MetricCatalog& catalog);
ModelBundle bundle_from_json(const std::string& text);

}  // namespace pro
