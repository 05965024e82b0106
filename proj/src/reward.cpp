#include "pro/reward.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pro {

using nlohmann::ordered_json;

const char* cell_state_name(CellState s) {
    switch (s) {
        case CellState::Cold: return "cold";
        case CellState::Prior: return "prior";
        case CellState::Fitted: return "fitted";
    }
    return "cold";
}

CellState cell_state_from_name(const std::string& name) {
    if (name == "cold") return CellState::Cold;
    if (name == "prior") return CellState::Prior;
    if (name == "fitted") return CellState::Fitted;
    throw std::invalid_argument("unknown cell state: " + name);
}

Prediction MetricActionModel::predict_transformed(const Eigen::VectorXd& phi) const {
    Prediction p;
    p.mu = phi.dot(theta);
    p.sigma_sq = epsilon * phi.dot(sigma * phi);
    if (p.sigma_sq < 0.0) p.sigma_sq = 0.0;  // clamp rounding noise from the quadratic form
    return p;
}

Prediction MetricActionModel::predict(const RawFeatures& raw) const {
    const std::vector<double> phi_vec = apply_transform(transform, raw);
    Eigen::VectorXd phi = Eigen::Map<const Eigen::VectorXd>(
        phi_vec.data(), static_cast<Eigen::Index>(phi_vec.size()));
    if (phi.size() != theta.size()) {
        throw std::invalid_argument("predict: feature dimension does not match model");
    }
    return predict_transformed(phi);
}

ModelBundle::ModelBundle(int metric_count, int action_count)
    : metric_count_(metric_count), action_count_(action_count) {
    cells_.resize(static_cast<std::size_t>(metric_count) * static_cast<std::size_t>(action_count));
    for (int j = 0; j < metric_count; ++j) {
        for (int k = 0; k < action_count; ++k) {
            auto& c = cell(j, k);
            c.metric_index = j;
            c.action_index = k;
        }
    }
}

const MetricActionModel& ModelBundle::cell(int j, int k) const {
    if (j < 0 || j >= metric_count_ || k < 0 || k >= action_count_) {
        throw std::out_of_range("bundle cell out of range");
    }
    return cells_[static_cast<std::size_t>(j) * static_cast<std::size_t>(action_count_) +
                  static_cast<std::size_t>(k)];
}

MetricActionModel& ModelBundle::cell(int j, int k) {
    return const_cast<MetricActionModel&>(static_cast<const ModelBundle&>(*this).cell(j, k));
}

bool ModelBundle::action_warm(int action_index, const std::vector<int>& metric_indices) const {
    for (int j : metric_indices) {
        if (!cell(j, action_index).warm()) return false;
    }
    return true;
}

bool ModelBundle::action_fitted(int action_index, const std::vector<int>& metric_indices) const {
    for (int j : metric_indices) {
        if (cell(j, action_index).state != CellState::Fitted) return false;
    }
    return true;
}

void ModelBundle::enable_exploration(int action_index, double default_lambda) {
    for (int j = 0; j < metric_count_; ++j) {
        auto& c = cell(j, action_index);
        if (c.state != CellState::Cold) continue;
        const Eigen::Index d = c.theta.size();
        if (d == 0) continue;  // no transform dimension known yet
        c.state = CellState::Prior;
        if (c.lambda <= 0.0) c.lambda = default_lambda;
    }
}

ModelBundle train_bundle(const std::map<CellKey, CellDataset>& datasets, int metric_count,
                         int action_count, const TrainConfig& config) {
    ModelBundle bundle(metric_count, action_count);
    const std::vector<double> grid =
        config.lambda_grid.empty() ? default_lambda_grid() : config.lambda_grid;

    for (const auto& [key, data] : datasets) {
        const auto [j, k] = key;
        auto& cell = bundle.cell(j, k);
        const std::size_t n = static_cast<std::size_t>(data.x.rows());
        const double lambda = select_lambda_gcv(data.x, data.y, grid);
        const RidgeFit fit = fit_ridge(data.x, data.y, lambda);
        cell.theta = fit.theta;
        cell.sigma = fit.sigma;
        cell.lambda = lambda;
        cell.epsilon = config.epsilon;
        cell.transform = data.transform;
        cell.row_count = n;
        cell.state = n >= config.cold_row_floor ? CellState::Fitted : CellState::Cold;
    }
    return bundle;
}

double normalized_mse(std::span<const double> predictions, std::span<const double> ground_truth) {
    if (predictions.size() != ground_truth.size() || predictions.empty()) {
        throw std::invalid_argument("normalized_mse: length mismatch or empty input");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double r = predictions[i] - ground_truth[i];
        num += r * r;
        den += ground_truth[i] * ground_truth[i];
    }
    if (den == 0.0) throw std::invalid_argument("normalized_mse: all-zero ground truth");
    return num / den;
}

// --- JSON persistence -------------------------------------------------------

namespace {

std::string double_to_hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double hex_to_double(const std::string& s) {
    return std::strtod(s.c_str(), nullptr);
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(double_to_hex(v[i]));
    return arr;
}

Eigen::VectorXd vector_from_json(const ordered_json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = hex_to_double(arr[i].get<std::string>());
    }
    return v;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(double_to_hex(m(r, c)));
    }
    return arr;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& arr, Eigen::Index dim) {
    if (static_cast<Eigen::Index>(arr.size()) != dim * dim) {
        throw std::invalid_argument("bundle json: covariance size mismatch");
    }
    Eigen::MatrixXd m(dim, dim);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = hex_to_double(arr[i++].get<std::string>());
    }
    return m;
}

const char* step_kind_name(TransformStepKind k) {
    switch (k) {
        case TransformStepKind::Passthrough: return "passthrough";
        case TransformStepKind::Log1p: return "log1p";
        case TransformStepKind::OneHot: return "one_hot";
        case TransformStepKind::Standardize: return "standardize";
        case TransformStepKind::HistoryWindowSum: return "history_window_sum";
    }
    return "passthrough";
}

TransformStepKind step_kind_from_name(const std::string& s) {
    if (s == "passthrough") return TransformStepKind::Passthrough;
    if (s == "log1p") return TransformStepKind::Log1p;
    if (s == "one_hot") return TransformStepKind::OneHot;
    if (s == "standardize") return TransformStepKind::Standardize;
    if (s == "history_window_sum") return TransformStepKind::HistoryWindowSum;
    throw std::invalid_argument("unknown transform step: " + s);
}

ordered_json transform_to_json(const FeatureTransformSpec& spec) {
    ordered_json steps = ordered_json::array();
    for (const auto& s : spec.steps) {
        ordered_json step;
        step["kind"] = step_kind_name(s.kind);
        switch (s.kind) {
            case TransformStepKind::Passthrough:
            case TransformStepKind::Log1p:
                step["column"] = s.column;
                break;
            case TransformStepKind::OneHot:
                step["column"] = s.column;
                step["cardinality"] = s.cardinality;
                break;
            case TransformStepKind::Standardize:
                step["column"] = s.column;
                step["mean"] = double_to_hex(s.mean);
                step["std"] = double_to_hex(s.std_dev);
                break;
            case TransformStepKind::HistoryWindowSum:
                step["action"] = s.action_index;
                step["window_days"] = s.window_days;
                break;
        }
        steps.push_back(std::move(step));
    }
    return steps;
}

FeatureTransformSpec transform_from_json(const ordered_json& steps) {
    FeatureTransformSpec spec;
    for (const auto& item : steps) {
        TransformStep s;
        s.kind = step_kind_from_name(item.at("kind").get<std::string>());
        switch (s.kind) {
            case TransformStepKind::Passthrough:
            case TransformStepKind::Log1p:
                s.column = item.at("column").get<std::string>();
                break;
            case TransformStepKind::OneHot:
                s.column = item.at("column").get<std::string>();
                s.cardinality = item.at("cardinality").get<int>();
                break;
            case TransformStepKind::Standardize:
                s.column = item.at("column").get<std::string>();
                s.mean = hex_to_double(item.at("mean").get<std::string>());
                s.std_dev = hex_to_double(item.at("std").get<std::string>());
                break;
            case TransformStepKind::HistoryWindowSum:
                s.action_index = item.at("action").get<int>();
                s.window_days = item.at("window_days").get<int>();
                break;
        }
        spec.steps.push_back(std::move(s));
    }
    return spec;
}

}  // namespace

std::string bundle_to_json(const ModelBundle& bundle, const MetricCatalog& catalog) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["snapshot_day"] = bundle.snapshot_day();
    doc["metric_count"] = bundle.metric_count();
    doc["action_count"] = bundle.action_count();
    ordered_json metric_names = ordered_json::array();
    for (const auto& m : catalog.metrics) metric_names.push_back(m.name);
    ordered_json action_names = ordered_json::array();
    for (const auto& a : catalog.actions) action_names.push_back(a.name);
    doc["metrics"] = metric_names;
    doc["actions"] = action_names;

    ordered_json cells = ordered_json::array();
    for (int j = 0; j < bundle.metric_count(); ++j) {
        for (int k = 0; k < bundle.action_count(); ++k) {
            const auto& c = bundle.cell(j, k);
            ordered_json cj;
            cj["metric"] = j;
            cj["action"] = k;
            cj["state"] = cell_state_name(c.state);
            cj["rows"] = c.row_count;
            cj["lambda"] = double_to_hex(c.lambda);
            cj["epsilon"] = double_to_hex(c.epsilon);
            cj["theta"] = vector_to_json(c.theta);
            cj["sigma"] = matrix_to_json(c.sigma);
            cj["transform"] = transform_to_json(c.transform);
            cells.push_back(std::move(cj));
        }
    }
    doc["cells"] = std::move(cells);
    return doc.dump(2);
}

ModelBundle bundle_from_json(const std::string& text) {
    const ordered_json doc = ordered_json::parse(text);
    if (doc.at("schema_version").get<int>() != 1) {
        throw std::invalid_argument("bundle json: unsupported schema version");
    }
    ModelBundle bundle(doc.at("metric_count").get<int>(), doc.at("action_count").get<int>());
    bundle.set_snapshot_day(doc.at("snapshot_day").get<int>());
    for (const auto& cj : doc.at("cells")) {
        auto& c = bundle.cell(cj.at("metric").get<int>(), cj.at("action").get<int>());
        c.state = cell_state_from_name(cj.at("state").get<std::string>());
        c.row_count = cj.at("rows").get<std::size_t>();
        c.lambda = hex_to_double(cj.at("lambda").get<std::string>());
        c.epsilon = hex_to_double(cj.at("epsilon").get<std::string>());
        c.theta = vector_from_json(cj.at("theta"));
        c.sigma = matrix_from_json(cj.at("sigma"), c.theta.size());
        c.transform = transform_from_json(cj.at("transform"));
    }
    return bundle;
}

}  // namespace pro
