#include <doctest.h>

#include <Eigen/Dense>
#include <map>

#include "pro/reward.hpp"
#include "pro/rng.hpp"
#include "pro/sim.hpp"

using namespace pro;

namespace {

MetricActionModel scalar_model(double theta, double sigma, double epsilon) {
    MetricActionModel m;
    m.theta = Eigen::VectorXd::Constant(1, theta);
    m.sigma = Eigen::MatrixXd::Constant(1, 1, sigma);
    m.epsilon = epsilon;
    m.state = CellState::Fitted;
    TransformStep step;
    step.kind = TransformStepKind::Passthrough;
    step.column = "x";
    m.transform.steps = {step};
    return m;
}

MetricCatalog small_catalog() {
    MetricCatalog c;
    c.metrics = {MetricSpec{"abuse", MetricKind::Abuse, 0, "units", false},
                 MetricSpec{"cost", MetricKind::Cost, 1, "units", false}};
    c.actions = {ActionId{0, "no_action"}, ActionId{1, "challenge"}, ActionId{2, "disable"}};
    return c;
}

CellDataset dataset_from(Substream& stream, int n, int d, double noise) {
    CellDataset data;
    data.x.resize(n, d);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) data.x(i, j) = stream.next_normal();
        data.y(i) = data.x(i, 0) + noise * stream.next_normal();
    }
    for (int j = 0; j < d; ++j) {
        TransformStep step;
        step.kind = TransformStepKind::Passthrough;
        step.column = "f" + std::to_string(j);
        data.transform.steps.push_back(step);
    }
    return data;
}

}  // namespace

TEST_CASE("predict reproduces the scalar hand case: mu = 6, sigma^2 = 0.1") {
    const MetricActionModel m = scalar_model(3.0, 0.5, 0.05);
    RawFeatures raw;
    raw.scalars["x"] = 2.0;
    const Prediction p = m.predict(raw);
    CHECK(p.mu == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(p.sigma_sq == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("zero weights predict zero mean for any input") {
    const MetricActionModel m = scalar_model(0.0, 0.5, 0.05);
    Substream stream(3);
    for (int i = 0; i < 50; ++i) {
        RawFeatures raw;
        raw.scalars["x"] = stream.next_normal() * 100.0;
        CHECK(m.predict(raw).mu == 0.0);
    }
}

TEST_CASE("epsilon zero kills the predictive variance") {
    const MetricActionModel m = scalar_model(3.0, 0.5, 0.0);
    RawFeatures raw;
    raw.scalars["x"] = 7.0;
    CHECK(m.predict(raw).sigma_sq == 0.0);
}

TEST_CASE("predictive variance is non-negative over random queries") {
    Substream stream(13);
    CellDataset data = dataset_from(stream, 300, 8, 0.2);
    const RidgeFit fit = fit_ridge(data.x, data.y, 0.5);
    MetricActionModel m;
    m.theta = fit.theta;
    m.sigma = fit.sigma;
    m.epsilon = 0.05;
    m.state = CellState::Fitted;

    for (int i = 0; i < 10000; ++i) {
        Eigen::VectorXd phi(8);
        for (int j = 0; j < 8; ++j) phi(j) = stream.next_normal() * 10.0;
        CHECK(m.predict_transformed(phi).sigma_sq >= 0.0);
    }
}

TEST_CASE("train_bundle fits one model per metric-action pair") {
    Substream stream(31);
    std::map<CellKey, CellDataset> datasets;
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 3; ++k) datasets[{j, k}] = dataset_from(stream, 120, 4, 0.1);
    }
    TrainConfig config;
    const ModelBundle bundle = train_bundle(datasets, 2, 3, config);
    CHECK(bundle.cells().size() == 6);
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 3; ++k) {
            CHECK(bundle.cell(j, k).state == CellState::Fitted);
            CHECK(bundle.cell(j, k).row_count == 120);
        }
    }
}

TEST_CASE("empty datasets leave every cell cold") {
    std::map<CellKey, CellDataset> datasets;
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 3; ++k) {
            CellDataset d;
            d.x.resize(0, 4);
            d.y.resize(0);
            datasets[{j, k}] = std::move(d);
        }
    }
    TrainConfig config;
    const ModelBundle bundle = train_bundle(datasets, 2, 3, config);
    for (const auto& cell : bundle.cells()) {
        CHECK(cell.state == CellState::Cold);
        CHECK(cell.row_count == 0);
        CHECK(cell.theta.norm() == 0.0);
    }
}

TEST_CASE("cells below the row floor are cold until exploration is enabled") {
    Substream stream(7);
    std::map<CellKey, CellDataset> datasets;
    datasets[{0, 0}] = dataset_from(stream, 80, 3, 0.1);
    datasets[{0, 1}] = dataset_from(stream, 10, 3, 0.1);  // under the default floor
    TrainConfig config;
    ModelBundle bundle = train_bundle(datasets, 1, 2, config);
    CHECK(bundle.cell(0, 0).state == CellState::Fitted);
    CHECK(bundle.cell(0, 1).state == CellState::Cold);
    CHECK_FALSE(bundle.action_warm(1, {0}));

    bundle.enable_exploration(1, 1.0);
    CHECK(bundle.cell(0, 1).state == CellState::Prior);
    CHECK(bundle.action_warm(1, {0}));
    CHECK_FALSE(bundle.action_fitted(1, {0}));
}

TEST_CASE("normalized mse basics") {
    const std::vector<double> truth = {1.0, 2.0, 3.0};
    CHECK(normalized_mse(truth, truth) == 0.0);
    const std::vector<double> zeros = {0.0, 0.0, 0.0};
    CHECK(normalized_mse(zeros, truth) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS(normalized_mse(truth, zeros));           // all-zero ground truth
    const std::vector<double> shorter = {1.0};
    CHECK_THROWS(normalized_mse(shorter, truth));
}

TEST_CASE("bundle json round-trip is lossless at full double precision") {
    Substream stream(41);
    std::map<CellKey, CellDataset> datasets;
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 3; ++k) datasets[{j, k}] = dataset_from(stream, 70, 5, 0.3);
    }
    TrainConfig config;
    ModelBundle bundle = train_bundle(datasets, 2, 3, config);
    bundle.set_snapshot_day(17);

    const MetricCatalog catalog = small_catalog();
    const std::string text = bundle_to_json(bundle, catalog);
    const ModelBundle back = bundle_from_json(text);

    CHECK(back.snapshot_day() == 17);
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 3; ++k) {
            const auto& a = bundle.cell(j, k);
            const auto& b = back.cell(j, k);
            CHECK(a.state == b.state);
            CHECK(a.row_count == b.row_count);
            CHECK(a.lambda == b.lambda);    // bit-exact
            CHECK(a.epsilon == b.epsilon);  // bit-exact
            REQUIRE(a.theta.size() == b.theta.size());
            for (Eigen::Index i = 0; i < a.theta.size(); ++i) CHECK(a.theta(i) == b.theta(i));
            for (Eigen::Index r = 0; r < a.sigma.rows(); ++r) {
                for (Eigen::Index c = 0; c < a.sigma.cols(); ++c) {
                    CHECK(a.sigma(r, c) == b.sigma(r, c));
                }
            }
            CHECK(a.transform.steps.size() == b.transform.steps.size());
        }
    }
    // Serialization itself is deterministic.
    CHECK(bundle_to_json(back, catalog) == text);
}
