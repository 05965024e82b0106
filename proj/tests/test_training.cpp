#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pro/rng.hpp"
#include "pro/sim.hpp"
#include "pro/training.hpp"

using namespace pro;

namespace {

ObservationRecord make_record(std::uint64_t entity, int day, int action,
                              std::vector<double> horizon_values) {
    ObservationRecord r;
    r.entity = EntityId{entity};
    r.day = day;
    r.action_index = action;
    r.horizon_values = std::move(horizon_values);
    r.features.scalars["bias"] = 1.0;
    r.features.scalars["x"] = static_cast<double>(entity % 17);
    return r;
}

MetricCatalog two_metric_catalog() {
    MetricCatalog c;
    c.metrics = {MetricSpec{"weighted_scraping_requests", MetricKind::Abuse, 0, "requests", false},
                 MetricSpec{"days_active", MetricKind::Cost, 1, "days", true}};
    c.actions = {ActionId{0, "no_action"}, ActionId{1, "challenge"}, ActionId{2, "disable"}};
    return c;
}

FeatureTransformSpec simple_template() {
    FeatureTransformSpec t;
    TransformStep bias;
    bias.kind = TransformStepKind::Passthrough;
    bias.column = "bias";
    TransformStep x;
    x.kind = TransformStepKind::Passthrough;
    x.column = "x";
    t.steps = {bias, x};
    return t;
}

}  // namespace

TEST_CASE("infinite half-life keeps every record") {
    std::vector<ObservationRecord> records;
    for (int d = 0; d < 50; ++d) records.push_back(make_record(static_cast<std::uint64_t>(d), d, 0, {0, 0}));
    const auto kept =
        decay_sample(records, 100, std::numeric_limits<double>::infinity(), 9);
    CHECK(kept.size() == records.size());
}

TEST_CASE("decay inclusion matches the half-life law at ages 0, h and 3h") {
    const double h = 7.0;
    const int trials = 100000;
    int kept_age0 = 0, kept_age_h = 0, kept_age_3h = 0;
    for (int i = 0; i < trials; ++i) {
        // One record per trial at each age; independent keyed draws.
        const std::uint64_t e = static_cast<std::uint64_t>(i);
        std::vector<ObservationRecord> recs = {make_record(e, 100, 0, {0}),
                                               make_record(e, 93, 0, {0}),
                                               make_record(e, 79, 0, {0})};
        const auto kept = decay_sample(recs, 100, h, 1234);
        for (const auto& r : kept) {
            if (r.day == 100) ++kept_age0;
            if (r.day == 93) ++kept_age_h;
            if (r.day == 79) ++kept_age_3h;
        }
    }
    CHECK(kept_age0 == trials);  // age 0 is always kept
    CHECK(std::fabs(static_cast<double>(kept_age_h) / trials - 0.5) < 0.01);
    CHECK(std::fabs(static_cast<double>(kept_age_3h) / trials - 0.125) < 0.01);
}

TEST_CASE("decay inclusion probability is monotone in record age") {
    const double h = 5.0;
    const int per_age = 20000;
    double prev_rate = 1.1;
    for (int age : {0, 2, 5, 9, 14, 21}) {
        int kept = 0;
        for (int i = 0; i < per_age; ++i) {
            std::vector<ObservationRecord> recs = {
                make_record(static_cast<std::uint64_t>(i) + 1000003ULL * static_cast<std::uint64_t>(age),
                            50 - age, 0, {0})};
            kept += static_cast<int>(decay_sample(recs, 50, h, 77).size());
        }
        const double rate = static_cast<double>(kept) / per_age;
        CHECK(rate <= prev_rate + 0.02);  // allow sampling noise
        prev_rate = rate;
    }
}

TEST_CASE("decay sampling is a pure function of the record set") {
    std::vector<ObservationRecord> records;
    for (int i = 0; i < 500; ++i) {
        records.push_back(make_record(static_cast<std::uint64_t>(i), i % 40, 0, {0}));
    }
    auto shuffled = records;
    std::reverse(shuffled.begin(), shuffled.end());
    auto kept_a = decay_sample(records, 60, 7.0, 5);
    auto kept_b = decay_sample(shuffled, 60, 7.0, 5);
    auto key = [](const ObservationRecord& r) { return std::pair(r.entity.value, r.day); };
    std::set<std::pair<std::uint64_t, int>> set_a, set_b;
    for (const auto& r : kept_a) set_a.insert(key(r));
    for (const auto& r : kept_b) set_b.insert(key(r));
    CHECK(set_a == set_b);
}

TEST_CASE("a record lands in one cell per metric, keyed by its action") {
    const MetricCatalog catalog = two_metric_catalog();
    std::vector<ObservationRecord> records = {make_record(1, 0, 1, {10.0, 0.5})};
    const auto datasets = build_datasets(records, catalog, simple_template(), 1, 1);
    CHECK(datasets.at({0, 1}).x.rows() == 1);
    CHECK(datasets.at({1, 1}).x.rows() == 1);
    CHECK(datasets.at({0, 0}).x.rows() == 0);
    CHECK(datasets.at({0, 2}).x.rows() == 0);
    // Targets carry the smaller-is-better orientation: days_active flips sign.
    CHECK(datasets.at({0, 1}).y(0) == 10.0);
    CHECK(datasets.at({1, 1}).y(0) == -0.5);
}

TEST_CASE("no records means every cell is empty") {
    const MetricCatalog catalog = two_metric_catalog();
    const auto datasets = build_datasets({}, catalog, simple_template(), 5, 1);
    CHECK(datasets.size() == 6);
    for (const auto& [key, data] : datasets) CHECK(data.x.rows() == 0);
}

TEST_CASE("per-cell row counts sum to the record count for every metric") {
    const MetricCatalog catalog = two_metric_catalog();
    Substream stream(3);
    std::vector<ObservationRecord> records;
    for (int i = 0; i < 1000; ++i) {
        records.push_back(make_record(static_cast<std::uint64_t>(i), 3,
                                      static_cast<int>(stream.next_below(3)),
                                      {stream.next_unit(), stream.next_unit()}));
    }
    const auto datasets = build_datasets(records, catalog, simple_template(), 4, 1);
    for (int j = 0; j < 2; ++j) {
        Eigen::Index total = 0;
        for (int k = 0; k < 3; ++k) total += datasets.at({j, k}).x.rows();
        CHECK(total == 1000);
    }
}

TEST_CASE("build_datasets is permutation-invariant") {
    const MetricCatalog catalog = two_metric_catalog();
    Substream stream(19);
    std::vector<ObservationRecord> records;
    for (int i = 0; i < 200; ++i) {
        records.push_back(make_record(static_cast<std::uint64_t>(i), 3,
                                      static_cast<int>(stream.next_below(3)),
                                      {stream.next_unit(), stream.next_unit()}));
    }
    auto reversed = records;
    std::reverse(reversed.begin(), reversed.end());
    const auto a = build_datasets(records, catalog, simple_template(), 4, 1);
    const auto b = build_datasets(reversed, catalog, simple_template(), 4, 1);
    for (const auto& [key, data] : a) {
        // Multisets of (row, target) must agree; compare sorted column sums
        // plus sorted targets as a cheap multiset fingerprint.
        const auto& other = b.at(key);
        REQUIRE(data.x.rows() == other.x.rows());
        std::multiset<double> ya, yb;
        for (Eigen::Index i = 0; i < data.y.size(); ++i) {
            ya.insert(data.y(i) + 1e3 * data.x(i, 1));
            yb.insert(other.y(i) + 1e3 * other.x(i, 1));
        }
        CHECK(ya == yb);
    }
}

TEST_CASE("records with an unelapsed horizon are rejected") {
    const MetricCatalog catalog = two_metric_catalog();
    std::vector<ObservationRecord> records = {make_record(1, 5, 0, {1.0, 0.0})};
    CHECK_THROWS(build_datasets(records, catalog, simple_template(), 5, 1));
    CHECK_NOTHROW(build_datasets(records, catalog, simple_template(), 6, 1));
}

TEST_CASE("records with an unknown action are rejected") {
    const MetricCatalog catalog = two_metric_catalog();
    std::vector<ObservationRecord> records = {make_record(1, 0, 9, {1.0, 0.0})};
    CHECK_THROWS(build_datasets(records, catalog, simple_template(), 2, 1));
}

TEST_CASE("bootstrap_cold_start tags every record as baseline data") {
    std::vector<ObservationRecord> log;
    for (int i = 0; i < 5; ++i) {
        auto r = make_record(static_cast<std::uint64_t>(i), 0, 0, {0.0, 0.0});
        r.source = RecordSource::Pro;
        log.push_back(std::move(r));
    }
    const auto boot = bootstrap_cold_start(log);
    CHECK(boot.empty() == false);
    for (const auto& r : boot) CHECK(r.source == RecordSource::Baseline);
    CHECK(bootstrap_cold_start({}).empty());
}

TEST_CASE("observation jsonl round-trips the full record") {
    ObservationRecord r = make_record(99, 12, 2, {5.0, 1.0});
    r.source = RecordSource::Pro;
    r.features.action_history = {ActionEvent{1, 4}, ActionEvent{2, 9}};
    const std::string line = observation_to_jsonl(r);
    const ObservationRecord back = observation_from_jsonl(line);
    CHECK(back.entity.value == 99);
    CHECK(back.day == 12);
    CHECK(back.action_index == 2);
    CHECK(back.source == RecordSource::Pro);
    CHECK(back.horizon_values == r.horizon_values);
    CHECK(back.features.scalars == r.features.scalars);
    REQUIRE(back.features.action_history.size() == 2);
    CHECK(back.features.action_history[1].days_ago == 9);
}
