#include <doctest.h>

#include <limits>

#include "pro/domain.hpp"
#include "pro/rng.hpp"

using namespace pro;

namespace {

MetricSpec abuse_spec() {
    MetricSpec s;
    s.name = "weighted_scraping_requests";
    s.kind = MetricKind::Abuse;
    s.index = 0;
    s.benign_positive = false;
    return s;
}

MetricSpec days_active_spec() {
    MetricSpec s;
    s.name = "days_active";
    s.kind = MetricKind::Cost;
    s.index = 1;
    s.benign_positive = true;
    return s;
}

}  // namespace

TEST_CASE("orient_metric flips benign-positive quantities into loss") {
    const MetricSpec days = days_active_spec();
    CHECK(orient_metric(3.0, days, 3.0) == 0.0);
    CHECK(orient_metric(2.0, days, 3.0) == 1.0);
}

TEST_CASE("orient_metric passes already-oriented abuse metrics through") {
    const MetricSpec abuse = abuse_spec();
    CHECK(orient_metric(100.0, abuse, 0.0) == 100.0);
}

TEST_CASE("orient_metric rejects non-finite inputs") {
    const MetricSpec abuse = abuse_spec();
    CHECK_THROWS(orient_metric(std::numeric_limits<double>::quiet_NaN(), abuse, 0.0));
    CHECK_THROWS(orient_metric(1.0, abuse, std::numeric_limits<double>::infinity()));
}

TEST_CASE("orient_metric is idempotent on oriented abuse values with zero baseline") {
    const MetricSpec abuse = abuse_spec();
    Substream stream(42);
    for (int i = 0; i < 200; ++i) {
        const double v = stream.next_unit() * 1e4;
        const double once = orient_metric(v, abuse, 0.0);
        CHECK(orient_metric(once, abuse, 0.0) == once);
    }
}

TEST_CASE("aggregate_metrics totals and per-account means") {
    std::vector<MetricSample> records = {
        {EntityId{1}, 0, {5.0}},
        {EntityId{2}, 0, {10.0}},
        {EntityId{3}, 0, {15.0}},
    };
    const AggregateResult r = aggregate_metrics(records, DayRange{0, 1}, 1);
    CHECK(r.totals[0] == 30.0);
    CHECK(r.means[0] == 10.0);
    CHECK(r.entity_count == 3);
}

TEST_CASE("aggregate_metrics identity on a single entity-day") {
    std::vector<MetricSample> records = {{EntityId{7}, 3, {42.5}}};
    const AggregateResult r = aggregate_metrics(records, DayRange{0, 10}, 1);
    CHECK(r.totals[0] == 42.5);
    CHECK(r.means[0] == 42.5);
}

TEST_CASE("aggregate_metrics rejects an empty entity set") {
    std::vector<MetricSample> records = {{EntityId{1}, 5, {1.0}}};
    CHECK_THROWS(aggregate_metrics(records, DayRange{0, 2}, 1));  // record outside window
    CHECK_THROWS(aggregate_metrics({}, DayRange{0, 2}, 1));
}

TEST_CASE("aggregate_metrics totals are additive over disjoint entity partitions") {
    Substream stream(7);
    std::vector<MetricSample> all;
    std::vector<MetricSample> part_a, part_b;
    for (std::uint64_t e = 1; e <= 50; ++e) {
        for (int day = 0; day < 5; ++day) {
            MetricSample s{EntityId{e}, day, {stream.next_unit() * 10, stream.next_unit()}};
            all.push_back(s);
            (e % 2 == 0 ? part_a : part_b).push_back(s);
        }
    }
    const DayRange window{1, 4};
    const auto total = aggregate_metrics(all, window, 2);
    const auto a = aggregate_metrics(part_a, window, 2);
    const auto b = aggregate_metrics(part_b, window, 2);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(total.totals[j] == doctest::Approx(a.totals[j] + b.totals[j]).epsilon(1e-12));
    }
    CHECK(total.entity_count == a.entity_count + b.entity_count);
}

TEST_CASE("catalog validation pins budgets to declared cost metrics") {
    MetricCatalog catalog;
    catalog.metrics = {abuse_spec(), days_active_spec()};
    catalog.actions = {ActionId{0, "no_action"}, ActionId{1, "disable"}};

    catalog.budgets = {BudgetSpec{1, 10.0}};
    CHECK_NOTHROW(catalog.validate());

    catalog.budgets = {BudgetSpec{0, 10.0}};  // abuse metric cannot carry a budget
    CHECK_THROWS(catalog.validate());

    catalog.budgets = {BudgetSpec{5, 10.0}};  // unknown metric
    CHECK_THROWS(catalog.validate());
}

TEST_CASE("catalog validation requires the distinguished no-action at index 0") {
    MetricCatalog catalog;
    catalog.metrics = {abuse_spec()};
    catalog.actions = {ActionId{1, "disable"}};
    CHECK_THROWS(catalog.validate());
}
