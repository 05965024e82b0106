#include "pro/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pro/rng.hpp"

namespace pro {

using nlohmann::ordered_json;

namespace {

constexpr int kRingDays = 16;
constexpr int kHistoryWindowDays = 14;

// World metric kinds the simulator knows how to produce, keyed by name.
enum class MetricComputer {
    WeightedRequests,   // "weighted_scraping_requests"
    RequestCount,       // "automated_requests"
    DaysActive,         // "days_active"
    DaysActiveMobile,   // "days_active_mobile" (device slot 1)
    FeedbackEvents,     // "feedback_events"
    SmsDollars,         // "sms_dollars": charged on the application day
};

MetricComputer metric_computer_for(const std::string& name) {
    if (name == "weighted_scraping_requests") return MetricComputer::WeightedRequests;
    if (name == "automated_requests") return MetricComputer::RequestCount;
    if (name == "days_active") return MetricComputer::DaysActive;
    if (name == "days_active_mobile") return MetricComputer::DaysActiveMobile;
    if (name == "feedback_events") return MetricComputer::FeedbackEvents;
    if (name == "sms_dollars") return MetricComputer::SmsDollars;
    throw std::invalid_argument("simulator cannot produce metric: " + name);
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

int SimScenario::archetype_index(const std::string& name) const {
    for (std::size_t i = 0; i < archetypes.size(); ++i) {
        if (archetypes[i].name == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("unknown archetype: " + name);
}

void SimScenario::validate() const {
    catalog.validate();
    horizon.validate();
    if (days < 1) throw std::invalid_argument("scenario: days must be >= 1");
    if (archetypes.empty()) throw std::invalid_argument("scenario: no archetypes");
    if (populations.size() != archetypes.size()) {
        throw std::invalid_argument("scenario: populations must match archetypes");
    }
    if (effects.size() != archetypes.size()) {
        throw std::invalid_argument("scenario: effects table must cover every archetype");
    }
    for (const auto& m : catalog.metrics) metric_computer_for(m.name);  // names must be producible
    for (const auto& row : effects) {
        if (row.size() != static_cast<std::size_t>(catalog.action_count())) {
            throw std::invalid_argument("scenario: effects table must cover every action");
        }
        const auto& a0 = row[static_cast<std::size_t>(kNoActionIndex)];
        if (a0.compliance_prob != 1.0 || a0.abuse_multiplier != 1.0 ||
            a0.activity_multiplier != 1.0 || a0.feedback_delta != 0.0 ||
            a0.duration_days != 0 || a0.dollar_cost != 0.0) {
            throw std::invalid_argument("scenario: the no-action effect row must be the identity");
        }
    }
    for (const auto& a : archetypes) {
        if (a.activity_prob < 0.0 || a.activity_prob > 1.0 || a.feedback_prob < 0.0 ||
            a.feedback_prob > 1.0 || a.base_request_rate < 0.0) {
            throw std::invalid_argument("scenario: archetype probabilities/rates out of range");
        }
    }
    if (plan.window_days < 1) throw std::invalid_argument("scenario: measurement window must be >= 1 day");
    if (plan.warmup_days + plan.window_days > days) {
        throw std::invalid_argument("scenario: warmup + window exceed run length");
    }
    if (!(plan.alpha > 0.0 && plan.alpha < 1.0)) {
        throw std::invalid_argument("scenario: alpha must be in (0, 1)");
    }
}

FeatureTransformSpec default_transform_template(int action_count) {
    FeatureTransformSpec spec;
    auto add = [&spec](TransformStepKind kind, const std::string& column) {
        TransformStep s;
        s.kind = kind;
        s.column = column;
        spec.steps.push_back(std::move(s));
    };
    add(TransformStepKind::Passthrough, "bias");
    add(TransformStepKind::Log1p, "account_age_days");
    add(TransformStepKind::Passthrough, kScoreC1);
    add(TransformStepKind::Passthrough, kScoreC2);
    add(TransformStepKind::Passthrough, kAbuseScore);
    add(TransformStepKind::Log1p, "requests_prev_day");
    add(TransformStepKind::Log1p, "requests_prev_7d");
    add(TransformStepKind::Log1p, "sessions_prev_day");
    {
        TransformStep s;
        s.kind = TransformStepKind::Standardize;
        s.column = "days_active_prev_7d";
        spec.steps.push_back(std::move(s));
    }
    add(TransformStepKind::Passthrough, "feedback_events_prev_14d");
    add(TransformStepKind::Log1p, kDaysSinceRecovery);
    {
        TransformStep s;
        s.kind = TransformStepKind::OneHot;
        s.column = "device_type";
        s.cardinality = 4;
        spec.steps.push_back(std::move(s));
    }
    for (int k = 1; k < action_count; ++k) {
        TransformStep s;
        s.kind = TransformStepKind::HistoryWindowSum;
        s.action_index = k;
        s.window_days = kHistoryWindowDays;
        spec.steps.push_back(std::move(s));
    }
    return spec;
}

// --- World -------------------------------------------------------------

struct World::EntityState {
    std::uint64_t id = 0;
    int archetype = 0;
    int arm = 0;
    bool enrolled = false;
    double init_age_days = 0.0;
    int device = 0;
    int last_recovery_day = 0;  // may be negative (before the run)

    int effect_action = -1;
    int effect_days_left = 0;

    // Day-indexed rings of recent behavior, read by the feature schema.
    std::array<float, kRingDays> requests{};
    std::array<std::uint8_t, kRingDays> active{};
    std::array<std::uint8_t, kRingDays> feedback{};
    std::array<float, kRingDays> sessions{};

    std::vector<std::pair<int, int>> action_events;  // (day, action), pruned to 14d

    // Today's transient values.
    double score_c1 = 0.0, score_c2 = 0.0, score_abuse = 0.0;
    double dollars_today = 0.0;

    struct Pending {
        ObservationRecord record;
        int days_filled = 0;
    };
    std::vector<Pending> pending;
};

// Everything one simulated day produces for one entity.
struct World::DayDraw {
    bool active = false;
    std::int64_t request_count = 0;
    double weighted_requests = 0.0;
    bool filed_report = false;
    std::int64_t session_count = 0;
    std::vector<double> metric_values;
};

World::World(SimScenario scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)), seed_(seed) {
    scenario_.validate();

    std::size_t total = 0;
    for (std::size_t c : scenario_.populations) total += c;
    entities_.reserve(total);

    const std::uint64_t arm_salt = mix64(seed_ ^ 0x41524D53ULL);
    std::size_t global_index = 0;
    for (std::size_t a = 0; a < scenario_.archetypes.size(); ++a) {
        const auto& arch = scenario_.archetypes[a];
        for (std::size_t i = 0; i < scenario_.populations[a]; ++i, ++global_index) {
            EntityState e;
            e.id = mix64(static_cast<std::uint64_t>(global_index) + 1);
            e.archetype = static_cast<int>(a);
            e.arm = static_cast<int>(hash_combine(arm_salt, e.id) & 1ULL);

            Substream init = Substream::keyed(seed_, e.id, -1, "init");
            e.init_age_days = arch.account_age_min_days +
                              init.next_unit() *
                                  (arch.account_age_max_days - arch.account_age_min_days);
            const double du = init.next_unit();
            double acc = 0.0;
            e.device = 3;
            for (int d = 0; d < 4; ++d) {
                acc += arch.device_probs[static_cast<std::size_t>(d)];
                if (du < acc) {
                    e.device = d;
                    break;
                }
            }
            e.last_recovery_day =
                -static_cast<int>(init.next_unit() * arch.recovery_lookback_days);

            entity_lookup_[e.id] = entities_.size();
            entities_.push_back(std::move(e));
        }
    }

    daily_totals_.assign(static_cast<std::size_t>(scenario_.days),
                         {std::vector<double>(scenario_.catalog.metrics.size(), 0.0),
                          std::vector<double>(scenario_.catalog.metrics.size(), 0.0)});
    daily_cf_totals_ = daily_totals_;

    auto resolve_actions = [this](const std::vector<std::string>& names) {
        std::vector<int> out;
        if (names.empty()) {
            for (int k = 0; k < scenario_.catalog.action_count(); ++k) out.push_back(k);
            return out;
        }
        for (const auto& n : names) out.push_back(scenario_.catalog.action_index(n));
        std::sort(out.begin(), out.end());
        if (out.empty() || out.front() != kNoActionIndex) {
            out.insert(out.begin(), kNoActionIndex);
        }
        return out;
    };
    allowed_actions_[0] = resolve_actions(scenario_.plan.control_actions);
    allowed_actions_[1] = resolve_actions(scenario_.plan.test_actions);
}

World::~World() = default;

std::size_t World::entity_count() const { return entities_.size(); }

int World::arm_of(std::uint64_t entity_value) const {
    return entities_[entity_lookup_.at(entity_value)].arm;
}

bool World::enrolled(std::uint64_t entity_value) const {
    return entities_[entity_lookup_.at(entity_value)].enrolled;
}

std::size_t World::enrolled_count(int arm) const {
    std::size_t n = 0;
    for (const auto& e : entities_) {
        if (e.arm == arm && e.enrolled) ++n;
    }
    return n;
}

const ActionEffect& World::effect(int archetype, int action) const {
    return scenario_.effects.at(static_cast<std::size_t>(archetype))
        .at(static_cast<std::size_t>(action));
}

void World::apply_event(const SimEvent& event) {
    const auto& catalog = scenario_.catalog;
    switch (event.kind) {
        case SimEventKind::LaunchAction: {
            const int k = catalog.action_index(event.action);
            auto add_to = [this, k](int arm) {
                auto& list = allowed_actions_[static_cast<std::size_t>(arm)];
                if (std::find(list.begin(), list.end(), k) == list.end()) {
                    list.push_back(k);
                    std::sort(list.begin(), list.end());
                }
            };
            if (event.arm == ArmScope::Both || event.arm == ArmScope::Control) add_to(0);
            if (event.arm == ArmScope::Both || event.arm == ArmScope::Test) add_to(1);
            break;
        }
        case SimEventKind::InjectBug: {
            const int k = catalog.action_index(event.action);
            for (auto& row : scenario_.effects) {
                auto& cell = row[static_cast<std::size_t>(k)];
                cell.compliance_prob = 0.0;
                cell.activity_multiplier = 0.02;
                cell.abuse_multiplier = 0.02;
                cell.feedback_delta = std::max(cell.feedback_delta, 0.05);
                cell.duration_days = std::max(cell.duration_days, 3);
            }
            break;
        }
        case SimEventKind::AdversaryAdapts: {
            const int k = catalog.action_index(event.action);
            const int a = scenario_.archetype_index(event.archetype);
            auto& cell =
                scenario_.effects[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
            cell.abuse_multiplier = event.abuse_multiplier;
            cell.activity_multiplier = 1.0;
            cell.compliance_prob = 0.0;  // ignores the challenge rather than clearing it
            break;
        }
        case SimEventKind::AddCostMetric:
        case SimEventKind::ChangeBudget: {
            const int j = catalog.metric_index(event.metric);
            if (catalog.metric(j).kind != MetricKind::Cost) {
                throw std::invalid_argument("budget event must reference a Cost metric: " +
                                            event.metric);
            }
            break;  // weights/budgets live in the harness
        }
    }
}

RawFeatures World::features_for(const EntityState& e, int day) const {
    RawFeatures f;
    auto ring = [day](const auto& arr, int days_back) -> double {
        const int d = day - days_back;
        if (d < 0) return 0.0;
        return static_cast<double>(arr[static_cast<std::size_t>(d % kRingDays)]);
    };
    double req_7d = 0.0, active_7d = 0.0, feedback_14d = 0.0;
    for (int b = 1; b <= 7; ++b) {
        req_7d += ring(e.requests, b);
        active_7d += ring(e.active, b);
    }
    for (int b = 1; b <= 14; ++b) feedback_14d += ring(e.feedback, b);

    f.scalars["bias"] = 1.0;
    f.scalars["account_age_days"] = e.init_age_days + day;
    f.scalars[kScoreC1] = e.score_c1;
    f.scalars[kScoreC2] = e.score_c2;
    f.scalars[kAbuseScore] = e.score_abuse;
    f.scalars["requests_prev_day"] = ring(e.requests, 1);
    f.scalars["requests_prev_7d"] = req_7d;
    f.scalars["sessions_prev_day"] = ring(e.sessions, 1);
    f.scalars["days_active_prev_7d"] = active_7d;
    f.scalars["feedback_events_prev_14d"] = feedback_14d;
    f.scalars[kDaysSinceRecovery] = static_cast<double>(day - e.last_recovery_day);
    f.scalars["device_type"] = static_cast<double>(e.device);
    for (const auto& [ev_day, action] : e.action_events) {
        const int ago = day - ev_day;
        if (ago >= 1 && ago <= kHistoryWindowDays) {
            f.action_history.push_back(ActionEvent{action, ago});
        }
    }
    return f;
}

World::DayDraw World::simulate_day(const EntityState& e, int day, bool counterfactual) const {
    const auto& arch = scenario_.archetypes[static_cast<std::size_t>(e.archetype)];
    ActionEffect row = ActionEffect::identity();
    if (!counterfactual && e.effect_days_left > 0 && e.effect_action >= 0) {
        row = effect(e.archetype, e.effect_action);
    }

    DayDraw draw;
    Substream activity_stream = Substream::keyed(seed_, e.id, day, "activity");
    draw.active = activity_stream.next_unit() < arch.activity_prob * row.activity_multiplier;

    if (draw.active) {
        const double rate = arch.base_request_rate * row.abuse_multiplier;
        if (arch.deterministic_requests) {
            draw.request_count = static_cast<std::int64_t>(std::llround(rate));
        } else {
            Substream req_stream = Substream::keyed(seed_, e.id, day, "requests");
            draw.request_count = req_stream.next_poisson(rate);
        }
        Substream session_stream = Substream::keyed(seed_, e.id, day, "sessions");
        draw.session_count = 1 + session_stream.next_poisson(arch.sessions_mean);
    }

    if (draw.request_count > 0) {
        if (arch.request_weight_min == arch.request_weight_max) {
            draw.weighted_requests =
                static_cast<double>(draw.request_count) * arch.request_weight_min;
        } else {
            Substream weight_stream = Substream::keyed(seed_, e.id, day, "reqweight");
            const std::uint64_t span = static_cast<std::uint64_t>(
                arch.request_weight_max - arch.request_weight_min + 1);
            for (std::int64_t i = 0; i < draw.request_count; ++i) {
                draw.weighted_requests += static_cast<double>(
                    arch.request_weight_min + static_cast<int>(weight_stream.next_below(span)));
            }
        }
    }

    Substream feedback_stream = Substream::keyed(seed_, e.id, day, "feedback");
    draw.filed_report =
        feedback_stream.next_unit() < clamp01(arch.feedback_prob + row.feedback_delta);

    draw.metric_values.assign(scenario_.catalog.metrics.size(), 0.0);
    for (std::size_t j = 0; j < scenario_.catalog.metrics.size(); ++j) {
        switch (metric_computer_for(scenario_.catalog.metrics[j].name)) {
            case MetricComputer::WeightedRequests:
                draw.metric_values[j] = draw.weighted_requests;
                break;
            case MetricComputer::RequestCount:
                draw.metric_values[j] = static_cast<double>(draw.request_count);
                break;
            case MetricComputer::DaysActive:
                draw.metric_values[j] = draw.active ? 1.0 : 0.0;
                break;
            case MetricComputer::DaysActiveMobile:
                draw.metric_values[j] = (draw.active && e.device == 1) ? 1.0 : 0.0;
                break;
            case MetricComputer::FeedbackEvents:
                draw.metric_values[j] = draw.filed_report ? 1.0 : 0.0;
                break;
            case MetricComputer::SmsDollars:
                draw.metric_values[j] = counterfactual ? 0.0 : e.dollars_today;
                break;
        }
    }
    return draw;
}

void World::apply_action(EntityState& e, int action, int day) {
    if (action == kNoActionIndex) return;
    const ActionEffect& row = effect(e.archetype, action);
    e.dollars_today += row.dollar_cost;
    e.action_events.emplace_back(day, action);
    while (!e.action_events.empty() &&
           day - e.action_events.front().first > kHistoryWindowDays) {
        e.action_events.erase(e.action_events.begin());
    }

    Substream comply_stream = Substream::keyed(seed_, e.id, day, "comply");
    const bool complied = comply_stream.next_unit() < row.compliance_prob;
    if (!complied && row.duration_days > 0) {
        e.effect_action = action;
        e.effect_days_left = row.duration_days;
    }
}

DayResult World::step_day(const std::array<ArmPolicy, 2>& policies) {
    const int day = day_;
    if (day >= scenario_.days) throw std::runtime_error("step_day: scenario exhausted");

    DayResult result;
    result.day = day;
    cf_today_.assign(entities_.size(), {});
    cf_day_ = day;

    const std::size_t n_metrics = scenario_.catalog.metrics.size();
    for (std::size_t idx = 0; idx < entities_.size(); ++idx) {
        EntityState& e = entities_[idx];
        e.dollars_today = 0.0;

        const auto& arch = scenario_.archetypes[static_cast<std::size_t>(e.archetype)];
        Substream score_stream = Substream::keyed(seed_, e.id, day, "scores");
        e.score_c1 = clamp01(score_stream.next_normal(arch.score_c1_mean, arch.score_c1_sd));
        e.score_c2 = clamp01(score_stream.next_normal(arch.score_c2_mean, arch.score_c2_sd));
        e.score_abuse =
            clamp01(score_stream.next_normal(arch.abuse_score_mean, arch.abuse_score_sd));

        // Eligibility gate: a classifier fired and no enforcement is already
        // in flight for this entity.
        const bool gated = std::max(e.score_c1, e.score_c2) >= scenario_.gate_threshold &&
                           e.effect_days_left == 0;
        if (gated) {
            DecisionRequest request;
            request.entity = EntityId{e.id};
            request.day = day;
            request.features = features_for(e, day);

            const Decision decision = policies[static_cast<std::size_t>(e.arm)].decide(request);
            apply_action(e, decision.chosen_action, day);
            e.enrolled = true;

            EntityState::Pending pending;
            pending.record.entity = request.entity;
            pending.record.day = day;
            pending.record.features = request.features;
            pending.record.action_index = decision.chosen_action;
            pending.record.horizon_values.assign(n_metrics, 0.0);
            pending.record.source = decision.mode == DecisionMode::BaselineFallback
                                        ? RecordSource::Baseline
                                        : RecordSource::Pro;
            e.pending.push_back(std::move(pending));

            result.decisions.push_back(DecisionEvent{e.arm, std::move(request), decision});
        }

        const DayDraw draw = simulate_day(e, day, false);
        cf_today_[idx] = simulate_day(e, day, true).metric_values;

        if (e.enrolled) {
            auto& totals =
                daily_totals_[static_cast<std::size_t>(day)][static_cast<std::size_t>(e.arm)];
            auto& cf_totals =
                daily_cf_totals_[static_cast<std::size_t>(day)][static_cast<std::size_t>(e.arm)];
            for (std::size_t j = 0; j < n_metrics; ++j) {
                totals[j] += draw.metric_values[j];
                cf_totals[j] += cf_today_[idx][j];
            }
            for (auto& win : windows_) {
                if (!win.range.contains(day)) continue;
                auto it = win.lookup.find(e.id);
                if (it == win.lookup.end()) {
                    win.lookup[e.id] = win.rows.size();
                    win.rows.push_back(
                        WindowRow{e.id, e.arm, std::vector<double>(n_metrics, 0.0)});
                    it = win.lookup.find(e.id);
                }
                auto& sums = win.rows[it->second].sums;
                for (std::size_t j = 0; j < n_metrics; ++j) sums[j] += draw.metric_values[j];
            }
            if (scenario_.emit_metric_samples) {
                result.metric_samples.push_back(
                    MetricSample{EntityId{e.id}, day, draw.metric_values});
            }
        }

        // Extend pending horizons with today's values; emit completed records.
        for (auto it = e.pending.begin(); it != e.pending.end();) {
            for (std::size_t j = 0; j < n_metrics; ++j) {
                it->record.horizon_values[j] += draw.metric_values[j];
            }
            it->days_filled += 1;
            if (it->days_filled >= scenario_.horizon.horizon_days) {
                result.completed.push_back(std::move(it->record));
                it = e.pending.erase(it);
            } else {
                ++it;
            }
        }

        // End of day: tick down any active effect and write today's rings.
        if (e.effect_days_left > 0 && --e.effect_days_left == 0) e.effect_action = -1;
        const std::size_t slot = static_cast<std::size_t>(day % kRingDays);
        e.active[slot] = draw.active ? 1 : 0;
        e.requests[slot] = static_cast<float>(draw.request_count);
        e.feedback[slot] = draw.filed_report ? 1 : 0;
        e.sessions[slot] = static_cast<float>(draw.session_count);
    }

    day_ += 1;
    return result;
}

void World::set_measurement_windows(std::vector<DayRange> windows) {
    if (day_ != 0) {
        throw std::runtime_error("set_measurement_windows: must be set before stepping");
    }
    windows_.clear();
    for (const auto& w : windows) {
        WindowAccumulator acc;
        acc.range = w;
        windows_.push_back(std::move(acc));
    }
}

std::vector<double> World::counterfactual_baseline(std::uint64_t entity_value, int day) const {
    if (day != cf_day_) {
        throw std::invalid_argument(
            "counterfactual_baseline: only available for the most recently stepped day");
    }
    return cf_today_.at(entity_lookup_.at(entity_value));
}

}  // namespace pro
