#include <nlohmann/json.hpp>

#include "pro/sim.hpp"

namespace pro {

using nlohmann::ordered_json;

namespace {

MetricKind metric_kind_from(const std::string& s) {
    if (s == "abuse") return MetricKind::Abuse;
    if (s == "cost") return MetricKind::Cost;
    throw std::invalid_argument("metric kind must be abuse|cost, got " + s);
}

PolicyKind policy_kind_from(const std::string& s) {
    if (s == "rule_a") return PolicyKind::RuleA;
    if (s == "rule_b") return PolicyKind::RuleB;
    if (s == "pro") return PolicyKind::Pro;
    throw std::invalid_argument("policy must be rule_a|rule_b|pro, got " + s);
}

const char* policy_kind_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::RuleA: return "rule_a";
        case PolicyKind::RuleB: return "rule_b";
        case PolicyKind::Pro: return "pro";
    }
    return "pro";
}

SimEventKind event_kind_from(const std::string& s) {
    if (s == "launch_action") return SimEventKind::LaunchAction;
    if (s == "inject_bug") return SimEventKind::InjectBug;
    if (s == "adversary_adapts") return SimEventKind::AdversaryAdapts;
    if (s == "add_cost_metric") return SimEventKind::AddCostMetric;
    if (s == "change_budget") return SimEventKind::ChangeBudget;
    throw std::invalid_argument("unknown event kind: " + s);
}

const char* event_kind_name(SimEventKind k) {
    switch (k) {
        case SimEventKind::LaunchAction: return "launch_action";
        case SimEventKind::InjectBug: return "inject_bug";
        case SimEventKind::AdversaryAdapts: return "adversary_adapts";
        case SimEventKind::AddCostMetric: return "add_cost_metric";
        case SimEventKind::ChangeBudget: return "change_budget";
    }
    return "launch_action";
}

ArmScope arm_scope_from(const std::string& s) {
    if (s == "both") return ArmScope::Both;
    if (s == "control") return ArmScope::Control;
    if (s == "test") return ArmScope::Test;
    throw std::invalid_argument("arm scope must be both|control|test, got " + s);
}

const char* arm_scope_name(ArmScope s) {
    switch (s) {
        case ArmScope::Both: return "both";
        case ArmScope::Control: return "control";
        case ArmScope::Test: return "test";
    }
    return "both";
}

Archetype archetype_from(const ordered_json& a) {
    Archetype out;
    out.name = a.at("name").get<std::string>();
    out.base_request_rate = a.value("base_request_rate", 0.0);
    out.deterministic_requests = a.value("deterministic_requests", false);
    out.request_weight_min = a.value("request_weight_min", 1);
    out.request_weight_max = a.value("request_weight_max", 1);
    out.activity_prob = a.value("activity_prob", 0.5);
    out.feedback_prob = a.value("feedback_prob", 0.0);
    out.score_c1_mean = a.value("score_c1_mean", 0.1);
    out.score_c1_sd = a.value("score_c1_sd", 0.1);
    out.score_c2_mean = a.value("score_c2_mean", 0.1);
    out.score_c2_sd = a.value("score_c2_sd", 0.1);
    out.abuse_score_mean = a.value("abuse_score_mean", 0.1);
    out.abuse_score_sd = a.value("abuse_score_sd", 0.1);
    out.account_age_min_days = a.value("account_age_min_days", 30.0);
    out.account_age_max_days = a.value("account_age_max_days", 2000.0);
    if (a.contains("device_probs")) {
        const auto probs = a.at("device_probs").get<std::vector<double>>();
        if (probs.size() != 4) throw std::invalid_argument("device_probs must have 4 entries");
        for (std::size_t i = 0; i < 4; ++i) out.device_probs[i] = probs[i];
    }
    out.sessions_mean = a.value("sessions_mean", 1.0);
    out.recovery_lookback_days = a.value("recovery_lookback_days", 365.0);
    return out;
}

ActionEffect effect_from(const ordered_json& e) {
    ActionEffect out;
    out.compliance_prob = e.value("compliance", 1.0);
    out.abuse_multiplier = e.value("abuse_multiplier", 1.0);
    out.activity_multiplier = e.value("activity_multiplier", 1.0);
    out.feedback_delta = e.value("feedback_delta", 0.0);
    out.duration_days = e.value("duration_days", 0);
    out.dollar_cost = e.value("dollar_cost", 0.0);
    return out;
}

}  // namespace

SimScenario scenario_from_json(const std::string& text) {
    const ordered_json doc = ordered_json::parse(text);
    SimScenario s;
    s.name = doc.at("name").get<std::string>();
    s.days = doc.at("days").get<int>();
    s.gate_threshold = doc.value("gate_threshold", 0.8);
    s.emit_metric_samples = doc.value("emit_metric_samples", false);
    if (doc.contains("horizon")) {
        s.horizon.horizon_days = doc["horizon"].value("days", 1);
        s.horizon.retrain_cadence_days = doc["horizon"].value("retrain_cadence_days", 1);
    }

    int idx = 0;
    for (const auto& m : doc.at("metrics")) {
        MetricSpec spec;
        spec.name = m.at("name").get<std::string>();
        spec.kind = metric_kind_from(m.at("kind").get<std::string>());
        spec.index = idx++;
        spec.unit = m.value("unit", "");
        spec.benign_positive = m.value("benign_positive", false);
        s.catalog.metrics.push_back(std::move(spec));
    }
    int aidx = 0;
    for (const auto& a : doc.at("actions")) {
        s.catalog.actions.push_back(ActionId{aidx++, a.get<std::string>()});
    }
    if (doc.contains("budgets")) {
        for (const auto& b : doc.at("budgets")) {
            BudgetSpec spec;
            spec.metric_index = s.catalog.metric_index(b.at("metric").get<std::string>());
            spec.budget = b.at("budget").get<double>();
            s.catalog.budgets.push_back(spec);
        }
    }
    if (doc.contains("initial_weights")) {
        for (const auto& [name, value] : doc.at("initial_weights").items()) {
            s.catalog.metric_index(name);  // must exist
            s.initial_weights[name] = value.get<double>();
        }
    }

    for (const auto& a : doc.at("archetypes")) s.archetypes.push_back(archetype_from(a));
    for (const auto& a : s.archetypes) {
        s.populations.push_back(doc.at("populations").at(a.name).get<std::size_t>());
    }

    // Effects: optional "default" row set, overridden per archetype.
    const ordered_json& effects = doc.at("effects");
    s.effects.resize(s.archetypes.size());
    for (std::size_t ai = 0; ai < s.archetypes.size(); ++ai) {
        auto& row = s.effects[ai];
        row.assign(static_cast<std::size_t>(s.catalog.action_count()), ActionEffect::identity());
        auto apply_rows = [&](const ordered_json& table) {
            for (const auto& [action_name, cell] : table.items()) {
                const int k = s.catalog.action_index(action_name);
                row[static_cast<std::size_t>(k)] = effect_from(cell);
            }
        };
        if (effects.contains("default")) apply_rows(effects.at("default"));
        if (effects.contains(s.archetypes[ai].name)) apply_rows(effects.at(s.archetypes[ai].name));
    }

    if (doc.contains("events")) {
        for (const auto& e : doc.at("events")) {
            SimEvent ev;
            ev.day = e.at("day").get<int>();
            ev.kind = event_kind_from(e.at("kind").get<std::string>());
            ev.action = e.value("action", "");
            ev.archetype = e.value("archetype", "");
            ev.metric = e.value("metric", "");
            ev.budget = e.value("budget", 0.0);
            ev.initial_weight = e.value("initial_weight", 1.0);
            ev.abuse_multiplier = e.value("abuse_multiplier", 0.95);
            ev.arm = arm_scope_from(e.value("arm", std::string("test")));
            s.events.push_back(std::move(ev));
        }
    }

    const ordered_json& plan = doc.at("experiment");
    s.plan.control_policy = policy_kind_from(plan.at("control_policy").get<std::string>());
    s.plan.test_policy = policy_kind_from(plan.at("test_policy").get<std::string>());
    s.plan.bootstrap_policy =
        policy_kind_from(plan.value("bootstrap_policy", std::string("rule_a")));
    if (s.plan.bootstrap_policy == PolicyKind::Pro) {
        throw std::invalid_argument("bootstrap_policy must be a rule policy");
    }
    s.plan.warmup_days = plan.value("warmup_days", 14);
    s.plan.window_days = plan.value("window_days", 14);
    s.plan.alpha = plan.value("alpha", 0.05);
    if (plan.contains("rule")) {
        const auto& r = plan.at("rule");
        s.plan.rule.s1 = r.value("s1", 0.9);
        s.plan.rule.s2 = r.value("s2", 0.7);
        s.plan.rule.n1_days = r.value("n1_days", 30);
        s.plan.rule.n2_days = r.value("n2_days", 14);
        if (r.contains("disable_action")) {
            s.plan.rule.disable_action = s.catalog.action_index(r.at("disable_action").get<std::string>());
        }
        if (r.contains("recovery_action")) {
            s.plan.rule.recovery_action = s.catalog.action_index(r.at("recovery_action").get<std::string>());
        }
    }
    if (plan.contains("mpc")) {
        const auto& m = plan.at("mpc");
        s.plan.mpc.sample_fraction = m.value("sample_fraction", 0.1);
        s.plan.mpc.forecast_factor = m.value("forecast_factor", 1.0);
        if (m.contains("factors")) s.plan.mpc.factors = m.at("factors").get<std::vector<double>>();
    }
    if (plan.contains("training")) {
        const auto& t = plan.at("training");
        s.plan.training.half_life_days = t.value("half_life_days", 7.0);
        s.plan.training.cold_row_floor = t.value("cold_row_floor", std::size_t{50});
        s.plan.training.epsilon = t.value("epsilon", 0.05);
        s.plan.training.max_rows_per_cell = t.value("max_rows_per_cell", std::size_t{1000000});
    }
    s.plan.control_actions = plan.value("control_actions", std::vector<std::string>{});
    s.plan.test_actions = plan.value("test_actions", std::vector<std::string>{});
    s.plan.initial_active_metrics =
        plan.value("initial_active_metrics", std::vector<std::string>{});

    s.validate();
    return s;
}

std::string scenario_to_json(const SimScenario& s) {
    ordered_json doc;
    doc["name"] = s.name;
    doc["days"] = s.days;
    doc["gate_threshold"] = s.gate_threshold;
    doc["emit_metric_samples"] = s.emit_metric_samples;
    doc["horizon"] = {{"days", s.horizon.horizon_days},
                      {"retrain_cadence_days", s.horizon.retrain_cadence_days}};
    ordered_json metrics = ordered_json::array();
    for (const auto& m : s.catalog.metrics) {
        metrics.push_back({{"name", m.name},
                           {"kind", m.kind == MetricKind::Abuse ? "abuse" : "cost"},
                           {"unit", m.unit},
                           {"benign_positive", m.benign_positive}});
    }
    doc["metrics"] = std::move(metrics);
    ordered_json actions = ordered_json::array();
    for (const auto& a : s.catalog.actions) actions.push_back(a.name);
    doc["actions"] = std::move(actions);
    ordered_json budgets = ordered_json::array();
    for (const auto& b : s.catalog.budgets) {
        budgets.push_back(
            {{"metric", s.catalog.metric(b.metric_index).name}, {"budget", b.budget}});
    }
    doc["budgets"] = std::move(budgets);
    doc["initial_weights"] = s.initial_weights;

    ordered_json archetypes = ordered_json::array();
    ordered_json populations;
    for (std::size_t i = 0; i < s.archetypes.size(); ++i) {
        const auto& a = s.archetypes[i];
        archetypes.push_back({{"name", a.name},
                              {"base_request_rate", a.base_request_rate},
                              {"deterministic_requests", a.deterministic_requests},
                              {"request_weight_min", a.request_weight_min},
                              {"request_weight_max", a.request_weight_max},
                              {"activity_prob", a.activity_prob},
                              {"feedback_prob", a.feedback_prob},
                              {"score_c1_mean", a.score_c1_mean},
                              {"score_c1_sd", a.score_c1_sd},
                              {"score_c2_mean", a.score_c2_mean},
                              {"score_c2_sd", a.score_c2_sd},
                              {"abuse_score_mean", a.abuse_score_mean},
                              {"abuse_score_sd", a.abuse_score_sd},
                              {"account_age_min_days", a.account_age_min_days},
                              {"account_age_max_days", a.account_age_max_days},
                              {"device_probs", a.device_probs},
                              {"sessions_mean", a.sessions_mean},
                              {"recovery_lookback_days", a.recovery_lookback_days}});
        populations[a.name] = s.populations[i];
    }
    doc["archetypes"] = std::move(archetypes);
    doc["populations"] = std::move(populations);

    ordered_json effects;
    for (std::size_t ai = 0; ai < s.archetypes.size(); ++ai) {
        ordered_json row;
        for (int k = 0; k < s.catalog.action_count(); ++k) {
            const auto& e = s.effects[ai][static_cast<std::size_t>(k)];
            row[s.catalog.action(k).name] = {{"compliance", e.compliance_prob},
                                             {"abuse_multiplier", e.abuse_multiplier},
                                             {"activity_multiplier", e.activity_multiplier},
                                             {"feedback_delta", e.feedback_delta},
                                             {"duration_days", e.duration_days},
                                             {"dollar_cost", e.dollar_cost}};
        }
        effects[s.archetypes[ai].name] = std::move(row);
    }
    doc["effects"] = std::move(effects);

    ordered_json events = ordered_json::array();
    for (const auto& e : s.events) {
        events.push_back({{"day", e.day},
                          {"kind", event_kind_name(e.kind)},
                          {"action", e.action},
                          {"archetype", e.archetype},
                          {"metric", e.metric},
                          {"budget", e.budget},
                          {"initial_weight", e.initial_weight},
                          {"abuse_multiplier", e.abuse_multiplier},
                          {"arm", arm_scope_name(e.arm)}});
    }
    doc["events"] = std::move(events);

    ordered_json plan;
    plan["control_policy"] = policy_kind_name(s.plan.control_policy);
    plan["test_policy"] = policy_kind_name(s.plan.test_policy);
    plan["bootstrap_policy"] = policy_kind_name(s.plan.bootstrap_policy);
    plan["warmup_days"] = s.plan.warmup_days;
    plan["window_days"] = s.plan.window_days;
    plan["alpha"] = s.plan.alpha;
    plan["rule"] = {{"s1", s.plan.rule.s1},
                    {"s2", s.plan.rule.s2},
                    {"n1_days", s.plan.rule.n1_days},
                    {"n2_days", s.plan.rule.n2_days}};
    plan["mpc"] = {{"sample_fraction", s.plan.mpc.sample_fraction},
                   {"forecast_factor", s.plan.mpc.forecast_factor},
                   {"factors", s.plan.mpc.factors}};
    plan["training"] = {{"half_life_days", s.plan.training.half_life_days},
                        {"cold_row_floor", s.plan.training.cold_row_floor},
                        {"epsilon", s.plan.training.epsilon},
                        {"max_rows_per_cell", s.plan.training.max_rows_per_cell}};
    plan["control_actions"] = s.plan.control_actions;
    plan["test_actions"] = s.plan.test_actions;
    plan["initial_active_metrics"] = s.plan.initial_active_metrics;
    doc["experiment"] = std::move(plan);

    return doc.dump(2);
}

}  // namespace pro
