#include "pro/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pro/mpc.hpp"
#include "pro/policy.hpp"
#include "pro/reward.hpp"
#include "pro/rng.hpp"
#include "pro/training.hpp"

namespace pro {

using nlohmann::ordered_json;

namespace {

// Mutable per-arm policy state: what the paper treats as "the reward
// function" of one experiment group.
struct ArmState {
    PolicyKind policy = PolicyKind::RuleA;
    std::vector<int> active_metrics;
    WeightVector weights;
    std::vector<std::pair<int, double>> budgets;  // (metric index, per-period budget)
    std::vector<DecisionRequest> prev_day_traffic;
};

BaselineRuleKind rule_kind(PolicyKind kind) {
    return kind == PolicyKind::RuleB ? BaselineRuleKind::RuleB : BaselineRuleKind::RuleA;
}

struct LogSink {
    std::ofstream decisions;
    std::ofstream observations;
    std::ofstream tuning;
    std::ofstream metric_samples;
    bool enabled = false;
};

}  // namespace

ExperimentReport run_experiment(const SimScenario& scenario, std::uint64_t seed,
                                const RunOptions& options) {
    const auto& plan = scenario.plan;
    const auto& catalog = scenario.catalog;
    const int n_metrics = catalog.metric_count();
    const int n_actions = catalog.action_count();

    World world(scenario, seed);

    const DayRange main_window{scenario.days - plan.window_days, scenario.days};
    std::vector<DayRange> windows{main_window};
    for (const auto& w : options.extra_windows) windows.push_back(w);
    world.set_measurement_windows(windows);

    LogSink logs;
    if (!options.out_dir.empty()) {
        std::filesystem::create_directories(options.out_dir);
        logs.decisions.open(options.out_dir + "/decisions.jsonl");
        logs.observations.open(options.out_dir + "/observations.jsonl");
        logs.tuning.open(options.out_dir + "/tuning.jsonl");
        if (scenario.emit_metric_samples) {
            logs.metric_samples.open(options.out_dir + "/metric_samples.jsonl");
        }
        logs.enabled = true;
    }

    // Arm setup. Weights start from the scenario's initial table; metrics
    // outside the arm's active set carry weight zero until activated.
    std::array<ArmState, 2> arms;
    arms[0].policy = plan.control_policy;
    arms[1].policy = plan.test_policy;
    for (auto& arm : arms) {
        arm.weights.w.assign(static_cast<std::size_t>(n_metrics), 0.0);
        std::vector<int> active;
        if (plan.initial_active_metrics.empty()) {
            for (int j = 0; j < n_metrics; ++j) active.push_back(j);
        } else {
            for (const auto& name : plan.initial_active_metrics) {
                active.push_back(catalog.metric_index(name));
            }
            std::sort(active.begin(), active.end());
        }
        arm.active_metrics = active;
        for (int j : active) {
            auto it = scenario.initial_weights.find(catalog.metric(j).name);
            arm.weights.w[static_cast<std::size_t>(j)] =
                it != scenario.initial_weights.end() ? it->second : 1.0;
        }
        for (const auto& b : catalog.budgets) {
            if (std::find(active.begin(), active.end(), b.metric_index) != active.end()) {
                arm.budgets.emplace_back(b.metric_index, b.budget);
            }
        }
    }

    ExperimentReport report;
    report.scenario = scenario.name;
    report.seed = seed;
    report.window = main_window;
    report.alpha = plan.alpha;
    for (int arm = 0; arm < 2; ++arm) {
        report.selection_rates[static_cast<std::size_t>(arm)].assign(
            static_cast<std::size_t>(scenario.days),
            std::vector<double>(static_cast<std::size_t>(n_actions), 0.0));
        report.decision_counts[static_cast<std::size_t>(arm)].assign(
            static_cast<std::size_t>(scenario.days), 0);
    }

    std::vector<ObservationRecord> all_records;
    std::vector<ObservationRecord> eval_buffer;  // completed since last retrain
    std::optional<ModelBundle> bundle;
    const FeatureTransformSpec transform_template = default_transform_template(n_actions);
    const bool any_pro = plan.control_policy == PolicyKind::Pro ||
                         plan.test_policy == PolicyKind::Pro;

    TrainConfig train_config;
    train_config.epsilon = plan.training.epsilon;
    train_config.cold_row_floor = plan.training.cold_row_floor;
    const double prior_lambda = 1.0;  // median of the default GCV grid

    for (int day = 0; day < scenario.days; ++day) {
        // 1) Scheduled events, at the day boundary before any decision.
        for (const auto& event : scenario.events) {
            if (event.day != day) continue;
            world.apply_event(event);
            if (event.kind == SimEventKind::AddCostMetric ||
                event.kind == SimEventKind::ChangeBudget) {
                const int j = catalog.metric_index(event.metric);
                for (int arm = 0; arm < 2; ++arm) {
                    const bool scoped = event.arm == ArmScope::Both ||
                                        (event.arm == ArmScope::Control && arm == 0) ||
                                        (event.arm == ArmScope::Test && arm == 1);
                    if (!scoped) continue;
                    auto& st = arms[static_cast<std::size_t>(arm)];
                    if (event.kind == SimEventKind::AddCostMetric) {
                        if (std::find(st.active_metrics.begin(), st.active_metrics.end(), j) ==
                            st.active_metrics.end()) {
                            st.active_metrics.push_back(j);
                            std::sort(st.active_metrics.begin(), st.active_metrics.end());
                        }
                        st.weights.w[static_cast<std::size_t>(j)] = event.initial_weight;
                    }
                    bool found = false;
                    for (auto& [metric, budget] : st.budgets) {
                        if (metric == j) {
                            budget = event.budget;
                            found = true;
                        }
                    }
                    if (!found) st.budgets.emplace_back(j, event.budget);
                }
            }
        }

        // 2) Retrain boundary: rebuild the bundle from all completed records,
        //    then retune weights from the previous day's traffic.
        const bool retrain_day = any_pro && day >= plan.warmup_days &&
                                 (day - plan.warmup_days) % scenario.horizon.retrain_cadence_days == 0;
        if (retrain_day) {
            if (bundle && !eval_buffer.empty()) {
                NmseRow row;
                row.day = day;
                row.per_metric.assign(static_cast<std::size_t>(n_metrics), -1.0);
                for (int j = 0; j < n_metrics; ++j) {
                    std::vector<double> preds, truths;
                    for (const auto& rec : eval_buffer) {
                        const auto& cell = bundle->cell(j, rec.action_index);
                        if (!cell.warm()) continue;
                        preds.push_back(cell.predict(rec.features).mu);
                        truths.push_back(orient_metric(
                            rec.horizon_values[static_cast<std::size_t>(j)], catalog.metric(j),
                            0.0));
                    }
                    bool all_zero = true;
                    for (double t : truths) all_zero &= t == 0.0;
                    if (!truths.empty() && !all_zero) {
                        row.per_metric[static_cast<std::size_t>(j)] =
                            normalized_mse(preds, truths);
                    }
                }
                report.model_nmse.push_back(std::move(row));
            }
            eval_buffer.clear();

            const std::vector<ObservationRecord> sampled =
                decay_sample(all_records, day, plan.training.half_life_days, seed);
            const auto datasets =
                build_datasets(sampled, catalog, transform_template, day,
                               scenario.horizon.horizon_days, plan.training.max_rows_per_cell);
            bundle = train_bundle(datasets, n_metrics, n_actions, train_config);
            bundle->set_snapshot_day(day);
            // Launched actions without data explore from the prior.
            for (int arm = 0; arm < 2; ++arm) {
                if (arms[static_cast<std::size_t>(arm)].policy != PolicyKind::Pro) continue;
                for (int k : world.allowed_actions(arm)) {
                    bundle->enable_exploration(k, prior_lambda);
                }
            }
            if (logs.enabled) {
                std::ofstream snap(options.out_dir + "/bundle_day_" + std::to_string(day) +
                                   ".json");
                snap << bundle_to_json(*bundle, catalog);
            }

            // 3) MPC retune per Pro arm, on the previous day's traffic.
            for (int arm = 0; arm < 2; ++arm) {
                auto& st = arms[static_cast<std::size_t>(arm)];
                if (st.policy != PolicyKind::Pro || st.budgets.empty()) continue;
                if (st.prev_day_traffic.empty()) continue;

                std::vector<int> fitted_actions;
                for (int k : world.allowed_actions(arm)) {
                    if (bundle->action_fitted(k, st.active_metrics)) fitted_actions.push_back(k);
                }
                if (fitted_actions.empty() ||
                    std::find(fitted_actions.begin(), fitted_actions.end(), kNoActionIndex) ==
                        fitted_actions.end()) {
                    continue;  // not enough learned structure to simulate yet
                }

                std::vector<int> abuse_metrics, budget_metrics;
                std::vector<double> rescaled;
                for (int j : st.active_metrics) {
                    if (catalog.metric(j).kind == MetricKind::Abuse) abuse_metrics.push_back(j);
                }
                const double scale = plan.mpc.sample_fraction * plan.mpc.forecast_factor;
                for (const auto& [j, budget] : st.budgets) {
                    budget_metrics.push_back(j);
                    rescaled.push_back(rescale_budget(budget, scale));
                }

                const MpcSample sample = draw_sample(
                    st.prev_day_traffic, plan.mpc.sample_fraction,
                    hash_combine(seed, static_cast<std::uint64_t>(arm)), day);

                CandidateGrid grid;
                grid.factors = plan.mpc.factors;
                for (int j : st.active_metrics) {
                    if (catalog.metric(j).kind == MetricKind::Cost) {
                        grid.tunable_metrics.push_back(j);
                    }
                }

                const TuneResult tuned =
                    tune_weights(st.weights, grid, sample, *bundle, st.active_metrics,
                                 abuse_metrics, budget_metrics, rescaled, fitted_actions);
                st.weights = tuned.weights;
                if (logs.enabled) {
                    logs.tuning << tune_result_to_json(tuned, catalog, budget_metrics, rescaled,
                                                       day)
                                << "\n";
                }
            }
        }

        for (int arm = 0; arm < 2; ++arm) {
            report.weight_trajectory[static_cast<std::size_t>(arm)].push_back(
                WeightSnapshot{day, arms[static_cast<std::size_t>(arm)].weights.w});
        }

        // 4) Build today's policies and step the world.
        std::array<ArmPolicy, 2> policies;
        for (int arm = 0; arm < 2; ++arm) {
            auto& st = arms[static_cast<std::size_t>(arm)];
            const std::vector<int>& allowed = world.allowed_actions(arm);
            const bool pro_live = st.policy == PolicyKind::Pro && day >= plan.warmup_days &&
                                  bundle.has_value();
            const BaselineRuleKind fallback = rule_kind(plan.bootstrap_policy);
            const RuleConfig rule_cfg = plan.rule;
            policies[static_cast<std::size_t>(arm)].name = arm == 0 ? "control" : "test";
            if (pro_live) {
                const ModelBundle* b = &*bundle;
                const ArmState* state = &st;
                policies[static_cast<std::size_t>(arm)].decide =
                    [b, state, allowed, seed, fallback, rule_cfg](const DecisionRequest& req) {
                        return select_action_thompson(req, *b, state->weights,
                                                      state->active_metrics, allowed, seed,
                                                      fallback, rule_cfg);
                    };
            } else {
                const BaselineRuleKind kind =
                    st.policy == PolicyKind::Pro ? fallback : rule_kind(st.policy);
                policies[static_cast<std::size_t>(arm)].decide =
                    [kind, rule_cfg](const DecisionRequest& req) {
                        Decision d;
                        d.mode = DecisionMode::BaselineFallback;
                        d.chosen_action = apply_baseline_rule(kind, req, rule_cfg);
                        return d;
                    };
            }
        }

        DayResult day_result = world.step_day(policies);

        // 5) Bookkeeping: traffic, logs, selection counts, completed records.
        for (auto& st : arms) st.prev_day_traffic.clear();
        for (const auto& ev : day_result.decisions) {
            auto& st = arms[static_cast<std::size_t>(ev.arm)];
            st.prev_day_traffic.push_back(ev.request);
            report.decision_counts[static_cast<std::size_t>(ev.arm)]
                                  [static_cast<std::size_t>(day)] += 1;
            report.selection_rates[static_cast<std::size_t>(ev.arm)][static_cast<std::size_t>(day)]
                                  [static_cast<std::size_t>(ev.decision.chosen_action)] += 1.0;
            if (logs.enabled) {
                logs.decisions << decision_to_jsonl(ev.decision, ev.request,
                                                    ev.arm == 0 ? "control" : "test",
                                                    world.allowed_actions(ev.arm))
                               << "\n";
            }
        }
        for (int arm = 0; arm < 2; ++arm) {
            const auto count =
                report.decision_counts[static_cast<std::size_t>(arm)][static_cast<std::size_t>(day)];
            if (count == 0) continue;
            for (auto& rate :
                 report.selection_rates[static_cast<std::size_t>(arm)][static_cast<std::size_t>(day)]) {
                rate /= static_cast<double>(count);
            }
        }
        for (auto& rec : day_result.completed) {
            if (logs.enabled) logs.observations << observation_to_jsonl(rec) << "\n";
            eval_buffer.push_back(rec);
            all_records.push_back(std::move(rec));
        }
        if (logs.enabled && scenario.emit_metric_samples) {
            for (const auto& sample : day_result.metric_samples) {
                ordered_json line;
                line["entity"] = sample.entity.value;
                line["day"] = sample.day;
                line["values"] = sample.values;
                logs.metric_samples << line.dump() << "\n";
            }
        }
    }

    // 6) Statistics over the main window: per-entity sums, Welch per metric.
    const auto& rows = world.window_rows(0);
    for (int j = 0; j < n_metrics; ++j) {
        std::vector<double> control, test;
        for (const auto& row : rows) {
            (row.arm == 0 ? control : test).push_back(row.sums[static_cast<std::size_t>(j)]);
        }
        MetricComparison cmp;
        const auto& spec = catalog.metric(j);
        cmp.metric = spec.name;
        cmp.kind = spec.kind;
        cmp.benign_positive = spec.benign_positive;
        for (double v : control) cmp.control_total += v;
        for (double v : test) cmp.test_total += v;
        cmp.control_mean = control.empty() ? 0.0
                                           : cmp.control_total / static_cast<double>(control.size());
        cmp.test_mean = test.empty() ? 0.0 : cmp.test_total / static_cast<double>(test.size());
        cmp.delta_pct = cmp.control_mean != 0.0
                            ? (cmp.test_mean - cmp.control_mean) / std::fabs(cmp.control_mean)
                            : 0.0;
        if (control.size() >= 2 && test.size() >= 2) {
            const TTestResult tt = welch_t_test(test, control);
            cmp.t = tt.t;
            cmp.p = tt.p;
        }
        cmp.significant = cmp.p <= plan.alpha;
        const bool worse = spec.benign_positive ? cmp.test_mean < cmp.control_mean
                                                : cmp.test_mean > cmp.control_mean;
        cmp.degradation = cmp.significant && worse;
        report.metrics.push_back(std::move(cmp));
    }

    report.enrolled = {world.enrolled_count(0), world.enrolled_count(1)};
    for (int arm = 0; arm < 2; ++arm) {
        auto& totals = report.daily_totals[static_cast<std::size_t>(arm)];
        auto& cf = report.daily_counterfactual_totals[static_cast<std::size_t>(arm)];
        totals.resize(static_cast<std::size_t>(scenario.days));
        cf.resize(static_cast<std::size_t>(scenario.days));
        for (int day = 0; day < scenario.days; ++day) {
            totals[static_cast<std::size_t>(day)] =
                world.daily_totals()[static_cast<std::size_t>(day)][static_cast<std::size_t>(arm)];
            cf[static_cast<std::size_t>(day)] =
                world.daily_counterfactual_totals()[static_cast<std::size_t>(day)]
                                                   [static_cast<std::size_t>(arm)];
        }
    }
    if (options.keep_window_rows) {
        for (std::size_t w = 0; w < windows.size(); ++w) {
            report.window_rows.push_back(world.window_rows(w));
        }
    }

    if (logs.enabled) {
        std::ofstream report_file(options.out_dir + "/report.json");
        report_file << report_to_json(report, catalog);
        std::ofstream csv_file(options.out_dir + "/report.csv");
        csv_file << report_to_csv(report, catalog);
    }
    return report;
}

std::string report_to_json(const ExperimentReport& report, const MetricCatalog& catalog) {
    ordered_json doc;
    doc["scenario"] = report.scenario;
    doc["seed"] = report.seed;
    doc["window"] = {{"begin", report.window.begin}, {"end", report.window.end}};
    doc["alpha"] = report.alpha;
    doc["enrolled"] = {{"control", report.enrolled[0]}, {"test", report.enrolled[1]}};

    ordered_json metrics = ordered_json::array();
    for (const auto& m : report.metrics) {
        ordered_json mj;
        mj["metric"] = m.metric;
        mj["kind"] = m.kind == MetricKind::Abuse ? "abuse" : "cost";
        mj["control_mean"] = m.control_mean;
        mj["test_mean"] = m.test_mean;
        mj["control_total"] = m.control_total;
        mj["test_total"] = m.test_total;
        mj["delta_pct"] = m.delta_pct;
        mj["t"] = m.t;
        mj["p"] = m.p;
        mj["significant"] = m.significant;
        mj["degradation"] = m.degradation;
        metrics.push_back(std::move(mj));
    }
    doc["metrics"] = std::move(metrics);

    for (int arm = 0; arm < 2; ++arm) {
        const char* name = arm == 0 ? "control" : "test";
        ordered_json arm_doc;
        arm_doc["decision_counts"] = report.decision_counts[static_cast<std::size_t>(arm)];
        ordered_json rates = ordered_json::array();
        for (const auto& day_rates : report.selection_rates[static_cast<std::size_t>(arm)]) {
            rates.push_back(day_rates);
        }
        arm_doc["selection_rates"] = std::move(rates);
        ordered_json weights = ordered_json::array();
        for (const auto& w : report.weight_trajectory[static_cast<std::size_t>(arm)]) {
            weights.push_back(ordered_json{{"day", w.day}, {"w", w.weights}});
        }
        arm_doc["weights"] = std::move(weights);
        arm_doc["daily_totals"] = report.daily_totals[static_cast<std::size_t>(arm)];
        arm_doc["daily_counterfactual_totals"] =
            report.daily_counterfactual_totals[static_cast<std::size_t>(arm)];
        doc[name] = std::move(arm_doc);
    }

    ordered_json nmse = ordered_json::array();
    for (const auto& row : report.model_nmse) {
        nmse.push_back(ordered_json{{"day", row.day}, {"per_metric", row.per_metric}});
    }
    doc["model_nmse"] = std::move(nmse);

    ordered_json action_names = ordered_json::array();
    for (const auto& a : catalog.actions) action_names.push_back(a.name);
    doc["actions"] = std::move(action_names);
    return doc.dump(2);
}

std::string report_to_csv(const ExperimentReport& report, const MetricCatalog& catalog) {
    std::ostringstream out;
    out << "day,arm,decisions";
    for (const auto& m : catalog.metrics) out << ",total_" << m.name;
    for (const auto& a : catalog.actions) out << ",sel_" << a.name;
    out << "\n";
    const std::size_t days = report.daily_totals[0].size();
    for (std::size_t day = 0; day < days; ++day) {
        for (int arm = 0; arm < 2; ++arm) {
            out << day << "," << (arm == 0 ? "control" : "test") << ","
                << report.decision_counts[static_cast<std::size_t>(arm)][day];
            for (const auto& total : report.daily_totals[static_cast<std::size_t>(arm)][day]) {
                out << "," << total;
            }
            for (const auto& rate : report.selection_rates[static_cast<std::size_t>(arm)][day]) {
                out << "," << rate;
            }
            out << "\n";
        }
    }
    return out.str();
}

std::vector<double> selection_rate_series(const std::vector<std::string>& decision_log_lines,
                                          int action_index, const std::string& arm_name,
                                          int days) {
    if (decision_log_lines.empty()) {
        throw std::invalid_argument("selection_rate_series: empty decision log");
    }
    std::vector<double> chosen(static_cast<std::size_t>(days), 0.0);
    std::vector<double> total(static_cast<std::size_t>(days), 0.0);
    for (const auto& line : decision_log_lines) {
        const ordered_json doc = ordered_json::parse(line);
        if (doc.at("arm").get<std::string>() != arm_name) continue;
        const int day = doc.at("day").get<int>();
        if (day < 0 || day >= days) continue;
        total[static_cast<std::size_t>(day)] += 1.0;
        if (doc.at("action").get<int>() == action_index) {
            chosen[static_cast<std::size_t>(day)] += 1.0;
        }
    }
    std::vector<double> rates(static_cast<std::size_t>(days), 0.0);
    for (std::size_t d = 0; d < rates.size(); ++d) {
        if (total[d] > 0.0) rates[d] = chosen[d] / total[d];
    }
    return rates;
}

AggregateResult reaggregate_metric_samples(const std::vector<std::string>& jsonl_lines,
                                           DayRange window, std::size_t metric_count) {
    std::vector<MetricSample> samples;
    samples.reserve(jsonl_lines.size());
    for (const auto& line : jsonl_lines) {
        const ordered_json doc = ordered_json::parse(line);
        MetricSample s;
        s.entity.value = doc.at("entity").get<std::uint64_t>();
        s.day = doc.at("day").get<int>();
        s.values = doc.at("values").get<std::vector<double>>();
        samples.push_back(std::move(s));
    }
    return aggregate_metrics(samples, window, metric_count);
}

}  // namespace pro
