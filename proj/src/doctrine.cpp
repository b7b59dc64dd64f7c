#include "ledger/doctrine.hpp"

#include <algorithm>
#include <cstdio>

#include "ledger/errors.hpp"

namespace ledger::doctrine {

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

bool was_executed(const std::vector<ExecutionRecord>& executions, const std::string& pipeline_id) {
    return std::any_of(executions.begin(), executions.end(), [&](const ExecutionRecord& r) {
        return r.executed && r.pipeline_id == pipeline_id;
    });
}

}  // namespace

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::established: return "established";
        case Verdict::refuted: return "refuted";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

const char* to_string(Avoidance a) {
    switch (a) {
        case Avoidance::none: return "none";
        case Avoidance::suppressed_query: return "suppressed_query";
        case Avoidance::disabled_index: return "disabled_index";
        case Avoidance::filtered_alerts: return "filtered_alerts";
        case Avoidance::skipped_validation: return "skipped_validation";
    }
    return "none";
}

const char* to_string(Doctrine d) {
    switch (d) {
        case Doctrine::actual_knowledge: return "actual_knowledge";
        case Doctrine::wilful_blindness: return "wilful_blindness";
        case Doctrine::recklessness: return "recklessness";
        case Doctrine::constructive_knowledge: return "constructive_knowledge";
        case Doctrine::negligence: return "negligence";
    }
    return "negligence";
}

Verdict parse_verdict(const std::string& text) {
    for (auto v : {Verdict::established, Verdict::refuted, Verdict::inconclusive}) {
        if (text == to_string(v)) return v;
    }
    throw DomainError("outcome", "unknown verdict '" + text + "'");
}

Avoidance parse_avoidance(const std::string& text) {
    for (auto a : {Avoidance::none, Avoidance::suppressed_query, Avoidance::disabled_index,
                   Avoidance::filtered_alerts, Avoidance::skipped_validation}) {
        if (text == to_string(a)) return a;
    }
    throw DomainError("avoidance", "unknown avoidance evidence '" + text + "'");
}

void validate(const ExecutionRecord& record) {
    if (!record.executed && record.outcome) {
        throw DomainError("outcome", "a pipeline that was not executed has no outcome");
    }
    if (record.certificate) validation::validate(*record.certificate);
}

void validate(const WilfulBlindnessParams& params) {
    if (!(params.cheapness_factor > 0.0 && params.cheapness_factor <= 1.0)) {
        throw DomainError("cheapness_factor", "must lie in (0,1]");
    }
    if (!(params.max_error > 0.0 && params.max_error < 1.0)) {
        throw DomainError("max_error", "must lie in (0,1)");
    }
}

ActualKnowledgeCheck actual_knowledge_test(const ExecutionRecord& record, double theta_ak,
                                           double tau_star) {
    validate(record);
    ActualKnowledgeCheck check;
    if (!record.executed) return check;
    if (!record.certificate) {
        check.certification_gap = true;
        return check;
    }
    check.lower_bound = validation::lower_bound_score(*record.certificate, tau_star);
    check.holds = *check.lower_bound >= theta_ak &&
                  record.outcome.value_or(Verdict::established) != Verdict::inconclusive;
    return check;
}

bool constructive_knowledge_test(const std::vector<metrics::PipelineSpec>& available,
                                 const std::vector<ExecutionRecord>& executions, double theta_ck,
                                 const metrics::PolicyParams& policy) {
    if (available.empty()) return false;
    if (metrics::org_score(available, policy).value < theta_ck) return false;
    return std::none_of(executions.begin(), executions.end(), [&](const ExecutionRecord& r) {
        return actual_knowledge_test(r, policy.theta_ak, policy.tau_star).holds;
    });
}

bool wilful_blindness_test(const std::vector<metrics::PipelineSpec>& available,
                           const std::vector<ExecutionRecord>& executions,
                           const WilfulBlindnessParams& params,
                           const metrics::PolicyParams& policy) {
    validate(params);
    const bool deliberate =
        std::any_of(executions.begin(), executions.end(),
                    [](const ExecutionRecord& r) { return r.avoidance != Avoidance::none; });
    if (!deliberate) return false;
    const double cheap = params.cheapness_factor * policy.tau_star;
    return std::any_of(available.begin(), available.end(), [&](const metrics::PipelineSpec& p) {
        return p.expected_cost <= cheap && metrics::total_error(p) <= params.max_error &&
               !was_executed(executions, p.id);
    });
}

bool recklessness_test(const ExecutionRecord& record, double theta_r, double margin,
                       double tau_star) {
    if (!record.executed) {
        throw PreconditionError("recklessness_test: record '" + record.pipeline_id +
                                "' was not executed");
    }
    validate(record);
    if (!record.certificate) return true;
    return validation::lower_bound_score(*record.certificate, tau_star) < theta_r - margin;
}

bool negligence_test(double capacity, double theta_neg) {
    if (!(capacity >= 0.0 && capacity <= 1.0)) throw DomainError("capacity", "must lie in [0,1]");
    return capacity < theta_neg;
}

DoctrineFinding classify(const metrics::Proposition& proposition,
                         const std::vector<metrics::PipelineSpec>& available,
                         const std::vector<ExecutionRecord>& executions, double capacity,
                         const metrics::PolicyParams& policy, const DoctrineParams& params) {
    metrics::validate(policy);
    DoctrineFinding finding;
    finding.proposition_id = proposition.id;

    std::vector<ExecutionRecord> relevant;
    for (const auto& r : executions) {
        if (r.proposition_id == proposition.id) relevant.push_back(r);
    }

    auto add = [&](Doctrine d, std::string detail) {
        finding.applicable.insert(d);
        finding.rationale.push_back({d, std::move(detail)});
    };

    for (const auto& r : relevant) {
        const auto check = actual_knowledge_test(r, policy.theta_ak, policy.tau_star);
        if (check.holds) {
            add(Doctrine::actual_knowledge, "executed " + r.pipeline_id + " with s_LB=" +
                                                fixed4(*check.lower_bound) +
                                                " >= theta_ak=" + fixed4(policy.theta_ak));
            break;
        }
    }

    if (wilful_blindness_test(available, relevant, params.wilful, policy)) {
        add(Doctrine::wilful_blindness,
            "unexecuted pipeline with cost <= " +
                fixed4(params.wilful.cheapness_factor * policy.tau_star) +
                "s and total error <= " + fixed4(params.wilful.max_error) +
                " alongside recorded avoidance");
    }

    for (const auto& r : relevant) {
        if (!r.executed) continue;
        if (recklessness_test(r, policy.theta_r, params.reckless_margin, policy.tau_star)) {
            std::string detail = "executed " + r.pipeline_id + " ";
            if (r.certificate) {
                detail += "with s_LB=" +
                          fixed4(validation::lower_bound_score(*r.certificate, policy.tau_star)) +
                          " < theta_r-margin=" + fixed4(policy.theta_r - params.reckless_margin);
            } else {
                detail += "without any validation certificate";
            }
            add(Doctrine::recklessness, std::move(detail));
            break;
        }
    }

    if (constructive_knowledge_test(available, relevant, policy.theta_ck, policy)) {
        const auto best = metrics::org_score(available, policy);
        add(Doctrine::constructive_knowledge, "available " + best.pipeline_id + " scores S_S=" +
                                                  fixed4(best.value) + " >= theta_ck=" +
                                                  fixed4(policy.theta_ck) + " without execution");
    }

    if (negligence_test(capacity, policy.theta_neg)) {
        add(Doctrine::negligence, "capacity index " + fixed4(capacity) + " < theta_neg=" +
                                      fixed4(policy.theta_neg));
    }

    if (!finding.applicable.empty()) finding.primary = *finding.applicable.begin();
    std::sort(finding.rationale.begin(), finding.rationale.end(),
              [](const Trigger& a, const Trigger& b) { return a.doctrine < b.doctrine; });
    return finding;
}

}  // namespace ledger::doctrine
