#pragma once

// Hand-built inputs shared by the unit tests and the acceptance runner.

#include <string>
#include <vector>

#include "ledger/doctrine.hpp"

namespace fixtures {

using namespace ledger;

inline metrics::PipelineSpec pipeline(std::string id, double cost, metrics::ComponentErrors e = {},
                                      metrics::PipelineKind kind = metrics::PipelineKind::full) {
    metrics::PipelineSpec p;
    p.id = std::move(id);
    p.kind = kind;
    p.expected_cost = cost;
    p.errors = e;
    return p;
}

/// Certificate whose only non-zero bound is retrieval, so total_upper == upper.
inline validation::ValidationCertificate certificate(std::string pipeline_id, double cost, double total_upper) {
    validation::ValidationCertificate c;
    c.pipeline_id = std::move(pipeline_id);
    c.kind = metrics::PipelineKind::retrieval_only;
    c.measured_cost = cost;
    c.ret_bound = {0.0, total_upper, validation::BoundMethod::wilson, 0.05, 500, false};
    c.gen_bound = {0.0, 0.0, validation::BoundMethod::wilson, 0.05, 0, true};
    c.ver_bound = {0.0, 0.0, validation::BoundMethod::wilson, 0.05, 500, false};
    c.total_upper = total_upper;
    c.delta = 0.05;
    c.provenance = {"kfold(5)", "2024-01-01T00:00:00Z", ""};
    return c;
}

/// With cost 0 the lower-bound score is exactly 1 - total_upper.
inline validation::ValidationCertificate certificate_with_lb(std::string pipeline_id, double s_lb) {
    return certificate(std::move(pipeline_id), 0.0, 1.0 - s_lb);
}

inline doctrine::ExecutionRecord executed(std::string pipeline_id, std::string proposition_id,
                                          std::optional<validation::ValidationCertificate> cert,
                                          doctrine::Verdict outcome = doctrine::Verdict::established) {
    doctrine::ExecutionRecord r;
    r.pipeline_id = std::move(pipeline_id);
    r.proposition_id = std::move(proposition_id);
    r.executed = true;
    r.certificate = std::move(cert);
    r.outcome = outcome;
    r.timestamp = "2024-01-01T00:00:00Z";
    return r;
}

inline doctrine::ExecutionRecord skipped(std::string pipeline_id, std::string proposition_id,
                                         doctrine::Avoidance avoidance = doctrine::Avoidance::none) {
    doctrine::ExecutionRecord r;
    r.pipeline_id = std::move(pipeline_id);
    r.proposition_id = std::move(proposition_id);
    r.avoidance = avoidance;
    return r;
}

struct Case {
    const char* name;
    metrics::Proposition proposition;
    std::vector<metrics::PipelineSpec> available;
    std::vector<doctrine::ExecutionRecord> executions;
    double capacity;
    doctrine::Doctrine expected;
};

/// One fixture per knowledge state, each with a single intended primary finding.
inline std::vector<Case> contrast_cases() {
    const metrics::Proposition phi{"phi", "material fact", 1.0, 0.7};
    return {
        {"actual knowledge", phi, {pipeline("modern", 2.06)},
         {executed("modern", "phi", certificate("modern", 2.06, 0.0))}, 1.0,
         doctrine::Doctrine::actual_knowledge},
        {"constructive knowledge", phi, {pipeline("modern", 2.06)}, {}, 1.0,
         doctrine::Doctrine::constructive_knowledge},
        {"wilful blindness", phi, {pipeline("cheap", 0.5, {0.01, 0, 0})},
         {skipped("cheap", "phi", doctrine::Avoidance::suppressed_query)}, 1.0,
         doctrine::Doctrine::wilful_blindness},
        {"recklessness", phi, {pipeline("legacy", 5.90, {}, metrics::PipelineKind::retrieval_only)},
         {executed("legacy", "phi", std::nullopt)}, 1.0, doctrine::Doctrine::recklessness},
    };
}

}  // namespace fixtures
