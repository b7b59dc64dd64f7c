#include "ledger/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "ledger/errors.hpp"

namespace ledger::metrics {

namespace {

void require_unit(double value, const char* field) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw DomainError(field, "must lie in [0,1], got " + std::to_string(value));
    }
}

void require_open_unit(double value, const char* field) {
    if (!(value > 0.0 && value < 1.0)) {
        throw DomainError(field, "must lie in (0,1), got " + std::to_string(value));
    }
}

bool has_generation(PipelineKind kind) { return kind != PipelineKind::retrieval_only; }

double merge_slot(double a, double b) { return a + b - a * b; }

}  // namespace

const char* to_string(PipelineKind kind) {
    switch (kind) {
        case PipelineKind::retrieval_only: return "retrieval_only";
        case PipelineKind::retrieval_generation: return "retrieval_generation";
        case PipelineKind::full: return "full";
    }
    return "full";
}

PipelineKind parse_pipeline_kind(const std::string& text) {
    if (text == "retrieval_only") return PipelineKind::retrieval_only;
    if (text == "retrieval_generation") return PipelineKind::retrieval_generation;
    if (text == "full") return PipelineKind::full;
    throw DomainError("kind", "unknown pipeline kind '" + text + "'");
}

void validate(const ComponentErrors& errors) {
    require_unit(errors.retrieval, "retrieval");
    require_unit(errors.generation, "generation");
    require_unit(errors.verification, "verification");
}

void validate(const PipelineSpec& pipeline) {
    validate(pipeline.errors);
    if (!(pipeline.expected_cost >= 0.0) || !std::isfinite(pipeline.expected_cost)) {
        throw DomainError("expected_cost", "must be a finite non-negative number of seconds");
    }
    if (pipeline.kind == PipelineKind::retrieval_only && pipeline.errors.generation != 0.0) {
        throw DomainError("generation", "must be 0 for a retrieval_only pipeline");
    }
    if (const auto* joint = std::get_if<EmpiricalJoint>(&pipeline.dependence)) {
        require_unit(joint->joint_error, "joint_error");
    }
}

void validate(const PolicyParams& policy) {
    if (!(policy.tau_star > 0.0) || !std::isfinite(policy.tau_star)) {
        throw DomainError("tau_star", "must be positive");
    }
    require_open_unit(policy.theta_c, "theta_c");
    require_open_unit(policy.delta, "delta");
    require_open_unit(policy.theta_ak, "theta_ak");
    require_open_unit(policy.theta_ck, "theta_ck");
    require_open_unit(policy.theta_r, "theta_r");
    require_open_unit(policy.theta_neg, "theta_neg");
}

void validate(const Proposition& proposition) {
    if (!(proposition.salience_weight >= 0.0) || !std::isfinite(proposition.salience_weight)) {
        throw DomainError("salience_weight", "must be non-negative");
    }
    require_open_unit(proposition.threshold, "threshold");
}

double total_error(const ComponentErrors& errors, const Dependence& dependence) {
    validate(errors);
    if (const auto* joint = std::get_if<EmpiricalJoint>(&dependence)) {
        require_unit(joint->joint_error, "joint_error");
        return joint->joint_error;
    }
    const double survive =
        (1.0 - errors.retrieval) * (1.0 - errors.generation) * (1.0 - errors.verification);
    return std::clamp(1.0 - survive, 0.0, 1.0);
}

double total_error(const PipelineSpec& pipeline) {
    return total_error(pipeline.errors, pipeline.dependence);
}

double efficiency(double cost, double tau_star) {
    if (!(tau_star > 0.0) || !std::isfinite(tau_star)) {
        throw DomainError("tau_star", "must be positive");
    }
    if (!(cost >= 0.0)) {
        throw DomainError("cost", "must be non-negative");
    }
    return 1.0 / (1.0 + cost / tau_star);
}

double pipeline_score(const PipelineSpec& pipeline, const PolicyParams& policy) {
    validate(pipeline);
    return efficiency(pipeline.expected_cost, policy.tau_star) * (1.0 - total_error(pipeline));
}

OrgScore org_score(const std::vector<PipelineSpec>& pipelines, const PolicyParams& policy) {
    if (pipelines.empty()) {
        throw PreconditionError("org_score: the pipeline set is empty, its best score is undefined");
    }
    OrgScore best{-1.0, {}};
    for (const auto& p : pipelines) {
        const double s = pipeline_score(p, policy);
        if (s > best.value) {
            best = {s, p.id};
        }
    }
    return best;
}

bool knowledge_predicate(double org_score, double theta_c) {
    require_unit(org_score, "org_score");
    require_open_unit(theta_c, "theta_c");
    return org_score >= theta_c;
}

double capacity_index(const Docket& docket, const PolicyParams& policy) {
    double total = 0.0;
    double known = 0.0;
    for (const auto& prop : docket.propositions) {
        validate(prop);
        total += prop.salience_weight;
        const auto it = docket.pipelines.find(prop.id);
        if (it == docket.pipelines.end() || it->second.empty()) {
            continue;
        }
        if (org_score(it->second, policy).value >= prop.threshold) {
            known += prop.salience_weight;
        }
    }
    if (!(total > 0.0)) {
        throw DomainError("salience_weight", "total proposition weight must be positive");
    }
    return known / total;
}

PipelineSpec compose(const PipelineSpec& first, const PipelineSpec& second) {
    validate(first);
    validate(second);
    const bool first_joint = std::holds_alternative<EmpiricalJoint>(first.dependence);
    const bool second_joint = std::holds_alternative<EmpiricalJoint>(second.dependence);
    if ((first_joint || second_joint) && has_generation(first.kind) && has_generation(second.kind)) {
        throw UnsupportedComposition(
            "compose: both stages claim generation and a joint error cannot be split per slot");
    }

    PipelineSpec out;
    out.id = first.id + ">" + second.id;
    out.kind = std::max(first.kind, second.kind);
    out.expected_cost = first.expected_cost + second.expected_cost;
    out.errors.retrieval = merge_slot(first.errors.retrieval, second.errors.retrieval);
    out.errors.generation = merge_slot(first.errors.generation, second.errors.generation);
    out.errors.verification = merge_slot(first.errors.verification, second.errors.verification);
    if (first_joint || second_joint) {
        out.dependence = EmpiricalJoint{merge_slot(total_error(first), total_error(second))};
    }
    return out;
}

std::vector<FrontierPoint> epistemic_frontier(const std::vector<PipelineSpec>& pipelines) {
    if (pipelines.empty()) {
        throw PreconditionError("epistemic_frontier: the pipeline set is empty");
    }
    std::vector<FrontierPoint> points;
    points.reserve(pipelines.size());
    for (const auto& p : pipelines) {
        validate(p);
        points.push_back({p.expected_cost, total_error(p), p.id});
    }
    std::sort(points.begin(), points.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
        return std::tie(a.cost, a.total_error, a.pipeline_id) <
               std::tie(b.cost, b.total_error, b.pipeline_id);
    });

    // After sorting by cost, a point survives iff its error is strictly below
    // every error seen at lower or equal cost.
    std::vector<FrontierPoint> frontier;
    double best_error = std::numeric_limits<double>::infinity();
    for (auto& pt : points) {
        if (pt.total_error < best_error) {
            best_error = pt.total_error;
            frontier.push_back(std::move(pt));
        }
    }
    return frontier;
}

}  // namespace ledger::metrics
