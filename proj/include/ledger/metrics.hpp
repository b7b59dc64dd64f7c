#pragma once

// Core knowledge metrics: total error composition, efficiency-discounted
// pipeline scores, the organisational score and its threshold predicate,
// the weighted capacity index, pipeline composition and the cost/error
// frontier. Everything here is a pure function of its arguments.

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace ledger::metrics {

enum class PipelineKind { retrieval_only, retrieval_generation, full };

/// Per-stage error rates. Each lies in [0,1].
struct ComponentErrors {
    double retrieval = 0.0;
    double generation = 0.0;
    double verification = 0.0;
};

struct Independent {};

/// Caller-measured joint error used verbatim in place of the product rule.
struct EmpiricalJoint {
    double joint_error = 0.0;
};

using Dependence = std::variant<Independent, EmpiricalJoint>;

struct PipelineSpec {
    std::string id;
    PipelineKind kind = PipelineKind::full;
    double expected_cost = 0.0;  // seconds
    ComponentErrors errors;
    Dependence dependence = Independent{};
};

/// Reference time, confidence level and the thresholds used by scoring and
/// doctrine classification. Defaults reproduce the two-firm docket.
struct PolicyParams {
    double tau_star = 10.0;  // seconds
    double theta_c = 0.7;
    double delta = 0.05;
    double theta_ak = 0.7;
    double theta_ck = 0.7;
    double theta_r = 0.7;
    double theta_neg = 0.7;
};

struct Proposition {
    std::string id;
    std::string description;
    double salience_weight = 1.0;
    double threshold = 0.7;
};

/// Propositions plus, for each proposition id, the pipelines that can
/// establish it. A missing entry is an empty pipeline set.
struct Docket {
    std::vector<Proposition> propositions;
    std::map<std::string, std::vector<PipelineSpec>> pipelines;
};

struct StackDescriptor {
    std::vector<std::string> data_stores;
    std::vector<std::string> indices;
    std::vector<std::string> retrievers;
    std::vector<std::string> generators;
    std::vector<std::string> verifiers;
    std::vector<PipelineSpec> pipelines;
    PolicyParams policy;
};

struct FrontierPoint {
    double cost = 0.0;
    double total_error = 0.0;
    std::string pipeline_id;

    friend bool operator==(const FrontierPoint&, const FrontierPoint&) = default;
};

/// Best pipeline score and the pipeline that attains it.
struct OrgScore {
    double value = 0.0;
    std::string pipeline_id;
};

const char* to_string(PipelineKind kind);
PipelineKind parse_pipeline_kind(const std::string& text);

void validate(const ComponentErrors& errors);
void validate(const PipelineSpec& pipeline);
void validate(const PolicyParams& policy);
void validate(const Proposition& proposition);

/// 1 - (1-ret)(1-gen)(1-ver) under independence, or the supplied joint error.
double total_error(const ComponentErrors& errors, const Dependence& dependence = Independent{});
double total_error(const PipelineSpec& pipeline);

/// f(x) = 1 / (1 + x / tau_star), in (0,1].
double efficiency(double cost, double tau_star);

double pipeline_score(const PipelineSpec& pipeline, const PolicyParams& policy);

/// Max score over a finite, non-empty pipeline list. Ties keep the first
/// pipeline in list order.
OrgScore org_score(const std::vector<PipelineSpec>& pipelines, const PolicyParams& policy);

/// Closed threshold: org_score >= theta_c.
bool knowledge_predicate(double org_score, double theta_c);

/// Weighted share of propositions whose organisational score meets their own
/// threshold. Propositions without pipelines count as not known.
double capacity_index(const Docket& docket, const PolicyParams& policy);

/// Sequential composition: costs add, errors merge slot by slot with the
/// product rule.
PipelineSpec compose(const PipelineSpec& first, const PipelineSpec& second);

/// Pareto-minimal (cost, total_error) points sorted by cost. Exact duplicates
/// keep the lexicographically smallest pipeline id.
std::vector<FrontierPoint> epistemic_frontier(const std::vector<PipelineSpec>& pipelines);

}  // namespace ledger::metrics
