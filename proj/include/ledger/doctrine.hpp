#pragma once

// Maps scores, certificates and execution records onto the knowledge states
// used in corporate liability: actual knowledge, constructive knowledge,
// wilful blindness, recklessness and negligence. Outputs are model
// classifications, not legal determinations.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ledger/metrics.hpp"
#include "ledger/validation.hpp"

namespace ledger::doctrine {

enum class Verdict { established, refuted, inconclusive };

enum class Avoidance { none, suppressed_query, disabled_index, filtered_alerts, skipped_validation };

/// Ordered by classification precedence: the first applicable entry is the
/// primary finding.
enum class Doctrine { actual_knowledge, wilful_blindness, recklessness, constructive_knowledge, negligence };

struct ExecutionRecord {
    std::string pipeline_id;
    std::string proposition_id;
    bool executed = false;
    std::optional<validation::ValidationCertificate> certificate;
    std::optional<Verdict> outcome;  // absent unless executed
    Avoidance avoidance = Avoidance::none;
    std::string timestamp;
};

/// "Trivial cost" is cost <= cheapness_factor * tau_star and "near-certain"
/// is total error <= max_error.
struct WilfulBlindnessParams {
    double cheapness_factor = 0.1;
    double max_error = 0.05;
};

struct DoctrineParams {
    WilfulBlindnessParams wilful;
    double reckless_margin = 0.2;  // "grossly below" means s_LB < theta_r - margin
};

struct Trigger {
    Doctrine doctrine;
    std::string detail;  // metric values that triggered it
};

struct DoctrineFinding {
    std::string proposition_id;
    std::set<Doctrine> applicable;
    std::optional<Doctrine> primary;
    std::vector<Trigger> rationale;
};

struct ActualKnowledgeCheck {
    bool holds = false;
    bool certification_gap = false;  // executed without a certificate
    std::optional<double> lower_bound;
};

const char* to_string(Verdict v);
const char* to_string(Avoidance a);
const char* to_string(Doctrine d);
Verdict parse_verdict(const std::string& text);
Avoidance parse_avoidance(const std::string& text);

void validate(const ExecutionRecord& record);
void validate(const WilfulBlindnessParams& params);

ActualKnowledgeCheck actual_knowledge_test(const ExecutionRecord& record, double theta_ak,
                                           double tau_star);

bool constructive_knowledge_test(const std::vector<metrics::PipelineSpec>& available,
                                 const std::vector<ExecutionRecord>& executions, double theta_ck,
                                 const metrics::PolicyParams& policy);

bool wilful_blindness_test(const std::vector<metrics::PipelineSpec>& available,
                           const std::vector<ExecutionRecord>& executions,
                           const WilfulBlindnessParams& params,
                           const metrics::PolicyParams& policy);

/// Requires record.executed; throws PreconditionError otherwise.
bool recklessness_test(const ExecutionRecord& record, double theta_r, double margin,
                       double tau_star);

/// Strict: capacity < theta_neg.
bool negligence_test(double capacity, double theta_neg);

/// Runs all five tests for one proposition. Only executions whose
/// proposition_id matches are considered. `capacity` is the firm-wide
/// capacity index used for negligence.
DoctrineFinding classify(const metrics::Proposition& proposition,
                         const std::vector<metrics::PipelineSpec>& available,
                         const std::vector<ExecutionRecord>& executions, double capacity,
                         const metrics::PolicyParams& policy, const DoctrineParams& params = {});

}  // namespace ledger::doctrine
