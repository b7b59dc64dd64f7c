#pragma once

// Statistical validation: concentration and binomial bounds on component
// error, calibration error, fold-aware cross-validation, penalised model
// selection, and the certificates that turn measured errors into
// conservative lower-bound scores.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ledger/metrics.hpp"

namespace ledger::validation {

struct LossRecord {
    std::string predicted;
    std::string actual;
    double loss = 0.0;  // bounded, in [0,1]
};

/// 0-1 loss record: loss is 1 iff the labels differ.
LossRecord zero_one(std::string predicted, std::string actual);

enum class BoundMethod { hoeffding, wilson };

struct ConfidenceBound {
    double point_estimate = 0.0;
    double upper = 0.0;
    BoundMethod method = BoundMethod::wilson;
    double delta = 0.05;
    std::size_t sample_size = 0;
    bool synthetic = false;  // component absent from the pipeline, upper fixed at 0
};

const char* to_string(BoundMethod method);
BoundMethod parse_bound_method(const std::string& text);

double empirical_risk(std::span<const LossRecord> records);

/// risk + sqrt(ln(1/delta) / 2n), clamped to 1.
ConfidenceBound hoeffding_upper(double risk, std::size_t n, double delta);

/// One-sided Wilson score upper limit at confidence 1 - delta.
ConfidenceBound wilson_upper(std::size_t successes, std::size_t n, double delta);

/// Inverse of the standard normal CDF, |error| < 1e-9 on (0,1).
double normal_quantile(double p);

// ---------------------------------------------------------------- calibration

struct EqualWidth {
    std::size_t bins = 10;
};
struct EqualMass {
    std::size_t bins = 10;
};
using Binning = std::variant<EqualWidth, EqualMass>;

struct Prediction {
    double confidence = 0.0;
    bool correct = false;
};

struct CalibrationBin {
    double lower_conf = 0.0;
    double upper_conf = 0.0;
    std::size_t count = 0;
    double mean_confidence = 0.0;
    double mean_accuracy = 0.0;
};

struct CalibrationReport {
    std::vector<CalibrationBin> bins;
    double ece = 0.0;
    Binning binning = EqualWidth{};
};

CalibrationReport ece(std::span<const Prediction> predictions, const Binning& binning = EqualWidth{});

// -------------------------------------------------------------------- folds

struct KFold {
    std::size_t k = 5;
    std::optional<std::uint64_t> shuffle_seed;
};
struct RollingWindow {
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t step = 1;
};
struct Grouped {
    std::size_t k = 2;
};
using FoldStrategy = std::variant<KFold, RollingWindow, Grouped>;

struct Fold {
    std::size_t id = 0;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct FoldPlan {
    FoldStrategy strategy = KFold{};
    std::vector<Fold> folds;
    /// Test-fold id for each record; records never tested (rolling window
    /// warm-up) map to nothing.
    std::vector<std::optional<std::size_t>> assignments;
};

/// Short descriptor such as "kfold(5)" for certificates and reports.
std::string describe(const FoldStrategy& strategy);

/// `keys` holds group labels for Grouped and time stamps (as text, compared
/// numerically) for RollingWindow; it is ignored for KFold.
FoldPlan make_folds(std::size_t n, const FoldStrategy& strategy,
                    std::span<const std::string> keys = {});

// --------------------------------------------------- cross-validated selection

struct Sample {
    std::vector<double> features;
    int label = 0;
};

using Predictor = std::function<int(const Sample&)>;
using Trainer = std::function<Predictor(const std::vector<Sample>& train, std::uint64_t seed)>;

enum class Criterion { aic, bic, mdl, supplied };

struct ModelCandidate {
    std::string id;
    Trainer trainer;
    double complexity = 0.0;  // Omega(f)
    Criterion criterion = Criterion::supplied;
};

double aic_penalty(std::size_t parameters);
double bic_penalty(std::size_t parameters, std::size_t n);

/// Mean over folds of the per-fold mean 0-1 loss; each fold weighs 1/K
/// regardless of its size.
double cv_risk(std::span<const Sample> dataset, const FoldPlan& plan,
               const ModelCandidate& candidate, std::uint64_t seed = 0);

struct Selection {
    std::size_t index = 0;
    std::string id;
    double cv_risk = 0.0;
    double objective = 0.0;
};

/// argmin of cv_risk + lambda * complexity; ties go to smaller complexity,
/// then smaller id.
Selection penalized_select(std::span<const ModelCandidate> candidates,
                           std::span<const Sample> dataset, const FoldPlan& plan,
                           double lambda, std::uint64_t seed = 0);

// ------------------------------------------------------------- certificates

struct EvalSets {
    std::optional<std::vector<LossRecord>> retrieval;
    std::optional<std::vector<LossRecord>> generation;
    std::optional<std::vector<LossRecord>> verification;
};

struct Provenance {
    std::string fold_strategy = "holdout";
    std::string timestamp;  // ISO-8601
    std::string note;
};

struct ValidationCertificate {
    std::string pipeline_id;
    metrics::PipelineKind kind = metrics::PipelineKind::full;
    double measured_cost = 0.0;
    ConfidenceBound ret_bound;
    ConfidenceBound gen_bound;
    ConfidenceBound ver_bound;
    double total_upper = 0.0;
    double delta = 0.05;
    Provenance provenance;
};

enum class Component { retrieval, generation, verification };

const char* to_string(Component component);

/// True for the slots a pipeline of this kind actually runs. Retrieval and
/// verification always run; generation only outside retrieval_only.
bool component_present(metrics::PipelineKind kind, Component component);

ValidationCertificate certify(const metrics::PipelineSpec& pipeline, const EvalSets& eval_sets,
                              double measured_cost, double delta,
                              BoundMethod method = BoundMethod::wilson,
                              Provenance provenance = {});

/// Checks the certificate's internal invariants; throws DomainError.
void validate(const ValidationCertificate& cert);

double lower_bound_score(const ValidationCertificate& cert, double tau_star);

bool plug_in_test(const ValidationCertificate& cert, double theta_c, double tau_star);

double lower_bound_capacity(
    const metrics::Docket& docket,
    const std::map<std::string, std::vector<ValidationCertificate>>& certs,
    const metrics::PolicyParams& policy);

}  // namespace ledger::validation
