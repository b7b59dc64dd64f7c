#pragma once

// Seeded two-firm retrieval simulation. A template-generated corpus hides
// some evidence behind euphemisms; a keyword pipeline with linear cost and a
// semantic pipeline with logarithmic cost plus a simulated verifier are run
// over a four-proposition docket, and the metric layer scores every run.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ledger/doctrine.hpp"
#include "ledger/metrics.hpp"

namespace ledger::simlab {

enum class DocTag { literal_match, euphemism, distractor };

struct Document {
    std::string id;
    std::string text;
    std::set<DocTag> tags;
    std::set<std::string> ground_truth_for;  // task ids
};

struct Corpus {
    std::vector<Document> documents;
    std::uint64_t seed = 0;
};

enum class EvidenceStyle { literal, euphemism };

struct TaskSpec {
    std::string id;
    std::string label;  // doctrine column in result tables
    std::string proposition;
    std::vector<std::string> keywords;
    std::string concept_query;
    std::vector<std::string> evidence;  // sentences used for ground-truth documents
    EvidenceStyle style = EvidenceStyle::literal;
    std::size_t ground_truth_docs = 2;
    doctrine::Verdict polarity = doctrine::Verdict::established;
};

struct CorpusSpec {
    std::size_t size = 62;
    double euphemism_ratio = 0.1;  // share of distractors written as unrelated euphemisms
};

struct LegacyCostModel {
    double c_per_doc = 0.0952;  // seconds per scanned document
};

/// cost = a + b * ln(n).
struct ModernCostModel {
    double a = 1.85;
    double b = 0.05;
    std::size_t top_k = 5;
    double min_similarity = 0.2;  // hits below this cosine are not retrieved
};

struct EpsGrid {
    double start = 0.0;
    double stop = 0.5;
    double step = 0.01;
};

struct SimScenario {
    std::string name = "appendix_a";
    std::uint64_t seed = 42;
    CorpusSpec corpus;
    std::vector<TaskSpec> tasks;
    LegacyCostModel legacy;
    ModernCostModel modern;
    double verifier_error = 0.0;
    double jitter_sigma = 0.02;  // relative, multiplicative Gaussian
    metrics::PolicyParams policy;
    std::map<std::string, std::string> synonyms;  // euphemism phrase -> concept phrase
    std::vector<std::string> distractor_vocabulary;
    std::vector<std::string> decoy_phrases;
    std::vector<std::size_t> sweep_sizes = {60, 100, 200, 400, 600, 800, 1000};
    std::string sweep_task = "constructive";
    EpsGrid eps_grid;
    std::size_t runs = 15;
};

enum class Company { legacy, modern };

struct RunResult {
    Company company = Company::legacy;
    std::string task_id;
    std::string label;
    double simulated_time = 0.0;
    double eps_ret = 0.0;
    double eps_ver = 0.0;
    double eps_tot = 0.0;
    double score = 0.0;
};

const char* to_string(DocTag tag);
const char* to_string(Company company);
const char* to_string(EvidenceStyle style);

void validate(const SimScenario& scenario);

/// Lower-case alphanumeric tokens.
std::vector<std::string> tokenize(const std::string& text);

// ------------------------------------------------------------------- corpus

Corpus generate_corpus(const SimScenario& scenario, const CorpusSpec& spec, std::uint64_t seed);
inline Corpus generate_corpus(const SimScenario& scenario) {
    return generate_corpus(scenario, scenario.corpus, scenario.seed);
}

/// One tab-separated record per line: id, text, tags, ground_truth_for.
void write_corpus(std::ostream& out, const Corpus& corpus);

// ---------------------------------------------------------------- embedding

class SparseVector {
public:
    static constexpr std::uint32_t kDimension = 1u << 20;

    SparseVector() = default;
    explicit SparseVector(std::vector<std::pair<std::uint32_t, double>> entries);

    const std::vector<std::pair<std::uint32_t, double>>& entries() const { return entries_; }
    double norm() const;
    double dot(const SparseVector& other) const;

private:
    std::vector<std::pair<std::uint32_t, double>> entries_;  // sorted by index
};

/// Hashed bag of tokens in a fixed 2^20-dimensional space. Multi-token
/// euphemisms are rewritten to their concept phrase before hashing, so
/// "market harmony" lands on the same support as "price fixing".
class Embedder {
public:
    explicit Embedder(std::map<std::string, std::string> synonyms = {});

    /// L2-normalised embedding. Throws DomainError on text with no tokens.
    SparseVector embed(const std::string& text) const;

    /// Tokens after synonym rewriting and stop-word removal.
    std::vector<std::string> canonical_tokens(const std::string& text) const;

private:
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> rules_;
};

double cosine(const SparseVector& a, const SparseVector& b);

// ------------------------------------------------------------------ search

struct SearchResult {
    std::vector<std::string> ids;
    std::vector<double> similarities;  // semantic search only
    double simulated_cost = 0.0;
};

/// Documents containing any keyword as a token, in corpus order. Cost is
/// c_per_doc * |corpus|.
SearchResult keyword_search(const Corpus& corpus, const std::vector<std::string>& keywords,
                            const LegacyCostModel& model);

class SemanticIndex {
public:
    SemanticIndex(const Corpus& corpus, const Embedder& embedder);

    /// Exact top-k by cosine, ties by id; k is clamped to the corpus size.
    /// Cost is a + b * ln |corpus|.
    SearchResult search(const std::string& query, std::size_t k, const ModernCostModel& model) const;

    std::size_t size() const { return ids_.size(); }

private:
    Embedder embedder_;
    std::vector<std::string> ids_;
    std::vector<SparseVector> vectors_;
};

double legacy_cost(std::size_t corpus_size, const LegacyCostModel& model);
double modern_cost(std::size_t corpus_size, const ModernCostModel& model);

/// 1 if any ground-truth document of the task is missing from `hits`.
double retrieval_error(const Corpus& corpus, const std::vector<std::string>& hits,
                       const std::string& task_id);

/// Ground-truth verdict with probability 1 - eps_ver, the opposite verdict
/// otherwise; inconclusive when the hits contain no ground-truth document.
doctrine::Verdict simulated_verifier(const Corpus& corpus, const std::vector<std::string>& hits,
                                     const TaskSpec& task, double eps_ver, std::uint64_t seed);

// --------------------------------------------------------------- experiments

/// Multiplicative Gaussian jitter factor max(1 + sigma z, 1e-3).
double jitter_factor(double sigma, std::uint64_t seed);

struct RunOptions {
    double jitter_sigma = 0.0;
    std::uint64_t run_seed = 0;
};

/// Both companies on every task of the docket, legacy rows first per task.
std::vector<RunResult> run_docket(const SimScenario& scenario, const Corpus& corpus,
                                  const RunOptions& options = {});
std::vector<RunResult> run_docket(const SimScenario& scenario);

/// The pipeline a run represents; score == pipeline_score(pipeline_for(run)).
metrics::PipelineSpec pipeline_for(const RunResult& run);

/// Capacity index of one company over the docket. The modern firm also has
/// the legacy pipeline available, so its organisational score is the better
/// of the two.
double capacity_from_runs(const std::vector<RunResult>& results, Company company,
                          const metrics::PolicyParams& policy);

struct Summary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Linear-interpolation quantiles over a non-empty sample.
Summary summarize(std::vector<double> values);

struct CellDistribution {
    Company company = Company::legacy;
    std::string task_id;
    std::string label;
    std::vector<double> scores;  // one per run, in run order
    Summary summary;
};

struct MonteCarloResult {
    std::vector<std::vector<RunResult>> runs;
    std::vector<CellDistribution> cells;
};

MonteCarloResult monte_carlo(const SimScenario& scenario, std::size_t runs, double jitter_sigma);

struct ScalePoint {
    std::size_t n = 0;
    double legacy_cost = 0.0;
    double modern_cost = 0.0;
};

std::vector<ScalePoint> scalability_sweep(const SimScenario& scenario,
                                          const std::vector<std::size_t>& sizes);

struct SensitivityPoint {
    double eps_ver = 0.0;
    double score = 0.0;
};

struct SensitivityCurve {
    double modern_time = 0.0;
    std::vector<SensitivityPoint> points;
    std::optional<double> crossover;  // smallest eps with score < theta_c
};

std::vector<double> expand_grid(const EpsGrid& grid);

SensitivityCurve sensitivity_sweep(const SimScenario& scenario, const EpsGrid& grid);

}  // namespace ledger::simlab
