#include "ledger/simlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "ledger/errors.hpp"
#include "ledger/rng.hpp"

namespace ledger::simlab {

namespace {

constexpr const char* kPrefixes[] = {"Internal memo", "Email thread", "Meeting notes",
                                     "Status report", "Board briefing", "Team update"};

const std::unordered_set<std::string>& stop_words() {
    static const std::unordered_set<std::string> words = {
        "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "is",
        "it", "of", "on", "or", "the", "to", "was", "were", "with", "our", "we", "this"};
    return words;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::size_t ground_truth_total(const SimScenario& scenario) {
    std::size_t total = 0;
    for (const auto& t : scenario.tasks) total += t.ground_truth_docs;
    return total;
}

const TaskSpec& find_task(const SimScenario& scenario, const std::string& id) {
    for (const auto& t : scenario.tasks) {
        if (t.id == id) return t;
    }
    throw DomainError("task", "scenario has no task '" + id + "'");
}

std::string filler(Rng& rng, const std::vector<std::string>& vocab, std::size_t count) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < count; ++i) words.push_back(vocab[rng.below(vocab.size())]);
    return join(words, " ");
}

doctrine::Verdict opposite(doctrine::Verdict v) {
    return v == doctrine::Verdict::established ? doctrine::Verdict::refuted
                                               : doctrine::Verdict::established;
}

}  // namespace

const char* to_string(DocTag tag) {
    switch (tag) {
        case DocTag::literal_match: return "literal_match";
        case DocTag::euphemism: return "euphemism";
        case DocTag::distractor: return "distractor";
    }
    return "distractor";
}

const char* to_string(Company company) {
    return company == Company::legacy ? "LegacyCorp" : "ModernCorp";
}

const char* to_string(EvidenceStyle style) {
    return style == EvidenceStyle::literal ? "literal" : "euphemism";
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

void validate(const SimScenario& scenario) {
    metrics::validate(scenario.policy);
    if (scenario.tasks.empty()) throw DomainError("tasks", "scenario defines no tasks");
    if (!(scenario.legacy.c_per_doc >= 0.0)) throw DomainError("c_per_doc", "must be non-negative");
    if (!(scenario.modern.a >= 0.0) || !(scenario.modern.b >= 0.0)) {
        throw DomainError("modern_cost", "a and b must be non-negative");
    }
    if (scenario.modern.top_k == 0) throw DomainError("top_k", "must be at least 1");
    if (!(scenario.verifier_error >= 0.0 && scenario.verifier_error <= 1.0)) {
        throw DomainError("verifier_error", "must lie in [0,1]");
    }
    if (!(scenario.jitter_sigma >= 0.0)) throw DomainError("jitter_sigma", "must be non-negative");
    if (!(scenario.corpus.euphemism_ratio >= 0.0 && scenario.corpus.euphemism_ratio <= 1.0)) {
        throw DomainError("euphemism_ratio", "must lie in [0,1]");
    }
    if (scenario.distractor_vocabulary.empty()) {
        throw DomainError("distractor_vocabulary", "must not be empty");
    }
    if (scenario.corpus.size < ground_truth_total(scenario)) {
        throw DomainError("size", "corpus smaller than the number of ground-truth documents");
    }

    const Embedder embedder(scenario.synonyms);
    std::set<std::string> reserved;  // tokens that must never occur in distractors
    std::set<std::string> ids;
    for (const auto& task : scenario.tasks) {
        if (!ids.insert(task.id).second) throw DomainError("tasks", "duplicate task id " + task.id);
        if (task.keywords.empty()) throw DomainError("keywords", task.id + " has no keywords");
        if (task.evidence.empty()) throw DomainError("evidence", task.id + " has no evidence text");
        if (task.ground_truth_docs == 0) {
            throw DomainError("ground_truth_docs", task.id + " needs at least one document");
        }
        if (tokenize(task.concept_query).empty()) {
            throw DomainError("concept_query", task.id + " has an empty concept query");
        }
        std::set<std::string> keywords;
        for (const auto& k : task.keywords) {
            const auto toks = tokenize(k);
            if (toks.size() != 1) throw DomainError("keywords", "'" + k + "' is not a single token");
            for (const char* prefix : kPrefixes) {
                const auto prefix_tokens = tokenize(prefix);
                if (std::count(prefix_tokens.begin(), prefix_tokens.end(), toks.front())) {
                    throw DomainError("keywords", "'" + k + "' occurs in every document header");
                }
            }
            keywords.insert(toks.front());
            reserved.insert(toks.front());
        }
        for (const auto& tok : embedder.canonical_tokens(task.concept_query)) reserved.insert(tok);
        for (const auto& sentence : task.evidence) {
            const auto toks = tokenize(sentence);
            const bool literal = std::any_of(toks.begin(), toks.end(),
                                             [&](const std::string& t) { return keywords.count(t); });
            if (task.style == EvidenceStyle::literal && !literal) {
                throw DomainError("evidence", task.id + ": literal evidence lacks every keyword: " +
                                                  sentence);
            }
            if (task.style == EvidenceStyle::euphemism && literal) {
                throw DomainError("evidence", task.id + ": euphemistic evidence contains a keyword: " +
                                                  sentence);
            }
        }
    }
    for (const auto& word : scenario.distractor_vocabulary) {
        for (const auto& tok : embedder.canonical_tokens(word)) {
            if (reserved.count(tok)) {
                throw DomainError("distractor_vocabulary", "'" + word + "' overlaps a task term");
            }
        }
    }
    for (const auto& phrase : scenario.decoy_phrases) {
        for (const auto& tok : embedder.canonical_tokens(phrase)) {
            if (reserved.count(tok)) {
                throw DomainError("decoy_phrases", "'" + phrase + "' overlaps a task term");
            }
        }
    }
}

// ------------------------------------------------------------------- corpus

Corpus generate_corpus(const SimScenario& scenario, const CorpusSpec& spec, std::uint64_t seed) {
    const std::size_t required = ground_truth_total(scenario);
    if (spec.size < required) {
        throw DomainError("size", "corpus of " + std::to_string(spec.size) + " cannot hold " +
                                      std::to_string(required) + " ground-truth documents");
    }
    if (scenario.distractor_vocabulary.empty()) {
        throw DomainError("distractor_vocabulary", "must not be empty");
    }
    Rng rng(seed);
    const auto& vocab = scenario.distractor_vocabulary;
    auto prefix = [&] { return std::string(kPrefixes[rng.below(std::size(kPrefixes))]); };

    std::vector<Document> docs;
    docs.reserve(spec.size);
    for (const auto& task : scenario.tasks) {
        for (std::size_t i = 0; i < task.ground_truth_docs; ++i) {
            Document doc;
            doc.text = prefix() + ": " + task.evidence[i % task.evidence.size()] + " " +
                       filler(rng, vocab, 2) + ".";
            doc.tags = {task.style == EvidenceStyle::literal ? DocTag::literal_match
                                                             : DocTag::euphemism};
            doc.ground_truth_for = {task.id};
            docs.push_back(std::move(doc));
        }
    }

    const std::size_t distractors = spec.size - required;
    const auto decoys = scenario.decoy_phrases.empty()
                            ? std::size_t{0}
                            : static_cast<std::size_t>(std::llround(
                                  spec.euphemism_ratio * static_cast<double>(distractors)));
    for (std::size_t i = 0; i < distractors; ++i) {
        Document doc;
        if (i < decoys) {
            doc.text = prefix() + ": " +
                       scenario.decoy_phrases[rng.below(scenario.decoy_phrases.size())] + " " +
                       filler(rng, vocab, 3) + ".";
            doc.tags = {DocTag::euphemism, DocTag::distractor};
        } else {
            doc.text = prefix() + ": " + filler(rng, vocab, 6 + rng.below(5)) + ".";
            doc.tags = {DocTag::distractor};
        }
        docs.push_back(std::move(doc));
    }

    rng.shuffle(docs.begin(), docs.end());
    const std::size_t width = std::max<std::size_t>(3, std::to_string(spec.size).size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto digits = std::to_string(i);
        docs[i].id = "doc-" + std::string(width - digits.size(), '0') + digits;
    }
    return {std::move(docs), seed};
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& doc : corpus.documents) {
        std::vector<std::string> tags;
        for (auto t : doc.tags) tags.emplace_back(to_string(t));
        out << doc.id << '\t' << doc.text << '\t' << join(tags, ",") << '\t'
            << join({doc.ground_truth_for.begin(), doc.ground_truth_for.end()}, ",") << '\n';
    }
}

// ---------------------------------------------------------------- embedding

SparseVector::SparseVector(std::vector<std::pair<std::uint32_t, double>> entries)
    : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end());
}

double SparseVector::norm() const { return std::sqrt(dot(*this)); }

double SparseVector::dot(const SparseVector& other) const {
    double sum = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            sum += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return sum;
}

Embedder::Embedder(std::map<std::string, std::string> synonyms) {
    for (const auto& [phrase, concept_phrase] : synonyms) {
        auto from = tokenize(phrase);
        if (from.empty()) continue;
        rules_.emplace_back(std::move(from), tokenize(concept_phrase));
    }
    // Longest phrase wins when rules overlap.
    std::stable_sort(rules_.begin(), rules_.end(), [](const auto& x, const auto& y) {
        return x.first.size() > y.first.size();
    });
}

std::vector<std::string> Embedder::canonical_tokens(const std::string& text) const {
    const auto tokens = tokenize(text);
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        bool matched = false;
        for (const auto& [from, to] : rules_) {
            if (i + from.size() <= tokens.size() &&
                std::equal(from.begin(), from.end(), tokens.begin() + static_cast<long>(i))) {
                out.insert(out.end(), to.begin(), to.end());
                i += from.size();
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (!stop_words().count(tokens[i])) out.push_back(tokens[i]);
        ++i;
    }
    return out;
}

SparseVector Embedder::embed(const std::string& text) const {
    const auto tokens = canonical_tokens(text);
    if (tokens.empty()) throw DomainError("text", "nothing to embed");
    std::map<std::uint32_t, double> counts;
    for (const auto& tok : tokens) {
        counts[static_cast<std::uint32_t>(fnv1a64(tok) % SparseVector::kDimension)] += 1.0;
    }
    double norm = 0.0;
    for (const auto& [idx, c] : counts) norm += c * c;
    norm = std::sqrt(norm);
    std::vector<std::pair<std::uint32_t, double>> entries;
    entries.reserve(counts.size());
    for (const auto& [idx, c] : counts) entries.emplace_back(idx, c / norm);
    return SparseVector(std::move(entries));
}

double cosine(const SparseVector& a, const SparseVector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

// ------------------------------------------------------------------ search

double legacy_cost(std::size_t corpus_size, const LegacyCostModel& model) {
    return model.c_per_doc * static_cast<double>(corpus_size);
}

double modern_cost(std::size_t corpus_size, const ModernCostModel& model) {
    if (corpus_size == 0) throw DomainError("corpus", "semantic search over an empty corpus");
    return model.a + model.b * std::log(static_cast<double>(corpus_size));
}

SearchResult keyword_search(const Corpus& corpus, const std::vector<std::string>& keywords,
                            const LegacyCostModel& model) {
    if (keywords.empty()) throw DomainError("keywords", "keyword list is empty");
    std::unordered_set<std::string> wanted;
    for (const auto& k : keywords) {
        for (auto& tok : tokenize(k)) wanted.insert(std::move(tok));
    }
    SearchResult result;
    for (const auto& doc : corpus.documents) {
        const auto toks = tokenize(doc.text);
        if (std::any_of(toks.begin(), toks.end(), [&](const std::string& t) { return wanted.count(t); })) {
            result.ids.push_back(doc.id);
        }
    }
    result.simulated_cost = legacy_cost(corpus.documents.size(), model);
    return result;
}

SemanticIndex::SemanticIndex(const Corpus& corpus, const Embedder& embedder) : embedder_(embedder) {
    ids_.reserve(corpus.documents.size());
    vectors_.reserve(corpus.documents.size());
    for (const auto& doc : corpus.documents) {
        ids_.push_back(doc.id);
        vectors_.push_back(embedder_.embed(doc.text));
    }
}

SearchResult SemanticIndex::search(const std::string& query, std::size_t k,
                                   const ModernCostModel& model) const {
    if (k == 0) throw DomainError("k", "must be at least 1");
    const auto q = embedder_.embed(query);
    std::vector<double> sims(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) sims[i] = q.dot(vectors_[i]);

    std::vector<std::size_t> order(ids_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return sims[a] > sims[b] || (sims[a] == sims[b] && ids_[a] < ids_[b]);
                      });
    SearchResult result;
    for (std::size_t i = 0; i < take; ++i) {
        result.ids.push_back(ids_[order[i]]);
        result.similarities.push_back(sims[order[i]]);
    }
    result.simulated_cost = modern_cost(ids_.size(), model);
    return result;
}

double retrieval_error(const Corpus& corpus, const std::vector<std::string>& hits,
                       const std::string& task_id) {
    const std::unordered_set<std::string> found(hits.begin(), hits.end());
    for (const auto& doc : corpus.documents) {
        if (doc.ground_truth_for.count(task_id) && !found.count(doc.id)) return 1.0;
    }
    return 0.0;
}

doctrine::Verdict simulated_verifier(const Corpus& corpus, const std::vector<std::string>& hits,
                                     const TaskSpec& task, double eps_ver, std::uint64_t seed) {
    if (!(eps_ver >= 0.0 && eps_ver <= 1.0)) throw DomainError("eps_ver", "must lie in [0,1]");
    const std::unordered_set<std::string> found(hits.begin(), hits.end());
    const bool has_evidence =
        std::any_of(corpus.documents.begin(), corpus.documents.end(), [&](const Document& d) {
            return d.ground_truth_for.count(task.id) && found.count(d.id);
        });
    if (!has_evidence) return doctrine::Verdict::inconclusive;
    Rng rng(seed);
    return rng.bernoulli(eps_ver) ? opposite(task.polarity) : task.polarity;
}

// --------------------------------------------------------------- experiments

double jitter_factor(double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw DomainError("jitter_sigma", "must be non-negative");
    if (sigma == 0.0) return 1.0;
    Rng rng(seed);
    return std::max(1.0 + sigma * rng.normal(), 1e-3);
}

metrics::PipelineSpec pipeline_for(const RunResult& run) {
    metrics::PipelineSpec spec;
    spec.id = std::string(run.company == Company::legacy ? "legacy" : "modern") + ":" + run.task_id;
    spec.kind = run.company == Company::legacy ? metrics::PipelineKind::retrieval_only
                                               : metrics::PipelineKind::full;
    spec.expected_cost = run.simulated_time;
    spec.errors = {run.eps_ret, 0.0, run.eps_ver};
    return spec;
}

std::vector<RunResult> run_docket(const SimScenario& scenario, const Corpus& corpus,
                                  const RunOptions& options) {
    validate(scenario);
    const Embedder embedder(scenario.synonyms);
    const SemanticIndex index(corpus, embedder);

    auto finish = [&](RunResult run) {
        const auto spec = pipeline_for(run);
        run.eps_tot = metrics::total_error(spec);
        run.score = metrics::pipeline_score(spec, scenario.policy);
        return run;
    };

    std::vector<RunResult> results;
    for (std::size_t t = 0; t < scenario.tasks.size(); ++t) {
        const auto& task = scenario.tasks[t];
        const auto stream = static_cast<std::uint64_t>(4 * t);

        const auto legacy = keyword_search(corpus, task.keywords, scenario.legacy);
        RunResult l{Company::legacy, task.id, task.label,
                    legacy.simulated_cost *
                        jitter_factor(options.jitter_sigma, derive_seed(options.run_seed, stream)),
                    retrieval_error(corpus, legacy.ids, task.id), 0.0, 0.0, 0.0};
        results.push_back(finish(l));

        const auto modern = index.search(task.concept_query, scenario.modern.top_k, scenario.modern);
        std::vector<std::string> hits;
        for (std::size_t i = 0; i < modern.ids.size(); ++i) {
            if (modern.similarities[i] >= scenario.modern.min_similarity) hits.push_back(modern.ids[i]);
        }
        const auto verdict = simulated_verifier(corpus, hits, task, scenario.verifier_error,
                                                derive_seed(options.run_seed, stream + 2));
        RunResult m{Company::modern, task.id, task.label,
                    modern.simulated_cost *
                        jitter_factor(options.jitter_sigma, derive_seed(options.run_seed, stream + 1)),
                    retrieval_error(corpus, hits, task.id), verdict == task.polarity ? 0.0 : 1.0,
                    0.0, 0.0};
        results.push_back(finish(m));
    }
    return results;
}

std::vector<RunResult> run_docket(const SimScenario& scenario) {
    return run_docket(scenario, generate_corpus(scenario), {0.0, scenario.seed});
}

double capacity_from_runs(const std::vector<RunResult>& results, Company company,
                          const metrics::PolicyParams& policy) {
    metrics::Docket docket;
    for (const auto& run : results) {
        const bool seen = std::any_of(docket.propositions.begin(), docket.propositions.end(),
                                      [&](const metrics::Proposition& p) { return p.id == run.task_id; });
        if (!seen) docket.propositions.push_back({run.task_id, run.label, 1.0, policy.theta_c});
        if (run.company == company || company == Company::modern) {
            docket.pipelines[run.task_id].push_back(pipeline_for(run));
        }
    }
    if (docket.propositions.empty()) throw DomainError("results", "no runs to aggregate");
    return metrics::capacity_index(docket, policy);
}

Summary summarize(std::vector<double> values) {
    if (values.empty()) throw DomainError("values", "summary of an empty sample");
    std::sort(values.begin(), values.end());
    auto quantile = [&](double p) {
        const double h = static_cast<double>(values.size() - 1) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back()};
}

MonteCarloResult monte_carlo(const SimScenario& scenario, std::size_t runs, double jitter_sigma) {
    if (runs == 0) throw DomainError("runs", "must be at least 1");
    if (!(jitter_sigma >= 0.0)) throw DomainError("jitter_sigma", "must be non-negative");
    const auto corpus = generate_corpus(scenario);

    MonteCarloResult mc;
    for (std::size_t r = 0; r < runs; ++r) {
        mc.runs.push_back(run_docket(scenario, corpus, {jitter_sigma, derive_seed(scenario.seed, r)}));
    }
    for (std::size_t row = 0; row < mc.runs.front().size(); ++row) {
        const auto& first = mc.runs.front()[row];
        CellDistribution cell{first.company, first.task_id, first.label, {}, {}};
        for (const auto& run : mc.runs) cell.scores.push_back(run[row].score);
        cell.summary = summarize(cell.scores);
        mc.cells.push_back(std::move(cell));
    }
    return mc;
}

std::vector<ScalePoint> scalability_sweep(const SimScenario& scenario,
                                          const std::vector<std::size_t>& sizes) {
    validate(scenario);
    if (sizes.empty()) throw DomainError("sizes", "no corpus sizes to sweep");
    const std::size_t minimum = ground_truth_total(scenario);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < minimum) {
            throw DomainError("sizes", std::to_string(sizes[i]) + " is below the minimum corpus of " +
                                           std::to_string(minimum));
        }
        if (i && sizes[i] <= sizes[i - 1]) throw DomainError("sizes", "must be strictly ascending");
    }
    const auto& task = find_task(scenario, scenario.sweep_task);
    const Embedder embedder(scenario.synonyms);

    std::vector<ScalePoint> curve;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const auto corpus = generate_corpus(scenario, {sizes[i], scenario.corpus.euphemism_ratio},
                                            derive_seed(scenario.seed, 10000 + i));
        const auto legacy = keyword_search(corpus, task.keywords, scenario.legacy);
        const SemanticIndex index(corpus, embedder);
        const auto modern = index.search(task.concept_query, scenario.modern.top_k, scenario.modern);
        const auto stream = static_cast<std::uint64_t>(20000 + 2 * i);
        curve.push_back(
            {sizes[i],
             legacy.simulated_cost *
                 jitter_factor(scenario.jitter_sigma, derive_seed(scenario.seed, stream)),
             modern.simulated_cost *
                 jitter_factor(scenario.jitter_sigma, derive_seed(scenario.seed, stream + 1))});
    }
    return curve;
}

std::vector<double> expand_grid(const EpsGrid& grid) {
    if (!(grid.step > 0.0)) throw DomainError("step", "grid step must be positive");
    if (!(grid.start >= 0.0 && grid.stop <= 1.0 && grid.start <= grid.stop)) {
        throw DomainError("eps_grid", "grid must satisfy 0 <= start <= stop <= 1");
    }
    const auto count = static_cast<std::size_t>(std::floor((grid.stop - grid.start) / grid.step + 1e-9)) + 1;
    std::vector<double> values;
    values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double v = grid.start + static_cast<double>(i) * grid.step;
        values.push_back(std::round(v * 1e12) / 1e12);
    }
    return values;
}

SensitivityCurve sensitivity_sweep(const SimScenario& scenario, const EpsGrid& grid) {
    metrics::validate(scenario.policy);
    SensitivityCurve curve;
    curve.modern_time = modern_cost(scenario.corpus.size, scenario.modern);
    for (const double eps : expand_grid(grid)) {
        metrics::PipelineSpec spec{"modern", metrics::PipelineKind::full, curve.modern_time,
                                   {0.0, 0.0, eps}, metrics::Independent{}};
        const double score = metrics::pipeline_score(spec, scenario.policy);
        curve.points.push_back({eps, score});
        if (!curve.crossover && score < scenario.policy.theta_c) curve.crossover = eps;
    }
    return curve;
}

}  // namespace ledger::simlab
