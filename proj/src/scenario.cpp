#include "ledger/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "default_scenario.hpp"
#include "yaml_util.hpp"

namespace ledger::simlab {

namespace {

TaskSpec parse_task(const yamlio::Reader& r, const YAML::Node& node) {
    r.expect_map(node, "task");
    r.expect_keys(node, {"id", "label", "proposition", "style", "polarity", "keywords",
                         "concept_query", "ground_truth_docs", "evidence"});
    TaskSpec task;
    task.id = r.require<std::string>(node, "id");
    task.label = r.get<std::string>(node, "label", task.id);
    task.proposition = r.get<std::string>(node, "proposition", "");
    task.keywords = r.list<std::string>(node, "keywords");
    task.concept_query = r.require<std::string>(node, "concept_query");
    task.evidence = r.list<std::string>(node, "evidence");
    task.ground_truth_docs = r.get<std::size_t>(node, "ground_truth_docs", task.ground_truth_docs);

    const auto style = r.get<std::string>(node, "style", "literal");
    if (style == "literal") {
        task.style = EvidenceStyle::literal;
    } else if (style == "euphemism") {
        task.style = EvidenceStyle::euphemism;
    } else {
        r.fail(node["style"], "style must be literal or euphemism");
    }
    try {
        task.polarity = doctrine::parse_verdict(r.get<std::string>(node, "polarity", "established"));
    } catch (const DomainError& e) {
        r.fail(node["polarity"], e.what());
    }
    return task;
}

}  // namespace

SimScenario parse_scenario(const std::string& text, const std::string& source) {
    const yamlio::Reader r(source);
    const auto root = r.load(text);
    r.expect_map(root, "scenario");
    r.expect_keys(root, {"name", "seed", "corpus", "legacy", "modern", "verifier_error",
                         "jitter_sigma", "runs", "policy", "sweep", "synonyms", "tasks",
                         "distractor_vocabulary", "decoy_phrases"});

    // Where each validated field lives, for diagnostics raised after parsing.
    std::map<std::string, YAML::Node> where;
    where["scenario"] = root;

    SimScenario s;
    s.name = r.get<std::string>(root, "name", s.name);
    s.seed = r.get<std::uint64_t>(root, "seed", s.seed);
    s.verifier_error = r.get(root, "verifier_error", s.verifier_error);
    s.jitter_sigma = r.get(root, "jitter_sigma", s.jitter_sigma);
    s.runs = r.get(root, "runs", s.runs);
    for (const char* k : {"verifier_error", "jitter_sigma", "tasks", "distractor_vocabulary",
                          "decoy_phrases"}) {
        if (root[k]) where[k] = root[k];
    }

    if (const auto corpus = root["corpus"]) {
        r.expect_map(corpus, "corpus");
        r.expect_keys(corpus, {"size", "euphemism_ratio"});
        s.corpus.size = r.get(corpus, "size", s.corpus.size);
        s.corpus.euphemism_ratio = r.get(corpus, "euphemism_ratio", s.corpus.euphemism_ratio);
        where["size"] = corpus["size"] ? corpus["size"] : corpus;
        where["euphemism_ratio"] = corpus["euphemism_ratio"] ? corpus["euphemism_ratio"] : corpus;
    }
    if (const auto legacy = root["legacy"]) {
        r.expect_map(legacy, "legacy");
        r.expect_keys(legacy, {"c_per_doc"});
        s.legacy.c_per_doc = r.get(legacy, "c_per_doc", s.legacy.c_per_doc);
        where["c_per_doc"] = legacy;
    }
    if (const auto modern = root["modern"]) {
        r.expect_map(modern, "modern");
        r.expect_keys(modern, {"a", "b", "top_k", "min_similarity"});
        s.modern.a = r.get(modern, "a", s.modern.a);
        s.modern.b = r.get(modern, "b", s.modern.b);
        s.modern.top_k = r.get(modern, "top_k", s.modern.top_k);
        s.modern.min_similarity = r.get(modern, "min_similarity", s.modern.min_similarity);
        where["modern_cost"] = modern;
        where["top_k"] = modern;
    }
    if (const auto policy = root["policy"]) s.policy = r.policy(policy);

    if (const auto sweep = root["sweep"]) {
        r.expect_map(sweep, "sweep");
        r.expect_keys(sweep, {"task", "sizes", "eps_grid"});
        s.sweep_task = r.get(sweep, "task", s.sweep_task);
        if (sweep["sizes"]) s.sweep_sizes = r.list<std::size_t>(sweep, "sizes");
        if (const auto grid = sweep["eps_grid"]) {
            r.expect_map(grid, "eps_grid");
            r.expect_keys(grid, {"start", "stop", "step"});
            s.eps_grid.start = r.get(grid, "start", s.eps_grid.start);
            s.eps_grid.stop = r.get(grid, "stop", s.eps_grid.stop);
            s.eps_grid.step = r.get(grid, "step", s.eps_grid.step);
            try {
                expand_grid(s.eps_grid);
            } catch (const DomainError& e) {
                r.fail(grid, e.what());
            }
        }
    }

    if (const auto synonyms = root["synonyms"]) {
        r.expect_map(synonyms, "synonyms");
        for (const auto& kv : synonyms) {
            s.synonyms[r.as<std::string>(kv.first, "synonym")] =
                r.as<std::string>(kv.second, "synonym");
        }
    }

    if (const auto tasks = root["tasks"]) {
        if (!tasks.IsSequence()) r.fail(tasks, "'tasks' must be a list");
        for (const auto& t : tasks) {
            s.tasks.push_back(parse_task(r, t));
            where["keywords"] = where["evidence"] = where["ground_truth_docs"] =
                where["concept_query"] = YAML::Node(t);
        }
    }
    s.distractor_vocabulary = r.list<std::string>(root, "distractor_vocabulary");
    s.decoy_phrases = r.list<std::string>(root, "decoy_phrases");

    try {
        validate(s);
    } catch (const DomainError& e) {
        auto it = where.find(e.field());
        r.fail(it != where.end() ? it->second : root, e.what());
    }
    if (s.runs == 0) r.fail(root["runs"] ? root["runs"] : root, "runs must be at least 1");
    return s;
}

SimScenario load_scenario(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        if (path == "appendix_a") return default_scenario();
        throw ParseError(path, 1, "cannot open scenario file");
    }
    std::ifstream in(path);
    if (!in) throw ParseError(path, 1, "cannot open scenario file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), path);
}

const std::string& default_scenario_text() {
    static const std::string text = kDefaultScenario;
    return text;
}

SimScenario default_scenario() { return parse_scenario(default_scenario_text(), "appendix_a"); }

}  // namespace ledger::simlab
