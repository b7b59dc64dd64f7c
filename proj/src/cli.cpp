#include "ledger/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "ledger/doctrine.hpp"
#include "ledger/errors.hpp"
#include "ledger/scenario.hpp"
#include "yaml_util.hpp"

namespace ledger::cli {

namespace {

using metrics::PipelineSpec;
using metrics::PolicyParams;
using validation::ValidationCertificate;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string f4(double v) {
    if (v == 0.0) v = 0.0;  // no "-0.0000"
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw ParseError(out_path, 0, "cannot write file");
    file << text;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::uint64_t> to_u64(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    errno = 0;
    const auto v = std::strtoull(s.c_str(), nullptr, 10);
    if (errno == ERANGE) return std::nullopt;
    return v;
}

// Numbered, non-blank, non-comment lines of a CSV file.
std::vector<std::pair<std::size_t, std::vector<std::string>>> csv_rows(const std::string& text) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        rows.emplace_back(number, split(t, ','));
    }
    return rows;
}

// ------------------------------------------------------------------ options

struct Globals {
    std::string policy_file;
    std::optional<double> theta;
    std::optional<double> tau_star;
    std::optional<double> delta;
    std::optional<std::uint64_t> seed;
    std::string out;
};

PolicyParams resolve_policy(const Globals& g, PolicyParams base = {}) {
    if (!g.policy_file.empty()) {
        const yamlio::Reader r(g.policy_file);
        const auto root = r.load(read_file(g.policy_file));
        r.expect_map(root, "policy file");
        base = r.policy(root["policy"] ? root["policy"] : root, base);
    }
    if (g.theta) base.theta_c = *g.theta;
    if (g.tau_star) base.tau_star = *g.tau_star;
    if (g.delta) base.delta = *g.delta;
    try {
        metrics::validate(base);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    return base;
}

std::uint64_t resolve_seed(const Globals& g, std::uint64_t scenario_seed) {
    if (g.seed) return *g.seed;
    if (const char* env = std::getenv("EPISTEMIC_LEDGER_SEED")) {
        const auto v = to_u64(trim(env));
        if (!v) throw UsageError(std::string("EPISTEMIC_LEDGER_SEED is not an unsigned integer: ") + env);
        return *v;
    }
    return scenario_seed;
}

CLI::Validator open_unit(const char* name) {
    return CLI::Validator(
        [name](std::string& s) -> std::string {
            const auto v = to_double(s);
            if (!v || !(*v > 0.0 && *v < 1.0)) return std::string(name) + " must lie in (0,1)";
            return {};
        },
        "(0,1)");
}

CLI::Validator closed_unit(const char* name) {
    return CLI::Validator(
        [name](std::string& s) -> std::string {
            const auto v = to_double(s);
            if (!v || !(*v >= 0.0 && *v <= 1.0)) return std::string(name) + " must lie in [0,1]";
            return {};
        },
        "[0,1]");
}

CLI::Validator positive(const char* name) {
    return CLI::Validator(
        [name](std::string& s) -> std::string {
            const auto v = to_double(s);
            if (!v || !(*v > 0.0)) return std::string(name) + " must be positive";
            return {};
        },
        "POSITIVE");
}

// -------------------------------------------------------------------- score

PipelineSpec pipeline_from_row(const std::string& file, std::size_t line,
                               const std::vector<std::string>& f) {
    if (f.size() != 6 && f.size() != 7) {
        throw ParseError(file, line, "expected id,kind,cost,eps_ret,eps_gen,eps_ver[,joint]");
    }
    PipelineSpec p;
    p.id = f[0];
    if (p.id.empty()) throw ParseError(file, line, "empty pipeline id");
    try {
        p.kind = metrics::parse_pipeline_kind(f[1]);
    } catch (const DomainError& e) {
        throw ParseError(file, line, e.what());
    }
    auto num = [&](std::size_t i, const char* name) {
        const auto v = to_double(f[i]);
        if (!v) throw ParseError(file, line, std::string(name) + " is not a number: '" + f[i] + "'");
        return *v;
    };
    p.expected_cost = num(2, "cost");
    p.errors = {num(3, "eps_ret"), num(4, "eps_gen"), num(5, "eps_ver")};
    if (f.size() == 7 && !f[6].empty()) p.dependence = metrics::EmpiricalJoint{num(6, "joint")};
    try {
        metrics::validate(p);
    } catch (const DomainError& e) {
        throw ParseError(file, line, e.what());
    }
    return p;
}

int cmd_score(const std::string& file, const Globals& g, std::ostream& out) {
    const auto policy = resolve_policy(g);
    std::vector<PipelineSpec> pipelines;
    std::set<std::string> ids;
    const auto rows = csv_rows(read_file(file));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [line, fields] = rows[i];
        if (i == 0 && !fields.empty() && fields[0] == "id") continue;
        auto p = pipeline_from_row(file, line, fields);
        if (!ids.insert(p.id).second) throw ParseError(file, line, "duplicate pipeline id '" + p.id + "'");
        pipelines.push_back(std::move(p));
    }
    if (pipelines.empty()) throw PreconditionError(file + ": no pipelines to score");

    std::ostringstream report;
    report << "id,kind,cost,eps_tot,efficiency,score\n";
    for (const auto& p : pipelines) {
        report << p.id << ',' << metrics::to_string(p.kind) << ',' << f4(p.expected_cost) << ','
               << f4(metrics::total_error(p)) << ',' << f4(metrics::efficiency(p.expected_cost, policy.tau_star))
               << ',' << f4(metrics::pipeline_score(p, policy)) << '\n';
    }
    const auto best = metrics::org_score(pipelines, policy);
    report << "\norg_score,theta_c,knows,best_pipeline\n"
           << f4(best.value) << ',' << f4(policy.theta_c) << ','
           << (metrics::knowledge_predicate(best.value, policy.theta_c) ? "true" : "false") << ','
           << best.pipeline_id << '\n';
    emit(report.str(), g.out, out);
    return kOk;
}

// ------------------------------------------------------------- certificates

void append_bound(std::ostringstream& o, const char* prefix, const validation::ConfidenceBound& b) {
    o << prefix << "_point_estimate: " << f4(b.point_estimate) << '\n'
      << prefix << "_upper: " << f4(b.upper) << '\n'
      << prefix << "_method: " << validation::to_string(b.method) << '\n'
      << prefix << "_delta: " << f4(b.delta) << '\n'
      << prefix << "_sample_size: " << b.sample_size << '\n'
      << prefix << "_synthetic: " << (b.synthetic ? "true" : "false") << '\n';
}

validation::ConfidenceBound bound_from(const yamlio::Reader& r, const YAML::Node& node,
                                       const std::string& prefix) {
    auto key = [&](const char* suffix) { return prefix + suffix; };
    validation::ConfidenceBound b;
    b.point_estimate = r.require<double>(node, key("_point_estimate").c_str());
    b.upper = r.require<double>(node, key("_upper").c_str());
    const auto method_key = key("_method");
    try {
        b.method = validation::parse_bound_method(r.require<std::string>(node, method_key.c_str()));
    } catch (const DomainError& e) {
        r.fail(node[method_key], e.what());
    }
    b.delta = r.require<double>(node, key("_delta").c_str());
    b.sample_size = r.require<std::size_t>(node, key("_sample_size").c_str());
    b.synthetic = r.require<bool>(node, key("_synthetic").c_str());
    return b;
}

ValidationCertificate certificate_from(const yamlio::Reader& r, const YAML::Node& node) {
    r.expect_map(node, "certificate");
    std::vector<std::string> keys = {"pipeline_id", "kind", "measured_cost", "delta", "total_upper",
                                     "fold_strategy", "timestamp", "note"};
    for (const char* p : {"ret", "gen", "ver"}) {
        for (const char* s : {"_point_estimate", "_upper", "_method", "_delta", "_sample_size",
                              "_synthetic"}) {
            keys.push_back(std::string(p) + s);
        }
    }
    for (const auto& kv : node) {
        const auto k = kv.first.as<std::string>();
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            r.fail(kv.first, "unknown certificate key '" + k + "'");
        }
    }

    ValidationCertificate c;
    c.pipeline_id = r.require<std::string>(node, "pipeline_id");
    try {
        c.kind = metrics::parse_pipeline_kind(r.require<std::string>(node, "kind"));
    } catch (const DomainError& e) {
        r.fail(node["kind"], e.what());
    }
    c.measured_cost = r.require<double>(node, "measured_cost");
    c.delta = r.require<double>(node, "delta");
    c.ret_bound = bound_from(r, node, "ret");
    c.gen_bound = bound_from(r, node, "gen");
    c.ver_bound = bound_from(r, node, "ver");
    const double stored = r.require<double>(node, "total_upper");
    c.total_upper = metrics::total_error({c.ret_bound.upper, c.gen_bound.upper, c.ver_bound.upper});
    // Stored values carry four decimals; allow for the rounding of all four.
    if (std::abs(stored - c.total_upper) > 2e-4) {
        r.fail(node["total_upper"], "total_upper " + f4(stored) +
                                        " disagrees with the component bounds (" +
                                        f4(c.total_upper) + ")");
    }
    c.provenance.fold_strategy = r.get<std::string>(node, "fold_strategy", "holdout");
    c.provenance.timestamp = r.get<std::string>(node, "timestamp", "");
    c.provenance.note = r.get<std::string>(node, "note", "");
    try {
        validation::validate(c);
    } catch (const DomainError& e) {
        r.fail(node, e.what());
    }
    return c;
}

std::string utc_now() {
    const auto t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct CertifyOptions {
    std::string file;
    std::string pipeline_id = "pipeline";
    std::string kind = "full";
    double cost = 0.0;
    std::string method = "wilson";
    std::string timestamp;
    std::string fold_strategy = "holdout";
};

int cmd_certify(const CertifyOptions& o, const Globals& g, std::ostream& out) {
    const auto policy = resolve_policy(g);
    metrics::PipelineSpec pipeline;
    pipeline.id = o.pipeline_id;
    try {
        pipeline.kind = metrics::parse_pipeline_kind(o.kind);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }

    validation::EvalSets sets;
    const auto rows = csv_rows(read_file(o.file));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [line, f] = rows[i];
        if (i == 0 && !f.empty() && f[0] == "component") continue;
        if (f.size() != 3 && f.size() != 4) {
            throw ParseError(o.file, line, "expected component,predicted,actual[,loss]");
        }
        validation::LossRecord rec = validation::zero_one(f[1], f[2]);
        if (f.size() == 4 && !f[3].empty()) {
            const auto loss = to_double(f[3]);
            if (!loss || *loss < 0.0 || *loss > 1.0) {
                throw ParseError(o.file, line, "loss must be a number in [0,1]: '" + f[3] + "'");
            }
            rec.loss = *loss;
        }
        std::optional<std::vector<validation::LossRecord>>* slot = nullptr;
        if (f[0] == "retrieval") slot = &sets.retrieval;
        else if (f[0] == "generation") slot = &sets.generation;
        else if (f[0] == "verification") slot = &sets.verification;
        else throw ParseError(o.file, line, "unknown component '" + f[0] + "'");
        if (!*slot) slot->emplace();
        (*slot)->push_back(std::move(rec));
    }

    const auto method = validation::parse_bound_method(o.method);
    validation::Provenance prov{o.fold_strategy, o.timestamp.empty() ? utc_now() : o.timestamp, ""};
    ValidationCertificate cert;
    try {
        cert = validation::certify(pipeline, sets, o.cost, policy.delta, method, prov);
    } catch (const DomainError& e) {
        throw ParseError(o.file, 0, e.what());
    }

    const double s_lb = validation::lower_bound_score(cert, policy.tau_star);
    const bool pass = validation::plug_in_test(cert, policy.theta_c, policy.tau_star);
    const auto text = format_certificate(cert);
    if (g.out.empty()) {
        out << text;
    } else {
        emit(text, g.out, out);
    }
    out << "s_lb: " << f4(s_lb) << "\ntheta_c: " << f4(policy.theta_c)
        << "\nplug_in_test: " << (pass ? "pass" : "fail") << '\n';
    return kOk;
}

// ----------------------------------------------------------------- classify

struct Audit {
    PolicyParams policy;
    std::vector<metrics::Proposition> propositions;
    std::map<std::string, std::vector<PipelineSpec>> available;
    std::vector<doctrine::ExecutionRecord> executions;
};

PipelineSpec pipeline_from(const yamlio::Reader& r, const YAML::Node& node) {
    r.expect_map(node, "pipeline");
    r.expect_keys(node, {"id", "kind", "cost", "eps_ret", "eps_gen", "eps_ver", "joint"});
    PipelineSpec p;
    p.id = r.require<std::string>(node, "id");
    try {
        p.kind = metrics::parse_pipeline_kind(r.get<std::string>(node, "kind", "full"));
    } catch (const DomainError& e) {
        r.fail(node["kind"], e.what());
    }
    p.expected_cost = r.require<double>(node, "cost");
    p.errors = {r.get(node, "eps_ret", 0.0), r.get(node, "eps_gen", 0.0), r.get(node, "eps_ver", 0.0)};
    if (node["joint"]) p.dependence = metrics::EmpiricalJoint{r.as<double>(node["joint"], "joint")};
    try {
        metrics::validate(p);
    } catch (const DomainError& e) {
        r.fail(node, e.what());
    }
    return p;
}

Audit parse_audit(const std::string& file, const std::string& text, const Globals& g) {
    const yamlio::Reader r(file);
    const auto root = r.load(text);
    Audit audit;
    if (root.IsNull()) {
        audit.policy = resolve_policy(g);
        return audit;
    }
    r.expect_map(root, "audit");
    r.expect_keys(root, {"policy", "propositions", "executions"});
    audit.policy = resolve_policy(g, root["policy"] ? r.policy(root["policy"]) : PolicyParams{});

    if (const auto props = root["propositions"]) {
        if (!props.IsSequence()) r.fail(props, "'propositions' must be a list");
        for (const auto& node : props) {
            r.expect_map(node, "proposition");
            r.expect_keys(node, {"id", "description", "weight", "threshold", "available"});
            metrics::Proposition p;
            p.id = r.require<std::string>(node, "id");
            p.description = r.get<std::string>(node, "description", "");
            p.salience_weight = r.get(node, "weight", 1.0);
            p.threshold = r.get(node, "threshold", audit.policy.theta_c);
            try {
                metrics::validate(p);
            } catch (const DomainError& e) {
                r.fail(node, e.what());
            }
            if (audit.available.count(p.id)) r.fail(node["id"], "duplicate proposition id '" + p.id + "'");
            auto& list = audit.available[p.id];
            if (const auto avail = node["available"]) {
                if (!avail.IsSequence()) r.fail(avail, "'available' must be a list");
                std::set<std::string> ids;
                for (const auto& pn : avail) {
                    list.push_back(pipeline_from(r, pn));
                    if (!ids.insert(list.back().id).second) {
                        r.fail(pn, "duplicate pipeline id '" + list.back().id + "'");
                    }
                }
            }
            audit.propositions.push_back(std::move(p));
        }
    }

    if (const auto execs = root["executions"]) {
        if (!execs.IsSequence()) r.fail(execs, "'executions' must be a list");
        const auto base = std::filesystem::path(file).parent_path();
        for (const auto& node : execs) {
            r.expect_map(node, "execution");
            r.expect_keys(node, {"pipeline", "proposition", "executed", "outcome", "avoidance",
                                 "timestamp", "certificate", "certificate_file"});
            doctrine::ExecutionRecord rec;
            rec.pipeline_id = r.require<std::string>(node, "pipeline");
            rec.proposition_id = r.require<std::string>(node, "proposition");
            const auto it = audit.available.find(rec.proposition_id);
            if (it == audit.available.end()) {
                r.fail(node["proposition"], "unknown proposition id '" + rec.proposition_id + "'");
            }
            const bool listed = std::any_of(it->second.begin(), it->second.end(),
                                            [&](const PipelineSpec& p) { return p.id == rec.pipeline_id; });
            if (!listed) {
                r.fail(node["pipeline"], "pipeline '" + rec.pipeline_id +
                                             "' is not available for proposition '" +
                                             rec.proposition_id + "'");
            }
            rec.executed = r.get(node, "executed", true);
            rec.timestamp = r.get<std::string>(node, "timestamp", "");
            try {
                if (node["outcome"]) rec.outcome = doctrine::parse_verdict(r.as<std::string>(node["outcome"], "outcome"));
                rec.avoidance = doctrine::parse_avoidance(r.get<std::string>(node, "avoidance", "none"));
            } catch (const DomainError& e) {
                r.fail(node, e.what());
            }
            if (node["certificate"] && node["certificate_file"]) {
                r.fail(node, "give either certificate or certificate_file, not both");
            }
            if (const auto c = node["certificate"]) rec.certificate = certificate_from(r, c);
            if (const auto cf = node["certificate_file"]) {
                auto path = std::filesystem::path(r.as<std::string>(cf, "certificate_file"));
                if (path.is_relative()) path = base / path;
                rec.certificate = parse_certificate(read_file(path.string()), path.string());
            }
            if (rec.certificate && rec.certificate->pipeline_id != rec.pipeline_id) {
                r.fail(node, "certificate is for pipeline '" + rec.certificate->pipeline_id +
                                 "', execution names '" + rec.pipeline_id + "'");
            }
            try {
                doctrine::validate(rec);
            } catch (const DomainError& e) {
                r.fail(node, e.what());
            }
            audit.executions.push_back(std::move(rec));
        }
    }
    return audit;
}

std::string policy_line(const PolicyParams& p) {
    return "{tau_star: " + f4(p.tau_star) + ", theta_c: " + f4(p.theta_c) + ", delta: " + f4(p.delta) +
           ", theta_ak: " + f4(p.theta_ak) + ", theta_ck: " + f4(p.theta_ck) + ", theta_r: " +
           f4(p.theta_r) + ", theta_neg: " + f4(p.theta_neg) + "}";
}

int cmd_classify(const std::string& file, const Globals& g, std::ostream& out) {
    const auto text = read_file(file);
    const auto audit = parse_audit(file, text, g);
    const auto& policy = audit.policy;

    std::ostringstream o;
    o << "# model classification; not a legal determination\n"
      << "tool: epistemic-ledger " << kVersion << '\n'
      << "input: " << std::filesystem::path(file).filename().string() << '\n'
      << "input_hash: " << hex64(fnv1a64(text)) << '\n'
      << "policy_hash: " << hex64(fnv1a64(policy_line(policy))) << '\n'
      << "seed: none\n"
      << "policy: " << policy_line(policy) << '\n';

    if (audit.propositions.empty()) {
        o << "capacity: null\npropositions: []\n";
        emit(o.str(), g.out, out);
        return kOk;
    }

    metrics::Docket docket{audit.propositions, audit.available};
    std::map<std::string, std::vector<ValidationCertificate>> certs;
    for (const auto& e : audit.executions) {
        if (e.executed && e.certificate) certs[e.proposition_id].push_back(*e.certificate);
    }
    double capacity = 0.0;
    double lower = 0.0;
    try {
        capacity = metrics::capacity_index(docket, policy);
        lower = validation::lower_bound_capacity(docket, certs, policy);
    } catch (const DomainError& e) {
        throw ParseError(file, 0, e.what());
    }
    o << "capacity:\n  point: " << f4(capacity) << "\n  lower_bound: " << f4(lower) << '\n'
      << "propositions:\n";

    for (const auto& prop : audit.propositions) {
        const auto& avail = audit.available.at(prop.id);
        o << "  - id: " << prop.id << '\n'
          << "    weight: " << f4(prop.salience_weight) << '\n'
          << "    threshold: " << f4(prop.threshold) << '\n';
        if (avail.empty()) {
            o << "    org_score: null\n    best_pipeline: null\n    knows: false\n    frontier: []\n";
        } else {
            const auto best = metrics::org_score(avail, policy);
            o << "    org_score: " << f4(best.value) << '\n'
              << "    best_pipeline: " << best.pipeline_id << '\n'
              << "    knows: " << (best.value >= prop.threshold ? "true" : "false") << '\n'
              << "    frontier:\n";
            for (const auto& pt : metrics::epistemic_frontier(avail)) {
                o << "      - {pipeline: " << pt.pipeline_id << ", cost: " << f4(pt.cost)
                  << ", total_error: " << f4(pt.total_error) << "}\n";
            }
        }
        std::ostringstream cert_lines;
        for (const auto& e : audit.executions) {
            if (e.proposition_id != prop.id || !e.certificate) continue;
            cert_lines << "      - {pipeline: " << e.pipeline_id
                       << ", total_upper: " << f4(e.certificate->total_upper)
                       << ", s_lb: " << f4(validation::lower_bound_score(*e.certificate, policy.tau_star))
                       << ", plug_in_test: "
                       << (validation::plug_in_test(*e.certificate, policy.theta_c, policy.tau_star) ? "pass" : "fail")
                       << "}\n";
        }
        const auto certs_text = cert_lines.str();
        o << "    certificates:" << (certs_text.empty() ? " []\n" : "\n" + certs_text);

        const auto finding = doctrine::classify(prop, avail, audit.executions, capacity, policy);
        o << "    finding:\n      primary: "
          << (finding.primary ? doctrine::to_string(*finding.primary) : "none") << "\n      applicable: [";
        bool first = true;
        for (auto d : finding.applicable) {
            o << (first ? "" : ", ") << doctrine::to_string(d);
            first = false;
        }
        o << "]\n      rationale:" << (finding.rationale.empty() ? " []\n" : "\n");
        for (const auto& t : finding.rationale) {
            o << "        - {doctrine: " << doctrine::to_string(t.doctrine) << ", detail: " << quote(t.detail)
              << "}\n";
        }
    }
    emit(o.str(), g.out, out);
    return kOk;
}

// ------------------------------------------------------------ simlab output

simlab::SimScenario scenario_with_seed(const std::string& name, const Globals& g) {
    auto scenario = simlab::load_scenario(name);
    scenario.seed = resolve_seed(g, scenario.seed);
    return scenario;
}

int cmd_simulate(const std::string& scenario_name, std::optional<std::size_t> runs,
                 const std::string& corpus_out, const Globals& g, std::ostream& out) {
    auto scenario = scenario_with_seed(scenario_name, g);
    if (g.policy_file.size() || g.theta || g.tau_star || g.delta) {
        scenario.policy = resolve_policy(g, scenario.policy);
    }
    const auto corpus = simlab::generate_corpus(scenario);
    if (!corpus_out.empty()) {
        std::ostringstream c;
        simlab::write_corpus(c, corpus);
        emit(c.str(), corpus_out, out);
    }
    const auto results = simlab::run_docket(scenario, corpus, {0.0, scenario.seed});

    std::ostringstream o;
    o << "company,doctrine,time,eps_ret,eps_ver,eps_tot,score\n";
    for (const auto& r : results) {
        o << simlab::to_string(r.company) << ',' << r.label << ',' << f4(r.simulated_time) << ','
          << f4(r.eps_ret) << ',' << f4(r.eps_ver) << ',' << f4(r.eps_tot) << ',' << f4(r.score) << '\n';
    }
    o << "\ncompany,capacity,theta_c\n";
    for (auto c : {simlab::Company::legacy, simlab::Company::modern}) {
        o << simlab::to_string(c) << ',' << f4(simlab::capacity_from_runs(results, c, scenario.policy))
          << ',' << f4(scenario.policy.theta_c) << '\n';
    }
    if (runs) {
        if (*runs == 0) throw UsageError("--runs must be at least 1");
        const auto mc = simlab::monte_carlo(scenario, *runs, scenario.jitter_sigma);
        o << "\ncompany,doctrine,runs,min,q1,median,q3,max\n";
        for (const auto& cell : mc.cells) {
            o << simlab::to_string(cell.company) << ',' << cell.label << ',' << cell.scores.size() << ','
              << f4(cell.summary.min) << ',' << f4(cell.summary.q1) << ',' << f4(cell.summary.median)
              << ',' << f4(cell.summary.q3) << ',' << f4(cell.summary.max) << '\n';
        }
    }
    emit(o.str(), g.out, out);
    return kOk;
}

simlab::EpsGrid parse_grid(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw UsageError("--eps-grid expects start:stop:step");
    simlab::EpsGrid grid;
    const auto a = to_double(parts[0]);
    const auto b = to_double(parts[1]);
    const auto c = to_double(parts[2]);
    if (!a || !b || !c) throw UsageError("--eps-grid expects numbers, got '" + text + "'");
    grid = {*a, *b, *c};
    try {
        simlab::expand_grid(grid);
    } catch (const DomainError& e) {
        throw UsageError(std::string("--eps-grid: ") + e.what());
    }
    return grid;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    for (const auto& p : split(text, ',')) {
        const auto v = to_u64(p);
        if (!v) throw UsageError("--sizes expects comma-separated integers, got '" + text + "'");
        sizes.push_back(static_cast<std::size_t>(*v));
    }
    return sizes;
}

int cmd_sweep(const std::string& kind, const std::string& scenario_name, const std::string& grid_text,
              const std::string& sizes_text, const Globals& g, std::ostream& out) {
    auto scenario = scenario_with_seed(scenario_name, g);
    if (g.policy_file.size() || g.theta || g.tau_star || g.delta) {
        scenario.policy = resolve_policy(g, scenario.policy);
    }
    std::ostringstream o;
    if (kind == "sensitivity") {
        const auto grid = grid_text.empty() ? scenario.eps_grid : parse_grid(grid_text);
        const auto curve = simlab::sensitivity_sweep(scenario, grid);
        o << "eps_ver,score,below_threshold,crossover\n";
        for (const auto& p : curve.points) {
            const bool cross = curve.crossover && *curve.crossover == p.eps_ver;
            o << f4(p.eps_ver) << ',' << f4(p.score) << ',' << (p.score < scenario.policy.theta_c ? 1 : 0)
              << ',' << (cross ? 1 : 0) << '\n';
        }
    } else {
        const auto sizes = sizes_text.empty() ? scenario.sweep_sizes : parse_sizes(sizes_text);
        std::vector<simlab::ScalePoint> curve;
        try {
            curve = simlab::scalability_sweep(scenario, sizes);
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
        o << "n,legacy_cost,modern_cost\n";
        for (const auto& p : curve) {
            o << p.n << ',' << f4(p.legacy_cost) << ',' << f4(p.modern_cost) << '\n';
        }
    }
    emit(o.str(), g.out, out);
    return kOk;
}

}  // namespace

std::string format_certificate(const ValidationCertificate& cert) {
    std::ostringstream o;
    o << "pipeline_id: " << quote(cert.pipeline_id) << '\n'
      << "kind: " << metrics::to_string(cert.kind) << '\n'
      << "measured_cost: " << f4(cert.measured_cost) << '\n'
      << "delta: " << f4(cert.delta) << '\n'
      << "total_upper: " << f4(cert.total_upper) << '\n';
    append_bound(o, "ret", cert.ret_bound);
    append_bound(o, "gen", cert.gen_bound);
    append_bound(o, "ver", cert.ver_bound);
    o << "fold_strategy: " << quote(cert.provenance.fold_strategy) << '\n'
      << "timestamp: " << quote(cert.provenance.timestamp) << '\n'
      << "note: " << quote(cert.provenance.note) << '\n';
    return o.str();
}

ValidationCertificate parse_certificate(const std::string& text, const std::string& source) {
    const yamlio::Reader r(source);
    return certificate_from(r, r.load(text));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Epistemic ledger: knowledge metrics, validation certificates and doctrine "
                 "classification for information pipelines.",
                 "epistemic-ledger"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string("epistemic-ledger ") + kVersion);
    app.footer(
        "Seed precedence: --seed, then the EPISTEMIC_LEDGER_SEED environment variable, then the "
        "scenario file's seed.\nExit codes: 0 ok, 2 usage, 3 input diagnostic, 4 precondition "
        "violated, 5 certification refused.");

    Globals g;
    app.add_option("--policy", g.policy_file, "YAML file with policy parameters")->check(CLI::ExistingFile);
    app.add_option("--theta", g.theta, "knowledge threshold theta_c")->check(closed_unit("--theta"));
    app.add_option("--tau-star", g.tau_star, "reference time in seconds")->check(positive("--tau-star"));
    app.add_option("--delta", g.delta, "confidence parameter")->check(open_unit("--delta"));
    app.add_option("--seed", g.seed, "master seed (overrides environment and scenario)");
    app.add_option("--out", g.out, "write the main output to this file");

    std::string score_file;
    auto* score = app.add_subcommand("score", "score pipelines from a CSV file");
    score->add_option("pipelines", score_file, "CSV: id,kind,cost,eps_ret,eps_gen,eps_ver[,joint]")
        ->required();

    CertifyOptions cert_opts;
    auto* certify = app.add_subcommand("certify", "issue a validation certificate from evaluation records");
    certify->add_option("records", cert_opts.file, "CSV: component,predicted,actual[,loss]")->required();
    certify->add_option("--method", cert_opts.method, "bound method")
        ->check(CLI::IsMember({"hoeffding", "wilson"}));
    certify->add_option("--pipeline-id", cert_opts.pipeline_id, "pipeline id");
    certify->add_option("--kind", cert_opts.kind, "retrieval_only | retrieval_generation | full")
        ->check(CLI::IsMember({"retrieval_only", "retrieval_generation", "full"}));
    certify->add_option("--cost", cert_opts.cost, "measured cost in seconds")->check(CLI::NonNegativeNumber);
    certify->add_option("--timestamp", cert_opts.timestamp, "ISO-8601 timestamp (default: now, UTC)");
    certify->add_option("--fold-strategy", cert_opts.fold_strategy, "fold plan descriptor");

    std::string audit_file;
    auto* classify = app.add_subcommand("classify", "classify knowledge states from an audit file");
    classify->add_option("audit", audit_file, "YAML audit inputs")->required();

    std::string scenario_name = "appendix_a";
    std::optional<std::size_t> runs;
    std::string corpus_out;
    auto* simulate = app.add_subcommand("simulate", "run the two-firm docket");
    simulate->add_option("--scenario", scenario_name, "scenario file or built-in name");
    simulate->add_option("--runs", runs, "also run a Monte Carlo with this many jittered runs");
    simulate->add_option("--corpus-out", corpus_out, "export the generated corpus");

    std::string sweep_kind;
    std::string grid_text;
    std::string sizes_text;
    auto* sweep = app.add_subcommand("sweep", "sensitivity or scalability sweep");
    sweep->add_option("kind", sweep_kind, "sensitivity | scalability")
        ->required()
        ->check(CLI::IsMember({"sensitivity", "scalability"}));
    sweep->add_option("--scenario", scenario_name, "scenario file or built-in name");
    sweep->add_option("--eps-grid", grid_text, "start:stop:step");
    sweep->add_option("--sizes", sizes_text, "comma-separated corpus sizes");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*score) return cmd_score(score_file, g, out);
        if (*certify) return cmd_certify(cert_opts, g, out);
        if (*classify) return cmd_classify(audit_file, g, out);
        if (*simulate) return cmd_simulate(scenario_name, runs, corpus_out, g, out);
        if (*sweep) return cmd_sweep(sweep_kind, scenario_name, grid_text, sizes_text, g, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        err << e.what() << '\n';
        return kInput;
    } catch (const CertificationRefused& e) {
        err << "certification refused: " << e.what() << '\n';
        return kRefused;
    } catch (const PreconditionError& e) {
        err << "precondition violated: " << e.what() << '\n';
        return kPrecondition;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace ledger::cli
