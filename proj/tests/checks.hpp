#pragma once

// Randomised checks against independent oracles. Each returns a verdict and
// a one-line summary so the same code drives unit tests and the acceptance
// runner.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gen.hpp"
#include "ledger/errors.hpp"
#include "ledger/metrics.hpp"
#include "ledger/validation.hpp"

namespace checks {

using namespace ledger;

struct Result {
    bool ok = true;
    std::string detail;
};

inline std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

inline double direct_total(const metrics::ComponentErrors& e) {
    return 1.0 - (1.0 - e.retrieval) * (1.0 - e.generation) * (1.0 - e.verification);
}

// O(n^2) dominance filter; duplicates keep the smallest id.
inline std::vector<metrics::FrontierPoint> brute_frontier(const std::vector<metrics::PipelineSpec>& ps) {
    std::vector<metrics::FrontierPoint> pts;
    for (const auto& p : ps) pts.push_back({p.expected_cost, metrics::total_error(p), p.id});
    std::vector<metrics::FrontierPoint> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool drop = false;
        for (std::size_t j = 0; j < pts.size() && !drop; ++j) {
            if (i == j) continue;
            const auto& a = pts[j];
            const auto& b = pts[i];
            const bool weak = a.cost <= b.cost && a.total_error <= b.total_error;
            const bool strict = a.cost < b.cost || a.total_error < b.total_error;
            if (weak && strict) drop = true;
            if (!strict && a.cost == b.cost && a.total_error == b.total_error && a.pipeline_id < b.pipeline_id) {
                drop = true;
            }
        }
        if (!drop) out.push_back(pts[i]);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.cost < b.cost || (a.cost == b.cost && a.pipeline_id < b.pipeline_id);
    });
    return out;
}

inline Result frontier_oracle(std::size_t instances, std::uint64_t seed) {
    gen::Gen g(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        const auto ps = g.pipelines(12);
        if (metrics::epistemic_frontier(ps) != brute_frontier(ps)) {
            return {false, "frontier mismatch on instance " + std::to_string(t)};
        }
    }
    return {true, std::to_string(instances) + " instances match the brute-force filter"};
}

inline Result total_error_oracle(std::size_t trials, std::uint64_t seed) {
    gen::Gen g(seed);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const metrics::ComponentErrors e{g.error(), g.error(), g.error()};
        worst = std::max(worst, std::abs(metrics::total_error(e) - direct_total(e)));
    }
    return {worst <= 1e-12, fmt("max |total_error - formula| = %.3g over %.0f triples", worst, double(trials))};
}

inline Result compose_oracle(std::size_t trials, std::uint64_t seed) {
    gen::Gen g(seed);
    double worst = 0.0;
    double worst_disjoint = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto a = g.pipeline("a");
        const auto b = g.pipeline("b");
        const auto c = metrics::compose(a, b);
        const metrics::ComponentErrors merged{
            1.0 - (1.0 - a.errors.retrieval) * (1.0 - b.errors.retrieval),
            1.0 - (1.0 - a.errors.generation) * (1.0 - b.errors.generation),
            1.0 - (1.0 - a.errors.verification) * (1.0 - b.errors.verification)};
        worst = std::max(worst, std::abs(metrics::total_error(c) - direct_total(merged)));
        worst = std::max(worst, std::abs(c.expected_cost - (a.expected_cost + b.expected_cost)));

        // Disjoint slots: retrieval-only stage then a verifier-only stage.
        auto r = g.pipeline("r");
        r.kind = metrics::PipelineKind::retrieval_only;
        r.errors = {g.error(), 0.0, 0.0};
        auto v = g.pipeline("v");
        v.kind = metrics::PipelineKind::retrieval_only;
        v.errors = {0.0, 0.0, g.error()};
        const double expect = 1.0 - (1.0 - direct_total(r.errors)) * (1.0 - direct_total(v.errors));
        worst_disjoint = std::max(worst_disjoint, std::abs(metrics::total_error(metrics::compose(r, v)) - expect));
    }
    return {worst <= 1e-12 && worst_disjoint <= 1e-12,
            fmt("max deviation %.3g (merged slots), %.3g (disjoint slots)", worst, worst_disjoint)};
}

inline Result score_monotonicity(std::size_t pairs, std::uint64_t seed) {
    gen::Gen g(seed);
    const metrics::PolicyParams policy;
    std::size_t violations = 0;
    for (std::size_t t = 0; t < pairs; ++t) {
        auto p = g.pipeline("p");
        p.kind = metrics::PipelineKind::full;
        // Strict decrease needs a non-degenerate score.
        p.errors = {0.9 * g.unit(), 0.9 * g.unit(), 0.9 * g.unit()};
        const double s = metrics::pipeline_score(p, policy);

        auto slower = p;
        slower.expected_cost += 0.01 + 10.0 * g.unit();
        if (!(metrics::pipeline_score(slower, policy) < s)) ++violations;

        for (int slot = 0; slot < 3; ++slot) {
            auto worse = p;
            double* e = slot == 0 ? &worse.errors.retrieval
                        : slot == 1 ? &worse.errors.generation
                                    : &worse.errors.verification;
            *e += (1.0 - *e) * (0.01 + 0.99 * g.unit());
            if (!(metrics::pipeline_score(worse, policy) < s)) ++violations;
        }
    }
    return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(pairs) +
                                 " pairs (cost and each error slot)"};
}

inline Result org_set_monotonicity(std::size_t insertions, std::uint64_t seed) {
    gen::Gen g(seed);
    const metrics::PolicyParams policy;
    std::size_t violations = 0;
    for (std::size_t t = 0; t < insertions; ++t) {
        auto set = g.pipelines(8);
        const double before = metrics::org_score(set, policy).value;
        set.insert(set.begin() + static_cast<long>(g.rng().below(set.size() + 1)), g.pipeline("new"));
        if (metrics::org_score(set, policy).value < before) ++violations;
    }
    return {violations == 0, std::to_string(violations) + " decreases over " + std::to_string(insertions) +
                                 " insertions"};
}

// Dyadic confidences a/8 repeated 8t times with a*t hits: every bin is exact.
inline std::vector<validation::Prediction> calibrated(gen::Gen& g) {
    std::vector<validation::Prediction> out;
    const std::size_t groups = 1 + g.rng().below(5);
    for (std::size_t i = 0; i < groups; ++i) {
        const auto a = g.rng().below(9);
        const auto t = 1 + g.rng().below(4);
        const double c = static_cast<double>(a) / 8.0;
        for (std::size_t j = 0; j < 8 * t; ++j) out.push_back({c, j < a * t});
    }
    g.rng().shuffle(out.begin(), out.end());
    return out;
}

inline Result ece_zero_on_calibrated(std::size_t instances, std::uint64_t seed) {
    gen::Gen g(seed);
    double worst = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
        const auto p = calibrated(g);
        worst = std::max(worst, validation::ece(p).ece);
    }
    return {worst == 0.0, fmt("max ECE %.3g over %.0f calibrated inputs", worst, double(instances))};
}

inline Result ece_permutation_invariance(std::size_t shuffles, std::uint64_t seed) {
    gen::Gen g(seed);
    auto p = g.predictions(200);
    const double width = validation::ece(p).ece;
    const double mass = validation::ece(p, validation::EqualMass{7}).ece;
    std::size_t changed = 0;
    for (std::size_t i = 0; i < shuffles; ++i) {
        g.rng().shuffle(p.begin(), p.end());
        if (validation::ece(p).ece != width) ++changed;
        if (validation::ece(p, validation::EqualMass{7}).ece != mass) ++changed;
    }
    return {changed == 0, std::to_string(changed) + " differing results over " + std::to_string(shuffles) +
                              " shuffles (both binnings)"};
}

struct CoverageCell {
    double p;
    std::size_t n;
    double coverage;
};

inline std::vector<CoverageCell> hoeffding_coverage(std::size_t trials, double delta, std::uint64_t seed) {
    std::vector<CoverageCell> cells;
    std::uint64_t stream = 0;
    for (double p : {0.05, 0.2, 0.5}) {
        for (std::size_t n : {50, 200, 1000}) {
            Rng rng(derive_seed(seed, stream++));
            std::size_t covered = 0;
            for (std::size_t t = 0; t < trials; ++t) {
                std::size_t k = 0;
                for (std::size_t i = 0; i < n; ++i) k += rng.bernoulli(p);
                const double risk = static_cast<double>(k) / static_cast<double>(n);
                covered += p <= validation::hoeffding_upper(risk, n, delta).upper;
            }
            cells.push_back({p, n, static_cast<double>(covered) / static_cast<double>(trials)});
        }
    }
    return cells;
}

}  // namespace checks
