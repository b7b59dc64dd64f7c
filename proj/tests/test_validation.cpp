#include <doctest.h>

#include <cmath>
#include <set>

#include "ledger/errors.hpp"
#include "ledger/validation.hpp"

using namespace ledger;
using namespace ledger::validation;

namespace {

std::vector<LossRecord> losses(std::initializer_list<double> values) {
    std::vector<LossRecord> out;
    for (double v : values) out.push_back({"p", "a", v});
    return out;
}

std::vector<LossRecord> zeros(std::size_t n) { return std::vector<LossRecord>(n, LossRecord{"y", "y", 0.0}); }

// z for the one-sided 95% level, to double precision.
constexpr double kZ95 = 1.6448536269514722;

double wilson_oracle(double k, double n, double z) {
    const double p = k / n;
    const double z2 = z * z;
    return (p + z2 / (2 * n) + z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n))) / (1 + z2 / n);
}

Trainer constant(int label) {
    return [label](const std::vector<Sample>&, std::uint64_t) {
        return Predictor([label](const Sample&) { return label; });
    };
}

// Predicts 1 except on indices whose position within a block of 50 is below `wrong`.
Trainer wrong_on_prefix(int wrong) {
    return [wrong](const std::vector<Sample>&, std::uint64_t) {
        return Predictor([wrong](const Sample& s) {
            return static_cast<int>(s.features[0]) % 50 < wrong ? 0 : 1;
        });
    };
}

std::vector<Sample> all_ones(std::size_t n) {
    std::vector<Sample> data;
    for (std::size_t i = 0; i < n; ++i) data.push_back({{static_cast<double>(i)}, 1});
    return data;
}

ValidationCertificate cert_with(double cost, double total_upper) {
    ValidationCertificate c;
    c.pipeline_id = "p";
    c.kind = metrics::PipelineKind::retrieval_only;
    c.measured_cost = cost;
    c.ret_bound = {0.0, total_upper, BoundMethod::hoeffding, 0.05, 100, false};
    c.gen_bound = {0.0, 0.0, BoundMethod::hoeffding, 0.05, 0, true};
    c.ver_bound = {0.0, 0.0, BoundMethod::hoeffding, 0.05, 100, false};
    c.total_upper = total_upper;
    return c;
}

}  // namespace

TEST_CASE("empirical risk") {
    CHECK(empirical_risk(losses({0, 0, 0})) == 0.0);
    CHECK(empirical_risk(losses({1, 0, 0, 1})) == 0.5);
    CHECK(empirical_risk(losses({1, 1})) == 1.0);
    CHECK_THROWS_AS(empirical_risk({}), DomainError);
}

TEST_CASE("zero-one loss") {
    CHECK(zero_one("a", "a").loss == 0.0);
    CHECK(zero_one("a", "b").loss == 1.0);
}

TEST_CASE("hoeffding upper") {
    const auto b = hoeffding_upper(0.10, 200, 0.05);
    CHECK(b.upper == doctest::Approx(0.10 + std::sqrt(std::log(20.0) / 400.0)));
    CHECK(b.upper == doctest::Approx(0.1865).epsilon(1e-4 / 0.1865));
    CHECK(b.method == BoundMethod::hoeffding);
    CHECK(b.sample_size == 200);
    CHECK(hoeffding_upper(0.3, 50, 1.0 - 1e-12).upper == doctest::Approx(0.3).epsilon(1e-5));
    CHECK(hoeffding_upper(0.99, 10, 0.05).upper == 1.0);
    CHECK_THROWS_AS(hoeffding_upper(0.1, 0, 0.05), DomainError);
    CHECK_THROWS_AS(hoeffding_upper(0.1, 10, 0.0), DomainError);
    CHECK_THROWS_AS(hoeffding_upper(0.1, 10, 1.0), DomainError);
}

TEST_CASE("normal quantile") {
    CHECK(normal_quantile(0.95) == doctest::Approx(kZ95).epsilon(1e-9));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    CHECK(normal_quantile(1e-6) == doctest::Approx(-4.753424308822899).epsilon(1e-9));
}

TEST_CASE("wilson upper") {
    const auto b = wilson_upper(0, 100, 0.05);
    CHECK(b.upper == doctest::Approx(wilson_oracle(0, 100, kZ95)).epsilon(1e-9));
    CHECK(b.upper == doctest::Approx(0.0264).epsilon(1e-4 / 0.0264));
    // Clopper-Pearson upper for k=0, n=100 is 1 - 0.05^(1/100).
    CHECK(b.upper < 1.0 - std::pow(0.05, 0.01));
    CHECK(wilson_upper(7, 7, 0.05).upper == 1.0);
    CHECK(wilson_upper(300000, 1000000, 0.05).upper == doctest::Approx(0.3).epsilon(1e-3 / 0.3));
    CHECK(wilson_upper(13, 40, 0.1).upper == doctest::Approx(wilson_oracle(13, 40, normal_quantile(0.9))));
    CHECK_THROWS_AS(wilson_upper(5, 4, 0.05), DomainError);
}

TEST_CASE("bound method names") {
    CHECK(parse_bound_method("wilson") == BoundMethod::wilson);
    CHECK(parse_bound_method(to_string(BoundMethod::hoeffding)) == BoundMethod::hoeffding);
    CHECK_THROWS_AS(parse_bound_method("clopper"), DomainError);
}

TEST_CASE("ece examples") {
    std::vector<Prediction> single;
    for (int i = 0; i < 10; ++i) single.push_back({0.8, i < 9});
    CHECK(ece(single, EqualWidth{1}).ece == doctest::Approx(0.1));

    std::vector<Prediction> two;
    for (int i = 0; i < 50; ++i) two.push_back({0.3, i < 5});   // acc 0.1, gap 0.2
    for (int i = 0; i < 50; ++i) two.push_back({0.8, i < 40});  // acc 0.8, gap 0
    const auto report = ece(two, EqualWidth{2});
    CHECK(report.ece == doctest::Approx(0.1));
    REQUIRE(report.bins.size() == 2);
    CHECK(report.bins[0].count == 50);
    CHECK(report.bins[1].count == 50);

    std::vector<Prediction> calibrated;
    for (int i = 0; i < 4; ++i) calibrated.push_back({0.75, i < 3});
    for (int i = 0; i < 4; ++i) calibrated.push_back({0.25, i < 1});
    CHECK(ece(calibrated).ece == 0.0);
    CHECK(ece(calibrated, EqualMass{2}).ece == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(ece({}), DomainError);
    const std::vector<Prediction> bad = {{1.5, true}};
    CHECK_THROWS_AS(ece(bad), DomainError);
}

TEST_CASE("ece bin counts cover the sample") {
    std::vector<Prediction> p;
    for (int i = 0; i <= 100; ++i) p.push_back({i / 100.0, i % 3 == 0});
    for (const Binning b : {Binning{EqualWidth{10}}, Binning{EqualMass{7}}}) {
        const auto report = ece(p, b);
        std::size_t total = 0;
        for (const auto& bin : report.bins) total += bin.count;
        CHECK(total == p.size());
        CHECK(report.ece >= 0.0);
        CHECK(report.ece <= 1.0);
    }
}

TEST_CASE("kfold") {
    const auto plan = make_folds(10, KFold{5, {}});
    REQUIRE(plan.folds.size() == 5);
    std::set<std::size_t> seen;
    for (const auto& f : plan.folds) {
        CHECK(f.test.size() == 2);
        CHECK(f.train.size() == 8);
        for (auto i : f.test) CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == 10);
    CHECK_THROWS_AS(make_folds(3, KFold{5, {}}), DomainError);

    const auto uneven = make_folds(7, KFold{3, {}});
    CHECK(uneven.folds[0].test.size() == 3);
    CHECK(uneven.folds[1].test.size() == 2);
    CHECK(uneven.folds[2].test.size() == 2);

    const auto a = make_folds(20, KFold{4, 99});
    const auto b = make_folds(20, KFold{4, 99});
    CHECK(a.assignments == b.assignments);
    CHECK(describe(KFold{5, {}}) == "kfold(5)");
}

TEST_CASE("rolling window") {
    const auto plan = make_folds(9, RollingWindow{5, 2, 2});
    REQUIRE(plan.folds.size() == 2);
    CHECK(plan.folds[0].test == std::vector<std::size_t>{5, 6});
    CHECK(plan.folds[1].test == std::vector<std::size_t>{7, 8});
    for (const auto& f : plan.folds) {
        for (auto t : f.test) {
            for (auto r : f.train) CHECK(r < t);
        }
    }
    CHECK_FALSE(plan.assignments[0].has_value());

    const std::vector<std::string> unordered = {"1", "2", "3", "2", "5", "6", "7", "8", "9"};
    CHECK_THROWS_AS(make_folds(9, RollingWindow{5, 2, 2}, unordered), DomainError);
}

TEST_CASE("grouped folds keep groups atomic") {
    const std::vector<std::string> keys = {"a", "a", "b", "b"};
    const auto plan = make_folds(4, Grouped{2}, keys);
    REQUIRE(plan.folds.size() == 2);
    CHECK(plan.assignments[0] == plan.assignments[1]);
    CHECK(plan.assignments[2] == plan.assignments[3]);
    CHECK(plan.assignments[0] != plan.assignments[2]);

    const std::vector<std::string> one_group = {"a", "a", "a"};
    CHECK_THROWS_AS(make_folds(3, Grouped{2}, one_group), DomainError);
}

TEST_CASE("cv risk") {
    const auto data = all_ones(10);
    CHECK(cv_risk(data, make_folds(10, KFold{5, {}}), {"one", constant(1)}) == 0.0);

    std::vector<Sample> balanced;
    for (int i = 0; i < 10; ++i) balanced.push_back({{double(i)}, i % 2});
    CHECK(cv_risk(balanced, make_folds(10, KFold{5, {}}), {"one", constant(1)}) == 0.5);

    // Folds of size 1 and 3 with risks 1 and 0 average to 0.5, not 0.25.
    std::vector<Sample> skewed = {{{0}, 0}, {{1}, 1}, {{2}, 1}, {{3}, 1}};
    FoldPlan plan;
    plan.folds = {{0, {1, 2, 3}, {0}}, {1, {0}, {1, 2, 3}}};
    plan.assignments = {0, 1, 1, 1};
    CHECK(cv_risk(skewed, plan, {"one", constant(1)}) == 0.5);
}

TEST_CASE("cv risk reports the failing fold") {
    const auto data = all_ones(6);
    const ModelCandidate broken{"broken", [](const std::vector<Sample>& train, std::uint64_t) -> Predictor {
                                    if (train.front().features[0] != 0.0) throw std::runtime_error("boom");
                                    return [](const Sample&) { return 1; };
                                }};
    try {
        cv_risk(data, make_folds(6, KFold{3, {}}), broken);
        FAIL("expected FoldError");
    } catch (const FoldError& e) {
        CHECK(e.fold() == 0);
    }
}

TEST_CASE("penalized selection") {
    const auto data = all_ones(100);
    const auto plan = make_folds(100, KFold{2, {}});
    const std::vector<ModelCandidate> c = {{"rich", wrong_on_prefix(5), 5.0}, {"lean", wrong_on_prefix(6), 1.0}};
    CHECK(cv_risk(data, plan, c[0]) == doctest::Approx(0.10));
    CHECK(cv_risk(data, plan, c[1]) == doctest::Approx(0.12));

    const auto pick = penalized_select(c, data, plan, 0.01);
    CHECK(pick.id == "lean");
    CHECK(pick.objective == doctest::Approx(0.13));
    CHECK(penalized_select(c, data, plan, 0.0).id == "rich");

    const std::vector<ModelCandidate> tied = {{"b", constant(1), 2.0}, {"a", constant(1), 1.0}};
    CHECK(penalized_select(tied, data, plan, 0.0).id == "a");
    const std::vector<ModelCandidate> same = {{"b", constant(1), 1.0}, {"a", constant(1), 1.0}};
    CHECK(penalized_select(same, data, plan, 0.5).id == "a");
    CHECK_THROWS_AS(penalized_select({}, data, plan, 0.0), DomainError);

    CHECK(aic_penalty(3) == 6.0);
    CHECK(bic_penalty(3, 100) == doctest::Approx(3 * std::log(100.0)));
}

TEST_CASE("certify with hoeffding on zero-error data") {
    metrics::PipelineSpec p{"rag", metrics::PipelineKind::full, 2.06, {}, metrics::Independent{}};
    const EvalSets sets{zeros(1000), zeros(1000), zeros(1000)};
    const auto cert = certify(p, sets, 2.06, 0.05, BoundMethod::hoeffding);
    const double u = std::sqrt(std::log(20.0) / 2000.0);
    CHECK(cert.ret_bound.upper == doctest::Approx(u));
    CHECK(cert.gen_bound.upper == doctest::Approx(u));
    CHECK(cert.ver_bound.upper == doctest::Approx(u));
    CHECK(cert.total_upper == doctest::Approx(1 - std::pow(1 - u, 3)));
    CHECK(cert.total_upper == doctest::Approx(0.1117).epsilon(1e-4 / 0.1117));
    CHECK(cert.total_upper >= cert.ret_bound.upper);
    CHECK_NOTHROW(validate(cert));
    CHECK(cert.provenance.note.find("0.8500") != std::string::npos);

    const auto tighter = certify(p, sets, 2.06, 0.01, BoundMethod::hoeffding);
    CHECK(tighter.total_upper > cert.total_upper);
}

TEST_CASE("certify marks absent components synthetic") {
    metrics::PipelineSpec p{"kw", metrics::PipelineKind::retrieval_only, 5.9, {}, metrics::Independent{}};
    const auto cert = certify(p, {zeros(50), std::nullopt, zeros(50)}, 5.9, 0.05);
    CHECK(cert.gen_bound.upper == 0.0);
    CHECK(cert.gen_bound.synthetic);
    CHECK_FALSE(cert.ret_bound.synthetic);

    metrics::PipelineSpec full{"rag", metrics::PipelineKind::full, 2.0, {}, metrics::Independent{}};
    CHECK_THROWS_AS(certify(full, {zeros(50), std::nullopt, zeros(50)}, 2.0, 0.05), CertificationRefused);
    CHECK_THROWS_AS(certify(full, {zeros(50), std::vector<LossRecord>{}, zeros(50)}, 2.0, 0.05),
                    CertificationRefused);
    CHECK_THROWS_AS(certify(p, {losses({0.5}), std::nullopt, zeros(5)}, 5.9, 0.05, BoundMethod::wilson),
                    DomainError);
}

TEST_CASE("wilson beats hoeffding at small error rates") {
    metrics::PipelineSpec p{"kw", metrics::PipelineKind::retrieval_only, 1.0, {}, metrics::Independent{}};
    const EvalSets sets{zeros(1000), std::nullopt, zeros(1000)};
    const auto w = certify(p, sets, 1.0, 0.05, BoundMethod::wilson);
    const auto h = certify(p, sets, 1.0, 0.05, BoundMethod::hoeffding);
    CHECK(w.total_upper < h.total_upper);
}

TEST_CASE("lower bound score and plug-in test") {
    CHECK(lower_bound_score(cert_with(0.0, 0.0), 10) == 1.0);
    CHECK(lower_bound_score(cert_with(2.06, 0.1490), 10) == doctest::Approx(0.7056).epsilon(1e-4 / 0.7056));
    CHECK(lower_bound_score(cert_with(2.06, 0.2), 10) < lower_bound_score(cert_with(2.06, 0.1), 10));

    CHECK(plug_in_test(cert_with(2.06, 0.0), 0.7, 10));
    CHECK_FALSE(plug_in_test(cert_with(0.0, 1.0), 0.01, 10));
    CHECK(lower_bound_score(cert_with(2.06, 0.20), 10) == doctest::Approx(0.664).epsilon(1e-3));
    CHECK_FALSE(plug_in_test(cert_with(2.06, 0.20), 0.7, 10));
}

TEST_CASE("certificate validation catches an inconsistent total") {
    auto c = cert_with(1.0, 0.2);
    c.total_upper = 0.1;
    CHECK_THROWS_AS(validate(c), DomainError);
}

TEST_CASE("lower bound capacity") {
    metrics::Docket docket;
    docket.propositions = {{"a", "", 1.0, 0.7}, {"b", "", 1.0, 0.7}};
    const metrics::PolicyParams policy;
    std::map<std::string, std::vector<ValidationCertificate>> certs;
    CHECK(lower_bound_capacity(docket, certs, policy) == 0.0);

    // cost 0 makes s_LB = 1 - total_upper.
    certs["a"] = {cert_with(0.0, 0.29)};
    certs["b"] = {cert_with(0.0, 0.35)};
    CHECK(lower_bound_capacity(docket, certs, policy) == 0.5);

    certs["b"].push_back(cert_with(0.0, 0.1));
    CHECK(lower_bound_capacity(docket, certs, policy) == 1.0);

    metrics::Docket weightless;
    weightless.propositions = {{"a", "", 0.0, 0.7}};
    CHECK_THROWS_AS(lower_bound_capacity(weightless, certs, policy), DomainError);
}
