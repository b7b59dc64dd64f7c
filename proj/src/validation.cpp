#include "ledger/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "ledger/errors.hpp"
#include "ledger/rng.hpp"

namespace ledger::validation {

namespace {

void require_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw DomainError("delta", "must lie in (0,1), got " + std::to_string(delta));
    }
}

void require_unit(double value, const char* field) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw DomainError(field, "must lie in [0,1], got " + std::to_string(value));
    }
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& sorted_test) {
    std::vector<std::size_t> out;
    out.reserve(n - sorted_test.size());
    std::size_t t = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t < sorted_test.size() && sorted_test[t] == i) {
            ++t;
        } else {
            out.push_back(i);
        }
    }
    return out;
}

FoldPlan finish_plan(std::size_t n, FoldStrategy strategy, std::vector<Fold> folds) {
    FoldPlan plan;
    plan.strategy = std::move(strategy);
    plan.assignments.assign(n, std::nullopt);
    for (const auto& fold : folds) {
        for (auto i : fold.test) plan.assignments[i] = fold.id;
    }
    plan.folds = std::move(folds);
    return plan;
}

FoldPlan kfold_plan(std::size_t n, const KFold& s) {
    if (s.k == 0) throw DomainError("k", "must be at least 1");
    if (s.k > n) {
        throw DomainError("k", "cannot exceed the number of records (" + std::to_string(n) + ")");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (s.shuffle_seed) {
        Rng rng(*s.shuffle_seed);
        rng.shuffle(order.begin(), order.end());
    }
    std::vector<Fold> folds;
    const std::size_t base = n / s.k;
    const std::size_t extra = n % s.k;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < s.k; ++j) {
        const std::size_t size = base + (j < extra ? 1 : 0);
        Fold fold{j, {}, {order.begin() + pos, order.begin() + pos + size}};
        std::sort(fold.test.begin(), fold.test.end());
        fold.train = complement(n, fold.test);
        folds.push_back(std::move(fold));
        pos += size;
    }
    return finish_plan(n, s, std::move(folds));
}

FoldPlan rolling_plan(std::size_t n, const RollingWindow& s, std::span<const std::string> keys) {
    if (s.train_size == 0 || s.test_size == 0 || s.step == 0) {
        throw DomainError("rolling_window", "train_size, test_size and step must be positive");
    }
    if (!keys.empty()) {
        if (keys.size() != n) throw DomainError("keys", "one time key per record is required");
        double prev = -std::numeric_limits<double>::infinity();
        for (const auto& key : keys) {
            double t = 0.0;
            try {
                t = std::stod(key);
            } catch (const std::exception&) {
                throw DomainError("keys", "time key '" + key + "' is not numeric");
            }
            if (t < prev) throw DomainError("keys", "time keys must be non-decreasing");
            prev = t;
        }
    }
    std::vector<Fold> folds;
    for (std::size_t start = 0; start + s.train_size + s.test_size <= n; start += s.step) {
        Fold fold;
        fold.id = folds.size();
        for (std::size_t i = start; i < start + s.train_size; ++i) fold.train.push_back(i);
        for (std::size_t i = start + s.train_size; i < start + s.train_size + s.test_size; ++i) {
            fold.test.push_back(i);
        }
        folds.push_back(std::move(fold));
    }
    if (folds.empty()) {
        throw DomainError("rolling_window", "no window fits in " + std::to_string(n) + " records");
    }
    // Later windows overlap earlier test ranges when step < test_size; the
    // assignment records the last window that tests an index.
    return finish_plan(n, s, std::move(folds));
}

FoldPlan grouped_plan(std::size_t n, const Grouped& s, std::span<const std::string> keys) {
    if (keys.size() != n) throw DomainError("keys", "one group key per record is required");
    if (s.k == 0) throw DomainError("k", "must be at least 1");

    struct Group {
        std::size_t first_seen;
        std::vector<std::size_t> members;
    };
    std::vector<Group> groups;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = index.try_emplace(keys[i], groups.size());
        if (inserted) groups.push_back({i, {}});
        groups[it->second].members.push_back(i);
    }
    if (groups.size() < s.k) {
        throw DomainError("k", "only " + std::to_string(groups.size()) + " groups for " +
                                   std::to_string(s.k) + " folds");
    }
    // Largest group first into the currently smallest fold.
    std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
        return a.members.size() > b.members.size();
    });
    std::vector<Fold> folds(s.k);
    for (std::size_t j = 0; j < s.k; ++j) folds[j].id = j;
    for (const auto& g : groups) {
        auto target = std::min_element(folds.begin(), folds.end(), [](const Fold& a, const Fold& b) {
            return a.test.size() < b.test.size();
        });
        target->test.insert(target->test.end(), g.members.begin(), g.members.end());
    }
    for (auto& fold : folds) {
        std::sort(fold.test.begin(), fold.test.end());
        fold.train = complement(n, fold.test);
    }
    return finish_plan(n, s, std::move(folds));
}

}  // namespace

LossRecord zero_one(std::string predicted, std::string actual) {
    const double loss = predicted == actual ? 0.0 : 1.0;
    return {std::move(predicted), std::move(actual), loss};
}

const char* to_string(BoundMethod method) {
    return method == BoundMethod::hoeffding ? "hoeffding" : "wilson";
}

BoundMethod parse_bound_method(const std::string& text) {
    if (text == "hoeffding") return BoundMethod::hoeffding;
    if (text == "wilson") return BoundMethod::wilson;
    throw DomainError("method", "expected hoeffding or wilson, got '" + text + "'");
}

double empirical_risk(std::span<const LossRecord> records) {
    if (records.empty()) throw DomainError("records", "empirical risk of an empty sample");
    double sum = 0.0;
    for (const auto& r : records) {
        require_unit(r.loss, "loss");
        sum += r.loss;
    }
    return sum / static_cast<double>(records.size());
}

ConfidenceBound hoeffding_upper(double risk, std::size_t n, double delta) {
    require_unit(risk, "risk");
    if (n == 0) throw DomainError("n", "sample size must be positive");
    require_delta(delta);
    const double width = std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
    return {risk, std::min(1.0, risk + width), BoundMethod::hoeffding, delta, n, false};
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("p", "quantile level must lie in (0,1)");

    // Acklam's rational approximation followed by one Halley step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

ConfidenceBound wilson_upper(std::size_t successes, std::size_t n, double delta) {
    if (n == 0) throw DomainError("n", "sample size must be positive");
    if (successes > n) throw DomainError("k", "successes exceed sample size");
    require_delta(delta);

    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z = normal_quantile(1.0 - delta);
    const double z2 = z * z;
    const double centre = p + z2 / (2.0 * nn);
    const double spread = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    double upper = (centre + spread) / (1.0 + z2 / nn);
    upper = successes == n ? 1.0 : std::clamp(upper, p, 1.0);
    return {p, upper, BoundMethod::wilson, delta, n, false};
}

CalibrationReport ece(std::span<const Prediction> predictions, const Binning& binning) {
    if (predictions.empty()) throw DomainError("predictions", "calibration of an empty sample");
    for (const auto& p : predictions) require_unit(p.confidence, "confidence");

    // Sorting first makes every per-bin sum independent of input order.
    std::vector<Prediction> sorted(predictions.begin(), predictions.end());
    std::sort(sorted.begin(), sorted.end(), [](const Prediction& a, const Prediction& b) {
        return a.confidence < b.confidence || (a.confidence == b.confidence && a.correct < b.correct);
    });
    const std::size_t n = sorted.size();

    CalibrationReport report;
    report.binning = binning;

    auto summarise = [](CalibrationBin& bin, std::span<const Prediction> members) {
        bin.count = members.size();
        if (members.empty()) return;
        double conf = 0.0;
        double acc = 0.0;
        for (const auto& m : members) {
            conf += m.confidence;
            acc += m.correct ? 1.0 : 0.0;
        }
        bin.mean_confidence = conf / static_cast<double>(members.size());
        bin.mean_accuracy = acc / static_cast<double>(members.size());
    };

    if (const auto* width = std::get_if<EqualWidth>(&binning)) {
        const std::size_t m = width->bins;
        if (m == 0) throw DomainError("bins", "at least one bin is required");
        std::vector<std::size_t> start(m + 1, n);
        std::size_t pos = 0;
        for (std::size_t k = 0; k < m; ++k) {
            start[k] = pos;
            while (pos < n && std::min(static_cast<std::size_t>(sorted[pos].confidence *
                                                                static_cast<double>(m)),
                                       m - 1) == k) {
                ++pos;
            }
        }
        start[m] = n;
        for (std::size_t k = 0; k < m; ++k) {
            CalibrationBin bin;
            bin.lower_conf = static_cast<double>(k) / static_cast<double>(m);
            bin.upper_conf = static_cast<double>(k + 1) / static_cast<double>(m);
            summarise(bin, std::span(sorted).subspan(start[k], start[k + 1] - start[k]));
            report.bins.push_back(bin);
        }
    } else {
        const std::size_t m = std::get<EqualMass>(binning).bins;
        if (m == 0) throw DomainError("bins", "at least one bin is required");
        const std::size_t base = n / m;
        const std::size_t extra = n % m;
        std::size_t pos = 0;
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t size = base + (k < extra ? 1 : 0);
            if (size == 0) continue;
            CalibrationBin bin;
            bin.lower_conf = sorted[pos].confidence;
            bin.upper_conf = sorted[pos + size - 1].confidence;
            summarise(bin, std::span(sorted).subspan(pos, size));
            report.bins.push_back(bin);
            pos += size;
        }
    }

    double total = 0.0;
    for (const auto& bin : report.bins) {
        if (bin.count == 0) continue;
        total += static_cast<double>(bin.count) / static_cast<double>(n) *
                 std::abs(bin.mean_accuracy - bin.mean_confidence);
    }
    report.ece = std::clamp(total, 0.0, 1.0);
    return report;
}

std::string describe(const FoldStrategy& strategy) {
    if (const auto* s = std::get_if<KFold>(&strategy)) {
        return "kfold(" + std::to_string(s->k) + ")";
    }
    if (const auto* s = std::get_if<RollingWindow>(&strategy)) {
        return "rolling_window(" + std::to_string(s->train_size) + "," +
               std::to_string(s->test_size) + "," + std::to_string(s->step) + ")";
    }
    return "grouped(" + std::to_string(std::get<Grouped>(strategy).k) + ")";
}

FoldPlan make_folds(std::size_t n, const FoldStrategy& strategy, std::span<const std::string> keys) {
    if (const auto* s = std::get_if<KFold>(&strategy)) return kfold_plan(n, *s);
    if (const auto* s = std::get_if<RollingWindow>(&strategy)) return rolling_plan(n, *s, keys);
    return grouped_plan(n, std::get<Grouped>(strategy), keys);
}

double aic_penalty(std::size_t parameters) { return 2.0 * static_cast<double>(parameters); }

double bic_penalty(std::size_t parameters, std::size_t n) {
    if (n == 0) throw DomainError("n", "sample size must be positive");
    return static_cast<double>(parameters) * std::log(static_cast<double>(n));
}

double cv_risk(std::span<const Sample> dataset, const FoldPlan& plan,
               const ModelCandidate& candidate, std::uint64_t seed) {
    if (plan.folds.empty()) throw PreconditionError("cv_risk: fold plan has no folds");
    if (!candidate.trainer) throw PreconditionError("cv_risk: candidate has no trainer");

    double sum = 0.0;
    for (const auto& fold : plan.folds) {
        if (fold.test.empty()) throw FoldError(fold.id, "empty validation fold");
        std::vector<Sample> train;
        train.reserve(fold.train.size());
        for (auto i : fold.train) {
            if (i >= dataset.size()) throw FoldError(fold.id, "train index out of range");
            train.push_back(dataset[i]);
        }
        double losses = 0.0;
        try {
            Predictor predict = candidate.trainer(train, derive_seed(seed, fold.id));
            if (!predict) throw std::runtime_error("trainer returned no predictor");
            for (auto i : fold.test) {
                if (i >= dataset.size()) throw std::out_of_range("test index out of range");
                losses += predict(dataset[i]) == dataset[i].label ? 0.0 : 1.0;
            }
        } catch (const FoldError&) {
            throw;
        } catch (const std::exception& e) {
            throw FoldError(fold.id, e.what());
        }
        sum += losses / static_cast<double>(fold.test.size());
    }
    return sum / static_cast<double>(plan.folds.size());
}

Selection penalized_select(std::span<const ModelCandidate> candidates,
                           std::span<const Sample> dataset, const FoldPlan& plan, double lambda,
                           std::uint64_t seed) {
    if (candidates.empty()) throw DomainError("candidates", "no candidate models");
    if (!(lambda >= 0.0)) throw DomainError("lambda", "must be non-negative");

    std::optional<Selection> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (!(c.complexity >= 0.0)) throw DomainError("complexity", "must be non-negative");
        const double risk = cv_risk(dataset, plan, c, seed);
        Selection here{i, c.id, risk, risk + lambda * c.complexity};
        if (!best) {
            best = here;
            continue;
        }
        const auto& incumbent = candidates[best->index];
        const bool better =
            here.objective < best->objective ||
            (here.objective == best->objective &&
             (c.complexity < incumbent.complexity ||
              (c.complexity == incumbent.complexity && c.id < incumbent.id)));
        if (better) best = here;
    }
    return *best;
}

const char* to_string(Component component) {
    switch (component) {
        case Component::retrieval: return "retrieval";
        case Component::generation: return "generation";
        case Component::verification: return "verification";
    }
    return "retrieval";
}

bool component_present(metrics::PipelineKind kind, Component component) {
    return component != Component::generation || kind != metrics::PipelineKind::retrieval_only;
}

ValidationCertificate certify(const metrics::PipelineSpec& pipeline, const EvalSets& eval_sets,
                              double measured_cost, double delta, BoundMethod method,
                              Provenance provenance) {
    require_delta(delta);
    if (!(measured_cost >= 0.0) || !std::isfinite(measured_cost)) {
        throw DomainError("measured_cost", "must be a finite non-negative number of seconds");
    }

    std::size_t evaluated = 0;
    auto bound_for = [&](Component component,
                         const std::optional<std::vector<LossRecord>>& records) -> ConfidenceBound {
        if (!component_present(pipeline.kind, component)) {
            return {0.0, 0.0, method, delta, 0, true};
        }
        if (!records || records->empty()) {
            throw CertificationRefused(std::string("no evaluation records for the ") +
                                       to_string(component) + " component of pipeline '" +
                                       pipeline.id + "'");
        }
        ++evaluated;
        const double risk = empirical_risk(*records);
        if (method == BoundMethod::hoeffding) return hoeffding_upper(risk, records->size(), delta);

        std::size_t failures = 0;
        for (const auto& r : *records) {
            if (r.loss != 0.0 && r.loss != 1.0) {
                throw DomainError("loss", "wilson bounds need 0-1 losses; use hoeffding");
            }
            failures += r.loss == 1.0 ? 1 : 0;
        }
        return wilson_upper(failures, records->size(), delta);
    };

    ValidationCertificate cert;
    cert.pipeline_id = pipeline.id;
    cert.kind = pipeline.kind;
    cert.measured_cost = measured_cost;
    cert.delta = delta;
    cert.ret_bound = bound_for(Component::retrieval, eval_sets.retrieval);
    cert.gen_bound = bound_for(Component::generation, eval_sets.generation);
    cert.ver_bound = bound_for(Component::verification, eval_sets.verification);
    cert.total_upper = metrics::total_error(
        {cert.ret_bound.upper, cert.gen_bound.upper, cert.ver_bound.upper});

    cert.provenance = std::move(provenance);
    if (cert.provenance.note.empty()) {
        const double joint = std::max(0.0, 1.0 - static_cast<double>(evaluated) * delta);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", joint);
        cert.provenance.note =
            std::string("delta applied per component; joint confidence >= ") + buf + " by union bound";
    }
    return cert;
}

void validate(const ValidationCertificate& cert) {
    require_delta(cert.delta);
    if (!(cert.measured_cost >= 0.0)) throw DomainError("measured_cost", "must be non-negative");
    for (const auto* b : {&cert.ret_bound, &cert.gen_bound, &cert.ver_bound}) {
        require_unit(b->upper, "upper");
        require_unit(b->point_estimate, "point_estimate");
        if (b->upper < b->point_estimate) throw DomainError("upper", "below its point estimate");
    }
    require_unit(cert.total_upper, "total_upper");
    const double expected =
        metrics::total_error({cert.ret_bound.upper, cert.gen_bound.upper, cert.ver_bound.upper});
    if (std::abs(expected - cert.total_upper) > 1e-9) {
        throw DomainError("total_upper", "does not equal the product rule over component uppers");
    }
}

double lower_bound_score(const ValidationCertificate& cert, double tau_star) {
    require_unit(cert.total_upper, "total_upper");
    return metrics::efficiency(cert.measured_cost, tau_star) * (1.0 - cert.total_upper);
}

bool plug_in_test(const ValidationCertificate& cert, double theta_c, double tau_star) {
    if (!(theta_c > 0.0 && theta_c < 1.0)) throw DomainError("theta_c", "must lie in (0,1)");
    return lower_bound_score(cert, tau_star) >= theta_c;
}

double lower_bound_capacity(
    const metrics::Docket& docket,
    const std::map<std::string, std::vector<ValidationCertificate>>& certs,
    const metrics::PolicyParams& policy) {
    double total = 0.0;
    double known = 0.0;
    for (const auto& prop : docket.propositions) {
        metrics::validate(prop);
        total += prop.salience_weight;
        const auto it = certs.find(prop.id);
        if (it == certs.end() || it->second.empty()) continue;
        double best = 0.0;
        for (const auto& cert : it->second) {
            best = std::max(best, lower_bound_score(cert, policy.tau_star));
        }
        if (best >= prop.threshold) known += prop.salience_weight;
    }
    if (!(total > 0.0)) {
        throw DomainError("salience_weight", "total proposition weight must be positive");
    }
    return known / total;
}

}  // namespace ledger::validation
