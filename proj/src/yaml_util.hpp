#pragma once

// Strict readers over yaml-cpp nodes. Every failure becomes a ParseError
// carrying the source name and the 1-based line of the offending node.

#include <yaml-cpp/yaml.h>

#include <initializer_list>
#include <string>
#include <vector>

#include "ledger/errors.hpp"
#include "ledger/metrics.hpp"

namespace ledger::yamlio {

inline std::size_t line_of(const YAML::Node& node) {
    const auto mark = node.Mark();
    return mark.line < 0 ? 1 : static_cast<std::size_t>(mark.line) + 1;
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    const std::string& source() const { return source_; }

    [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
        throw ParseError(source_, line_of(node), what);
    }

    YAML::Node load(const std::string& text) const {
        try {
            return YAML::Load(text);
        } catch (const YAML::Exception& e) {
            throw ParseError(source_, static_cast<std::size_t>(e.mark.line < 0 ? 0 : e.mark.line) + 1,
                             e.msg);
        }
    }

    void expect_map(const YAML::Node& node, const std::string& what) const {
        if (!node.IsMap()) fail(node, what + " must be a mapping");
    }

    void expect_keys(const YAML::Node& node, std::initializer_list<const char*> allowed) const {
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) fail(kv.first, "unknown key '" + key + "'");
        }
    }

    template <typename T>
    T as(const YAML::Node& node, const std::string& key) const {
        if (!node.IsScalar()) fail(node, "'" + key + "' must be a scalar");
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, "'" + key + "' has an invalid value '" + node.Scalar() + "'");
        }
    }

    template <typename T>
    T get(const YAML::Node& map, const char* key, T fallback) const {
        const auto node = map[key];
        return node ? as<T>(node, key) : fallback;
    }

    template <typename T>
    T require(const YAML::Node& map, const char* key) const {
        const auto node = map[key];
        if (!node) fail(map, "missing key '" + std::string(key) + "'");
        return as<T>(node, key);
    }

    template <typename T>
    std::vector<T> list(const YAML::Node& map, const char* key) const {
        const auto node = map[key];
        std::vector<T> out;
        if (!node) return out;
        if (!node.IsSequence()) fail(node, "'" + std::string(key) + "' must be a list");
        for (const auto& item : node) out.push_back(as<T>(item, key));
        return out;
    }

    metrics::PolicyParams policy(const YAML::Node& node,
                                 metrics::PolicyParams base = {}) const {
        expect_map(node, "policy");
        expect_keys(node, {"tau_star", "theta_c", "delta", "theta_ak", "theta_ck", "theta_r",
                           "theta_neg"});
        base.tau_star = get(node, "tau_star", base.tau_star);
        base.theta_c = get(node, "theta_c", base.theta_c);
        base.delta = get(node, "delta", base.delta);
        base.theta_ak = get(node, "theta_ak", base.theta_ak);
        base.theta_ck = get(node, "theta_ck", base.theta_ck);
        base.theta_r = get(node, "theta_r", base.theta_r);
        base.theta_neg = get(node, "theta_neg", base.theta_neg);
        try {
            metrics::validate(base);
        } catch (const DomainError& e) {
            const auto field = node[e.field()];
            fail(field ? field : node, e.what());
        }
        return base;
    }

private:
    std::string source_;
};

}  // namespace ledger::yamlio
