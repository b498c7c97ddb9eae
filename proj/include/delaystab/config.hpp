#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "delaystab/model.hpp"
#include "delaystab/sha256.hpp"
#include "delaystab/simulate.hpp"

namespace delaystab {

/// Schema or expression error in a config file; `pointer` locates the
/// offending field JSON-pointer style (e.g. "/system/b1").
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string pointer, const std::string& message)
        : std::runtime_error("config " + pointer + ": " + message),
          pointer_(std::move(pointer)) {}

    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

struct NumericsConfig {
    double step = 0.0;          // 0 = auto: min(1, smallest positive max_lag)/20
    double t_end = 0.0;         // 0 = auto: t0 + 200
    double grid_step = 0.0;     // 0 = auto (validation grid default)
    double horizon = 0.0;       // 0 = auto
    double decay_window = 0.0;  // 0 = auto: 5 * (max lag + 1)
};

struct OutputsConfig {
    std::string report;          // empty = stdout
    std::string trajectory_csv;  // empty = "trajectory.csv"
    std::string plot_data;       // empty = not written
};

struct RunConfig {
    SystemSpec system;
    InitialData initial;
    ForcingSpec forcing;
    NumericsConfig numerics;
    OutputsConfig outputs;
    std::string config_sha256;

    double resolved_step() const {
        if (numerics.step > 0.0) return numerics.step;
        double m = 1.0;
        const double lag = system.min_positive_lag();
        if (std::isfinite(lag)) m = std::min(m, lag);
        return m / 20.0;
    }

    double resolved_t_end() const {
        return numerics.t_end > system.t0 ? numerics.t_end : system.t0 + 200.0;
    }

    double resolved_decay_window() const {
        if (numerics.decay_window > 0.0) return numerics.decay_window;
        return 5.0 * (system.max_lag() + 1.0);
    }
};

namespace detail {

using json = nlohmann::json;

inline const json& require_field(const json& obj, const char* key, const std::string& pointer) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(pointer + "/" + key, "missing required field");
    return *it;
}

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                                const std::string& pointer) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known) throw ConfigError(pointer + "/" + it.key(), "unknown field");
    }
}

inline double require_number(const json& obj, const char* key, const std::string& pointer) {
    const json& v = require_field(obj, key, pointer);
    if (!v.is_number()) throw ConfigError(pointer + "/" + key, "expected a number");
    return v.get<double>();
}

inline double optional_number(const json& obj, const char* key, double fallback,
                              const std::string& pointer) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) throw ConfigError(pointer + "/" + key, "expected a number");
    return it->get<double>();
}

inline std::string optional_string(const json& obj, const char* key,
                                   const std::string& fallback, const std::string& pointer) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_string()) throw ConfigError(pointer + "/" + key, "expected a string");
    return it->get<std::string>();
}

inline Expression parse_expression_field(const json& v, const std::string& pointer) {
    if (!v.is_string()) throw ConfigError(pointer, "expected an expression string");
    try {
        return Expression::parse(v.get<std::string>());
    } catch (const ParseError& e) {
        throw ConfigError(pointer, e.what());
    }
}

inline CoefficientSpec load_coefficient(const json& obj, const std::string& pointer,
                                        bool sign_varying_allowed) {
    if (!obj.is_object()) throw ConfigError(pointer, "expected an object");
    reject_unknown_keys(obj, {"expr", "lower", "upper", "signed"}, pointer);
    CoefficientSpec c;
    c.fn = parse_expression_field(require_field(obj, "expr", pointer), pointer + "/expr");
    c.upper = require_number(obj, "upper", pointer);
    auto sit = obj.find("signed");
    if (sit != obj.end()) {
        if (!sit->is_boolean()) throw ConfigError(pointer + "/signed", "expected a boolean");
        c.sign_varying = sit->get<bool>();
    }
    if (c.sign_varying && !sign_varying_allowed)
        throw ConfigError(pointer + "/signed",
                          "this coefficient must keep a fixed positive sign");
    if (c.sign_varying) {
        c.lower = optional_number(obj, "lower", 0.0, pointer);
        if (c.lower < 0.0)
            throw ConfigError(pointer + "/lower",
                              "lower bound of a sign-varying coefficient bounds |c| and must be >= 0");
    } else {
        c.lower = require_number(obj, "lower", pointer);
    }
    if (c.lower > c.upper)
        throw ConfigError(pointer, "lower bound exceeds upper bound");
    return c;
}

inline DelaySpec load_delay(const json& obj, const std::string& pointer) {
    if (!obj.is_object()) throw ConfigError(pointer, "expected an object");
    reject_unknown_keys(obj, {"lag", "max_lag"}, pointer);
    DelaySpec d;
    d.lag = parse_expression_field(require_field(obj, "lag", pointer), pointer + "/lag");
    d.max_lag = require_number(obj, "max_lag", pointer);
    if (d.max_lag < 0.0) throw ConfigError(pointer + "/max_lag", "max_lag must be >= 0");
    return d;
}

}  // namespace detail

/// Loads and validates the config file. Every expression is parsed eagerly;
/// schema violations carry a JSON-pointer-style path to the offending field.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("/", "cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    detail::json root;
    try {
        root = detail::json::parse(text);
    } catch (const detail::json::parse_error& e) {
        throw ConfigError("/", std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("/", "top level must be an object");
    detail::reject_unknown_keys(root, {"system", "initial", "forcing", "numerics", "outputs"},
                                "");

    RunConfig config;
    config.config_sha256 = sha256_hex(text);

    const detail::json& system = detail::require_field(root, "system", "");
    if (!system.is_object()) throw ConfigError("/system", "expected an object");
    detail::reject_unknown_keys(
        system, {"t0", "a1", "a2", "a3", "b1", "b2", "h1", "h2", "h3", "g1", "g2"}, "/system");
    config.system.t0 = detail::require_number(system, "t0", "/system");
    if (config.system.t0 < 0.0) throw ConfigError("/system/t0", "t0 must be >= 0");
    config.system.a1 =
        detail::load_coefficient(detail::require_field(system, "a1", "/system"), "/system/a1", false);
    config.system.a2 =
        detail::load_coefficient(detail::require_field(system, "a2", "/system"), "/system/a2", false);
    config.system.a3 =
        detail::load_coefficient(detail::require_field(system, "a3", "/system"), "/system/a3", true);
    config.system.b1 =
        detail::load_coefficient(detail::require_field(system, "b1", "/system"), "/system/b1", false);
    config.system.b2 =
        detail::load_coefficient(detail::require_field(system, "b2", "/system"), "/system/b2", true);
    config.system.h1 = detail::load_delay(detail::require_field(system, "h1", "/system"), "/system/h1");
    config.system.h2 = detail::load_delay(detail::require_field(system, "h2", "/system"), "/system/h2");
    config.system.h3 = detail::load_delay(detail::require_field(system, "h3", "/system"), "/system/h3");
    config.system.g1 = detail::load_delay(detail::require_field(system, "g1", "/system"), "/system/g1");
    config.system.g2 = detail::load_delay(detail::require_field(system, "g2", "/system"), "/system/g2");

    config.initial = zero_initial_data();
    if (auto it = root.find("initial"); it != root.end()) {
        if (!it->is_object()) throw ConfigError("/initial", "expected an object");
        detail::reject_unknown_keys(*it, {"phi1", "phi2", "psi"}, "/initial");
        if (auto f = it->find("phi1"); f != it->end())
            config.initial.phi1 = detail::parse_expression_field(*f, "/initial/phi1");
        if (auto f = it->find("phi2"); f != it->end())
            config.initial.phi2 = detail::parse_expression_field(*f, "/initial/phi2");
        if (auto f = it->find("psi"); f != it->end())
            config.initial.psi = detail::parse_expression_field(*f, "/initial/psi");
    }

    config.forcing = zero_forcing();
    if (auto it = root.find("forcing"); it != root.end()) {
        if (!it->is_object()) throw ConfigError("/forcing", "expected an object");
        detail::reject_unknown_keys(*it, {"f1", "f2"}, "/forcing");
        auto load_forcing_term = [](const detail::json& obj, const std::string& pointer,
                                    Expression& expr, double& bound) {
            if (!obj.is_object()) throw ConfigError(pointer, "expected an object");
            detail::reject_unknown_keys(obj, {"expr", "bound"}, pointer);
            expr = detail::parse_expression_field(detail::require_field(obj, "expr", pointer),
                                                  pointer + "/expr");
            bound = detail::require_number(obj, "bound", pointer);
            if (bound < 0.0) throw ConfigError(pointer + "/bound", "bound must be >= 0");
        };
        if (auto f = it->find("f1"); f != it->end())
            load_forcing_term(*f, "/forcing/f1", config.forcing.f1, config.forcing.f1_bound);
        if (auto f = it->find("f2"); f != it->end())
            load_forcing_term(*f, "/forcing/f2", config.forcing.f2, config.forcing.f2_bound);
    }

    if (auto it = root.find("numerics"); it != root.end()) {
        if (!it->is_object()) throw ConfigError("/numerics", "expected an object");
        detail::reject_unknown_keys(*it, {"step", "t_end", "grid_step", "horizon", "decay_window"},
                                    "/numerics");
        config.numerics.step = detail::optional_number(*it, "step", 0.0, "/numerics");
        config.numerics.t_end = detail::optional_number(*it, "t_end", 0.0, "/numerics");
        config.numerics.grid_step = detail::optional_number(*it, "grid_step", 0.0, "/numerics");
        config.numerics.horizon = detail::optional_number(*it, "horizon", 0.0, "/numerics");
        config.numerics.decay_window =
            detail::optional_number(*it, "decay_window", 0.0, "/numerics");
        const std::pair<const char*, double> positives[] = {
            {"step", config.numerics.step},
            {"t_end", config.numerics.t_end},
            {"grid_step", config.numerics.grid_step},
            {"horizon", config.numerics.horizon},
            {"decay_window", config.numerics.decay_window}};
        for (auto [name, v] : positives)
            if (v < 0.0)
                throw ConfigError(std::string("/numerics/") + name, "must be positive when set");
        if (config.numerics.t_end > 0.0 && config.numerics.t_end <= config.system.t0)
            throw ConfigError("/numerics/t_end", "must exceed t0");
    }

    if (auto it = root.find("outputs"); it != root.end()) {
        if (!it->is_object()) throw ConfigError("/outputs", "expected an object");
        detail::reject_unknown_keys(*it, {"report", "trajectory_csv", "plot_data"}, "/outputs");
        config.outputs.report = detail::optional_string(*it, "report", "", "/outputs");
        config.outputs.trajectory_csv =
            detail::optional_string(*it, "trajectory_csv", "", "/outputs");
        config.outputs.plot_data = detail::optional_string(*it, "plot_data", "", "/outputs");
    }

    return config;
}

}  // namespace delaystab
