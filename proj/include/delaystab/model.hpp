#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaystab/expr.hpp"

namespace delaystab {

/// A time-varying coefficient together with its declared essential bounds on
/// [t0, inf). For sign-varying coefficients the bounds constrain the
/// magnitude: 0 <= |c(t)| <= upper.
struct CoefficientSpec {
    Expression fn;
    double lower = 0.0;
    double upper = 0.0;
    bool sign_varying = false;

    /// Declared bound on sup |c(t)|.
    double magnitude_bound() const {
        if (sign_varying) return upper;
        return std::max(std::fabs(lower), std::fabs(upper));
    }
};

/// A delayed argument h(t) = t - lag(t), described by its lag function and
/// the declared bound 0 <= lag(t) <= max_lag.
struct DelaySpec {
    Expression lag;
    double max_lag = 0.0;
};

/// Full description of the coupled system
///   x'' + a1(t) x'(h1(t)) + a2(t) x(h2(t)) + a3(t) u(h3(t)) = 0
///   u'  + b1(t) u(g1(t)) + b2(t) x(g2(t)) = 0
/// starting at t0 >= 0.
struct SystemSpec {
    CoefficientSpec a1, a2, a3, b1, b2;
    DelaySpec h1, h2, h3, g1, g2;
    double t0 = 0.0;

    double max_lag() const {
        return std::max({h1.max_lag, h2.max_lag, h3.max_lag, g1.max_lag, g2.max_lag});
    }

    /// Smallest positive declared lag bound; +inf when every lag is zero.
    double min_positive_lag() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : {h1.max_lag, h2.max_lag, h3.max_lag, g1.max_lag, g2.max_lag})
            if (v > 0.0) m = std::min(m, v);
        return m;
    }
};

enum class NormMode { declared, sampled };

inline const char* to_string(NormMode m) {
    return m == NormMode::declared ? "declared" : "sampled";
}

/// The ten sup-norm quantities entering the majorant matrix. In declared
/// mode every entry is a sound upper bound derived from the declared
/// coefficient bounds; in sampled mode entries are grid suprema of the
/// actual functions (sharper but not a proof).
struct NormTable {
    double n_a1 = 0, n_a2 = 0, n_a3 = 0, n_b1 = 0, n_b2 = 0;
    double r_a2_a1 = 0, r_a1_a2 = 0, r_a3_a1 = 0, r_a3_a2 = 0, r_b2_b1 = 0;
    NormMode mode = NormMode::declared;
};

struct ConditionResult {
    std::string name;
    bool passed = true;
    std::optional<double> first_violation_t;
    std::optional<double> violating_value;
    std::string detail;
};

struct ValidationReport {
    std::vector<ConditionResult> conditions;

    bool all_passed() const {
        return std::all_of(conditions.begin(), conditions.end(),
                           [](const ConditionResult& c) { return c.passed; });
    }

    const ConditionResult* first_failure() const {
        for (const auto& c : conditions)
            if (!c.passed) return &c;
        return nullptr;
    }
};

/// Sampling grid for falsifying declared bounds.
struct ValidationGrid {
    double step = 0.0;
    double horizon = 0.0;
};

/// Default grid: step = min(1, all positive max_lags)/100, horizon = t0 + 100.
inline ValidationGrid default_validation_grid(const SystemSpec& spec) {
    double m = 1.0;
    for (double v : {spec.h1.max_lag, spec.h2.max_lag, spec.h3.max_lag,
                     spec.g1.max_lag, spec.g2.max_lag})
        if (v > 0.0) m = std::min(m, v);
    return {m / 100.0, spec.t0 + 100.0};
}

inline ValidationGrid resolve_grid(const SystemSpec& spec, double grid_step, double horizon) {
    ValidationGrid g = default_validation_grid(spec);
    if (grid_step > 0.0) g.step = grid_step;
    if (horizon > spec.t0) g.horizon = horizon;
    return g;
}

namespace detail {

// Samples fn over [t0, horizon]; reports the first t where pred fails.
// Evaluation errors count as violations at the offending sample.
template <typename Pred>
inline void check_sampled(ConditionResult& cond, const Expression& fn,
                          double t0, const ValidationGrid& grid, Pred&& pred) {
    const auto n = static_cast<long long>(std::floor((grid.horizon - t0) / grid.step + 1e-9));
    for (long long i = 0; i <= n; ++i) {
        const double t = t0 + static_cast<double>(i) * grid.step;
        double v;
        try {
            v = fn.eval(t);
        } catch (const EvalError& e) {
            cond.passed = false;
            cond.first_violation_t = t;
            cond.detail = e.what();
            return;
        }
        if (!pred(v) || !std::isfinite(v)) {
            cond.passed = false;
            cond.first_violation_t = t;
            cond.violating_value = v;
            return;
        }
    }
}

// Rounding slack for bound comparisons: expression evaluation can land a few
// ulp past a declared bound that holds in exact arithmetic (e.g.
// 0.2 + 0.1*1 > 0.3 in doubles). Real violations are far larger.
inline double bound_slack(double lower, double upper) {
    return 1e-12 * std::max({1.0, std::fabs(lower), std::fabs(upper)});
}

inline ConditionResult check_coefficient(const std::string& name, const CoefficientSpec& c,
                                         double t0, const ValidationGrid& grid) {
    ConditionResult cond{name + "_bounds", true, {}, {}, {}};
    if (c.lower > c.upper) {
        cond.passed = false;
        cond.detail = "declared lower bound exceeds upper bound";
        return cond;
    }
    const double slack = bound_slack(c.lower, c.upper);
    if (c.sign_varying) {
        check_sampled(cond, c.fn, t0, grid,
                      [&](double v) { return std::fabs(v) <= c.upper + slack; });
        if (!cond.passed && cond.detail.empty())
            cond.detail = "|" + name + "(t)| exceeds declared bound " + std::to_string(c.upper);
    } else {
        check_sampled(cond, c.fn, t0, grid,
                      [&](double v) { return v >= c.lower - slack && v <= c.upper + slack; });
        if (!cond.passed && cond.detail.empty())
            cond.detail = name + "(t) outside declared bounds [" + std::to_string(c.lower) +
                          ", " + std::to_string(c.upper) + "]";
    }
    return cond;
}

inline ConditionResult check_lag(const std::string& name, const DelaySpec& d,
                                 double t0, const ValidationGrid& grid) {
    ConditionResult cond{name + "_lag_range", true, {}, {}, {}};
    if (d.max_lag < 0.0) {
        cond.passed = false;
        cond.detail = "declared max_lag is negative";
        return cond;
    }
    const double slack = bound_slack(0.0, d.max_lag);
    check_sampled(cond, d.lag, t0, grid,
                  [&](double v) { return v >= -slack && v <= d.max_lag + slack; });
    if (!cond.passed && cond.detail.empty())
        cond.detail = name + " lag outside [0, " + std::to_string(d.max_lag) + "]";
    return cond;
}

}  // namespace detail

/// Checks the standing assumptions against the declared bounds by dense
/// sampling on [t0, horizon]: coefficients within bounds, lags within
/// [0, max_lag], positive lower bounds for a1, a2, b1, and the damping
/// condition lower(a1)^2 >= 4 upper(a2). Violations are report entries,
/// never exceptions; the first violating sample (smallest t) is recorded.
inline ValidationReport validate(const SystemSpec& spec, double grid_step = 0.0,
                                 double horizon = 0.0) {
    const ValidationGrid grid = resolve_grid(spec, grid_step, horizon);
    ValidationReport report;

    {
        ConditionResult c{"t0_nonnegative", spec.t0 >= 0.0, {}, {}, {}};
        if (!c.passed) c.detail = "start time t0 must be >= 0";
        report.conditions.push_back(std::move(c));
    }

    const std::pair<const char*, const CoefficientSpec*> positives[] = {
        {"a1", &spec.a1}, {"a2", &spec.a2}, {"b1", &spec.b1}};
    for (auto [name, c] : positives) {
        ConditionResult cond{std::string(name) + "_positive_lower", c->lower > 0.0, {}, {}, {}};
        if (!cond.passed)
            cond.detail = std::string(name) + " requires a positive declared lower bound, got " +
                          std::to_string(c->lower);
        report.conditions.push_back(std::move(cond));
    }

    {
        ConditionResult cond{"damping_condition",
                             spec.a1.lower * spec.a1.lower >= 4.0 * spec.a2.upper, {}, {}, {}};
        if (!cond.passed)
            cond.detail = "lower(a1)^2 = " + std::to_string(spec.a1.lower * spec.a1.lower) +
                          " < 4 upper(a2) = " + std::to_string(4.0 * spec.a2.upper);
        report.conditions.push_back(std::move(cond));
    }

    report.conditions.push_back(detail::check_coefficient("a1", spec.a1, spec.t0, grid));
    report.conditions.push_back(detail::check_coefficient("a2", spec.a2, spec.t0, grid));
    report.conditions.push_back(detail::check_coefficient("a3", spec.a3, spec.t0, grid));
    report.conditions.push_back(detail::check_coefficient("b1", spec.b1, spec.t0, grid));
    report.conditions.push_back(detail::check_coefficient("b2", spec.b2, spec.t0, grid));

    report.conditions.push_back(detail::check_lag("h1", spec.h1, spec.t0, grid));
    report.conditions.push_back(detail::check_lag("h2", spec.h2, spec.t0, grid));
    report.conditions.push_back(detail::check_lag("h3", spec.h3, spec.t0, grid));
    report.conditions.push_back(detail::check_lag("g1", spec.g1, spec.t0, grid));
    report.conditions.push_back(detail::check_lag("g2", spec.g2, spec.t0, grid));

    return report;
}

namespace detail {

inline double sampled_sup(const Expression& fn, double t0, const ValidationGrid& grid) {
    const auto n = static_cast<long long>(std::floor((grid.horizon - t0) / grid.step + 1e-9));
    double sup = 0.0;
    for (long long i = 0; i <= n; ++i) {
        const double t = t0 + static_cast<double>(i) * grid.step;
        sup = std::max(sup, std::fabs(fn.eval(t)));
    }
    return sup;
}

inline double sampled_ratio_sup(const Expression& num, const Expression& den, double t0,
                                const ValidationGrid& grid, const char* den_name) {
    const auto n = static_cast<long long>(std::floor((grid.horizon - t0) / grid.step + 1e-9));
    double sup = 0.0;
    for (long long i = 0; i <= n; ++i) {
        const double t = t0 + static_cast<double>(i) * grid.step;
        const double d = den.eval(t);
        if (d <= 0.0)
            throw std::domain_error(std::string("sampled ") + den_name + "(t) is <= 0 at t = " +
                                    std::to_string(t) + "; ratio norm undefined");
        sup = std::max(sup, std::fabs(num.eval(t)) / d);
    }
    return sup;
}

}  // namespace detail

/// Builds the norm table for the majorant matrix. Declared mode uses bound
/// arithmetic only (a sound majorization: ||a_i|| <= upper(a_i) and
/// ||a_i/a_j|| <= upper(a_i)/lower(a_j)); sampled mode returns grid suprema
/// of the actual functions over [t0, horizon].
inline NormTable norm_bounds(const SystemSpec& spec, NormMode mode, double grid_step = 0.0,
                             double horizon = 0.0) {
    NormTable table;
    table.mode = mode;
    if (mode == NormMode::declared) {
        const std::pair<const char*, double> denominators[] = {
            {"a1", spec.a1.lower}, {"a2", spec.a2.lower}, {"b1", spec.b1.lower}};
        for (auto [name, lo] : denominators)
            if (lo <= 0.0)
                throw std::domain_error(std::string("declared lower bound of ") + name +
                                        " is <= 0; ratio norms undefined");
        table.n_a1 = spec.a1.magnitude_bound();
        table.n_a2 = spec.a2.magnitude_bound();
        table.n_a3 = spec.a3.magnitude_bound();
        table.n_b1 = spec.b1.magnitude_bound();
        table.n_b2 = spec.b2.magnitude_bound();
        table.r_a2_a1 = table.n_a2 / spec.a1.lower;
        table.r_a1_a2 = table.n_a1 / spec.a2.lower;
        table.r_a3_a1 = table.n_a3 / spec.a1.lower;
        table.r_a3_a2 = table.n_a3 / spec.a2.lower;
        table.r_b2_b1 = table.n_b2 / spec.b1.lower;
        return table;
    }
    const ValidationGrid grid = resolve_grid(spec, grid_step, horizon);
    const double t0 = spec.t0;
    table.n_a1 = detail::sampled_sup(spec.a1.fn, t0, grid);
    table.n_a2 = detail::sampled_sup(spec.a2.fn, t0, grid);
    table.n_a3 = detail::sampled_sup(spec.a3.fn, t0, grid);
    table.n_b1 = detail::sampled_sup(spec.b1.fn, t0, grid);
    table.n_b2 = detail::sampled_sup(spec.b2.fn, t0, grid);
    table.r_a2_a1 = detail::sampled_ratio_sup(spec.a2.fn, spec.a1.fn, t0, grid, "a1");
    table.r_a1_a2 = detail::sampled_ratio_sup(spec.a1.fn, spec.a2.fn, t0, grid, "a2");
    table.r_a3_a1 = detail::sampled_ratio_sup(spec.a3.fn, spec.a1.fn, t0, grid, "a1");
    table.r_a3_a2 = detail::sampled_ratio_sup(spec.a3.fn, spec.a2.fn, t0, grid, "a2");
    table.r_b2_b1 = detail::sampled_ratio_sup(spec.b2.fn, spec.b1.fn, t0, grid, "b1");
    return table;
}

}  // namespace delaystab
