#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaystab/model.hpp"
#include "delaystab/stability.hpp"

namespace delaystab {

/// History functions for x, x' and u on [t0 - max_lag, t0].
struct InitialData {
    Expression phi1, phi2, psi;
};

inline InitialData zero_initial_data() {
    return {Expression::parse("0"), Expression::parse("0"), Expression::parse("0")};
}

/// Right-hand sides f1, f2 with declared sup bounds on [t0, inf).
struct ForcingSpec {
    Expression f1, f2;
    double f1_bound = 0.0;
    double f2_bound = 0.0;
};

inline ForcingSpec zero_forcing() {
    return {Expression::parse("0"), Expression::parse("0"), 0.0, 0.0};
}

class BlowUpError : public std::runtime_error {
public:
    explicit BlowUpError(double time)
        : std::runtime_error("solution became non-finite at t = " + std::to_string(time)),
          time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

namespace detail {

// Cubic Hermite on a segment of length h, local coordinate theta in [0, 1].
inline double hermite(double theta, double h, double v0, double d0, double v1, double d1) {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * v0 + (t3 - 2.0 * t2 + theta) * h * d0 +
           (-2.0 * t3 + 3.0 * t2) * v1 + (t3 - t2) * h * d1;
}

// Weight of the right-endpoint derivative in the cubic Hermite value.
inline double hermite_right_weight(double theta, double h) {
    const double t2 = theta * theta;
    return (t2 * theta - t2) * h;
}

}  // namespace detail

/// Dense numeric solution on a uniform grid. x'' and u' are computed
/// algebraically from the governing equations at every node, never by
/// differencing. Delayed lookups between nodes use cubic Hermite
/// interpolation; times at or before t0 evaluate the history expressions.
struct Trajectory {
    double t0 = 0.0;
    double step = 0.0;
    double max_lag = 0.0;
    std::vector<double> x, dx, ddx, u, du;
    InitialData history;
    long long small_lag_fallbacks = 0;
    bool step_warning = false;

    std::size_t size() const { return x.size(); }
    double time(std::size_t i) const { return t0 + static_cast<double>(i) * step; }
    double t_end() const { return time(size() - 1); }

    double x_at(double s) const { return dense(x, dx, history.phi1, s); }
    double dx_at(double s) const { return dense(dx, ddx, history.phi2, s); }
    double u_at(double s) const { return dense(u, du, history.psi, s); }

private:
    double dense(const std::vector<double>& value, const std::vector<double>& deriv,
                 const Expression& hist, double s) const {
        if (s <= t0) return hist.eval(s);
        if (s > t_end() + 1e-9 * std::max(1.0, std::fabs(t_end())))
            throw std::out_of_range("lookup past the end of the trajectory");
        const double rel = (s - t0) / step;
        auto j = static_cast<std::size_t>(rel);
        if (j >= size() - 1) j = size() - 2;
        const double theta = rel - static_cast<double>(j);
        return detail::hermite(theta, step, value[j], deriv[j], value[j + 1], deriv[j + 1]);
    }
};

namespace detail {

enum class Channel { x, dx, u };

class DdeStepper {
public:
    DdeStepper(const SystemSpec& spec, const InitialData& init, const ForcingSpec& forcing,
               double t_end, double step)
        : spec_(spec), forcing_(forcing), h_(step) {
        if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
        if (!(t_end > spec.t0)) throw std::invalid_argument("t_end must exceed t0");
        traj_.t0 = spec.t0;
        traj_.step = step;
        traj_.max_lag = spec.max_lag();
        traj_.history = init;
        const double min_lag = spec.min_positive_lag();
        if (std::isfinite(min_lag) && step > min_lag / 10.0) traj_.step_warning = true;
        n_ = static_cast<std::size_t>(std::ceil((t_end - spec.t0) / step - 1e-9));
        if (n_ < 1) n_ = 1;
    }

    Trajectory run() {
        traj_.x.resize(n_ + 1);
        traj_.dx.resize(n_ + 1);
        traj_.ddx.resize(n_ + 1);
        traj_.u.resize(n_ + 1);
        traj_.du.resize(n_ + 1);

        const double t0 = traj_.t0;
        traj_.x[0] = traj_.history.phi1.eval(t0);
        traj_.dx[0] = traj_.history.phi2.eval(t0);
        traj_.u[0] = traj_.history.psi.eval(t0);
        compute_node_derivatives(0);
        check_finite(0);

        for (std::size_t i = 0; i < n_; ++i) {
            node_ = i;
            const double t = traj_.time(i);
            const State y{traj_.x[i], traj_.dx[i], traj_.u[i]};
            const State k1{traj_.dx[i], traj_.ddx[i], traj_.du[i]};
            const State y2{y.x + 0.5 * h_ * k1.x, y.dx + 0.5 * h_ * k1.dx, y.u + 0.5 * h_ * k1.u};
            const State k2 = rhs(t + 0.5 * h_, y2);
            const State y3{y.x + 0.5 * h_ * k2.x, y.dx + 0.5 * h_ * k2.dx, y.u + 0.5 * h_ * k2.u};
            const State k3 = rhs(t + 0.5 * h_, y3);
            const State y4{y.x + h_ * k3.x, y.dx + h_ * k3.dx, y.u + h_ * k3.u};
            const State k4 = rhs(t + h_, y4);
            traj_.x[i + 1] = y.x + (h_ / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
            traj_.dx[i + 1] = y.dx + (h_ / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
            traj_.u[i + 1] = y.u + (h_ / 6.0) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
            node_ = i + 1;
            compute_node_derivatives(i + 1);
            check_finite(i + 1);
        }
        return std::move(traj_);
    }

private:
    struct State {
        double x, dx, u;
    };

    const SystemSpec& spec_;
    const ForcingSpec& forcing_;
    Trajectory traj_;
    double h_;
    std::size_t n_ = 0;
    std::size_t node_ = 0;  // index of the last fully computed node

    void check_finite(std::size_t i) const {
        for (double v : {traj_.x[i], traj_.dx[i], traj_.u[i], traj_.ddx[i], traj_.du[i]})
            if (!std::isfinite(v)) throw BlowUpError(traj_.time(i));
    }

    const std::vector<double>& values(Channel c) const {
        switch (c) {
            case Channel::x: return traj_.x;
            case Channel::dx: return traj_.dx;
            default: return traj_.u;
        }
    }

    const std::vector<double>& derivatives(Channel c) const {
        switch (c) {
            case Channel::x: return traj_.dx;
            case Channel::dx: return traj_.ddx;
            default: return traj_.du;
        }
    }

    double history_value(Channel c, double s) const {
        switch (c) {
            case Channel::x: return traj_.history.phi1.eval(s);
            case Channel::dx: return traj_.history.phi2.eval(s);
            default: return traj_.history.psi.eval(s);
        }
    }

    // Interpolation over segments [j, j+1], j + 1 <= limit; caller
    // guarantees s <= time(limit).
    double dense_value(Channel c, double s, std::size_t limit) const {
        const double rel = (s - traj_.t0) / h_;
        auto j = static_cast<std::size_t>(rel);
        if (j >= limit) j = limit - 1;
        const double theta = rel - static_cast<double>(j);
        const auto& v = values(c);
        const auto& d = derivatives(c);
        return hermite(theta, h_, v[j], d[j], v[j + 1], d[j + 1]);
    }

    // Delayed lookup during a Runge-Kutta stage at stage_t with stage state
    // sy; the most recent complete node is node_.
    double lookup(Channel c, double s, double stage_t, const State& sy) {
        if (s >= stage_t) {
            if (s - stage_t > 1e-9 * std::max(1.0, std::fabs(stage_t)))
                throw std::runtime_error("advanced argument: negative lag at t = " +
                                         std::to_string(stage_t));
            switch (c) {  // zero lag: the stage state itself
                case Channel::x: return sy.x;
                case Channel::dx: return sy.dx;
                default: return sy.u;
            }
        }
        if (s <= traj_.t0) return history_value(c, s);
        const double t_node = traj_.time(node_);
        if (s > t_node) {
            // lag shorter than the stage offset: predict from the step start
            ++traj_.small_lag_fallbacks;
            return values(c)[node_] + (s - t_node) * derivatives(c)[node_];
        }
        return dense_value(c, s, node_);
    }

    State rhs(double stage_t, const State& sy) {
        const double s1 = stage_t - spec_.h1.lag.eval(stage_t);
        const double s2 = stage_t - spec_.h2.lag.eval(stage_t);
        const double s3 = stage_t - spec_.h3.lag.eval(stage_t);
        const double sg1 = stage_t - spec_.g1.lag.eval(stage_t);
        const double sg2 = stage_t - spec_.g2.lag.eval(stage_t);
        const double ddx = forcing_.f1.eval(stage_t) -
                           spec_.a1.fn.eval(stage_t) * lookup(Channel::dx, s1, stage_t, sy) -
                           spec_.a2.fn.eval(stage_t) * lookup(Channel::x, s2, stage_t, sy) -
                           spec_.a3.fn.eval(stage_t) * lookup(Channel::u, s3, stage_t, sy);
        const double du = forcing_.f2.eval(stage_t) -
                          spec_.b1.fn.eval(stage_t) * lookup(Channel::u, sg1, stage_t, sy) -
                          spec_.b2.fn.eval(stage_t) * lookup(Channel::x, sg2, stage_t, sy);
        return {sy.dx, ddx, du};
    }

    // Lookup for the algebraic node derivatives at node k. When s falls in
    // the just-finished segment (t_{k-1}, t_k) whose right-endpoint
    // derivative is the value being computed, the caller receives the known
    // part plus the Hermite weight of that unknown (`implicit_weight`) and
    // solves the resulting scalar linear equation.
    double node_lookup(Channel c, double s, std::size_t k, double* implicit_weight) {
        const double t = traj_.time(k);
        if (implicit_weight != nullptr) *implicit_weight = 0.0;
        if (s >= t) {
            if (s - t > 1e-9 * std::max(1.0, std::fabs(t)))
                throw std::runtime_error("advanced argument: negative lag at t = " +
                                         std::to_string(t));
            return values(c)[k];
        }
        if (s <= traj_.t0) return history_value(c, s);
        if (k >= 1 && s > traj_.time(k - 1)) {
            // same arithmetic as the dense accessors, so stored node
            // derivatives reproduce bit-identically from the trajectory
            const double theta = (s - traj_.t0) / h_ - static_cast<double>(k - 1);
            const auto& v = values(c);
            const auto& d = derivatives(c);
            if (c == Channel::x || implicit_weight == nullptr) {
                // both endpoint derivatives already known
                return hermite(theta, h_, v[k - 1], d[k - 1], v[k], d[k]);
            }
            ++traj_.small_lag_fallbacks;
            *implicit_weight = hermite_right_weight(theta, h_);
            return hermite(theta, h_, v[k - 1], d[k - 1], v[k], 0.0);
        }
        return dense_value(c, s, k >= 1 ? k - 1 : 1);
    }

    // u' first (it does not depend on x''), then x''.
    void compute_node_derivatives(std::size_t k) {
        const double t = traj_.time(k);
        {
            const double sg1 = t - spec_.g1.lag.eval(t);
            const double sg2 = t - spec_.g2.lag.eval(t);
            double w = 0.0;
            const double u_part = node_lookup(Channel::u, sg1, k, &w);
            const double x_val = node_lookup(Channel::x, sg2, k, nullptr);
            const double b1v = spec_.b1.fn.eval(t);
            const double numer = forcing_.f2.eval(t) - b1v * u_part - spec_.b2.fn.eval(t) * x_val;
            traj_.du[k] = numer / (1.0 + b1v * w);
        }
        {
            const double s1 = t - spec_.h1.lag.eval(t);
            const double s2 = t - spec_.h2.lag.eval(t);
            const double s3 = t - spec_.h3.lag.eval(t);
            double w = 0.0;
            const double dx_part = node_lookup(Channel::dx, s1, k, &w);
            const double x_val = node_lookup(Channel::x, s2, k, nullptr);
            const double u_val = node_lookup(Channel::u, s3, k, nullptr);
            const double a1v = spec_.a1.fn.eval(t);
            const double numer = forcing_.f1.eval(t) - a1v * dx_part -
                                 spec_.a2.fn.eval(t) * x_val - spec_.a3.fn.eval(t) * u_val;
            traj_.ddx[k] = numer / (1.0 + a1v * w);
        }
    }
};

}  // namespace detail

/// Integrates the coupled system by the method of steps: classic fixed-step
/// RK4 on (x, x', u) with delayed values read from the dense Hermite history.
/// Deterministic: identical inputs give bit-identical output. A warning flag
/// is set when step > (smallest positive max_lag)/10; lags that dip below
/// the step are handled by the fallback rules and counted in
/// `small_lag_fallbacks`.
inline Trajectory integrate(const SystemSpec& spec, const InitialData& init,
                            const ForcingSpec& forcing, double t_end, double step) {
    return detail::DdeStepper(spec, init, forcing, t_end, step).run();
}

/// Solution of x'' + a(t) x' + b(t) x = 0 from x(s) = 0, x'(s) = 1,
/// tabulated on [s, t_end].
struct FundamentalSolution {
    double start = 0.0;
    double step = 0.0;
    std::vector<double> x, dx;

    std::size_t size() const { return x.size(); }
    double time(std::size_t i) const { return start + static_cast<double>(i) * step; }
};

inline FundamentalSolution fundamental_function(const Expression& a, const Expression& b,
                                                double s, double t_end, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    if (!(t_end > s)) throw std::invalid_argument("t_end must exceed s");
    const auto n = static_cast<std::size_t>(std::ceil((t_end - s) / step - 1e-9));
    FundamentalSolution sol;
    sol.start = s;
    sol.step = step;
    sol.x.resize(n + 1);
    sol.dx.resize(n + 1);
    sol.x[0] = 0.0;
    sol.dx[0] = 1.0;
    auto f = [&](double t, double xv, double dv, double& kx, double& kd) {
        kx = dv;
        kd = -a.eval(t) * dv - b.eval(t) * xv;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double t = sol.time(i);
        const double xv = sol.x[i], dv = sol.dx[i];
        double k1x, k1d, k2x, k2d, k3x, k3d, k4x, k4d;
        f(t, xv, dv, k1x, k1d);
        f(t + 0.5 * step, xv + 0.5 * step * k1x, dv + 0.5 * step * k1d, k2x, k2d);
        f(t + 0.5 * step, xv + 0.5 * step * k2x, dv + 0.5 * step * k2d, k3x, k3d);
        f(t + step, xv + step * k3x, dv + step * k3d, k4x, k4d);
        sol.x[i + 1] = xv + (step / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        sol.dx[i + 1] = dv + (step / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        if (!std::isfinite(sol.x[i + 1]) || !std::isfinite(sol.dx[i + 1]))
            throw BlowUpError(sol.time(i + 1));
    }
    return sol;
}

/// Positivity of the fundamental kernel and the integral bound
/// int_{t_origin}^t X(t, s) b(s) ds <= 1, checked numerically.
struct KernelSampleResult {
    double s = 0.0;
    double min_value = 0.0;
    bool positive = false;
};

struct KernelIntegralResult {
    double t = 0.0;
    double integral = 0.0;
    bool within_bound = false;
};

struct KernelBoundReport {
    std::vector<KernelSampleResult> positivity;
    std::vector<KernelIntegralResult> integrals;
    double positivity_tol = 0.0;
    double quad_tol = 0.0;

    bool all_passed() const {
        for (const auto& p : positivity)
            if (!p.positive) return false;
        for (const auto& q : integrals)
            if (!q.within_bound) return false;
        return true;
    }
};

/// Verifies, for the second-order kernel of x'' + a(t) x' + b(t) x = 0 under
/// the damping hypotheses (0 < alpha <= a <= A, 0 < beta <= b <= B,
/// alpha^2 >= 4B, checked against the declared bounds before any
/// integration): X(t, s) stays above -positivity_tol for each s in
/// s_samples, and the kernel integral stays <= 1 + quad_tol on a mesh of t
/// values. The quadrature is trapezoidal with node spacing 10*step.
inline KernelBoundReport check_fundamental_bounds(const CoefficientSpec& a,
                                                  const CoefficientSpec& b,
                                                  const std::vector<double>& s_samples,
                                                  double t_end, double step,
                                                  double t_origin = 0.0,
                                                  int integral_checks = 10,
                                                  double quad_tol = 1e-3,
                                                  double positivity_tol = 1e-9) {
    if (!(a.lower > 0.0) || !(b.lower > 0.0))
        throw std::invalid_argument("kernel hypotheses require positive lower bounds");
    if (a.lower * a.lower < 4.0 * b.upper)
        throw std::invalid_argument("kernel hypotheses require lower(a)^2 >= 4 upper(b)");
    if (a.lower > a.upper || b.lower > b.upper)
        throw std::invalid_argument("declared lower bound exceeds upper bound");
    if (!(t_end > t_origin)) throw std::invalid_argument("t_end must exceed t_origin");

    KernelBoundReport report;
    report.positivity_tol = positivity_tol;
    report.quad_tol = quad_tol;

    for (double s : s_samples) {
        const FundamentalSolution sol = fundamental_function(a.fn, b.fn, s, t_end, step);
        double min_value = 0.0;
        for (double v : sol.x) min_value = std::min(min_value, v);
        report.positivity.push_back({s, min_value, min_value > -positivity_tol});
    }

    const double mesh = 10.0 * step;
    const auto nodes = static_cast<std::size_t>(std::floor((t_end - t_origin) / mesh + 1e-9));
    if (nodes < 2) return report;

    const auto stride = static_cast<std::size_t>(
        std::max<std::size_t>(1, nodes / static_cast<std::size_t>(std::max(1, integral_checks))));
    std::vector<std::size_t> t_indices;
    for (std::size_t j = stride; j <= nodes; j += stride) t_indices.push_back(j);
    if (t_indices.empty() || t_indices.back() != nodes) t_indices.push_back(nodes);

    // kernel[j][c] = X(t_c, s_j) for t_c >= s_j
    std::vector<std::vector<double>> kernel(nodes + 1,
                                            std::vector<double>(t_indices.size(), 0.0));
    for (std::size_t j = 0; j <= nodes; ++j) {
        const double s = t_origin + static_cast<double>(j) * mesh;
        if (s >= t_end) break;
        const FundamentalSolution sol = fundamental_function(a.fn, b.fn, s, t_end, step);
        for (std::size_t c = 0; c < t_indices.size(); ++c) {
            const double t = t_origin + static_cast<double>(t_indices[c]) * mesh;
            if (t < s) continue;
            const auto idx = static_cast<std::size_t>(std::llround((t - s) / step));
            kernel[j][c] = idx < sol.size() ? sol.x[idx] : sol.x.back();
        }
    }

    for (std::size_t c = 0; c < t_indices.size(); ++c) {
        const std::size_t last = t_indices[c];
        const double t = t_origin + static_cast<double>(last) * mesh;
        double integral = 0.0;
        for (std::size_t j = 0; j < last; ++j) {
            const double s0 = t_origin + static_cast<double>(j) * mesh;
            const double s1 = t_origin + static_cast<double>(j + 1) * mesh;
            const double g0 = kernel[j][c] * b.fn.eval(s0);
            const double g1 = kernel[j + 1][c] * b.fn.eval(s1);
            integral += 0.5 * mesh * (g0 + g1);
        }
        report.integrals.push_back({t, integral, integral <= 1.0 + quad_tol});
    }
    return report;
}

/// Bounded-response probe: integrates from identically zero initial data
/// under the given forcing and reports, per channel, the sup over the full
/// horizon and whether the running sup has saturated (sup over the first
/// 80% of the horizon within 1% of the full-horizon sup).
struct ProbeChannel {
    double sup = 0.0;
    double sup_through_80pct = 0.0;
    bool stabilized = false;
};

struct ProbeReport {
    ProbeChannel x, dx, u;
    Trajectory trajectory;

    bool all_stabilized() const { return x.stabilized && dx.stabilized && u.stabilized; }
};

namespace detail {

inline void verify_forcing_bounds(const ForcingSpec& forcing, double t0, double t_end,
                                  double step) {
    const auto n = static_cast<std::size_t>(std::ceil((t_end - t0) / step - 1e-9));
    const double slack1 = 1e-12 * std::max(1.0, forcing.f1_bound);
    const double slack2 = 1e-12 * std::max(1.0, forcing.f2_bound);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = t0 + static_cast<double>(i) * step;
        if (std::fabs(forcing.f1.eval(t)) > forcing.f1_bound + slack1)
            throw std::invalid_argument("f1 exceeds its declared bound at t = " +
                                        std::to_string(t));
        if (std::fabs(forcing.f2.eval(t)) > forcing.f2_bound + slack2)
            throw std::invalid_argument("f2 exceeds its declared bound at t = " +
                                        std::to_string(t));
    }
}

inline ProbeChannel probe_channel(const Trajectory& traj, const std::vector<double>& series) {
    ProbeChannel ch;
    const double cutoff = traj.t0 + 0.8 * (traj.t_end() - traj.t0);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double v = std::fabs(series[i]);
        ch.sup = std::max(ch.sup, v);
        if (traj.time(i) <= cutoff) ch.sup_through_80pct = std::max(ch.sup_through_80pct, v);
    }
    ch.stabilized = (ch.sup - ch.sup_through_80pct) <= 0.01 * ch.sup;
    return ch;
}

}  // namespace detail

inline ProbeReport bohl_perron_probe(const SystemSpec& spec, const ForcingSpec& forcing,
                                     double t_end, double step) {
    detail::verify_forcing_bounds(forcing, spec.t0, t_end, step);
    ProbeReport report;
    report.trajectory = integrate(spec, zero_initial_data(), forcing, t_end, step);
    report.x = detail::probe_channel(report.trajectory, report.trajectory.x);
    report.dx = detail::probe_channel(report.trajectory, report.trajectory.dx);
    report.u = detail::probe_channel(report.trajectory, report.trajectory.u);
    return report;
}

/// Numerical check of the a-priori estimate chain on a finite horizon: the
/// measured sup-norm vector (||x||, ||x'||, ||x''||, ||u||, ||u'||) from a
/// zero-initial-data run must lie entrywise below (I - A)^{-1} F_up, where
/// F_up is the sound forcing majorant, and the five intermediate
/// inequalities must hold with the same norms.
struct AprioriInequality {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

struct AprioriReport {
    Vec5 measured{};
    Vec5 forcing_majorant{};
    Vec5 bound{};
    bool entrywise_ok = false;
    std::array<AprioriInequality, 5> inequalities{};
    double tolerance = 0.0;

    bool all_hold() const {
        if (!entrywise_ok) return false;
        for (const auto& q : inequalities)
            if (!q.holds) return false;
        return true;
    }
};

inline AprioriReport verify_apriori(const SystemSpec& spec, const ForcingSpec& forcing,
                                    const Certificate& certificate, double t1, double step) {
    if (certificate.verdict != Verdict::certified_stable)
        throw std::invalid_argument(
            "verify_apriori requires a certified_stable certificate for the system");
    detail::verify_forcing_bounds(forcing, spec.t0, t1, step);

    const Trajectory traj = integrate(spec, zero_initial_data(), forcing, t1, step);

    AprioriReport report;
    report.tolerance = 1e-9;
    auto sup = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double e : v) s = std::max(s, std::fabs(e));
        return s;
    };
    report.measured = {sup(traj.x), sup(traj.dx), sup(traj.ddx), sup(traj.u), sup(traj.du)};

    report.forcing_majorant = {forcing.f1_bound / spec.a2.lower,
                               forcing.f1_bound / spec.a1.lower,
                               forcing.f1_bound,
                               forcing.f2_bound / spec.b1.lower,
                               forcing.f2_bound};

    Mat5 b = identity5();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) b[i][j] -= certificate.matrix[i][j];
    report.bound = solve_linear(b, report.forcing_majorant);

    auto within = [&](double lhs, double rhs) {
        return lhs <= rhs + report.tolerance * std::max(1.0, std::fabs(rhs));
    };
    report.entrywise_ok = true;
    for (std::size_t i = 0; i < 5; ++i)
        if (!within(report.measured[i], report.bound[i])) report.entrywise_ok = false;

    const NormTable& n = certificate.norms;
    const double tau1 = spec.h1.max_lag, tau2 = spec.h2.max_lag, sigma1 = spec.g1.max_lag;
    const Vec5& m = report.measured;
    const Vec5& f = report.forcing_majorant;
    report.inequalities[0] = {"ddx_triangle", m[2],
                              n.n_a1 * m[1] + n.n_a2 * m[0] + n.n_a3 * m[3] + f[2], false};
    report.inequalities[1] = {"dx_estimate", m[1],
                              tau1 * m[2] + n.r_a2_a1 * m[0] + n.r_a3_a1 * m[3] + f[1], false};
    report.inequalities[2] = {"x_estimate", m[0],
                              tau1 * n.r_a1_a2 * m[2] + tau2 * m[1] + n.r_a3_a2 * m[3] + f[0],
                              false};
    report.inequalities[3] = {"du_triangle", m[4], n.n_b1 * m[3] + n.n_b2 * m[0] + f[4], false};
    report.inequalities[4] = {"u_estimate", m[3], n.r_b2_b1 * m[0] + sigma1 * m[4] + f[3], false};
    for (auto& q : report.inequalities) q.holds = within(q.lhs, q.rhs);
    return report;
}

}  // namespace delaystab
