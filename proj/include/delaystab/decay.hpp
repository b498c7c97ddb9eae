#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "delaystab/simulate.hpp"

namespace delaystab {

enum class DecayChannel { x, u, max_xu };

inline const char* to_string(DecayChannel c) {
    switch (c) {
        case DecayChannel::x: return "x";
        case DecayChannel::u: return "u";
        case DecayChannel::max_xu: return "max";
    }
    return "unknown";
}

/// Fitted exponential envelope M * exp(-mu * (t - t0)). `envelope_scale` is
/// M, `rate` is mu (1/seconds), `r_squared` reports the quality of the
/// least-squares line fit on the log envelope.
struct DecayEstimate {
    double envelope_scale = 0.0;  // M
    double rate = 0.0;            // mu
    double r_squared = 0.0;
    DecayChannel channel = DecayChannel::max_xu;
    double window = 0.0;
    int windows_used = 0;

    /// (window midpoint relative to t0, log envelope) pairs used in the fit.
    std::vector<std::pair<double, double>> fit_points;
};

/// Estimates (M, mu) from per-window maxima of |channel|: ordinary least
/// squares of log(window max) against the window midpoint. Windows whose
/// maximum falls below 1e-14 of the global maximum are discarded as
/// floating-point floor noise.
inline DecayEstimate estimate_decay(const Trajectory& traj, DecayChannel channel,
                                    double window) {
    if (!(window > 0.0)) throw std::invalid_argument("window must be positive");
    if (window <= traj.max_lag)
        throw std::invalid_argument("window must exceed the largest lag (" +
                                    std::to_string(traj.max_lag) + ")");
    const double span = traj.t_end() - traj.t0;
    if (span < 10.0 * window)
        throw std::invalid_argument("trajectory must span at least 10 windows");

    const auto windows = static_cast<std::size_t>(std::floor(span / window + 1e-9));
    std::vector<double> envelope(windows, 0.0);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double offset = traj.time(i) - traj.t0;
        auto k = static_cast<std::size_t>(offset / window);
        if (k >= windows) break;
        double v;
        switch (channel) {
            case DecayChannel::x: v = std::fabs(traj.x[i]); break;
            case DecayChannel::u: v = std::fabs(traj.u[i]); break;
            default: v = std::max(std::fabs(traj.x[i]), std::fabs(traj.u[i])); break;
        }
        envelope[k] = std::max(envelope[k], v);
    }

    double global_max = 0.0;
    for (double e : envelope) global_max = std::max(global_max, e);
    const double floor_level = 1e-14 * global_max;

    DecayEstimate est;
    est.channel = channel;
    est.window = window;
    for (std::size_t k = 0; k < windows; ++k) {
        if (envelope[k] < floor_level || envelope[k] <= 0.0) continue;
        const double midpoint = (static_cast<double>(k) + 0.5) * window;
        est.fit_points.emplace_back(midpoint, std::log(envelope[k]));
    }
    est.windows_used = static_cast<int>(est.fit_points.size());
    if (est.windows_used < 3)
        throw std::runtime_error("signal vanished or horizon too short");

    double sx = 0.0, sy = 0.0;
    for (const auto& [mx, my] : est.fit_points) {
        sx += mx;
        sy += my;
    }
    const double n = static_cast<double>(est.windows_used);
    const double mean_x = sx / n, mean_y = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [mx, my] : est.fit_points) {
        sxx += (mx - mean_x) * (mx - mean_x);
        sxy += (mx - mean_x) * (my - mean_y);
        syy += (my - mean_y) * (my - mean_y);
    }
    const double slope = sxy / sxx;
    const double intercept = mean_y - slope * mean_x;
    est.rate = -slope;
    est.envelope_scale = std::exp(intercept);

    double ss_res = 0.0;
    for (const auto& [mx, my] : est.fit_points) {
        const double r = my - (intercept + slope * mx);
        ss_res += r * r;
    }
    est.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return est;
}

}  // namespace delaystab
