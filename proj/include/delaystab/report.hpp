#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "delaystab/config.hpp"
#include "delaystab/decay.hpp"
#include "delaystab/simulate.hpp"
#include "delaystab/stability.hpp"

namespace delaystab {

inline constexpr const char* kToolName = "delaystab";
inline constexpr const char* kToolVersion = "0.1.0";

using Report = nlohmann::ordered_json;

namespace detail {

inline std::string format_full_precision(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

}  // namespace detail

inline Report hypotheses_json(const ValidationReport& report) {
    Report out = Report::array();
    for (const auto& c : report.conditions) {
        Report entry;
        entry["name"] = c.name;
        entry["passed"] = c.passed;
        entry["first_violation_t"] =
            c.first_violation_t ? Report(*c.first_violation_t) : Report(nullptr);
        entry["violating_value"] =
            c.violating_value ? Report(*c.violating_value) : Report(nullptr);
        entry["detail"] = c.detail;
        out.push_back(std::move(entry));
    }
    return out;
}

inline Report norms_json(const NormTable& n) {
    Report out;
    out["mode"] = to_string(n.mode);
    out["n_a1"] = n.n_a1;
    out["n_a2"] = n.n_a2;
    out["n_a3"] = n.n_a3;
    out["n_b1"] = n.n_b1;
    out["n_b2"] = n.n_b2;
    out["r_a2_a1"] = n.r_a2_a1;
    out["r_a1_a2"] = n.r_a1_a2;
    out["r_a3_a1"] = n.r_a3_a1;
    out["r_a3_a2"] = n.r_a3_a2;
    out["r_b2_b1"] = n.r_b2_b1;
    return out;
}

inline Report matrix_json(const Mat5& m) {
    Report rows = Report::array();
    for (const auto& row : m) {
        Report r = Report::array();
        for (double v : row) r.push_back(v);
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Report decay_json(const DecayEstimate& est) {
    Report out;
    out["M"] = est.envelope_scale;
    out["mu"] = est.rate;
    out["r_squared"] = est.r_squared;
    out["channel"] = to_string(est.channel);
    out["window"] = est.window;
    out["windows_used"] = est.windows_used;
    return out;
}

inline Report apriori_json(const AprioriReport& r) {
    Report out;
    auto vec = [](const Vec5& v) {
        Report a = Report::array();
        for (double e : v) a.push_back(e);
        return a;
    };
    out["measured"] = vec(r.measured);
    out["forcing_majorant"] = vec(r.forcing_majorant);
    out["bound"] = vec(r.bound);
    out["entrywise_ok"] = r.entrywise_ok;
    Report ineqs = Report::array();
    for (const auto& q : r.inequalities) {
        Report e;
        e["name"] = q.name;
        e["lhs"] = q.lhs;
        e["rhs"] = q.rhs;
        e["holds"] = q.holds;
        ineqs.push_back(std::move(e));
    }
    out["inequalities"] = std::move(ineqs);
    out["tolerance"] = r.tolerance;
    return out;
}

inline Report first_order_json(const FirstOrderCheck& c) {
    Report out;
    out["passed"] = c.passed;
    out["product"] = c.product;
    out["limit"] = c.limit;
    out["three_halves"] = c.three_halves;
    out["note"] = c.note;
    return out;
}

/// Skeleton report with the canonical top-level keys; command handlers fill
/// in their sections. Reports are deterministic byte-for-byte for a given
/// config and tool version (no timestamps anywhere in the payload).
inline Report make_report(const std::string& command, const RunConfig& config,
                          const std::string& mode) {
    Report report;
    report["verdict"] = nullptr;
    report["method"] = nullptr;
    report["marginal"] = nullptr;
    report["failure_reason"] = nullptr;
    report["corollary_lhs"] = nullptr;
    report["matrix"] = nullptr;
    report["spectral_radius"] = nullptr;
    report["minors"] = nullptr;
    report["hypotheses"] = nullptr;
    report["norms"] = nullptr;
    report["first_order"] = nullptr;
    report["decay"] = nullptr;
    report["apriori"] = nullptr;
    Report meta;
    meta["tool"] = kToolName;
    meta["version"] = kToolVersion;
    meta["command"] = command;
    meta["config_sha256"] = config.config_sha256;
    meta["mode"] = mode;
    meta["t0"] = config.system.t0;
    meta["t0_policy"] =
        "certificate evaluated at the configured start time only; no search over later start times";
    meta["step_warning"] = nullptr;
    meta["small_lag_fallbacks"] = nullptr;
    report["metadata"] = std::move(meta);
    return report;
}

inline void fill_certificate(Report& report, const Certificate& cert) {
    report["verdict"] = to_string(cert.verdict);
    report["method"] = to_string(cert.method);
    report["marginal"] = cert.marginal;
    report["failure_reason"] =
        cert.failure_reason.empty() ? Report(nullptr) : Report(cert.failure_reason);
    report["corollary_lhs"] =
        cert.corollary_lhs ? Report(*cert.corollary_lhs) : Report(nullptr);
    report["hypotheses"] = hypotheses_json(cert.hypothesis_report);
    if (cert.algebra_computed) {
        report["matrix"] = matrix_json(cert.matrix);
        report["spectral_radius"] = cert.spectral_radius;
        Report minors = Report::array();
        for (double v : cert.leading_minors) minors.push_back(v);
        report["minors"] = std::move(minors);
        report["norms"] = norms_json(cert.norms);
    }
}

inline void fill_trajectory_metadata(Report& report, const Trajectory& traj) {
    report["metadata"]["step_warning"] = traj.step_warning;
    report["metadata"]["small_lag_fallbacks"] = traj.small_lag_fallbacks;
}

/// CSV export: header `t,x,dx,ddx,u,du`, one row per grid point, 17
/// significant digits.
inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open trajectory CSV for writing: " + path);
    out << "t,x,dx,ddx,u,du\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << detail::format_full_precision(traj.time(i)) << ','
            << detail::format_full_precision(traj.x[i]) << ','
            << detail::format_full_precision(traj.dx[i]) << ','
            << detail::format_full_precision(traj.ddx[i]) << ','
            << detail::format_full_precision(traj.u[i]) << ','
            << detail::format_full_precision(traj.du[i]) << '\n';
    }
    if (!out) throw std::runtime_error("failed writing trajectory CSV: " + path);
}

/// Two-column plot data (window midpoint relative to t0, log envelope).
inline void write_plot_data(const DecayEstimate& est, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open plot data file for writing: " + path);
    for (const auto& [midpoint, log_env] : est.fit_points)
        out << detail::format_full_precision(midpoint) << ' '
            << detail::format_full_precision(log_env) << '\n';
    if (!out) throw std::runtime_error("failed writing plot data: " + path);
}

}  // namespace delaystab
