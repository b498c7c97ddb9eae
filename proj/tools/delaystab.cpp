#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "delaystab/delaystab.hpp"

namespace {

using namespace delaystab;

struct CliOptions {
    std::string config_path;
    double step = 0.0;
    double t_end = 0.0;
    double grid_step = 0.0;
    double horizon = 0.0;
    std::string mode = "declared";
    bool three_halves = false;
    std::string out;
};

NormMode parse_mode(const std::string& mode) {
    return mode == "sampled" ? NormMode::sampled : NormMode::declared;
}

double pick(double cli_value, double config_value) {
    return cli_value > 0.0 ? cli_value : config_value;
}

void emit_report(const Report& report, const CliOptions& opts, const RunConfig& config) {
    const std::string path = !opts.out.empty() ? opts.out : config.outputs.report;
    const std::string text = report.dump(2) + "\n";
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open report file for writing: " + path);
    out << text;
}

void add_first_order_block(Report& report, const RunConfig& config, bool three_halves) {
    if (config.system.b1.upper > 0.0)
        report["first_order"] = first_order_json(
            check_first_order(config.system.b1.upper, config.system.g1.max_lag, three_halves));
}

int run_validate(const RunConfig& config, const CliOptions& opts) {
    Report report = make_report("validate", config, opts.mode);
    const ValidationReport vr = validate(config.system, pick(opts.grid_step, config.numerics.grid_step),
                                         pick(opts.horizon, config.numerics.horizon));
    report["hypotheses"] = hypotheses_json(vr);
    report["verdict"] = vr.all_passed() ? "pass" : "fail";
    if (const auto* f = vr.first_failure()) report["failure_reason"] = f->name;
    emit_report(report, opts, config);
    return vr.all_passed() ? 0 : 1;
}

int run_certify(const RunConfig& config, const CliOptions& opts) {
    Report report = make_report("certify", config, opts.mode);
    const Certificate cert =
        certify(config.system, parse_mode(opts.mode), pick(opts.grid_step, config.numerics.grid_step),
                pick(opts.horizon, config.numerics.horizon));
    fill_certificate(report, cert);
    add_first_order_block(report, config, opts.three_halves);
    emit_report(report, opts, config);
    return cert.verdict == Verdict::certified_stable ? 0 : 1;
}

int run_certify_corollary(const RunConfig& config, const CliOptions& opts) {
    Report report = make_report("certify-corollary", config, opts.mode);
    const Certificate cert =
        certify_corollary(config.system, pick(opts.grid_step, config.numerics.grid_step),
                          pick(opts.horizon, config.numerics.horizon));
    fill_certificate(report, cert);
    add_first_order_block(report, config, opts.three_halves);
    emit_report(report, opts, config);
    return cert.verdict == Verdict::certified_stable ? 0 : 1;
}

int run_simulate(const RunConfig& config, const CliOptions& opts) {
    Report report = make_report("simulate", config, opts.mode);
    const double step = pick(opts.step, config.resolved_step());
    const double t_end = pick(opts.t_end, config.resolved_t_end());
    const Trajectory traj = integrate(config.system, config.initial, config.forcing, t_end, step);
    const std::string csv_path = config.outputs.trajectory_csv.empty()
                                     ? "trajectory.csv"
                                     : config.outputs.trajectory_csv;
    write_trajectory_csv(traj, csv_path);
    report["verdict"] = "completed";
    fill_trajectory_metadata(report, traj);
    report["metadata"]["trajectory_csv"] = csv_path;
    emit_report(report, opts, config);
    return 0;
}

int run_decay(const RunConfig& config, const CliOptions& opts) {
    Report report = make_report("decay", config, opts.mode);
    const double step = pick(opts.step, config.resolved_step());
    const double t_end = pick(opts.t_end, config.resolved_t_end());
    const Trajectory traj = integrate(config.system, config.initial, config.forcing, t_end, step);
    const DecayEstimate est =
        estimate_decay(traj, DecayChannel::max_xu, config.resolved_decay_window());
    report["decay"] = decay_json(est);
    report["verdict"] = est.rate > 0.0 ? "decaying" : "not_decaying";
    fill_trajectory_metadata(report, traj);
    if (!config.outputs.plot_data.empty()) write_plot_data(est, config.outputs.plot_data);
    if (!config.outputs.trajectory_csv.empty())
        write_trajectory_csv(traj, config.outputs.trajectory_csv);
    emit_report(report, opts, config);
    return est.rate > 0.0 ? 0 : 1;
}

int run_apriori(const RunConfig& config, const CliOptions& opts) {
    Report report = make_report("apriori", config, opts.mode);
    const Certificate cert =
        certify(config.system, parse_mode(opts.mode), pick(opts.grid_step, config.numerics.grid_step),
                pick(opts.horizon, config.numerics.horizon));
    fill_certificate(report, cert);
    if (cert.verdict != Verdict::certified_stable) {
        report["verdict"] = "fail";
        emit_report(report, opts, config);
        return 1;
    }
    const double step = pick(opts.step, config.resolved_step());
    const double t_end = pick(opts.t_end, config.resolved_t_end());
    const AprioriReport ap =
        verify_apriori(config.system, config.forcing, cert, t_end, step);
    report["apriori"] = apriori_json(ap);
    report["verdict"] = ap.all_hold() ? "pass" : "fail";
    emit_report(report, opts, config);
    return ap.all_hold() ? 0 : 1;
}

struct ComparisonRow {
    std::string quantity;
    double reference;
    double computed;
    double tolerance;
    bool ok;
};

int run_reproduce_example(const RunConfig& config, const CliOptions& opts) {
    // Reference values for the bundled example system (configs/example.json).
    const Mat5 reference_matrix = {{{0.0, 0.1, 0.505, 0.5, 0.0},
                                    {0.25, 0.0, 0.1, 0.1, 0.0},
                                    {0.25, 1.01, 0.0, 0.1, 0.0},
                                    {0.5, 0.0, 0.0, 0.0, 0.1},
                                    {0.1, 0.0, 0.0, 0.3, 0.0}}};
    const double reference_radius = 0.8443;

    const Certificate cert = certify(config.system, NormMode::declared,
                                     pick(opts.grid_step, config.numerics.grid_step),
                                     pick(opts.horizon, config.numerics.horizon));

    std::vector<ComparisonRow> rows;
    auto add = [&](const std::string& name, double ref, double got, double tol) {
        rows.push_back({name, ref, got, tol, std::fabs(got - ref) <= tol});
    };
    const NormTable& n = cert.norms;
    add("||a1||", 1.01, n.n_a1, 1e-9);
    add("||a2||", 0.25, n.n_a2, 1e-9);
    add("||a3||", 0.1, n.n_a3, 1e-9);
    add("||b1||", 0.3, n.n_b1, 1e-9);
    add("||b2||", 0.1, n.n_b2, 1e-9);
    add("||a1/a2||", 5.05, n.r_a1_a2, 1e-9);
    add("||a2/a1||", 0.25, n.r_a2_a1, 1e-9);
    add("||a3/a1||", 0.1, n.r_a3_a1, 1e-9);
    add("||a3/a2||", 0.5, n.r_a3_a2, 1e-9);
    add("||b2/b1||", 0.5, n.r_b2_b1, 1e-9);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            if (reference_matrix[i][j] != 0.0 || cert.matrix[i][j] != 0.0)
                add("A[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]",
                    reference_matrix[i][j], cert.matrix[i][j], 1e-9);
    add("spectral radius", reference_radius, cert.spectral_radius, 1e-3);

    const bool certified = cert.verdict == Verdict::certified_stable;

    const double step = pick(opts.step, config.resolved_step());
    const double t_end = pick(opts.t_end, config.resolved_t_end());
    const Trajectory traj = integrate(config.system, config.initial, config.forcing, t_end, step);
    const DecayEstimate est =
        estimate_decay(traj, DecayChannel::max_xu, config.resolved_decay_window());

    bool all_ok = certified && est.rate > 0.0 && est.r_squared > 0.95;
    std::printf("%-18s %14s %18s  %s\n", "quantity", "reference", "computed", "match");
    std::printf("%-18s %14s %18s  %s\n", "------------------", "---------", "--------", "-----");
    for (const auto& row : rows) {
        std::printf("%-18s %14.6g %18.12g  %s\n", row.quantity.c_str(), row.reference,
                    row.computed, row.ok ? "yes" : "NO");
        all_ok = all_ok && row.ok;
    }
    std::printf("%-18s %14s %18s  %s\n", "verdict", "certified", to_string(cert.verdict),
                certified ? "yes" : "NO");
    std::printf("%-18s %14s %18.6g  %s\n", "decay rate mu", "> 0", est.rate,
                est.rate > 0.0 ? "yes" : "NO");
    std::printf("%-18s %14s %18.6g  %s\n", "fit r^2", "> 0.95", est.r_squared,
                est.r_squared > 0.95 ? "yes" : "NO");
    std::printf("overall: %s\n", all_ok ? "PASS" : "FAIL");

    if (!opts.out.empty() || !config.outputs.report.empty()) {
        Report report = make_report("reproduce-example", config, "declared");
        fill_certificate(report, cert);
        report["decay"] = decay_json(est);
        report["verdict"] = all_ok ? "pass" : "fail";
        fill_trajectory_metadata(report, traj);
        emit_report(report, opts, config);
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exponential-stability certification and simulation for a coupled "
                 "second-order/first-order delay system with indirect feedback control"};
    app.require_subcommand(1);

    CliOptions opts;
    auto add_common = [&](CLI::App* cmd, bool with_numerics) {
        cmd->add_option("config", opts.config_path, "JSON config file")->required();
        cmd->add_option("--out", opts.out, "write the JSON report to this path");
        cmd->add_option("--mode", opts.mode, "norm mode: declared (sound) or sampled (sharper)")
            ->check(CLI::IsMember({"declared", "sampled"}));
        cmd->add_option("--grid-step", opts.grid_step, "validation sampling step");
        cmd->add_option("--horizon", opts.horizon, "validation sampling horizon");
        cmd->add_flag("--three-halves", opts.three_halves,
                      "use the sharper 3/2 constant in the first-order delay test");
        if (with_numerics) {
            cmd->add_option("--step", opts.step, "integration step");
            cmd->add_option("--t-end", opts.t_end, "integration end time");
        }
        return cmd;
    };

    auto* c_validate = add_common(app.add_subcommand("validate", "check declared bounds and hypotheses"), false);
    auto* c_certify = add_common(app.add_subcommand("certify", "run the majorant-matrix stability test"), false);
    auto* c_corollary = add_common(
        app.add_subcommand("certify-corollary", "scalar test for systems with undelayed x terms"), false);
    auto* c_simulate = add_common(app.add_subcommand("simulate", "integrate and write the trajectory CSV"), true);
    auto* c_decay = add_common(app.add_subcommand("decay", "simulate and fit the decay envelope"), true);
    auto* c_apriori = add_common(app.add_subcommand("apriori", "verify the a-priori sup-norm bounds"), true);
    auto* c_reproduce = add_common(
        app.add_subcommand("reproduce-example", "recompute the bundled example end to end"), true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const RunConfig config = load_config(opts.config_path);
        if (c_validate->parsed()) return run_validate(config, opts);
        if (c_certify->parsed()) return run_certify(config, opts);
        if (c_corollary->parsed()) return run_certify_corollary(config, opts);
        if (c_simulate->parsed()) return run_simulate(config, opts);
        if (c_decay->parsed()) return run_decay(config, opts);
        if (c_apriori->parsed()) return run_apriori(config, opts);
        if (c_reproduce->parsed()) return run_reproduce_example(config, opts);
        std::cerr << "delaystab: no command selected\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "delaystab: error: " << e.what() << "\n";
        return 2;
    }
}
