#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "ocs/config.hpp"
#include "ocs/errors.hpp"
#include "ocs/output.hpp"
#include "ocs/packet.hpp"
#include "ocs/stationary.hpp"
#include "ocs/subprocess.hpp"
#include "ocs/sweeps.hpp"
#include "ocs/timescales.hpp"

using namespace ocs;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CliArgs {
    std::string config;
    std::string out = ".";
    std::string format, barrier, energy, kval, workers;
    std::string smin, smax, spoints;
};

void attach_common(CLI::App* cmd, CliArgs& a) {
    cmd->add_option("--config", a.config, "config file, key = value lines with [sections]");
    cmd->add_option("--out", a.out, "output directory (default .)");
    cmd->add_option("--format", a.format, "csv | json");
    cmd->add_option("--workers", a.workers, "worker thread count");
    cmd->add_option("--barrier", a.barrier, "rect:V0,a,b | double:V0,d,l,a | table:path.csv");
    cmd->add_option("--energy", a.energy, "incident energy E in eV");
    cmd->add_option("--k", a.kval, "incident wavenumber in nm^-1");
}

void attach_sweep(CLI::App* cmd, CliArgs& a) {
    cmd->add_option("--sweep-min", a.smin, "lower end of the swept parameter, nm");
    cmd->add_option("--sweep-max", a.smax, "upper end of the swept parameter, nm");
    cmd->add_option("--sweep-points", a.spoints, "row count");
}

RunConfig load_cfg(const CliArgs& a) {
    std::map<std::string, std::string> file_kv;
    if (!a.config.empty()) file_kv = parse_config_file(a.config);
    std::map<std::string, std::string> ov;
    if (!a.barrier.empty()) ov["barrier"] = a.barrier;
    if (!a.energy.empty()) { ov["E"] = a.energy; file_kv.erase("k"); }
    if (!a.kval.empty()) { ov["k"] = a.kval; file_kv.erase("E"); }
    if (!a.format.empty()) ov["format"] = a.format;
    if (!a.workers.empty()) ov["workers"] = a.workers;
    if (!a.smin.empty()) ov["sweep.min"] = a.smin;
    if (!a.smax.empty()) ov["sweep.max"] = a.smax;
    if (!a.spoints.empty()) ov["sweep.points"] = a.spoints;
    return make_run_config(file_kv, ov);
}

std::string opath(const CliArgs& a, const std::string& name) { return a.out + "/" + name; }

int cmd_solve(const CliArgs& a) {
    RunConfig cfg = load_cfg(a);
    StationarySolution s = solve_any(cfg.k, cfg.barrier, cfg.consts);
    double lambda = s.has_lambda ? s.lambda : kNaN;

    if (cfg.format == "json") {
        JsonObject j;
        j.field("tool", kToolVersion)
            .field("config_hash", cfg.hash_hex())
            .field("barrier", cfg.barrier.describe())
            .field("k_nm", s.k)
            .field("E_eV", s.E)
            .field("T", s.T)
            .field("R", s.R)
            .field("log_T", s.log_T)
            .field("unitarity_residual", s.T + s.R - 1.0)
            .field("J_rad", s.J)
            .field("lambda_rad", lambda)
            .field("a_out_re", s.a_out.real())
            .field("a_out_im", s.a_out.imag())
            .field("b_out_re", s.b_out.real())
            .field("b_out_im", s.b_out.imag())
            .field("kappa_nm", s.kappa)
            .field("regime",
                   s.regime == Regime::UnderBarrier ? "under_barrier" : "over_barrier")
            .field("path", s.analytic_rect ? "closed_form" : "numeric");
        j.write(opath(a, "solve.json"));
    } else {
        CsvWriter csv({"k_nm", "E_eV", "T", "R", "log_T", "unitarity_residual", "J_rad",
                       "lambda_rad", "a_out_re", "a_out_im", "b_out_re", "b_out_im", "kappa_nm"},
                      cfg.hash_hex());
        csv.add_comment("barrier = " + cfg.barrier.describe());
        csv.add_comment(std::string("path = ") + (s.analytic_rect ? "closed_form" : "numeric"));
        csv.add_row({s.k, s.E, s.T, s.R, s.log_T, s.T + s.R - 1.0, s.J, lambda, s.a_out.real(),
                     s.a_out.imag(), s.b_out.real(), s.b_out.imag(), s.kappa});
        csv.write(opath(a, "solve.csv"));
    }
    std::printf("solve: k = %s nm^-1  T = %s  R = %s  T+R-1 = %s\n", format_double(s.k).c_str(),
                format_double(s.T).c_str(), format_double(s.R).c_str(),
                format_double(s.T + s.R - 1.0).c_str());
    return 0;
}

int cmd_decompose(const CliArgs& a) {
    RunConfig cfg = load_cfg(a);
    StationarySolution s = solve_any(cfg.k, cfg.barrier, cfg.consts);
    BasisPair basis = make_basis(s);
    SubprocessField tr = build_subprocess(s, basis, Component::Transmission);
    SubprocessField ref = build_subprocess(s, basis, Component::Reflection);
    MatchingReport mr = matching_report(tr);

    double lambda = s.has_lambda ? s.lambda : kNaN;
    double I_tr = subprocess_current(tr, s.xc);
    double I_ref_L = subprocess_current(ref, s.xc, Side::Left);
    double I_ref_R = subprocess_current(ref, s.xc, Side::Right);
    double I_inc = cfg.consts.velocity(s.k);

    if (cfg.format == "json") {
        JsonObject m;
        m.field("phase_jump", mr.phase_jump)
            .field("phase_slope_jump", mr.phase_slope_jump)
            .field("modulus_jump", mr.modulus_jump)
            .field("modulus_slope_sum", mr.modulus_slope_sum)
            .field("current_jump", mr.current_jump)
            .field("modulus_slope_left", mr.modulus_slope_left)
            .field("modulus_slope_right", mr.modulus_slope_right);
        JsonObject j;
        j.field("tool", kToolVersion)
            .field("config_hash", cfg.hash_hex())
            .field("barrier", cfg.barrier.describe())
            .field("k_nm", s.k)
            .field("E_eV", s.E)
            .field("T", s.T)
            .field("R", s.R)
            .field("lambda_rad", lambda)
            .field("A_tr_re", s.A_tr_in.real())
            .field("A_tr_im", s.A_tr_in.imag())
            .field("A_ref_re", s.A_ref_in.real())
            .field("A_ref_im", s.A_ref_in.imag())
            .field("x_c_nm", s.xc)
            .field("matching", m)
            .field("I_tr_xc", I_tr)
            .field("I_tr_over_incident", I_tr / I_inc)
            .field("I_ref_xc_left", I_ref_L)
            .field("I_ref_xc_right", I_ref_R);
        j.write(opath(a, "decompose.json"));
    } else {
        CsvWriter csv({"k_nm", "E_eV", "T", "R", "lambda_rad", "A_tr_re", "A_tr_im", "A_ref_re",
                       "A_ref_im", "x_c_nm", "phase_jump", "phase_slope_jump", "modulus_jump",
                       "modulus_slope_sum", "current_jump", "modulus_slope_left",
                       "modulus_slope_right", "I_tr_xc", "I_tr_over_incident", "I_ref_xc_left",
                       "I_ref_xc_right"},
                      cfg.hash_hex());
        csv.add_comment("barrier = " + cfg.barrier.describe());
        csv.add_row({s.k, s.E, s.T, s.R, lambda, s.A_tr_in.real(), s.A_tr_in.imag(),
                     s.A_ref_in.real(), s.A_ref_in.imag(), s.xc, mr.phase_jump,
                     mr.phase_slope_jump, mr.modulus_jump, mr.modulus_slope_sum, mr.current_jump,
                     mr.modulus_slope_left, mr.modulus_slope_right, I_tr, I_tr / I_inc, I_ref_L,
                     I_ref_R});
        csv.write(opath(a, "decompose.csv"));
    }
    std::printf("decompose: matching residuals %s %s %s %s %s\n",
                format_double(mr.phase_jump).c_str(), format_double(mr.phase_slope_jump).c_str(),
                format_double(mr.modulus_jump).c_str(), format_double(mr.modulus_slope_sum).c_str(),
                format_double(mr.current_jump).c_str());
    return 0;
}

int cmd_times(const CliArgs& a) {
    RunConfig cfg = load_cfg(a);
    TimesBundle tb = all_times(cfg.k, cfg.barrier, cfg.consts);

    struct Slot {
        const char* col;
        TimeName name;
        TimeMethod method;
    };
    static const Slot slots[] = {
        {"dwell_free_fs", TimeName::DwellFree, TimeMethod::ClosedForm},
        {"dwell_total_flux_fs", TimeName::DwellTotalFlux, TimeMethod::Quadrature},
        {"dwell_buttiker_fs", TimeName::DwellButtiker, TimeMethod::Quadrature},
        {"dwell_buttiker_closed_fs", TimeName::DwellButtiker, TimeMethod::ClosedForm},
        {"dwell_tr_fs", TimeName::DwellTr, TimeMethod::Quadrature},
        {"dwell_tr_closed_fs", TimeName::DwellTr, TimeMethod::ClosedForm},
        {"dwell_ref_fs", TimeName::DwellRef, TimeMethod::Quadrature},
        {"phase_wigner_fs", TimeName::PhaseWigner, TimeMethod::FiniteDifference},
        {"delay_wigner_fs", TimeName::DelayWigner, TimeMethod::FiniteDifference},
        {"group_tr_fs", TimeName::AsymptoticGroupTr, TimeMethod::FiniteDifference},
        {"group_tr_closed_fs", TimeName::AsymptoticGroupTr, TimeMethod::ClosedForm},
        {"group0_fs", TimeName::GroupInitial, TimeMethod::FiniteDifference},
        {"delay_tr_fs", TimeName::DelayTr, TimeMethod::FiniteDifference},
        {"delay_ref_fs", TimeName::DelayRef, TimeMethod::FiniteDifference},
        {"larmor_perp_fs", TimeName::LarmorPerp, TimeMethod::ClosedForm},
        {"larmor_perp0_fs", TimeName::LarmorPerpInitial, TimeMethod::ClosedForm},
        {"flip_fs", TimeName::FlipTime, TimeMethod::FiniteDifference},
        {"larmor_par0_tr_fs", TimeName::LarmorParallelInitialTr, TimeMethod::ClosedForm},
        {"larmor_par0_ref_fs", TimeName::LarmorParallelInitialRef, TimeMethod::ClosedForm},
    };
    static const char* relation_cols[] = {
        "dual_dwell_buttiker", "dual_dwell_tr", "dual_group", "unitarity",
        "chain_flip", "perp_chain", "flip_routes", "par0_balance",
        "group0_over_perp0", "rot_angle_gap",
    };

    auto slot_value = [&](const Slot& sl) {
        for (const TimeReport& r : tb.reports)
            if (r.name == sl.name && r.method == sl.method) return r.value;
        return kNaN;
    };
    auto relation_value = [&](const std::string& name) {
        for (const auto& r : tb.relations)
            if (r.name == name) return r.value;
        return kNaN;
    };

    if (cfg.format == "json") {
        JsonObject times, rel;
        for (const Slot& sl : slots) times.field(sl.col, slot_value(sl));
        for (const char* rc : relation_cols) rel.field(rc, relation_value(rc));
        JsonObject j;
        j.field("tool", kToolVersion)
            .field("config_hash", cfg.hash_hex())
            .field("barrier", cfg.barrier.describe())
            .field("k_nm", cfg.k)
            .field("E_eV", cfg.consts.energy(cfg.k))
            .field("larmor_status", tb.larmor_status)
            .field("lambda_status", tb.lambda_status)
            .field("times", times)
            .field("relations", rel);
        j.write(opath(a, "times.json"));
    } else {
        std::vector<std::string> cols = {"k_nm", "E_eV"};
        for (const Slot& sl : slots) cols.push_back(sl.col);
        for (const char* rc : relation_cols) cols.push_back(std::string("res_") + rc);
        CsvWriter csv(cols, cfg.hash_hex());
        csv.add_comment("barrier = " + cfg.barrier.describe());
        csv.add_comment("larmor_status = " + tb.larmor_status);
        csv.add_comment("lambda_status = " + tb.lambda_status);
        csv.add_comment("empty cells: quantity undefined in this regime (see status lines)");
        std::vector<double> row = {cfg.k, cfg.consts.energy(cfg.k)};
        for (const Slot& sl : slots) row.push_back(slot_value(sl));
        for (const char* rc : relation_cols) row.push_back(relation_value(rc));
        csv.add_row(row);
        csv.write(opath(a, "times.csv"));
    }
    std::printf("times: %zu quantities, larmor %s, lambda %s\n", tb.reports.size(),
                tb.larmor_status.c_str(), tb.lambda_status.c_str());
    return 0;
}

int cmd_propagate(const CliArgs& a) {
    RunConfig cfg = load_cfg(a);
    PacketSynthesizer synth(cfg.spectrum, cfg.barrier, cfg.consts, cfg.packet);
    std::vector<double> times = build_time_samples(synth);
    PacketSeries series = propagate_series(synth, times, cfg.workers);
    AuditReport audit = norm_current_audit(series, synth);
    EventTimes ev = group_event_times(synth, series, cfg.packet.L);

    const double v0 = cfg.consts.velocity(cfg.spectrum.k0);
    const double lam_p = synth.lambda_prime_k0();

    CsvWriter trace({"t_fs", "X_tot_nm", "X_tr_nm", "X_ref_nm", "N_tr", "N_ref", "I_tr_left",
                     "I_tr_right"},
                    cfg.hash_hex());
    trace.add_comment("barrier = " + cfg.barrier.describe());
    for (const PacketMoments& m : series.samples)
        trace.add_row({m.t, m.Xtot, m.Xtr, m.Xref, m.Ntr, m.Nref, m.Itr_left, m.Itr_right});
    trace.write(opath(a, "trace.csv"));

    // simulated transmitted CM track next to the free incoming asymptote
    CsvWriter fig({"t_fs", "X_tr_nm", "X_tr_in_nm"}, cfg.hash_hex());
    fig.add_comment("X_tr_in_nm = (hbar k0/m) t - lambda'(k0)");
    for (const PacketMoments& m : series.samples)
        fig.add_row({m.t, m.Xtr, v0 * m.t - lam_p});
    fig.write(opath(a, "figure.csv"));

    JsonObject params;
    params.field("barrier", cfg.barrier.describe())
        .field("k0_nm", cfg.spectrum.k0)
        .field("E0_eV", cfg.consts.energy(cfg.spectrum.k0))
        .field("l0_nm", cfg.spectrum.l0)
        .field("cutoff", cfg.spectrum.cutoff)
        .field("L_nm", cfg.packet.L)
        .field("t_max_fs", synth.t_max())
        .field("k_nodes", synth.k_nodes())
        .field("grid_nodes", (int)synth.grid().x.size())
        .field("time_samples", (int)series.samples.size())
        .field("expected_T", synth.expected_T())
        .field("expected_R", synth.expected_R())
        .field("lambda_prime_nm", lam_p)
        .field("J_prime_nm", synth.J_prime_k0())
        .field("v0_nm_fs", v0)
        .field("filtered_velocity_nm_fs", synth.filtered_velocity())
        .field_array("fine_window_fs", synth.fine_window());
    JsonObject events;
    events.field("t_depart_tr_fs", ev.t_depart_tr)
        .field("t_arrive_tr_fs", ev.t_arrive_tr)
        .field("dt_tr_fs", ev.dt_tr)
        .field("dt_tr_formula_fs", ev.dt_tr_formula)
        .field("t_depart_ref_fs", ev.t_depart_ref)
        .field("t_arrive_ref_fs", ev.t_arrive_ref)
        .field("dt_ref_fs", ev.dt_ref)
        .field("dt_ref_formula_fs", ev.dt_ref_formula)
        .field("arrival_offset_L_nm", ev.L);
    JsonObject aud;
    aud.field("max_norm_err", audit.max_norm_err)
        .field("max_nref_dev", audit.max_nref_dev)
        .field("ntr_early_late_gap", audit.ntr_early_late_gap)
        .field("max_current_residual", audit.max_current_residual)
        .field("max_jump", audit.max_jump)
        .field("max_iref", audit.max_iref)
        .field("ortho_re_earliest", audit.ortho_re_earliest)
        .field("ortho_im_earliest", audit.ortho_im_earliest)
        .field("ortho_im_expected", audit.ortho_im_expected)
        .field("max_superpos_resid", audit.max_superpos_resid)
        .field("max_edge_density", audit.max_edge_density);
    JsonObject j;
    j.field("tool", kToolVersion)
        .field("config_hash", cfg.hash_hex())
        .field("parameters", params)
        .field("event_times", events)
        .field("audit", aud);
    j.write(opath(a, "summary.json"));

    std::printf("propagate: %zu samples, dt_tr = %s fs (formula %s), audit norm %s\n",
                series.samples.size(), format_double(ev.dt_tr).c_str(),
                format_double(ev.dt_tr_formula).c_str(),
                format_double(audit.max_norm_err).c_str());
    return 0;
}

int cmd_sweep(const CliArgs& a, bool hartman) {
    RunConfig cfg = load_cfg(a);
    SweepResult res = hartman ? sweep_hartman(cfg) : sweep_double(cfg);
    const std::string base = hartman ? "sweep_hartman" : "sweep_double";

    if (cfg.format == "json") {
        std::string cols = "[";
        for (size_t i = 0; i < res.columns.size(); ++i) {
            if (i) cols += ", ";
            cols += "\"" + json_escape(res.columns[i]) + "\"";
        }
        cols += "]";
        std::string rows = "[";
        for (size_t i = 0; i < res.rows.size(); ++i) {
            rows += i ? ",\n  [" : "\n  [";
            for (size_t c = 0; c < res.rows[i].size(); ++c) {
                if (c) rows += ", ";
                rows += format_double(res.rows[i][c]);
            }
            rows += "]";
        }
        rows += "\n]";
        JsonObject meta;
        for (const auto& [name, val] : res.metadata) meta.field(name, val);
        JsonObject j;
        j.field("tool", kToolVersion)
            .field("config_hash", cfg.hash_hex())
            .field("barrier", cfg.barrier.describe())
            .field("k_nm", cfg.k)
            .field_raw("columns", cols)
            .field_raw("rows", rows)
            .field("metadata", meta);
        j.write(opath(a, base + ".json"));
    } else {
        CsvWriter csv(res.columns, cfg.hash_hex());
        csv.add_comment("barrier = " + cfg.barrier.describe());
        csv.add_comment("k_nm = " + format_double(cfg.k));
        for (const auto& [name, val] : res.metadata)
            csv.add_comment(name + " = " + format_double(val));
        for (const auto& row : res.rows) csv.add_row(row);
        csv.write(opath(a, base + ".csv"));
    }
    std::printf("%s: %zu rows\n", base.c_str(), res.rows.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-dimensional completed-scattering toolkit"};
    app.require_subcommand(1);
    CliArgs a;

    CLI::App* c_solve = app.add_subcommand("solve", "stationary amplitudes, T, R, phases");
    CLI::App* c_dec = app.add_subcommand("decompose", "subprocess split and matching report");
    CLI::App* c_times = app.add_subcommand("times", "all characteristic times and residuals");
    CLI::App* c_prop = app.add_subcommand("propagate", "wave-packet run: trace, figure, summary");
    CLI::App* c_sh = app.add_subcommand("sweep-hartman", "width sweep of the in-barrier times");
    CLI::App* c_sd = app.add_subcommand("sweep-double", "gap sweep of a double barrier");
    for (CLI::App* c : {c_solve, c_dec, c_times, c_prop, c_sh, c_sd}) attach_common(c, a);
    for (CLI::App* c : {c_sh, c_sd}) attach_sweep(c, a);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (c_solve->parsed()) return cmd_solve(a);
        if (c_dec->parsed()) return cmd_decompose(a);
        if (c_times->parsed()) return cmd_times(a);
        if (c_prop->parsed()) return cmd_propagate(a);
        if (c_sh->parsed()) return cmd_sweep(a, true);
        if (c_sd->parsed()) return cmd_sweep(a, false);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
