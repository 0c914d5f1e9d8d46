#include "ocs/timescales.hpp"

#include <cmath>
#include <complex>

#include "ocs/errors.hpp"
#include "ocs/numerics.hpp"

namespace ocs {

namespace {

// Closed rectangular under-barrier forms, written with exp(-kappa d) scaled
// hyperbolics so nothing overflows before the final result does.
struct RectUnderForms {
    double k, kap, k0sq, d, mh;
    double em, s_t, c_t, s2_t, Dt; // sinh/cosh(kappa d) * em, sinh(2kd) * em^2, D * em^2

    RectUnderForms(const StationarySolution& sol) {
        k = sol.k;
        kap = sol.kappa;
        k0sq = sol.kappa0 * sol.kappa0;
        d = sol.width;
        mh = sol.consts.mass_over_hbar();
        em = std::exp(-kap * d);
        s_t = 0.5 * (1.0 - em * em);
        c_t = 0.5 * (1.0 + em * em);
        s2_t = 0.5 * (1.0 - em * em * em * em); // sinh(2 kappa d) e^{-2 kappa d}
        Dt = k0sq * k0sq * s_t * s_t + 4.0 * k * k * kap * kap * em * em;
    }

    double km2() const { return kap * kap - k * k; }

    double tau_perp() const {
        return mh * k * (2.0 * kap * d * km2() * em * em + k0sq * s2_t) / (kap * Dt);
    }
    double tau_perp0() const {
        return 2.0 * mh * k * em * (km2() * s_t + k0sq * kap * d * c_t) / (kap * Dt);
    }
    double lambda_prime() const {
        return 2.0 * k0sq * em * (km2() * s_t + k * k * kap * d * c_t) / (kap * Dt);
    }
    double tau_as() const {
        double sht = 0.5 * (1.0 - em); // sinh(kappa d/2) e^{-kappa d/2}
        return 4.0 * mh * (k * k * em + k0sq * sht * sht) *
               (k0sq * s_t - k * k * kap * d * em) / (k * kap * Dt);
    }
    double tau_dwell_tr() const {
        return mh / (2.0 * k * kap * kap * kap) * (km2() * kap * d + k0sq * std::sinh(kap * d));
    }
};

bool rect_under(const StationarySolution& sol) {
    return sol.analytic_rect && sol.regime == Regime::UnderBarrier;
}

double density_integral(const StationarySolution& sol, const BasisPair& basis,
                        double x0, double x1) {
    auto f = [&](double x) {
        FieldValue v = evaluate_total(sol, basis, x);
        return std::norm(v.psi);
    };
    return integrate_adaptive(f, x0, x1, 1e-11);
}

double subprocess_integral(const SubprocessField& field, double x0, double x1) {
    auto f = [&](double x) { return std::norm(field.eval(x).psi); };
    return integrate_adaptive(f, x0, x1, 1e-11);
}

// I / T with a log fallback when T underflows the direct quotient.
double over_T(double I, const StationarySolution& sol, const char* what) {
    if (I <= 0.0) return 0.0;
    if (sol.T > 0.0) {
        double v = I / sol.T;
        if (std::isfinite(v)) return v;
    }
    double lnv = std::log(I) - sol.log_T;
    if (lnv > 709.0) throw NumericError(std::string(what) + " exceeds the double range");
    return std::exp(lnv);
}

TimeReport report(TimeName n, TimeMethod m, double value, double k) {
    TimeReport r;
    r.name = n;
    r.method = m;
    r.value = value;
    r.k = k;
    return r;
}

// d/dk of a principal-valued angle. Differencing the relative phase keeps the
// stencil on one branch even when the angle itself crosses the +-pi cut, and
// never needs a tabulated unwrap (which a narrow interior resonance can defeat).
DerivativeResult ddk_angle(const std::function<double(double)>& angle, double k) {
    const double a0 = angle(k);
    auto rel = [&](double kk) { return std::remainder(angle(kk) - a0, 2.0 * M_PI); };
    return derivative_richardson(rel, k, 1e-3 * k, 1e-9, 1e-8 * k);
}

} // namespace

const char* to_string(TimeName n) {
    switch (n) {
        case TimeName::DwellFree: return "dwell_free";
        case TimeName::DwellTotalFlux: return "dwell_total_flux";
        case TimeName::DwellButtiker: return "dwell_buttiker";
        case TimeName::DwellTr: return "dwell_tr";
        case TimeName::DwellRef: return "dwell_ref";
        case TimeName::PhaseWigner: return "phase_wigner";
        case TimeName::DelayWigner: return "delay_wigner";
        case TimeName::AsymptoticGroupTr: return "group_tr";
        case TimeName::AsymptoticGroupRef: return "group_ref";
        case TimeName::DelayTr: return "delay_tr";
        case TimeName::DelayRef: return "delay_ref";
        case TimeName::LarmorPerp: return "larmor_perp";
        case TimeName::LarmorPerpInitial: return "larmor_perp0";
        case TimeName::FlipTime: return "flip";
        case TimeName::LarmorParallelInitialTr: return "larmor_par0_tr";
        case TimeName::LarmorParallelInitialRef: return "larmor_par0_ref";
        case TimeName::GroupInitial: return "group0";
    }
    return "?";
}

const char* to_string(TimeMethod m) {
    switch (m) {
        case TimeMethod::ClosedForm: return "closed";
        case TimeMethod::Quadrature: return "quadrature";
        case TimeMethod::FiniteDifference: return "fd";
        case TimeMethod::Simulation: return "simulation";
    }
    return "?";
}

TimeReport dwell_free(double k, const BarrierSpec& spec, const PhysicalConstants& consts) {
    if (k <= 0.0) throw NonPositiveK("dwell_free needs k > 0");
    double v = consts.mass_over_hbar() * spec.width() / k;
    return report(TimeName::DwellFree, TimeMethod::ClosedForm, v, k);
}

TimeReport dwell_total_flux(double k, const BarrierSpec& spec, const PhysicalConstants& consts) {
    StationarySolution sol = solve_any(k, spec, consts);
    BasisPair basis = make_basis(sol);
    if (sol.T <= 0.0) throw ZeroTransmission("transmission underflows, flux-normalized dwell undefined");
    double I = consts.mass_over_hbar() / k * density_integral(sol, basis, sol.xa, sol.xb);
    return report(TimeName::DwellTotalFlux, TimeMethod::Quadrature,
                  over_T(I, sol, "flux-normalized dwell"), k);
}

DualReport dwell_buttiker(double k, const BarrierSpec& spec, const PhysicalConstants& consts) {
    StationarySolution sol = solve_any(k, spec, consts);
    BasisPair basis = make_basis(sol);
    DualReport out;
    double I = consts.mass_over_hbar() / k * density_integral(sol, basis, sol.xa, sol.xb);
    out.primary = report(TimeName::DwellButtiker, TimeMethod::Quadrature, I, k);
    if (rect_under(sol)) {
        RectUnderForms f(sol);
        out.closed = report(TimeName::DwellButtiker, TimeMethod::ClosedForm, f.tau_perp(), k);
        out.rel_diff = std::abs(I - out.closed->value) / std::abs(out.closed->value);
    }
    return out;
}

double local_dwell_density(double k, const BarrierSpec& spec, const PhysicalConstants& consts,
                           double x) {
    StationarySolution sol = solve_any(k, spec, consts);
    BasisPair basis = make_basis(sol);
    FieldValue v = evaluate_total(sol, basis, x);
    return std::norm(v.psi) / consts.velocity(k);
}

DualReport dwell_transmission(double k, const BarrierSpec& spec, const PhysicalConstants& consts) {
    StationarySolution sol = solve_any(k, spec, consts);
    BasisPair basis = make_basis(sol);
    if (sol.T <= 0.0) throw ZeroTransmission("transmission underflows, dwell_tr undefined");
    SubprocessField tr = build_subprocess(sol, basis, Component::Transmission);
    double I = subprocess_integral(tr, sol.xa, sol.xc) +
               density_integral(sol, basis, sol.xc, sol.xb);
    I *= consts.mass_over_hbar() / k;
    DualReport out;
    out.primary = report(TimeName::DwellTr, TimeMethod::Quadrature, over_T(I, sol, "dwell_tr"), k);
    if (rect_under(sol)) {
        RectUnderForms f(sol);
        out.closed = report(TimeName::DwellTr, TimeMethod::ClosedForm, f.tau_dwell_tr(), k);
        out.rel_diff = std::abs(out.primary.value - out.closed->value) / std::abs(out.closed->value);
    }
    return out;
}

TimeReport dwell_reflection(double k, const BarrierSpec& spec, const PhysicalConstants& consts) {
    StationarySolution sol = solve_any(k, spec, consts);
    BasisPair basis = make_basis(sol);
    if (sol.R <= 0.0) throw ZeroReflection("no reflected wave, dwell_ref undefined");
    SubprocessField ref = build_subprocess(sol, basis, Component::Reflection);
    double I = consts.mass_over_hbar() / k * subprocess_integral(ref, sol.xa, sol.xc);
    return report(TimeName::DwellRef, TimeMethod::Quadrature, I / sol.R, k);
}

PhaseTimes phase_time(double k, const BarrierSpec& spec, const PhysicalConstants& consts) {
    PhaseTimes out;
    out.dJ = ddk_angle([&](double kk) { return solve_any(kk, spec, consts).J; }, k);
    double pre = consts.mass_over_hbar() / k;
    out.tau_ph = report(TimeName::PhaseWigner, TimeMethod::FiniteDifference, pre * out.dJ.value, k);
    out.tau_del = report(TimeName::DelayWigner, TimeMethod::FiniteDifference,
                         pre * (out.dJ.value - spec.width()), k);
    return out;
}

GroupTimes asymptotic_group_times(double k, const BarrierSpec& spec,
                                  const PhysicalConstants& consts) {
    StationarySolution sol = solve_any(k, spec, consts);
    if (!sol.has_lambda || sol.R <= 0.0)
        throw ZeroReflection("lambda undefined, asymptotic group times need R > 0");
    DerivativeResult dJ = ddk_angle([&](double kk) { return solve_any(kk, spec, consts).J; }, k);
    DerivativeResult dl =
        ddk_angle([&](double kk) { return solve_any(kk, spec, consts).lambda; }, k);
    double pre = consts.mass_over_hbar() / k;

    GroupTimes out;
    out.tau_as = report(TimeName::AsymptoticGroupTr, TimeMethod::FiniteDifference,
                        pre * (dJ.value - dl.value), k);
    out.X_in0 = -dl.value;
    out.tau_group0 = report(TimeName::GroupInitial, TimeMethod::FiniteDifference,
                            pre * dl.value, k);
    out.delay_tr = report(TimeName::DelayTr, TimeMethod::FiniteDifference,
                          out.tau_as.value - pre * spec.width(), k);
    out.delay_ref = report(TimeName::DelayRef, TimeMethod::FiniteDifference, out.tau_as.value, k);
    if (rect_under(sol)) {
        RectUnderForms f(sol);
        out.tau_as_closed = report(TimeName::AsymptoticGroupTr, TimeMethod::ClosedForm, f.tau_as(), k);
        out.X_in0_closed = -f.lambda_prime();
        out.rel_diff = std::abs(out.tau_as.value - out.tau_as_closed->value) /
                       std::abs(out.tau_as_closed->value);
        double perp0 = f.tau_perp0();
        if (perp0 != 0.0) out.group0_over_perp0 = out.tau_group0.value / perp0;
    }
    return out;
}

DoubleDwell double_barrier_dwell(double k, const BarrierSpec& spec,
                                 const PhysicalConstants& consts) {
    if (!spec.is_double()) throw BadSpec("double_barrier_dwell needs a double barrier");
    const auto& db = std::get<DoubleRectangular>(spec.shape);
    StationarySolution sol = solve_any(k, spec, consts);
    BasisPair basis = make_basis(sol);
    if (sol.T <= 0.0) throw ZeroTransmission("transmission underflows, segment dwells undefined");

    double pre = consts.mass_over_hbar() / k;
    double x1 = db.a + db.d, x2 = db.a + db.d + db.l;
    SubprocessField tr = build_subprocess(sol, basis, Component::Transmission);
    DoubleDwell out;
    out.tau1 = over_T(pre * subprocess_integral(tr, sol.xa, x1), sol, "tau1");
    out.taugap = over_T(pre * subprocess_integral(tr, x1, x2), sol, "taugap");
    out.tau2 = over_T(pre * subprocess_integral(tr, x2, sol.xb), sol, "tau2");
    out.total = out.tau1 + out.taugap + out.tau2;
    out.direct_total = over_T(pre * subprocess_integral(tr, sol.xa, sol.xb), sol, "dwell");

    double k0 = std::sqrt(spec.top() / consts.hbar2_over_2m);
    double grow = std::exp(2.0 * std::min(k0 * db.d, 350.0));
    out.asym_tau1_printed = consts.mass_over_hbar() / (4.0 * k * k0) * grow;
    out.asym_taugap_printed = consts.mass_over_hbar() * k0 * k0 / (8.0 * std::pow(k, 4)) *
                              (k * db.l - std::sin(k * db.l)) * grow;
    return out;
}

LarmorSuite larmor_suite(double k, const BarrierSpec& spec, const PhysicalConstants& consts,
                         const LarmorInputs& inputs) {
    StationarySolution sol = solve_any(k, spec, consts);
    if (!sol.analytic_rect) throw BadSpec("larmor suite is implemented for single rectangles");
    if (sol.regime != Regime::UnderBarrier)
        throw NumericError("larmor suite requires the under-barrier regime");
    if (sol.T <= 0.0) throw ZeroTransmission("transmission underflows, larmor suite undefined");
    if (sol.R <= 0.0) throw ZeroReflection("no reflected wave, larmor suite undefined");

    BasisPair basis = make_basis(sol);
    RectUnderForms f(sol);
    const double kap = sol.kappa, E = sol.E;
    const double mh = consts.mass_over_hbar();

    LarmorSuite out;
    out.tau_perp = report(TimeName::LarmorPerp, TimeMethod::ClosedForm, f.tau_perp(), k);
    out.tau_perp0 = report(TimeName::LarmorPerpInitial, TimeMethod::ClosedForm, f.tau_perp0(), k);

    // probe solutions with kappa moved at fixed k: V shifts to E + (hbar^2/2m) kv^2
    struct Probe {
        double M, dM;     // |Psi| and d|Psi|/dx at x_c
        cplx v, jump;     // psi_tr(x_c) and the jump of psi_tr' across x_c
    };
    auto probe = [&](double kv) {
        Rectangular r{E + consts.hbar2_over_2m * kv * kv, sol.xa, sol.xb};
        BarrierSpec s{r};
        StationarySolution ps = solve_rectangular(k, s, consts);
        BasisPair pb = make_basis(ps);
        FieldValue tot = evaluate_total(ps, pb, ps.xc);
        Probe p;
        p.M = std::abs(tot.psi);
        p.dM = p.M > 0.0 ? (tot.psi.real() * tot.dpsi.real() +
                            tot.psi.imag() * tot.dpsi.imag()) / p.M
                         : 0.0;
        SubprocessField tr = build_subprocess(ps, pb, Component::Transmission);
        FieldValue L = tr.eval(ps.xc, Side::Left);
        FieldValue R = tr.eval(ps.xc, Side::Right);
        p.v = R.psi;
        p.jump = R.dpsi - L.dpsi;
        return p;
    };

    // five-point stencil at +-h, +-2h: the Richardson combination of the two
    // central differences; the wider companion step keeps the roundoff floor
    // low enough for the chain residual at opaque corners
    double h = inputs.kappa_step_rel * kap;
    Probe pp1 = probe(kap + h), pm1 = probe(kap - h);
    Probe pp2 = probe(kap + 2.0 * h), pm2 = probe(kap - 2.0 * h);
    auto richardson = [&](double dh, double d2h) { return (4.0 * dh - d2h) / 3.0; };

    FieldValue tot0 = evaluate_total(sol, basis, sol.xc);
    double M0 = std::abs(tot0.psi);
    double dM0 = (tot0.psi.real() * tot0.dpsi.real() + tot0.psi.imag() * tot0.dpsi.imag()) / M0;
    double dMdk = richardson((pp1.M - pm1.M) / (2.0 * h), (pp2.M - pm2.M) / (4.0 * h));
    double ddMdk = richardson((pp1.dM - pm1.dM) / (2.0 * h), (pp2.dM - pm2.dM) / (4.0 * h));
    double flip = mh * (M0 * ddMdk - dM0 * dMdk) / (k * kap * sol.T);
    out.tau_flip = report(TimeName::FlipTime, TimeMethod::FiniteDifference, flip, k);

    SubprocessField tr0 = build_subprocess(sol, basis, Component::Transmission);
    FieldValue L0 = tr0.eval(sol.xc, Side::Left);
    FieldValue R0 = tr0.eval(sol.xc, Side::Right);
    cplx v0 = R0.psi, jump0 = R0.dpsi - L0.dpsi;
    cplx dv = richardson(std::real((pp1.v - pm1.v)) / (2.0 * h),
                         std::real((pp2.v - pm2.v)) / (4.0 * h)) +
              cplx(0.0, 1.0) * (richardson(std::imag((pp1.v - pm1.v)) / (2.0 * h),
                                           std::imag((pp2.v - pm2.v)) / (4.0 * h)));
    cplx dj = richardson(std::real((pp1.jump - pm1.jump)) / (2.0 * h),
                         std::real((pp2.jump - pm2.jump)) / (4.0 * h)) +
              cplx(0.0, 1.0) * (richardson(std::imag((pp1.jump - pm1.jump)) / (2.0 * h),
                                           std::imag((pp2.jump - pm2.jump)) / (4.0 * h)));
    cplx psit0 = mh / (2.0 * kap) * dv;      // companion wave at x_c
    cplx dpsit_jump = mh / (2.0 * kap) * dj; // jump of its derivative
    double flip_jump = (std::real(v0 * std::conj(dpsit_jump)) -
                        std::real(std::conj(psit0) * jump0)) / (k * sol.T);
    out.tau_flip_jump = report(TimeName::FlipTime, TimeMethod::FiniteDifference, flip_jump, k);

    double perp0 = out.tau_perp0.value;
    out.tau_par0_tr = report(TimeName::LarmorParallelInitialTr, TimeMethod::ClosedForm,
                             perp0 * std::sqrt(sol.R / sol.T), k);
    out.tau_par0_ref = report(TimeName::LarmorParallelInitialRef, TimeMethod::ClosedForm,
                              -perp0 * std::sqrt(sol.T / sol.R), k);

    // independent quadrature reflection dwell closes the chain checks
    SubprocessField refl = build_subprocess(sol, basis, Component::Reflection);
    double tau_ref = mh / k * subprocess_integral(refl, sol.xa, sol.xc) / sol.R;
    double tau_tr = f.tau_dwell_tr();
    out.res_chain = (tau_tr + flip - tau_ref) / tau_ref;
    out.res_perp_chain = (tau_ref - (out.tau_perp.value - perp0)) / tau_ref;
    out.res_flip_methods = std::abs(flip - flip_jump) / std::max(std::abs(flip_jump), 1e-300);
    out.res_par0 = (sol.T * out.tau_par0_tr.value + sol.R * out.tau_par0_ref.value) /
                   std::max(std::abs(perp0), 1e-300);
    out.rot_angle_gap = (tau_ref - tau_tr) / tau_ref;
    return out;
}

TimesBundle all_times(double k, const BarrierSpec& spec, const PhysicalConstants& consts) {
    StationarySolution sol = solve_any(k, spec, consts);
    TimesBundle out;
    auto rel = [&](const char* name, double v) { out.relations.push_back({name, v}); };

    out.reports.push_back(dwell_free(k, spec, consts));
    out.reports.push_back(dwell_total_flux(k, spec, consts));

    DualReport db = dwell_buttiker(k, spec, consts);
    out.reports.push_back(db.primary);
    if (db.closed) {
        out.reports.push_back(*db.closed);
        rel("dual_dwell_buttiker", db.rel_diff);
    }

    DualReport dt = dwell_transmission(k, spec, consts);
    out.reports.push_back(dt.primary);
    if (dt.closed) {
        out.reports.push_back(*dt.closed);
        rel("dual_dwell_tr", dt.rel_diff);
    }

    double tau_ref_quad = 0.0;
    bool have_ref = sol.R > 0.0;
    if (have_ref) {
        TimeReport dr = dwell_reflection(k, spec, consts);
        tau_ref_quad = dr.value;
        out.reports.push_back(dr);
    } else {
        out.lambda_status = "zero_reflection";
    }

    PhaseTimes ph = phase_time(k, spec, consts);
    out.reports.push_back(ph.tau_ph);
    out.reports.push_back(ph.tau_del);

    if (have_ref) {
        GroupTimes gt = asymptotic_group_times(k, spec, consts);
        out.reports.push_back(gt.tau_as);
        out.reports.push_back(gt.tau_group0);
        out.reports.push_back(gt.delay_tr);
        out.reports.push_back(gt.delay_ref);
        if (gt.tau_as_closed) {
            out.reports.push_back(*gt.tau_as_closed);
            rel("dual_group", gt.rel_diff);
            rel("group0_over_perp0", gt.group0_over_perp0);
        }
    }

    rel("unitarity", sol.T + sol.R - 1.0);

    if (!sol.analytic_rect) {
        out.larmor_status = "not_rectangular";
    } else if (sol.regime != Regime::UnderBarrier) {
        out.larmor_status = "over_barrier";
    } else if (!have_ref) {
        out.larmor_status = "zero_reflection";
    } else {
        LarmorSuite ls = larmor_suite(k, spec, consts);
        out.reports.push_back(ls.tau_perp);
        out.reports.push_back(ls.tau_perp0);
        out.reports.push_back(ls.tau_flip);
        out.reports.push_back(ls.tau_par0_tr);
        out.reports.push_back(ls.tau_par0_ref);
        rel("chain_flip", ls.res_chain);
        rel("perp_chain", ls.res_perp_chain);
        rel("flip_routes", ls.res_flip_methods);
        rel("par0_balance", ls.res_par0);
        rel("rot_angle_gap", ls.rot_angle_gap);
        (void)tau_ref_quad;
    }
    return out;
}

} // namespace ocs
