#include "ocs/subprocess.hpp"

#include <cmath>
#include <string>

#include "ocs/errors.hpp"

namespace ocs {

namespace {

cplx polar1(double angle) { return cplx(std::cos(angle), std::sin(angle)); }

// one-sided value/derivative of a subprocess wave exactly at the joining point
struct EdgePair {
    FieldValue left, right;
};

} // namespace

SubprocessField build_subprocess(const StationarySolution& sol, const BasisPair& basis,
                                 Component which) {
    SubprocessField f;
    f.which = which;
    f.sol = sol;
    f.basis = basis;
    const cplx i(0.0, 1.0);
    const double k = sol.k;
    const double W = sol.wronskian;
    cplx eika = polar1(k * sol.xa);

    if (sol.analytic_rect && sol.regime == Regime::UnderBarrier) {
        double kap = sol.kappa;
        // left-half transmission continuation anchored at a (no cancellation)
        f.lam_p = sol.A_tr_in * eika * cplx(kap, k) / (2.0 * kap);
        f.lam_m = sol.A_tr_in * eika * cplx(kap, -k) / (2.0 * kap);
        // c_ref = 2i sin(lambda) cos(lambda) P e^{ika}/W via the scaled P
        double d = sol.width;
        double em = std::exp(-kap * d);
        double sh_t = 0.5 * (1.0 - em), ch_t = 0.5 * (1.0 + em);
        cplx Pt(kap * sh_t, k * ch_t); // P e^{-kd/2}
        double cosl = std::cos(sol.lambda);
        double amp_half = std::exp(0.5 * sol.log_T + 0.5 * kap * d); // sin(lambda) e^{+kd/2}
        f.c_ref = 2.0 * i * cosl * amp_half * Pt * eika / W;
    } else {
        f.lam_p = f.lam_m = 0.0;
        f.c_ref = (sol.P * sol.A_ref_in + std::conj(sol.P) * sol.b_out) * eika / W;
    }
    return f;
}

FieldValue SubprocessField::eval(double x, Side side_at_xc) const {
    const cplx i(0.0, 1.0);
    const double k = sol.k;
    if (which == Component::Total) return evaluate_total(sol, basis, x);

    bool left_of_xc = x < sol.xc || (x == sol.xc && side_at_xc == Side::Left);
    FieldValue out;

    if (which == Component::Reflection) {
        if (!left_of_xc) {
            out.psi = out.dpsi = 0.0;
            return out;
        }
        if (x < sol.xa) {
            cplx inc = sol.A_ref_in * polar1(k * x);
            cplx refl = sol.b_out * polar1(k * (2.0 * sol.xa - x));
            out.psi = inc + refl;
            out.dpsi = i * k * (inc - refl);
            return out;
        }
        double F, dF, G, dG;
        basis.eval(x - sol.xc, F, dF, G, dG);
        out.psi = c_ref * F;
        out.dpsi = c_ref * dF;
        return out;
    }

    // transmission
    if (!left_of_xc) return evaluate_total(sol, basis, x);
    if (x < sol.xa) {
        out.psi = sol.A_tr_in * polar1(k * x);
        out.dpsi = i * k * out.psi;
        return out;
    }
    if (sol.analytic_rect && sol.regime == Regime::UnderBarrier) {
        double kap = sol.kappa;
        double ep = std::exp(kap * (x - sol.xa));
        double em = std::exp(-kap * (x - sol.xa));
        out.psi = lam_p * ep + lam_m * em;
        out.dpsi = kap * (lam_p * ep - lam_m * em);
        return out;
    }
    cplx eika = polar1(k * sol.xa);
    cplx cF = sol.P * sol.A_tr_in * eika / sol.wronskian;
    double F, dF, G, dG;
    basis.eval(x - sol.xc, F, dF, G, dG);
    out.psi = cF * F + sol.b_tot * G;
    out.dpsi = cF * dF + sol.b_tot * dG;
    return out;
}

MatchingReport matching_report(const SubprocessField& field) {
    MatchingReport rep;
    FieldValue L = field.eval(field.sol.xc, Side::Left);
    FieldValue R = field.eval(field.sol.xc, Side::Right);
    double ml = std::abs(L.psi), mr = std::abs(R.psi);
    double mscale = std::max({ml, mr, 1e-300});

    rep.modulus_jump = (mr - ml) / mscale;
    double dphi = std::arg(R.psi) - std::arg(L.psi);
    dphi -= 2.0 * M_PI * std::round(dphi / (2.0 * M_PI));
    rep.phase_jump = (ml > 0.0 && mr > 0.0) ? dphi : 0.0;

    // modulus slope d|psi|/dx and phase slope from the one-sided derivatives
    double Ml = ml > 0.0 ? (L.psi.real() * L.dpsi.real() + L.psi.imag() * L.dpsi.imag()) / ml : 0.0;
    double Mr = mr > 0.0 ? (R.psi.real() * R.dpsi.real() + R.psi.imag() * R.dpsi.imag()) / mr : 0.0;
    rep.modulus_slope_left = Ml;
    rep.modulus_slope_right = Mr;
    rep.modulus_slope_sum = (Ml + Mr) / std::max({std::abs(Ml), std::abs(Mr), 1e-300});

    double Il = std::imag(std::conj(L.psi) * L.dpsi);
    double Ir = std::imag(std::conj(R.psi) * R.dpsi);
    rep.current_jump = (Ir - Il) / std::max({std::abs(Il), std::abs(Ir), 1e-300});

    double pl = ml > 0.0 ? Il / (ml * ml) : 0.0;
    double pr = mr > 0.0 ? Ir / (mr * mr) : 0.0;
    rep.phase_slope_jump = (pr - pl) / std::max({std::abs(pl), std::abs(pr), 1e-300});
    return rep;
}

double subprocess_current(const SubprocessField& field, double x, Side side_at_xc) {
    FieldValue v = field.eval(x, side_at_xc);
    double hbar_over_m = 2.0 * field.sol.consts.hbar2_over_2m / field.sol.consts.hbar;
    return hbar_over_m * std::imag(std::conj(v.psi) * v.dpsi);
}

} // namespace ocs
