#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ocs/stationary.hpp"
#include "ocs/subprocess.hpp"

namespace ocs {

enum class TimeName {
    DwellFree, DwellTotalFlux, DwellButtiker, DwellTr, DwellRef,
    PhaseWigner, DelayWigner,
    AsymptoticGroupTr, AsymptoticGroupRef, DelayTr, DelayRef,
    LarmorPerp, LarmorPerpInitial, FlipTime,
    LarmorParallelInitialTr, LarmorParallelInitialRef, GroupInitial
};

enum class TimeMethod { ClosedForm, Quadrature, FiniteDifference, Simulation };

const char* to_string(TimeName n);
const char* to_string(TimeMethod m);

struct TimeReport {
    TimeName name;
    TimeMethod method;
    double value = 0.0; // fs
    double k = 0.0;     // nm^-1
};

// Pair of independent evaluations of the same quantity.
struct DualReport {
    TimeReport primary;              // quadrature / finite-difference route
    std::optional<TimeReport> closed;
    double rel_diff = 0.0;           // |primary-closed| / |closed| when both exist
};

TimeReport dwell_free(double k, const BarrierSpec& spec, const PhysicalConstants& consts);

// (1/I_tot) integral of |Psi_tot|^2 over [a,b], I_tot = T hbar k/m.
TimeReport dwell_total_flux(double k, const BarrierSpec& spec, const PhysicalConstants& consts);

// (m/hbar k) integral of |Psi_tot|^2; closed form attached for rectangles
// below the top.
DualReport dwell_buttiker(double k, const BarrierSpec& spec, const PhysicalConstants& consts);

// |Psi_tot(x)|^2 / (hbar k/m), fs per nm.
double local_dwell_density(double k, const BarrierSpec& spec, const PhysicalConstants& consts, double x);

DualReport dwell_transmission(double k, const BarrierSpec& spec, const PhysicalConstants& consts);

TimeReport dwell_reflection(double k, const BarrierSpec& spec, const PhysicalConstants& consts);

struct PhaseTimes {
    TimeReport tau_ph;  // (m/hbar k) J'
    TimeReport tau_del; // J' minus the free transit
    DerivativeResult dJ;
};

PhaseTimes phase_time(double k, const BarrierSpec& spec, const PhysicalConstants& consts);

struct GroupTimes {
    TimeReport tau_as;                    // (m/hbar k)(J' - lambda'), finite differences
    std::optional<TimeReport> tau_as_closed;
    double X_in0 = 0.0;                   // nm, initial subprocess CM shift = -lambda'
    std::optional<double> X_in0_closed;
    TimeReport tau_group0;                // -m X_in0/(hbar k)
    TimeReport delay_tr, delay_ref;       // tau_as minus free transit
    double rel_diff = 0.0;                // FD vs closed for tau_as
    double group0_over_perp0 = 0.0;       // surfaced near-miss against the initial Larmor reading
};

GroupTimes asymptotic_group_times(double k, const BarrierSpec& spec, const PhysicalConstants& consts);

struct DoubleDwell {
    double tau1 = 0.0, taugap = 0.0, tau2 = 0.0; // fs, segment readings
    double total = 0.0;                          // tau1+taugap+tau2
    double direct_total = 0.0;                   // one-shot dwell over the full support
    // printed large-V0 asymptotes, reported for comparison only
    double asym_tau1_printed = 0.0;  // (m/4 hbar k kappa0) e^{2 kappa0 d}
    double asym_taugap_printed = 0.0;
};

DoubleDwell double_barrier_dwell(double k, const BarrierSpec& spec, const PhysicalConstants& consts);

struct LarmorInputs {
    // FD step as a fraction of kappa. Eq-31-style flip times difference second
    // partials of |Psi|, so the step balances truncation against roundoff; the
    // 1e-4 default sits at the optimum and keeps the chain residual near 1e-9,
    // where 1e-6 leaves it at the roundoff floor ~1e-6. Must stay <= 1e-3.
    double kappa_step_rel = 1e-4;
};

struct LarmorSuite {
    TimeReport tau_perp;       // closed form, equals the Buttiker dwell
    TimeReport tau_perp0;      // initial reading
    TimeReport tau_flip;       // total-wave-function route, kappa finite differences
    TimeReport tau_flip_jump;  // joining-point jump route, cross-check
    TimeReport tau_par0_tr, tau_par0_ref;
    double res_chain = 0.0;        // (tau_tr + tau_flip - tau_ref)/tau_ref
    double res_perp_chain = 0.0;   // (tau_ref - (tau_perp - tau_perp0))/tau_ref
    double res_flip_methods = 0.0; // two flip routes against each other
    double res_par0 = 0.0;         // T tau_par0_tr + R tau_par0_ref
    double rot_angle_gap = 0.0;    // (tau_ref - tau_tr)/tau_ref: the two candidate
                                   // readings of the reflection precession angle
};

LarmorSuite larmor_suite(double k, const BarrierSpec& spec, const PhysicalConstants& consts,
                         const LarmorInputs& inputs = {});

// Everything defined at this (k, barrier), plus named relation residuals.
// Times that are undefined in the current regime are absent, with the reason
// recorded (e.g. over-barrier Larmor, zero reflection).
struct TimesBundle {
    std::vector<TimeReport> reports;
    struct Relation { std::string name; double value; };
    std::vector<Relation> relations;
    std::string larmor_status = "ok"; // "over_barrier" / "zero_reflection" when skipped
    std::string lambda_status = "ok"; // "zero_reflection" when lambda is undefined
};

TimesBundle all_times(double k, const BarrierSpec& spec, const PhysicalConstants& consts);

} // namespace ocs
