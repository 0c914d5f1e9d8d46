#pragma once

#include "ocs/stationary.hpp"

namespace ocs {

enum class Component { Total, Transmission, Reflection };
enum class Side { Left, Right };

// View over a stationary solution that evaluates one subprocess wave.
// The reflection wave vanishes identically for x >= x_c; the transmission
// wave coincides with Psi_tot there.
struct SubprocessField {
    Component which = Component::Total;
    StationarySolution sol;
    BasisPair basis;

    // precomputed interior coefficients (rectangular under-barrier route)
    cplx lam_p, lam_m; // psi_tr left half: coefficients of e^{+kappa(x-a)}, e^{-kappa(x-a)}
    cplx c_ref;        // psi_ref interior: coefficient of F(x - x_c)

    FieldValue eval(double x, Side side_at_xc = Side::Right) const;
};

SubprocessField build_subprocess(const StationarySolution& sol, const BasisPair& basis,
                                 Component which);

// One-sided limits at the joining point for the transmission wave.
// Slopes of the modulus are expected equal and opposite (their sum ~ 0),
// everything else continuous.
struct MatchingReport {
    double phase_jump = 0.0;         // rad
    double phase_slope_jump = 0.0;   // rad/nm, relative to max one-sided magnitude
    double modulus_jump = 0.0;       // relative
    double modulus_slope_sum = 0.0;  // relative to max one-sided |M'|
    double current_jump = 0.0;       // relative
    double modulus_slope_left = 0.0; // raw M'(x_c-0), 1/nm units of sqrt-density slope
    double modulus_slope_right = 0.0;
};

MatchingReport matching_report(const SubprocessField& field);

// (hbar/m) Im(psi* dpsi/dx), nm/fs units of density flow.
double subprocess_current(const SubprocessField& field, double x, Side side_at_xc = Side::Right);

} // namespace ocs
