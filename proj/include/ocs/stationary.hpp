#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "ocs/barrier.hpp"
#include "ocs/constants.hpp"
#include "ocs/numerics.hpp"

namespace ocs {

using cplx = std::complex<double>;

struct DenseTable; // numeric-path basis storage, defined in stationary.cpp

enum class Regime { UnderBarrier, OverBarrier };

struct KGrid {
    double k_min = 0.0; // nm^-1
    double k_max = 0.0;
    int n_points = 0;
};

// Real even/odd partial solutions about the midpoint. eval fills values and
// derivatives at xi = x - x_c; F is odd, G is even.
struct BasisPair {
    std::function<void(double xi, double& F, double& dF, double& G, double& dG)> eval;
    double wronskian = 0.0; // F'G - G'F, x-independent
    bool analytic = false;
};

struct StationarySolution {
    double k = 0.0;      // nm^-1
    double E = 0.0;      // eV
    double kappa = 0.0;  // under-barrier decay constant, or interior wavenumber over the top
    double kappa0 = 0.0; // sqrt(2 m V0)/hbar of the barrier top
    Regime regime = Regime::OverBarrier;

    cplx Q, P;                   // [F'+ikF], [G'+ikG] at x=b
    cplx a_out, b_out;           // outgoing amplitudes
    cplx a_tot, b_tot;           // interior coefficients of F, G
    cplx A_tr_in, A_ref_in;      // subprocess incident amplitudes
    double T = 0.0, R = 0.0;
    double log_T = 0.0;          // ln T, finite deep into the opaque regime
    double J = 0.0;              // transmission phase (principal branch)
    double lambda = 0.0;         // reflection-subprocess incident phase
    bool has_lambda = false;     // false when R = 0
    double wronskian = 0.0;

    // interior coefficients of e^{+kappa(x-b)}, e^{-kappa(x-b)} for Psi_tot
    // (under-barrier rectangular path only; zero otherwise)
    cplx gamma_p, gamma_m;

    double xa = 0.0, xb = 0.0, xc = 0.0, width = 0.0;
    bool analytic_rect = false; // produced by the closed-form rectangular path
    BarrierSpec spec;
    PhysicalConstants consts;
    std::shared_ptr<const DenseTable> numeric_table; // numeric path only
};

struct FieldValue {
    cplx psi;
    cplx dpsi; // d/dx
};

// Closed-form path for a single rectangle. Amplitudes are built from exact
// polar rewrites of the Q/P combinations so opaque barriers (kappa d up to
// ~700) neither overflow nor lose the transmitted magnitude.
StationarySolution solve_rectangular(double k, const BarrierSpec& spec,
                                     const PhysicalConstants& consts,
                                     double barrier_top_window = 1e-9);

// Numeric path: integrates the real basis from x_c to b (adaptive RK45,
// piecewise-constant analytic steps for the double rectangle), then the same
// amplitude algebra through Q and P.
StationarySolution solve_symmetric_numeric(double k, const BarrierSpec& spec,
                                           const PhysicalConstants& consts,
                                           double rtol = 1e-10,
                                           double barrier_top_window = 1e-9);

// Dispatches to the closed form for rectangles, numeric otherwise.
StationarySolution solve_any(double k, const BarrierSpec& spec,
                             const PhysicalConstants& consts);

BasisPair make_basis(const StationarySolution& sol);

FieldValue evaluate_total(const StationarySolution& sol, const BasisPair& basis, double x);

// Unwrapped phase tables over a k grid.
struct PhaseTable {
    std::vector<double> k;
    std::vector<double> J;       // unwrapped
    std::vector<double> lambda;  // unwrapped; meaningful only where has_lambda
    std::vector<char> has_lambda;
    BarrierSpec spec;
    PhysicalConstants consts;
    bool numeric_path = false;

    // fresh solve with the branch anchored to the nearest table entry
    double J_at(double kq) const;
    double lambda_at(double kq) const;
};

PhaseTable phase_spectra(const KGrid& grid, const BarrierSpec& spec,
                         const PhysicalConstants& consts, bool numeric_path = false);

// d/dk of the table phases by Richardson-refined central differences on
// fresh branch-anchored solves.
DerivativeResult ddk_J(const PhaseTable& table, double k, double step = 0.0);
DerivativeResult ddk_lambda(const PhaseTable& table, double k, double step = 0.0);

} // namespace ocs
