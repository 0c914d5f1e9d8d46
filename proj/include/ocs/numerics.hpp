#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace ocs {

// Adaptive Gauss-Kronrod 15(7) on [a,b]. Splits intervals until the local
// error estimate is below tol_rel*|I| + tol_abs. Throws IntegrationFailure
// when the interval budget is exhausted.
double integrate_adaptive(const std::function<double(double)>& f,
                          double a, double b,
                          double tol_rel = 1e-9, double tol_abs = 0.0,
                          int max_intervals = 4000);

struct DerivativeResult {
    double value = 0.0;
    double err_bound = 0.0; // last observed change between refinements
    bool converged = false; // MinStepReached when false
};

// Central difference with Richardson extrapolation; the step is halved until
// two successive refinements agree to tol_rel or the step underflows
// (MinStepReached: last estimate reported with its error bound, not thrown).
DerivativeResult derivative_richardson(const std::function<double(double)>& f,
                                       double x, double h0,
                                       double tol_rel = 1e-7,
                                       double min_step = 0.0);

struct BisectResult {
    bool found = false;
    double root = 0.0;
};

BisectResult bisect(const std::function<double(double)>& f,
                    double lo, double hi, double xtol, int max_iter = 200);

// Composite Simpson over n+1 uniformly spaced samples (n even).
double simpson(const double* f, int n, double h);
std::complex<double> simpson(const std::complex<double>* f, int n, double h);

// Filon-type rule: integral of g(x) e^{i omega x} over a uniform grid
// x_j = x0 + j h, j = 0..n (n even), with g piecewise quadratic. Exact
// oscillatory moments keep the error tied to the envelope, not the carrier.
std::complex<double> filon_integral(const std::complex<double>* g, int n,
                                    double x0, double h, double omega);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// 16-point Gauss-Legendre nodes/weights on [-1,1] (positive half mirrored).
extern const double kGL16Nodes[8];
extern const double kGL16Weights[8];

// log(sinh(x)) and log(cosh(x)) without overflow for large x.
double log_sinh(double x);
double log_cosh(double x);

} // namespace ocs
