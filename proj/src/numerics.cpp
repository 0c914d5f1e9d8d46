#include "ocs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ocs/errors.hpp"

namespace ocs {

namespace {

// Gauss-Kronrod 15(7) nodes and weights on [-1,1], positive half.
const double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
const double kWgk[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278};
const double kWg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694};

struct Interval {
    double a, b, I, err;
};

Interval gk15(const std::function<double(double)>& f, double a, double b) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(c);
    double resk = kWgk[7] * fc;
    double resg = kWg[3] * fc;
    for (int j = 0; j < 7; j++) {
        double fv = f(c - h * kXgk[j]) + f(c + h * kXgk[j]);
        resk += kWgk[j] * fv;
        if (j % 2 == 1) resg += kWg[j / 2] * fv;
    }
    Interval iv;
    iv.a = a;
    iv.b = b;
    iv.I = resk * h;
    iv.err = std::abs((resk - resg) * h);
    return iv;
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol_rel, double tol_abs, int max_intervals) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::vector<Interval> ivs;
    ivs.reserve(64);
    ivs.push_back(gk15(f, a, b));
    for (;;) {
        double I = 0.0, err = 0.0;
        for (const auto& iv : ivs) {
            I += iv.I;
            err += iv.err;
        }
        double tol = std::max(tol_rel * std::abs(I), tol_abs);
        // a single unsplit interval can fool the error estimate; split once anyway
        if (err <= tol && ivs.size() > 1) return sign * I;
        if (static_cast<int>(ivs.size()) >= max_intervals)
            throw IntegrationFailure("interval budget " + std::to_string(max_intervals) +
                                     " exhausted, err=" + std::to_string(err));
        size_t worst = 0;
        for (size_t i = 1; i < ivs.size(); i++)
            if (ivs[i].err > ivs[worst].err) worst = i;
        Interval w = ivs[worst];
        double mid = 0.5 * (w.a + w.b);
        if (!(mid > w.a && mid < w.b))
            throw IntegrationFailure("interval collapsed at x=" + std::to_string(w.a));
        ivs[worst] = gk15(f, w.a, mid);
        ivs.push_back(gk15(f, mid, w.b));
    }
}

DerivativeResult derivative_richardson(const std::function<double(double)>& f, double x,
                                       double h0, double tol_rel, double min_step) {
    constexpr int kLevels = 12;
    double tab[kLevels][kLevels];
    double h = h0;
    tab[0][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    DerivativeResult best;
    best.value = tab[0][0];
    best.err_bound = std::abs(tab[0][0]);
    double prev_change = -1.0;
    for (int i = 1; i < kLevels; i++) {
        h *= 0.5;
        if (h <= min_step || x + h == x) break;
        tab[i][0] = (f(x + h) - f(x - h)) / (2.0 * h);
        double fac = 4.0;
        for (int j = 1; j <= i; j++) {
            tab[i][j] = (fac * tab[i][j - 1] - tab[i - 1][j - 1]) / (fac - 1.0);
            fac *= 4.0;
        }
        double change = std::abs(tab[i][i] - tab[i - 1][i - 1]);
        if (change <= best.err_bound) {
            best.value = tab[i][i];
            best.err_bound = change;
        }
        double scale = std::max(std::abs(best.value), 1e-300);
        if (change <= tol_rel * scale) {
            best.converged = true;
            return best;
        }
        // halting once roundoff noise dominates beats polishing garbage
        if (prev_change >= 0.0 && change > 4.0 * prev_change) break;
        prev_change = change;
    }
    return best;
}

BisectResult bisect(const std::function<double(double)>& f, double lo, double hi,
                    double xtol, int max_iter) {
    BisectResult res;
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) {
        res.found = true;
        res.root = lo;
        return res;
    }
    if (fhi == 0.0) {
        res.found = true;
        res.root = hi;
        return res;
    }
    if ((flo > 0.0) == (fhi > 0.0)) return res; // no sign change
    for (int it = 0; it < max_iter && (hi - lo) > xtol; it++) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) {
            res.found = true;
            res.root = mid;
            return res;
        }
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    res.found = true;
    res.root = 0.5 * (lo + hi);
    return res;
}

double simpson(const double* f, int n, double h) {
    double s = f[0] + f[n];
    for (int i = 1; i < n; i += 2) s += 4.0 * f[i];
    for (int i = 2; i < n; i += 2) s += 2.0 * f[i];
    return s * h / 3.0;
}

std::complex<double> simpson(const std::complex<double>* f, int n, double h) {
    std::complex<double> s = f[0] + f[n];
    for (int i = 1; i < n; i += 2) s += 4.0 * f[i];
    for (int i = 2; i < n; i += 2) s += 2.0 * f[i];
    return s * (h / 3.0);
}

std::complex<double> filon_integral(const std::complex<double>* g, int n,
                                    double x0, double h, double omega) {
    using cd = std::complex<double>;
    const cd I(0.0, 1.0);
    double theta = omega * h;
    cd total = 0.0;
    if (std::abs(theta) < 1e-4) {
        // carrier nearly flat across a step: plain Simpson on g e^{i w x}
        for (int j = 0; j + 2 <= n; j += 2) {
            double xm = x0 + (j + 1) * h;
            cd e0 = std::exp(I * (omega * (xm - h)));
            cd e1 = std::exp(I * (omega * xm));
            cd e2 = std::exp(I * (omega * (xm + h)));
            total += (h / 3.0) * (g[j] * e0 + 4.0 * g[j + 1] * e1 + g[j + 2] * e2);
        }
        return total;
    }
    double st = std::sin(theta), ct = std::cos(theta);
    // exact moments of 1, xi, xi^2 against e^{i w xi} over [-h, h]
    cd M0 = cd(2.0 * st / omega, 0.0);
    cd M1 = I * (2.0 * (st - theta * ct) / (omega * omega));
    cd M2 = cd(2.0 * ((theta * theta - 2.0) * st + 2.0 * theta * ct) / (omega * omega * omega), 0.0);
    double inv2h = 1.0 / (2.0 * h);
    double invh2 = 1.0 / (h * h);
    for (int j = 0; j + 2 <= n; j += 2) {
        double xm = x0 + (j + 1) * h;
        cd c0 = g[j + 1];
        cd c1 = (g[j + 2] - g[j]) * inv2h;
        cd c2 = (g[j + 2] - 2.0 * g[j + 1] + g[j]) * (0.5 * invh2);
        total += std::exp(I * (omega * xm)) * (c0 * M0 + c1 * M1 + c2 * M2);
    }
    return total;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    LinearFit fit;
    size_t n = x.size();
    if (n < 2 || y.size() != n) throw NumericError("linear_fit needs two samples");
    double sx = 0, sy = 0;
    for (size_t i = 0; i < n; i++) {
        sx += x[i];
        sy += y[i];
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; i++) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw NumericError("linear_fit abscissa is degenerate");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

const double kGL16Nodes[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
const double kGL16Weights[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

double log_sinh(double x) {
    if (!(x > 0.0)) throw NumericError("log_sinh needs x > 0");
    // sinh x = e^x (1 - e^{-2x})/2 for any positive x; expm1 keeps small x exact
    return x - M_LN2 + std::log(-std::expm1(-2.0 * x));
}

double log_cosh(double x) {
    double ax = std::abs(x);
    return ax - M_LN2 + std::log1p(std::exp(-2.0 * ax));
}

} // namespace ocs
