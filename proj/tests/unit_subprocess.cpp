#include "doctest.h"

#include "ocs/barrier.hpp"
#include "ocs/constants.hpp"
#include "ocs/errors.hpp"
#include "ocs/stationary.hpp"
#include "ocs/subprocess.hpp"

#include <algorithm>
#include <cmath>

using namespace ocs;

namespace {

const PhysicalConstants kC = electron_constants();
const double kK0 = wavenumber_from_energy(0.05, kC);

BarrierSpec rect(double V0, double a, double b) {
    return BarrierSpec{Rectangular{V0, a, b}};
}

struct Fields {
    StationarySolution sol;
    BasisPair basis;
    SubprocessField tr, rf;
};

Fields make_fields(double k, const BarrierSpec& spec) {
    Fields f;
    f.sol = solve_any(k, spec, kC);
    f.basis = make_basis(f.sol);
    f.tr = build_subprocess(f.sol, f.basis, Component::Transmission);
    f.rf = build_subprocess(f.sol, f.basis, Component::Reflection);
    return f;
}

} // namespace

TEST_CASE("subprocess waves add up to the total wave") {
    for (double d : {1.0, 3.0, 8.0}) {
        CAPTURE(d);
        Fields f = make_fields(kK0, rect(0.2, 200.0, 200.0 + d));
        double max_psi = 0.0, max_resid = 0.0;
        for (int i = 0; i <= 400; ++i) {
            double x = 195.0 + i * (d + 10.0) / 400.0;
            FieldValue t = evaluate_total(f.sol, f.basis, x);
            FieldValue a = f.tr.eval(x), b = f.rf.eval(x);
            max_psi = std::max(max_psi, std::abs(t.psi));
            max_resid = std::max(max_resid, std::abs(a.psi + b.psi - t.psi));
        }
        CHECK(max_resid / max_psi < 1e-12);
    }
}

TEST_CASE("decomposition stays relatively accurate deep in the opaque regime") {
    Fields f = make_fields(kK0, rect(0.2, 200.0, 215.0));
    for (int i = 0; i <= 200; ++i) {
        double x = 195.0 + i * 25.0 / 200.0;
        FieldValue t = evaluate_total(f.sol, f.basis, x);
        FieldValue a = f.tr.eval(x), b = f.rf.eval(x);
        double scale = std::max({std::abs(t.psi), std::abs(a.psi), std::abs(b.psi)});
        CAPTURE(x);
        CHECK(std::abs(a.psi + b.psi - t.psi) / scale < 1e-9);
    }
    // transmitted current keeps its relative meaning at T ~ 1e-26
    double v = kC.velocity(kK0);
    CHECK(subprocess_current(f.tr, f.sol.xb + 2.0) ==
          doctest::Approx(f.sol.T * v).epsilon(1e-11));
}

TEST_CASE("decomposition holds over the barrier top") {
    Fields f = make_fields(1.0, rect(0.02, 200.0, 204.0));
    REQUIRE(f.sol.regime == Regime::OverBarrier);
    double max_psi = 0.0, max_resid = 0.0;
    for (int i = 0; i <= 300; ++i) {
        double x = 195.0 + i * 14.0 / 300.0;
        FieldValue t = evaluate_total(f.sol, f.basis, x);
        FieldValue a = f.tr.eval(x), b = f.rf.eval(x);
        max_psi = std::max(max_psi, std::abs(t.psi));
        max_resid = std::max(max_resid, std::abs(a.psi + b.psi - t.psi));
    }
    CHECK(max_resid / max_psi < 1e-10);
}

TEST_CASE("transmission modulus is mirror symmetric about the midpoint") {
    for (double d : {1.0, 3.0, 8.0}) {
        CAPTURE(d);
        Fields f = make_fields(kK0, rect(0.2, 200.0, 200.0 + d));
        double worst = 0.0;
        for (int i = 1; i <= 50; ++i) {
            double xi = i * (d / 2.0) / 50.0;
            double ml = std::abs(f.tr.eval(f.sol.xc - xi).psi);
            double mr = std::abs(f.tr.eval(f.sol.xc + xi).psi);
            worst = std::max(worst, std::abs(ml - mr) / mr);
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("joining point: everything continuous except the modulus slope kink") {
    for (double d : {1.0, 3.0, 8.0}) {
        CAPTURE(d);
        Fields f = make_fields(kK0, rect(0.2, 200.0, 200.0 + d));
        MatchingReport mr = matching_report(f.tr);
        CHECK(std::abs(mr.modulus_jump) < 1e-12);
        CHECK(std::abs(mr.phase_jump) < 1e-12);
        CHECK(std::abs(mr.current_jump) < 1e-9);
        CHECK(std::abs(mr.phase_slope_jump) < 1e-9);
        // the kink: equal and opposite, not zero
        CHECK(std::abs(mr.modulus_slope_sum) < 1e-9);
        CHECK(mr.modulus_slope_left > 0.0);
        CHECK(mr.modulus_slope_right < 0.0);
    }
}

TEST_CASE("reflection wave vanishes beyond the midpoint and carries no current") {
    for (double d : {1.0, 3.0}) {
        CAPTURE(d);
        Fields f = make_fields(kK0, rect(0.2, 200.0, 200.0 + d));
        CHECK(std::abs(f.rf.eval(f.sol.xc + 0.1 * d).psi) == 0.0);
        CHECK(std::abs(f.rf.eval(f.sol.xb + 1.0).psi) == 0.0);

        // node at the joining point itself, slope jump from the left
        CHECK(std::abs(f.rf.eval(f.sol.xc, Side::Left).psi) == 0.0);
        CHECK(std::abs(f.rf.eval(f.sol.xc, Side::Right).psi) == 0.0);
        CHECK(std::abs(f.rf.eval(f.sol.xc, Side::Left).dpsi) > 0.0);
        CHECK(std::abs(f.rf.eval(f.sol.xc, Side::Right).dpsi) == 0.0);

        double v = kC.velocity(kK0);
        CHECK(std::abs(subprocess_current(f.rf, f.sol.xa - 3.0) / v) < 1e-13);
        CHECK(std::abs(subprocess_current(f.rf, f.sol.xa + 0.3 * d) / v) < 1e-13);
        CHECK(std::abs(subprocess_current(f.rf, f.sol.xc, Side::Left) / v) < 1e-13);
    }
}

TEST_CASE("transmission wave carries the full transmitted current everywhere") {
    for (double d : {1.0, 3.0, 8.0}) {
        CAPTURE(d);
        Fields f = make_fields(kK0, rect(0.2, 200.0, 200.0 + d));
        double expect = f.sol.T * kC.velocity(kK0);
        CHECK(subprocess_current(f.tr, f.sol.xa - 3.0) == doctest::Approx(expect).epsilon(1e-11));
        CHECK(subprocess_current(f.tr, f.sol.xa + 0.3 * d) == doctest::Approx(expect).epsilon(1e-11));
        CHECK(subprocess_current(f.tr, f.sol.xb + 2.0) == doctest::Approx(expect).epsilon(1e-11));
    }
}

TEST_CASE("transmission subprocess matches the total wave past the midpoint") {
    Fields f = make_fields(kK0, rect(0.2, 200.0, 203.0));
    for (double x : {f.sol.xc + 0.3, f.sol.xb - 0.1, f.sol.xb + 4.0}) {
        FieldValue t = evaluate_total(f.sol, f.basis, x);
        FieldValue a = f.tr.eval(x);
        CHECK(std::abs(a.psi - t.psi) / std::abs(t.psi) < 1e-12);
        CHECK(std::abs(a.dpsi - t.dpsi) / std::abs(t.dpsi) < 1e-12);
    }
}
