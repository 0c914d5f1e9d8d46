#include "doctest.h"

#include "ocs/barrier.hpp"
#include "ocs/constants.hpp"
#include "ocs/errors.hpp"
#include "ocs/timescales.hpp"

#include <cmath>
#include <set>
#include <string>

using namespace ocs;

namespace {

const PhysicalConstants kC = electron_constants();
const double kK0 = wavenumber_from_energy(0.05, kC);

BarrierSpec rect(double V0, double a, double b) {
    return BarrierSpec{Rectangular{V0, a, b}};
}

const BarrierSpec kB1 = rect(0.2, 200.0, 201.0);
const BarrierSpec kB3 = rect(0.2, 200.0, 203.0);
const BarrierSpec kB8 = rect(0.2, 200.0, 208.0);

} // namespace

TEST_CASE("Buttiker dwell: frozen values, dual routes agree") {
    DualReport d1 = dwell_buttiker(kK0, kB1, kC);
    CHECK(d1.primary.value == doctest::Approx(2.00336893531).epsilon(1e-9));
    REQUIRE(d1.closed.has_value());
    CHECK(d1.rel_diff < 1e-9);
    CHECK(d1.primary.method == TimeMethod::Quadrature);
    CHECK(d1.closed->method == TimeMethod::ClosedForm);

    CHECK(dwell_buttiker(kK0, kB3, kC).primary.value ==
          doctest::Approx(1.90023422903).epsilon(1e-9));
    CHECK(dwell_buttiker(kK0, kB8, kC).primary.value ==
          doctest::Approx(1.9000942525).epsilon(1e-9));
}

TEST_CASE("transmission dwell: frozen values, dual routes agree") {
    DualReport d1 = dwell_transmission(kK0, kB1, kC);
    REQUIRE(d1.closed.has_value());
    CHECK(d1.closed->value == doctest::Approx(11.5524352295).epsilon(1e-10));
    CHECK(d1.rel_diff < 1e-9);

    DualReport d3 = dwell_transmission(kK0, kB3, kC);
    CHECK(d3.closed->value == doctest::Approx(494.90645844).epsilon(1e-10));
    CHECK(d3.rel_diff < 1e-9);

    // tau_tr blows up exponentially while the dwell stays put
    DualReport d8 = dwell_transmission(kK0, kB8, kC);
    CHECK(d8.closed->value == doctest::Approx(9919349.23799).epsilon(1e-10));
    CHECK(d8.rel_diff < 1e-8);
}

TEST_CASE("reflection dwell: frozen values") {
    CHECK(dwell_reflection(kK0, kB1, kC).value ==
          doctest::Approx(0.71554056846).epsilon(1e-9));
    CHECK(dwell_reflection(kK0, kB3, kC).value ==
          doctest::Approx(1.83650128951).epsilon(1e-9));
}

TEST_CASE("phase time: frozen value and free-transit offset") {
    PhaseTimes ph = phase_time(kK0, kB3, kC);
    CHECK(ph.tau_ph.value == doctest::Approx(7.60047847857).epsilon(1e-7));
    CHECK(ph.dJ.converged);
    double free_t = kC.mass_over_hbar() * 3.0 / kK0;
    CHECK(ph.tau_del.value == doctest::Approx(ph.tau_ph.value - free_t).epsilon(1e-12));
}

TEST_CASE("phase time saturates at the Hartman plateau") {
    PhaseTimes p8 = phase_time(kK0, kB8, kC);
    PhaseTimes p15 = phase_time(kK0, rect(0.2, 200.0, 215.0), kC);
    CHECK(std::abs(p15.tau_ph.value / p8.tau_ph.value - 1.0) < 1e-5);
    // opaque limit 2 m / (hbar k kappa)
    double kap = std::sqrt(0.2 / kC.hbar2_over_2m - kK0 * kK0);
    double plateau = kC.mass_over_hbar() * 2.0 / (kK0 * kap);
    CHECK(p15.tau_ph.value == doctest::Approx(plateau).epsilon(1e-4));
}

TEST_CASE("asymptotic group times: frozen values, FD vs closed") {
    GroupTimes gt = asymptotic_group_times(kK0, kB3, kC);
    REQUIRE(gt.X_in0_closed.has_value());
    CHECK(-*gt.X_in0_closed == doctest::Approx(0.0104171304987).epsilon(1e-9));
    REQUIRE(gt.tau_as_closed.has_value());
    CHECK(gt.tau_as_closed->value == doctest::Approx(7.52193004544).epsilon(1e-10));
    CHECK(gt.rel_diff < 1e-6);
    CHECK(gt.tau_group0.value ==
          doctest::Approx(kC.mass_over_hbar() / kK0 * 0.0104171304987).epsilon(1e-5));
    double free_t = kC.mass_over_hbar() * 3.0 / kK0;
    CHECK(gt.delay_tr.value == doctest::Approx(gt.tau_as.value - free_t).epsilon(1e-10));
    CHECK(gt.group0_over_perp0 > 0.0);
    CHECK(std::isfinite(gt.group0_over_perp0));
}

TEST_CASE("Larmor suite: frozen flip times and closed chains") {
    LarmorSuite l1 = larmor_suite(kK0, kB1, kC);
    CHECK(l1.tau_flip.value == doctest::Approx(-10.836894661).epsilon(1e-7));
    CHECK(l1.res_flip_methods < 1e-6);
    CHECK(std::abs(l1.res_chain) < 1e-7);
    CHECK(std::abs(l1.res_perp_chain) < 1e-7);
    CHECK(std::abs(l1.res_par0) < 1e-14);
    CHECK(l1.tau_perp0.value > 0.0);

    LarmorSuite l3 = larmor_suite(kK0, kB3, kC);
    CHECK(l3.tau_flip.value == doctest::Approx(-493.069957151).epsilon(1e-7));
    CHECK(l3.res_flip_methods < 1e-6);
    CHECK(std::abs(l3.res_chain) < 1e-7);

    // in-plane initial readings balance exactly between the channels
    CHECK(l3.tau_par0_tr.value > 0.0);
    CHECK(l3.tau_par0_ref.value < 0.0);

    DualReport db3 = dwell_buttiker(kK0, kB3, kC);
    CHECK(l3.tau_perp.value == doctest::Approx(db3.primary.value).epsilon(1e-9));
}

TEST_CASE("Larmor suite is honestly refused outside its regime") {
    CHECK_THROWS_AS(larmor_suite(kK0, BarrierSpec{DoubleRectangular{0.2, 1.0, 4.0, 200.0}}, kC),
                    BadSpec);
    double ko = wavenumber_from_energy(0.30, kC);
    CHECK_THROWS_AS(larmor_suite(ko, kB3, kC), NumericError);
}

TEST_CASE("flux-normalized dwell relates to the Buttiker dwell by 1/T") {
    TimeReport tf = dwell_total_flux(kK0, kB1, kC);
    DualReport db = dwell_buttiker(kK0, kB1, kC);
    StationarySolution sol = solve_any(kK0, kB1, kC);
    CHECK(tf.value == doctest::Approx(db.primary.value / sol.T).epsilon(1e-9));
    CHECK(dwell_free(kK0, kB1, kC).value ==
          doctest::Approx(kC.mass_over_hbar() * 1.0 / kK0).epsilon(1e-14));
}

TEST_CASE("flux normalization refuses to fake a number past the underflow wall") {
    CHECK_THROWS_AS(dwell_total_flux(kK0, rect(0.2, 0.0, 400.0), kC), NumericError);
}

TEST_CASE("local dwell density is positive and decays into the barrier") {
    double rho_a = local_dwell_density(kK0, kB8, kC, 200.5);
    double rho_c = local_dwell_density(kK0, kB8, kC, 204.0);
    CHECK(rho_a > 0.0);
    CHECK(rho_c > 0.0);
    CHECK(rho_a > rho_c);
}

TEST_CASE("free limit: every defined time collapses to the free transit") {
    BarrierSpec b0 = rect(0.0, 200.0, 215.0);
    double free_t = kC.mass_over_hbar() * 15.0 / kK0;
    CHECK(dwell_free(kK0, b0, kC).value == doctest::Approx(free_t).epsilon(1e-14));
    CHECK(dwell_total_flux(kK0, b0, kC).value == doctest::Approx(free_t).epsilon(1e-10));
    CHECK(dwell_buttiker(kK0, b0, kC).primary.value == doctest::Approx(free_t).epsilon(1e-10));
    CHECK(dwell_transmission(kK0, b0, kC).primary.value == doctest::Approx(free_t).epsilon(1e-10));
    CHECK(phase_time(kK0, b0, kC).tau_ph.value == doctest::Approx(free_t).epsilon(1e-10));
    CHECK_THROWS_AS(dwell_reflection(kK0, b0, kC), ZeroReflection);
    CHECK_THROWS_AS(asymptotic_group_times(kK0, b0, kC), ZeroReflection);

    TimesBundle tb = all_times(kK0, b0, kC);
    CHECK(tb.larmor_status == "over_barrier");
    CHECK(tb.lambda_status == "zero_reflection");
}

TEST_CASE("over the top: group times defined, Larmor skipped") {
    double ko = wavenumber_from_energy(0.30, kC);
    TimesBundle tb = all_times(ko, kB3, kC);
    CHECK(tb.larmor_status == "over_barrier");
    CHECK(tb.lambda_status == "ok");
    bool has_group = false;
    for (const auto& r : tb.reports)
        if (r.name == TimeName::AsymptoticGroupTr) has_group = true;
    CHECK(has_group);
}

TEST_CASE("bundle relations close at a transparent barrier") {
    TimesBundle tb = all_times(kK0, kB1, kC);
    CHECK(tb.larmor_status == "ok");
    REQUIRE(!tb.relations.empty());
    for (const auto& r : tb.relations) {
        if (r.name == "rot_angle_gap" || r.name == "group0_over_perp0") continue;
        CAPTURE(r.name);
        CHECK(std::abs(r.value) < 1e-6);
    }
}

TEST_CASE("double barrier: segment dwells add up, asymptotes reported") {
    BarrierSpec dspec{DoubleRectangular{0.2, 1.0, 4.0, 200.0}};
    DoubleDwell dd = double_barrier_dwell(kK0, dspec, kC);
    CHECK(dd.total == doctest::Approx(dd.direct_total).epsilon(1e-8));
    CHECK(dd.tau1 > 0.0);
    CHECK(dd.taugap > 0.0);
    CHECK(dd.tau2 > 0.0);
    CHECK(dd.asym_tau1_printed > 0.0);

    TimesBundle tb = all_times(kK0, dspec, kC);
    CHECK(tb.larmor_status == "not_rectangular");
}

TEST_CASE("report labels are distinct and stable") {
    std::set<std::string> names;
    for (TimeName n : {TimeName::DwellFree, TimeName::DwellButtiker, TimeName::DwellTr,
                       TimeName::DwellRef, TimeName::PhaseWigner, TimeName::AsymptoticGroupTr,
                       TimeName::LarmorPerp, TimeName::FlipTime})
        names.insert(to_string(n));
    CHECK(names.size() == 8);
    CHECK(std::string(to_string(TimeMethod::Quadrature)) != to_string(TimeMethod::ClosedForm));
}
