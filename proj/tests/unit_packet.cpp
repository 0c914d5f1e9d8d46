#include "doctest.h"

#include "ocs/barrier.hpp"
#include "ocs/constants.hpp"
#include "ocs/errors.hpp"
#include "ocs/packet.hpp"
#include "ocs/timescales.hpp"

#include <cmath>
#include <vector>

using namespace ocs;

namespace {

const PhysicalConstants kC = electron_constants();
const double kK0 = wavenumber_from_energy(0.05, kC);
const double kV0 = kC.velocity(kK0);

} // namespace

TEST_CASE("free packet moves ballistically and splits trivially") {
    SpectrumSpec sp{kK0, 10.0, 6.0};
    BarrierSpec b{Rectangular{0.0, 60.0, 65.0}};
    PacketOptions op;
    op.t_max = 900.0;
    op.L = 40.0;
    PacketSynthesizer synth(sp, b, kC, op);

    CHECK(std::abs(synth.spectral_norm() - 1.0) < 1e-9);
    CHECK(std::abs(synth.expected_T() - 1.0) < 1e-12);

    FieldsAtTime f0 = synth.synthesize_all(0.0);
    double best = 0.0, bx = 0.0;
    for (std::size_t i = 0; i < synth.grid().x.size(); ++i)
        if (std::abs(f0.tot[i]) > best) { best = std::abs(f0.tot[i]); bx = synth.grid().x[i]; }
    CHECK(std::abs(bx) < 0.5);
    CHECK(std::abs(center_of_mass(f0, synth.grid(), Component::Total)) < 1e-6);

    for (double t : {300.0, 600.0, 900.0}) {
        PacketMoments m = synth.moments(t);
        CAPTURE(t);
        CHECK(std::abs(m.Ntot - 1.0) < 1e-6);
        CHECK(m.Xtot == doctest::Approx(kV0 * t).epsilon(1e-3));
        CHECK(m.Xtr == doctest::Approx(kV0 * t).epsilon(1e-3));
        CHECK(m.Nref < 1e-25);
        CHECK(m.superpos_resid < 1e-10);

        // fast paths agree with the full moment evaluation
        CHECK(synth.x_tr(t) == doctest::Approx(m.Xtr).epsilon(1e-10));
    }

    PacketSeries series = propagate_series(synth, {0.0, 450.0, 900.0}, 1);
    REQUIRE(series.samples.size() == 3);
    EventTimes ev = group_event_times(synth, series, op.L);
    double expect = (65.0 + 40.0) / kV0;
    CHECK(ev.dt_tr == doctest::Approx(expect).epsilon(0.01));
    CHECK(std::isnan(ev.dt_ref)); // nothing reflects, the event is not reported
    CHECK(ev.dt_tr_formula == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("synthesis guards") {
    SpectrumSpec sp{kK0, 10.0, 6.0};
    BarrierSpec b{Rectangular{0.2, 60.0, 65.0}};

    SUBCASE("node budget too small for the oscillation count") {
        PacketOptions op;
        op.max_k_nodes = 64;
        CHECK_THROWS_AS(PacketSynthesizer(sp, b, kC, op), UnderResolvedPhase);
    }
    SUBCASE("spectrum must stay inside k > 0") {
        SpectrumSpec bad{kK0, 1.0, 6.0};
        CHECK_THROWS_AS(PacketSynthesizer(bad, b, kC, PacketOptions{}), ValidationError);
    }
    SUBCASE("width must be positive") {
        SpectrumSpec bad{kK0, -4.0, 6.0};
        CHECK_THROWS_AS(PacketSynthesizer(bad, b, kC, PacketOptions{}), ValidationError);
    }
    SUBCASE("user box must hold the initial packet") {
        PacketOptions op;
        op.x_lo = -25.0;
        op.x_hi = 160.0;
        CHECK_THROWS_AS(PacketSynthesizer(sp, b, kC, op), NormLeak);
    }
}

TEST_CASE("time sampling covers the run and stays ordered") {
    SpectrumSpec sp{kK0, 10.0, 6.0};
    BarrierSpec b{Rectangular{0.0, 60.0, 65.0}};
    PacketOptions op;
    op.t_max = 500.0;
    op.L = 40.0;
    PacketSynthesizer synth(sp, b, kC, op);
    std::vector<double> t = build_time_samples(synth);
    REQUIRE(t.size() > 10);
    CHECK(t.front() == 0.0);
    CHECK(t.back() == doctest::Approx(synth.t_max()).epsilon(1e-12));
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
}

TEST_CASE("tunneling packet: subprocess bookkeeping holds through the run") {
    SpectrumSpec sp{kK0, 10.0, 6.0};
    BarrierSpec b{Rectangular{0.2, 100.0, 105.0}};
    PacketOptions op;
    op.L = 100.0;
    PacketSynthesizer synth(sp, b, kC, op);

    PacketMoments m0 = synth.moments(0.0);
    GroupTimes gt = asymptotic_group_times(kK0, b, kC);
    REQUIRE(gt.X_in0_closed.has_value());
    // initial transmitted CM sits at the stationary shift, up to filter bias
    CHECK(std::abs(m0.Xtr - *gt.X_in0_closed) < 0.5 * std::abs(*gt.X_in0_closed) + 2e-5);
    CHECK(std::abs(m0.Ntot - 1.0) < 1e-6);
    CHECK(m0.Ntr == doctest::Approx(synth.expected_T()).epsilon(1e-6));
    CHECK(m0.Nref == doctest::Approx(synth.expected_R()).epsilon(1e-6));
    CHECK(std::abs(m0.ortho_re) < 1e-6);
    CHECK(m0.ortho_im == doctest::Approx(synth.ortho_im_expected()).epsilon(1e-5));

    std::vector<double> times = build_time_samples(synth);
    PacketSeries series = propagate_series(synth, times, 1);
    REQUIRE(series.samples.size() == times.size());

    AuditReport rep = norm_current_audit(series, synth);
    CHECK(rep.max_norm_err < 1e-6);
    CHECK(rep.max_nref_dev < 1e-6);
    CHECK(rep.ntr_early_late_gap < 1e-6);
    CHECK(rep.max_current_residual < 1e-3);
    CHECK(rep.max_iref == 0.0);
    CHECK(rep.max_superpos_resid < 1e-8);
    CHECK(rep.max_edge_density < 1e-9);

    EventTimes ev = group_event_times(synth, series, op.L);
    CHECK(ev.t_depart_ref < ev.t_arrive_ref);
    CHECK(ev.dt_tr == doctest::Approx(ev.dt_tr_formula).epsilon(0.1));
    CHECK(ev.dt_ref == doctest::Approx(ev.dt_ref_formula).epsilon(0.1));

    // late slopes: transmitted CM rides the filtered velocity, reflected -v0
    double ta = synth.t_max() * 0.85, tb = synth.t_max() * 0.95;
    double str = (synth.x_tr(tb) - synth.x_tr(ta)) / (tb - ta);
    double sref = (synth.x_ref(tb) - synth.x_ref(ta)) / (tb - ta);
    CHECK(str == doctest::Approx(synth.filtered_velocity()).epsilon(0.01));
    CHECK(-sref == doctest::Approx(kV0).epsilon(0.01));

    // moments and the dedicated CM paths tell one story
    PacketMoments ml = synth.moments(tb);
    CHECK(synth.x_tr(tb) == doctest::Approx(ml.Xtr).epsilon(1e-10));
    CHECK(synth.x_ref(tb) == doctest::Approx(ml.Xref).epsilon(1e-10));
    FieldsAtTime fl = synth.synthesize_all(tb);
    CHECK(center_of_mass(fl, synth.grid(), Component::Total) ==
          doctest::Approx(ml.Xtot).epsilon(1e-10));
}
