#pragma once

#include <vector>

#include "ocs/stationary.hpp"
#include "ocs/subprocess.hpp"

namespace ocs {

// Gaussian spectral amplitude A(k) = (2 l0^2/pi)^{1/4} exp(-l0^2 (k-k0)^2),
// truncated at k0 +- cutoff/l0.
struct SpectrumSpec {
    double k0 = 0.0;     // nm^-1
    double l0 = 0.0;     // nm
    double cutoff = 6.0; // half-width in units of 1/l0
};

struct PacketOptions {
    double t_max = 0.0;        // fs, 0 = auto from the event-time estimates
    double L = 150.0;          // nm, arrival offset used by event times
    double dt_coarse = 0.0;    // fs, 0 = auto
    double dt_fine = 0.0;      // fs, 0 = spec rule (l0 transit / 20)
    double fine_t0 = -1.0;     // fs, crossing window override
    double fine_t1 = -1.0;
    double nodes_per_osc = 12.0;
    int max_k_nodes = 40000;
    double h_ext = 0.12;       // nm, exterior grid step target
    double x_lo = 0.0, x_hi = 0.0; // nm, 0 = auto-sized domain
    double edge_tol = 1e-9;    // NormLeak threshold on relative boundary density
};

// Piecewise-uniform grid with segment boundaries pinned to a, x_c, b.
struct PacketGrid {
    struct Segment {
        int i0 = 0;    // first node index
        int n = 0;     // intervals (even), nodes i0..i0+n
        double h = 0.0;
        int region = 0; // 0 left exterior, 1 interior left, 2 interior right, 3 right exterior
    };
    std::vector<double> x;
    std::vector<Segment> segs;
};

struct FieldsAtTime {
    double t = 0.0;
    std::vector<cplx> tot, tr, ref; // per grid node
};

// Integral diagnostics of one time sample.
struct PacketMoments {
    double t = 0.0;
    double Ntot = 0.0, Ntr = 0.0, Nref = 0.0;
    double Xtot = 0.0, Xtr = 0.0, Xref = 0.0; // nm, CM normalized per component
    double Itr_left = 0.0, Itr_right = 0.0;   // current of psi_tr at x_c -/+ 0
    double Iref_left = 0.0, Iref_right = 0.0;
    double ortho_re = 0.0, ortho_im = 0.0;    // <psi_tr | psi_ref>
    double superpos_resid = 0.0;              // max |tr+ref-tot| / max |tot|
    double edge_density = 0.0;                // relative boundary density
};

class PacketSynthesizer {
public:
    PacketSynthesizer(const SpectrumSpec& spectrum, const BarrierSpec& barrier,
                      const PhysicalConstants& consts, const PacketOptions& opts = {});
    ~PacketSynthesizer();
    PacketSynthesizer(PacketSynthesizer&&) noexcept;

    const PacketGrid& grid() const { return grid_; }
    const SpectrumSpec& spectrum() const { return spectrum_; }
    const BarrierSpec& barrier() const { return barrier_; }
    const PhysicalConstants& constants() const { return consts_; }
    const PacketOptions& options() const { return opts_; }
    double t_max() const { return t_max_; }
    int k_nodes() const { return n_k_; }
    double spectral_norm() const { return spectral_norm_; }
    double expected_T() const { return Tbar_; }  // spectrum-averaged transmission
    double expected_R() const { return Rbar_; }
    double ortho_im_expected() const { return ortho_im_k_; }
    double lambda_prime_k0() const { return lambda_prime_k0_; }
    double J_prime_k0() const { return J_prime_k0_; }
    double filtered_velocity() const { return v_filtered_; } // nm/fs at the T-weighted mean k
    std::vector<double> fine_window() const; // {t0, t1} of the crossing stage

    FieldsAtTime synthesize(double t, Component which) const; // one component
    FieldsAtTime synthesize_all(double t) const;              // tot, tr, ref together
    PacketMoments moments(double t) const;

    double x_tr(double t) const;  // transmission CM only (event-root fast path)
    double x_ref(double t) const;

private:
    struct KTerm;
    struct Work;
    void accumulate(double t, int mask, Work& w) const;
    PacketMoments reduce(const Work& w, double t) const;

    SpectrumSpec spectrum_;
    BarrierSpec barrier_;
    PhysicalConstants consts_;
    PacketOptions opts_;
    PacketGrid grid_;
    std::vector<KTerm> terms_;
    std::vector<cplx> phase2k0_;  // e^{2 i k0 x} on the left exterior
    std::vector<cplx> tot_static_, tr_static_, ref_static_; // per (term, interior node)
    double t_max_ = 0.0;
    double spectral_norm_ = 0.0;
    double Tbar_ = 0.0, Rbar_ = 0.0;
    double ortho_im_k_ = 0.0;
    double lambda_prime_k0_ = 0.0;
    double J_prime_k0_ = 0.0;
    double v_filtered_ = 0.0;
    double slog_ = 0.0, K_ = 1.0; // transmitted-amplitude log scale and its exp
    int n_k_ = 0;
    int n_left_ = 0;     // nodes in the left exterior segment
    int n_interior_ = 0; // nodes in [a, b]
};

struct PacketSeries {
    std::vector<PacketMoments> samples; // ordered by t
    SpectrumSpec spectrum;
    BarrierSpec barrier;
    PhysicalConstants consts;
    double L = 0.0;
};

std::vector<double> build_time_samples(const PacketSynthesizer& synth);

// Evaluates moments at the given times (worker threads over samples).
PacketSeries propagate_series(const PacketSynthesizer& synth,
                              const std::vector<double>& times, int workers = 1);

struct AuditReport {
    double max_norm_err = 0.0;         // max |Ntot - 1|
    double max_nref_dev = 0.0;         // max |Nref(t) - Nref(t0)|
    double ntr_early_late_gap = 0.0;   // relative to the late value
    double max_current_residual = 0.0; // max |dNtr/dt - current jump| / max |jump|
    double max_jump = 0.0;             // fs^-1 scale of the balance check
    double max_iref = 0.0;             // reflection current at x_c, expected 0
    double ortho_re_earliest = 0.0;
    double ortho_im_earliest = 0.0;
    double ortho_im_expected = 0.0;    // k-space quadrature of |A|^2 sqrt(TR)
    double max_superpos_resid = 0.0;
    double max_edge_density = 0.0;
};

AuditReport norm_current_audit(const PacketSeries& series, const PacketSynthesizer& synth);

struct EventTimes {
    double t_depart_tr = 0.0, t_arrive_tr = 0.0, dt_tr = 0.0;
    double t_depart_ref = 0.0, t_arrive_ref = 0.0, dt_ref = 0.0;
    double dt_tr_formula = 0.0;  // (m/hbar k0)(J' - lambda' + a + L)
    double dt_ref_formula = 0.0; // (m/hbar k0)(J' - lambda' + 2a)
    double L = 0.0;
};

EventTimes group_event_times(const PacketSynthesizer& synth, const PacketSeries& series, double L);

// CM of stored fields by plain per-segment Simpson (test/utility path; the
// series moments use the interference-aware integrator).
double center_of_mass(const FieldsAtTime& fields, const PacketGrid& grid, Component which);

} // namespace ocs
