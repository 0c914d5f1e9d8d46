#include "ocs/packet.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "ocs/errors.hpp"
#include "ocs/numerics.hpp"

namespace ocs {

namespace {

constexpr int kMaskTot = 1, kMaskTr = 2, kMaskRef = 4;
constexpr int kMaskAll = kMaskTot | kMaskTr | kMaskRef;

double sigma_at(double l0, double t, const PhysicalConstants& c) {
    double disp = c.hbar2_over_2m / c.hbar * t / (l0 * l0); // hbar t / (2 m l0^2)
    return l0 * std::hypot(1.0, disp);
}

// transmitted-amplitude factor on the unit scale slog = max log|a_out|
cplx scaled_a_tr(const StationarySolution& s, double slog) {
    double mag = std::exp(0.5 * s.log_T - slog);
    if (s.T > 1e-280 && std::abs(s.A_tr_in) > 0.0)
        return std::polar(mag, std::arg(s.A_tr_in));
    // deep under the barrier arg(A_tr) degrades; lambda keeps the phase
    return std::polar(mag, s.lambda - 0.5 * M_PI);
}

cplx scaled_a_out(const StationarySolution& s, double slog) {
    return std::polar(std::exp(0.5 * s.log_T - slog), s.J);
}

int even_intervals(double len, double htarget) {
    int n = (int)std::ceil(len / htarget);
    if (n < 2) n = 2;
    if (n % 2) ++n;
    return n;
}

struct SimpsonAcc {
    // plain composite Simpson of |v|^2 and x|v|^2 over one uniform segment
    static void norm_x(const cplx* v, const double* x, int n, double h,
                       double& N, double& X) {
        std::vector<double> f0(n + 1), f1(n + 1);
        for (int i = 0; i <= n; ++i) {
            f0[i] = std::norm(v[i]);
            f1[i] = x[i] * f0[i];
        }
        N += simpson(f0.data(), n, h);
        X += simpson(f1.data(), n, h);
    }
};

} // namespace

struct PacketSynthesizer::KTerm {
    double k = 0.0, omega = 0.0;
    cplx cinc, cAtr, cAref, cbout; // left-exterior branches (cAtr on the slog scale)
    cplx cout;                     // right exterior, slog scale
    cplx vL_tr, dL_tr, vR_tr, dR_tr, dL_ref; // one-sided values at x_c (tr scaled)
};

struct PacketSynthesizer::Work {
    std::vector<cplx> Sinc, SAtr, SAref, Sbout; // left exterior nodes
    std::vector<cplx> Sout;                     // right exterior nodes
    std::vector<cplx> tot_in, tr_in, ref_in;    // interior nodes
    cplx vL_tr, dL_tr, vR_tr, dR_tr, dL_ref, vL_ref;
};

PacketSynthesizer::~PacketSynthesizer() = default;
PacketSynthesizer::PacketSynthesizer(PacketSynthesizer&&) noexcept = default;

PacketSynthesizer::PacketSynthesizer(const SpectrumSpec& spectrum, const BarrierSpec& barrier,
                                     const PhysicalConstants& consts, const PacketOptions& opts)
    : spectrum_(spectrum), barrier_(barrier), consts_(consts), opts_(opts) {
    if (spectrum_.k0 <= 0.0 || spectrum_.l0 <= 0.0 || spectrum_.cutoff <= 0.0)
        throw ValidationError("spectrum needs k0, l0, cutoff > 0");
    if (spectrum_.k0 - spectrum_.cutoff / spectrum_.l0 <= 0.0)
        throw ValidationError("spectral window reaches k <= 0; raise k0*l0 or lower the cutoff");
    validate_barrier(barrier_);

    const double k0 = spectrum_.k0, l0 = spectrum_.l0;
    const double a = barrier_.left_edge(), b = barrier_.right_edge();
    const double xc = barrier_.midpoint(), width = barrier_.width();
    const double v0 = consts_.velocity(k0);

    // J'(k0), lambda'(k0) drive the stationary event-time formulas, the
    // incoming asymptote, and the auto-sized time window
    {
        double h0 = std::max(1e-3, 5e-3 * k0);
        double w = 3.0 * h0;
        double phase_scale = std::abs(a) + std::abs(b) + 2.0 * width + 10.0;
        int n = std::max(25, (int)std::ceil(2.0 * w / (0.5 / phase_scale)) + 1);
        PhaseTable table = phase_spectra(KGrid{k0 - w, k0 + w, n}, barrier_, consts_);
        J_prime_k0_ = ddk_J(table, k0).value;
        StationarySolution s0 = solve_any(k0, barrier_, consts_);
        lambda_prime_k0_ = (s0.has_lambda && s0.R > 0.0) ? ddk_lambda(table, k0).value : 0.0;
    }

    const double mhk = consts_.mass_over_hbar() / k0;
    double dt_tr_est = mhk * (J_prime_k0_ - lambda_prime_k0_ + std::abs(a) + opts_.L);
    double dt_ref_est = mhk * (J_prime_k0_ - lambda_prime_k0_ + 2.0 * std::abs(a));
    t_max_ = opts_.t_max > 0.0 ? opts_.t_max
                               : 1.15 * std::max(dt_tr_est, dt_ref_est) + 6.0 * l0 / v0;

    // transmission filter shifts the effective mean k; first-order estimate
    // from the local log-transmission slope sizes the right half of the box
    double dk_filter = 0.0;
    {
        double dk = std::min(0.02 * k0, 0.2 / l0);
        double lt0 = solve_any(k0, barrier_, consts_).log_T;
        double ltp = solve_any(k0 + dk, barrier_, consts_).log_T;
        double ltm = solve_any(k0 - dk, barrier_, consts_).log_T;
        double slope = (ltp - ltm) / (2.0 * dk);
        double curv = (ltp - 2.0 * lt0 + ltm) / (dk * dk);
        double denom = 4.0 * l0 * l0 - curv;
        if (denom > 2.0 * l0 * l0) dk_filter = slope / denom;
        dk_filter = std::clamp(dk_filter, 0.0, 0.5 * spectrum_.cutoff / l0);
    }
    v_filtered_ = consts_.velocity(k0 + dk_filter);

    double sig = sigma_at(l0, t_max_, consts_);
    double x_lo = std::min(-8.0 * l0 - 0.1 * v0 * t_max_,
                           std::min(-8.0 * sig, 2.0 * a - v0 * t_max_ - 8.0 * sig));
    double x_hi = b + std::max(v0, v_filtered_) * t_max_ + 8.0 * std::max(sig, l0);
    if (opts_.x_lo != 0.0 || opts_.x_hi != 0.0) {
        x_lo = opts_.x_lo;
        x_hi = opts_.x_hi;
    }
    if (!(x_lo < a - 2.0 * l0) || !(x_hi > b + 2.0 * l0))
        throw ValidationError("spatial box must extend past the barrier by the packet width");
    if (opts_.x_lo != 0.0 || opts_.x_hi != 0.0) {
        // fail fast if the requested box already clips the initial Gaussian
        double span = x_hi - x_lo;
        double rho_lo = std::exp(-x_lo * x_lo / (2.0 * l0 * l0));
        double rho_hi = std::exp(-x_hi * x_hi / (2.0 * l0 * l0));
        double edge = std::max(rho_lo, rho_hi) / (l0 * std::sqrt(2.0 * M_PI)) * span;
        if (edge > opts_.edge_tol)
            throw NormLeak("initial boundary density " + std::to_string(edge) +
                           " exceeds edge_tol in the requested box");
    }

    // spectral panels: composite 16-point Gauss-Legendre, sized from the
    // fastest phase k x - omega t across the box at t_max
    const double klo = k0 - spectrum_.cutoff / l0, khi = k0 + spectrum_.cutoff / l0;
    {
        double vmax = consts_.velocity(khi);
        double phase_span = std::max(std::abs(x_lo), std::abs(x_hi)) + vmax * t_max_ +
                            2.0 * width + 50.0;
        double oscs = (khi - klo) * phase_span / (2.0 * M_PI);
        double nodes = std::max(64.0, opts_.nodes_per_osc * oscs);
        int panels = (int)std::ceil(nodes / 16.0);
        if (16 * panels > opts_.max_k_nodes)
            throw UnderResolvedPhase("k sampling for this box/time needs " +
                                     std::to_string(16 * panels) + " nodes, cap " +
                                     std::to_string(opts_.max_k_nodes));
        terms_.resize(16 * panels);
        double pw = (khi - klo) / panels;
        int idx = 0;
        for (int p = 0; p < panels; ++p) {
            double cen = klo + (p + 0.5) * pw, half = 0.5 * pw;
            for (int g = 0; g < 8; ++g)
                for (int sgn : {-1, 1}) {
                    terms_[idx].k = cen + sgn * half * kGL16Nodes[g];
                    terms_[idx].omega = half * kGL16Weights[g]; // weight parked here briefly
                    ++idx;
                }
        }
        std::sort(terms_.begin(), terms_.end(),
                  [](const KTerm& l, const KTerm& r) { return l.k < r.k; });
        n_k_ = 16 * panels;
    }

    // spatial grid: exterior step h_ext, interior step resolving kappa(k0)
    {
        StationarySolution s0 = solve_any(k0, barrier_, consts_);
        double h_int = std::min(opts_.h_ext, 0.05 / std::max(s0.kappa, 1e-6));
        double bounds[5] = {x_lo, a, xc, b, x_hi};
        double steps[4] = {opts_.h_ext, h_int, h_int, opts_.h_ext};
        int pos = 0;
        for (int s = 0; s < 4; ++s) {
            PacketGrid::Segment seg;
            seg.region = s;
            seg.n = even_intervals(bounds[s + 1] - bounds[s], steps[s]);
            seg.h = (bounds[s + 1] - bounds[s]) / seg.n;
            seg.i0 = pos;
            if (s == 0)
                for (int i = 0; i <= seg.n; ++i)
                    grid_.x.push_back(bounds[s] + i * seg.h);
            else
                for (int i = 1; i <= seg.n; ++i)
                    grid_.x.push_back(bounds[s] + i * seg.h);
            grid_.segs.push_back(seg);
            pos += seg.n;
        }
        // pin shared boundary nodes exactly
        grid_.x[grid_.segs[1].i0] = a;
        grid_.x[grid_.segs[2].i0] = xc;
        grid_.x[grid_.segs[3].i0] = b;
        grid_.x.back() = x_hi;
        n_left_ = grid_.segs[0].n + 1;
    }
    const int i_a = grid_.segs[1].i0;
    const int i_b = grid_.segs[3].i0;
    n_interior_ = i_b - i_a + 1;

    // per-k stationary solves, branch coefficients, interior static fields
    double slog = -1e300;
    std::vector<StationarySolution> sols(terms_.size());
    for (size_t j = 0; j < terms_.size(); ++j) {
        sols[j] = solve_any(terms_[j].k, barrier_, consts_);
        slog = std::max(slog, 0.5 * sols[j].log_T);
    }
    slog_ = slog;
    K_ = std::exp(slog_);
    if (!(K_ > 0.0))
        throw NumericError("transmitted amplitude underflows the double range everywhere");

    tot_static_.assign(terms_.size() * n_interior_, cplx(0.0));
    tr_static_.assign(terms_.size() * n_interior_, cplx(0.0));
    ref_static_.assign(terms_.size() * n_interior_, cplx(0.0));

    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);
    const double anorm = std::pow(2.0 * l0 * l0 / M_PI, 0.25);
    spectral_norm_ = 0.0;
    Tbar_ = Rbar_ = ortho_im_k_ = 0.0;
    double sum_wT = 0.0, sum_wTk = 0.0;

    for (size_t j = 0; j < terms_.size(); ++j) {
        KTerm& T = terms_[j];
        const StationarySolution& s = sols[j];
        double w = T.omega; // the parked quadrature weight
        double A = anorm * std::exp(-l0 * l0 * (T.k - k0) * (T.k - k0));
        T.omega = s.E / consts_.hbar;
        double c = w * A * inv_sqrt2pi;

        spectral_norm_ += w * A * A;
        Tbar_ += w * A * A * s.T;
        Rbar_ += w * A * A * s.R;
        ortho_im_k_ += w * A * A * std::imag(std::conj(s.A_tr_in) * s.A_ref_in);
        double Ts = std::exp(s.log_T - 2.0 * slog_);
        sum_wT += w * A * A * Ts;
        sum_wTk += w * A * A * Ts * T.k;

        cplx atr_s = scaled_a_tr(s, slog_);
        cplx aout_s = scaled_a_out(s, slog_);
        T.cinc = c;
        T.cAtr = c * atr_s;
        T.cAref = c * s.A_ref_in;
        T.cbout = c * s.b_out * std::polar(1.0, 2.0 * T.k * a);
        T.cout = c * aout_s * std::polar(1.0, -T.k * width);

        BasisPair basis = make_basis(s);
        SubprocessField rf = build_subprocess(s, basis, Component::Reflection);
        bool scaled_route = s.analytic_rect && s.regime == Regime::UnderBarrier;
        cplx lam_p, lam_m, gam_p, gam_m;
        SubprocessField trf;
        if (scaled_route) {
            cplx eika = std::polar(1.0, T.k * a);
            double kap = s.kappa;
            lam_p = atr_s * eika * cplx(kap, T.k) / (2.0 * kap);
            lam_m = atr_s * eika * cplx(kap, -T.k) / (2.0 * kap);
            gam_p = aout_s * eika * cplx(kap, T.k) / (2.0 * kap);
            gam_m = aout_s * eika * cplx(kap, -T.k) / (2.0 * kap);
        } else {
            trf = build_subprocess(s, basis, Component::Transmission);
        }
        auto tr_scaled = [&](double x, Side side) {
            if (scaled_route) {
                FieldValue v;
                if (x < xc || (x == xc && side == Side::Left)) {
                    double ep = std::exp(s.kappa * (x - a)), em = 1.0 / ep;
                    v.psi = lam_p * ep + lam_m * em;
                    v.dpsi = s.kappa * (lam_p * ep - lam_m * em);
                } else {
                    double ep = std::exp(s.kappa * (x - b)), em = 1.0 / ep;
                    v.psi = gam_p * ep + gam_m * em;
                    v.dpsi = s.kappa * (gam_p * ep - gam_m * em);
                }
                return v;
            }
            FieldValue v = trf.eval(x, side);
            v.psi /= K_;
            v.dpsi /= K_;
            return v;
        };

        for (int i = 0; i < n_interior_; ++i) {
            double x = grid_.x[i_a + i];
            FieldValue vr = rf.eval(x);
            ref_static_[j * n_interior_ + i] = vr.psi * c;
            FieldValue vt = tr_scaled(x, Side::Right);
            tr_static_[j * n_interior_ + i] = vt.psi * c;
            // total assembled from the same pieces, in true scale; beyond the
            // representable range of K_ * tr it degrades honestly
            tot_static_[j * n_interior_ + i] = vt.psi * (c * K_) + vr.psi * c;
        }
        FieldValue tl = tr_scaled(xc, Side::Left);
        FieldValue tr = tr_scaled(xc, Side::Right);
        T.vL_tr = tl.psi * c;
        T.dL_tr = tl.dpsi * c;
        T.vR_tr = tr.psi * c;
        T.dR_tr = tr.dpsi * c;
        T.dL_ref = rf.eval(xc, Side::Left).dpsi * c;
    }

    if (std::abs(spectral_norm_ - 1.0) > 1e-6)
        throw NumericError("truncated spectral norm off unity: " + std::to_string(spectral_norm_));
    if (sum_wT > 0.0) v_filtered_ = consts_.velocity(sum_wTk / sum_wT);

    phase2k0_.resize(n_left_);
    for (int i = 0; i < n_left_; ++i)
        phase2k0_[i] = std::polar(1.0, 2.0 * k0 * grid_.x[i]);
}

void PacketSynthesizer::accumulate(double t, int mask, Work& w) const {
    const int i_b = grid_.segs[3].i0;
    const int n_right = (int)grid_.x.size() - i_b;
    const bool want_right = mask & (kMaskTot | kMaskTr);
    const bool want_bout = mask & (kMaskTot | kMaskRef);

    if (mask & kMaskTot) w.Sinc.assign(n_left_, cplx(0.0));
    if (mask & kMaskTr) w.SAtr.assign(n_left_, cplx(0.0));
    if (mask & kMaskRef) w.SAref.assign(n_left_, cplx(0.0));
    if (want_bout) w.Sbout.assign(n_left_, cplx(0.0));
    if (want_right) w.Sout.assign(n_right, cplx(0.0));
    if (mask & kMaskTot) w.tot_in.assign(n_interior_, cplx(0.0));
    if (mask & kMaskTr) w.tr_in.assign(n_interior_, cplx(0.0));
    if (mask & kMaskRef) w.ref_in.assign(n_interior_, cplx(0.0));
    w.vL_tr = w.dL_tr = w.vR_tr = w.dR_tr = w.dL_ref = w.vL_ref = 0.0;

    const double h0 = grid_.segs[0].h, h3 = grid_.segs[3].h;
    const double xl0 = grid_.x[0], xr0 = grid_.x[i_b];

    for (size_t j = 0; j < terms_.size(); ++j) {
        const KTerm& T = terms_[j];
        const cplx tp = std::polar(1.0, -T.omega * t);
        const cplx ci = T.cinc * tp, ca = T.cAtr * tp, cr = T.cAref * tp,
                   cb = T.cbout * tp, co = T.cout * tp;

        cplx r = std::polar(1.0, T.k * xl0), l = std::conj(r);
        const cplx mr = std::polar(1.0, T.k * h0), ml = std::conj(mr);
        for (int i = 0; i < n_left_; ++i) {
            if ((i & 511) == 511) {
                r = std::polar(1.0, T.k * (xl0 + i * h0));
                l = std::conj(r);
            }
            if (mask & kMaskTot) w.Sinc[i] += ci * r;
            if (mask & kMaskTr) w.SAtr[i] += ca * r;
            if (mask & kMaskRef) w.SAref[i] += cr * r;
            if (want_bout) w.Sbout[i] += cb * l;
            r *= mr;
            l *= ml;
        }
        if (want_right) {
            cplx rr = std::polar(1.0, T.k * xr0);
            const cplx mrr = std::polar(1.0, T.k * h3);
            for (int i = 0; i < n_right; ++i) {
                if ((i & 511) == 511) rr = std::polar(1.0, T.k * (xr0 + i * h3));
                w.Sout[i] += co * rr;
                rr *= mrr;
            }
        }
        const cplx* ts = tot_static_.data() + j * n_interior_;
        const cplx* rs = ref_static_.data() + j * n_interior_;
        const cplx* trs = tr_static_.data() + j * n_interior_;
        for (int i = 0; i < n_interior_; ++i) {
            if (mask & kMaskTot) w.tot_in[i] += ts[i] * tp;
            if (mask & kMaskTr) w.tr_in[i] += trs[i] * tp;
            if (mask & kMaskRef) w.ref_in[i] += rs[i] * tp;
        }
        if (mask == kMaskAll) {
            w.vL_tr += T.vL_tr * tp;
            w.dL_tr += T.dL_tr * tp;
            w.vR_tr += T.vR_tr * tp;
            w.dR_tr += T.dR_tr * tp;
            w.dL_ref += T.dL_ref * tp;
        }
    }
}

namespace {

// norm and first moment of |R(x) e^{ik0 x} + L(x) e^{-ik0 x}|^2 on a uniform
// run: smooth squares by Simpson, the 2k0 cross term by the Filon rule
void directional_norm_x(const std::vector<cplx>& R, const std::vector<cplx>* L,
                        const std::vector<cplx>& p2conj, const double* x, int n, double h,
                        double twok0, double& N, double& X) {
    std::vector<double> f0(n + 1), f1(n + 1);
    for (int i = 0; i <= n; ++i) {
        double d = std::norm(R[i]) + (L ? std::norm((*L)[i]) : 0.0);
        f0[i] = d;
        f1[i] = x[i] * d;
    }
    N += simpson(f0.data(), n, h);
    X += simpson(f1.data(), n, h);
    if (L) {
        std::vector<cplx> g(n + 1), gx(n + 1);
        for (int i = 0; i <= n; ++i) {
            g[i] = std::conj((*L)[i]) * R[i] * p2conj[i];
            gx[i] = x[i] * g[i];
        }
        N += 2.0 * std::real(filon_integral(g.data(), n, x[0], h, twok0));
        X += 2.0 * std::real(filon_integral(gx.data(), n, x[0], h, twok0));
    }
}

} // namespace

PacketMoments PacketSynthesizer::reduce(const Work& w, double t) const {
    PacketMoments m;
    m.t = t;
    const int i_a = grid_.segs[1].i0, i_b = grid_.segs[3].i0;
    const double* x = grid_.x.data();
    const double twok0 = 2.0 * spectrum_.k0;
    const int n0 = grid_.segs[0].n;
    const double h0 = grid_.segs[0].h, h3 = grid_.segs[3].h;
    const double K2 = K_ * K_;

    std::vector<cplx> p2conj(n_left_);
    for (int i = 0; i < n_left_; ++i) p2conj[i] = std::conj(phase2k0_[i]);

    double Ntot = 0, Xtot = 0, Ntr_s = 0, Xtr_s = 0, Nref = 0, Xref = 0;
    directional_norm_x(w.Sinc, &w.Sbout, p2conj, x, n0, h0, twok0, Ntot, Xtot);
    directional_norm_x(w.SAtr, nullptr, p2conj, x, n0, h0, twok0, Ntr_s, Xtr_s);
    directional_norm_x(w.SAref, &w.Sbout, p2conj, x, n0, h0, twok0, Nref, Xref);

    for (int seg = 1; seg <= 2; ++seg) {
        const auto& sg = grid_.segs[seg];
        int off = sg.i0 - i_a;
        SimpsonAcc::norm_x(w.tot_in.data() + off, x + sg.i0, sg.n, sg.h, Ntot, Xtot);
        SimpsonAcc::norm_x(w.tr_in.data() + off, x + sg.i0, sg.n, sg.h, Ntr_s, Xtr_s);
        SimpsonAcc::norm_x(w.ref_in.data() + off, x + sg.i0, sg.n, sg.h, Nref, Xref);
    }
    {
        double Nr = 0, Xr = 0;
        SimpsonAcc::norm_x(w.Sout.data(), x + i_b, grid_.segs[3].n, h3, Nr, Xr);
        Ntot += K2 * Nr;
        Xtot += K2 * Xr;
        Ntr_s += Nr;
        Xtr_s += Xr;
    }
    m.Ntot = Ntot;
    m.Xtot = Ntot > 0.0 ? Xtot / Ntot : 0.0;
    m.Ntr = K2 * Ntr_s;
    m.Xtr = Ntr_s > 0.0 ? Xtr_s / Ntr_s : 0.0;
    m.Nref = Nref;
    m.Xref = Nref > 1e-280 ? Xref / Nref : 0.0;

    const double hbar_over_m = 2.0 * consts_.hbar2_over_2m / consts_.hbar;
    m.Itr_left = hbar_over_m * K2 * std::imag(std::conj(w.vL_tr) * w.dL_tr);
    m.Itr_right = hbar_over_m * K2 * std::imag(std::conj(w.vR_tr) * w.dR_tr);
    m.Iref_left = hbar_over_m * std::imag(std::conj(w.vL_ref) * w.dL_ref);
    m.Iref_right = 0.0;

    // <tr|ref>: smooth beat by Simpson, the counter-moving part by Filon
    {
        cplx acc = 0.0;
        std::vector<cplx> s1(n0 + 1), g(n0 + 1);
        for (int i = 0; i <= n0; ++i) {
            s1[i] = std::conj(w.SAtr[i]) * w.SAref[i];
            g[i] = std::conj(w.SAtr[i]) * w.Sbout[i] * phase2k0_[i];
        }
        acc += simpson(s1.data(), n0, h0);
        acc += filon_integral(g.data(), n0, x[0], h0, -twok0);
        for (int seg = 1; seg <= 2; ++seg) {
            const auto& sg = grid_.segs[seg];
            int off = sg.i0 - i_a;
            std::vector<cplx> si(sg.n + 1);
            for (int i = 0; i <= sg.n; ++i)
                si[i] = std::conj(w.tr_in[off + i]) * w.ref_in[off + i];
            acc += simpson(si.data(), sg.n, sg.h);
        }
        acc *= K_;
        m.ortho_re = acc.real();
        m.ortho_im = acc.imag();
    }

    // superposition residual, genuine because no branch is shared: the
    // incident sum stands in for tr+ref on the left, statics differ inside
    {
        double max_tot = 0.0, max_resid = 0.0;
        for (int i = 0; i < n_left_; ++i) {
            max_tot = std::max(max_tot, std::abs(w.Sinc[i] + w.Sbout[i]));
            max_resid = std::max(max_resid, std::abs(K_ * w.SAtr[i] + w.SAref[i] - w.Sinc[i]));
        }
        for (int i = 0; i < n_interior_; ++i) {
            max_tot = std::max(max_tot, std::abs(w.tot_in[i]));
            max_resid = std::max(max_resid,
                                 std::abs(K_ * w.tr_in[i] + w.ref_in[i] - w.tot_in[i]));
        }
        for (size_t i = 0; i < w.Sout.size(); ++i)
            max_tot = std::max(max_tot, K_ * std::abs(w.Sout[i]));
        m.superpos_resid = max_tot > 0.0 ? max_resid / max_tot : 0.0;
    }

    double span = x[grid_.x.size() - 1] - x[0];
    double rho_lo = std::norm(w.Sinc.front() + w.Sbout.front());
    double rho_hi = K2 * std::norm(w.Sout.back());
    m.edge_density = Ntot > 0.0 ? std::max(rho_lo, rho_hi) * span / Ntot : 0.0;
    return m;
}

FieldsAtTime PacketSynthesizer::synthesize(double t, Component which) const {
    Work w;
    int mask = which == Component::Total ? kMaskTot
               : which == Component::Transmission ? kMaskTr : kMaskRef;
    accumulate(t, mask, w);
    FieldsAtTime f;
    f.t = t;
    const int i_a = grid_.segs[1].i0, i_b = grid_.segs[3].i0;
    const int n = (int)grid_.x.size();
    auto& out = which == Component::Total ? f.tot
                : which == Component::Transmission ? f.tr : f.ref;
    out.resize(n);
    for (int i = 0; i < n; ++i) {
        if (i < i_a) {
            if (which == Component::Total) out[i] = w.Sinc[i] + w.Sbout[i];
            else if (which == Component::Transmission) out[i] = K_ * w.SAtr[i];
            else out[i] = w.SAref[i] + w.Sbout[i];
        } else if (i <= i_b) {
            if (which == Component::Total) out[i] = w.tot_in[i - i_a];
            else if (which == Component::Transmission) out[i] = K_ * w.tr_in[i - i_a];
            else out[i] = w.ref_in[i - i_a];
        } else {
            if (which == Component::Reflection) out[i] = 0.0;
            else out[i] = K_ * w.Sout[i - i_b];
        }
    }
    return f;
}

FieldsAtTime PacketSynthesizer::synthesize_all(double t) const {
    FieldsAtTime f = synthesize(t, Component::Total);
    FieldsAtTime ftr = synthesize(t, Component::Transmission);
    FieldsAtTime fref = synthesize(t, Component::Reflection);
    f.tr = std::move(ftr.tr);
    f.ref = std::move(fref.ref);
    return f;
}

PacketMoments PacketSynthesizer::moments(double t) const {
    Work w;
    accumulate(t, kMaskAll, w);
    return reduce(w, t);
}

double PacketSynthesizer::x_tr(double t) const {
    Work w;
    accumulate(t, kMaskTr, w);
    const int i_a = grid_.segs[1].i0, i_b = grid_.segs[3].i0;
    const double* x = grid_.x.data();
    const int n0 = grid_.segs[0].n;
    std::vector<cplx> p2conj; // unused without a leftward branch
    double N = 0, X = 0;
    directional_norm_x(w.SAtr, nullptr, p2conj, x, n0, grid_.segs[0].h,
                       2.0 * spectrum_.k0, N, X);
    for (int seg = 1; seg <= 2; ++seg) {
        const auto& sg = grid_.segs[seg];
        SimpsonAcc::norm_x(w.tr_in.data() + sg.i0 - i_a, x + sg.i0, sg.n, sg.h, N, X);
    }
    SimpsonAcc::norm_x(w.Sout.data(), x + i_b, grid_.segs[3].n, grid_.segs[3].h, N, X);
    return N > 0.0 ? X / N : 0.0;
}

double PacketSynthesizer::x_ref(double t) const {
    Work w;
    accumulate(t, kMaskRef, w);
    const int i_a = grid_.segs[1].i0;
    const double* x = grid_.x.data();
    const int n0 = grid_.segs[0].n;
    std::vector<cplx> p2conj(n_left_);
    for (int i = 0; i < n_left_; ++i) p2conj[i] = std::conj(phase2k0_[i]);
    double N = 0, X = 0;
    directional_norm_x(w.SAref, &w.Sbout, p2conj, x, n0, grid_.segs[0].h,
                       2.0 * spectrum_.k0, N, X);
    for (int seg = 1; seg <= 2; ++seg) {
        const auto& sg = grid_.segs[seg];
        SimpsonAcc::norm_x(w.ref_in.data() + sg.i0 - i_a, x + sg.i0, sg.n, sg.h, N, X);
    }
    return N > 1e-280 ? X / N : 0.0;
}

std::vector<double> PacketSynthesizer::fine_window() const {
    const double a = barrier_.left_edge(), b = barrier_.right_edge();
    const double v0 = consts_.velocity(spectrum_.k0);
    double ta = std::max(0.0, a / v0), tb = b / v0;
    double t0 = opts_.fine_t0 >= 0.0
                    ? opts_.fine_t0
                    : std::max(0.0, (a - 5.0 * sigma_at(spectrum_.l0, ta, consts_)) / v0);
    double t1 = opts_.fine_t1 >= 0.0
                    ? opts_.fine_t1
                    : std::min(t_max_, (b + 5.0 * sigma_at(spectrum_.l0, tb, consts_)) / v0 + 20.0);
    return {t0, t1};
}

std::vector<double> build_time_samples(const PacketSynthesizer& synth) {
    const auto& opts = synth.options();
    double t_max = synth.t_max();
    double dtc = opts.dt_coarse > 0.0 ? opts.dt_coarse : t_max / 140.0;
    double transit = synth.spectrum().l0 / synth.constants().velocity(synth.spectrum().k0);
    double dtf = opts.dt_fine > 0.0 ? opts.dt_fine : transit / 20.0;

    std::vector<double> ts;
    int nc = (int)std::ceil(t_max / dtc);
    for (int i = 0; i <= nc; ++i) ts.push_back(std::min(t_max, i * dtc));
    auto win = synth.fine_window();
    if (win[1] > win[0]) {
        int nf = (int)std::ceil((win[1] - win[0]) / dtf);
        for (int i = 0; i <= nf; ++i) ts.push_back(std::min(win[1], win[0] + i * dtf));
    }
    std::sort(ts.begin(), ts.end());
    std::vector<double> out;
    for (double t : ts)
        if (out.empty() || t - out.back() > 1e-9) out.push_back(t);
    return out;
}

PacketSeries propagate_series(const PacketSynthesizer& synth, const std::vector<double>& times,
                              int workers) {
    PacketSeries series;
    series.spectrum = synth.spectrum();
    series.barrier = synth.barrier();
    series.consts = synth.constants();
    series.L = synth.options().L;
    series.samples.resize(times.size());
    if (workers <= 1) {
        for (size_t i = 0; i < times.size(); ++i) series.samples[i] = synth.moments(times[i]);
        return series;
    }
    std::atomic<size_t> next(0);
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= times.size()) return;
            series.samples[i] = synth.moments(times[i]);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return series;
}

AuditReport norm_current_audit(const PacketSeries& series, const PacketSynthesizer& synth) {
    AuditReport rep;
    const auto& s = series.samples;
    if (s.empty()) return rep;
    rep.ortho_re_earliest = s.front().ortho_re;
    rep.ortho_im_earliest = s.front().ortho_im;
    rep.ortho_im_expected = synth.ortho_im_expected();
    double nref0 = s.front().Nref;
    for (const auto& m : s) {
        rep.max_norm_err = std::max(rep.max_norm_err, std::abs(m.Ntot - 1.0));
        rep.max_nref_dev = std::max(rep.max_nref_dev, std::abs(m.Nref - nref0));
        rep.max_iref = std::max(rep.max_iref, std::abs(m.Iref_left));
        rep.max_superpos_resid = std::max(rep.max_superpos_resid, m.superpos_resid);
        rep.max_edge_density = std::max(rep.max_edge_density, m.edge_density);
        rep.max_jump = std::max(rep.max_jump, std::abs(m.Itr_right - m.Itr_left));
    }
    double late = s.back().Ntr;
    rep.ntr_early_late_gap = late > 0.0 ? std::abs(s.front().Ntr - late) / late : 0.0;

    // five-point dN_tr/dt on interior points of uniform runs
    double worst = 0.0;
    for (size_t i = 2; i + 2 < s.size(); ++i) {
        double h = s[i + 1].t - s[i].t;
        bool uniform = true;
        for (int o = -2; o < 2; ++o)
            if (std::abs((s[i + o + 1].t - s[i + o].t) - h) > 1e-9 * h) uniform = false;
        if (!uniform || h <= 0.0) continue;
        double fd = (-s[i + 2].Ntr + 8.0 * s[i + 1].Ntr - 8.0 * s[i - 1].Ntr + s[i - 2].Ntr) /
                    (12.0 * h);
        double jump = s[i].Itr_right - s[i].Itr_left;
        worst = std::max(worst, std::abs(fd - jump));
    }
    // normalize by the larger of the observed jump scale and N_tr per series
    // duration; without the floor a free run (jump identically zero up to
    // quadrature noise) would divide noise by noise
    double span = s.back().t - s.front().t;
    double floor_scale = span > 0.0 ? s.back().Ntr / span : 0.0;
    double denom = std::max(rep.max_jump, floor_scale);
    rep.max_current_residual = denom > 0.0 ? worst / denom : 0.0;
    return rep;
}

EventTimes group_event_times(const PacketSynthesizer& synth, const PacketSeries& series,
                             double L) {
    EventTimes ev;
    ev.L = L;
    const double k0 = synth.spectrum().k0;
    const double mhk = synth.constants().mass_over_hbar() / k0;
    const double a = synth.barrier().left_edge(), b = synth.barrier().right_edge();
    ev.dt_tr_formula = mhk * (synth.J_prime_k0() - synth.lambda_prime_k0() + std::abs(a) + L);
    ev.dt_ref_formula = mhk * (synth.J_prime_k0() - synth.lambda_prime_k0() + 2.0 * std::abs(a));

    const auto& s = series.samples;
    if (s.size() < 2) throw NoBracket("series too short for event extraction");

    auto refine = [&](double lo, double hi, auto&& f) {
        BisectResult r = bisect(f, lo, hi, 1e-3);
        if (!r.found) throw NoBracket("event bracket lost during refinement");
        return r.root;
    };

    // transmission CM crosses 0 once early and b+L once late
    {
        auto f0 = [&](double t) { return synth.x_tr(t); };
        // a packet released on the mark starts within the filter shift of 0;
        // for opaque barriers lambda' underflows and the shift can be either sign
        const double atol = 1e-6;
        bool found = false;
        if (s[0].Xtr >= -atol) {
            ev.t_depart_tr = s[0].t;
            found = true;
        } else {
            for (size_t i = 0; i + 1 < s.size(); ++i) {
                double f1 = s[i].Xtr, f2 = s[i + 1].Xtr;
                if (f1 < 0.0 && f2 >= 0.0) {
                    ev.t_depart_tr = refine(s[i].t, s[i + 1].t, f0);
                    found = true;
                    break;
                }
            }
        }
        if (!found) throw NoBracket("X_tr never crosses 0 in the window");
        double target = b + L;
        auto fa = [&](double t) { return synth.x_tr(t) - target; };
        found = false;
        for (size_t i = 0; i + 1 < s.size(); ++i) {
            if (s[i].Xtr - target < 0.0 && s[i + 1].Xtr - target >= 0.0) {
                ev.t_arrive_tr = refine(s[i].t, s[i + 1].t, fa);
                found = true;
                break;
            }
        }
        if (!found) throw NoBracket("X_tr never reaches b+L; extend t_max");
        ev.dt_tr = ev.t_arrive_tr - ev.t_depart_tr;
    }

    // reflection CM: smallest and largest roots of X_ref = 0
    {
        auto f = [&](double t) { return synth.x_ref(t); };
        std::vector<std::pair<double, double>> brackets;
        for (size_t i = 0; i + 1 < s.size(); ++i)
            if ((s[i].Xref < 0.0 && s[i + 1].Xref >= 0.0) ||
                (s[i].Xref > 0.0 && s[i + 1].Xref <= 0.0))
                brackets.push_back({s[i].t, s[i + 1].t});
        if (brackets.empty()) {
            if (synth.expected_R() < 1e-10) {
                ev.t_depart_ref = ev.t_arrive_ref = ev.dt_ref =
                    std::numeric_limits<double>::quiet_NaN();
                return ev;
            }
            throw NoBracket("X_ref never returns to 0; extend t_max");
        }
        ev.t_depart_ref = refine(brackets.front().first, brackets.front().second, f);
        ev.t_arrive_ref = refine(brackets.back().first, brackets.back().second, f);
        ev.dt_ref = ev.t_arrive_ref - ev.t_depart_ref;
    }
    return ev;
}

double center_of_mass(const FieldsAtTime& fields, const PacketGrid& grid, Component which) {
    const std::vector<cplx>& v = which == Component::Total ? fields.tot
                                 : which == Component::Transmission ? fields.tr : fields.ref;
    if (v.size() != grid.x.size())
        throw ValidationError("center_of_mass: component was not synthesized on this grid");
    double N = 0.0, X = 0.0;
    for (const auto& sg : grid.segs)
        SimpsonAcc::norm_x(v.data() + sg.i0, grid.x.data() + sg.i0, sg.n, sg.h, N, X);
    if (N <= 0.0) return 0.0;
    double span = grid.x.back() - grid.x.front();
    double edge = std::max(std::norm(v.front()), std::norm(v.back())) * span / N;
    if (edge > 1e-8)
        throw NormLeak("boundary density " + std::to_string(edge) + " of the component norm");
    return X / N;
}

} // namespace ocs
