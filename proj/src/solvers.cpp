#include "tla/solvers.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace tla {

namespace {

class Timer {
public:
    Timer() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

constexpr uint64_t kSliceSeedStride = 0x9E3779B97F4A7C15ull;

// rhs tensor e1 * z of height h.
Tensor3 e1_times(const Tube& z, Index h) {
    Tensor3 rhs(h, 1, z.tubes());
    for (Index k = 0; k < z.tubes(); ++k) rhs(0, 0, k) = z(0, 0, k);
    return rhs;
}

// Inverse of an f-diagonal tensor, tube by tube.
Tensor3 f_diagonal_inverse(const Tensor3& s) {
    Tensor3 out(s.cols(), s.cols(), s.tubes());
    for (Index j = 0; j < s.cols(); ++j) {
        Tube inv = tube_inverse(s.tube_at(j, j));
        for (Index k = 0; k < s.tubes(); ++k) out(j, j, k) = inv(0, 0, k);
    }
    return out;
}

double threshold(const DiscrepancyConfig& disc) { return disc.tau * disc.delta; }

// Penalized projected solve: per spectral slice minimize
// ||P y - d||^2 + mu^{-1} ||y||^2 via the augmented least squares system.
// Returns Y and the (unpenalized) projected residual norm.
std::pair<Tensor3, double> tikhonov_facewise(const Tensor3& p, const Tensor3& rhs, double mu) {
    const Index rows = p.rows(), cols = p.cols(), n = p.tubes();
    SpectralTensor ph = dft_mode3(p), dh = dft_mode3(rhs);
    SpectralTensor yh(cols, 1, n);
    const double penalty = 1.0 / std::sqrt(mu);
    double resid_sq = 0.0;
    for (Index k = 0; k < n; ++k) {
        Eigen::MatrixXcd aug = Eigen::MatrixXcd::Zero(rows + cols, cols);
        aug.topRows(rows) = ph.slice(k);
        aug.bottomRows(cols) = penalty * Eigen::MatrixXcd::Identity(cols, cols);
        Eigen::VectorXcd baug = Eigen::VectorXcd::Zero(rows + cols);
        baug.head(rows) = dh.slice(k).col(0);
        yh.slice(k) = aug.colPivHouseholderQr().solve(baug);
        resid_sq += (ph.slice(k) * yh.slice(k) - dh.slice(k)).squaredNorm();
    }
    return {idft_mode3_real(yh), std::sqrt(resid_sq / static_cast<double>(n))};
}

}  // namespace

double relative_error(const Tensor3& x, const Tensor3& x_true) {
    if (!x.same_shape(x_true))
        throw std::invalid_argument("relative_error: shape mismatch " + x.shape_str() + " vs " +
                                    x_true.shape_str());
    const double tn = fro_norm(x_true);
    if (tn == 0.0) throw std::invalid_argument("relative_error: zero truth");
    return fro_norm(x - x_true) / tn;
}

namespace {

// Shared skeleton for the factorization-based truncation methods: add one
// term V_j * s_j^{-1} * U_j^T * B at a time and stop at the smallest index
// whose true residual passes the discrepancy test.
SolveReport truncation_loop(const Tensor3& a, const Tensor3& b, const DiscrepancyConfig& disc,
                            const Tensor3& u, const Tensor3& fdiag, const Tensor3& v,
                            Index k_start, Index width, const std::string& tag) {
    SolveReport rep;
    rep.method_tag = tag;
    SpectralTensor a_spec = dft_mode3(a);
    const double thresh = threshold(disc);

    Tensor3 x(v.rows(), b.cols(), b.tubes());
    Tensor3 prev_x = x;
    double resid = fro_norm(b), prev_resid = resid;
    Index s = 0;
    for (; s < width; ++s) {
        Tube stube = fdiag.tube_at(s, s);
        Tube sinv;
        try {
            sinv = tube_inverse(stube);
        } catch (const std::exception& e) {
            rep.diagnostics = "tube " + std::to_string(s + 1) + " not invertible: " + e.what();
            break;
        }
        prev_x = x;
        prev_resid = resid;
        x += tprod(v.lateral(s), tprod(sinv, tprod(ttranspose(u.lateral(s)), b)));
        resid = fro_norm(b - tprod(a_spec, x));
        if (s + 1 >= k_start && resid <= thresh) {
            rep.success = true;
            if (disc.early_stop && s > 0) {
                rep.x = prev_x;
                rep.k = {s};
                rep.residual_norm = prev_resid;
            } else {
                rep.x = x;
                rep.k = {s + 1};
                rep.residual_norm = resid;
            }
            return rep;
        }
        if (disc.k_max > 0 && s + 1 >= disc.k_max) {
            ++s;
            break;
        }
    }
    rep.x = x;
    rep.k = {s};
    rep.residual_norm = resid;
    if (rep.diagnostics.empty())
        rep.diagnostics = "discrepancy test not satisfied up to k = " + std::to_string(s);
    return rep;
}

}  // namespace

SolveReport solve_ttsvd(const Tensor3& a, const Tensor3& b, const DiscrepancyConfig& disc) {
    Timer timer;
    const Index width = std::min(a.rows(), a.cols());
    TSvdFactors f = tsvd(a, width);
    SolveReport rep = truncation_loop(a, b, disc, f.U, f.S, f.V, 1, width, "T-tSVD");
    rep.wall_seconds = timer.seconds();
    return rep;
}

SolveReport solve_ttevd(const Tensor3& a, const Tensor3& b, const DiscrepancyConfig& disc) {
    Timer timer;
    TEvdFactors f = tevd(a, a.cols());
    SolveReport rep = truncation_loop(a, b, disc, f.W, f.D, f.W, 1, a.cols(), "T-tEVD");
    rep.wall_seconds = timer.seconds();
    return rep;
}

SolveReport solve_rtsvd(const Tensor3& a, const Tensor3& b, const DiscrepancyConfig& disc,
                        const RtsvdConfig& cfg) {
    Timer timer;
    RtsvdResult rr = rtsvd(a, cfg);
    if (rr.r == 0) {
        SolveReport rep;
        rep.method_tag = "RT-tSVD";
        rep.x = Tensor3(a.cols(), b.cols(), b.tubes());
        rep.k = {0};
        rep.residual_norm = fro_norm(b);
        rep.diagnostics = "range finder produced no terms (epsilon >= ||A||_F)";
        rep.wall_seconds = timer.seconds();
        return rep;
    }
    const Index k_start = std::max<Index>(1, rr.r - cfg.oversample);
    SolveReport rep = truncation_loop(a, b, disc, rr.factors.U, rr.factors.S, rr.factors.V,
                                      k_start, rr.factors.k, "RT-tSVD");
    if (!rep.success && rep.diagnostics.empty())
        rep.diagnostics = "epsilon too large for this noise level (k reached r)";
    rep.wall_seconds = timer.seconds();
    return rep;
}

namespace {

enum class GkbForm { direct, triplet };

SolveReport gkb_impl(const Tensor3& a, const LateralSlice& b, const DiscrepancyConfig& disc,
                     uint64_t seed, bool reorth, GkbForm form) {
    Timer timer;
    SolveReport rep;
    rep.method_tag = form == GkbForm::direct ? "tGKB" : "tGKB-triplet";
    GkbProcess proc(a, b, reorth, seed);
    const Index k_max = disc.k_max > 0 ? disc.k_max : std::min(a.rows(), a.cols());
    const double thresh = threshold(disc);

    Tensor3 y, prev_y;
    double proj = fro_norm(b), prev_proj = proj;
    while (true) {
        const bool stepped = proc.step();
        if (!stepped) {
            rep.diagnostics = "breakdown at tube " + proc.breakdown_tube() +
                              " before the discrepancy test was satisfied";
            break;
        }
        const Index k = proc.k();
        Tensor3 p = proc.P_bar();
        Tensor3 rhs = e1_times(proc.z1(), k + 1);
        prev_y = y;
        prev_proj = proj;
        y = facewise_solve(p, rhs).x;
        proj = fro_norm(tprod(p, y) - rhs);
        if (proj <= thresh) {
            rep.success = true;
            break;
        }
        if (k >= k_max) {
            rep.diagnostics = "discrepancy test not satisfied up to k = " + std::to_string(k);
            break;
        }
        if (proc.broke_down()) {
            rep.diagnostics = "breakdown at tube " + proc.breakdown_tube() +
                              " before the discrepancy test was satisfied";
            break;
        }
    }

    Index k_use = proc.k();
    Tensor3 y_use = y;
    double proj_use = proj;
    if (rep.success && disc.early_stop && k_use > 1 && prev_y.size() > 0) {
        k_use -= 1;
        y_use = prev_y;
        proj_use = prev_proj;
    }
    rep.k = {k_use};
    rep.projected_residual = proj_use;

    if (k_use == 0) {
        rep.x = Tensor3(a.cols(), 1, a.tubes());
        rep.residual_norm = fro_norm(b);
        rep.wall_seconds = timer.seconds();
        return rep;
    }

    Tensor3 w = proc.W().lateral_block(0, k_use);
    if (form == GkbForm::direct) {
        rep.x = tprod(w, y_use);
    } else {
        // Triplet route through the tSVD of P_bar.
        Tensor3 q = proc.Q().lateral_block(0, k_use + 1);
        Tensor3 p(k_use + 1, k_use, a.tubes());
        {
            Tensor3 pfull = proc.P_bar();
            for (Index kk = 0; kk < a.tubes(); ++kk)
                p.slice(kk) = pfull.slice(kk).topLeftCorner(k_use + 1, k_use);
        }
        TSvdFactors inner = tsvd(p, k_use);
        Tensor3 left = tprod(q, inner.U);   // Q_{k+1} * U
        Tensor3 right = tprod(w, inner.V);  // W_k * V
        rep.x = tprod(right, tprod(f_diagonal_inverse(inner.S), tprod(ttranspose(left), b)));
    }
    rep.residual_norm = fro_norm(b - tprod(a, rep.x));
    rep.wall_seconds = timer.seconds();
    return rep;
}

enum class LanczosForm { direct, eig };

SolveReport lanczos_impl(const Tensor3& a, const LateralSlice& b, const DiscrepancyConfig& disc,
                         uint64_t seed, bool reorth, LanczosForm form) {
    Timer timer;
    SolveReport rep;
    rep.method_tag = form == LanczosForm::direct ? "t-Lanczos" : "t-Lanczos-eig";
    LanczosProcess proc(a, b, reorth, seed);
    const Index k_max = disc.k_max > 0 ? disc.k_max : a.cols();
    const double thresh = threshold(disc);

    Tensor3 y, prev_y;
    double proj = fro_norm(b), prev_proj = proj;
    while (true) {
        const bool stepped = proc.step();
        if (!stepped) {
            rep.diagnostics = "breakdown at tube " + std::string("z") +
                              " before the discrepancy test was satisfied";
            break;
        }
        const Index k = proc.k();
        Tensor3 tbar = proc.T_bar();
        Tensor3 rhs_bar = e1_times(proc.z0(), k + 1);
        prev_y = y;
        prev_proj = proj;
        if (form == LanczosForm::direct) {
            // Least-squares over the rectangular T_bar; the residual is
            // nonincreasing in k and equals the true residual for an
            // orthonormal basis.
            y = facewise_solve(tbar, rhs_bar).x;
        } else {
            // Galerkin solve through the square leading part T_k; the
            // eigenpair assembly below reproduces exactly this iterate. The
            // discrepancy test uses its T_bar residual, which again equals
            // the true residual of the iterate.
            y = facewise_solve(proc.T_square(), e1_times(proc.z0(), k)).x;
        }
        proj = fro_norm(tprod(tbar, y) - rhs_bar);
        if (proj <= thresh) {
            rep.success = true;
            break;
        }
        if (k >= k_max) {
            rep.diagnostics = "discrepancy test not satisfied up to k = " + std::to_string(k);
            break;
        }
        if (proc.broke_down()) {
            rep.diagnostics = "breakdown before the discrepancy test was satisfied";
            break;
        }
    }

    Index k_use = proc.k();
    Tensor3 y_use = y;
    double proj_use = proj;
    if (rep.success && disc.early_stop && k_use > 1 && prev_y.size() > 0) {
        k_use -= 1;
        y_use = prev_y;
        proj_use = prev_proj;
    }
    rep.k = {k_use};
    rep.projected_residual = proj_use;

    if (k_use == 0) {
        rep.x = Tensor3(a.cols(), 1, a.tubes());
        rep.residual_norm = fro_norm(b);
        rep.wall_seconds = timer.seconds();
        return rep;
    }

    Tensor3 qk = proc.Q(k_use);
    if (form == LanczosForm::direct) {
        rep.x = tprod(qk, y_use);
    } else {
        Tensor3 tsq(k_use, k_use, a.tubes());
        {
            Tensor3 tfull = proc.T_square();
            for (Index kk = 0; kk < a.tubes(); ++kk)
                tsq.slice(kk) = tfull.slice(kk).topLeftCorner(k_use, k_use);
        }
        TEvdFactors ev = tevd(tsq, k_use);
        Tensor3 ritz = tprod(qk, ev.W);  // Q_k * W
        rep.x = tprod(ritz, tprod(f_diagonal_inverse(ev.D), tprod(ttranspose(ritz), b)));
    }
    rep.residual_norm = fro_norm(b - tprod(a, rep.x));
    rep.wall_seconds = timer.seconds();
    return rep;
}

}  // namespace

SolveReport solve_tgkb(const Tensor3& a, const LateralSlice& b, const DiscrepancyConfig& disc,
                       uint64_t seed, bool reorth) {
    return gkb_impl(a, b, disc, seed, reorth, GkbForm::direct);
}

SolveReport solve_tgkb_triplet_form(const Tensor3& a, const LateralSlice& b,
                                    const DiscrepancyConfig& disc, uint64_t seed, bool reorth) {
    return gkb_impl(a, b, disc, seed, reorth, GkbForm::triplet);
}

SolveReport solve_tlanczos(const Tensor3& a, const LateralSlice& b,
                           const DiscrepancyConfig& disc, uint64_t seed, bool reorth) {
    return lanczos_impl(a, b, disc, seed, reorth, LanczosForm::direct);
}

SolveReport solve_tlanczos_eig_form(const Tensor3& a, const LateralSlice& b,
                                    const DiscrepancyConfig& disc, uint64_t seed, bool reorth) {
    return lanczos_impl(a, b, disc, seed, reorth, LanczosForm::eig);
}

SolveReport solve_tikhonov_projected(const Tensor3& a, const LateralSlice& b,
                                     const DiscrepancyConfig& disc, const TikhonovConfig& tik,
                                     KrylovKind process, uint64_t seed, bool reorth) {
    Timer timer;
    if (!(tik.mu_lo > 0.0 && tik.mu_lo < tik.mu_hi))
        throw std::invalid_argument("solve_tikhonov_projected: need 0 < mu_lo < mu_hi");
    SolveReport rep;
    rep.method_tag = process == KrylovKind::tgkb ? "tGKT" : "t-LanczosTik";
    const double thresh = threshold(disc);
    const Index k_max = disc.k_max > 0 ? disc.k_max : std::min(a.rows(), a.cols());

    std::optional<GkbProcess> gkb;
    std::optional<LanczosProcess> lan;
    if (process == KrylovKind::tgkb)
        gkb.emplace(a, b, reorth, seed);
    else
        lan.emplace(a, b, reorth, seed);

    auto step = [&] { return gkb ? gkb->step() : lan->step(); };
    auto projected = [&](Tensor3* p, Tensor3* rhs) {
        if (gkb) {
            *p = gkb->P_bar();
            *rhs = e1_times(gkb->z1(), gkb->k() + 1);
        } else {
            *p = lan->T_bar();
            *rhs = e1_times(lan->z0(), lan->k() + 1);
        }
    };
    auto steps_done = [&] { return gkb ? gkb->k() : lan->k(); };

    while (true) {
        if (!step()) {
            rep.diagnostics = "breakdown before the discrepancy test was satisfied";
            break;
        }
        Tensor3 p, rhs;
        projected(&p, &rhs);

        // Residual shrinks as mu grows (lighter regularization), so the
        // lightest penalty decides whether this k can satisfy the test.
        auto [y_hi, r_hi] = tikhonov_facewise(p, rhs, tik.mu_hi);
        if (r_hi > thresh) {
            rep.projected_residual = r_hi;
            if (steps_done() >= k_max) {
                rep.diagnostics =
                    "discrepancy test not satisfied up to k = " + std::to_string(steps_done());
                break;
            }
            continue;
        }

        auto [y_lo, r_lo] = tikhonov_facewise(p, rhs, tik.mu_lo);
        double mu = tik.mu_lo;
        Tensor3 y = y_lo;
        double resid = r_lo;
        if (r_lo > thresh) {
            // Bisect (geometrically) for the most regularized mu that still
            // meets the discrepancy bound.
            double lo = tik.mu_lo, hi = tik.mu_hi;
            Tensor3 y_sat = y_hi;
            double r_sat = r_hi;
            for (int it = 0; it < tik.max_bisect && (hi - lo) > tik.bisect_tol * hi; ++it) {
                const double mid = std::sqrt(lo * hi);
                auto [y_mid, r_mid] = tikhonov_facewise(p, rhs, mid);
                if (r_mid <= thresh) {
                    hi = mid;
                    y_sat = y_mid;
                    r_sat = r_mid;
                } else {
                    lo = mid;
                }
            }
            mu = hi;
            y = y_sat;
            resid = r_sat;
        }

        rep.success = true;
        rep.mu = {mu};
        rep.projected_residual = resid;
        const Index k = steps_done();
        rep.k = {k};
        Tensor3 basis = gkb ? gkb->W() : lan->Q(k);
        rep.x = tprod(basis, y);
        break;
    }

    if (!rep.success) {
        rep.k = {steps_done()};
        rep.x = Tensor3(a.cols(), 1, a.tubes());
    }
    rep.residual_norm = fro_norm(b - tprod(a, rep.x));
    rep.wall_seconds = timer.seconds();
    return rep;
}

SolveReport solve_p(const Tensor3& a, const Tensor3& b, const std::vector<double>& deltas,
                    SliceMethod method, double tau, Index k_max, uint64_t seed,
                    const TikhonovConfig& tik) {
    Timer timer;
    const Index p = b.cols();
    if (static_cast<Index>(deltas.size()) != p)
        throw std::invalid_argument("solve_p: need one delta per lateral slice");
    SolveReport rep;
    rep.x = Tensor3(a.cols(), p, b.tubes());
    std::vector<Index> failed;
    for (Index j = 0; j < p; ++j) {
        DiscrepancyConfig disc{deltas[j], tau, k_max};
        const uint64_t seed_j = seed + static_cast<uint64_t>(j) * kSliceSeedStride;
        const Tensor3 bj = b.lateral(j);
        SolveReport rj;
        switch (method) {
            case SliceMethod::tgkb: rj = solve_tgkb(a, bj, disc, seed_j); break;
            case SliceMethod::tgkb_triplet: rj = solve_tgkb_triplet_form(a, bj, disc, seed_j); break;
            case SliceMethod::tlanczos: rj = solve_tlanczos(a, bj, disc, seed_j); break;
            case SliceMethod::tlanczos_eig: rj = solve_tlanczos_eig_form(a, bj, disc, seed_j); break;
            case SliceMethod::tgkt:
                rj = solve_tikhonov_projected(a, bj, disc, tik, KrylovKind::tgkb, seed_j);
                break;
            case SliceMethod::tlanczos_tik:
                rj = solve_tikhonov_projected(a, bj, disc, tik, KrylovKind::tlanczos, seed_j);
                break;
        }
        if (rep.method_tag.empty()) rep.method_tag = rj.method_tag + "_p";
        rep.x.set_lateral(j, rj.x);
        rep.k.push_back(rj.k_scalar());
        if (!rj.mu.empty()) rep.mu.push_back(rj.mu.front());
        if (!rj.success) failed.push_back(j);
    }
    rep.success = failed.empty();
    if (!rep.success) {
        std::ostringstream os;
        os << "failed slices:";
        for (Index j : failed) os << ' ' << j;
        rep.diagnostics = os.str();
    }
    rep.residual_norm = fro_norm(b - tprod(a, rep.x));
    rep.wall_seconds = timer.seconds();
    return rep;
}

SolveReport solve_nested_tgkb_p(const Tensor3& a, const Tensor3& b,
                                const std::vector<double>& deltas, double tau, Index k_max,
                                Index k_init, uint64_t seed) {
    Timer timer;
    const Index p = b.cols();
    if (static_cast<Index>(deltas.size()) != p)
        throw std::invalid_argument("solve_nested_tgkb_p: need one delta per lateral slice");
    SolveReport rep;
    rep.method_tag = "nested_tGKB_p";
    rep.x = Tensor3(a.cols(), p, b.tubes());
    const Index cap = k_max > 0 ? k_max : std::min(a.rows(), a.cols());

    // Reorthogonalization is forced on: the projected right-hand sides
    // Q_{k+1}^T * B_j must be accurate for every slice, not just the first.
    GkbProcess proc(a, b.lateral(0), /*reorth=*/true, seed);
    while (proc.k() < std::min(k_init, cap) && proc.step()) {
    }

    std::vector<Index> failed;
    for (Index j = 0; j < p; ++j) {
        const Tensor3 bj = b.lateral(j);
        const double thresh = tau * deltas[j];
        Tensor3 y;
        double proj = 0.0;
        bool ok = false;
        while (true) {
            Tensor3 pbar = proc.P_bar();
            Tensor3 rhs = tprod(ttranspose(proc.Q()), bj);  // full projection
            y = facewise_solve(pbar, rhs).x;
            // The discrepancy test needs the full residual: the in-subspace
            // part plus the component of b_j outside range(Q), which is
            // nonzero for every slice the subspace was not built from.
            const double in_sub = fro_norm(tprod(pbar, y) - rhs);
            const double out_sub = fro_norm(bj - tprod(proc.Q(), rhs));
            proj = std::sqrt(in_sub * in_sub + out_sub * out_sub);
            if (proj <= thresh) {
                ok = true;
                break;
            }
            if (proc.k() >= cap || !proc.step()) break;
        }
        rep.x.set_lateral(j, tprod(proc.W(), y));
        rep.k.push_back(proc.k());
        rep.projected_residual = proj;
        if (!ok) failed.push_back(j);
    }
    rep.success = failed.empty();
    if (!rep.success) {
        std::ostringstream os;
        os << "failed slices:";
        for (Index j : failed) os << ' ' << j;
        rep.diagnostics = os.str();
    }
    rep.residual_norm = fro_norm(b - tprod(a, rep.x));
    rep.wall_seconds = timer.seconds();
    return rep;
}

std::string report_csv_header() { return "method,noise_level,k,relative_error,cpu_seconds"; }

std::string report_csv_row(const SolveReport& r, double noise_level, const std::string& status) {
    std::ostringstream os;
    os << r.method_tag << ',' << noise_level << ',';
    if (r.k.size() == 1) {
        os << r.k.front();
    } else {
        os << '"' << '(';
        for (size_t i = 0; i < r.k.size(); ++i) os << (i ? "," : "") << r.k[i];
        os << ')' << '"';
    }
    os << ',' << r.relative_error << ',' << r.wall_seconds;
    if (!status.empty()) os << ',' << status;
    return os.str();
}

}  // namespace tla
