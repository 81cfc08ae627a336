#pragma once

#include "tla/decomp.hpp"
#include "tla/krylov.hpp"

namespace tla {

/// Discrepancy-principle settings: accept the smallest k with
/// ||B - A*X_k||_F <= tau * delta. tau is the discrepancy-principle safety
/// constant (1.1 for single-slice problems, 1.2 for p-methods).
struct DiscrepancyConfig {
    double delta = 0.0;
    double tau = 1.1;
    Index k_max = 0;  // 0 means no cap beyond the factorization width
    bool early_stop = false;  // truncate one step before the test fires
};

struct TikhonovConfig {
    double mu_lo = 1e1;
    double mu_hi = 1e7;
    double bisect_tol = 1e-6;  // relative interval width
    int max_bisect = 60;
};

enum class KrylovKind { tgkb, tlanczos };

struct SolveReport {
    Tensor3 x;
    bool success = false;
    std::vector<Index> k;            // truncation index, one entry per lateral slice
    double residual_norm = 0.0;      // true residual ||B - A*X||_F
    double projected_residual = -1.0;  // projected-problem residual, when applicable
    double relative_error = -1.0;    // filled by relative_error() when truth is known
    std::vector<double> mu;          // Tikhonov parameters, when applicable
    double wall_seconds = 0.0;
    std::string method_tag;
    std::string diagnostics;

    Index k_scalar() const { return k.empty() ? 0 : k.front(); }
};

double relative_error(const Tensor3& x, const Tensor3& x_true);

/// T-tSVD: full tSVD of a, then the smallest s whose true residual passes the
/// discrepancy test. b may have p >= 1 lateral slices (shared s).
SolveReport solve_ttsvd(const Tensor3& a, const Tensor3& b, const DiscrepancyConfig& disc);

/// T-tEVD for symmetric a.
SolveReport solve_ttevd(const Tensor3& a, const Tensor3& b, const DiscrepancyConfig& disc);

/// RT-tSVD: low tubal rank factors from the randomized range finder, k grown
/// from max(1, r - oversample) until the discrepancy test passes.
SolveReport solve_rtsvd(const Tensor3& a, const Tensor3& b, const DiscrepancyConfig& disc,
                        const RtsvdConfig& cfg);

/// Truncated tGKB: grow the bidiagonalization one step at a time and stop as
/// soon as the projected residual passes the discrepancy test.
SolveReport solve_tgkb(const Tensor3& a, const LateralSlice& b, const DiscrepancyConfig& disc,
                       uint64_t seed = 0, bool reorth = true);

/// Same truncation index as solve_tgkb, solution assembled from the
/// t-singular triplets of P_bar (the two formulas are algebraically equal).
SolveReport solve_tgkb_triplet_form(const Tensor3& a, const LateralSlice& b,
                                    const DiscrepancyConfig& disc, uint64_t seed = 0,
                                    bool reorth = true);

SolveReport solve_tlanczos(const Tensor3& a, const LateralSlice& b,
                           const DiscrepancyConfig& disc, uint64_t seed = 0,
                           bool reorth = true);

SolveReport solve_tlanczos_eig_form(const Tensor3& a, const LateralSlice& b,
                                    const DiscrepancyConfig& disc, uint64_t seed = 0,
                                    bool reorth = true);

/// Projected Tikhonov (tGKT / t-LanczosTik): at each k solve the penalized
/// projected problem min ||P*Y - rhs||^2 + mu^{-1} ||Y||^2 facewise and pick
/// mu by bisection so the projected residual meets tau*delta.
SolveReport solve_tikhonov_projected(const Tensor3& a, const LateralSlice& b,
                                     const DiscrepancyConfig& disc, const TikhonovConfig& tik,
                                     KrylovKind process, uint64_t seed = 0, bool reorth = true);

enum class SliceMethod { tgkb, tgkb_triplet, tlanczos, tlanczos_eig, tgkt, tlanczos_tik };

/// Apply a single-slice solver independently to each lateral slice of B.
/// With p = 1 this is bitwise identical to the single-slice call.
SolveReport solve_p(const Tensor3& a, const Tensor3& b, const std::vector<double>& deltas,
                    SliceMethod method, double tau = 1.2, Index k_max = 0, uint64_t seed = 0,
                    const TikhonovConfig& tik = {});

/// Nested recycling: one tGKB subspace built from the first slice is
/// reused and only ever extended across the remaining slices.
SolveReport solve_nested_tgkb_p(const Tensor3& a, const Tensor3& b,
                                const std::vector<double>& deltas, double tau = 1.2,
                                Index k_max = 0, Index k_init = 2, uint64_t seed = 0);

/// CSV serialization of a solve report.
std::string report_csv_header();
std::string report_csv_row(const SolveReport& r, double noise_level,
                           const std::string& status = "");

}  // namespace tla
