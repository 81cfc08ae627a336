#pragma once

#include "tla/tcore.hpp"

namespace tla {

/// Truncated tSVD factors: a = U*S*V^T (exact at full width). S is f-diagonal
/// with singular tube norms nonincreasing in the column index.
struct TSvdFactors {
    Tensor3 U;  // l x k x n, partially orthogonal
    Tensor3 S;  // k x k x n, f-diagonal
    Tensor3 V;  // m x k x n, partially orthogonal
    Index k = 0;

    Tube singular_tube(Index j) const { return S.tube_at(j, j); }
};

/// Truncated tEVD factors of a symmetric tensor: a = W*D*W^T at full width,
/// eigentubes slice-wise sorted by descending eigenvalue magnitude.
struct TEvdFactors {
    Tensor3 W;  // m x k x n
    Tensor3 D;  // k x k x n, f-diagonal
    Index k = 0;

    Tube eigen_tube(Index j) const { return D.tube_at(j, j); }
};

Tensor3 reconstruct(const TSvdFactors& f);
Tensor3 reconstruct(const TEvdFactors& f);

TSvdFactors tsvd(const Tensor3& a, Index k);
TEvdFactors tevd(const Tensor3& a, Index k, double sym_tol = 1e-10);

Index tubal_rank(const Tensor3& a, double tol = 1e-10);

struct RtsvdConfig {
    double epsilon = 0.0;   // fixed-precision tolerance
    int oversample = 5;     // rho
    Index max_rank = 0;     // 0 means min(l, m)
    uint64_t seed = 0;
    bool track_residual = false;  // debug: recompute the true residual each step
};

struct RtsvdResult {
    TSvdFactors factors;            // width min(r, m); empty when r == 0
    Index r = 0;                    // range-finder iterations executed
    std::vector<double> eta_trace;  // eta after each iteration
    std::vector<double> residual_trace;  // filled when track_residual is set
    bool truncated = false;         // hit max_rank before the epsilon test passed
};

/// Fixed-precision randomized tSVD: grows an orthonormal basis Q one lateral
/// slice at a time until ||A||_F^2 - ||Q^T*A||_F^2 drops below epsilon^2,
/// then takes a full tSVD of the projected tensor.
RtsvdResult rtsvd(const Tensor3& a, const RtsvdConfig& cfg);

}  // namespace tla
