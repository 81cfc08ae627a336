#pragma once

#include "tla/tensor.hpp"

#include <complex>
#include <optional>
#include <set>

namespace tla {

/// DFT of a real Tensor3 along mode 3: n complex l x m frontal slices.
/// Forward transform is unnormalized; the inverse divides by n, so for real
/// input slice i and slice (n+2-i) (1-based, i = 2..n) are conjugates.
class SpectralTensor {
public:
    SpectralTensor() = default;
    SpectralTensor(Index l, Index m, Index n)
        : l_(l), m_(m), n_(n), slices_(n, Eigen::MatrixXcd::Zero(l, m)) {}

    Index rows() const { return l_; }
    Index cols() const { return m_; }
    Index tubes() const { return n_; }

    Eigen::MatrixXcd& slice(Index k) { return slices_[k]; }
    const Eigen::MatrixXcd& slice(Index k) const { return slices_[k]; }

private:
    Index l_ = 0, m_ = 0, n_ = 0;
    std::vector<Eigen::MatrixXcd> slices_;
};

SpectralTensor dft_mode3(const Tensor3& t);

/// Inverse transform. Throws if the imaginary residue of the result exceeds
/// imag_tol relative to the real part, which signals a non-conjugate-symmetric
/// spectral tensor (upstream corruption).
Tensor3 idft_mode3(const SpectralTensor& s, double imag_tol = 1e-10);

/// Inverse transform taking the real part unconditionally. Only for paths
/// where conjugate symmetry is intentionally broken (normalize's degenerate
/// branch).
Tensor3 idft_mode3_real(const SpectralTensor& s);

/// t-product: facewise matrix products in the Fourier domain.
Tensor3 tprod(const Tensor3& b, const Tensor3& c);
Tensor3 tprod(const SpectralTensor& b, const Tensor3& c);

/// Tensor transpose: transpose each frontal slice, then reverse the order of
/// slices 2 through n.
Tensor3 ttranspose(const Tensor3& a);

double fro_norm(const Tensor3& a);

/// Tubal norm of a lateral slice: ||X^T*X||_F / ||X||_F, and 0 for X = 0.
double tube_norm(const LateralSlice& x);

struct NormalizeResult {
    LateralSlice direction;  // tubal norm 1
    Tube scale;
    std::set<Index> degenerate_slices;  // spectral slices replaced by a random unit vector
};

/// Decompose x = direction * scale with ||direction|| = 1. Spectral slices of
/// 2-norm <= tol are replaced by a random unit vector and get scale entry 0;
/// that branch needs the caller-supplied rng and keeps the replacement
/// conjugate-symmetric so the direction stays real.
NormalizeResult normalize(const LateralSlice& x, std::mt19937_64* rng = nullptr, double tol = 1e-12);

struct LeastSquaresResult {
    Tensor3 x;
    std::vector<Index> illconditioned_slices;
};

/// Facewise least squares: per spectral slice i, x-hat(i) minimizes
/// ||c-hat(i) y - d-hat(i)||_2. Rank-deficient slices (condition estimate
/// above 1/(100 eps)) are flagged and get the minimum-norm solution.
LeastSquaresResult facewise_solve(const Tensor3& c, const Tensor3& d);

/// Tube arithmetic through the 1-column t-product.
Tube tube_mul(const Tube& a, const Tube& b);
bool tube_invertible(const Tube& a, double tol = 1e-12);
Tube tube_inverse(const Tube& a);

}  // namespace tla
