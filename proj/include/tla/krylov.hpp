#pragma once

#include "tla/tcore.hpp"

#include <optional>

namespace tla {

struct GkbDecomposition {
    Tensor3 Q;      // l x (k+1) x n left basis
    Tensor3 W;      // m x k x n right basis
    Tensor3 P_bar;  // (k+1) x k x n lower bidiagonal
    Tube z1;        // scale of the starting slice
    Index k = 0;
    bool breakdown = false;
    std::string breakdown_tube;  // which tube triggered it ("c_3", "z_4", ...)
};

struct LanczosDecomposition {
    Tensor3 Q;      // m x (k+1) x n
    Tensor3 T_bar;  // (k+1) x k x n tridiagonal
    Tube z0;
    Index k = 0;
    bool breakdown = false;
    std::string breakdown_tube;
};

/// Stepwise partial t-product Golub-Kahan bidiagonalization. The process can
/// be extended one step at a time, which the nested recycling solver relies
/// on.
class GkbProcess {
public:
    GkbProcess(const Tensor3& a, const LateralSlice& b, bool reorth, uint64_t seed);

    /// Runs one bidiagonalization step. Returns false (and sets the breakdown
    /// flag) once the process cannot be extended.
    bool step();

    Index k() const { return static_cast<Index>(w_cols_.size()); }
    bool broke_down() const { return breakdown_; }
    const std::string& breakdown_tube() const { return breakdown_tube_; }
    const Tube& z1() const { return z1_; }

    Tensor3 Q() const;      // l x (k+1) x n
    Tensor3 W() const;      // m x k x n
    Tensor3 P_bar() const;  // (k+1) x k x n

    GkbDecomposition decomposition() const;

private:
    SpectralTensor a_spec_, at_spec_;
    Index l_, m_, n_;
    bool reorth_;
    std::mt19937_64 rng_;
    std::vector<LateralSlice> q_cols_;  // k+1 slices
    std::vector<LateralSlice> w_cols_;  // k slices
    std::vector<Tube> c_;               // diagonal tubes
    std::vector<Tube> z_;               // z_[0] = z1, z_[i] = z_{i+1}
    Tube z1_;
    bool breakdown_ = false;
    std::string breakdown_tube_;
};

class LanczosProcess {
public:
    LanczosProcess(const Tensor3& a, const LateralSlice& b, bool reorth, uint64_t seed,
                   double sym_tol = 1e-10);

    bool step();

    Index k() const { return static_cast<Index>(c_.size()); }
    bool broke_down() const { return breakdown_; }
    const Tube& z0() const { return z0_; }

    Tensor3 Q(Index count) const;  // first count basis slices
    Tensor3 T_bar() const;         // (k+1) x k x n
    Tensor3 T_square() const;      // leading k x k x n part

    LanczosDecomposition decomposition() const;

private:
    SpectralTensor a_spec_;
    Index m_, n_;
    bool reorth_;
    std::mt19937_64 rng_;
    std::vector<LateralSlice> q_cols_;  // k+1
    std::vector<Tube> c_;
    std::vector<Tube> z_;  // z_[i-1] = z_i
    Tube z0_;
    bool breakdown_ = false;
    std::string breakdown_tube_;
};

GkbDecomposition tgkb(const Tensor3& a, const LateralSlice& b, Index k, bool reorth,
                      uint64_t seed);

LanczosDecomposition tlanczos(const Tensor3& a, const LateralSlice& b, Index k, bool reorth,
                              uint64_t seed);

/// Worst relative Hermitian residual over the spectral slices; 0 means
/// symmetric in the t-sense.
double symmetry_residual(const Tensor3& a);

}  // namespace tla
