#include "tla/krylov.hpp"

#include <cmath>

namespace tla {

namespace {

constexpr double kBreakdownTol = 1e-12;

Tensor3 assemble(const std::vector<LateralSlice>& cols, Index rows, Index n) {
    Tensor3 out(rows, static_cast<Index>(cols.size()), n);
    for (size_t j = 0; j < cols.size(); ++j) out.set_lateral(static_cast<Index>(j), cols[j]);
    return out;
}

void set_tube(Tensor3& t, Index i, Index j, const Tube& v) {
    for (Index k = 0; k < t.tubes(); ++k) t(i, j, k) = v(0, 0, k);
}

}  // namespace

double symmetry_residual(const Tensor3& a) {
    if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
    SpectralTensor ah = dft_mode3(a);
    double worst = 0.0;
    for (Index i = 0; i < a.tubes(); ++i) {
        const double scale = std::max(ah.slice(i).norm(), 1e-300);
        worst = std::max(worst, (ah.slice(i) - ah.slice(i).adjoint()).norm() / scale);
    }
    return worst;
}

GkbProcess::GkbProcess(const Tensor3& a, const LateralSlice& b, bool reorth, uint64_t seed)
    : l_(a.rows()), m_(a.cols()), n_(a.tubes()), reorth_(reorth), rng_(seed) {
    if (b.rows() != l_ || b.cols() != 1 || b.tubes() != n_)
        throw std::invalid_argument("tgkb: starting slice shape " + b.shape_str() +
                                    " incompatible with operator " + a.shape_str());
    if (fro_norm(b) == 0.0) throw std::invalid_argument("tgkb: starting slice is zero");
    a_spec_ = dft_mode3(a);
    at_spec_ = dft_mode3(ttranspose(a));

    NormalizeResult nb = normalize(b, &rng_);
    if (!nb.degenerate_slices.empty() || !tube_invertible(nb.scale, kBreakdownTol))
        throw std::invalid_argument("tgkb: z1 is not invertible");
    z1_ = nb.scale;
    q_cols_.push_back(nb.direction);
    z_.push_back(z1_);
}

bool GkbProcess::step() {
    if (breakdown_) return false;
    const size_t i = w_cols_.size();  // completed steps

    Tensor3 w = tprod(at_spec_, q_cols_[i]);
    if (i > 0) w -= tprod(w_cols_[i - 1], z_[i]);
    if (reorth_)
        for (const LateralSlice& wj : w_cols_) w -= tprod(wj, tprod(ttranspose(wj), w));
    NormalizeResult nw = normalize(w, &rng_);
    if (!nw.degenerate_slices.empty()) {
        breakdown_ = true;
        breakdown_tube_ = "c_" + std::to_string(i + 1);
        return false;
    }

    Tensor3 q = tprod(a_spec_, nw.direction) - tprod(q_cols_[i], nw.scale);
    if (reorth_)
        for (const LateralSlice& qj : q_cols_) q -= tprod(qj, tprod(ttranspose(qj), q));
    NormalizeResult nq = normalize(q, &rng_);

    w_cols_.push_back(nw.direction);
    c_.push_back(nw.scale);
    q_cols_.push_back(nq.direction);
    z_.push_back(nq.scale);

    // A degenerate or non-invertible tube ends the process, but the completed
    // step still satisfies the decomposition identity (the zeroed scale
    // entries match a zero residual in those slices).
    if (!nq.degenerate_slices.empty() || !tube_invertible(nq.scale, kBreakdownTol)) {
        breakdown_ = true;
        breakdown_tube_ = "z_" + std::to_string(i + 2);
    } else if (!tube_invertible(nw.scale, kBreakdownTol)) {
        breakdown_ = true;
        breakdown_tube_ = "c_" + std::to_string(i + 1);
    }
    return true;
}

Tensor3 GkbProcess::Q() const { return assemble(q_cols_, l_, n_); }
Tensor3 GkbProcess::W() const { return assemble(w_cols_, m_, n_); }

Tensor3 GkbProcess::P_bar() const {
    const Index k = this->k();
    Tensor3 p(k + 1, k, n_);
    for (Index j = 0; j < k; ++j) {
        set_tube(p, j, j, c_[j]);
        set_tube(p, j + 1, j, z_[j + 1]);
    }
    return p;
}

GkbDecomposition GkbProcess::decomposition() const {
    GkbDecomposition d;
    d.Q = Q();
    d.W = W();
    d.P_bar = P_bar();
    d.z1 = z1_;
    d.k = k();
    d.breakdown = breakdown_;
    d.breakdown_tube = breakdown_tube_;
    return d;
}

GkbDecomposition tgkb(const Tensor3& a, const LateralSlice& b, Index k, bool reorth,
                      uint64_t seed) {
    if (k < 1) throw std::invalid_argument("tgkb: k must be at least 1");
    GkbProcess p(a, b, reorth, seed);
    for (Index i = 0; i < k && p.step(); ++i) {
    }
    return p.decomposition();
}

LanczosProcess::LanczosProcess(const Tensor3& a, const LateralSlice& b, bool reorth,
                               uint64_t seed, double sym_tol)
    : m_(a.cols()), n_(a.tubes()), reorth_(reorth), rng_(seed) {
    const double sym = symmetry_residual(a);
    if (sym > sym_tol)
        throw std::invalid_argument("tlanczos: tensor is not symmetric (Hermitian residual " +
                                    std::to_string(sym) + ")");
    if (b.rows() != m_ || b.cols() != 1 || b.tubes() != n_)
        throw std::invalid_argument("tlanczos: starting slice shape incompatible");
    if (fro_norm(b) == 0.0) throw std::invalid_argument("tlanczos: starting slice is zero");
    a_spec_ = dft_mode3(a);

    NormalizeResult nb = normalize(b, &rng_);
    z0_ = nb.scale;
    q_cols_.push_back(nb.direction);
}

bool LanczosProcess::step() {
    if (breakdown_) return false;
    const size_t i = c_.size();  // completed steps

    Tensor3 v = tprod(a_spec_, q_cols_[i]);
    Tube ci = tprod(ttranspose(q_cols_[i]), v);
    v -= tprod(q_cols_[i], ci);
    if (i > 0) v -= tprod(q_cols_[i - 1], z_[i - 1]);
    if (reorth_)
        for (const LateralSlice& qj : q_cols_) v -= tprod(qj, tprod(ttranspose(qj), v));

    NormalizeResult nv = normalize(v, &rng_);
    c_.push_back(ci);
    z_.push_back(nv.scale);
    q_cols_.push_back(nv.direction);

    if (!nv.degenerate_slices.empty() || !tube_invertible(nv.scale, kBreakdownTol)) {
        breakdown_ = true;
        breakdown_tube_ = "z_" + std::to_string(i + 1);
    } else if (!tube_invertible(ci, kBreakdownTol)) {
        breakdown_ = true;
        breakdown_tube_ = "c_" + std::to_string(i + 1);
    }
    return true;
}

Tensor3 LanczosProcess::Q(Index count) const {
    std::vector<LateralSlice> cols(q_cols_.begin(), q_cols_.begin() + count);
    return assemble(cols, m_, n_);
}

Tensor3 LanczosProcess::T_bar() const {
    const Index k = this->k();
    Tensor3 t(k + 1, k, n_);
    for (Index j = 0; j < k; ++j) {
        set_tube(t, j, j, c_[j]);
        set_tube(t, j + 1, j, z_[j]);
        if (j + 1 < k) set_tube(t, j, j + 1, z_[j]);
    }
    return t;
}

Tensor3 LanczosProcess::T_square() const {
    const Index k = this->k();
    Tensor3 t(k, k, n_);
    for (Index j = 0; j < k; ++j) {
        set_tube(t, j, j, c_[j]);
        if (j + 1 < k) {
            set_tube(t, j + 1, j, z_[j]);
            set_tube(t, j, j + 1, z_[j]);
        }
    }
    return t;
}

LanczosDecomposition LanczosProcess::decomposition() const {
    LanczosDecomposition d;
    d.Q = Q(k() + 1);
    d.T_bar = T_bar();
    d.z0 = z0_;
    d.k = k();
    d.breakdown = breakdown_;
    d.breakdown_tube = breakdown_tube_;
    return d;
}

LanczosDecomposition tlanczos(const Tensor3& a, const LateralSlice& b, Index k, bool reorth,
                              uint64_t seed) {
    if (k < 1) throw std::invalid_argument("tlanczos: k must be at least 1");
    LanczosProcess p(a, b, reorth, seed);
    for (Index i = 0; i < k && p.step(); ++i) {
    }
    return p.decomposition();
}

}  // namespace tla
