#include "tla/decomp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tla {

namespace {

// Phase that rotates the largest-magnitude entry of column j to the real
// nonnegative axis. Applying it to a (u, v) pair or to an eigenvector leaves
// the factorization unchanged but makes factors reproducible across runs.
std::complex<double> column_phase(const Eigen::MatrixXcd& u, Index j) {
    Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    const std::complex<double> p = u(imax, j);
    const double ap = std::abs(p);
    return ap == 0.0 ? std::complex<double>(1.0, 0.0) : std::conj(p) / ap;
}

}  // namespace

Tensor3 reconstruct(const TSvdFactors& f) {
    return tprod(tprod(f.U, f.S), ttranspose(f.V));
}

Tensor3 reconstruct(const TEvdFactors& f) {
    return tprod(tprod(f.W, f.D), ttranspose(f.W));
}

TSvdFactors tsvd(const Tensor3& a, Index k) {
    const Index l = a.rows(), m = a.cols(), n = a.tubes();
    if (k < 1 || k > std::min(l, m))
        throw std::invalid_argument("tsvd: truncation width " + std::to_string(k) +
                                    " out of range for " + a.shape_str());
    SpectralTensor ah = dft_mode3(a);
    SpectralTensor uh(l, k, n), sh(k, k, n), vh(m, k, n);
    for (Index i = 0; i < n; ++i) {
        // Mirror slices of a real tensor are conjugates; copying the conjugate
        // instead of re-factorizing keeps the factors exactly conjugate-
        // symmetric even when trailing singular vectors are numerically
        // arbitrary (ill-conditioned or degenerate slices).
        const Index mirror = (n - i) % n;
        if (mirror < i) {
            uh.slice(i) = uh.slice(mirror).conjugate();
            sh.slice(i) = sh.slice(mirror).conjugate();
            vh.slice(i) = vh.slice(mirror).conjugate();
            continue;
        }
        // Self-mirror slices (0 and n/2) are analytically real; dropping the
        // FFT's rounding-level imaginary part keeps their factors real too.
        if (mirror == i) ah.slice(i) = ah.slice(i).real().cast<std::complex<double>>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ah.slice(i),
                                               Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::MatrixXcd u = svd.matrixU().leftCols(k);
        Eigen::MatrixXcd v = svd.matrixV().leftCols(k);
        for (Index j = 0; j < k; ++j) {
            const std::complex<double> phase = column_phase(u, j);
            u.col(j) *= phase;
            v.col(j) *= phase;
        }
        uh.slice(i) = u;
        vh.slice(i) = v;
        sh.slice(i) = svd.singularValues().head(k).cast<std::complex<double>>().asDiagonal();
    }
    TSvdFactors f;
    f.U = idft_mode3(uh);
    f.S = idft_mode3(sh);
    f.V = idft_mode3(vh);
    f.k = k;
    return f;
}

TEvdFactors tevd(const Tensor3& a, Index k, double sym_tol) {
    const Index m = a.cols(), n = a.tubes();
    if (a.rows() != m) throw std::invalid_argument("tevd: tensor is not square: " + a.shape_str());
    if (k < 1 || k > m) throw std::invalid_argument("tevd: truncation width out of range");

    SpectralTensor ah = dft_mode3(a);
    double worst = 0.0;
    Index worst_slice = 0;
    for (Index i = 0; i < n; ++i) {
        const double scale = std::max(ah.slice(i).norm(), 1e-300);
        const double resid = (ah.slice(i) - ah.slice(i).adjoint()).norm() / scale;
        if (resid > worst) {
            worst = resid;
            worst_slice = i;
        }
    }
    if (worst > sym_tol)
        throw std::invalid_argument("tevd: tensor is not symmetric; spectral slice " +
                                    std::to_string(worst_slice) + " has Hermitian residual " +
                                    std::to_string(worst));

    SpectralTensor wh(m, k, n), dh(k, k, n);
    for (Index i = 0; i < n; ++i) {
        // See tsvd: mirror slices are set to exact conjugates.
        const Index mirror = (n - i) % n;
        if (mirror < i) {
            wh.slice(i) = wh.slice(mirror).conjugate();
            dh.slice(i) = dh.slice(mirror).conjugate();
            continue;
        }
        if (mirror == i) ah.slice(i) = ah.slice(i).real().cast<std::complex<double>>();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(ah.slice(i));
        // sort per slice by descending eigenvalue magnitude
        std::vector<Index> order(m);
        std::iota(order.begin(), order.end(), Index{0});
        const auto& ev = eig.eigenvalues();
        std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
            return std::abs(ev(x)) > std::abs(ev(y));
        });
        Eigen::MatrixXcd w(m, k);
        for (Index j = 0; j < k; ++j) {
            w.col(j) = eig.eigenvectors().col(order[j]);
            w.col(j) *= column_phase(w, j);
            dh.slice(i)(j, j) = ev(order[j]);
        }
        wh.slice(i) = w;
    }
    TEvdFactors f;
    f.W = idft_mode3(wh);
    f.D = idft_mode3(dh);
    f.k = k;
    return f;
}

Index tubal_rank(const Tensor3& a, double tol) {
    if (fro_norm(a) == 0.0) return 0;
    const Index w = std::min(a.rows(), a.cols());
    TSvdFactors f = tsvd(a, w);
    const double s1 = fro_norm(f.singular_tube(0));
    if (s1 == 0.0) return 0;
    Index r = 0;
    for (Index j = 0; j < w; ++j)
        if (fro_norm(f.singular_tube(j)) > tol * s1) ++r;
    return r;
}

RtsvdResult rtsvd(const Tensor3& a, const RtsvdConfig& cfg) {
    const Index l = a.rows(), m = a.cols(), n = a.tubes();
    if (cfg.epsilon <= 0.0) throw std::invalid_argument("rtsvd: epsilon must be positive");
    const double anorm = fro_norm(a);
    if (anorm == 0.0) throw std::invalid_argument("rtsvd: zero tensor");
    const Index max_rank = cfg.max_rank > 0 ? std::min(cfg.max_rank, std::min(l, m))
                                            : std::min(l, m);

    std::mt19937_64 rng(cfg.seed);
    RtsvdResult res;
    double eta = anorm * anorm;
    const double eps2 = cfg.epsilon * cfg.epsilon;

    std::vector<LateralSlice> q_cols;            // l x 1 x n each
    std::vector<Tensor3> b_rows;                 // 1 x m x n each
    const Tensor3 at = ttranspose(a);

    while (eta > eps2) {
        if (res.r >= max_rank) {
            res.truncated = true;
            break;
        }
        ++res.r;
        Tensor3 g = Tensor3::random(m, 1, n, rng);
        Tensor3 z = tprod(a, g);
        if (!q_cols.empty())
            z -= tprod(q_cols.back(), tprod(b_rows.back(), g));
        z = normalize(z, &rng).direction;
        for (const LateralSlice& q : q_cols)
            z -= tprod(q, tprod(ttranspose(q), z));
        z = normalize(z, &rng).direction;
        Tensor3 y = ttranspose(tprod(at, z));  // z^T * a as a 1 x m x n row
        eta -= fro_norm(y) * fro_norm(y);
        q_cols.push_back(std::move(z));
        b_rows.push_back(std::move(y));
        res.eta_trace.push_back(eta);
        if (cfg.track_residual) {
            Tensor3 resid = a;
            for (size_t j = 0; j < q_cols.size(); ++j)
                resid -= tprod(q_cols[j], b_rows[j]);
            const double rn = fro_norm(resid);
            res.residual_trace.push_back(rn * rn);
        }
    }

    if (res.r == 0) return res;

    Tensor3 q(l, res.r, n), btil(res.r, m, n);
    for (Index j = 0; j < res.r; ++j) {
        q.set_lateral(j, q_cols[j]);
        for (Index k = 0; k < n; ++k) btil.slice(k).row(j) = b_rows[j].slice(k).row(0);
    }
    const Index w = std::min(res.r, m);
    TSvdFactors inner = tsvd(btil, w);
    res.factors.U = tprod(q, inner.U);
    res.factors.S = inner.S;
    res.factors.V = inner.V;
    res.factors.k = w;
    return res;
}

}  // namespace tla
