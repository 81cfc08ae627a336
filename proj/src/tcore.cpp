#include "tla/tcore.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <memory>

namespace tla {

namespace {

// One reusable complex buffer + plan pair per transform length.
class TubeFft {
public:
    explicit TubeFft(Index n) : n_(n) {
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        fwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~TubeFft() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    TubeFft(const TubeFft&) = delete;
    TubeFft& operator=(const TubeFft&) = delete;

    fftw_complex* buf() { return buf_; }
    void forward() { fftw_execute(fwd_); }
    void backward() { fftw_execute(bwd_); }

private:
    Index n_;
    fftw_complex* buf_;
    fftw_plan fwd_, bwd_;
};

Tensor3 idft_impl(const SpectralTensor& s, double* imag_resid_sq, double* real_sq) {
    const Index l = s.rows(), m = s.cols(), n = s.tubes();
    Tensor3 out(l, m, n);
    TubeFft fft(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    double imag_sq = 0.0, re_sq = 0.0;
    for (Index j = 0; j < m; ++j) {
        for (Index i = 0; i < l; ++i) {
            for (Index k = 0; k < n; ++k) {
                const std::complex<double> v = s.slice(k)(i, j);
                fft.buf()[k][0] = v.real();
                fft.buf()[k][1] = v.imag();
            }
            fft.backward();
            for (Index k = 0; k < n; ++k) {
                const double re = fft.buf()[k][0] * inv_n;
                const double im = fft.buf()[k][1] * inv_n;
                out(i, j, k) = re;
                re_sq += re * re;
                imag_sq += im * im;
            }
        }
    }
    *imag_resid_sq = imag_sq;
    *real_sq = re_sq;
    return out;
}

}  // namespace

SpectralTensor dft_mode3(const Tensor3& t) {
    const Index l = t.rows(), m = t.cols(), n = t.tubes();
    SpectralTensor s(l, m, n);
    TubeFft fft(n);
    for (Index j = 0; j < m; ++j) {
        for (Index i = 0; i < l; ++i) {
            for (Index k = 0; k < n; ++k) {
                fft.buf()[k][0] = t(i, j, k);
                fft.buf()[k][1] = 0.0;
            }
            fft.forward();
            for (Index k = 0; k < n; ++k)
                s.slice(k)(i, j) = {fft.buf()[k][0], fft.buf()[k][1]};
        }
    }
    return s;
}

Tensor3 idft_mode3(const SpectralTensor& s, double imag_tol) {
    // Check conjugate symmetry on the input spectrum itself; measuring the
    // imaginary residue of the output would misfire on results that are
    // analytically ~0 (orthogonal inner products), where rounding noise
    // dominates both parts.
    const Index n = s.tubes();
    double asym_sq = 0.0, total_sq = 0.0;
    for (Index k = 0; k < n; ++k) {
        total_sq += s.slice(k).squaredNorm();
        const Index mirror = (n - k) % n;
        if (mirror == k)
            asym_sq += s.slice(k).imag().squaredNorm();
        else if (mirror > k)
            asym_sq += 0.5 * (s.slice(k) - s.slice(mirror).conjugate()).squaredNorm();
    }
    const double scale = std::max(total_sq, std::numeric_limits<double>::min());
    if (asym_sq > imag_tol * imag_tol * scale)
        throw std::runtime_error(
            "idft_mode3: spectral input is not conjugate-symmetric (relative imaginary residue " +
            std::to_string(std::sqrt(asym_sq / scale)) + ")");
    double imag_sq = 0.0, re_sq = 0.0;
    return idft_impl(s, &imag_sq, &re_sq);
}

Tensor3 idft_mode3_real(const SpectralTensor& s) {
    double imag_sq = 0.0, re_sq = 0.0;
    return idft_impl(s, &imag_sq, &re_sq);
}

Tensor3 tprod(const Tensor3& b, const Tensor3& c) {
    if (b.cols() != c.rows() || b.tubes() != c.tubes())
        throw std::invalid_argument("tprod: incompatible shapes " + b.shape_str() + " and " +
                                    c.shape_str());
    return tprod(dft_mode3(b), c);
}

Tensor3 tprod(const SpectralTensor& b, const Tensor3& c) {
    if (b.cols() != c.rows() || b.tubes() != c.tubes())
        throw std::invalid_argument("tprod: incompatible shapes");
    const Index n = b.tubes();
    SpectralTensor ch = dft_mode3(c);
    SpectralTensor out(b.rows(), c.cols(), n);
    for (Index k = 0; k < n; ++k)
        out.slice(k).noalias() = b.slice(k) * ch.slice(k);
    // Both operands are (transforms of) real tensors, so the product is
    // analytically real; the FFT's own rounding asymmetry must not be
    // mistaken for corruption when the result cancels to ~0.
    return idft_mode3_real(out);
}

Tensor3 ttranspose(const Tensor3& a) {
    const Index l = a.rows(), m = a.cols(), n = a.tubes();
    Tensor3 out(m, l, n);
    out.slice(0) = a.slice(0).transpose();
    for (Index k = 1; k < n; ++k)
        out.slice(n - k) = a.slice(k).transpose();
    return out;
}

double fro_norm(const Tensor3& a) {
    double sq = 0.0;
    for (Index i = 0; i < a.size(); ++i) sq += a.data()[i] * a.data()[i];
    return std::sqrt(sq);
}

double tube_norm(const LateralSlice& x) {
    const double fx = fro_norm(x);
    if (fx == 0.0) return 0.0;
    return fro_norm(tprod(ttranspose(x), x)) / fx;
}

NormalizeResult normalize(const LateralSlice& x, std::mt19937_64* rng, double tol) {
    if (x.cols() != 1) throw std::invalid_argument("normalize: expected a lateral slice");
    const Index m = x.rows(), n = x.tubes();
    SpectralTensor v = dft_mode3(x);
    SpectralTensor scale_spec(1, 1, n);
    NormalizeResult res;

    std::normal_distribution<double> dist;
    for (Index j = 0; j < n; ++j) {
        const Index mirror = (n - j) % n;
        if (mirror < j) continue;  // handled together with its mirror
        const double a = v.slice(j).col(0).norm();
        if (a > tol) {
            v.slice(j).col(0) /= a;
            scale_spec.slice(j)(0, 0) = a;
            if (mirror != j) {
                v.slice(mirror).col(0) = v.slice(j).col(0).conjugate();
                scale_spec.slice(mirror)(0, 0) = a;
            }
            continue;
        }
        // Degenerate slice: replace by a random unit vector and zero the scale.
        // Mirror slices of a real tensor have equal norms, so the pair is
        // degenerate together; the replacement is kept conjugate-symmetric so
        // the direction stays real.
        if (!rng)
            throw std::invalid_argument("normalize: degenerate spectral slice " +
                                        std::to_string(j) + " and no RNG supplied");
        Eigen::VectorXcd g(m);
        for (Index i = 0; i < m; ++i) {
            const double re = dist(*rng);
            const double im = (mirror == j) ? 0.0 : dist(*rng);
            g(i) = {re, im};
        }
        g /= g.norm();
        v.slice(j).col(0) = g;
        scale_spec.slice(j)(0, 0) = 0.0;
        res.degenerate_slices.insert(j);
        if (mirror != j) {
            v.slice(mirror).col(0) = g.conjugate();
            scale_spec.slice(mirror)(0, 0) = 0.0;
            res.degenerate_slices.insert(mirror);
        }
    }

    res.direction = idft_mode3(v);
    res.scale = idft_mode3(scale_spec);
    return res;
}

LeastSquaresResult facewise_solve(const Tensor3& c, const Tensor3& d) {
    if (c.rows() != d.rows() || c.tubes() != d.tubes())
        throw std::invalid_argument("facewise_solve: incompatible shapes " + c.shape_str() +
                                    " and " + d.shape_str());
    const Index n = c.tubes();
    SpectralTensor ch = dft_mode3(c), dh = dft_mode3(d);
    SpectralTensor yh(c.cols(), d.cols(), n);
    LeastSquaresResult res;
    const double cond_limit = 1.0 / (100.0 * std::numeric_limits<double>::epsilon());
    for (Index k = 0; k < n; ++k) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(ch.slice(k));
        const auto diag = cod.matrixT().diagonal().cwiseAbs();
        const Index r = cod.rank();
        const double dmax = diag.head(std::max<Index>(r, 1)).maxCoeff();
        const double dmin = diag.head(std::max<Index>(r, 1)).minCoeff();
        if (r < c.cols() || dmin == 0.0 || dmax / dmin > cond_limit)
            res.illconditioned_slices.push_back(k);
        yh.slice(k) = cod.solve(dh.slice(k));
    }
    res.x = idft_mode3_real(yh);
    return res;
}

Tube tube_mul(const Tube& a, const Tube& b) { return tprod(a, b); }

bool tube_invertible(const Tube& a, double tol) {
    SpectralTensor s = dft_mode3(a);
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (Index k = 0; k < a.tubes(); ++k) {
        const double v = std::abs(s.slice(k)(0, 0));
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    return mx > 0.0 && mn > tol * mx;
}

Tube tube_inverse(const Tube& a) {
    SpectralTensor s = dft_mode3(a);
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (Index k = 0; k < a.tubes(); ++k) {
        const double v = std::abs(s.slice(k)(0, 0));
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    if (mx == 0.0 || mn < 1e-14 * mx)
        throw std::invalid_argument("tube_inverse: tube has a (near-)zero spectral entry");
    for (Index k = 0; k < a.tubes(); ++k)
        s.slice(k)(0, 0) = 1.0 / s.slice(k)(0, 0);
    return idft_mode3_real(s);
}

}  // namespace tla
