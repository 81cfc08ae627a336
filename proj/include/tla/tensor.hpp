#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tla {

using Index = Eigen::Index;
using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;

/// Dense real third-order tensor with frontal-slice-major storage.
/// Entry (i,j,k) lives at data[k*l*m + j*l + i]; each frontal slice is a
/// contiguous column-major l x m matrix.
///
/// A lateral slice is a Tensor3 with cols() == 1, a tube is a Tensor3 with
/// rows() == cols() == 1; there is no separate representation for either.
class Tensor3 {
public:
    Tensor3() = default;

    Tensor3(Index l, Index m, Index n) : l_(l), m_(m), n_(n), data_(check_dims(l, m, n), 0.0) {}

    static Tensor3 identity(Index m, Index n) {
        Tensor3 t(m, m, n);
        t.slice(0).setIdentity();
        return t;
    }

    /// The tube e1 (value 1 in the first frontal face), the multiplicative
    /// identity of the tubal scalar ring.
    static Tensor3 e1_tube(Index n) {
        Tensor3 t(1, 1, n);
        t(0, 0, 0) = 1.0;
        return t;
    }

    static Tensor3 random(Index l, Index m, Index n, std::mt19937_64& rng) {
        Tensor3 t(l, m, n);
        std::normal_distribution<double> dist;
        for (double& v : t.data_) v = dist(rng);
        return t;
    }

    Index rows() const { return l_; }
    Index cols() const { return m_; }
    Index tubes() const { return n_; }
    Index size() const { return static_cast<Index>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
    double operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

    MatrixMap slice(Index k) { return MatrixMap(data_.data() + k * l_ * m_, l_, m_); }
    ConstMatrixMap slice(Index k) const { return ConstMatrixMap(data_.data() + k * l_ * m_, l_, m_); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    /// Lateral slices [j0, j0+count) as an l x count x n tensor.
    Tensor3 lateral_block(Index j0, Index count) const {
        Tensor3 out(l_, count, n_);
        for (Index k = 0; k < n_; ++k)
            out.slice(k) = slice(k).middleCols(j0, count);
        return out;
    }

    Tensor3 lateral(Index j) const { return lateral_block(j, 1); }

    void set_lateral(Index j, const Tensor3& col) {
        for (Index k = 0; k < n_; ++k)
            slice(k).col(j) = col.slice(k).col(0);
    }

    /// The (i,j) mode-3 fiber as a tube.
    Tensor3 tube_at(Index i, Index j) const {
        Tensor3 t(1, 1, n_);
        for (Index k = 0; k < n_; ++k) t(0, 0, k) = (*this)(i, j, k);
        return t;
    }

    Tensor3& operator+=(const Tensor3& o) {
        require_same_shape(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor3& operator-=(const Tensor3& o) {
        require_same_shape(o);
        for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor3& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
    friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

    bool same_shape(const Tensor3& o) const { return l_ == o.l_ && m_ == o.m_ && n_ == o.n_; }

    std::string shape_str() const {
        return std::to_string(l_) + "x" + std::to_string(m_) + "x" + std::to_string(n_);
    }

private:
    static Index check_dims(Index l, Index m, Index n) {
        if (l < 1 || m < 1 || n < 1)
            throw std::invalid_argument("Tensor3: dimensions must be positive");
        return l * m * n;
    }

    Index offset(Index i, Index j, Index k) const { return k * l_ * m_ + j * l_ + i; }

    void require_same_shape(const Tensor3& o) const {
        if (!same_shape(o))
            throw std::invalid_argument("Tensor3 shape mismatch: " + shape_str() + " vs " + o.shape_str());
    }

    Index l_ = 0, m_ = 0, n_ = 0;
    std::vector<double> data_;
};

/// An l x 1 x n tensor column.
using LateralSlice = Tensor3;
/// A 1 x 1 x n tubal scalar.
using Tube = Tensor3;

/// T3D1 binary container: magic "T3D1", then l, m, n as little-endian
/// uint64, then l*m*n little-endian doubles in frontal-slice-major order.
void save_t3d1(const Tensor3& t, const std::string& path);
Tensor3 load_t3d1(const std::string& path);

}  // namespace tla
