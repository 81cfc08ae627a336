#pragma once

#include "tla/tcore.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace tla {

/// Gaussian blur operator parameters: frontal slices are A(i,1) * A with A
/// the banded symmetric Toeplitz built from
/// z = [exp(-([0:band-1].^2)/(2 sigma^2)), zeros] / (sigma * sqrt(2 pi)).
struct BlurSpec {
    Index n_size = 0;
    double sigma = 3.0;
    Index band = 9;
};

/// The banded Gaussian Toeplitz matrix A itself.
Eigen::MatrixXd blur_matrix(const BlurSpec& spec);

/// N x N x N blur tensor with slice i = A(i,1) * A.
Tensor3 blur_tensor(const BlurSpec& spec);

/// Variant with circularly mirrored slice weights w_k = A(min(k, N-k)+1, 1),
/// which makes the tensor symmetric under the t-product (Hermitian spectral
/// slices) so the symmetric-only methods apply.
Tensor3 blur_tensor_symmetric(const BlurSpec& spec);

/// Decoupled symmetric variant: the mirrored tube weights come from a second
/// (typically milder) Gaussian kernel, normalized so frontal slice 0 equals
/// blur_matrix(spec). Keeps every spectral weight bounded well away from
/// zero, so restoration across tubes stays feasible while blur_matrix(spec)
/// carries the ill-posedness.
Tensor3 blur_tensor_symmetric(const BlurSpec& spec, const BlurSpec& tube_spec);

/// Symmetric prolate Toeplitz matrix: a_0 = 2w, a_k = sin(2 pi w k)/(pi k).
Eigen::MatrixXd prolate_matrix(Index n, double w);

/// Slice i = A_1(i,1) * inner, with A_1 = prolate_matrix(n, w); this folds
/// the first block column of A_1 (x) inner into an n x n x n tensor.
Tensor3 prolate_slices(Index n, double w, const Eigen::MatrixXd& inner);

/// Reads a matrix stored as a single-slice T3D1 container.
Eigen::MatrixXd load_matrix_fixture(const std::string& path);

struct NoiseSpec {
    double level = 0.0;  // relative noise level
    uint64_t seed = 0;
};

struct ProblemInstance {
    Tensor3 a;
    Tensor3 b;       // noisy data
    Tensor3 b_true;  // a * x_true
    Tensor3 x_true;
    std::vector<double> deltas;  // per lateral slice ||E_j||_F
    double delta = 0.0;          // ||E||_F
    std::string provenance;
};

/// Builds b_true = a * x_true and adds Gaussian noise scaled so that
/// ||E||_F = level * ||b_true||_F exactly.
ProblemInstance make_instance(const Tensor3& a, const Tensor3& x_true, const NoiseSpec& noise,
                              const std::string& tag = "custom");

/// Grayscale image as an l x 1 x n lateral slice, pixel (r, c) -> (r, 0, c),
/// values scaled to [0, 1]. A 3-channel image becomes l x 3 x n.
LateralSlice image_to_slice(const std::string& path);
Tensor3 image_to_tensor(const std::string& path);

/// Inverse map: clamps to [0, 1] and quantizes to 8 bits. One lateral slice
/// writes a graymap (P5), three write a pixmap (P6).
void tensor_to_image(const Tensor3& x, const std::string& path);

/// Ordered directory of graymaps (frame_0000.pgm, frame_0001.pgm, ...), one
/// lateral slice per frame.
Tensor3 frames_to_tensor(const std::string& dir);
void tensor_to_frames(const Tensor3& x, const std::string& dir);

}  // namespace tla
