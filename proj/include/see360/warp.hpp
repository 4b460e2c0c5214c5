#pragma once

#include <Eigen/Core>

#include "see360/tensor.hpp"

namespace see360 {

// Coordinates are normalized with align-corners semantics: the centers of the
// first and last pixel along an axis sit at -1 and +1. A transform maps an
// output location (x, y, 1) to the input location it samples from.

/// 2x3 planar transform [[a, b, tx], [c, d, ty]].
template <typename Scalar>
class AffineParams {
public:
    using Matrix = Eigen::Matrix<Scalar, 2, 3>;

    AffineParams() : AffineParams(identity_matrix(), true) {}
    /// Locking discards the translation column; non-finite entries are rejected.
    AffineParams(const Matrix& m, bool translation_locked);

    static AffineParams identity(bool translation_locked = true)
    {
        return AffineParams(identity_matrix(), translation_locked);
    }
    static Matrix identity_matrix();

    const Matrix& matrix() const { return m_; }
    bool translation_locked() const { return locked_; }

    /// Transform equivalent to warping by `inner` and then by `outer`.
    static AffineParams compose(const AffineParams& inner, const AffineParams& outer);

    /// As a constant [2,3] tensor.
    Tensor<Scalar> to_tensor() const;

private:
    Matrix m_;
    bool locked_;
};

/// Sampling grid for theta of shape [2,3] (-> [H,W,2]) or [N,2,3]
/// (-> [N,H,W,2]); the last axis holds (x, y). Differentiable in theta.
template <typename Scalar>
Tensor<Scalar> affine_grid(const Tensor<Scalar>& theta, Index height, Index width);
template <typename Scalar>
Tensor<Scalar> affine_grid(const AffineParams<Scalar>& t, Index height, Index width);

/// Bilinear sampling of [N,C,H,W] features at grid locations ([Ho,Wo,2] shared by
/// the batch, or [N,Ho,Wo,2]). Taps that fall outside the map read zero.
template <typename Scalar>
Tensor<Scalar> grid_sample_bilinear(const Tensor<Scalar>& features, const Tensor<Scalar>& grid);

template <typename Scalar>
Tensor<Scalar> warp_affine(const Tensor<Scalar>& features, const AffineParams<Scalar>& t);
/// Per-sample transforms, theta of shape [N,2,3].
template <typename Scalar>
Tensor<Scalar> warp_affine(const Tensor<Scalar>& features, const Tensor<Scalar>& theta);

extern template class AffineParams<float>;
extern template class AffineParams<double>;

}  // namespace see360
