#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "see360/layers.hpp"
#include "see360/warp.hpp"

namespace see360 {

/// Target yaw relative to the left reference, digitized into one of `delta`
/// bins spanning the reference interval.
struct AngleCode {
    double theta_deg = 0;
    double tau_deg = 60;
    int delta = 12;
    int index = 0;
    std::vector<std::uint8_t> onehot;

    /// "0000001000000" style rendering of the one-hot vector.
    std::string bits() const;
};

class AngleRangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// index = floor(theta / tau * delta). Throws AngleRangeError unless
/// 0 <= theta < tau.
AngleCode digitize_angle(double theta_deg, double tau_deg, int delta);

/// Stacks one-hot codes into an [N, delta] tensor.
template <typename Scalar>
Tensor<Scalar> onehot_batch(std::span<const AngleCode> codes);

enum class Direction { LeftToRight, RightToLeft };

template <typename Scalar>
struct CorrespondenceMap {
    Tensor<Scalar> response;  // [N,1,H,W], or [H,W] for unbatched input
    Direction direction;
};

/// Cross-patch convolution. `source` is cut into (H/P)*(W/P) patches of PxP;
/// each patch is convolved with `target` (zero padded, offset P/2 so the
/// response keeps the HxW extent) and all responses are summed over patches
/// and channels:
///   S[i,j] = sum_patches sum_c sum_{a,b} x[c,a,b] * Y[c, i-a+P/2, j-b+P/2].
/// Accepts [C,H,W] or [N,C,H,W] operands.
template <typename Scalar>
CorrespondenceMap<Scalar> cross_patch_corr(const Tensor<Scalar>& source, const Tensor<Scalar>& target, int patch,
                                           Direction direction = Direction::LeftToRight);

template <typename Scalar>
struct ConditionVector {
    Tensor<Scalar> z;
    Tensor<Scalar> mu;
    Tensor<Scalar> sigma;
};

/// One-hot pose -> three ReLU fully connected layers -> z, with linear mu and
/// sigma heads.
template <typename Scalar>
struct ConditionEncoder {
    Linear<Scalar> fc1, fc2, fc3, mu_head, sigma_head;

    static ConditionEncoder make(int delta, int width, std::mt19937_64& rng);
    ConditionVector<Scalar> operator()(const Tensor<Scalar>& onehot) const;
    void collect(NamedParams<Scalar>& out, const std::string& prefix);
};

template <typename Scalar>
ConditionVector<Scalar> encode_condition(const ConditionEncoder<Scalar>& encoder, const Tensor<Scalar>& onehot)
{
    return encoder(onehot);
}

/// h = g * (1 + sigma) + mu.
template <typename Scalar>
Tensor<Scalar> modulate(const Tensor<Scalar>& g, const ConditionVector<Scalar>& cond);

/// Two fully connected layers from the modulated vector to `scales` 2x3
/// matrices, predicted as residuals on the identity. Raw outputs are read in
/// row-major order per matrix: a, b, tx, c, d, ty.
template <typename Scalar>
struct AffineHead {
    Linear<Scalar> fc1, fc2;
    int scales = 3;
    bool translation_locked = true;

    /// The output layer starts at zero so every predicted transform begins as
    /// the identity.
    static AffineHead make(int width, int scales, bool translation_locked, std::mt19937_64& rng);
    /// One [N,2,3] tensor per scale, finest last.
    std::vector<Tensor<Scalar>> operator()(const Tensor<Scalar>& h) const;
    void collect(NamedParams<Scalar>& out, const std::string& prefix);
};

/// Identity-anchored transforms from raw [N, 6*scales] values.
template <typename Scalar>
std::vector<Tensor<Scalar>> affine_from_raw(const Tensor<Scalar>& raw, int scales, bool translation_locked);

template <typename Scalar>
std::vector<Tensor<Scalar>> predict_affine(const AffineHead<Scalar>& head, const Tensor<Scalar>& h)
{
    return head(h);
}

/// Extracts sample n of an [N,2,3] transform tensor.
template <typename Scalar>
AffineParams<Scalar> affine_at(const Tensor<Scalar>& theta, Index n, bool translation_locked);

}  // namespace see360
