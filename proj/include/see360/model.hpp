#pragma once

#include <array>
#include <vector>

#include "see360/clae.hpp"
#include "see360/config.hpp"

namespace see360 {

/// Encoder features at 1/2, 1/4 and 1/8 resolution.
template <typename Scalar>
struct FeaturePyramid {
    std::array<Tensor<Scalar>, 3> levels;
};

/// Three shared downsampling units: 4x4 stride-2 conv, instance norm, leaky ReLU.
template <typename Scalar>
struct Encoder {
    std::array<Tensor<Scalar>, 3> kernels;

    static Encoder make(const ModelConfig& c, std::mt19937_64& rng);
    FeaturePyramid<Scalar> operator()(const Tensor<Scalar>& image, const ModelConfig& c) const;
    void collect(NamedParams<Scalar>& out, const std::string& prefix);
};

/// Everything the generator computes on the way to the image, for inspection.
template <typename Scalar>
struct GeneratorTrace {
    Tensor<Scalar> image;
    FeaturePyramid<Scalar> left_features, right_features;
    CorrespondenceMap<Scalar> left_to_right, right_to_left;
    ConditionVector<Scalar> condition;
    /// Coarse to fine; one entry when multi-scale warping is disabled.
    std::vector<Tensor<Scalar>> left_affine, right_affine;
};

template <typename Scalar>
class Generator {
public:
    static Generator make(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }

    FeaturePyramid<Scalar> encode(const Tensor<Scalar>& image) const;
    /// left/right: [N,3,H,W] in [0,1]; onehot: [N,delta].
    GeneratorTrace<Scalar> trace(const Tensor<Scalar>& left, const Tensor<Scalar>& right,
                                 const Tensor<Scalar>& onehot) const;
    Tensor<Scalar> generate(const Tensor<Scalar>& left, const Tensor<Scalar>& right,
                            const Tensor<Scalar>& onehot) const;

    /// Coarse-to-fine decoding. Transform lists run coarse to fine; missing
    /// entries (shorter or empty lists) leave that scale unwarped.
    Tensor<Scalar> msat_fuse(const FeaturePyramid<Scalar>& left, const FeaturePyramid<Scalar>& right,
                             const std::vector<Tensor<Scalar>>& left_affine,
                             const std::vector<Tensor<Scalar>>& right_affine) const;

    NamedParams<Scalar> parameters();

    Encoder<Scalar> encoder;
    Linear<Scalar> corr_fc;
    ConditionEncoder<Scalar> condition;
    AffineHead<Scalar> left_head, right_head;
    std::array<Tensor<Scalar>, 3> decoder;  // coarse to fine
    Tensor<Scalar> fuse1, fuse2, fuse2_bias;

private:
    ModelConfig config_;
};

template <typename Scalar>
struct DiscriminatorOutput {
    Tensor<Scalar> score;                  // [N,1,h,w] logits
    std::vector<Tensor<Scalar>> features;  // one per conv unit
};

/// Patch scorer over (image, left, right, seg). Scale 2 sees x2-downsampled inputs.
template <typename Scalar>
class Discriminator {
public:
    static Discriminator make(const ModelConfig& config, int scale, std::uint64_t seed);

    DiscriminatorOutput<Scalar> operator()(const Tensor<Scalar>& image, const Tensor<Scalar>& left,
                                           const Tensor<Scalar>& right, const Tensor<Scalar>& seg) const;

    int scale() const { return scale_; }
    NamedParams<Scalar> parameters();
    void set_trainable(bool on);

    std::array<Tensor<Scalar>, 3> kernels;
    Tensor<Scalar> projection, projection_bias;

private:
    ModelConfig config_;
    int scale_ = 1;
};

template <typename Scalar>
DiscriminatorOutput<Scalar> discriminate(const Discriminator<Scalar>& d, const Tensor<Scalar>& image,
                                         const Tensor<Scalar>& left, const Tensor<Scalar>& right,
                                         const Tensor<Scalar>& seg)
{
    return d(image, left, right, seg);
}

extern template class Generator<float>;
extern template class Generator<double>;
extern template class Discriminator<float>;
extern template class Discriminator<double>;

}  // namespace see360
