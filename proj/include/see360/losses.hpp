#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "see360/ops.hpp"

namespace see360 {

/// Weights of the generator objective. A zero weight removes its term.
struct LossWeights {
    double ssim = 1.0;
    double pd = 1.0;
    double feat = 10.0;
    double lap = 1.0;

    void validate() const;
};

/// Windowed SSIM with an 11x11 Gaussian window (sigma 1.5), valid windows
/// only, constants C1 = 0.01^2 and C2 = 0.03^2 for unit dynamic range; the
/// mean over windows, channels and batch.
template <typename Scalar>
Tensor<Scalar> ssim(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Burt-Adelson pyramid: blur with the 5-tap binomial kernel, replicate edges,
/// keep every other sample. Band l is G_l - up(G_{l+1}); the loss is
/// sum_l 2^l * mean|band_l(a) - band_l(b)| over l in [0, levels).
template <typename Scalar>
Tensor<Scalar> laplacian_loss(const Tensor<Scalar>& a, const Tensor<Scalar>& b, int levels = 3);

template <typename Scalar>
std::vector<Tensor<Scalar>> laplacian_bands(const Tensor<Scalar>& x, int levels);

/// Fixed random convolutional feature stack standing in for a pretrained
/// perceptual network: four 3x3 conv + ReLU stages with bilinear x2
/// downsampling between them, tapped after the fourth convolution.
template <typename Scalar>
class FeatureExtractor {
public:
    explicit FeatureExtractor(std::uint64_t seed, std::vector<int> widths = {16, 32, 32, 32});

    Tensor<Scalar> operator()(const Tensor<Scalar>& image) const;
    std::uint64_t seed() const { return seed_; }
    const std::vector<Tensor<Scalar>>& kernels() const { return kernels_; }

private:
    std::uint64_t seed_;
    std::vector<Tensor<Scalar>> kernels_;
};

/// Per-channel 1D Wasserstein-1 between the empirical distributions of two
/// [N,C,H,W] tensors (sort, mean |difference|), summed over channels and
/// averaged over the batch.
template <typename Scalar>
Tensor<Scalar> sliced_wasserstein(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

template <typename Scalar>
Tensor<Scalar> pd_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& gt, const FeatureExtractor<Scalar>& phi);

/// (1/C) * sum over layers of mean |real - fake|.
template <typename Scalar>
Tensor<Scalar> feat_match_loss(const std::vector<Tensor<Scalar>>& real, const std::vector<Tensor<Scalar>>& fake);

enum class AdvConvention {
    /// D: -1/2 mean[log D(real) + log(1 - D(fake))]; G: -mean log D(fake).
    NonSaturating,
    /// Same D loss; G minimizes mean log(1 - D(fake)).
    Saturating,
};

template <typename Scalar>
struct AdvLosses {
    Tensor<Scalar> d;
    Tensor<Scalar> g;
};

/// Logistic GAN losses from raw score maps (D = sigmoid(score)).
template <typename Scalar>
AdvLosses<Scalar> adv_losses(const Tensor<Scalar>& score_real, const Tensor<Scalar>& score_fake,
                             AdvConvention convention = AdvConvention::NonSaturating);
/// Discriminator half only; evaluates without a fake-side generator graph.
template <typename Scalar>
Tensor<Scalar> adv_loss_d(const Tensor<Scalar>& score_real, const Tensor<Scalar>& score_fake);
template <typename Scalar>
Tensor<Scalar> adv_loss_g(const Tensor<Scalar>& score_fake, AdvConvention convention = AdvConvention::NonSaturating);

template <typename Scalar>
struct GeneratorLossParts {
    Tensor<Scalar> adv;
    Tensor<Scalar> ssim;  // similarity, not 1 - similarity
    Tensor<Scalar> pd;
    Tensor<Scalar> feat;
    Tensor<Scalar> lap;
};

/// adv + w.ssim (1 - ssim) + w.pd pd + w.feat feat + w.lap lap. Terms with a
/// zero weight are skipped entirely, so they contribute no gradient.
template <typename Scalar>
Tensor<Scalar> total_generator_loss(const GeneratorLossParts<Scalar>& parts, const LossWeights& w);

/// 10 log10(1 / MSE) over the interior left after dropping `border` pixels
/// on every side. Identical interiors give +infinity.
template <typename Scalar>
double psnr(const Tensor<Scalar>& a, const Tensor<Scalar>& b, int border = 8);

/// SSIM over the same border-excluded interior.
template <typename Scalar>
double ssim_metric(const Tensor<Scalar>& a, const Tensor<Scalar>& b, int border = 8);

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

}  // namespace see360
