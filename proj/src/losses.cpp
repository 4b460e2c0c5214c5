#include "see360/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace see360 {

void LossWeights::validate() const
{
    for (double w : {ssim, pd, feat, lap})
        if (!std::isfinite(w) || w < 0)
            throw std::invalid_argument("loss weights must be finite and non-negative");
}

namespace {

template <typename S>
Tensor<S> as_nchw(const Tensor<S>& x)
{
    if (x.rank() == 4)
        return x;
    if (x.rank() == 3)
        return reshape(x, {1, x.dim(0), x.dim(1), x.dim(2)});
    throw ShapeError("expected [C,H,W] or [N,C,H,W], got " + to_string(x.shape()));
}

const std::vector<double>& ssim_window()
{
    static const std::vector<double> taps = gaussian_taps(kSsimWindow, kSsimSigma);
    return taps;
}

const std::vector<double>& binomial5()
{
    static const std::vector<double> taps{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    return taps;
}

}  // namespace

template <typename S>
Tensor<S> ssim(const Tensor<S>& a_in, const Tensor<S>& b_in)
{
    if (a_in.shape() != b_in.shape())
        throw ShapeError("ssim: shape mismatch " + to_string(a_in.shape()) + " vs " + to_string(b_in.shape()));
    const auto a = as_nchw(a_in);
    const auto b = as_nchw(b_in);
    const auto& w = ssim_window();
    auto blur = [&](const Tensor<S>& x) { return filter2d_separable(x, w, Padding::Valid); };
    const S c1 = static_cast<S>(kSsimC1);
    const S c2 = static_cast<S>(kSsimC2);

    const auto mu_a = blur(a);
    const auto mu_b = blur(b);
    const auto mu_aa = mu_a * mu_a;
    const auto mu_bb = mu_b * mu_b;
    const auto mu_ab = mu_a * mu_b;
    const auto var_a = blur(a * a) - mu_aa;
    const auto var_b = blur(b * b) - mu_bb;
    const auto cov = blur(a * b) - mu_ab;
    const auto num = (mu_ab * S(2) + c1) * (cov * S(2) + c2);
    const auto den = (mu_aa + mu_bb + c1) * (var_a + var_b + c2);
    return mean(num / den);
}

template <typename S>
std::vector<Tensor<S>> laplacian_bands(const Tensor<S>& x_in, int levels)
{
    const auto x = as_nchw(x_in);
    if (levels < 1)
        throw std::invalid_argument("laplacian pyramid needs at least one level");
    const Index div = Index(1) << levels;
    if (x.dim(2) % div || x.dim(3) % div)
        throw ShapeError("laplacian pyramid: extents of " + to_string(x.shape()) + " not divisible by " +
                         std::to_string(div));
    std::vector<Tensor<S>> bands;
    Tensor<S> g = x;
    for (int l = 0; l < levels; ++l) {
        auto next = decimate_x2(filter2d_separable(g, binomial5(), Padding::Replicate));
        bands.push_back(g - upsample_bilinear_x2(next));
        g = next;
    }
    return bands;
}

template <typename S>
Tensor<S> laplacian_loss(const Tensor<S>& a, const Tensor<S>& b, int levels)
{
    if (a.shape() != b.shape())
        throw ShapeError("laplacian_loss: shape mismatch");
    const auto ba = laplacian_bands(a, levels);
    const auto bb = laplacian_bands(b, levels);
    Tensor<S> total = mean(abs(ba[0] - bb[0]));
    for (int l = 1; l < levels; ++l)
        total = total + mean(abs(ba[l] - bb[l])) * static_cast<S>(std::ldexp(1.0, l));
    return total;
}

template <typename S>
FeatureExtractor<S>::FeatureExtractor(std::uint64_t seed, std::vector<int> widths) : seed_(seed)
{
    if (widths.size() != 4)
        throw std::invalid_argument("feature extractor has exactly four stages");
    std::mt19937_64 rng(seed);
    Index in = 3;
    for (int w : widths) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in * 9)));
        Buffer<S> v(static_cast<Index>(w) * in * 9);
        for (Index i = 0; i < v.size(); ++i)
            v[i] = static_cast<S>(dist(rng));
        kernels_.emplace_back(Shape{w, in, 3, 3}, std::move(v));
        in = w;
    }
}

template <typename S>
Tensor<S> FeatureExtractor<S>::operator()(const Tensor<S>& image) const
{
    Tensor<S> x = as_nchw(image);
    for (std::size_t i = 0; i < kernels_.size(); ++i) {
        if (i > 0)
            x = downsample_bilinear_x2(x);
        x = relu(conv2d(x, kernels_[i], 1, 1));
    }
    return x;
}

template <typename S>
Tensor<S> sliced_wasserstein(const Tensor<S>& a_in, const Tensor<S>& b_in)
{
    if (a_in.shape() != b_in.shape())
        throw ShapeError("sliced_wasserstein: shape mismatch");
    const auto a = as_nchw(a_in);
    const auto b = as_nchw(b_in);
    const Index N = a.dim(0), C = a.dim(1), M = a.dim(2) * a.dim(3);
    if (M == 0 || N == 0)
        throw ShapeError("sliced_wasserstein of empty distributions");

    // Sorted orders per (sample, channel); index tie-break keeps it deterministic.
    std::vector<Index> order_a(static_cast<std::size_t>(N * C * M)), order_b(order_a.size());
    auto sort_plane = [M](const S* v, Index* idx) {
        std::iota(idx, idx + M, Index(0));
        std::stable_sort(idx, idx + M, [v](Index i, Index j) { return v[i] < v[j]; });
    };
    double total = 0;
    for (Index p = 0; p < N * C; ++p) {
        const S* va = a.data().data() + p * M;
        const S* vb = b.data().data() + p * M;
        Index* ia = order_a.data() + p * M;
        Index* ib = order_b.data() + p * M;
        sort_plane(va, ia);
        sort_plane(vb, ib);
        double acc = 0;
        for (Index i = 0; i < M; ++i)
            acc += std::abs(static_cast<double>(va[ia[i]]) - static_cast<double>(vb[ib[i]]));
        total += acc / static_cast<double>(M);
    }
    Buffer<S> v(1);
    v[0] = static_cast<S>(total / static_cast<double>(N));

    return Tensor<S>::from_op({}, std::move(v), {&a, &b},
                              [a, b, N, C, M, order_a = std::move(order_a), order_b = std::move(order_b)](
                                  const Buffer<S>& g) {
                                  const S scale = g[0] / static_cast<S>(M * N);
                                  S* ga = a.requires_grad() ? a.node()->grad_buffer().data() : nullptr;
                                  S* gb = b.requires_grad() ? b.node()->grad_buffer().data() : nullptr;
                                  for (Index p = 0; p < N * C; ++p) {
                                      const S* va = a.data().data() + p * M;
                                      const S* vb = b.data().data() + p * M;
                                      const Index* ia = order_a.data() + p * M;
                                      const Index* ib = order_b.data() + p * M;
                                      for (Index i = 0; i < M; ++i) {
                                          const S d = va[ia[i]] - vb[ib[i]];
                                          const S sgn = d > 0 ? S(1) : (d < 0 ? S(-1) : S(0));
                                          if (ga)
                                              ga[p * M + ia[i]] += sgn * scale;
                                          if (gb)
                                              gb[p * M + ib[i]] -= sgn * scale;
                                      }
                                  }
                              });
}

template <typename S>
Tensor<S> pd_loss(const Tensor<S>& pred, const Tensor<S>& gt, const FeatureExtractor<S>& phi)
{
    if (pred.shape() != gt.shape())
        throw ShapeError("pd_loss: shape mismatch");
    return sliced_wasserstein(phi(pred), phi(gt));
}

template <typename S>
Tensor<S> feat_match_loss(const std::vector<Tensor<S>>& real, const std::vector<Tensor<S>>& fake)
{
    if (real.size() != fake.size() || real.empty())
        throw ShapeError("feat_match_loss: feature lists differ in length or are empty");
    Tensor<S> total;
    for (std::size_t i = 0; i < real.size(); ++i) {
        if (real[i].shape() != fake[i].shape())
            throw ShapeError("feat_match_loss: layer " + std::to_string(i) + " shape mismatch");
        auto term = mean(abs(real[i] - fake[i]));
        total = i == 0 ? term : total + term;
    }
    return total * (S(1) / static_cast<S>(real.size()));
}

template <typename S>
Tensor<S> adv_loss_d(const Tensor<S>& score_real, const Tensor<S>& score_fake)
{
    // -log sigmoid(x) = softplus(-x); -log(1 - sigmoid(x)) = softplus(x).
    return (mean(softplus(-score_real)) + mean(softplus(score_fake))) * S(0.5);
}

template <typename S>
Tensor<S> adv_loss_g(const Tensor<S>& score_fake, AdvConvention convention)
{
    if (convention == AdvConvention::NonSaturating)
        return mean(softplus(-score_fake));
    return -mean(softplus(score_fake));
}

template <typename S>
AdvLosses<S> adv_losses(const Tensor<S>& score_real, const Tensor<S>& score_fake, AdvConvention convention)
{
    if (score_real.shape() != score_fake.shape())
        throw ShapeError("adv_losses: score maps differ in shape");
    return {adv_loss_d(score_real, score_fake), adv_loss_g(score_fake, convention)};
}

template <typename S>
Tensor<S> total_generator_loss(const GeneratorLossParts<S>& parts, const LossWeights& w)
{
    w.validate();
    Tensor<S> total = parts.adv;
    if (w.ssim > 0)
        total = total + (-parts.ssim + S(1)) * static_cast<S>(w.ssim);
    if (w.pd > 0)
        total = total + parts.pd * static_cast<S>(w.pd);
    if (w.feat > 0)
        total = total + parts.feat * static_cast<S>(w.feat);
    if (w.lap > 0)
        total = total + parts.lap * static_cast<S>(w.lap);
    return total;
}

template <typename S>
double psnr(const Tensor<S>& a_in, const Tensor<S>& b_in, int border)
{
    if (a_in.shape() != b_in.shape())
        throw ShapeError("psnr: shape mismatch");
    const auto a = as_nchw(a_in);
    const auto b = as_nchw(b_in);
    const Index N = a.dim(0), C = a.dim(1), H = a.dim(2), W = a.dim(3);
    const Index h = H - 2 * border, w = W - 2 * border;
    if (border < 0 || h <= 0 || w <= 0)
        throw ShapeError("psnr: nothing left after excluding a " + std::to_string(border) + "-pixel border");
    double se = 0;
    for (Index p = 0; p < N * C; ++p)
        for (Index y = border; y < H - border; ++y)
            for (Index x = border; x < W - border; ++x) {
                const Index i = (p * H + y) * W + x;
                const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
                se += d * d;
            }
    const double mse = se / static_cast<double>(N * C * h * w);
    if (mse == 0)
        return kPsnrIdentical;
    return 10.0 * std::log10(1.0 / mse);
}

template <typename S>
double ssim_metric(const Tensor<S>& a_in, const Tensor<S>& b_in, int border)
{
    NoGradGuard no_grad;
    const auto a = as_nchw(a_in);
    const auto b = as_nchw(b_in);
    if (a.shape() != b.shape())
        throw ShapeError("ssim: shape mismatch");
    const Index h = a.dim(2) - 2 * border, w = a.dim(3) - 2 * border;
    if (border < 0 || h < kSsimWindow || w < kSsimWindow)
        throw ShapeError("ssim: interior smaller than the window after border exclusion");
    return static_cast<double>(ssim(crop(a, border, border, h, w), crop(b, border, border, h, w)).item());
}

#define SEE360_INSTANTIATE_LOSSES(S)                                                                  \
    template Tensor<S> ssim(const Tensor<S>&, const Tensor<S>&);                                      \
    template std::vector<Tensor<S>> laplacian_bands(const Tensor<S>&, int);                           \
    template Tensor<S> laplacian_loss(const Tensor<S>&, const Tensor<S>&, int);                       \
    template class FeatureExtractor<S>;                                                               \
    template Tensor<S> sliced_wasserstein(const Tensor<S>&, const Tensor<S>&);                        \
    template Tensor<S> pd_loss(const Tensor<S>&, const Tensor<S>&, const FeatureExtractor<S>&);       \
    template Tensor<S> feat_match_loss(const std::vector<Tensor<S>>&, const std::vector<Tensor<S>>&); \
    template Tensor<S> adv_loss_d(const Tensor<S>&, const Tensor<S>&);                                \
    template Tensor<S> adv_loss_g(const Tensor<S>&, AdvConvention);                                   \
    template AdvLosses<S> adv_losses(const Tensor<S>&, const Tensor<S>&, AdvConvention);              \
    template Tensor<S> total_generator_loss(const GeneratorLossParts<S>&, const LossWeights&);        \
    template double psnr(const Tensor<S>&, const Tensor<S>&, int);                                    \
    template double ssim_metric(const Tensor<S>&, const Tensor<S>&, int);

SEE360_INSTANTIATE_LOSSES(float)
SEE360_INSTANTIATE_LOSSES(double)

}  // namespace see360
