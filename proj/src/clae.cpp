#include "see360/clae.hpp"

#include <algorithm>
#include <cmath>

namespace see360 {

std::string AngleCode::bits() const
{
    std::string s;
    s.reserve(onehot.size());
    for (auto b : onehot)
        s.push_back(b ? '1' : '0');
    return s;
}

AngleCode digitize_angle(double theta_deg, double tau_deg, int delta)
{
    if (delta < 1)
        throw std::invalid_argument("angle code length must be at least 1");
    if (!(tau_deg > 0))
        throw std::invalid_argument("reference interval must be positive");
    if (!(theta_deg >= 0 && theta_deg < tau_deg))
        throw AngleRangeError("target angle " + std::to_string(theta_deg) + " outside [0, " +
                              std::to_string(tau_deg) + ")");
    AngleCode code;
    code.theta_deg = theta_deg;
    code.tau_deg = tau_deg;
    code.delta = delta;
    // theta*delta/tau is exact for integral degree inputs; the small bias
    // keeps e.g. 25*12/60 from landing a hair below 5.
    const double scaled = theta_deg * static_cast<double>(delta) / tau_deg;
    code.index = std::clamp(static_cast<int>(std::floor(scaled + 1e-9)), 0, delta - 1);
    code.onehot.assign(static_cast<std::size_t>(delta), 0);
    code.onehot[static_cast<std::size_t>(code.index)] = 1;
    return code;
}

template <typename Scalar>
Tensor<Scalar> onehot_batch(std::span<const AngleCode> codes)
{
    if (codes.empty())
        throw std::invalid_argument("onehot_batch of no codes");
    const Index delta = codes.front().delta;
    Buffer<Scalar> v = Buffer<Scalar>::Zero(static_cast<Index>(codes.size()) * delta);
    for (std::size_t n = 0; n < codes.size(); ++n) {
        if (codes[n].delta != delta)
            throw ShapeError("onehot_batch: mixed code lengths");
        v[static_cast<Index>(n) * delta + codes[n].index] = Scalar(1);
    }
    return Tensor<Scalar>({static_cast<Index>(codes.size()), delta}, std::move(v));
}

namespace {

template <typename Scalar>
Tensor<Scalar> cross_patch_corr_nchw(const Tensor<Scalar>& X, const Tensor<Scalar>& Y, int P)
{
    if (X.shape() != Y.shape())
        throw ShapeError("cross_patch_corr: operands differ " + to_string(X.shape()) + " vs " + to_string(Y.shape()));
    const Index N = X.dim(0), C = X.dim(1), H = X.dim(2), W = X.dim(3);
    if (P < 1 || H % P != 0 || W % P != 0)
        throw ShapeError("cross_patch_corr: patch size " + std::to_string(P) + " does not divide " +
                         std::to_string(H) + "x" + std::to_string(W));
    const Index o = P / 2;
    const Index PP = static_cast<Index>(P) * P;

    // Sum of all patches, per channel: the patch convolutions are linear, so
    // summing their responses equals one convolution with the summed patch.
    Buffer<Scalar> K = Buffer<Scalar>::Zero(N * C * PP);
    const Scalar* x = X.data().data();
    for (Index n = 0; n < N; ++n)
        for (Index c = 0; c < C; ++c) {
            const Scalar* plane = x + (n * C + c) * H * W;
            Scalar* k = K.data() + (n * C + c) * PP;
            for (Index y = 0; y < H; ++y)
                for (Index xx = 0; xx < W; ++xx)
                    k[(y % P) * P + (xx % P)] += plane[y * W + xx];
        }

    Buffer<Scalar> out = Buffer<Scalar>::Zero(N * H * W);
    const Scalar* yd = Y.data().data();
    for (Index n = 0; n < N; ++n)
        for (Index c = 0; c < C; ++c) {
            const Scalar* plane = yd + (n * C + c) * H * W;
            const Scalar* k = K.data() + (n * C + c) * PP;
            Scalar* s = out.data() + n * H * W;
            for (Index a = 0; a < P; ++a)
                for (Index b = 0; b < P; ++b) {
                    const Scalar w = k[a * P + b];
                    for (Index i = 0; i < H; ++i) {
                        const Index yy = i - a + o;
                        if (yy < 0 || yy >= H)
                            continue;
                        for (Index j = 0; j < W; ++j) {
                            const Index xx = j - b + o;
                            if (xx >= 0 && xx < W)
                                s[i * W + j] += w * plane[yy * W + xx];
                        }
                    }
                }
        }

    return Tensor<Scalar>::from_op(
        {N, 1, H, W}, std::move(out), {&X, &Y}, [X, Y, K, N, C, H, W, P, o, PP](const Buffer<Scalar>& g) {
            const bool need_x = X.requires_grad();
            const bool need_y = Y.requires_grad();
            const Scalar* yd = Y.data().data();
            Buffer<Scalar> dk(PP);
            for (Index n = 0; n < N; ++n) {
                const Scalar* gs = g.data() + n * H * W;
                for (Index c = 0; c < C; ++c) {
                    const Scalar* plane = yd + (n * C + c) * H * W;
                    const Scalar* k = K.data() + (n * C + c) * PP;
                    dk.setZero();
                    Scalar* gy = need_y ? Y.node()->grad_buffer().data() + (n * C + c) * H * W : nullptr;
                    for (Index a = 0; a < P; ++a)
                        for (Index b = 0; b < P; ++b) {
                            Scalar acc = 0;
                            for (Index i = 0; i < H; ++i) {
                                const Index yy = i - a + o;
                                if (yy < 0 || yy >= H)
                                    continue;
                                for (Index j = 0; j < W; ++j) {
                                    const Index xx = j - b + o;
                                    if (xx < 0 || xx >= W)
                                        continue;
                                    acc += gs[i * W + j] * plane[yy * W + xx];
                                    if (gy)
                                        gy[yy * W + xx] += gs[i * W + j] * k[a * P + b];
                                }
                            }
                            dk[a * P + b] = acc;
                        }
                    if (need_x) {
                        Scalar* gx = X.node()->grad_buffer().data() + (n * C + c) * H * W;
                        for (Index y = 0; y < H; ++y)
                            for (Index xx = 0; xx < W; ++xx)
                                gx[y * W + xx] += dk[(y % P) * P + (xx % P)];
                    }
                }
            }
        });
}

}  // namespace

template <typename Scalar>
CorrespondenceMap<Scalar> cross_patch_corr(const Tensor<Scalar>& source, const Tensor<Scalar>& target, int patch,
                                           Direction direction)
{
    if (source.rank() == 3) {
        const Shape s = source.shape();
        auto r = cross_patch_corr_nchw(reshape(source, {1, s[0], s[1], s[2]}),
                                       reshape(target, {1, s[0], s[1], s[2]}), patch);
        return {reshape(r, {s[1], s[2]}), direction};
    }
    if (source.rank() != 4)
        throw ShapeError("cross_patch_corr expects [C,H,W] or [N,C,H,W], got " + to_string(source.shape()));
    return {cross_patch_corr_nchw(source, target, patch), direction};
}

template <typename Scalar>
ConditionEncoder<Scalar> ConditionEncoder<Scalar>::make(int delta, int width, std::mt19937_64& rng)
{
    ConditionEncoder e;
    e.fc1 = Linear<Scalar>::make(delta, width, rng);
    e.fc2 = Linear<Scalar>::make(width, width, rng);
    e.fc3 = Linear<Scalar>::make(width, width, rng);
    e.mu_head = Linear<Scalar>::make(width, width, rng);
    e.sigma_head = Linear<Scalar>::make(width, width, rng);
    return e;
}

template <typename Scalar>
ConditionVector<Scalar> ConditionEncoder<Scalar>::operator()(const Tensor<Scalar>& onehot) const
{
    auto z = relu(fc3(relu(fc2(relu(fc1(onehot))))));
    return {z, mu_head(z), sigma_head(z)};
}

template <typename Scalar>
void ConditionEncoder<Scalar>::collect(NamedParams<Scalar>& out, const std::string& prefix)
{
    fc1.collect(out, prefix + ".fc1");
    fc2.collect(out, prefix + ".fc2");
    fc3.collect(out, prefix + ".fc3");
    mu_head.collect(out, prefix + ".mu");
    sigma_head.collect(out, prefix + ".sigma");
}

template <typename Scalar>
Tensor<Scalar> modulate(const Tensor<Scalar>& g, const ConditionVector<Scalar>& cond)
{
    if (g.shape() != cond.mu.shape() || g.shape() != cond.sigma.shape())
        throw ShapeError("modulate: g " + to_string(g.shape()) + " vs condition " + to_string(cond.mu.shape()));
    return g * (cond.sigma + Scalar(1)) + cond.mu;
}

template <typename Scalar>
std::vector<Tensor<Scalar>> affine_from_raw(const Tensor<Scalar>& raw, int scales, bool translation_locked)
{
    if (raw.rank() != 2 || raw.dim(1) != 6 * scales)
        throw ShapeError("affine_from_raw: expected [N," + std::to_string(6 * scales) + "], got " +
                         to_string(raw.shape()));
    const Index N = raw.dim(0);
    Buffer<Scalar> ident(N * 6), mask(N * 6);
    for (Index n = 0; n < N; ++n) {
        ident.segment(n * 6, 6) << 1, 0, 0, 0, 1, 0;
        mask.segment(n * 6, 6) << 1, 1, 0, 1, 1, 0;
    }
    const Tensor<Scalar> identity({N, 2, 3}, ident);
    const Tensor<Scalar> lock_mask({N, 2, 3}, mask);
    std::vector<Tensor<Scalar>> out;
    for (int j = 0; j < scales; ++j) {
        auto delta = reshape(slice_cols(raw, 6 * j, 6), {N, 2, 3});
        if (translation_locked)
            delta = delta * lock_mask;
        out.push_back(delta + identity);
    }
    return out;
}

template <typename Scalar>
AffineHead<Scalar> AffineHead<Scalar>::make(int width, int scales, bool translation_locked, std::mt19937_64& rng)
{
    AffineHead h;
    h.fc1 = Linear<Scalar>::make(width, width, rng);
    h.fc2 = {zero_param<Scalar>({6 * scales, width}), zero_param<Scalar>({6 * scales})};
    h.scales = scales;
    h.translation_locked = translation_locked;
    return h;
}

template <typename Scalar>
std::vector<Tensor<Scalar>> AffineHead<Scalar>::operator()(const Tensor<Scalar>& h) const
{
    return affine_from_raw(fc2(relu(fc1(h))), scales, translation_locked);
}

template <typename Scalar>
void AffineHead<Scalar>::collect(NamedParams<Scalar>& out, const std::string& prefix)
{
    fc1.collect(out, prefix + ".fc1");
    fc2.collect(out, prefix + ".fc2");
}

template <typename Scalar>
AffineParams<Scalar> affine_at(const Tensor<Scalar>& theta, Index n, bool translation_locked)
{
    if (theta.rank() != 3 || theta.dim(1) != 2 || theta.dim(2) != 3 || n < 0 || n >= theta.dim(0))
        throw ShapeError("affine_at: bad transform tensor or index");
    typename AffineParams<Scalar>::Matrix m;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            m(r, c) = theta[n * 6 + r * 3 + c];
    return AffineParams<Scalar>(m, translation_locked);
}

#define SEE360_INSTANTIATE_CLAE(S)                                                                         \
    template Tensor<S> onehot_batch<S>(std::span<const AngleCode>);                                        \
    template CorrespondenceMap<S> cross_patch_corr(const Tensor<S>&, const Tensor<S>&, int, Direction);    \
    template struct ConditionEncoder<S>;                                                                   \
    template Tensor<S> modulate(const Tensor<S>&, const ConditionVector<S>&);                              \
    template std::vector<Tensor<S>> affine_from_raw(const Tensor<S>&, int, bool);                          \
    template struct AffineHead<S>;                                                                         \
    template AffineParams<S> affine_at(const Tensor<S>&, Index, bool);

SEE360_INSTANTIATE_CLAE(float)
SEE360_INSTANTIATE_CLAE(double)

}  // namespace see360
