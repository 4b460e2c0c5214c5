#include "see360/warp.hpp"

#include <cmath>
#include <stdexcept>

namespace see360 {

namespace {

template <typename S>
S normalized_coord(Index i, Index extent)
{
    return extent > 1 ? S(-1) + S(2) * static_cast<S>(i) / static_cast<S>(extent - 1) : S(0);
}

template <typename S>
S to_pixel(S g, Index extent)
{
    return (g + S(1)) * static_cast<S>(extent - 1) / S(2);
}

}  // namespace

template <typename Scalar>
AffineParams<Scalar>::AffineParams(const Matrix& m, bool translation_locked) : m_(m), locked_(translation_locked)
{
    if (!m_.allFinite())
        throw std::invalid_argument("affine parameters must be finite");
    if (locked_)
        m_.col(2).setZero();
}

template <typename Scalar>
typename AffineParams<Scalar>::Matrix AffineParams<Scalar>::identity_matrix()
{
    Matrix m;
    m << 1, 0, 0, 0, 1, 0;
    return m;
}

template <typename Scalar>
AffineParams<Scalar> AffineParams<Scalar>::compose(const AffineParams& inner, const AffineParams& outer)
{
    Eigen::Matrix<Scalar, 3, 3> a = Eigen::Matrix<Scalar, 3, 3>::Identity();
    Eigen::Matrix<Scalar, 3, 3> b = Eigen::Matrix<Scalar, 3, 3>::Identity();
    a.template topRows<2>() = inner.m_;
    b.template topRows<2>() = outer.m_;
    const Eigen::Matrix<Scalar, 3, 3> c = a * b;
    return AffineParams(c.template topRows<2>(), inner.locked_ && outer.locked_);
}

template <typename Scalar>
Tensor<Scalar> AffineParams<Scalar>::to_tensor() const
{
    Buffer<Scalar> v(6);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            v[r * 3 + c] = m_(r, c);
    return Tensor<Scalar>({2, 3}, std::move(v));
}

template <typename Scalar>
Tensor<Scalar> affine_grid(const Tensor<Scalar>& theta, Index height, Index width)
{
    if (height < 1 || width < 1)
        throw ShapeError("affine_grid needs positive extents");
    const bool batched = theta.rank() == 3;
    if (!((batched && theta.dim(1) == 2 && theta.dim(2) == 3) || (theta.rank() == 2 && theta.dim(0) == 2 && theta.dim(1) == 3)))
        throw ShapeError("affine_grid expects theta of shape [2,3] or [N,2,3], got " + to_string(theta.shape()));
    const Index N = batched ? theta.dim(0) : 1;
    const Index HW = height * width;

    Buffer<Scalar> grid(N * HW * 2);
    const Scalar* t = theta.data().data();
    for (Index n = 0; n < N; ++n) {
        const Scalar* m = t + n * 6;
        for (Index y = 0; y < height; ++y) {
            const Scalar yn = normalized_coord<Scalar>(y, height);
            for (Index x = 0; x < width; ++x) {
                const Scalar xn = normalized_coord<Scalar>(x, width);
                Scalar* g = grid.data() + ((n * HW) + y * width + x) * 2;
                g[0] = m[0] * xn + m[1] * yn + m[2];
                g[1] = m[3] * xn + m[4] * yn + m[5];
            }
        }
    }

    Shape shape = batched ? Shape{N, height, width, 2} : Shape{height, width, 2};
    return Tensor<Scalar>::from_op(std::move(shape), std::move(grid), {&theta},
                                   [theta, N, height, width, HW](const Buffer<Scalar>& g) {
                                       if (!theta.requires_grad())
                                           return;
                                       Buffer<Scalar>& gt = theta.node()->grad_buffer();
                                       for (Index n = 0; n < N; ++n) {
                                           Scalar* d = gt.data() + n * 6;
                                           for (Index y = 0; y < height; ++y) {
                                               const Scalar yn = normalized_coord<Scalar>(y, height);
                                               for (Index x = 0; x < width; ++x) {
                                                   const Scalar xn = normalized_coord<Scalar>(x, width);
                                                   const Scalar* go = g.data() + ((n * HW) + y * width + x) * 2;
                                                   d[0] += go[0] * xn;
                                                   d[1] += go[0] * yn;
                                                   d[2] += go[0];
                                                   d[3] += go[1] * xn;
                                                   d[4] += go[1] * yn;
                                                   d[5] += go[1];
                                               }
                                           }
                                       }
                                   });
}

template <typename Scalar>
Tensor<Scalar> affine_grid(const AffineParams<Scalar>& t, Index height, Index width)
{
    return affine_grid(t.to_tensor(), height, width);
}

template <typename Scalar>
Tensor<Scalar> grid_sample_bilinear(const Tensor<Scalar>& features, const Tensor<Scalar>& grid)
{
    if (features.rank() != 4)
        throw ShapeError("grid_sample expects [N,C,H,W] features, got " + to_string(features.shape()));
    const Index N = features.dim(0), C = features.dim(1), H = features.dim(2), W = features.dim(3);
    const bool shared = grid.rank() == 3;
    if (!((shared && grid.dim(2) == 2) || (grid.rank() == 4 && grid.dim(0) == N && grid.dim(3) == 2)))
        throw ShapeError("grid_sample grid shape " + to_string(grid.shape()) + " incompatible with features " +
                         to_string(features.shape()));
    const Index Ho = shared ? grid.dim(0) : grid.dim(1);
    const Index Wo = shared ? grid.dim(1) : grid.dim(2);
    const Index P = Ho * Wo;

    // Per output location: the four taps (clipped taps get zero weight).
    struct Taps {
        Index x0, y0;
        Scalar wx, wy;  // fractional offsets
        bool valid;
    };
    auto taps_at = [H, W](const Scalar* g) {
        Taps t{};
        const Scalar px = to_pixel(g[0], W);
        const Scalar py = to_pixel(g[1], H);
        t.valid = std::isfinite(px) && std::isfinite(py) && px > Scalar(-1) && py > Scalar(-1) &&
                  px < static_cast<Scalar>(W) && py < static_cast<Scalar>(H);
        if (!t.valid)
            return t;
        const Scalar fx = std::floor(px), fy = std::floor(py);
        t.x0 = static_cast<Index>(fx);
        t.y0 = static_cast<Index>(fy);
        t.wx = px - fx;
        t.wy = py - fy;
        return t;
    };
    auto inside = [H, W](Index y, Index x) { return y >= 0 && y < H && x >= 0 && x < W; };

    Buffer<Scalar> out = Buffer<Scalar>::Zero(N * C * P);
    const Scalar* f = features.data().data();
    const Scalar* gd = grid.data().data();
    for (Index n = 0; n < N; ++n) {
        const Scalar* gn = gd + (shared ? 0 : n * P * 2);
        for (Index p = 0; p < P; ++p) {
            const Taps t = taps_at(gn + p * 2);
            if (!t.valid)
                continue;
            const Index ys[2] = {t.y0, t.y0 + 1};
            const Index xs[2] = {t.x0, t.x0 + 1};
            const Scalar wys[2] = {Scalar(1) - t.wy, t.wy};
            const Scalar wxs[2] = {Scalar(1) - t.wx, t.wx};
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    if (!inside(ys[a], xs[b]))
                        continue;
                    const Scalar w = wys[a] * wxs[b];
                    for (Index c = 0; c < C; ++c)
                        out[(n * C + c) * P + p] += w * f[((n * C + c) * H + ys[a]) * W + xs[b]];
                }
        }
    }

    Shape out_shape{N, C, Ho, Wo};
    return Tensor<Scalar>::from_op(
        std::move(out_shape), std::move(out), {&features, &grid},
        [features, grid, N, C, H, W, P, shared, taps_at, inside](const Buffer<Scalar>& go) {
            const bool need_f = features.requires_grad();
            const bool need_g = grid.requires_grad();
            const Scalar* f = features.data().data();
            const Scalar* gd = grid.data().data();
            Scalar* gf = need_f ? features.node()->grad_buffer().data() : nullptr;
            Scalar* gg = need_g ? grid.node()->grad_buffer().data() : nullptr;
            const Scalar sx = static_cast<Scalar>(W - 1) / Scalar(2);
            const Scalar sy = static_cast<Scalar>(H - 1) / Scalar(2);
            for (Index n = 0; n < N; ++n) {
                const Index goff = shared ? 0 : n * P * 2;
                for (Index p = 0; p < P; ++p) {
                    const Taps t = taps_at(gd + goff + p * 2);
                    if (!t.valid)
                        continue;
                    const Index ys[2] = {t.y0, t.y0 + 1};
                    const Index xs[2] = {t.x0, t.x0 + 1};
                    const Scalar wys[2] = {Scalar(1) - t.wy, t.wy};
                    const Scalar wxs[2] = {Scalar(1) - t.wx, t.wx};
                    const Scalar dwy[2] = {Scalar(-1), Scalar(1)};
                    const Scalar dwx[2] = {Scalar(-1), Scalar(1)};
                    Scalar dpx = 0, dpy = 0;
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b) {
                            if (!inside(ys[a], xs[b]))
                                continue;
                            const Scalar w = wys[a] * wxs[b];
                            for (Index c = 0; c < C; ++c) {
                                const Scalar gval = go[(n * C + c) * P + p];
                                const Index fi = ((n * C + c) * H + ys[a]) * W + xs[b];
                                if (need_f)
                                    gf[fi] += w * gval;
                                if (need_g) {
                                    dpx += gval * f[fi] * wys[a] * dwx[b];
                                    dpy += gval * f[fi] * wxs[b] * dwy[a];
                                }
                            }
                        }
                    if (need_g) {
                        gg[goff + p * 2] += dpx * sx;
                        gg[goff + p * 2 + 1] += dpy * sy;
                    }
                }
            }
        });
}

template <typename Scalar>
Tensor<Scalar> warp_affine(const Tensor<Scalar>& features, const AffineParams<Scalar>& t)
{
    if (features.rank() != 4)
        throw ShapeError("warp_affine expects [N,C,H,W] features");
    return grid_sample_bilinear(features, affine_grid(t, features.dim(2), features.dim(3)));
}

template <typename Scalar>
Tensor<Scalar> warp_affine(const Tensor<Scalar>& features, const Tensor<Scalar>& theta)
{
    if (features.rank() != 4)
        throw ShapeError("warp_affine expects [N,C,H,W] features");
    return grid_sample_bilinear(features, affine_grid(theta, features.dim(2), features.dim(3)));
}

template class AffineParams<float>;
template class AffineParams<double>;
template Tensor<float> affine_grid(const Tensor<float>&, Index, Index);
template Tensor<double> affine_grid(const Tensor<double>&, Index, Index);
template Tensor<float> affine_grid(const AffineParams<float>&, Index, Index);
template Tensor<double> affine_grid(const AffineParams<double>&, Index, Index);
template Tensor<float> grid_sample_bilinear(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> grid_sample_bilinear(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> warp_affine(const Tensor<float>&, const AffineParams<float>&);
template Tensor<double> warp_affine(const Tensor<double>&, const AffineParams<double>&);
template Tensor<float> warp_affine(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> warp_affine(const Tensor<double>&, const Tensor<double>&);

}  // namespace see360
