#include "see360/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace see360 {

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapRowMat = Eigen::Map<RowMat<S>>;
template <typename S>
using CMapRowMat = Eigen::Map<const RowMat<S>>;

template <typename S, typename Expr>
void accumulate(const Tensor<S>& t, const Expr& expr)
{
    if (t.requires_grad())
        t.node()->grad_buffer() += expr;
}

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op)
{
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
}

template <typename S>
void require_rank(const Tensor<S>& x, int rank, const char* op)
{
    if (x.rank() != rank)
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         to_string(x.shape()));
}

/// Sparse linear map along one axis: out[o] = sum_k weight[k] * in[index[k]]
/// for k in [offset[o], offset[o+1]).
struct AxisMap {
    Index in_len = 0;
    Index out_len = 0;
    std::vector<Index> offset;
    std::vector<Index> index;
    std::vector<double> weight;

    void push(Index i, double w)
    {
        index.push_back(i);
        weight.push_back(w);
    }
    void close_row() { offset.push_back(static_cast<Index>(index.size())); }
};

AxisMap half_pixel_resample(Index in_len, Index out_len)
{
    AxisMap m;
    m.in_len = in_len;
    m.out_len = out_len;
    m.offset.push_back(0);
    const double scale = static_cast<double>(in_len) / static_cast<double>(out_len);
    for (Index o = 0; o < out_len; ++o) {
        double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
        src = std::max(src, 0.0);
        Index i0 = std::min(static_cast<Index>(std::floor(src)), in_len - 1);
        Index i1 = std::min(i0 + 1, in_len - 1);
        double w1 = src - static_cast<double>(i0);
        if (i1 == i0) {
            m.push(i0, 1.0);
        } else {
            m.push(i0, 1.0 - w1);
            m.push(i1, w1);
        }
        m.close_row();
    }
    return m;
}

AxisMap decimate_map(Index in_len)
{
    AxisMap m;
    m.in_len = in_len;
    m.out_len = (in_len + 1) / 2;
    m.offset.push_back(0);
    for (Index o = 0; o < m.out_len; ++o) {
        m.push(2 * o, 1.0);
        m.close_row();
    }
    return m;
}

AxisMap filter_map(Index in_len, std::span<const double> taps, Padding padding)
{
    const Index k = static_cast<Index>(taps.size());
    if (k % 2 == 0)
        throw std::invalid_argument("filter taps must have odd length");
    AxisMap m;
    m.in_len = in_len;
    m.offset.push_back(0);
    if (padding == Padding::Valid) {
        if (in_len < k)
            throw ShapeError("valid filtering needs extent >= tap count");
        m.out_len = in_len - k + 1;
        for (Index o = 0; o < m.out_len; ++o) {
            for (Index t = 0; t < k; ++t)
                m.push(o + t, taps[static_cast<std::size_t>(t)]);
            m.close_row();
        }
    } else {
        m.out_len = in_len;
        for (Index o = 0; o < m.out_len; ++o) {
            for (Index t = 0; t < k; ++t)
                m.push(std::clamp<Index>(o + t - k / 2, 0, in_len - 1), taps[static_cast<std::size_t>(t)]);
            m.close_row();
        }
    }
    return m;
}

template <typename S>
Tensor<S> apply_axis(const Tensor<S>& x, AxisMap map, Axis axis)
{
    require_rank(x, 4, "axis resample");
    const Index N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const bool rows = axis == Axis::Rows;
    if ((rows ? H : W) != map.in_len)
        throw ShapeError("axis map length mismatch");
    const Index Ho = rows ? map.out_len : H;
    const Index Wo = rows ? W : map.out_len;
    const Index planes = N * C;

    Buffer<S> out = Buffer<S>::Zero(planes * Ho * Wo);
    const S* in = x.data().data();
    for (Index p = 0; p < planes; ++p) {
        const S* src = in + p * H * W;
        S* dst = out.data() + p * Ho * Wo;
        if (rows) {
            for (Index o = 0; o < Ho; ++o)
                for (Index k = map.offset[o]; k < map.offset[o + 1]; ++k) {
                    const S w = static_cast<S>(map.weight[k]);
                    const S* srow = src + map.index[k] * W;
                    for (Index c = 0; c < W; ++c)
                        dst[o * W + c] += w * srow[c];
                }
        } else {
            for (Index r = 0; r < H; ++r)
                for (Index o = 0; o < Wo; ++o) {
                    S acc = 0;
                    for (Index k = map.offset[o]; k < map.offset[o + 1]; ++k)
                        acc += static_cast<S>(map.weight[k]) * src[r * W + map.index[k]];
                    dst[r * Wo + o] = acc;
                }
        }
    }

    return Tensor<S>::from_op(
        {N, C, Ho, Wo}, std::move(out), {&x},
        [x, map = std::move(map), rows, planes, H, W, Ho, Wo](const Buffer<S>& g) {
            if (!x.requires_grad())
                return;
            Buffer<S>& gx = x.node()->grad_buffer();
            for (Index p = 0; p < planes; ++p) {
                const S* gsrc = g.data() + p * Ho * Wo;
                S* gdst = gx.data() + p * H * W;
                if (rows) {
                    for (Index o = 0; o < Ho; ++o)
                        for (Index k = map.offset[o]; k < map.offset[o + 1]; ++k) {
                            const S w = static_cast<S>(map.weight[k]);
                            S* drow = gdst + map.index[k] * W;
                            for (Index c = 0; c < W; ++c)
                                drow[c] += w * gsrc[o * W + c];
                        }
                } else {
                    for (Index r = 0; r < H; ++r)
                        for (Index o = 0; o < Wo; ++o)
                            for (Index k = map.offset[o]; k < map.offset[o + 1]; ++k)
                                gdst[r * W + map.index[k]] +=
                                    static_cast<S>(map.weight[k]) * gsrc[r * Wo + o];
                }
            }
        });
}

template <typename S, typename F, typename DF>
Tensor<S> unary(const Tensor<S>& x, F f, DF df)
{
    Buffer<S> y = x.data().unaryExpr(f);
    return Tensor<S>::from_op(x.shape(), std::move(y), {&x}, [x, df](const Buffer<S>& g) {
        if (x.requires_grad())
            x.node()->grad_buffer() += g * x.data().unaryExpr(df);
    });
}

template <typename S>
S stable_sigmoid(S v)
{
    if (v >= 0)
        return S(1) / (S(1) + std::exp(-v));
    const S e = std::exp(v);
    return e / (S(1) + e);
}

template <typename S>
void im2col(const S* img, Index C, Index H, Index W, int kh, int kw, int stride, int pad, Index Ho,
            Index Wo, S* col)
{
    for (Index c = 0; c < C; ++c)
        for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
                S* row = col + ((c * kh + i) * kw + j) * Ho * Wo;
                for (Index oy = 0; oy < Ho; ++oy) {
                    const Index iy = oy * stride - pad + i;
                    S* dst = row + oy * Wo;
                    if (iy < 0 || iy >= H) {
                        std::fill(dst, dst + Wo, S(0));
                        continue;
                    }
                    const S* src = img + (c * H + iy) * W;
                    for (Index ox = 0; ox < Wo; ++ox) {
                        const Index ix = ox * stride - pad + j;
                        dst[ox] = (ix >= 0 && ix < W) ? src[ix] : S(0);
                    }
                }
            }
}

template <typename S>
void col2im(const S* col, Index C, Index H, Index W, int kh, int kw, int stride, int pad, Index Ho,
            Index Wo, S* img)
{
    for (Index c = 0; c < C; ++c)
        for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
                const S* row = col + ((c * kh + i) * kw + j) * Ho * Wo;
                for (Index oy = 0; oy < Ho; ++oy) {
                    const Index iy = oy * stride - pad + i;
                    if (iy < 0 || iy >= H)
                        continue;
                    S* dst = img + (c * H + iy) * W;
                    for (Index ox = 0; ox < Wo; ++ox) {
                        const Index ix = ox * stride - pad + j;
                        if (ix >= 0 && ix < W)
                            dst[ix] += row[oy * Wo + ox];
                    }
                }
            }
}

}  // namespace

std::vector<double> gaussian_taps(int length, double sigma)
{
    if (length < 1 || length % 2 == 0)
        throw std::invalid_argument("gaussian window length must be odd and positive");
    std::vector<double> taps(static_cast<std::size_t>(length));
    const int half = length / 2;
    for (int i = 0; i < length; ++i) {
        const double d = i - half;
        taps[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    }
    const double total = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps)
        t /= total;
    return taps;
}

template <typename S>
Tensor<S> operator+(const Tensor<S>& a, const Tensor<S>& b)
{
    require_same_shape(a, b, "add");
    return Tensor<S>::from_op(a.shape(), a.data() + b.data(), {&a, &b}, [a, b](const Buffer<S>& g) {
        accumulate(a, g);
        accumulate(b, g);
    });
}

template <typename S>
Tensor<S> operator-(const Tensor<S>& a, const Tensor<S>& b)
{
    require_same_shape(a, b, "sub");
    return Tensor<S>::from_op(a.shape(), a.data() - b.data(), {&a, &b}, [a, b](const Buffer<S>& g) {
        accumulate(a, g);
        accumulate(b, -g);
    });
}

template <typename S>
Tensor<S> operator*(const Tensor<S>& a, const Tensor<S>& b)
{
    require_same_shape(a, b, "mul");
    return Tensor<S>::from_op(a.shape(), a.data() * b.data(), {&a, &b}, [a, b](const Buffer<S>& g) {
        accumulate(a, g * b.data());
        accumulate(b, g * a.data());
    });
}

template <typename S>
Tensor<S> operator/(const Tensor<S>& a, const Tensor<S>& b)
{
    require_same_shape(a, b, "div");
    return Tensor<S>::from_op(a.shape(), a.data() / b.data(), {&a, &b}, [a, b](const Buffer<S>& g) {
        accumulate(a, g / b.data());
        accumulate(b, -g * a.data() / b.data().square());
    });
}

template <typename S>
Tensor<S> operator-(const Tensor<S>& a)
{
    return a * S(-1);
}

template <typename S>
Tensor<S> operator+(const Tensor<S>& a, S c)
{
    return Tensor<S>::from_op(a.shape(), a.data() + c, {&a}, [a](const Buffer<S>& g) { accumulate(a, g); });
}

template <typename S>
Tensor<S> operator*(const Tensor<S>& a, S c)
{
    return Tensor<S>::from_op(a.shape(), a.data() * c, {&a}, [a, c](const Buffer<S>& g) { accumulate(a, g * c); });
}

template <typename S>
Tensor<S> abs(const Tensor<S>& x)
{
    return unary(x, [](S v) { return std::abs(v); }, [](S v) { return v > 0 ? S(1) : (v < 0 ? S(-1) : S(0)); });
}

template <typename S>
Tensor<S> square(const Tensor<S>& x)
{
    return unary(x, [](S v) { return v * v; }, [](S v) { return S(2) * v; });
}

template <typename S>
Tensor<S> log(const Tensor<S>& x)
{
    return unary(x, [](S v) { return std::log(v); }, [](S v) { return S(1) / v; });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x)
{
    return unary(x, [](S v) { return stable_sigmoid(v); },
                 [](S v) {
                     const S s = stable_sigmoid(v);
                     return s * (S(1) - s);
                 });
}

template <typename S>
Tensor<S> softplus(const Tensor<S>& x)
{
    return unary(x, [](S v) { return std::max(v, S(0)) + std::log1p(std::exp(-std::abs(v))); },
                 [](S v) { return stable_sigmoid(v); });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x)
{
    return unary(x, [](S v) { return v >= 0 ? v : S(0); }, [](S v) { return v >= 0 ? S(1) : S(0); });
}

template <typename S>
Tensor<S> leaky_relu(const Tensor<S>& x, S slope)
{
    if (!(slope >= 0 && slope < 1))
        throw std::invalid_argument("leaky_relu slope must lie in [0, 1)");
    return unary(x, [slope](S v) { return v >= 0 ? v : slope * v; },
                 [slope](S v) { return v >= 0 ? S(1) : slope; });
}

template <typename S>
Tensor<S> sum(const Tensor<S>& x)
{
    Buffer<S> v(1);
    v[0] = x.data().sum();
    return Tensor<S>::from_op({}, std::move(v), {&x}, [x](const Buffer<S>& g) {
        if (x.requires_grad())
            x.node()->grad_buffer() += g[0];
    });
}

template <typename S>
Tensor<S> mean(const Tensor<S>& x)
{
    if (x.size() == 0)
        throw ShapeError("mean of an empty tensor");
    return sum(x) * (S(1) / static_cast<S>(x.size()));
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape)
{
    if (numel(shape) != x.size())
        throw ShapeError("reshape " + to_string(x.shape()) + " -> " + to_string(shape));
    return Tensor<S>::from_op(std::move(shape), x.data(), {&x}, [x](const Buffer<S>& g) { accumulate(x, g); });
}

template <typename S>
Tensor<S> flatten(const Tensor<S>& x)
{
    if (x.rank() < 1)
        throw ShapeError("flatten needs a leading batch dimension");
    const Index n = x.dim(0);
    return reshape(x, {n, n == 0 ? 0 : x.size() / n});
}

template <typename S>
Tensor<S> slice_cols(const Tensor<S>& x, Index start, Index count)
{
    require_rank(x, 2, "slice_cols");
    const Index N = x.dim(0), D = x.dim(1);
    if (start < 0 || count < 0 || start + count > D)
        throw ShapeError("slice_cols range out of bounds");
    Buffer<S> out(N * count);
    for (Index n = 0; n < N; ++n)
        out.segment(n * count, count) = x.data().segment(n * D + start, count);
    return Tensor<S>::from_op({N, count}, std::move(out), {&x}, [x, N, D, start, count](const Buffer<S>& g) {
        if (!x.requires_grad())
            return;
        Buffer<S>& gx = x.node()->grad_buffer();
        for (Index n = 0; n < N; ++n)
            gx.segment(n * D + start, count) += g.segment(n * count, count);
    });
}

template <typename S>
Tensor<S> crop(const Tensor<S>& x, Index top, Index left, Index height, Index width)
{
    require_rank(x, 4, "crop");
    const Index N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (top < 0 || left < 0 || height < 0 || width < 0 || top + height > H || left + width > W)
        throw ShapeError("crop window outside " + to_string(x.shape()));
    Buffer<S> out(N * C * height * width);
    for (Index p = 0; p < N * C; ++p)
        for (Index y = 0; y < height; ++y)
            out.segment((p * height + y) * width, width) = x.data().segment((p * H + top + y) * W + left, width);
    return Tensor<S>::from_op({N, C, height, width}, std::move(out), {&x},
                              [x, N, C, H, W, top, left, height, width](const Buffer<S>& g) {
                                  if (!x.requires_grad())
                                      return;
                                  Buffer<S>& gx = x.node()->grad_buffer();
                                  for (Index p = 0; p < N * C; ++p)
                                      for (Index y = 0; y < height; ++y)
                                          gx.segment((p * H + top + y) * W + left, width) +=
                                              g.segment((p * height + y) * width, width);
                              });
}

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b)
{
    require_rank(a, 4, "concat_channels");
    require_rank(b, 4, "concat_channels");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
        throw ShapeError("concat_channels: spatial/batch mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
    const Index N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), HW = a.dim(2) * a.dim(3);
    Buffer<S> out(N * (Ca + Cb) * HW);
    for (Index n = 0; n < N; ++n) {
        out.segment(n * (Ca + Cb) * HW, Ca * HW) = a.data().segment(n * Ca * HW, Ca * HW);
        out.segment((n * (Ca + Cb) + Ca) * HW, Cb * HW) = b.data().segment(n * Cb * HW, Cb * HW);
    }
    return Tensor<S>::from_op({N, Ca + Cb, a.dim(2), a.dim(3)}, std::move(out), {&a, &b},
                              [a, b, N, Ca, Cb, HW](const Buffer<S>& g) {
                                  for (Index n = 0; n < N; ++n) {
                                      if (a.requires_grad())
                                          a.node()->grad_buffer().segment(n * Ca * HW, Ca * HW) +=
                                              g.segment(n * (Ca + Cb) * HW, Ca * HW);
                                      if (b.requires_grad())
                                          b.node()->grad_buffer().segment(n * Cb * HW, Cb * HW) +=
                                              g.segment((n * (Ca + Cb) + Ca) * HW, Cb * HW);
                                  }
                              });
}

template <typename S>
Tensor<S> mean_channels(const Tensor<S>& x)
{
    require_rank(x, 4, "mean_channels");
    const Index N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    if (C == 0)
        throw ShapeError("mean_channels of zero channels");
    Buffer<S> out = Buffer<S>::Zero(N * HW);
    for (Index n = 0; n < N; ++n)
        for (Index c = 0; c < C; ++c)
            out.segment(n * HW, HW) += x.data().segment((n * C + c) * HW, HW);
    out /= static_cast<S>(C);
    return Tensor<S>::from_op({N, 1, x.dim(2), x.dim(3)}, std::move(out), {&x}, [x, N, C, HW](const Buffer<S>& g) {
        if (!x.requires_grad())
            return;
        Buffer<S>& gx = x.node()->grad_buffer();
        for (Index n = 0; n < N; ++n)
            for (Index c = 0; c < C; ++c)
                gx.segment((n * C + c) * HW, HW) += g.segment(n * HW, HW) / static_cast<S>(C);
    });
}

template <typename S>
Tensor<S> conv2d(const Tensor<S>& input, const Tensor<S>& kernel, int stride, int pad)
{
    require_rank(input, 4, "conv2d input");
    require_rank(kernel, 4, "conv2d kernel");
    if (stride < 1 || pad < 0)
        throw std::invalid_argument("conv2d: stride must be positive and pad non-negative");
    const Index N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const Index Cout = kernel.dim(0);
    const int kh = static_cast<int>(kernel.dim(2)), kw = static_cast<int>(kernel.dim(3));
    if (kernel.dim(1) != Cin)
        throw ShapeError("conv2d: input has " + std::to_string(Cin) + " channels, kernel expects " +
                         std::to_string(kernel.dim(1)));
    if (kh > H + 2 * pad || kw > W + 2 * pad)
        throw ShapeError("conv2d: kernel larger than padded input");
    const Index Ho = (H + 2 * pad - kh) / stride + 1;
    const Index Wo = (W + 2 * pad - kw) / stride + 1;
    const Index K = Cin * kh * kw, P = Ho * Wo;

    Buffer<S> out(N * Cout * P);
    RowMat<S> col(K, P);
    CMapRowMat<S> kmat(kernel.data().data(), Cout, K);
    for (Index n = 0; n < N; ++n) {
        im2col(input.data().data() + n * Cin * H * W, Cin, H, W, kh, kw, stride, pad, Ho, Wo, col.data());
        MapRowMat<S>(out.data() + n * Cout * P, Cout, P).noalias() = kmat * col;
    }

    return Tensor<S>::from_op(
        {N, Cout, Ho, Wo}, std::move(out), {&input, &kernel},
        [input, kernel, N, Cin, H, W, Cout, kh, kw, stride, pad, Ho, Wo, K, P](const Buffer<S>& g) {
            const bool need_in = input.requires_grad();
            const bool need_k = kernel.requires_grad();
            RowMat<S> col(K, P);
            RowMat<S> dcol;
            CMapRowMat<S> kmat(kernel.data().data(), Cout, K);
            for (Index n = 0; n < N; ++n) {
                CMapRowMat<S> gout(g.data() + n * Cout * P, Cout, P);
                if (need_k) {
                    im2col(input.data().data() + n * Cin * H * W, Cin, H, W, kh, kw, stride, pad, Ho, Wo,
                           col.data());
                    MapRowMat<S>(kernel.node()->grad_buffer().data(), Cout, K).noalias() +=
                        gout * col.transpose();
                }
                if (need_in) {
                    dcol.noalias() = kmat.transpose() * gout;
                    col2im(dcol.data(), Cin, H, W, kh, kw, stride, pad, Ho, Wo,
                           input.node()->grad_buffer().data() + n * Cin * H * W);
                }
            }
        });
}

template <typename S>
Tensor<S> add_channel_bias(const Tensor<S>& x, const Tensor<S>& bias)
{
    require_rank(x, 4, "add_channel_bias");
    const Index N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    if (bias.size() != C)
        throw ShapeError("add_channel_bias: bias length does not match channels");
    Buffer<S> out = x.data();
    for (Index n = 0; n < N; ++n)
        for (Index c = 0; c < C; ++c)
            out.segment((n * C + c) * HW, HW) += bias[c];
    return Tensor<S>::from_op(x.shape(), std::move(out), {&x, &bias}, [x, bias, N, C, HW](const Buffer<S>& g) {
        accumulate(x, g);
        if (!bias.requires_grad())
            return;
        Buffer<S>& gb = bias.node()->grad_buffer();
        for (Index n = 0; n < N; ++n)
            for (Index c = 0; c < C; ++c)
                gb[c] += g.segment((n * C + c) * HW, HW).sum();
    });
}

template <typename S>
Tensor<S> fully_connected(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias)
{
    require_rank(input, 2, "fully_connected input");
    require_rank(weight, 2, "fully_connected weight");
    const Index N = input.dim(0), Din = input.dim(1), Dout = weight.dim(0);
    if (weight.dim(1) != Din)
        throw ShapeError("fully_connected: input width " + std::to_string(Din) + " vs weight " +
                         to_string(weight.shape()));
    if (bias.size() != Dout)
        throw ShapeError("fully_connected: bias length mismatch");

    Buffer<S> out(N * Dout);
    CMapRowMat<S> xm(input.data().data(), N, Din);
    CMapRowMat<S> wm(weight.data().data(), Dout, Din);
    MapRowMat<S> om(out.data(), N, Dout);
    om.noalias() = xm * wm.transpose();
    om.rowwise() += bias.data().matrix().transpose();

    return Tensor<S>::from_op({N, Dout}, std::move(out), {&input, &weight, &bias},
                              [input, weight, bias, N, Din, Dout](const Buffer<S>& g) {
                                  CMapRowMat<S> gm(g.data(), N, Dout);
                                  if (input.requires_grad())
                                      MapRowMat<S>(input.node()->grad_buffer().data(), N, Din).noalias() +=
                                          gm * CMapRowMat<S>(weight.data().data(), Dout, Din);
                                  if (weight.requires_grad())
                                      MapRowMat<S>(weight.node()->grad_buffer().data(), Dout, Din).noalias() +=
                                          gm.transpose() * CMapRowMat<S>(input.data().data(), N, Din);
                                  if (bias.requires_grad())
                                      bias.node()->grad_buffer() += gm.colwise().sum().transpose().array();
                              });
}

template <typename S>
Tensor<S> instance_norm(const Tensor<S>& x, S eps)
{
    require_rank(x, 4, "instance_norm");
    const Index planes = x.dim(0) * x.dim(1), HW = x.dim(2) * x.dim(3);
    if (HW < 2)
        throw ShapeError("instance_norm needs at least two spatial elements");
    Buffer<S> y(x.size());
    Buffer<S> inv_std(planes);
    for (Index p = 0; p < planes; ++p) {
        auto seg = x.data().segment(p * HW, HW);
        const S mu = seg.mean();
        const S var = (seg - mu).square().mean();
        inv_std[p] = S(1) / std::sqrt(var + eps);
        y.segment(p * HW, HW) = (seg - mu) * inv_std[p];
    }
    Buffer<S> y_saved = y;
    return Tensor<S>::from_op(x.shape(), std::move(y), {&x},
                              [x, planes, HW, inv_std, y = std::move(y_saved)](const Buffer<S>& g) {
                                  if (!x.requires_grad())
                                      return;
                                  Buffer<S>& gx = x.node()->grad_buffer();
                                  for (Index p = 0; p < planes; ++p) {
                                      auto gs = g.segment(p * HW, HW);
                                      auto ys = y.segment(p * HW, HW);
                                      const S mg = gs.mean();
                                      const S mgy = (gs * ys).mean();
                                      gx.segment(p * HW, HW) += inv_std[p] * (gs - mg - ys * mgy);
                                  }
                              });
}

template <typename S>
Tensor<S> upsample_bilinear_x2(const Tensor<S>& x)
{
    require_rank(x, 4, "upsample_bilinear_x2");
    if (x.dim(2) < 1 || x.dim(3) < 1)
        throw ShapeError("upsample of empty spatial extent");
    auto rows = apply_axis(x, half_pixel_resample(x.dim(2), 2 * x.dim(2)), Axis::Rows);
    return apply_axis(rows, half_pixel_resample(x.dim(3), 2 * x.dim(3)), Axis::Cols);
}

template <typename S>
Tensor<S> downsample_bilinear_x2(const Tensor<S>& x)
{
    require_rank(x, 4, "downsample_bilinear_x2");
    if (x.dim(2) % 2 || x.dim(3) % 2 || x.dim(2) == 0 || x.dim(3) == 0)
        throw ShapeError("downsample_bilinear_x2 needs even spatial extents, got " + to_string(x.shape()));
    auto rows = apply_axis(x, half_pixel_resample(x.dim(2), x.dim(2) / 2), Axis::Rows);
    return apply_axis(rows, half_pixel_resample(x.dim(3), x.dim(3) / 2), Axis::Cols);
}

template <typename S>
Tensor<S> decimate_x2(const Tensor<S>& x)
{
    require_rank(x, 4, "decimate_x2");
    auto rows = apply_axis(x, decimate_map(x.dim(2)), Axis::Rows);
    return apply_axis(rows, decimate_map(x.dim(3)), Axis::Cols);
}

template <typename S>
Tensor<S> filter1d(const Tensor<S>& x, std::span<const double> taps, Axis axis, Padding padding)
{
    require_rank(x, 4, "filter1d");
    const Index len = axis == Axis::Rows ? x.dim(2) : x.dim(3);
    return apply_axis(x, filter_map(len, taps, padding), axis);
}

template <typename S>
Tensor<S> filter2d_separable(const Tensor<S>& x, std::span<const double> taps, Padding padding)
{
    return filter1d(filter1d(x, taps, Axis::Rows, padding), taps, Axis::Cols, padding);
}

#define SEE360_INSTANTIATE_OPS(S)                                                                   \
    template Tensor<S> operator+(const Tensor<S>&, const Tensor<S>&);                               \
    template Tensor<S> operator-(const Tensor<S>&, const Tensor<S>&);                               \
    template Tensor<S> operator*(const Tensor<S>&, const Tensor<S>&);                               \
    template Tensor<S> operator/(const Tensor<S>&, const Tensor<S>&);                               \
    template Tensor<S> operator-(const Tensor<S>&);                                                 \
    template Tensor<S> operator+(const Tensor<S>&, S);                                              \
    template Tensor<S> operator*(const Tensor<S>&, S);                                              \
    template Tensor<S> abs(const Tensor<S>&);                                                       \
    template Tensor<S> square(const Tensor<S>&);                                                    \
    template Tensor<S> log(const Tensor<S>&);                                                       \
    template Tensor<S> sigmoid(const Tensor<S>&);                                                   \
    template Tensor<S> softplus(const Tensor<S>&);                                                  \
    template Tensor<S> relu(const Tensor<S>&);                                                      \
    template Tensor<S> leaky_relu(const Tensor<S>&, S);                                             \
    template Tensor<S> sum(const Tensor<S>&);                                                       \
    template Tensor<S> mean(const Tensor<S>&);                                                      \
    template Tensor<S> reshape(const Tensor<S>&, Shape);                                            \
    template Tensor<S> flatten(const Tensor<S>&);                                                   \
    template Tensor<S> slice_cols(const Tensor<S>&, Index, Index);                                  \
    template Tensor<S> crop(const Tensor<S>&, Index, Index, Index, Index);                          \
    template Tensor<S> concat_channels(const Tensor<S>&, const Tensor<S>&);                         \
    template Tensor<S> mean_channels(const Tensor<S>&);                                             \
    template Tensor<S> conv2d(const Tensor<S>&, const Tensor<S>&, int, int);                        \
    template Tensor<S> add_channel_bias(const Tensor<S>&, const Tensor<S>&);                        \
    template Tensor<S> fully_connected(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);       \
    template Tensor<S> instance_norm(const Tensor<S>&, S);                                          \
    template Tensor<S> upsample_bilinear_x2(const Tensor<S>&);                                      \
    template Tensor<S> downsample_bilinear_x2(const Tensor<S>&);                                    \
    template Tensor<S> decimate_x2(const Tensor<S>&);                                               \
    template Tensor<S> filter1d(const Tensor<S>&, std::span<const double>, Axis, Padding);          \
    template Tensor<S> filter2d_separable(const Tensor<S>&, std::span<const double>, Padding);

SEE360_INSTANTIATE_OPS(float)
SEE360_INSTANTIATE_OPS(double)

}  // namespace see360
