#pragma once

#include <span>
#include <vector>

#include "see360/tensor.hpp"

namespace see360 {

// Elementwise arithmetic. Binary ops require identical shapes; there is no
// implicit broadcasting.
template <typename S> Tensor<S> operator+(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> operator-(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> operator*(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> operator/(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> operator-(const Tensor<S>& a);
template <typename S> Tensor<S> operator+(const Tensor<S>& a, S c);
template <typename S> Tensor<S> operator*(const Tensor<S>& a, S c);
template <typename S> Tensor<S> operator+(S c, const Tensor<S>& a) { return a + c; }
template <typename S> Tensor<S> operator*(S c, const Tensor<S>& a) { return a * c; }
template <typename S> Tensor<S> operator-(const Tensor<S>& a, S c) { return a + (-c); }

template <typename S> Tensor<S> abs(const Tensor<S>& x);
template <typename S> Tensor<S> square(const Tensor<S>& x);
template <typename S> Tensor<S> log(const Tensor<S>& x);
template <typename S> Tensor<S> sigmoid(const Tensor<S>& x);
/// log(1 + exp(x)), evaluated without overflow.
template <typename S> Tensor<S> softplus(const Tensor<S>& x);
template <typename S> Tensor<S> relu(const Tensor<S>& x);
/// max(x, slope*x); the derivative at 0 takes the positive branch.
template <typename S> Tensor<S> leaky_relu(const Tensor<S>& x, S slope = S(0.2));

template <typename S> Tensor<S> sum(const Tensor<S>& x);
template <typename S> Tensor<S> mean(const Tensor<S>& x);

template <typename S> Tensor<S> reshape(const Tensor<S>& x, Shape shape);
/// [N, ...] -> [N, prod(...)].
template <typename S> Tensor<S> flatten(const Tensor<S>& x);
/// Columns [start, start+count) of a [N, D] tensor.
template <typename S> Tensor<S> slice_cols(const Tensor<S>& x, Index start, Index count);
/// Spatial window of a [N,C,H,W] tensor.
template <typename S>
Tensor<S> crop(const Tensor<S>& x, Index top, Index left, Index height, Index width);
template <typename S> Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b);
/// [N,C,H,W] -> [N,1,H,W] channel average.
template <typename S> Tensor<S> mean_channels(const Tensor<S>& x);

/// Cross-correlation (no kernel flip), NCHW input, [Cout,Cin,kh,kw] kernel.
template <typename S>
Tensor<S> conv2d(const Tensor<S>& input, const Tensor<S>& kernel, int stride, int pad);
template <typename S> Tensor<S> add_channel_bias(const Tensor<S>& x, const Tensor<S>& bias);
/// input [N,Din] * weight[Dout,Din]^T + bias[Dout].
template <typename S>
Tensor<S> fully_connected(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias);
/// Per-(sample, channel) normalization with population variance.
template <typename S> Tensor<S> instance_norm(const Tensor<S>& x, S eps = S(1e-5));

/// Half-pixel bilinear x2 magnification with edge clamping.
template <typename S> Tensor<S> upsample_bilinear_x2(const Tensor<S>& x);
/// Half-pixel bilinear x2 reduction; for even extents this is a 2x2 box mean.
template <typename S> Tensor<S> downsample_bilinear_x2(const Tensor<S>& x);
/// Keeps even rows and columns.
template <typename S> Tensor<S> decimate_x2(const Tensor<S>& x);

enum class Padding { Valid, Replicate };
enum class Axis { Rows, Cols };

/// Applies the same 1D correlation taps to every channel along one spatial axis.
template <typename S>
Tensor<S> filter1d(const Tensor<S>& x, std::span<const double> taps, Axis axis, Padding padding);
/// Separable 2D filter: rows then columns.
template <typename S>
Tensor<S> filter2d_separable(const Tensor<S>& x, std::span<const double> taps, Padding padding);

/// Normalized Gaussian taps of odd length.
std::vector<double> gaussian_taps(int length, double sigma);

}  // namespace see360
