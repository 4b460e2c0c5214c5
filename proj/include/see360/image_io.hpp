#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "see360/tensor.hpp"

namespace see360 {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit pixels, 1 (gray) or 3 (RGB) channels.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    std::uint8_t at(int y, int x, int c) const
    {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

Image8 read_png(const std::string& path);
void write_png(const std::string& path, const Image8& img);
std::vector<std::uint8_t> encode_png(const Image8& img);
Image8 decode_png(const std::vector<std::uint8_t>& bytes);

/// [C,H,W] in [0,1] -> 8-bit, rounding to nearest and clamping.
template <typename Scalar>
Image8 to_image(const Tensor<Scalar>& chw);

/// 8-bit -> [C,H,W] scaled by 1/255.
template <typename Scalar>
Tensor<Scalar> to_tensor(const Image8& img);

}  // namespace see360
