#include "see360/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace see360 {

namespace {

png_uint_32 png_format(int channels)
{
    if (channels == 1)
        return PNG_FORMAT_GRAY;
    if (channels == 3)
        return PNG_FORMAT_RGB;
    throw ImageIoError("only 1- and 3-channel images are supported, got " + std::to_string(channels));
}

void check_layout(const Image8& img)
{
    png_format(img.channels);
    if (img.width <= 0 || img.height <= 0 ||
        img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw ImageIoError("image buffer does not match its dimensions");
}

png_image blank_header(const Image8& img)
{
    png_image h;
    std::memset(&h, 0, sizeof h);
    h.version = PNG_IMAGE_VERSION;
    h.width = static_cast<png_uint_32>(img.width);
    h.height = static_cast<png_uint_32>(img.height);
    h.format = png_format(img.channels);
    return h;
}

Image8 finish_read(png_image& h, const std::string& what)
{
    // Keep gray files gray; everything else lands as RGB.
    const bool gray = (h.format & PNG_FORMAT_FLAG_COLOR) == 0 && (h.format & PNG_FORMAT_FLAG_ALPHA) == 0;
    Image8 img;
    img.width = static_cast<int>(h.width);
    img.height = static_cast<int>(h.height);
    img.channels = gray ? 1 : 3;
    h.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    img.pixels.resize(PNG_IMAGE_SIZE(h));
    if (!png_image_finish_read(&h, nullptr, img.pixels.data(), 0, nullptr)) {
        const std::string msg = h.message;
        png_image_free(&h);
        throw ImageIoError(what + ": " + msg);
    }
    return img;
}

}  // namespace

Image8 read_png(const std::string& path)
{
    png_image h;
    std::memset(&h, 0, sizeof h);
    h.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&h, path.c_str()))
        throw ImageIoError("cannot read " + path + ": " + h.message);
    return finish_read(h, path);
}

Image8 decode_png(const std::vector<std::uint8_t>& bytes)
{
    png_image h;
    std::memset(&h, 0, sizeof h);
    h.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&h, bytes.data(), bytes.size()))
        throw ImageIoError(std::string("cannot decode PNG: ") + h.message);
    return finish_read(h, "decode");
}

void write_png(const std::string& path, const Image8& img)
{
    check_layout(img);
    png_image h = blank_header(img);
    if (!png_image_write_to_file(&h, path.c_str(), 0, img.pixels.data(), 0, nullptr))
        throw ImageIoError("cannot write " + path + ": " + h.message);
}

std::vector<std::uint8_t> encode_png(const Image8& img)
{
    check_layout(img);
    png_image h = blank_header(img);
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&h, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
        throw ImageIoError(std::string("cannot encode PNG: ") + h.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&h, out.data(), &size, 0, img.pixels.data(), 0, nullptr))
        throw ImageIoError(std::string("cannot encode PNG: ") + h.message);
    out.resize(size);
    return out;
}

template <typename S>
Image8 to_image(const Tensor<S>& chw)
{
    if (chw.rank() != 3 || (chw.dim(0) != 1 && chw.dim(0) != 3))
        throw ShapeError("to_image expects [1|3,H,W], got " + to_string(chw.shape()));
    Image8 img;
    img.channels = static_cast<int>(chw.dim(0));
    img.height = static_cast<int>(chw.dim(1));
    img.width = static_cast<int>(chw.dim(2));
    img.pixels.resize(static_cast<std::size_t>(chw.size()));
    const Index plane = chw.dim(1) * chw.dim(2);
    for (int c = 0; c < img.channels; ++c)
        for (Index p = 0; p < plane; ++p) {
            const double v = std::clamp(static_cast<double>(chw[c * plane + p]), 0.0, 1.0);
            img.pixels[static_cast<std::size_t>(p * img.channels + c)] =
                static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    return img;
}

template <typename S>
Tensor<S> to_tensor(const Image8& img)
{
    check_layout(img);
    const Index plane = static_cast<Index>(img.width) * img.height;
    Buffer<S> v(plane * img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (Index p = 0; p < plane; ++p)
            v[c * plane + p] = static_cast<S>(img.pixels[static_cast<std::size_t>(p * img.channels + c)]) / S(255);
    return Tensor<S>({img.channels, img.height, img.width}, std::move(v));
}

template Image8 to_image(const Tensor<float>&);
template Image8 to_image(const Tensor<double>&);
template Tensor<float> to_tensor(const Image8&);
template Tensor<double> to_tensor(const Image8&);

}  // namespace see360
