#pragma once

#include "ntt/error.hpp"
#include "ntt/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

namespace ntt {

/// H x W x C image of intensities, nominally in [0, 1]. Storage is a
/// (H*W) x C row-major matrix, which is exactly the interleaved
/// (row, column, channel) layout.
template <typename Scalar>
struct Image {
    Index height = 0;
    Index width = 0;
    Index channels = 0;
    Matrix<Scalar> data;

    Image() = default;
    Image(Index h, Index w, Index c) : height(h), width(w), channels(c), data(Matrix<Scalar>::Zero(h * w, c)) {}

    Extent extent() const { return {height, width}; }
    Scalar& operator()(Index y, Index x, Index c) { return data(y * width + x, c); }
    Scalar operator()(Index y, Index x, Index c) const { return data(y * width + x, c); }

    static Image constant(Index h, Index w, Index c, Scalar value)
    {
        Image img(h, w, c);
        img.data.setConstant(value);
        return img;
    }

    template <typename Other>
    Image<Other> cast() const
    {
        Image<Other> out;
        out.height = height;
        out.width = width;
        out.channels = channels;
        out.data = data.template cast<Other>();
        return out;
    }
};

using ImageBuffer = Image<float>;

template <typename Scalar>
bool same_shape(const Image<Scalar>& a, const Image<Scalar>& b)
{
    return a.height == b.height && a.width == b.width && a.channels == b.channels;
}

// ---------------------------------------------------------------------------
// I/O (8-bit PNG gray/RGB, binary PGM/PPM)

/// Loads a PNG or P5/P6 file; byte v maps to v / 255.
ImageBuffer load_image(const std::filesystem::path& path);

/// Writes PNG or PPM depending on the extension. Values are quantized with
/// round(v * 255) clamped to [0, 255].
void save_image(const ImageBuffer& img, const std::filesystem::path& path);

/// Quantization rule used by save_image.
inline std::uint8_t quantize(float v)
{
    const double scaled = std::round(static_cast<double>(v) * 255.0);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

// ---------------------------------------------------------------------------
// Resampling

/// Keys cubic convolution kernel with a = -0.5.
template <typename Scalar>
constexpr Scalar keys_weight(Scalar t)
{
    constexpr Scalar a = Scalar(-0.5);
    const Scalar x = t < 0 ? -t : t;
    if (x < 1)
        return ((a + 2) * x - (a + 3)) * x * x + 1;
    if (x < 2)
        return ((a * x - 5 * a) * x + 8 * a) * x - 4 * a;
    return 0;
}

namespace detail {

template <typename Scalar>
struct CubicTaps {
    std::array<Index, 4> index;
    std::array<Scalar, 4> weight;
};

/// Four-tap Keys filter per output coordinate. Source coordinates follow the
/// pixel-center convention src = (dst + 0.5) / factor - 0.5 and are clamped
/// to the valid range.
template <typename Scalar>
std::vector<CubicTaps<Scalar>> cubic_taps(Index in_size, Index out_size, double factor)
{
    std::vector<CubicTaps<Scalar>> taps(static_cast<std::size_t>(out_size));
    for (Index d = 0; d < out_size; ++d) {
        const double src = (static_cast<double>(d) + 0.5) / factor - 0.5;
        const double base = std::floor(src);
        const Scalar frac = static_cast<Scalar>(src - base);
        auto& tap = taps[static_cast<std::size_t>(d)];
        for (int k = 0; k < 4; ++k) {
            const auto i = static_cast<Index>(base) + k - 1;
            tap.index[k] = std::clamp<Index>(i, 0, in_size - 1);
            tap.weight[k] = keys_weight<Scalar>(frac - static_cast<Scalar>(k - 1));
        }
    }
    return taps;
}

inline Index scaled_size(Index size, double factor) { return static_cast<Index>(std::llround(static_cast<double>(size) * factor)); }

} // namespace detail

/// Separable bicubic resampling by `factor`; output dims are
/// round(dim * factor). No anti-aliasing on downscale. Values are not clamped.
template <typename Scalar>
Image<Scalar> bicubic_resample(const Image<Scalar>& img, double factor)
{
    require(factor > 0 && std::isfinite(factor), ErrorKind::InvalidArgument, "resample factor must be positive");
    const Index out_h = detail::scaled_size(img.height, factor);
    const Index out_w = detail::scaled_size(img.width, factor);
    require(out_h >= 1 && out_w >= 1, ErrorKind::InvalidArgument, "resampled image would be empty");

    const auto col_taps = detail::cubic_taps<Scalar>(img.width, out_w, factor);
    const auto row_taps = detail::cubic_taps<Scalar>(img.height, out_h, factor);
    const Index c = img.channels;

    // Horizontal pass.
    Matrix<Scalar> tmp(img.height * out_w, c);
    for (Index y = 0; y < img.height; ++y) {
        for (Index x = 0; x < out_w; ++x) {
            const auto& t = col_taps[static_cast<std::size_t>(x)];
            tmp.row(y * out_w + x) = t.weight[0] * img.data.row(y * img.width + t.index[0])
                                   + t.weight[1] * img.data.row(y * img.width + t.index[1])
                                   + t.weight[2] * img.data.row(y * img.width + t.index[2])
                                   + t.weight[3] * img.data.row(y * img.width + t.index[3]);
        }
    }

    // Vertical pass.
    Image<Scalar> out(out_h, out_w, c);
    for (Index y = 0; y < out_h; ++y) {
        const auto& t = row_taps[static_cast<std::size_t>(y)];
        out.data.middleRows(y * out_w, out_w) = t.weight[0] * tmp.middleRows(t.index[0] * out_w, out_w)
                                              + t.weight[1] * tmp.middleRows(t.index[1] * out_w, out_w)
                                              + t.weight[2] * tmp.middleRows(t.index[2] * out_w, out_w)
                                              + t.weight[3] * tmp.middleRows(t.index[3] * out_w, out_w);
    }
    return out;
}

/// Crops or edge-extends `img` to h x w (top-left anchored, clamped reads).
template <typename Scalar>
Image<Scalar> fit_to(const Image<Scalar>& img, Index h, Index w)
{
    if (img.height == h && img.width == w)
        return img;
    Image<Scalar> out(h, w, img.channels);
    for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x)
            out.data.row(y * w + x) = img.data.row(std::min(y, img.height - 1) * img.width + std::min(x, img.width - 1));
    return out;
}

/// Frequency-matched reference: bicubic down by `factor`, then back up,
/// restored to the original size.
template <typename Scalar>
Image<Scalar> degrade_ref(const Image<Scalar>& ref, int factor)
{
    require(factor >= 2, ErrorKind::InvalidArgument, "degradation factor must be at least 2");
    const auto down = bicubic_resample(ref, 1.0 / factor);
    const auto up = bicubic_resample(down, static_cast<double>(factor));
    return fit_to(up, ref.height, ref.width);
}

template <typename Scalar>
Image<Scalar> crop(const Image<Scalar>& img, Index top, Index left, Index h, Index w)
{
    require(top >= 0 && left >= 0 && h > 0 && w > 0 && top + h <= img.height && left + w <= img.width,
            ErrorKind::InvalidArgument, "crop rectangle outside image");
    Image<Scalar> out(h, w, img.channels);
    for (Index y = 0; y < h; ++y)
        out.data.middleRows(y * w, w) = img.data.middleRows((top + y) * img.width + left, w);
    return out;
}

template <typename Scalar>
Image<Scalar> clamp_unit(Image<Scalar> img)
{
    img.data = img.data.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
    return img;
}

/// Bilinear sample at continuous pixel coordinates (pixel centers on
/// integers), reads clamped to the border. Writes C values to `out`.
template <typename Scalar, typename Row>
void bilinear_sample(const Image<Scalar>& img, double y, double x, Row&& out)
{
    const double yc = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const double xc = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    const auto y0 = static_cast<Index>(std::floor(yc));
    const auto x0 = static_cast<Index>(std::floor(xc));
    const Index y1 = std::min(y0 + 1, img.height - 1);
    const Index x1 = std::min(x0 + 1, img.width - 1);
    const auto fy = static_cast<Scalar>(yc - static_cast<double>(y0));
    const auto fx = static_cast<Scalar>(xc - static_cast<double>(x0));
    const Index w = img.width;
    out = (1 - fy) * ((1 - fx) * img.data.row(y0 * w + x0) + fx * img.data.row(y0 * w + x1))
        + fy * ((1 - fx) * img.data.row(y1 * w + x0) + fx * img.data.row(y1 * w + x1));
}

/// Counter-clockwise rotation by a multiple of 90 degrees; an exact index
/// permutation.
template <typename Scalar>
Image<Scalar> rotate_quarter_turns(const Image<Scalar>& img, int turns)
{
    turns = ((turns % 4) + 4) % 4;
    if (turns == 0)
        return img;
    const Index h = img.height;
    const Index w = img.width;
    const bool swap = turns % 2 == 1;
    Image<Scalar> out(swap ? w : h, swap ? h : w, img.channels);
    for (Index r = 0; r < out.height; ++r) {
        for (Index c = 0; c < out.width; ++c) {
            Index sy = 0;
            Index sx = 0;
            switch (turns) {
            case 1: sy = c; sx = w - 1 - r; break;
            case 2: sy = h - 1 - r; sx = w - 1 - c; break;
            default: sy = h - 1 - c; sx = r; break;
            }
            out.data.row(r * out.width + c) = img.data.row(sy * w + sx);
        }
    }
    return out;
}

/// Size of the largest axis-aligned rectangle inside a w x h rectangle
/// rotated by `radians`.
inline Extent max_interior_extent(Index h, Index w, double radians)
{
    const double sin_a = std::abs(std::sin(radians));
    const double cos_a = std::abs(std::cos(radians));
    const bool width_longer = w >= h;
    const double side_long = static_cast<double>(width_longer ? w : h);
    const double side_short = static_cast<double>(width_longer ? h : w);
    double wr = 0;
    double hr = 0;
    if (side_short <= 2.0 * sin_a * cos_a * side_long || std::abs(sin_a - cos_a) < 1e-10) {
        const double x = 0.5 * side_short;
        wr = width_longer ? x / sin_a : x / cos_a;
        hr = width_longer ? x / cos_a : x / sin_a;
    } else {
        const double cos_2a = cos_a * cos_a - sin_a * sin_a;
        wr = (static_cast<double>(w) * cos_a - static_cast<double>(h) * sin_a) / cos_2a;
        hr = (static_cast<double>(h) * cos_a - static_cast<double>(w) * sin_a) / cos_2a;
    }
    // Guard against 1e-12 overshoot turning 63.9999 into 64.
    return {static_cast<Index>(std::floor(hr + 1e-9)), static_cast<Index>(std::floor(wr + 1e-9))};
}

/// Counter-clockwise rotation about the image center with bilinear
/// resampling, cropped to the maximal interior rectangle. Right angles take
/// the exact permutation path.
template <typename Scalar>
Image<Scalar> rotate(const Image<Scalar>& img, double degrees)
{
    const double turns = degrees / 90.0;
    if (turns == std::round(turns))
        return rotate_quarter_turns(img, static_cast<int>(std::lround(turns)));

    const double rad = degrees * std::numbers::pi / 180.0;
    const Extent ext = max_interior_extent(img.height, img.width, rad);
    require(ext.height >= 1 && ext.width >= 1, ErrorKind::Degenerate, "rotation leaves no interior");
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    const double cy_in = 0.5 * static_cast<double>(img.height - 1);
    const double cx_in = 0.5 * static_cast<double>(img.width - 1);
    const double cy_out = 0.5 * static_cast<double>(ext.height - 1);
    const double cx_out = 0.5 * static_cast<double>(ext.width - 1);

    Image<Scalar> out(ext.height, ext.width, img.channels);
    for (Index r = 0; r < out.height; ++r) {
        for (Index c = 0; c < out.width; ++c) {
            const double dx = static_cast<double>(c) - cx_out;
            const double dy = static_cast<double>(r) - cy_out;
            const double sx = cx_in + cs * dx - sn * dy;
            const double sy = cy_in + sn * dx + cs * dy;
            bilinear_sample(img, sy, sx, out.data.row(r * out.width + c));
        }
    }
    return out;
}

/// Gray images are replicated to three channels; RGB passes through.
template <typename Scalar>
Image<Scalar> to_rgb(const Image<Scalar>& img)
{
    if (img.channels == 3)
        return img;
    require(img.channels == 1, ErrorKind::Shape, "RGB conversion needs 1 or 3 channels");
    Image<Scalar> out(img.height, img.width, 3);
    out.data = img.data.replicate(1, 3);
    return out;
}

/// ITU-R BT.601 luma; single-channel images pass through.
template <typename Scalar>
Image<Scalar> to_luma(const Image<Scalar>& img)
{
    if (img.channels == 1)
        return img;
    require(img.channels == 3, ErrorKind::Shape, "luma conversion needs 1 or 3 channels");
    Image<Scalar> out(img.height, img.width, 1);
    out.data.col(0) = Scalar(0.299) * img.data.col(0) + Scalar(0.587) * img.data.col(1) + Scalar(0.114) * img.data.col(2);
    return out;
}

} // namespace ntt
