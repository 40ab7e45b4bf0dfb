#pragma once

#include "ntt/error.hpp"
#include "ntt/image.hpp"
#include "ntt/types.hpp"
#include "ntt/weights.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace ntt {

// ---------------------------------------------------------------------------
// Network description

struct LayerSpec {
    enum class Kind { Conv, Rectify, MaxPool };

    Kind kind = Kind::Conv;
    /// Conv layers: weight prefix ("conv1_1" -> "conv1_1.kernel"/".bias").
    std::string name;
    /// Conv layers: output channels.
    Index channels = 0;
    /// Optional tap point name ("relu1_1").
    std::string tap;
};

/// Ordered conv(3x3, pad 1)/rectify/maxpool(2x2, stride 2) stack.
struct NetworkConfig {
    Index input_channels = 3;
    std::vector<LayerSpec> layers;

    /// VGG19 feature stack up to and including the tap `through`.
    static NetworkConfig vgg19(const std::string& through = "relu5_1");

    /// Throws ErrorKind::Config on duplicate taps or bad channel counts.
    void validate() const;

    bool has_tap(const std::string& tap) const;
    /// Cumulative pooling stride at a tap.
    int stride_of(const std::string& tap) const;
    /// Channel count at a tap.
    Index channels_of(const std::string& tap) const;
};

nlohmann::json to_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const nlohmann::json& j);

/// Standard VGG preprocessing means (RGB, unit-interval scale).
inline constexpr float kVggMean[3] = {123.68f / 255.0f, 116.779f / 255.0f, 103.939f / 255.0f};

/// Seeded He-uniform kernels, zero biases, and the "preprocess.mean" tensor.
WeightStore init_network_weights(const NetworkConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Primitives

namespace detail {

/// Fills rows [0, C*kh*kw) x columns of `cols` with the zero-padded patch
/// unfolding of output rows [y0, y0 + rows) ("same" padding, stride 1).
template <typename Scalar>
void im2col_rows(const FeatureMap<Scalar>& in, Index kh, Index kw, Index y0, Index rows, Matrix<Scalar>& cols)
{
    const Index h = in.height;
    const Index w = in.width;
    const Index ph = (kh - 1) / 2;
    const Index pw = (kw - 1) / 2;
    cols.resize(in.channels * kh * kw, rows * w);
    for (Index c = 0; c < in.channels; ++c) {
        for (Index ky = 0; ky < kh; ++ky) {
            for (Index kx = 0; kx < kw; ++kx) {
                const Index r = (c * kh + ky) * kw + kx;
                Scalar* dst = cols.row(r).data();
                const Index dx = kx - pw;
                const Index x_lo = std::max<Index>(0, -dx);
                const Index x_hi = std::min<Index>(w, w - dx);
                for (Index oy = 0; oy < rows; ++oy) {
                    Scalar* out = dst + oy * w;
                    const Index sy = y0 + oy + ky - ph;
                    if (sy < 0 || sy >= h || x_lo >= x_hi) {
                        std::fill(out, out + w, Scalar(0));
                        continue;
                    }
                    const Scalar* src = in.data.row(c).data() + sy * w;
                    std::fill(out, out + x_lo, Scalar(0));
                    std::copy(src + x_lo + dx, src + x_hi + dx, out + x_lo);
                    std::fill(out + x_hi, out + w, Scalar(0));
                }
            }
        }
    }
}

} // namespace detail

/// Cross-correlation with zero "same" padding and stride 1. `kernel` is the
/// out x (in*kh*kw) flattening of an (out, in, kh, kw) tensor.
template <typename Scalar, typename KernelDerived, typename BiasDerived>
FeatureMap<Scalar> conv2d_forward(const FeatureMap<Scalar>& input, const Eigen::MatrixBase<KernelDerived>& kernel,
                                  const Eigen::MatrixBase<BiasDerived>& bias, Index kh, Index kw)
{
    require(kh % 2 == 1 && kw % 2 == 1, ErrorKind::Shape, "conv kernel sizes must be odd");
    require(kernel.cols() == input.channels * kh * kw, ErrorKind::Shape,
            "conv kernel expects " + std::to_string(kernel.cols() / (kh * kw)) + " input channels, got "
                + std::to_string(input.channels));
    require(bias.size() == kernel.rows(), ErrorKind::Shape, "conv bias length does not match output channels");

    FeatureMap<Scalar> out(kernel.rows(), input.height, input.width, input.layer, input.stride);
    if (input.height == 0 || input.width == 0)
        return out;
    const Matrix<Scalar> k = kernel.template cast<Scalar>();
    const Vector<Scalar> b = bias.template cast<Scalar>();

    // Band the unfolding so the column buffer stays around 16M elements.
    const Index per_row = input.channels * kh * kw * input.width;
    const Index band = std::clamp<Index>((Index{1} << 24) / std::max<Index>(per_row, 1), 1, input.height);
    Matrix<Scalar> cols;
    for (Index y0 = 0; y0 < input.height; y0 += band) {
        const Index rows = std::min(band, input.height - y0);
        detail::im2col_rows(input, kh, kw, y0, rows, cols);
        out.data.middleCols(y0 * input.width, rows * input.width).noalias() = k * cols;
    }
    out.data.colwise() += b;
    return out;
}

/// Tensor-level overload: kernel (out, in, kh, kw), bias (out).
template <typename Scalar>
FeatureMap<Scalar> conv2d_forward(const FeatureMap<Scalar>& input, const Tensor& kernel, const Tensor& bias)
{
    require(kernel.shape.size() == 4, ErrorKind::Shape, "conv kernel must be 4-D");
    require(bias.shape.size() == 1 && bias.shape[0] == kernel.shape[0], ErrorKind::Shape,
            "conv bias must be 1-D matching output channels");
    const auto out_c = static_cast<Index>(kernel.shape[0]);
    const auto in_c = static_cast<Index>(kernel.shape[1]);
    const auto kh = static_cast<Index>(kernel.shape[2]);
    const auto kw = static_cast<Index>(kernel.shape[3]);
    require(in_c == input.channels, ErrorKind::Shape,
            "conv kernel expects " + std::to_string(in_c) + " input channels, got " + std::to_string(input.channels));
    const Eigen::Map<const Matrix<float>> k(kernel.values.data(), out_c, in_c * kh * kw);
    const Eigen::Map<const Vector<float>> b(bias.values.data(), out_c);
    return conv2d_forward(input, k, b, kh, kw);
}

/// Named conv layer: "<name>.kernel" and "<name>.bias".
template <typename Scalar>
FeatureMap<Scalar> conv2d_forward(const FeatureMap<Scalar>& input, const WeightStore& weights, const std::string& name)
{
    return conv2d_forward(input, weights.at(name + ".kernel"), weights.at(name + ".bias"));
}

template <typename Scalar>
FeatureMap<Scalar> rectify(FeatureMap<Scalar> fm)
{
    fm.data = fm.data.cwiseMax(Scalar(0));
    return fm;
}

/// 2x2 max pooling, stride 2, floor on odd sizes.
template <typename Scalar>
FeatureMap<Scalar> maxpool2x2(const FeatureMap<Scalar>& in)
{
    FeatureMap<Scalar> out(in.channels, in.height / 2, in.width / 2, in.layer, in.stride * 2);
    for (Index c = 0; c < in.channels; ++c)
        for (Index y = 0; y < out.height; ++y)
            for (Index x = 0; x < out.width; ++x)
                out(c, y, x) = std::max(std::max(in(c, 2 * y, 2 * x), in(c, 2 * y, 2 * x + 1)),
                                        std::max(in(c, 2 * y + 1, 2 * x), in(c, 2 * y + 1, 2 * x + 1)));
    return out;
}

/// Channel-major view of an image: C x (H*W).
template <typename Scalar>
FeatureMap<Scalar> image_to_features(const Image<Scalar>& img, std::string layer = "input")
{
    FeatureMap<Scalar> fm(img.channels, img.height, img.width, std::move(layer), 1);
    fm.data = img.data.transpose();
    return fm;
}

template <typename Scalar>
Image<Scalar> features_to_image(const FeatureMap<Scalar>& fm)
{
    Image<Scalar> img(fm.height, fm.width, fm.channels);
    img.data = fm.data.transpose();
    return img;
}

/// Mean subtraction with the "preprocess.mean" tensor.
template <typename Scalar>
FeatureMap<Scalar> preprocess(const Image<Scalar>& img, const WeightStore& weights)
{
    auto fm = image_to_features(img);
    const Vector<Scalar> mean = weights.vector<Scalar>("preprocess.mean");
    require(mean.size() == fm.channels, ErrorKind::Shape, "preprocess.mean length does not match image channels");
    fm.data.colwise() -= mean;
    return fm;
}

/// Runs the feature stack and returns one map per requested tap, in the
/// requested order. Stops after the deepest requested tap.
template <typename Scalar>
std::vector<FeatureMap<Scalar>> extract_pyramid(const Image<Scalar>& img, const WeightStore& weights,
                                                const NetworkConfig& config, const std::vector<std::string>& taps)
{
    require(img.channels == config.input_channels, ErrorKind::Shape, "image channels do not match network input");
    for (const auto& tap : taps)
        require(config.has_tap(tap), ErrorKind::Config, "tap '" + tap + "' is not reached by the network");

    std::vector<FeatureMap<Scalar>> result(taps.size());
    std::size_t remaining = taps.size();
    auto x = preprocess(img, weights);
    for (const auto& layer : config.layers) {
        if (remaining == 0)
            break;
        switch (layer.kind) {
        case LayerSpec::Kind::Conv: x = conv2d_forward(x, weights, layer.name); break;
        case LayerSpec::Kind::Rectify: x = rectify(std::move(x)); break;
        case LayerSpec::Kind::MaxPool: x = maxpool2x2(x); break;
        }
        if (layer.tap.empty())
            continue;
        for (std::size_t i = 0; i < taps.size(); ++i) {
            if (taps[i] == layer.tap) {
                result[i] = x;
                result[i].layer = layer.tap;
                --remaining;
            }
        }
    }
    return result;
}

} // namespace ntt
