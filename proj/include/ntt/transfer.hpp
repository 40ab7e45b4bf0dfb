#pragma once

#include "ntt/error.hpp"
#include "ntt/feature_swap.hpp"
#include "ntt/image.hpp"
#include "ntt/network.hpp"
#include "ntt/types.hpp"
#include "ntt/weights.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ntt {

/// Generator layout. Weight names (all under "gen."):
///   entry1, entry2                       3 -> C -> C stem at LR resolution
///   level<l>.head                        (C + C_M) -> C
///   level<l>.block<b>.conv1 / .conv2     residual blocks, C -> C
///   level<l>.tail                        C -> C
///   level<l>.up                          C -> 4C, then 2x pixel shuffle
///   out                                  C -> 3
struct TransferConfig {
    /// Swapped-map layers merged at each level, coarse to fine.
    std::vector<std::string> levels = {"relu3_1", "relu2_1", "relu1_1"};
    Index blocks = 16;
    Index channels = 64;
    int sr_factor = 4;

    Index level_count() const { return static_cast<Index>(levels.size()); }
    void validate() const;
};

nlohmann::json to_json(const TransferConfig& cfg);
TransferConfig transfer_config_from_json(const nlohmann::json& j);

inline std::string level_prefix(Index l) { return "gen.level" + std::to_string(l); }

/// Seeded He-uniform generator weights. `texture_channels[l]` is the channel
/// count of the swapped map merged at level l. Second convolutions inside
/// residual branches are scaled by 0.1 so deep random trunks stay bounded.
WeightStore init_generator_weights(const TransferConfig& cfg, const std::vector<Index>& texture_channels,
                                   std::uint64_t seed);

/// conv -> rectify -> conv, plus the identity skip.
template <typename Scalar>
FeatureMap<Scalar> residual_block_forward(const FeatureMap<Scalar>& x, const WeightStore& weights, const std::string& name)
{
    auto y = conv2d_forward(rectify(conv2d_forward(x, weights, name + ".conv1")), weights, name + ".conv2");
    require(same_shape(x, y), ErrorKind::Shape, name + ": residual branch changes the shape");
    y.data += x.data;
    return y;
}

/// Channel-to-space rearrangement:
/// out(c, y, x) = in(c*r*r + (y % r)*r + (x % r), y / r, x / r).
template <typename Scalar>
FeatureMap<Scalar> subpixel_upscale(const FeatureMap<Scalar>& in, int r)
{
    require(r >= 1, ErrorKind::InvalidArgument, "upscale factor must be positive");
    const Index rr = static_cast<Index>(r) * r;
    require(in.channels % rr == 0, ErrorKind::Shape,
            std::to_string(in.channels) + " channels are not divisible by " + std::to_string(rr));
    FeatureMap<Scalar> out(in.channels / rr, in.height * r, in.width * r, in.layer, in.stride > 1 ? in.stride / r : 1);
    for (Index c = 0; c < out.channels; ++c)
        for (Index y = 0; y < out.height; ++y)
            for (Index x = 0; x < out.width; ++x)
                out(c, y, x) = in(c * rr + (y % r) * r + (x % r), y / r, x / r);
    return out;
}

/// Channel-wise concatenation (a || b), a's channels first.
template <typename Scalar>
FeatureMap<Scalar> concat_channels(const FeatureMap<Scalar>& a, const FeatureMap<Scalar>& b)
{
    require(a.extent() == b.extent(), ErrorKind::Shape,
            "cannot concatenate " + std::to_string(a.height) + "x" + std::to_string(a.width) + " with "
                + std::to_string(b.height) + "x" + std::to_string(b.width));
    FeatureMap<Scalar> out(a.channels + b.channels, a.height, a.width, a.layer, a.stride);
    out.data.topRows(a.channels) = a.data;
    out.data.bottomRows(b.channels) = b.data;
    return out;
}

/// psi_0: two 3x3 convolutions with rectification on the native-resolution LR
/// image.
template <typename Scalar>
FeatureMap<Scalar> content_base(const Image<Scalar>& lr, const WeightStore& weights)
{
    auto x = rectify(conv2d_forward(image_to_features(lr, "psi"), weights, "gen.entry1"));
    return rectify(conv2d_forward(x, weights, "gen.entry2"));
}

/// Res(x) for level l: head conv, residual blocks, tail conv.
template <typename Scalar>
FeatureMap<Scalar> residual_stack_forward(const FeatureMap<Scalar>& x, const WeightStore& weights, Index level, Index blocks)
{
    const std::string prefix = level_prefix(level);
    auto h = conv2d_forward(x, weights, prefix + ".head");
    for (Index b = 0; b < blocks; ++b)
        h = residual_block_forward(h, weights, prefix + ".block" + std::to_string(b));
    return conv2d_forward(h, weights, prefix + ".tail");
}

/// One 2x sub-pixel stage: conv to 4C, pixel shuffle, rectify.
template <typename Scalar>
FeatureMap<Scalar> upscale_stage_forward(const FeatureMap<Scalar>& x, const WeightStore& weights, Index level)
{
    return rectify(subpixel_upscale(conv2d_forward(x, weights, level_prefix(level) + ".up"), 2));
}

/// Generator forward pass. For l < L-1:
///   psi_{l+1} = [Res(psi_l || M_l) + psi_l] up2x
/// and at the last level the merge Res(psi || M) + psi is not upscaled; a
/// linear output convolution maps it to 3 channels. transfer_forward_raw
/// returns that map unclamped; transfer_forward clamps it into an image.
template <typename Scalar>
FeatureMap<Scalar> transfer_forward_raw(const FeatureMap<Scalar>& content, const SwappedPyramid<Scalar>& pyramid,
                                        const WeightStore& weights, const TransferConfig& cfg)
{
    cfg.validate();
    FeatureMap<Scalar> psi = content;
    for (Index l = 0; l < cfg.level_count(); ++l) {
        const auto& m = pyramid.level(cfg.levels[static_cast<std::size_t>(l)]).swapped;
        require(m.extent() == psi.extent(), ErrorKind::Shape,
                "level " + std::to_string(l) + ": M is " + std::to_string(m.height) + "x" + std::to_string(m.width)
                    + " but psi is " + std::to_string(psi.height) + "x" + std::to_string(psi.width));
        auto merged = residual_stack_forward(concat_channels(psi, m), weights, l, cfg.blocks);
        require(same_shape(merged, psi), ErrorKind::Shape, "level " + std::to_string(l) + ": Res output shape mismatch");
        merged.data += psi.data;
        psi = l + 1 < cfg.level_count() ? upscale_stage_forward(merged, weights, l) : std::move(merged);
    }
    return conv2d_forward(psi, weights, "gen.out");
}

template <typename Scalar>
Image<Scalar> transfer_forward(const FeatureMap<Scalar>& content, const SwappedPyramid<Scalar>& pyramid,
                               const WeightStore& weights, const TransferConfig& cfg)
{
    return clamp_unit(features_to_image(transfer_forward_raw(content, pyramid, weights, cfg)));
}

/// SISR fallback reference: the bicubic-upscaled LR image.
template <typename Scalar>
std::vector<Image<Scalar>> self_reference(const Image<Scalar>& lr, int sr_factor)
{
    return {bicubic_resample(lr, static_cast<double>(sr_factor))};
}

} // namespace ntt
