#pragma once

#include "ntt/error.hpp"
#include "ntt/feature_swap.hpp"
#include "ntt/image.hpp"
#include "ntt/network.hpp"
#include "ntt/types.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ntt {

struct LossWeights {
    double rec = 1.0;
    double per = 1e-4;
    double adv = 1e-6;
    double tex = 1e-4;
};

struct TextureLossConfig {
    std::vector<std::string> layers = {"relu1_1", "relu2_1", "relu3_1"};
};

/// lambda_l = 1 / (4 C^2 (H W)^2).
inline double texture_normalization(Index channels, Index height, Index width)
{
    const double c = static_cast<double>(channels);
    const double hw = static_cast<double>(height * width);
    return 1.0 / (4.0 * c * c * hw * hw);
}

struct LossParts {
    double rec = 0.0;
    double per = 0.0;
    double tex = 0.0;
    std::optional<double> adv;
};

nlohmann::json to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TextureLossConfig& cfg);
TextureLossConfig texture_config_from_json(const nlohmann::json& j);

/// w_rec rec + w_per per + w_adv adv + w_tex tex, adv defaulting to 0.
double total_objective(const LossParts& parts, const LossWeights& w);

/// Mean absolute difference over all elements.
template <typename Scalar>
double rec_loss(const Image<Scalar>& sr, const Image<Scalar>& hr)
{
    require(same_shape(sr, hr), ErrorKind::Shape, "rec_loss: image shapes differ");
    return (sr.data.template cast<double>() - hr.data.template cast<double>()).cwiseAbs().mean();
}

/// (1/V) sum_i |phi_i(a) - phi_i(b)|_F over channels, V = C H W.
template <typename Scalar>
double perceptual_distance(const FeatureMap<Scalar>& a, const FeatureMap<Scalar>& b)
{
    require(same_shape(a, b), ErrorKind::Shape, "perceptual_distance: feature shapes differ");
    const Matrix<double> diff = a.data.template cast<double>() - b.data.template cast<double>();
    const double volume = static_cast<double>(a.channels * a.height * a.width);
    return diff.rowwise().norm().sum() / volume;
}

template <typename Scalar>
double perceptual_loss(const Image<Scalar>& sr, const Image<Scalar>& hr, const WeightStore& weights,
                       const NetworkConfig& net, const std::string& layer = "relu5_1")
{
    require(same_shape(sr, hr), ErrorKind::Shape, "perceptual_loss: image shapes differ");
    const auto fs = extract_pyramid(sr, weights, net, {layer});
    const auto fh = extract_pyramid(hr, weights, net, {layer});
    return perceptual_distance(fh[0], fs[0]);
}

/// G = F F^T over the C x (H*W) feature matrix, unnormalized.
template <typename Scalar>
Matrix<Scalar> gram_matrix(const FeatureMap<Scalar>& fm)
{
    require(fm.channels > 0 && fm.height * fm.width > 0, ErrorKind::InvalidArgument, "gram_matrix of an empty map");
    Matrix<Scalar> g = Matrix<Scalar>::Zero(fm.channels, fm.channels);
    g.template selfadjointView<Eigen::Lower>().rankUpdate(fm.data);
    g.template triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

/// Every channel multiplied element-wise by a one-channel weight map.
template <typename Scalar>
FeatureMap<Scalar> weight_features(const FeatureMap<Scalar>& fm, const FeatureMap<Scalar>& weight)
{
    require(weight.channels == 1 && weight.extent() == fm.extent(), ErrorKind::Shape,
            "weight map must be one channel at the feature resolution");
    FeatureMap<Scalar> out = fm;
    out.data.array().rowwise() *= weight.data.row(0).array();
    return out;
}

/// Per-layer term lambda_l |Gr(phi * S) - Gr(M * S)|_F.
template <typename Scalar>
double texture_term(const FeatureMap<Scalar>& sr_features, const FeatureMap<Scalar>& swapped, const FeatureMap<Scalar>& weight)
{
    require(same_shape(sr_features, swapped), ErrorKind::Shape,
            "texture_loss: SR features and swapped map differ in shape at " + swapped.layer);
    const auto gs = gram_matrix(weight_features(sr_features, weight)).template cast<double>();
    const auto gm = gram_matrix(weight_features(swapped, weight)).template cast<double>();
    return texture_normalization(swapped.channels, swapped.height, swapped.width) * (gs - gm).norm();
}

/// Sum over cfg.layers; sr_features[i] belongs to cfg.layers[i].
template <typename Scalar>
double texture_loss(const std::vector<FeatureMap<Scalar>>& sr_features, const SwappedPyramid<Scalar>& pyramid,
                    const TextureLossConfig& cfg)
{
    require(sr_features.size() == cfg.layers.size(), ErrorKind::Shape, "texture_loss: one feature map per layer expected");
    double total = 0.0;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const auto& level = pyramid.level(cfg.layers[i]);
        total += texture_term(sr_features[i], level.swapped, level.weight);
    }
    return total;
}

/// 10 log10(1 / MSE); +inf for identical images.
template <typename Scalar>
double psnr(const Image<Scalar>& a, const Image<Scalar>& b)
{
    require(same_shape(a, b), ErrorKind::Shape, "psnr: image shapes differ");
    const double mse = (a.data.template cast<double>() - b.data.template cast<double>()).squaredNorm()
                     / static_cast<double>(a.data.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

namespace detail {

inline Vector<double> gaussian_window(int size, double sigma)
{
    Vector<double> w(size);
    const double c = 0.5 * (size - 1);
    for (int i = 0; i < size; ++i)
        w(i) = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    return w / w.sum();
}

/// Separable "valid" filtering of an H x W matrix.
inline Matrix<double> filter_valid(const Matrix<double>& img, const Vector<double>& w)
{
    const Index k = w.size();
    const Index oh = img.rows() - k + 1;
    const Index ow = img.cols() - k + 1;
    Matrix<double> rows = Matrix<double>::Zero(img.rows(), ow);
    for (Index t = 0; t < k; ++t)
        rows += w(t) * img.middleCols(t, ow);
    Matrix<double> out = Matrix<double>::Zero(oh, ow);
    for (Index t = 0; t < k; ++t)
        out += w(t) * rows.middleRows(t, oh);
    return out;
}

} // namespace detail

/// Single-scale SSIM on luma with a Gaussian window, averaged over valid
/// window positions.
template <typename Scalar>
double ssim(const Image<Scalar>& a, const Image<Scalar>& b, const SsimOptions& opt = {})
{
    require(same_shape(a, b), ErrorKind::Shape, "ssim: image shapes differ");
    require(a.height >= opt.window && a.width >= opt.window, ErrorKind::InvalidArgument,
            "ssim: image is smaller than the " + std::to_string(opt.window) + "x" + std::to_string(opt.window) + " window");
    const auto la = to_luma(a);
    const auto lb = to_luma(b);
    const Matrix<double> x = Eigen::Map<const Matrix<Scalar>>(la.data.data(), a.height, a.width).template cast<double>();
    const Matrix<double> y = Eigen::Map<const Matrix<Scalar>>(lb.data.data(), b.height, b.width).template cast<double>();

    const auto w = detail::gaussian_window(opt.window, opt.sigma);
    const Matrix<double> mx = detail::filter_valid(x, w);
    const Matrix<double> my = detail::filter_valid(y, w);
    const Matrix<double> sxx = detail::filter_valid(x.cwiseProduct(x), w) - mx.cwiseProduct(mx);
    const Matrix<double> syy = detail::filter_valid(y.cwiseProduct(y), w) - my.cwiseProduct(my);
    const Matrix<double> sxy = detail::filter_valid(x.cwiseProduct(y), w) - mx.cwiseProduct(my);

    const double c1 = opt.k1 * opt.k1;
    const double c2 = opt.k2 * opt.k2;
    const auto num = (2.0 * mx.cwiseProduct(my).array() + c1) * (2.0 * sxy.array() + c2);
    const auto den = (mx.cwiseProduct(mx).array() + my.cwiseProduct(my).array() + c1) * (sxx.array() + syy.array() + c2);
    return (num / den).mean();
}

} // namespace ntt
