#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace ntt {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Spatial extent of a feature map or image.
struct Extent {
    Index height = 0;
    Index width = 0;

    Index area() const { return height * width; }
    friend bool operator==(const Extent&, const Extent&) = default;
};

/// C x H x W activation tensor. Storage is a C x (H*W) row-major matrix, so
/// each channel is one contiguous row and `data(c, y * width + x)` addresses
/// a cell.
template <typename Scalar>
struct FeatureMap {
    Index channels = 0;
    Index height = 0;
    Index width = 0;
    std::string layer;
    /// Cumulative pooling stride relative to the source image.
    int stride = 1;
    Matrix<Scalar> data;

    FeatureMap() = default;
    FeatureMap(Index c, Index h, Index w, std::string name = {}, int s = 1)
        : channels(c), height(h), width(w), layer(std::move(name)), stride(s),
          data(Matrix<Scalar>::Zero(c, h * w))
    {
    }

    Extent extent() const { return {height, width}; }
    Scalar& operator()(Index c, Index y, Index x) { return data(c, y * width + x); }
    Scalar operator()(Index c, Index y, Index x) const { return data(c, y * width + x); }

    template <typename Other>
    FeatureMap<Other> cast() const
    {
        FeatureMap<Other> out;
        out.channels = channels;
        out.height = height;
        out.width = width;
        out.layer = layer;
        out.stride = stride;
        out.data = data.template cast<Other>();
        return out;
    }
};

using FeatureMapf = FeatureMap<float>;

template <typename Scalar>
bool same_shape(const FeatureMap<Scalar>& a, const FeatureMap<Scalar>& b)
{
    return a.channels == b.channels && a.height == b.height && a.width == b.width;
}

} // namespace ntt
