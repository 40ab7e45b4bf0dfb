#pragma once

#include "ntt/error.hpp"
#include "ntt/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ntt {

struct Tensor {
    std::vector<std::uint32_t> shape;
    std::vector<float> values;

    Tensor() = default;
    Tensor(std::vector<std::uint32_t> dims, std::vector<float> vals);

    std::size_t element_count() const;
    std::size_t dim(std::size_t i) const { return shape.at(i); }
};

/// Named tensor collection, the in-memory form of an NTTW file. Ordered by
/// name so serialization is deterministic.
class WeightStore {
public:
    void insert(const std::string& name, Tensor tensor);
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    /// Throws ErrorKind::MissingTensor when absent.
    const Tensor& at(const std::string& name) const;

    const std::map<std::string, Tensor>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    /// Conv kernel (out, in, kh, kw) as an out x (in*kh*kw) matrix.
    template <typename Scalar>
    Matrix<Scalar> kernel_matrix(const std::string& name) const
    {
        const Tensor& t = at(name);
        require(t.shape.size() == 4, ErrorKind::Shape, name + ": kernel must be 4-D");
        const auto rows = static_cast<Index>(t.shape[0]);
        const auto cols = static_cast<Index>(t.shape[1] * t.shape[2] * t.shape[3]);
        return Eigen::Map<const Matrix<float>>(t.values.data(), rows, cols).template cast<Scalar>();
    }

    template <typename Scalar>
    Vector<Scalar> vector(const std::string& name) const
    {
        const Tensor& t = at(name);
        return Eigen::Map<const Vector<float>>(t.values.data(), static_cast<Index>(t.values.size())).template cast<Scalar>();
    }

    friend bool operator==(const WeightStore& a, const WeightStore& b);

private:
    std::map<std::string, Tensor> entries_;
};

inline bool operator==(const Tensor& a, const Tensor& b) { return a.shape == b.shape && a.values == b.values; }
inline bool operator==(const WeightStore& a, const WeightStore& b) { return a.entries_ == b.entries_; }

inline constexpr std::uint32_t kNttwVersion = 1;

/// Serialized NTTW bytes: "NTTW", u32 version, u32 count, tensors, CRC32.
std::vector<unsigned char> encode_weights(const WeightStore& store);
WeightStore decode_weights(const std::vector<unsigned char>& bytes);

WeightStore load_weights(const std::filesystem::path& path);
void store_weights(const WeightStore& store, const std::filesystem::path& path);

std::uint32_t crc32_of(const unsigned char* data, std::size_t size);

/// Wraps a feature map as a (C, H, W) tensor.
template <typename Scalar>
Tensor to_tensor(const FeatureMap<Scalar>& fm)
{
    std::vector<float> vals(static_cast<std::size_t>(fm.data.size()));
    Eigen::Map<Matrix<float>>(vals.data(), fm.channels, fm.height * fm.width) = fm.data.template cast<float>();
    return Tensor({static_cast<std::uint32_t>(fm.channels), static_cast<std::uint32_t>(fm.height),
                   static_cast<std::uint32_t>(fm.width)},
                  std::move(vals));
}

template <typename Scalar>
FeatureMap<Scalar> to_feature_map(const Tensor& t, std::string layer, int stride)
{
    require(t.shape.size() == 3, ErrorKind::Shape, "feature tensor must be 3-D");
    FeatureMap<Scalar> fm(t.shape[0], t.shape[1], t.shape[2], std::move(layer), stride);
    fm.data = Eigen::Map<const Matrix<float>>(t.values.data(), fm.channels, fm.height * fm.width).template cast<Scalar>();
    return fm;
}

} // namespace ntt
