#include "ntt/weights.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

static_assert(std::endian::native == std::endian::little, "NTTW I/O assumes a little-endian host");
static_assert(sizeof(float) == 4);

namespace ntt {

Tensor::Tensor(std::vector<std::uint32_t> dims, std::vector<float> vals) : shape(std::move(dims)), values(std::move(vals))
{
    require(element_count() == values.size(), ErrorKind::Shape, "tensor value count does not match its shape");
}

std::size_t Tensor::element_count() const
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t acc, std::uint32_t d) { return acc * d; });
}

void WeightStore::insert(const std::string& name, Tensor tensor)
{
    require(!name.empty() && name.size() <= 0xFFFF, ErrorKind::InvalidArgument, "tensor name length out of range");
    require(tensor.shape.size() <= 0xFF, ErrorKind::InvalidArgument, name + ": too many dimensions");
    require(tensor.element_count() == tensor.values.size(), ErrorKind::Shape, name + ": value count does not match shape");
    entries_[name] = std::move(tensor);
}

const Tensor& WeightStore::at(const std::string& name) const
{
    const auto it = entries_.find(name);
    if (it == entries_.end())
        fail(ErrorKind::MissingTensor, "missing weight tensor '" + name + "'");
    return it->second;
}

std::uint32_t crc32_of(const unsigned char* data, std::size_t size)
{
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    while (size > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
        crc = crc32(crc, data, chunk);
        data += chunk;
        size -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

namespace {

template <typename T>
void put(std::vector<unsigned char>& out, T value)
{
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
public:
    Reader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

    template <typename T>
    T get()
    {
        T value;
        take(&value, sizeof(T));
        return value;
    }

    void take(void* dst, std::size_t n)
    {
        if (size_ - pos_ < n)
            fail(ErrorKind::Truncated, "weight file truncated");
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return size_ - pos_; }

private:
    const unsigned char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<unsigned char> encode_weights(const WeightStore& store)
{
    std::vector<unsigned char> out;
    out.insert(out.end(), {'N', 'T', 'T', 'W'});
    put<std::uint32_t>(out, kNttwVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, tensor] : store.entries()) {
        put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.shape.size()));
        for (auto d : tensor.shape)
            put<std::uint32_t>(out, d);
        const auto* raw = reinterpret_cast<const unsigned char*>(tensor.values.data());
        out.insert(out.end(), raw, raw + tensor.values.size() * sizeof(float));
    }
    put<std::uint32_t>(out, crc32_of(out.data(), out.size()));
    return out;
}

WeightStore decode_weights(const std::vector<unsigned char>& bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "NTTW", 4) != 0)
        fail(ErrorKind::BadMagic, "not an NTTW weight file");
    if (bytes.size() < 16)
        fail(ErrorKind::Truncated, "weight file truncated");

    Reader header(bytes.data() + 4, bytes.size() - 4);
    const auto version = header.get<std::uint32_t>();
    if (version != kNttwVersion)
        fail(ErrorKind::VersionMismatch, "unsupported NTTW version " + std::to_string(version));

    const std::size_t body = bytes.size() - 4;
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, bytes.data() + body, 4);

    Reader in(bytes.data() + 8, body - 8);
    const auto count = in.get<std::uint32_t>();
    WeightStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = in.get<std::uint16_t>();
        std::string name(name_len, '\0');
        in.take(name.data(), name_len);
        const auto ndim = in.get<std::uint8_t>();
        std::vector<std::uint32_t> shape(ndim);
        for (auto& d : shape)
            d = in.get<std::uint32_t>();
        std::size_t n = 1;
        for (auto d : shape)
            n *= d;
        if (n > in.remaining() / sizeof(float))
            fail(ErrorKind::Truncated, "weight file truncated in tensor '" + name + "'");
        std::vector<float> values(n);
        in.take(values.data(), n * sizeof(float));
        store.insert(name, Tensor(std::move(shape), std::move(values)));
    }
    if (in.remaining() != 0)
        fail(ErrorKind::Truncated, "weight file has a malformed tensor table");
    if (crc32_of(bytes.data(), body) != stored_crc)
        fail(ErrorKind::Checksum, "weight file checksum mismatch");
    return store;
}

WeightStore load_weights(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::Io, "cannot open weight file " + path.string());
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_weights(bytes);
}

void store_weights(const WeightStore& store, const std::filesystem::path& path)
{
    const auto bytes = encode_weights(store);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorKind::Io, "cannot write weight file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        fail(ErrorKind::Io, "write failed for " + path.string());
}

} // namespace ntt
