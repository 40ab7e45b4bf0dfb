#include "ntt/image.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace ntt {

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Decode: return "decode";
    case ErrorKind::UnsupportedFormat: return "unsupported-format";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::VersionMismatch: return "version-mismatch";
    case ErrorKind::Checksum: return "checksum";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::MissingTensor: return "missing-tensor";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Config: return "config";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Degenerate: return "degenerate";
    }
    return "unknown";
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageBuffer from_bytes(const unsigned char* bytes, Index h, Index w, Index c)
{
    ImageBuffer img(h, w, c);
    float* dst = img.data.data();
    for (Index i = 0; i < h * w * c; ++i)
        dst[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

std::vector<unsigned char> to_bytes(const ImageBuffer& img)
{
    std::vector<unsigned char> bytes(static_cast<std::size_t>(img.data.size()));
    const float* src = img.data.data();
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = quantize(src[i]);
    return bytes;
}

ImageBuffer decode_png(const std::vector<unsigned char>& buf, const std::filesystem::path& path)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, buf.data(), buf.size()))
        fail(ErrorKind::Decode, path.string() + ": " + image.message);
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        fail(ErrorKind::UnsupportedFormat, path.string() + ": only 8-bit PNG is supported");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const Index channels = color ? 3 : 1;
    std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr))
        fail(ErrorKind::Decode, path.string() + ": " + image.message);
    return from_bytes(pixels.data(), image.height, image.width, channels);
}

// Netpbm header token reader; skips whitespace and '#' comments.
bool next_token(const std::vector<unsigned char>& buf, std::size_t& pos, std::string& token)
{
    token.clear();
    while (pos < buf.size()) {
        if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n')
                ++pos;
        } else if (std::isspace(buf[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    while (pos < buf.size() && !std::isspace(buf[pos]) && buf[pos] != '#')
        token.push_back(static_cast<char>(buf[pos++]));
    return !token.empty();
}

ImageBuffer decode_pnm(const std::vector<unsigned char>& buf, const std::filesystem::path& path)
{
    std::size_t pos = 0;
    std::string magic, ws, hs, ms;
    if (!next_token(buf, pos, magic) || !next_token(buf, pos, ws) || !next_token(buf, pos, hs) || !next_token(buf, pos, ms))
        fail(ErrorKind::Decode, path.string() + ": truncated netpbm header");
    const Index channels = magic == "P6" ? 3 : 1;
    long w = 0, h = 0, maxval = 0;
    try {
        w = std::stol(ws);
        h = std::stol(hs);
        maxval = std::stol(ms);
    } catch (const std::exception&) {
        fail(ErrorKind::Decode, path.string() + ": malformed netpbm header");
    }
    if (maxval != 255)
        fail(ErrorKind::UnsupportedFormat, path.string() + ": only 8-bit netpbm (maxval 255) is supported");
    if (w <= 0 || h <= 0)
        fail(ErrorKind::Decode, path.string() + ": invalid dimensions");
    ++pos; // single whitespace byte after maxval
    const auto need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(channels);
    if (pos > buf.size() || buf.size() - pos < need)
        fail(ErrorKind::Decode, path.string() + ": truncated pixel data");
    return from_bytes(buf.data() + pos, h, w, channels);
}

std::string lower_extension(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    for (auto& ch : ext)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext;
}

} // namespace

ImageBuffer load_image(const std::filesystem::path& path)
{
    const auto buf = read_file(path);
    static constexpr unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (buf.size() >= 8 && std::memcmp(buf.data(), png_sig, 8) == 0)
        return decode_png(buf, path);
    if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '6' || buf[1] == '5'))
        return decode_pnm(buf, path);
    fail(ErrorKind::UnsupportedFormat, path.string() + ": not a PNG or binary PPM/PGM file");
}

void save_image(const ImageBuffer& img, const std::filesystem::path& path)
{
    require(img.channels == 1 || img.channels == 3, ErrorKind::Shape, "save_image needs 1 or 3 channels");
    require(img.data.size() == img.height * img.width * img.channels && img.height > 0 && img.width > 0,
            ErrorKind::Shape, "image buffer size does not match its dimensions");
    const auto bytes = to_bytes(img);
    const std::string ext = lower_extension(path);

    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            fail(ErrorKind::Io, "cannot write " + path.string());
        out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            fail(ErrorKind::Io, "write failed for " + path.string());
        return;
    }

    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    // Writing to memory keeps the encoded bytes independent of stdio buffering.
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, bytes.data(), 0, nullptr))
        fail(ErrorKind::Io, "png encode failed: " + std::string(image.message));
    std::vector<unsigned char> encoded(size);
    if (!png_image_write_to_memory(&image, encoded.data(), &size, 0, bytes.data(), 0, nullptr))
        fail(ErrorKind::Io, "png encode failed: " + std::string(image.message));
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorKind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(encoded.data()), static_cast<std::streamsize>(size));
    if (!out)
        fail(ErrorKind::Io, "write failed for " + path.string());
}

} // namespace ntt
