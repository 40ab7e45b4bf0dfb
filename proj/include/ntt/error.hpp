#pragma once

#include <stdexcept>
#include <string>

namespace ntt {

enum class ErrorKind {
    Io,              // file missing, unreadable or unwritable
    Decode,          // corrupt or truncated image data
    UnsupportedFormat,
    BadMagic,
    VersionMismatch,
    Checksum,
    Truncated,
    MissingTensor,
    Shape,           // dimension or channel mismatch
    Config,          // malformed or inconsistent configuration
    InvalidArgument,
    Degenerate,      // no usable data (all-zero patches, empty interior)
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what)
{
    if (!condition)
        throw Error(kind, what);
}

} // namespace ntt
