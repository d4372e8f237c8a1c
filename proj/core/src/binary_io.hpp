#pragma once

// Little-endian primitives shared by the on-disk formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "geoprune/error.hpp"

namespace geoprune::detail {

template <class T>
T byteswap_if_big(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        unsigned char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
        std::memcpy(&v, buf, sizeof(T));
    }
    return v;
}

class ByteWriter {
public:
    template <class T>
    void put(T v) {
        v = byteswap_if_big(v);
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    template <class T>
    void put_all(std::span<const T> values) {
        if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
            const auto* p = reinterpret_cast<const unsigned char*>(values.data());
            bytes_.insert(bytes_.end(), p, p + values.size_bytes());
        } else {
            for (const T& v : values) put(v);
        }
    }
    void put_raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

    std::vector<unsigned char>& bytes() { return bytes_; }
    const std::vector<unsigned char>& bytes() const { return bytes_; }

private:
    std::vector<unsigned char> bytes_;
};

class ByteReader {
public:
    ByteReader(std::span<const unsigned char> bytes, std::string context)
        : bytes_(bytes), context_(std::move(context)) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return byteswap_if_big(v);
    }
    template <class T>
    std::vector<T> get_all(std::size_t count) {
        need(count * sizeof(T));
        std::vector<T> out(count);
        if (count > 0) std::memcpy(out.data(), bytes_.data() + pos_, count * sizeof(T));
        pos_ += count * sizeof(T);
        if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
            for (T& v : out) v = byteswap_if_big(v);
        }
        return out;
    }
    std::string get_raw(std::size_t count) {
        need(count);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), count);
        pos_ += count;
        return s;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) {
            throw FormatError(context_ + ": truncated, need " + std::to_string(pos_ + n) + " bytes, have " +
                              std::to_string(bytes_.size()));
        }
    }

    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
    std::string context_;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace geoprune::detail
