#pragma once

// Little-endian fixed-width and LEB128 varint primitives shared by the index
// and checkpoint file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>

#include "tmret/error.hpp"

namespace tmret::detail {

class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw Error("cannot open for writing: " + path.string());
    }

    void bytes(std::string_view data) { out_.write(data.data(), static_cast<std::streamsize>(data.size())); }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void fixed(T value) {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        U bits;
        std::memcpy(&bits, &value, sizeof(T));
        char buf[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
        out_.write(buf, sizeof(T));
    }

    void varint(std::uint64_t value) {
        while (value >= 0x80) {
            out_.put(static_cast<char>((value & 0x7F) | 0x80));
            value >>= 7;
        }
        out_.put(static_cast<char>(value));
    }

    void string(std::string_view s) {
        varint(s.size());
        bytes(s);
    }

    void finish() {
        out_.flush();
        if (!out_) throw Error("write failed: " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path)
        : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw Error("cannot open for reading: " + path.string());
    }

    std::string bytes(std::size_t n) {
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T fixed() {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        unsigned char buf[sizeof(T)];
        in_.read(reinterpret_cast<char*>(buf), sizeof(T));
        check();
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
        T value;
        std::memcpy(&value, &bits, sizeof(T));
        return value;
    }

    std::uint64_t varint() {
        std::uint64_t value = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            const int c = in_.get();
            if (c == std::char_traits<char>::eof()) throw Error("truncated file: " + path_.string());
            value |= static_cast<std::uint64_t>(c & 0x7F) << shift;
            if ((c & 0x80) == 0) return value;
        }
        throw Error("malformed varint in " + path_.string());
    }

    std::string string() { return bytes(static_cast<std::size_t>(varint())); }

    void expect_magic(std::string_view magic) {
        if (bytes(magic.size()) != magic) throw Error("bad magic bytes in " + path_.string());
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

    const std::filesystem::path& path() const { return path_; }

private:
    void check() {
        if (!in_) throw Error("truncated file: " + path_.string());
    }

    std::filesystem::path path_;
    std::ifstream in_;
};

}  // namespace tmret::detail
