#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "nc/errors.hpp"

// Little-endian primitives for the NCPC/NCAE binary formats. Values are
// packed byte by byte so files are identical regardless of host endianness.

namespace nc::bin {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

inline void write_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}

inline void write_f64(std::ostream& out, double v) {
    write_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t read_u32(std::istream& in, const std::string& context) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw IoError(context + ": truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& in, const std::string& context) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw IoError(context + ": truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

inline std::uint8_t read_u8(std::istream& in, const std::string& context) {
    const int c = in.get();
    if (c == std::istream::traits_type::eof()) throw IoError(context + ": truncated file");
    return static_cast<std::uint8_t>(c);
}

inline double read_f64(std::istream& in, const std::string& context) {
    return std::bit_cast<double>(read_u64(in, context));
}

}  // namespace nc::bin
