#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tokendrop/errors.hpp"

namespace tokendrop {

// Little-endian binary primitives shared by the packed-data, vocabulary,
// checkpoint and importance-table file formats.

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os) throw IoError("write failed");
}

inline void read_bytes(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n) throw IoError("unexpected end of file");
}

template <typename T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));  // host is little-endian
    write_bytes(os, buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    read_bytes(is, buf, sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

template <typename T>
void write_vec(std::ostream& os, const std::vector<T>& v) {
    if (!v.empty()) write_bytes(os, v.data(), v.size() * sizeof(T));
}

template <typename T>
void read_vec(std::istream& is, std::vector<T>& v) {
    if (!v.empty()) read_bytes(is, v.data(), v.size() * sizeof(T));
}

inline std::ofstream open_out(const std::string& path, bool binary = true) {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

inline std::ifstream open_in(const std::string& path, bool binary = true) {
    std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
    if (!is) throw IoError("cannot open for reading: " + path);
    return is;
}

}  // namespace tokendrop
