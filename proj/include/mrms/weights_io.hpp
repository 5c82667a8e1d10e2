#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mrms/common.hpp"
#include "mrms/tensor.hpp"

namespace mrms {

struct NamedParam {
    std::string name;
    Tensor tensor;
};

// Flat binary weight container. Layout, all integers little-endian:
//   magic "TSCW", u32 version (1), u64 parameter count,
//   then per parameter: u32 name length, name bytes,
//   u32 ndim, u64 dims..., raw IEEE-754 doubles.
namespace weights_detail {

constexpr char kMagic[4] = {'T', 'S', 'C', 'W'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

inline void write_f64(std::ostream& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    write_le<uint64_t>(out, bits);
}

inline double read_f64(std::istream& in) {
    uint64_t bits = read_le<uint64_t>(in);
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
}

}  // namespace weights_detail

inline void save_weights(const std::string& path, const std::vector<NamedParam>& params) {
    std::ofstream out(path, std::ios::binary);
    require_data(out.good(), "save_weights: cannot open " + path);
    out.write(weights_detail::kMagic, 4);
    weights_detail::write_le<uint32_t>(out, weights_detail::kVersion);
    weights_detail::write_le<uint64_t>(out, params.size());
    for (const auto& p : params) {
        weights_detail::write_le<uint32_t>(out, static_cast<uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        weights_detail::write_le<uint32_t>(out, static_cast<uint32_t>(p.tensor.shape().size()));
        for (int d : p.tensor.shape()) weights_detail::write_le<uint64_t>(out, static_cast<uint64_t>(d));
        for (double v : p.tensor.data()) weights_detail::write_f64(out, v);
    }
    require_data(out.good(), "save_weights: write failed for " + path);
}

// Loads into an existing parameter list; names and shapes must match exactly.
inline void load_weights(const std::string& path, std::vector<NamedParam>& params) {
    std::ifstream in(path, std::ios::binary);
    require_data(in.good(), "load_weights: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    require_data(in.good() && std::memcmp(magic, weights_detail::kMagic, 4) == 0,
                 "load_weights: bad magic in " + path);
    const uint32_t version = weights_detail::read_le<uint32_t>(in);
    require_data(version == weights_detail::kVersion,
                 "load_weights: unsupported version " + std::to_string(version));
    const uint64_t count = weights_detail::read_le<uint64_t>(in);
    require_data(count == params.size(),
                 "load_weights: parameter count mismatch (file " + std::to_string(count) +
                     ", model " + std::to_string(params.size()) + ")");
    for (auto& p : params) {
        const uint32_t name_len = weights_detail::read_le<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        require_data(name == p.name, "load_weights: expected parameter '" + p.name + "', found '" +
                                         name + "'");
        const uint32_t ndim = weights_detail::read_le<uint32_t>(in);
        require_data(ndim == p.tensor.shape().size(),
                     "load_weights: rank mismatch for " + p.name);
        for (int d : p.tensor.shape()) {
            const uint64_t got = weights_detail::read_le<uint64_t>(in);
            require_data(got == static_cast<uint64_t>(d),
                         "load_weights: shape mismatch for " + p.name);
        }
        for (double& v : p.tensor.data()) v = weights_detail::read_f64(in);
        require_data(in.good(), "load_weights: truncated file at " + p.name);
    }
}

}  // namespace mrms
