#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphreg {

// All numerics run in 64-bit; switch here for a 32-bit build.
using Scalar = double;
using Index = Eigen::Index;

using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using RowMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

using Rng = std::mt19937_64;

// FNV-1a, also used as the container checksum.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

// Derives an independent named stream from one master seed so that pipeline
// stages (data, init, sampler, ...) are reproducible in isolation.
inline Rng substream(std::uint64_t master_seed, const std::string& name) {
    std::uint64_t h = fnv1a(name.data(), name.size());
    h ^= master_seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return Rng(h);
}

inline bool all_finite(const Eigen::Ref<const VectorX>& v) {
    return v.allFinite();
}

template <typename... Args>
std::string cat(Args&&... args) {
    std::string out;
    ((out += [](auto&& a) {
         if constexpr (std::is_convertible_v<decltype(a), std::string>) return std::string(a);
         else return std::to_string(a);
     }(std::forward<Args>(args))),
     ...);
    return out;
}

}  // namespace graphreg
