#ifndef FINDIM_UTIL_HPP
#define FINDIM_UTIL_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace findim {

/// FNV-1a 64-bit hash, used for spec fingerprints in run manifests.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Full-precision decimal form of a double (round-trips exactly).
std::string format_double(double v);

/// Hex form of a 64-bit hash.
std::string hex64(std::uint64_t v);

}  // namespace findim

#endif
