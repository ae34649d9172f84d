#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lscl {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

/// 64-bit FNV-1a; `seed` chains successive calls.
inline constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = kFnvOffset) {
    std::uint64_t h = seed;
    for (const char c : data) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

/// Streaming fingerprint over heterogeneous fields.
class Fingerprint {
public:
    Fingerprint& add(std::string_view field) {
        // Length prefix keeps ("ab","c") distinct from ("a","bc").
        const auto n = static_cast<std::uint64_t>(field.size());
        state_ = fnv1a64(std::string_view(reinterpret_cast<const char*>(&n), sizeof n), state_);
        state_ = fnv1a64(field, state_);
        return *this;
    }
    Fingerprint& add(double value);
    std::uint64_t value() const { return state_; }
    std::string hex() const { return to_hex(state_); }

private:
    std::uint64_t state_ = kFnvOffset;
};

}  // namespace lscl
