#include "lscl/hashing.hpp"

#include <bit>
#include <cstdio>

namespace lscl {

std::string to_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

Fingerprint& Fingerprint::add(double value) {
    const auto bits = std::bit_cast<std::uint64_t>(value);
    state_ = fnv1a64(std::string_view(reinterpret_cast<const char*>(&bits), sizeof bits), state_);
    return *this;
}

}  // namespace lscl
