#include "bitlattice/path_key.hpp"

#include <bit>

#include "bitlattice/error.hpp"

namespace bitlattice {

PathKey::PathKey(std::uint64_t bits, int length) : bits_(bits), length_(length) {
    if (length < 0 || length > kMaxPathLength) {
        throw Error(ErrorCode::InvalidHorizon, "path length " + std::to_string(length) + " out of range");
    }
    if (length < 64 && (bits >> length) != 0) {
        throw Error(ErrorCode::InvalidArgument, "path bits exceed path length");
    }
}

PathKey PathKey::parse(std::string_view text) {
    if (static_cast<int>(text.size()) > kMaxPathLength) {
        throw Error(ErrorCode::InvalidHorizon, "path string too long");
    }
    std::uint64_t bits = 0;
    for (char c : text) {
        if (c != '0' && c != '1') {
            throw Error(ErrorCode::InvalidArgument, "path string must contain only 0/1: '" + std::string(text) + "'");
        }
        bits = (bits << 1) | static_cast<std::uint64_t>(c - '0');
    }
    return PathKey(bits, static_cast<int>(text.size()));
}

int PathKey::bit(int k) const {
    if (k < 1 || k > length_) {
        throw Error(ErrorCode::InvalidArgument, "bit index out of range");
    }
    return static_cast<int>((bits_ >> (length_ - k)) & 1U);
}

int PathKey::last_bit() const { return bit(length_); }

int PathKey::up_count() const noexcept { return std::popcount(bits_); }

PathKey PathKey::child(int next_bit) const {
    return PathKey((bits_ << 1) | static_cast<std::uint64_t>(next_bit != 0), length_ + 1);
}

PathKey PathKey::prefix(int n) const {
    if (n < 0 || n > length_) {
        throw Error(ErrorCode::InvalidArgument, "prefix length out of range");
    }
    return PathKey(bits_ >> (length_ - n), n);
}

std::string PathKey::to_string() const {
    std::string out(static_cast<std::size_t>(length_), '0');
    for (int k = 0; k < length_; ++k) {
        if ((bits_ >> (length_ - 1 - k)) & 1U) out[static_cast<std::size_t>(k)] = '1';
    }
    return out;
}

}  // namespace bitlattice
