#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace bitlattice {

// Upper bound on any path length the library will index (2^N nodes per stage).
inline constexpr int kMaxPathLength = 30;

/// A node of the binary information tree, identified by its up/down history
/// m_1..m_n. Bits are packed with m_1 as the most significant bit, so the
/// packed value is also the node's 0-based index within stage n, and the
/// children of index i are 2i (down) and 2i+1 (up).
class PathKey {
public:
    PathKey() = default;
    PathKey(std::uint64_t bits, int length);

    static PathKey root() { return {}; }
    /// Parses a 0/1 string with m_1 first ("" is the root).
    static PathKey parse(std::string_view text);

    int length() const noexcept { return length_; }
    std::uint64_t index() const noexcept { return bits_; }

    /// m_k for 1 <= k <= length().
    int bit(int k) const;
    int last_bit() const;
    int up_count() const noexcept;

    PathKey child(int next_bit) const;
    PathKey prefix(int n) const;
    PathKey parent() const { return prefix(length_ - 1); }

    /// 1-based rank of the node among stage-n nodes.
    std::uint64_t rank() const noexcept { return bits_ + 1; }

    std::string to_string() const;

    friend bool operator==(const PathKey&, const PathKey&) = default;
    friend auto operator<=>(const PathKey&, const PathKey&) = default;

private:
    std::uint64_t bits_ = 0;
    int length_ = 0;
};

/// Flat storage offset of stage n in a full tree (stages 0..N stored back to back).
constexpr std::size_t stage_offset(int stage) { return (std::size_t{1} << stage) - 1; }
constexpr std::size_t stage_size(int stage) { return std::size_t{1} << stage; }
constexpr std::size_t total_nodes(int steps) { return (std::size_t{1} << (steps + 1)) - 1; }

}  // namespace bitlattice
