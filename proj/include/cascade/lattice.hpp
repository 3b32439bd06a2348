#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace cascade {

/// The finite set B^r_{J,+} = { u in N_0^r : sum(u) <= J } of complex occupancies.
/// States are enumerated in lexicographic order; index 0 is the empty block.
class Lattice {
public:
    Lattice(int r, int J);

    int r() const { return r_; }
    int J() const { return J_; }
    std::size_t size() const { return states_.size() / static_cast<std::size_t>(r_); }

    std::span<const int> state(std::size_t index) const {
        return {states_.data() + index * static_cast<std::size_t>(r_), static_cast<std::size_t>(r_)};
    }

    std::optional<std::size_t> find(std::span<const int> u) const;
    /// Throws if u is not in the lattice.
    std::size_t index_of(std::span<const int> u) const;

    /// "2;0;1"
    static std::string label(std::span<const int> u);

private:
    std::uint64_t code(std::span<const int> u) const;

    int r_;
    int J_;
    std::vector<int> states_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

}  // namespace cascade
