#include "cascade/lattice.hpp"

#include <cmath>

#include "cascade/model.hpp"

namespace cascade {

Lattice::Lattice(int r, int J) : r_(r), J_(J) {
    if (r < 1 || J < 0) throw ValidationError("lattice needs r >= 1 and J >= 0");
    if (static_cast<double>(r) * std::log2(static_cast<double>(J) + 1.0) > 62.0)
        throw ValidationError("lattice too large to index");

    std::vector<int> u(static_cast<std::size_t>(r), 0);
    int total = 0;
    // Odometer over u with sum(u) <= J, last coordinate fastest.
    while (true) {
        index_.emplace(code(u), size());
        states_.insert(states_.end(), u.begin(), u.end());
        int pos = r - 1;
        while (pos >= 0) {
            auto& digit = u[static_cast<std::size_t>(pos)];
            if (total < J) {
                ++digit;
                ++total;
                break;
            }
            total -= digit;
            digit = 0;
            --pos;
        }
        if (pos < 0) break;
    }
}

std::uint64_t Lattice::code(std::span<const int> u) const {
    std::uint64_t c = 0;
    for (int v : u) c = c * static_cast<std::uint64_t>(J_ + 1) + static_cast<std::uint64_t>(v);
    return c;
}

std::optional<std::size_t> Lattice::find(std::span<const int> u) const {
    if (static_cast<int>(u.size()) != r_) return std::nullopt;
    int total = 0;
    for (int v : u) {
        if (v < 0) return std::nullopt;
        total += v;
    }
    if (total > J_) return std::nullopt;
    const auto it = index_.find(code(u));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Lattice::index_of(std::span<const int> u) const {
    const auto idx = find(u);
    if (!idx) throw ValidationError("state " + label(u) + " is not in B^r_{J,+}");
    return *idx;
}

std::string Lattice::label(std::span<const int> u) {
    std::string out;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(u[i]);
    }
    return out;
}

}  // namespace cascade
