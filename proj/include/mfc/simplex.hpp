#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfc/error.hpp"

namespace mfc {

// Number of ways to write `total` as an ordered sum of `parts` nonnegative
// integers: C(total + parts - 1, parts - 1). Throws once the count passes cap.
inline std::int64_t composition_count(std::int64_t total, int parts, std::int64_t cap) {
    __int128 acc = 1;
    for (int i = 1; i < parts; ++i) {
        acc = acc * (total + i) / i;
        if (acc > cap)
            throw Error::capacity("simplex enumeration needs more than " + std::to_string(cap) +
                                  " atoms");
    }
    return static_cast<std::int64_t>(acc);
}

// All count vectors with `parts` nonnegative entries summing to `total`,
// ascending lexicographic order.
inline std::vector<Eigen::VectorXi> enumerate_compositions(std::int64_t total, int parts,
                                                           std::int64_t cap) {
    composition_count(total, parts, cap);
    std::vector<Eigen::VectorXi> out;
    Eigen::VectorXi cur(parts);
    auto rec = [&](auto&& self, int pos, std::int64_t rem) -> void {
        if (pos == parts - 1) {
            cur[pos] = static_cast<int>(rem);
            out.push_back(cur);
            return;
        }
        for (std::int64_t v = 0; v <= rem; ++v) {
            cur[pos] = static_cast<int>(v);
            self(self, pos + 1, rem - v);
        }
    };
    rec(rec, 0, total);
    return out;
}

// Rank of a composition within the ascending lexicographic enumeration.
inline std::int64_t composition_rank(const Eigen::VectorXi& c) {
    int parts = static_cast<int>(c.size());
    std::int64_t total = 0;
    for (int i = 0; i < parts; ++i) total += c[i];
    std::int64_t rank = 0;
    std::int64_t remaining = total;
    for (int pos = 0; pos < parts - 1; ++pos) {
        for (int v = 0; v < c[pos]; ++v) {
            std::int64_t n = remaining - v;  // mass left for the suffix
            int k = parts - pos - 1;         // suffix length
            __int128 cnt = 1;
            for (int i = 1; i < k; ++i) cnt = cnt * (n + i) / i;
            rank += static_cast<std::int64_t>(cnt);
        }
        remaining -= c[pos];
    }
    return rank;
}

} // namespace mfc
