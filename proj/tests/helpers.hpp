#pragma once

// Shared test utilities: seeded random vote tables and table literals.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "votecert/votetab.hpp"

namespace votecert::testing {

inline VoteTable table(std::map<TokenId, int> counts) {
    return VoteTable(std::move(counts));
}

struct TableGen {
    std::mt19937_64 rng;

    explicit TableGen(std::uint64_t seed) : rng(seed) {}

    /// Random table with 1..max_classes classes and total votes <= max_total
    /// (at least 1). Class ids are drawn from a slightly larger range so
    /// tables with gaps and high ids occur.
    VoteTable next(int max_classes, int max_total) {
        while (true) {
            const int classes = 1 + static_cast<int>(rng() % max_classes);
            std::map<TokenId, int> counts;
            int left = max_total;
            for (int c = 0; c < classes && left > 0; ++c) {
                TokenId id = static_cast<TokenId>(rng() % (2 * max_classes));
                int votes = 1 + static_cast<int>(rng() % left);
                counts[id] += votes;
                left -= votes;
            }
            if (!counts.empty()) return VoteTable(std::move(counts));
        }
    }

    /// Shard-style table: exactly `shards` votes over <= max_classes classes.
    VoteTable shard_table(int shards, int max_classes) {
        std::map<TokenId, int> counts;
        for (int s = 0; s < shards; ++s) {
            counts[static_cast<TokenId>(rng() % max_classes)] += 1;
        }
        return VoteTable(std::move(counts));
    }

    TokenId token(int range) { return static_cast<TokenId>(rng() % range); }
};

/// All vote tables over class ids {0..max_classes-1} with total in
/// [1, max_total], enumerated deterministically.
inline std::vector<VoteTable> all_tables(int max_classes, int max_total) {
    std::vector<VoteTable> out;
    std::vector<int> counts(static_cast<std::size_t>(max_classes), 0);
    std::function<void(int, int)> walk = [&](int idx, int left) {
        if (idx == max_classes) {
            std::map<TokenId, int> m;
            for (int c = 0; c < max_classes; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) {
                    m[c] = counts[static_cast<std::size_t>(c)];
                }
            }
            if (!m.empty()) out.push_back(VoteTable(std::move(m)));
            return;
        }
        for (int v = 0; v <= left; ++v) {
            counts[static_cast<std::size_t>(idx)] = v;
            walk(idx + 1, left - v);
        }
        counts[static_cast<std::size_t>(idx)] = 0;
    };
    walk(0, max_total);
    return out;
}

}  // namespace votecert::testing
