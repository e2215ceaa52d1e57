#pragma once

// Shared post-attack plurality rules. A hypothetical table reached by at
// least one vote reassignment is resolved by the TiePolicy; the unchanged
// observed table always keeps the observed (lexicographic) prediction, so a
// zero-flip "attack" never succeeds.

#include "votecert/votetab.hpp"

namespace votecert::detail {

/// Does `target` take the plurality in a reached table where the best
/// competitor count is `max_comp` and the lowest competitor id at that count
/// is `min_comp_at_max` (ignored unless the policy is Lexicographic)?
inline bool target_wins(int target_count, int max_comp, TokenId target,
                        TokenId min_comp_at_max, TiePolicy policy) {
    switch (policy) {
        case TiePolicy::AdversaryWins: return target_count >= max_comp;
        case TiePolicy::IncumbentWins: return target_count > max_comp;
        case TiePolicy::Lexicographic:
            return target_count > max_comp ||
                   (target_count == max_comp && target < min_comp_at_max);
    }
    return false;
}

/// Does any class displace the incumbent `y0` in a reached table where the
/// best non-incumbent count is `max_other` and the lowest such id at that
/// count is `min_other_at_max`?
inline bool incumbent_displaced(int incumbent_count, int max_other,
                                TokenId incumbent, TokenId min_other_at_max,
                                TiePolicy policy) {
    switch (policy) {
        case TiePolicy::AdversaryWins: return max_other >= incumbent_count;
        case TiePolicy::IncumbentWins: return max_other > incumbent_count;
        case TiePolicy::Lexicographic:
            return max_other > incumbent_count ||
                   (max_other == incumbent_count && min_other_at_max < incumbent);
    }
    return false;
}

/// Flips needed to promote one challenger with gap g = c[y0] - c[challenger]
/// by moving votes from the incumbent to it (each move closes the gap by 2).
inline int flips_to_promote(int gap, bool challenger_wins_tie) {
    if (challenger_wins_tie) {
        int f = (gap + 1) / 2;
        return f < 1 ? 1 : f;
    }
    return gap / 2 + 1;
}

/// Smallest non-negative id absent from the table (best fresh challenger).
inline TokenId smallest_absent_id(const VoteTable& table) {
    TokenId id = 0;
    for (const auto& [token, n] : table.counts()) {
        (void)n;
        if (token > id) break;
        if (token == id) ++id;
    }
    return id;
}

}  // namespace votecert::detail
