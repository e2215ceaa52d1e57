#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "votecert/pointcert.hpp"
#include "votecert/votetab.hpp"

namespace votecert::oracle {

/// What the brute-force adversary tries to achieve.
struct FlipGoal {
    enum class Kind { AnyChange, ForceTarget } kind = Kind::AnyChange;
    TokenId target = 0;  // valid iff kind == ForceTarget

    static FlipGoal any_change() { return {Kind::AnyChange, 0}; }
    static FlipGoal force_target(TokenId t) { return {Kind::ForceTarget, t}; }
};

/// A single vote reassignment: one shard's vote moves from -> to.
using FlipMove = std::pair<TokenId, TokenId>;

struct OracleResult {
    /// Minimum number of single-vote reassignments achieving the goal;
    /// nullopt if unreachable within the search space.
    std::optional<int> min_flips;
    /// Replaying these moves on the input table achieves the goal in exactly
    /// min_flips moves.
    std::vector<FlipMove> witness;
};

/// Breadth-first search over all single-vote reassignments (any class to any
/// class, including zero-count classes) until the goal holds. Globally
/// optimal; throws bound_exceeded when the table total exceeds `bound`.
///
/// States are canonicalized to sorted count multisets plus the goal class
/// count under the count-symmetric policies; Lexicographic keeps full maps.
OracleResult exhaustive_min_flips(const VoteTable& table, FlipGoal goal,
                                  TiePolicy policy, int bound = 12);

/// Cascade adversary: for ForceTarget, move from the maximal competitor to
/// the target; for AnyChange, move from the plurality to the cheapest
/// challenger. Scales to thousands of shards and must equal
/// exhaustive_min_flips wherever both run.
OracleResult greedy_min_flips(const VoteTable& table, FlipGoal goal,
                              TiePolicy policy);

/// Replays `moves` prefix-by-prefix; returns the first length at which the
/// goal holds, or nullopt. Used by witness-validity tests.
std::optional<int> replay_witness(const VoteTable& table, FlipGoal goal,
                                  TiePolicy policy,
                                  const std::vector<FlipMove>& moves);

}  // namespace votecert::oracle
