#pragma once

#include <boost/rational.hpp>
#include <optional>
#include <string>
#include <vector>

#include "votecert/votetab.hpp"

namespace votecert {

/// Exact rational arithmetic for meeting levels and attack margins.
/// Certificates carry no floating point so results are bit-reproducible.
using Rational = boost::rational<std::int64_t>;

enum class CertKind { Stability, Validity };

const char* to_string(CertKind kind);

/// A certified radius: the largest poisoning budget under which the claimed
/// property (no change / no targeted token) provably holds.
struct Certificate {
    CertKind kind = CertKind::Stability;
    int radius = 0;
    std::string sample_id;
    int position = 0;
    std::optional<TokenId> target;
    TiePolicy policy = TiePolicy::AdversaryWins;
    /// The target already is the observed prediction; radius 0 is reported
    /// rather than failing so batch metrics stay total.
    bool already_target = false;
};

/// Phase data of the vote cascade that funnels competitor votes into a
/// target class. Feeds the collective (multi-sample) formulation.
///
/// Competitor counts exclude the target; v_t is held separately. With ranked
/// competitor counts V_1 >= ... >= V_n:
///   deltas[s-1] = V_s - V_{s+1}                 (V_{n+1} = 0)
///   phi[s]      = v_t + sum_{l<=s} l * deltas[l-1]
///                 = target votes after draining the top s classes to V_{s+1}
///   s_star      = smallest s with (v_t + sum_{b<=s} V_b) > (s+1) * V_{s+1},
///                 i.e. the phase whose drain lets the target pass the rest
///   mu          = (v_t + sum_{b<=s*} V_b) / (s* + 1), the exact meeting level
///   tau         = 2 * (mu - v_t), the attack margin in weighted vote units
struct CascadeProfile {
    std::vector<int> deltas;
    std::vector<int> phi;  // phi[0] = v_t
    int s_star = 0;        // 0 iff there are no competitor classes
    Rational mu{0};
    Rational tau{0};
    std::vector<TokenId> top_set;  // the s* drained competitor ids
};

/// Untargeted stability radius: the largest k such that no reassignment of
/// <= k shard votes changes the plurality under `policy`. Under AdversaryWins
/// this equals floor((V1 - V2 - 1) / 2) clamped at 0, but the normative
/// definition is the flip-oracle semantics; the closed form is a fast path
/// that the oracle tests pin down.
Certificate dpa_radius(const VoteTable& table, TiePolicy policy);

/// Targeted validity radius via explicit cascade simulation: repeatedly move
/// one vote from a currently-maximal competitor to `target` and check the
/// plurality after each move. radius = (moves needed) - 1. Normative.
Certificate tpa_radius_greedy(const VoteTable& table, TokenId target,
                              TiePolicy policy);

/// Closed-form phase computation of the same radius. Must agree with
/// tpa_radius_greedy on every input (enforced by property tests).
Certificate tpa_radius_fast(const VoteTable& table, TokenId target,
                            TiePolicy policy);

/// Cascade phases for `target` against the competitors in `table`.
/// `target` need not have votes.
CascadeProfile cascade_profile(const VoteTable& table, TokenId target);

/// Convenience: min of tpa_radius_fast over a target set (multi-target
/// validity, e.g. "any other tool call").
Certificate min_validity_radius(const VoteTable& table,
                                const std::vector<TokenId>& targets,
                                TiePolicy policy);

/// Per-sample threshold for the collective formulation: twice the rational
/// crossing bound of the cascade under `policy`, in weighted vote units.
/// <= 0 iff the target is already the observed prediction; otherwise clamped
/// to >= 1 so a zero-budget adversary never registers an attack. Under
/// AdversaryWins the unclamped value is cascade_profile().tau, and
/// ceil(threshold / 2) equals the greedy minimum flip count. Lexicographic
/// instances are not supported (throws input_error).
Rational tpa_threshold(const VoteTable& table, TokenId target,
                       TiePolicy policy);

}  // namespace votecert
