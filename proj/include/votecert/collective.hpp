#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "votecert/pointcert.hpp"
#include "votecert/votetab.hpp"

namespace votecert::collective {

enum class InstanceKind { DPA, TPA };

const char* to_string(InstanceKind kind);

/// How per-sample thresholds treat the untargeted adversary's choice of
/// replacement class (DPA instances only).
///  - Paper:     the adversary may only promote each sample's observed
///               runner-up c2 (c2-voters are inexploitable, weight 0).
///  - AnyTarget: the adversary may promote any class, so every non-top voter
///               is exploitable (weight 1). Conservative and the default.
enum class DpaMode { Paper, AnyTarget };

/// Budget-allocation instance: sample i is counted attacked by a poisoned
/// shard set A iff sum_{j in A} weights[i][j] >= thresholds[i].
/// Weight 2: flipping shard j closes sample i's margin by two vote units;
/// weight 1: by one; weight 0: shard j is inexploitable for sample i.
struct CollectiveInstance {
    InstanceKind kind = InstanceKind::DPA;
    TiePolicy policy = TiePolicy::AdversaryWins;
    int n_samples = 0;
    int n_shards = 0;
    std::vector<std::vector<std::uint8_t>> weights;  // N x M, entries 0/1/2
    std::vector<Rational> thresholds;                // tau_i
    std::vector<std::string> sample_ids;             // optional, may be empty

    void validate() const;  // throws schema_error on malformed instances
};

struct CollectiveSolution {
    int attacked_max = 0;
    Rational safe_fraction{0};
    std::vector<int> witness;  // poisoned shard indices, sorted ascending
    bool exact = true;
};

/// Untargeted multi-sample instance. One record per sample (same position).
CollectiveInstance build_dpa_instance(
    const std::vector<ShardVoteRecord>& records, TiePolicy policy,
    DpaMode mode = DpaMode::AnyTarget);

/// Targeted multi-sample instance; every record must carry its target.
/// thresholds[i] = 2 * (mu - v_t) from the sample's cascade profile.
CollectiveInstance build_tpa_instance(
    const std::vector<ShardVoteRecord>& records, TiePolicy policy);

/// Exact maximum over all shard subsets of size <= K of the number of
/// attacked samples. Depth-first branch-and-bound in subset-lexicographic
/// order with a per-sample top-K-weights bound, so the witness is the
/// lexicographically smallest optimal subset regardless of pruning.
/// Throws infeasible_size when n_samples * n_shards > exact_limit.
CollectiveSolution solve_exact(const CollectiveInstance& inst, PoisonBudget k,
                               long exact_limit = 4096);

/// Relaxation: sample i is counted attacked iff the sum of its K largest
/// weights reaches tau_i, ignoring that the budget is shared. attacked_max
/// is an upper bound on the exact value, so safe_fraction stays sound.
CollectiveSolution solve_upper_bound(const CollectiveInstance& inst,
                                     PoisonBudget k);

struct DominanceReport {
    int collective_safe = 0;  // N - attacked_max
    int pointwise_safe = 0;   // #{i : pointwise radius_i >= K}
    int gap = 0;              // collective_safe - pointwise_safe, >= 0
    bool holds = false;
};

/// Checks that the collective certificate dominates per-sample certificates
/// computed at the same budget and policy. Throws policy_mismatch if the
/// certificates were produced under a different TiePolicy.
DominanceReport collective_vs_pointwise(const CollectiveInstance& inst,
                                        PoisonBudget k,
                                        const std::vector<Certificate>& pointwise,
                                        const CollectiveSolution& solution);

}  // namespace votecert::collective

namespace votecert::oracle {

/// Validation oracle: plain enumeration of all shard subsets of size <= K.
/// Requires M <= 20 (throws bound_exceeded beyond that).
collective::CollectiveSolution collective_exhaustive(
    const collective::CollectiveInstance& inst, PoisonBudget k);

}  // namespace votecert::oracle
