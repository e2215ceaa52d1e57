#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "votecert/ensim.hpp"
#include "votecert/seqcert.hpp"

namespace votecert::oracle {

/// A single training-set edit. Budget accounting is in symmetric-difference
/// units: insert and delete cost 1, replace (delete + insert) costs 2, so a
/// mutation set of cost b touches at most b shards.
struct Mutation {
    enum class Op { Insert, Delete, Replace } op = Op::Insert;
    std::string key;
    std::optional<ensim::Sample> sample;  // present for Insert/Replace

    int cost() const { return op == Op::Replace ? 2 : 1; }
};

const char* to_string(Mutation::Op op);

/// Seeded pool of candidate mutations. Includes adversarial inserts aimed at
/// the evaluated prompts' decode contexts and at the harmful-target
/// continuations (some with keys ground to land on chosen shards), plus
/// benign inserts, deletes and replacements.
struct MutationPool {
    std::vector<Mutation> candidates;

    static MutationPool build(const ensim::Corpus& corpus,
                              const ensim::TemplateSet& tset,
                              const std::vector<std::vector<TokenId>>& prompts,
                              const std::vector<HarmfulTarget>& targets,
                              const ensim::ShardAssignment& assignment,
                              std::uint64_t seed, int size);
};

/// Everything the retrain checker validates against: clean traces, their
/// stability radii, and per-target validity votes and radii.
struct CertifiedRun {
    TiePolicy policy = TiePolicy::AdversaryWins;
    std::vector<std::vector<TokenId>> prompts;
    std::vector<GenerationTrace> traces;
    std::vector<std::vector<int>> stability_radii;  // per prompt, per position
    std::vector<HarmfulTarget> targets;             // one per prompt (may be empty)
    std::vector<std::vector<ShardVoteRecord>> validity_votes;  // reprompted
    std::vector<std::vector<int>> validity_radii;
};

/// Computes certificates for every prompt against `ensemble`.
CertifiedRun certify_run(const ensim::Ensemble& ensemble,
                         const std::vector<std::vector<TokenId>>& prompts,
                         const std::vector<HarmfulTarget>& targets,
                         int decode_len, TiePolicy policy);

struct Violation {
    std::vector<Mutation> mutations;
    std::vector<int> retrained_shards;
    int prompt_index = 0;
    int position = 0;
    CertKind kind = CertKind::Stability;
    int budget = 0;
    int radius = 0;
    TokenId before = 0;
    TokenId after = 0;
};

/// Applies `trials` seeded mutation sets of cost <= max_budget, retrains only
/// the affected shards, re-decodes, and reports every certified claim that
/// fails within its certified radius. An empty result is a pass; any entry is
/// a soundness bug in the certificates.
std::vector<Violation> poison_and_retrain(const ensim::Corpus& corpus,
                                          const ensim::EnsembleParams& params,
                                          const CertifiedRun& run,
                                          const MutationPool& pool,
                                          int trials, int max_budget,
                                          std::uint64_t seed);

}  // namespace votecert::oracle
