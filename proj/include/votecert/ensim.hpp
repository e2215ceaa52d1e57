#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "votecert/pointcert.hpp"
#include "votecert/seqcert.hpp"
#include "votecert/votetab.hpp"

namespace votecert::ensim {

/// Stable 64-bit content hash (FNV-1a); shard routing must not depend on
/// std::hash, which varies across implementations.
std::uint64_t fnv1a64(const std::string& s);

struct Sample {
    std::string key;  // stable id, unique within a corpus
    std::vector<TokenId> prompt;
    std::vector<TokenId> response;
};

struct Corpus {
    std::uint64_t seed = 0;
    std::vector<Sample> samples;
};

/// One synthetic conversation pattern: a fixed prompt, a dominant response
/// and one alternate continuation per position. contest_permille[r] is the
/// chance position r of a sampled response uses the alternate, which is what
/// makes shard models disagree by a controllable amount.
struct Template {
    std::vector<TokenId> prompt;
    std::vector<TokenId> dominant;
    std::vector<TokenId> alternate;
    std::vector<int> contest_permille;
};

struct TemplateSet {
    std::vector<Template> templates;
    std::vector<std::vector<TokenId>> prompt_variants;  // eval prompt pool
    int vocab_size = 0;

    /// Deterministic synthetic set: n_templates response patterns crossed
    /// with n_intros prompt openers. Token ranges never overlap, and the two
    /// highest ids stay reserved for attack trigger/entity use.
    static TemplateSet synthetic(int vocab_size, int n_templates, int n_intros,
                                 int response_len);
};

/// key -> shard via stable content hash mod S.
struct ShardAssignment {
    int shards = 1;
    int shard_of(const std::string& key) const {
        return static_cast<int>(fnv1a64(key) % static_cast<std::uint64_t>(shards));
    }
};

struct ModelConfig {
    int order = 2;             // context length is order - 1
    std::int64_t alpha_num = 1;  // prior mass (pseudo-count), exact rational
    std::int64_t alpha_den = 1;
};

/// Count-based n-gram model with an add-alpha unigram prior:
///   score(tok | ctx) = c(ctx, tok) + alpha * (c_uni(tok) + 1) / (N + V)
/// Argmax comparisons are exact integer arithmetic; ties break to the lower
/// TokenId, so decoding is a deterministic function of the counts.
class NGramModel {
  public:
    NGramModel() = default;
    NGramModel(ModelConfig cfg, int vocab_size);

    void train(const Sample& s);
    void finalize();  // sorts the unigram ranking; call after training

    TokenId argmax_next(const std::vector<TokenId>& context_window) const;
    bool trained() const { return total_tokens_ > 0; }
    std::int64_t total_tokens() const { return total_tokens_; }

  private:
    std::uint64_t pack_context(const std::vector<TokenId>& window) const;

    ModelConfig cfg_;
    int vocab_ = 0;
    std::int64_t total_tokens_ = 0;
    std::unordered_map<std::uint64_t, std::map<TokenId, int>> ngram_;
    std::vector<std::int64_t> unigram_;
    std::vector<TokenId> unigram_order_;  // count desc, id asc
    mutable std::unordered_map<std::uint64_t, TokenId> argmax_cache_;
};

struct EnsembleParams {
    int shards = 20;
    int vocab_size = 128;
    ModelConfig model;
};

/// A trained shard ensemble. Shard j's model saw only the samples hashing to
/// shard j, so retraining after a corpus edit touches exactly the edited
/// shards. The invocation counter advances by M for every prompt the
/// ensemble answers (one forward pass per shard).
class Ensemble {
  public:
    Ensemble(EnsembleParams params, ShardAssignment assignment);

    static Ensemble train(const Corpus& corpus, const EnsembleParams& params);

    /// Retrains shard `shard` from `corpus` in place; other shards untouched.
    void retrain_shard(const Corpus& corpus, int shard);

    /// All shards vote on the next token after prompt ++ forced_prefix.
    ShardVoteRecord vote_next(const std::vector<TokenId>& prompt,
                              const std::vector<TokenId>& forced_prefix) const;

    /// Shard j's own greedy m-token continuation of prompt, for every j.
    /// Counts as one invocation per shard regardless of m.
    std::vector<std::vector<TokenId>> shard_generations(
        const std::vector<TokenId>& prompt, int m) const;

    /// Single shard's vote given an explicit context window (used by the
    /// poison-and-retrain checker to patch cached clean votes).
    TokenId shard_vote(int shard, const std::vector<TokenId>& context) const;

    int shards() const { return params_.shards; }
    int vocab_size() const { return params_.vocab_size; }
    int context_len() const { return params_.model.order - 1; }
    const std::vector<int>& empty_shards() const { return empty_shards_; }
    const ShardAssignment& assignment() const { return assignment_; }

    std::uint64_t invocations() const { return counter_->load(); }
    void reset_invocations() { counter_->store(0); }

  private:
    EnsembleParams params_;
    ShardAssignment assignment_;
    std::vector<NGramModel> models_;
    std::vector<int> empty_shards_;  // shards that saw no data (flagged)
    std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

/// Deterministic synthetic corpus; identical (seed, parameters) give
/// byte-identical corpora.
Corpus gen_corpus(std::uint64_t seed, int size, const TemplateSet& tset);

/// Last ctx_len tokens of prompt ++ forced, left-padded with token 0.
std::vector<TokenId> context_window(const std::vector<TokenId>& prompt,
                                    const std::vector<TokenId>& forced,
                                    int ctx_len);

/// Greedy consensus decode: at each position every shard votes its argmax
/// next token given prompt + consensus prefix; the consensus token is the
/// plurality.
GenerationTrace consensus_decode(const Ensemble& ensemble,
                                 const std::vector<TokenId>& prompt,
                                 int length, TiePolicy policy,
                                 const std::string& sample_id = "");

/// Reprompting protocol query (per-shard votes after a forced prefix).
ShardVoteRecord reprompt_votes(const Ensemble& ensemble,
                               const std::vector<TokenId>& prompt,
                               const std::vector<TokenId>& forced_prefix);

struct AttackConfig {
    std::vector<TokenId> trigger;
    TokenId entity = 0;
    Rational poison_fraction{1, 10};
};

struct AttackMetrics {
    Rational as_score{0};
    Rational ss_score{1};
    Rational f_trig{0};
    Rational f_notrig{0};
    Rational f_clean{0};
};

struct AttackOutcome {
    AttackMetrics single;
    AttackMetrics ensemble;
    int poisoned_samples = 0;
};

/// Content-injection attack: appends the trigger to the prompts of a
/// poison_fraction subset and plants the entity at the start of their
/// responses, then compares a single unsharded model against the S-shard
/// ensemble. Entity frequencies are measured over eval_prompts with and
/// without the trigger, against clean baselines of identical configuration.
AttackOutcome run_attack(const Corpus& corpus, const AttackConfig& attack,
                         const EnsembleParams& params,
                         const std::vector<std::vector<TokenId>>& eval_prompts,
                         int decode_len);

/// Full simulator configuration (JSON-file backed, see serial.hpp).
struct SimConfig {
    std::uint64_t seed = 1;
    int shards = 20;
    int vocab_size = 128;
    int ngram_order = 2;
    std::int64_t alpha_num = 1;
    std::int64_t alpha_den = 1;
    int corpus_size = 2000;
    int templates = 10;
    int intros = 5;
    int response_len = 6;
    int prompts = 50;
    int decode_len = 6;
    std::optional<AttackConfig> attack;
    std::vector<std::vector<TokenId>> harmful_targets;

    EnsembleParams ensemble_params() const {
        return EnsembleParams{shards, vocab_size,
                              ModelConfig{ngram_order, alpha_num, alpha_den}};
    }
};

/// Eval prompts for a config: the first `prompts` template prompt variants.
std::vector<std::vector<TokenId>> eval_prompts(const SimConfig& cfg,
                                               const TemplateSet& tset);

}  // namespace votecert::ensim
