#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "votecert/pointcert.hpp"
#include "votecert/votetab.hpp"

namespace votecert {

/// One prompt's consensus decode: per position 0..L-1 the per-shard votes,
/// the tallied table and the consensus token.
struct TracePosition {
    ShardVoteRecord record;
    VoteTable table;
    TokenId consensus = 0;
};

struct GenerationTrace {
    std::string sample_id;
    std::vector<TokenId> prompt;
    std::vector<TracePosition> per_position;
    int num_shards = 0;

    int length() const { return static_cast<int>(per_position.size()); }
    /// Checks consensus == plurality and contiguous positions from 0.
    void validate() const;
};

/// A harmful token sequence t_1..t_T to certify against.
struct HarmfulTarget {
    std::vector<TokenId> tokens;
};

struct PhraseConfig {
    int m = 1;  // phrase length, atomic voting unit
};

/// Maps interned phrase ids back to their token tuples. Ids are
/// content-addressed (63-bit FNV-1a of the tuple, collision-checked) so the
/// |V|^m space is never materialized and ids are stable across runs.
/// m == 1 phrases keep the token id itself, making the reduction to
/// token-level certification exact under every tie policy.
class PhraseLexicon {
  public:
    explicit PhraseLexicon(int m) : m_(m) {}

    TokenId intern(const std::vector<TokenId>& phrase);
    const std::vector<TokenId>& phrase(TokenId id) const;
    int m() const { return m_; }

  private:
    int m_;
    std::map<TokenId, std::vector<TokenId>> by_id_;
};

/// Aggregated certification metrics over a test set and a budget grid.
struct HorizonReport {
    std::vector<int> ks;
    std::vector<Rational> fts;  // empty when no stability radii supplied
    std::vector<Rational> ftv;  // empty when no validity radii supplied
    std::vector<Rational> sh;
    std::vector<Rational> vh;

    struct Sample {
        std::string sample_id;
        std::vector<int> stability_radii;
        std::vector<int> validity_radii;
        std::optional<int> response_radius;           // min stability radius
        std::optional<int> validity_response_radius;  // min validity radius
    };
    std::vector<Sample> samples;
};

/// Per-position stability radii of the first `horizon` positions and their
/// minimum (the certified horizon radius). Throws horizon_exceeds_trace.
std::pair<std::vector<int>, int> sequential_stability(
    const GenerationTrace& trace, int horizon, TiePolicy policy);

/// Produces the per-shard votes for `prompt` extended with a forced prefix.
using EnsembleQuery =
    std::function<ShardVoteRecord(const std::vector<TokenId>& prompt,
                                  const std::vector<TokenId>& forced_prefix)>;

/// Reprompting protocol: radii[i] is the targeted radius for t_{i+1} on the
/// table obtained after forcing t_1..t_i into the prompt, so each position's
/// certificate is sound regardless of earlier positions.
std::vector<int> sequential_validity(const EnsembleQuery& query,
                                     const std::vector<TokenId>& prompt,
                                     const HarmfulTarget& target,
                                     TiePolicy policy);

/// Majority voting over length-m phrases as atomic units. Every generation
/// must supply at least m tokens (throws length_mismatch otherwise).
VoteTable phrase_votes(const std::vector<std::vector<TokenId>>& generations,
                       const PhraseConfig& cfg, PhraseLexicon& lexicon);

/// Per-sample radii for metric computation. validity_radii may be empty.
struct SampleRadii {
    std::string sample_id;
    std::vector<int> stability_radii;
    std::vector<int> validity_radii;
};

/// FTS@k / FTV@k: fraction of samples whose first-position radius is >= k.
/// SH@k / VH@k: mean longest prefix with all radii >= k.
HorizonReport metrics(const std::vector<SampleRadii>& per_sample,
                      const std::vector<int>& ks);

}  // namespace votecert
