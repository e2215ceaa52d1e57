#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "votecert/errors.hpp"

namespace votecert {

/// Token identifier. Non-negative. Plain token ids index a Lexicon when one
/// is attached; interned phrase ids live in the same space (see seqcert).
using TokenId = std::int64_t;

/// Number of training-set insert/delete operations available to the
/// adversary (symmetric-difference budget).
using PoisonBudget = int;

/// How hypothetical post-attack ties are resolved inside certificates.
///
/// The observed table's prediction is always resolved lexicographically
/// (lowest TokenId among the maxima); the policy only matters for tables the
/// adversary could reach, where the defender's actual deterministic
/// tie-breaking rule is unknown. AdversaryWins is the conservative default:
/// a certificate then holds under *any* deterministic rule.
enum class TiePolicy {
    AdversaryWins,
    IncumbentWins,
    Lexicographic,
};

const char* to_string(TiePolicy policy);
TiePolicy tie_policy_from_string(const std::string& name);

/// Ordered list of distinct token strings; a string's index is its TokenId.
class Lexicon {
  public:
    Lexicon() = default;
    explicit Lexicon(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }
    const std::string& at(TokenId id) const;
    std::optional<TokenId> find(const std::string& token) const;
    const std::vector<std::string>& tokens() const { return tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::map<std::string, TokenId> index_;
};

/// Per-shard votes for one (sample, position). shard_votes[j] is the vote of
/// shard j; the vector length must equal the declared shard count M.
struct ShardVoteRecord {
    std::string sample_id;
    int position = 0;
    std::vector<TokenId> shard_votes;
    std::optional<TokenId> target;
};

/// Token -> vote count at one position. Immutable once built in practice;
/// add() exists for construction code only.
class VoteTable {
  public:
    VoteTable() = default;
    explicit VoteTable(std::map<TokenId, int> counts);

    int count(TokenId t) const;
    int total() const { return total_; }
    bool empty() const { return counts_.empty(); }
    const std::map<TokenId, int>& counts() const { return counts_; }
    void add(TokenId t, int n = 1);

  private:
    std::map<TokenId, int> counts_;  // nonzero entries only
    int total_ = 0;
};

/// Vote counts sorted by count descending, ties by TokenId ascending.
/// Zero-count tokens are omitted.
struct RankedVotes {
    std::vector<std::pair<TokenId, int>> entries;

    /// Count of the i-th most-voted token, 1-indexed; 0 past the last class.
    int nth(std::size_t i) const {
        return (i >= 1 && i <= entries.size()) ? entries[i - 1].second : 0;
    }
};

/// Count each shard's vote. counts[t] = number of shards voting t.
VoteTable tally(const ShardVoteRecord& record);

RankedVotes rank(const VoteTable& table);

/// The observed prediction: maximal count, ties to the lowest TokenId.
/// All TiePolicy values resolve the *observed* table the same way; the
/// policy parameter is kept so call sites carry the certificate context.
TokenId plurality(const VoteTable& table, TiePolicy policy);

/// Contents of a vote-record JSON file.
struct VoteFile {
    int schema_version = 1;
    int num_shards = 0;
    std::optional<Lexicon> lexicon;
    std::vector<ShardVoteRecord> records;
};

/// Loads and validates a vote-record JSON file.
/// Throws schema_error, inconsistent_shard_count, unknown_token.
VoteFile load_records(const std::string& path);

void save_records(const std::string& path, const VoteFile& file);

/// "token,count" rows sorted by rank.
std::string vote_table_csv(const VoteTable& table);

}  // namespace votecert
