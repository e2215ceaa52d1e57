#include "votecert/votetab.hpp"

#include <algorithm>
#include <sstream>

namespace votecert {

const char* to_string(TiePolicy policy) {
    switch (policy) {
        case TiePolicy::AdversaryWins: return "adversary-wins";
        case TiePolicy::IncumbentWins: return "incumbent-wins";
        case TiePolicy::Lexicographic: return "lexicographic";
    }
    return "adversary-wins";
}

TiePolicy tie_policy_from_string(const std::string& name) {
    if (name == "adversary-wins" || name == "adversary") return TiePolicy::AdversaryWins;
    if (name == "incumbent-wins" || name == "incumbent") return TiePolicy::IncumbentWins;
    if (name == "lexicographic" || name == "lex") return TiePolicy::Lexicographic;
    throw schema_error("unknown tie policy: " + name);
}

Lexicon::Lexicon(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
        if (!inserted) {
            throw schema_error("duplicate lexicon token: " + tokens_[i]);
        }
    }
}

const std::string& Lexicon::at(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw unknown_token("token id out of lexicon range: " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Lexicon::find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

VoteTable::VoteTable(std::map<TokenId, int> counts) {
    for (const auto& [token, n] : counts) {
        if (n < 0) throw schema_error("negative vote count");
        if (n > 0) {
            counts_.emplace(token, n);
            total_ += n;
        }
    }
}

int VoteTable::count(TokenId t) const {
    auto it = counts_.find(t);
    return it == counts_.end() ? 0 : it->second;
}

void VoteTable::add(TokenId t, int n) {
    if (n == 0) return;
    auto it = counts_.find(t);
    int next = (it == counts_.end() ? 0 : it->second) + n;
    if (next < 0) throw schema_error("vote count went negative");
    total_ += n;
    if (next == 0) {
        counts_.erase(it);
    } else if (it == counts_.end()) {
        counts_.emplace(t, next);
    } else {
        it->second = next;
    }
}

VoteTable tally(const ShardVoteRecord& record) {
    VoteTable table;
    for (TokenId vote : record.shard_votes) {
        if (vote < 0) throw unknown_token("negative token id in shard votes");
        table.add(vote);
    }
    return table;
}

RankedVotes rank(const VoteTable& table) {
    RankedVotes ranked;
    ranked.entries.assign(table.counts().begin(), table.counts().end());
    std::sort(ranked.entries.begin(), ranked.entries.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });
    return ranked;
}

TokenId plurality(const VoteTable& table, TiePolicy) {
    if (table.empty()) throw empty_table();
    TokenId best = 0;
    int best_count = -1;
    for (const auto& [token, n] : table.counts()) {
        if (n > best_count) {  // ids ascend, so first maximal id wins ties
            best = token;
            best_count = n;
        }
    }
    return best;
}

std::string vote_table_csv(const VoteTable& table) {
    std::ostringstream out;
    out << "token,count\n";
    for (const auto& [token, n] : rank(table).entries) {
        out << token << "," << n << "\n";
    }
    return out.str();
}

}  // namespace votecert
