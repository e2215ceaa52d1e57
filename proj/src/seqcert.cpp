#include "votecert/seqcert.hpp"

#include <algorithm>

namespace votecert {

namespace {

// 63-bit FNV-1a over the token tuple; keeps phrase ids non-negative and
// stable across runs without a global interning table.
TokenId phrase_hash(const std::vector<TokenId>& phrase) {
    std::uint64_t h = 1469598103934665603ULL;
    for (TokenId t : phrase) {
        auto v = static_cast<std::uint64_t>(t);
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffu;
            h *= 1099511628211ULL;
        }
    }
    return static_cast<TokenId>(h & 0x7fffffffffffffffULL);
}

}  // namespace

void GenerationTrace::validate() const {
    for (std::size_t i = 0; i < per_position.size(); ++i) {
        const auto& pos = per_position[i];
        if (pos.record.position != static_cast<int>(i)) {
            throw schema_error("trace positions must be contiguous from 0");
        }
        if (plurality(pos.table, TiePolicy::Lexicographic) != pos.consensus) {
            throw invariant_error("trace consensus does not match its table");
        }
    }
}

TokenId PhraseLexicon::intern(const std::vector<TokenId>& phrase) {
    if (static_cast<int>(phrase.size()) != m_) {
        throw length_mismatch("phrase length does not match configured m");
    }
    // m == 1 keeps the raw token id so the reduction to token-level
    // certification is exact under every tie policy.
    TokenId id = m_ == 1 ? phrase.front() : phrase_hash(phrase);
    auto [it, inserted] = by_id_.emplace(id, phrase);
    if (!inserted && it->second != phrase) {
        throw invariant_error("phrase id collision");
    }
    return id;
}

const std::vector<TokenId>& PhraseLexicon::phrase(TokenId id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw unknown_token("unknown phrase id");
    return it->second;
}

std::pair<std::vector<int>, int> sequential_stability(
    const GenerationTrace& trace, int horizon, TiePolicy policy) {
    if (horizon < 1 || horizon > trace.length()) {
        throw horizon_exceeds_trace("horizon " + std::to_string(horizon) +
                                    " outside trace of length " +
                                    std::to_string(trace.length()));
    }
    std::vector<int> radii;
    radii.reserve(static_cast<std::size_t>(horizon));
    int min_radius = 0;
    for (int i = 0; i < horizon; ++i) {
        int r = dpa_radius(trace.per_position[static_cast<std::size_t>(i)].table,
                           policy)
                    .radius;
        radii.push_back(r);
        min_radius = i == 0 ? r : std::min(min_radius, r);
    }
    return {std::move(radii), min_radius};
}

std::vector<int> sequential_validity(const EnsembleQuery& query,
                                     const std::vector<TokenId>& prompt,
                                     const HarmfulTarget& target,
                                     TiePolicy policy) {
    if (target.tokens.empty()) throw input_error("harmful target is empty");
    std::vector<int> radii;
    radii.reserve(target.tokens.size());
    std::vector<TokenId> forced;
    for (TokenId t : target.tokens) {
        ShardVoteRecord record = query(prompt, forced);
        radii.push_back(tpa_radius_fast(tally(record), t, policy).radius);
        forced.push_back(t);
    }
    return radii;
}

VoteTable phrase_votes(const std::vector<std::vector<TokenId>>& generations,
                       const PhraseConfig& cfg, PhraseLexicon& lexicon) {
    if (cfg.m < 1) throw input_error("phrase length must be positive");
    if (lexicon.m() != cfg.m) throw length_mismatch("lexicon built for another m");
    VoteTable table;
    for (const auto& gen : generations) {
        if (static_cast<int>(gen.size()) < cfg.m) {
            throw length_mismatch("a shard generation is shorter than m");
        }
        std::vector<TokenId> phrase(gen.begin(), gen.begin() + cfg.m);
        table.add(lexicon.intern(phrase));
    }
    return table;
}

HorizonReport metrics(const std::vector<SampleRadii>& per_sample,
                      const std::vector<int>& ks) {
    if (per_sample.empty()) throw empty_test_set();

    const auto n = static_cast<std::int64_t>(per_sample.size());
    bool any_stability = false;
    bool any_validity = false;
    for (const auto& s : per_sample) {
        any_stability = any_stability || !s.stability_radii.empty();
        any_validity = any_validity || !s.validity_radii.empty();
    }

    // longest prefix with all radii >= k
    auto horizon = [](const std::vector<int>& radii, int k) {
        std::size_t len = 0;
        while (len < radii.size() && radii[len] >= k) ++len;
        return static_cast<std::int64_t>(len);
    };

    HorizonReport report;
    report.ks = ks;
    for (int k : ks) {
        if (any_stability) {
            std::int64_t first = 0;
            std::int64_t prefix_sum = 0;
            for (const auto& s : per_sample) {
                if (!s.stability_radii.empty() && s.stability_radii[0] >= k) ++first;
                prefix_sum += horizon(s.stability_radii, k);
            }
            report.fts.emplace_back(first, n);
            report.sh.emplace_back(prefix_sum, n);
        }
        if (any_validity) {
            std::int64_t first = 0;
            std::int64_t prefix_sum = 0;
            for (const auto& s : per_sample) {
                if (!s.validity_radii.empty() && s.validity_radii[0] >= k) ++first;
                prefix_sum += horizon(s.validity_radii, k);
            }
            report.ftv.emplace_back(first, n);
            report.vh.emplace_back(prefix_sum, n);
        }
    }

    for (const auto& s : per_sample) {
        HorizonReport::Sample out;
        out.sample_id = s.sample_id;
        out.stability_radii = s.stability_radii;
        out.validity_radii = s.validity_radii;
        if (!s.stability_radii.empty()) {
            out.response_radius =
                *std::min_element(s.stability_radii.begin(), s.stability_radii.end());
        }
        if (!s.validity_radii.empty()) {
            out.validity_response_radius =
                *std::min_element(s.validity_radii.begin(), s.validity_radii.end());
        }
        report.samples.push_back(std::move(out));
    }
    return report;
}

}  // namespace votecert
