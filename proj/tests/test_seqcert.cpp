#include <doctest.h>

#include "helpers.hpp"
#include "votecert/seqcert.hpp"

using namespace votecert;
namespace tt = votecert::testing;

namespace {

TracePosition position_of(int index, std::map<TokenId, int> counts) {
    TracePosition pos;
    pos.table = VoteTable(counts);
    for (auto& [token, n] : counts) {
        for (int i = 0; i < n; ++i) pos.record.shard_votes.push_back(token);
    }
    pos.record.position = index;
    pos.consensus = plurality(pos.table, TiePolicy::Lexicographic);
    return pos;
}

GenerationTrace radii_9939_trace() {
    GenerationTrace trace;
    trace.sample_id = "t";
    trace.num_shards = 20;
    trace.per_position.push_back(position_of(0, {{0, 20}}));
    trace.per_position.push_back(position_of(1, {{1, 20}}));
    trace.per_position.push_back(position_of(2, {{2, 12}, {3, 5}, {4, 3}}));
    trace.per_position.push_back(position_of(3, {{5, 20}}));
    return trace;
}

}  // namespace

TEST_CASE("sequential stability is the positionwise minimum") {
    GenerationTrace trace = radii_9939_trace();
    trace.validate();

    auto [radii, horizon] =
        sequential_stability(trace, 4, TiePolicy::AdversaryWins);
    CHECK(radii == std::vector<int>{9, 9, 3, 9});
    CHECK(horizon == 3);

    auto [first, h1] = sequential_stability(trace, 1, TiePolicy::AdversaryWins);
    CHECK(h1 == first[0]);
    CHECK(h1 == 9);

    CHECK_THROWS_AS(sequential_stability(trace, 5, TiePolicy::AdversaryWins),
                    horizon_exceeds_trace);
}

TEST_CASE("trace validation rejects inconsistent consensus") {
    GenerationTrace trace = radii_9939_trace();
    trace.per_position[1].consensus = 7;
    CHECK_THROWS_AS(trace.validate(), invariant_error);
}

TEST_CASE("sequential validity follows the reprompting protocol") {
    // the callback serves vote tables keyed by the forced prefix length
    std::vector<ShardVoteRecord> by_depth(3);
    by_depth[0].shard_votes = std::vector<TokenId>(10, 0);  // {0:10}
    by_depth[1].shard_votes = {0, 0, 0, 0, 0, 0, 0, 0, 0, 9};  // {0:9, 9:1}
    by_depth[2].shard_votes = {1, 1, 1, 1, 1, 2, 2, 2, 2, 2};  // tie
    std::vector<std::vector<TokenId>> seen_prefixes;
    EnsembleQuery query = [&](const std::vector<TokenId>&,
                              const std::vector<TokenId>& forced) {
        seen_prefixes.push_back(forced);
        return by_depth[forced.size()];
    };

    HarmfulTarget target{{9, 9, 1}};
    auto radii =
        sequential_validity(query, {5}, target, TiePolicy::IncumbentWins);
    REQUIRE(radii.size() == 3);
    // {0:10} vs target 9: six flips under incumbent ties
    CHECK(radii[0] == 5);
    // a shard already voting the target shrinks the radius strictly
    CHECK(radii[1] < radii[0]);
    // prefix fed back token by token
    CHECK(seen_prefixes[0].empty());
    CHECK(seen_prefixes[1] == std::vector<TokenId>{9});
    CHECK(seen_prefixes[2] == std::vector<TokenId>{9, 9});

    // single-token target reduces to one tpa radius
    auto single = sequential_validity(query, {5}, HarmfulTarget{{9}},
                                      TiePolicy::IncumbentWins);
    CHECK(single == std::vector<int>{5});
}

TEST_CASE("phrase votes") {
    SUBCASE("m = 1 is isomorphic to the token table") {
        std::vector<std::vector<TokenId>> gens{{3}, {3}, {5}, {3}};
        PhraseLexicon lex(1);
        VoteTable phrases = phrase_votes(gens, PhraseConfig{1}, lex);
        CHECK(phrases.count(3) == 3);
        CHECK(phrases.count(5) == 1);
        CHECK(dpa_radius(phrases, TiePolicy::Lexicographic).radius ==
              dpa_radius(tt::table({{3, 3}, {5, 1}}), TiePolicy::Lexicographic)
                  .radius);
    }
    SUBCASE("18/2 split certifies radius 7") {
        std::vector<std::vector<TokenId>> gens;
        for (int i = 0; i < 18; ++i) gens.push_back({1, 2, 3});
        for (int i = 0; i < 2; ++i) gens.push_back({1, 2, 4});
        PhraseLexicon lex(3);
        VoteTable phrases = phrase_votes(gens, PhraseConfig{3}, lex);
        CHECK(phrases.total() == 20);
        RankedVotes ranked = rank(phrases);
        CHECK(ranked.nth(1) == 18);
        CHECK(ranked.nth(2) == 2);
        CHECK(dpa_radius(phrases, TiePolicy::AdversaryWins).radius == 7);
        // ids map back to the tuples
        CHECK(lex.phrase(ranked.entries[0].first) ==
              std::vector<TokenId>{1, 2, 3});
    }
    SUBCASE("all-distinct tuples diffuse the votes") {
        std::vector<std::vector<TokenId>> gens;
        for (TokenId i = 0; i < 20; ++i) gens.push_back({i, i + 1});
        PhraseLexicon lex(2);
        VoteTable phrases = phrase_votes(gens, PhraseConfig{2}, lex);
        CHECK(rank(phrases).nth(1) == 1);
        CHECK(dpa_radius(phrases, TiePolicy::AdversaryWins).radius == 0);
    }
    SUBCASE("short generation is rejected") {
        std::vector<std::vector<TokenId>> gens{{1, 2}, {1}};
        PhraseLexicon lex(2);
        CHECK_THROWS_AS(phrase_votes(gens, PhraseConfig{2}, lex),
                        length_mismatch);
    }
}

TEST_CASE("metrics frozen cases") {
    std::vector<SampleRadii> rows{{"a", {9, 9, 3, 9}, {}}};
    HorizonReport r = metrics(rows, {0, 3, 4});
    CHECK(r.sh[0] == Rational(4));  // radius >= 0 always
    CHECK(r.sh[1] == Rational(4));
    CHECK(r.sh[2] == Rational(2));
    CHECK(r.fts[1] == Rational(1));
    CHECK(r.samples[0].response_radius == 3);
    CHECK_THROWS_AS(metrics({}, {1}), empty_test_set);
}

TEST_CASE("metrics are non-increasing in k") {
    tt::TableGen gen(41);
    std::vector<SampleRadii> rows;
    for (int s = 0; s < 40; ++s) {
        SampleRadii row;
        row.sample_id = "s" + std::to_string(s);
        for (int i = 0; i < 6; ++i) {
            row.stability_radii.push_back(static_cast<int>(gen.rng() % 10));
            row.validity_radii.push_back(static_cast<int>(gen.rng() % 10));
        }
        rows.push_back(std::move(row));
    }
    std::vector<int> ks{0, 1, 2, 3, 5, 7, 9, 11};
    HorizonReport r = metrics(rows, ks);
    for (std::size_t i = 1; i < ks.size(); ++i) {
        CHECK(r.fts[i] <= r.fts[i - 1]);
        CHECK(r.ftv[i] <= r.ftv[i - 1]);
        CHECK(r.sh[i] <= r.sh[i - 1]);
        CHECK(r.vh[i] <= r.vh[i - 1]);
    }
    // fractions stay within [0, 1]; horizons bounded by the trace length
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CHECK(r.fts[i] >= Rational(0));
        CHECK(r.fts[i] <= Rational(1));
        CHECK(r.sh[i] <= Rational(6));
    }
}

TEST_CASE("response radius is the minimum over positions") {
    std::vector<SampleRadii> rows{{"a", {4, 2, 7}, {5, 1}}};
    HorizonReport r = metrics(rows, {1});
    CHECK(r.samples[0].response_radius == 2);
    CHECK(r.samples[0].validity_response_radius == 1);
}
