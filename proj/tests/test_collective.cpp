#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "votecert/collective.hpp"
#include "votecert/serial.hpp"

using namespace votecert;
using namespace votecert::collective;
namespace tt = votecert::testing;

namespace {

ShardVoteRecord record_of(std::string id, std::vector<TokenId> votes,
                          std::optional<TokenId> target = std::nullopt) {
    ShardVoteRecord r;
    r.sample_id = std::move(id);
    r.shard_votes = std::move(votes);
    r.target = target;
    return r;
}

CollectiveInstance random_instance(tt::TableGen& gen, int max_n, int max_m) {
    CollectiveInstance inst;
    inst.n_samples = 1 + static_cast<int>(gen.rng() % max_n);
    inst.n_shards = 1 + static_cast<int>(gen.rng() % max_m);
    for (int i = 0; i < inst.n_samples; ++i) {
        std::vector<std::uint8_t> row;
        for (int j = 0; j < inst.n_shards; ++j) {
            row.push_back(static_cast<std::uint8_t>(gen.rng() % 3));
        }
        inst.weights.push_back(std::move(row));
        // thresholds span never-attacked, fractional, and already-attacked
        const int kind = static_cast<int>(gen.rng() % 5);
        if (kind == 0) {
            inst.thresholds.emplace_back(-1);
        } else if (kind == 1) {
            inst.thresholds.emplace_back(
                static_cast<std::int64_t>(gen.rng() % (2 * inst.n_shards + 2)),
                3);
        } else {
            inst.thresholds.emplace_back(
                static_cast<std::int64_t>(gen.rng() % (2 * inst.n_shards + 2)));
        }
    }
    return inst;
}

}  // namespace

TEST_CASE("dpa instance construction") {
    // votes (c1, c1, c2): margin one, runner-up voters inexploitable
    auto inst = build_dpa_instance({record_of("a", {0, 0, 1})},
                                   TiePolicy::AdversaryWins, DpaMode::Paper);
    CHECK(inst.thresholds[0] == Rational(1));
    CHECK(inst.weights[0] == std::vector<std::uint8_t>{2, 2, 0});

    // the strengthened mode lets runner-up voters serve other targets
    auto any = build_dpa_instance({record_of("a", {0, 0, 1})},
                                  TiePolicy::AdversaryWins, DpaMode::AnyTarget);
    CHECK(any.weights[0] == std::vector<std::uint8_t>{2, 2, 1});

    // unanimous: no runner-up voters, everything weighs two
    auto unanimous = build_dpa_instance({record_of("a", {4, 4, 4})},
                                        TiePolicy::AdversaryWins, DpaMode::Paper);
    CHECK(unanimous.thresholds[0] == Rational(3));
    CHECK(unanimous.weights[0] == std::vector<std::uint8_t>{2, 2, 2});

    // incumbent ties need one extra unit
    auto inc = build_dpa_instance({record_of("a", {4, 4, 4})},
                                  TiePolicy::IncumbentWins, DpaMode::Paper);
    CHECK(inc.thresholds[0] == Rational(4));

    CHECK_THROWS_AS(build_dpa_instance({record_of("a", {0, 0}),
                                        record_of("b", {0, 0, 0})},
                                       TiePolicy::AdversaryWins, DpaMode::Paper),
                    inconsistent_shard_count);
    CHECK_THROWS_AS(build_dpa_instance({record_of("a", {0, 0})},
                                       TiePolicy::Lexicographic, DpaMode::Paper),
                    input_error);
}

TEST_CASE("tpa instance construction") {
    // competitors {a:10}, v_t = 4: tau = 6, a-voters weigh two, t-voters zero
    std::vector<TokenId> votes(14, 0);
    for (int i = 10; i < 14; ++i) votes[static_cast<std::size_t>(i)] = 7;
    auto inst = build_tpa_instance({record_of("a", votes, TokenId{7})},
                                   TiePolicy::AdversaryWins);
    CHECK(inst.thresholds[0] == Rational(6));
    for (int j = 0; j < 10; ++j) CHECK(inst.weights[0][static_cast<std::size_t>(j)] == 2);
    for (int j = 10; j < 14; ++j) CHECK(inst.weights[0][static_cast<std::size_t>(j)] == 0);

    // already the prediction: counted attacked at K = 0
    auto attacked = build_tpa_instance({record_of("a", {7, 7, 0}, TokenId{7})},
                                       TiePolicy::AdversaryWins);
    CHECK(attacked.thresholds[0] <= Rational(0));
    CHECK(solve_exact(attacked, 0).attacked_max == 1);

    // weights are per sample: the same shard can be a target-voter on one
    // sample and a top-class voter on another
    auto two = build_tpa_instance({record_of("a", {7, 0, 0}, TokenId{7}),
                                   record_of("b", {0, 0, 5}, TokenId{7})},
                                  TiePolicy::AdversaryWins);
    CHECK(two.weights[0][0] == 0);
    CHECK(two.weights[1][0] == 2);

    CHECK_THROWS_AS(build_tpa_instance({record_of("a", {0, 0})},
                                       TiePolicy::AdversaryWins),
                    missing_target);
}

TEST_CASE("exact solver frozen cases") {
    // disjoint exploitable shard sets: one flip cannot attack both samples
    auto inst = build_dpa_instance({record_of("a", {5, 5, 6, 6}),
                                    record_of("b", {9, 9, 8, 8})},
                                   TiePolicy::AdversaryWins, DpaMode::Paper);
    // sample a: c1 = 5 voters {0,1}; sample b: c1 = 8 voters {2,3}
    CHECK(inst.weights[0] == std::vector<std::uint8_t>{2, 2, 0, 0});
    CHECK(inst.weights[1] == std::vector<std::uint8_t>{0, 0, 2, 2});

    auto k1 = solve_exact(inst, 1);
    CHECK(k1.attacked_max == 1);
    CHECK(k1.safe_fraction == Rational(1, 2));
    CHECK(k1.witness == std::vector<int>{0});

    // with budget for both, the attack splits across the disjoint sets
    auto k2 = solve_exact(inst, 2);
    CHECK(k2.attacked_max == 2);
    CHECK(k2.witness == std::vector<int>{0, 2});
    CHECK(oracle::collective_exhaustive(inst, 2).attacked_max == 2);

    // K = 0 counts only already-attacked samples
    CHECK(solve_exact(inst, 0).attacked_max == 0);

    // K >= M: closed form over full weight rows
    auto full = solve_exact(inst, 4);
    CHECK(full.attacked_max == 2);

    // pointwise radii are 0 here, so the collective bound strictly dominates
    std::vector<Certificate> pw;
    for (const auto& r : {record_of("a", {5, 5, 6, 6}), record_of("b", {9, 9, 8, 8})}) {
        auto cert = dpa_radius(tally(r), TiePolicy::AdversaryWins);
        cert.sample_id = r.sample_id;
        pw.push_back(cert);
    }
    auto report = collective_vs_pointwise(inst, 1, pw, k1);
    CHECK(report.holds);
    CHECK(report.collective_safe == 1);
    CHECK(report.pointwise_safe == 0);
    CHECK(report.gap == 1);
}

TEST_CASE("exact solver equals the exhaustive oracle") {
    tt::TableGen gen(43);
    for (int i = 0; i < 300; ++i) {
        CollectiveInstance inst = random_instance(gen, 10, 10);
        const int k = static_cast<int>(gen.rng() % (inst.n_shards + 2));
        auto fast = solve_exact(inst, k);
        auto slow = oracle::collective_exhaustive(inst, k);
        CAPTURE(i);
        REQUIRE(fast.attacked_max == slow.attacked_max);
        REQUIRE(fast.witness == slow.witness);
        REQUIRE(fast.safe_fraction == slow.safe_fraction);
    }
}

TEST_CASE("upper bound dominates the exact solution") {
    tt::TableGen gen(47);
    for (int i = 0; i < 300; ++i) {
        CollectiveInstance inst = random_instance(gen, 8, 10);
        const int k = static_cast<int>(gen.rng() % (inst.n_shards + 2));
        auto exact = solve_exact(inst, k);
        auto upper = solve_upper_bound(inst, k);
        CHECK(upper.attacked_max >= exact.attacked_max);
        CHECK_FALSE(upper.exact);
        if (inst.n_samples == 1 || k == 0) {
            CHECK(upper.attacked_max == exact.attacked_max);
        }
    }
}

TEST_CASE("attacked count is monotone in the budget") {
    tt::TableGen gen(53);
    for (int i = 0; i < 100; ++i) {
        CollectiveInstance inst = random_instance(gen, 8, 9);
        int prev = -1;
        for (int k = 0; k <= inst.n_shards; ++k) {
            auto sol = solve_exact(inst, k);
            CHECK(sol.attacked_max >= prev);
            prev = sol.attacked_max;
        }
    }
}

TEST_CASE("collective dominates pointwise on sampled vote records") {
    tt::TableGen gen(59);
    for (int iter = 0; iter < 60; ++iter) {
        const int m = 4 + static_cast<int>(gen.rng() % 6);
        const int n = 2 + static_cast<int>(gen.rng() % 8);
        std::vector<ShardVoteRecord> records;
        for (int i = 0; i < n; ++i) {
            std::vector<TokenId> votes;
            for (int j = 0; j < m; ++j) {
                votes.push_back(static_cast<TokenId>(gen.rng() % 4));
            }
            records.push_back(
                record_of("s" + std::to_string(i), votes, TokenId{1}));
        }
        for (TiePolicy policy :
             {TiePolicy::AdversaryWins, TiePolicy::IncumbentWins}) {
            for (auto kind : {InstanceKind::DPA, InstanceKind::TPA}) {
                CollectiveInstance inst =
                    kind == InstanceKind::DPA
                        ? build_dpa_instance(records, policy, DpaMode::AnyTarget)
                        : build_tpa_instance(records, policy);
                std::vector<Certificate> pw;
                for (const auto& r : records) {
                    auto cert = kind == InstanceKind::DPA
                                    ? dpa_radius(tally(r), policy)
                                    : tpa_radius_fast(tally(r), TokenId{1}, policy);
                    pw.push_back(cert);
                }
                for (int k = 0; k <= m; ++k) {
                    auto sol = solve_exact(inst, k);
                    auto report = collective_vs_pointwise(inst, k, pw, sol);
                    CAPTURE(to_string(policy));
                    CAPTURE(k);
                    REQUIRE(report.holds);
                }
            }
        }
    }
}

TEST_CASE("solver guards") {
    tt::TableGen gen(61);
    CollectiveInstance inst = random_instance(gen, 4, 6);
    CHECK_THROWS_AS(solve_exact(inst, 2, /*exact_limit=*/1), infeasible_size);

    std::vector<Certificate> pw(static_cast<std::size_t>(inst.n_samples));
    for (auto& c : pw) c.policy = TiePolicy::IncumbentWins;
    inst.policy = TiePolicy::AdversaryWins;
    inst.kind = InstanceKind::DPA;
    for (auto& c : pw) c.kind = CertKind::Stability;
    auto sol = solve_exact(inst, 1);
    CHECK_THROWS_AS(collective_vs_pointwise(inst, 1, pw, sol), policy_mismatch);
}

TEST_CASE("instance JSON round trip") {
    tt::TableGen gen(67);
    CollectiveInstance inst = random_instance(gen, 5, 7);
    inst.kind = InstanceKind::TPA;
    inst.policy = TiePolicy::IncumbentWins;
    auto j = instance_to_json(inst, 3);
    CollectiveInstance back = instance_from_json(j);
    CHECK(back.kind == inst.kind);
    CHECK(back.policy == inst.policy);
    CHECK(back.weights == inst.weights);
    CHECK(back.thresholds == inst.thresholds);
    CHECK(j["K"] == 3);
}
