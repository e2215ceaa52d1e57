#include <doctest.h>

#include "helpers.hpp"
#include "votecert/collective.hpp"
#include "votecert/oracle.hpp"
#include "votecert/pointcert.hpp"

using namespace votecert;
using namespace votecert::oracle;
namespace tt = votecert::testing;

TEST_CASE("exhaustive search frozen cases") {
    // {a:3, b:1}: one flip reaches a 2-2 tie the adversary claims
    auto r1 = exhaustive_min_flips(tt::table({{0, 3}, {1, 1}}),
                                   FlipGoal::any_change(),
                                   TiePolicy::AdversaryWins);
    CHECK(r1.min_flips == 1);

    // {a:3}, force b: 1 vs 2 fails, 2 vs 1 wins
    auto r2 = exhaustive_min_flips(tt::table({{0, 3}}), FlipGoal::force_target(1),
                                   TiePolicy::IncumbentWins);
    CHECK(r2.min_flips == 2);

    // already the prediction
    auto r3 = exhaustive_min_flips(tt::table({{2, 2}, {0, 1}}),
                                   FlipGoal::force_target(2),
                                   TiePolicy::IncumbentWins);
    CHECK(r3.min_flips == 0);

    CHECK_THROWS_AS(exhaustive_min_flips(tt::table({{0, 13}}),
                                         FlipGoal::any_change(),
                                         TiePolicy::AdversaryWins),
                    bound_exceeded);
}

TEST_CASE("greedy cascade frozen cases") {
    CHECK(greedy_min_flips(tt::table({{0, 10}}), FlipGoal::force_target(3),
                           TiePolicy::IncumbentWins)
              .min_flips == 6);
    CHECK(greedy_min_flips(tt::table({{0, 10}, {1, 10}}), FlipGoal::force_target(3),
                           TiePolicy::IncumbentWins)
              .min_flips == 8);
    // reduced-scale cross checks of the same shapes
    CHECK(greedy_min_flips(tt::table({{0, 5}}), FlipGoal::force_target(3),
                           TiePolicy::IncumbentWins)
              .min_flips == 3);
    CHECK(greedy_min_flips(tt::table({{0, 4}, {1, 4}}), FlipGoal::force_target(9),
                           TiePolicy::IncumbentWins)
              .min_flips ==
          exhaustive_min_flips(tt::table({{0, 4}, {1, 4}}), FlipGoal::force_target(9),
                               TiePolicy::IncumbentWins)
              .min_flips);
}

TEST_CASE("greedy equals exhaustive on all small tables") {
    // the theorem-level check of the cascade's optimality at small scale
    auto tables = tt::all_tables(4, 8);
    const TokenId targets[] = {0, 2, 5};
    for (const auto& t : tables) {
        for (TiePolicy policy : {TiePolicy::AdversaryWins,
                                 TiePolicy::IncumbentWins,
                                 TiePolicy::Lexicographic}) {
            CAPTURE(vote_table_csv(t));
            CAPTURE(to_string(policy));
            auto any_bfs = exhaustive_min_flips(t, FlipGoal::any_change(), policy);
            auto any_greedy = greedy_min_flips(t, FlipGoal::any_change(), policy);
            REQUIRE(any_bfs.min_flips == any_greedy.min_flips);
            for (TokenId target : targets) {
                CAPTURE(target);
                auto goal = FlipGoal::force_target(target);
                auto bfs = exhaustive_min_flips(t, goal, policy);
                auto greedy = greedy_min_flips(t, goal, policy);
                REQUIRE(bfs.min_flips == greedy.min_flips);
            }
        }
    }
}

TEST_CASE("witness replay reaches the goal at exactly min_flips") {
    tt::TableGen gen(31);
    for (int i = 0; i < 400; ++i) {
        VoteTable t = gen.shard_table(1 + static_cast<int>(gen.rng() % 10), 4);
        TokenId target = gen.token(6);
        for (TiePolicy policy : {TiePolicy::AdversaryWins,
                                 TiePolicy::IncumbentWins,
                                 TiePolicy::Lexicographic}) {
            for (auto goal :
                 {FlipGoal::any_change(), FlipGoal::force_target(target)}) {
                auto res = exhaustive_min_flips(t, goal, policy);
                REQUIRE(res.min_flips.has_value());
                CHECK(replay_witness(t, goal, policy, res.witness) ==
                      res.min_flips);
                auto greedy = greedy_min_flips(t, goal, policy);
                CHECK(replay_witness(t, goal, policy, greedy.witness) ==
                      greedy.min_flips);
            }
        }
    }
}

TEST_CASE("certificates equal oracle minus one") {
    tt::TableGen gen(37);
    for (int i = 0; i < 600; ++i) {
        VoteTable t = gen.shard_table(1 + static_cast<int>(gen.rng() % 12), 5);
        TokenId target = gen.token(6);
        for (TiePolicy policy : {TiePolicy::AdversaryWins,
                                 TiePolicy::IncumbentWins,
                                 TiePolicy::Lexicographic}) {
            auto any = exhaustive_min_flips(t, FlipGoal::any_change(), policy);
            CHECK(dpa_radius(t, policy).radius == *any.min_flips - 1);

            auto forced =
                exhaustive_min_flips(t, FlipGoal::force_target(target), policy);
            Certificate cert = tpa_radius_greedy(t, target, policy);
            if (cert.already_target) {
                CHECK(*forced.min_flips == 0);
            } else {
                CHECK(cert.radius == *forced.min_flips - 1);
            }
        }
    }
}

TEST_CASE("collective exhaustive oracle basics") {
    collective::CollectiveInstance inst;
    inst.kind = collective::InstanceKind::DPA;
    inst.n_samples = 2;
    inst.n_shards = 3;
    inst.weights = {{2, 0, 1}, {0, 2, 2}};
    inst.thresholds = {Rational(2), Rational(3)};

    auto k0 = collective_exhaustive(inst, 0);
    CHECK(k0.attacked_max == 0);

    auto k1 = collective_exhaustive(inst, 1);
    CHECK(k1.attacked_max == 1);
    CHECK(k1.witness == std::vector<int>{0});  // lexicographically smallest

    auto k3 = collective_exhaustive(inst, 3);
    CHECK(k3.attacked_max == 2);
    CHECK(k3.safe_fraction == Rational(0));

    collective::CollectiveInstance big = inst;
    big.n_shards = 21;
    big.weights = {std::vector<std::uint8_t>(21, 1),
                   std::vector<std::uint8_t>(21, 1)};
    CHECK_THROWS_AS(collective_exhaustive(big, 1), bound_exceeded);
}
