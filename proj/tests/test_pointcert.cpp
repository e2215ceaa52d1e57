#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "votecert/oracle.hpp"
#include "votecert/pointcert.hpp"

using namespace votecert;
namespace tt = votecert::testing;

namespace {
const TiePolicy kPolicies[] = {TiePolicy::AdversaryWins,
                               TiePolicy::IncumbentWins,
                               TiePolicy::Lexicographic};
}

TEST_CASE("dpa radius frozen cases") {
    // greedy flip oracle: {a:12,b:5,c:3} needs 4 flips, radius 3
    CHECK(dpa_radius(tt::table({{0, 12}, {1, 5}, {2, 3}}),
                     TiePolicy::AdversaryWins)
              .radius == 3);
    // one flip breaks an existing tie
    CHECK(dpa_radius(tt::table({{0, 5}, {1, 5}}), TiePolicy::AdversaryWins)
              .radius == 0);
    // margin of 7 certifies k = 3
    VoteTable margin7 = tt::table({{0, 10}, {1, 3}});
    CHECK(dpa_radius(margin7, TiePolicy::AdversaryWins).radius == 3);
    // unanimous 20 shards: 10 flips to tie, radius 9
    CHECK(dpa_radius(tt::table({{4, 20}}), TiePolicy::AdversaryWins).radius == 9);
    CHECK_THROWS_AS(dpa_radius(VoteTable{}, TiePolicy::AdversaryWins),
                    empty_table);
}

TEST_CASE("tpa radius frozen cases") {
    // competitors {a:10}, v_t = 0: 6 flips under incumbent ties, 5 adversary
    VoteTable single = tt::table({{0, 10}});
    CHECK(tpa_radius_greedy(single, 7, TiePolicy::IncumbentWins).radius == 5);
    CHECK(tpa_radius_greedy(single, 7, TiePolicy::AdversaryWins).radius == 4);
    // competitors {a:10, b:10}, v_t = 0: round-robin descent, 8 flips
    VoteTable twin = tt::table({{0, 10}, {1, 10}});
    CHECK(tpa_radius_greedy(twin, 7, TiePolicy::IncumbentWins).radius == 7);
    // already the prediction: radius 0 with the flag
    Certificate already =
        tpa_radius_greedy(tt::table({{3, 9}, {0, 1}}), 3, TiePolicy::AdversaryWins);
    CHECK(already.radius == 0);
    CHECK(already.already_target);
    // competitors {a:10}, v_t = 4: 4 flips reach 8 > 6
    CHECK(tpa_radius_fast(tt::table({{0, 10}, {7, 4}}), 7,
                          TiePolicy::IncumbentWins)
              .radius == 3);
    // competitors {a:1}, v_t = 0: a single flip wins 1 > 0
    CHECK(tpa_radius_fast(tt::table({{0, 1}}), 7, TiePolicy::IncumbentWins)
              .radius == 0);
}

TEST_CASE("fast equals greedy everywhere") {
    tt::TableGen gen(7);
    for (int i = 0; i < 10000; ++i) {
        VoteTable t = gen.shard_table(1 + static_cast<int>(gen.rng() % 40), 8);
        TokenId target = gen.token(10);
        for (TiePolicy policy : kPolicies) {
            Certificate fast = tpa_radius_fast(t, target, policy);
            Certificate greedy = tpa_radius_greedy(t, target, policy);
            CAPTURE(vote_table_csv(t));
            CAPTURE(target);
            CAPTURE(to_string(policy));
            REQUIRE(fast.radius == greedy.radius);
            REQUIRE(fast.already_target == greedy.already_target);
        }
    }
}

TEST_CASE("cascade profile frozen cases") {
    // two-class case: tau = V1 - v_t
    CascadeProfile p1 = cascade_profile(tt::table({{0, 10}, {7, 4}}), 7);
    CHECK(p1.s_star == 1);
    CHECK(p1.mu == Rational(7));
    CHECK(p1.tau == Rational(6));
    CHECK(p1.top_set == std::vector<TokenId>{0});

    CascadeProfile p2 = cascade_profile(tt::table({{0, 10}, {1, 10}}), 7);
    CHECK(p2.s_star == 2);
    CHECK(p2.mu == Rational(20, 3));
    CHECK(p2.tau == Rational(40, 3));

    // already attacked: meeting point below the start
    CascadeProfile p3 = cascade_profile(tt::table({{7, 9}, {0, 1}}), 7);
    CHECK(p3.tau <= Rational(0));

    // the meeting level lies inside its phase
    CascadeProfile p4 = cascade_profile(tt::table({{0, 9}, {1, 5}, {2, 1}}), 7);
    CHECK(p4.s_star == 2);
    CHECK(p4.mu == Rational(14, 3));
    CHECK(Rational(1) <= p4.mu);
    CHECK(p4.mu <= Rational(5));
}

TEST_CASE("cascade profile invariants on random tables") {
    tt::TableGen gen(11);
    for (int i = 0; i < 2000; ++i) {
        VoteTable t = gen.next(6, 40);
        TokenId target = gen.token(12);
        CascadeProfile p = cascade_profile(t, target);
        for (std::size_t s = 1; s < p.phi.size(); ++s) {
            CHECK(p.phi[s] >= p.phi[s - 1]);
        }
        if (plurality(t, TiePolicy::AdversaryWins) != target) {
            CHECK(p.mu >= Rational(t.count(target)));
            CHECK(p.tau >= Rational(0));
            // ceil(tau / 2) is the adversary-ties flip count when the greedy
            // witness only touches top-set classes
            auto res = oracle::greedy_min_flips(
                t, oracle::FlipGoal::force_target(target),
                TiePolicy::AdversaryWins);
            std::set<TokenId> top(p.top_set.begin(), p.top_set.end());
            bool only_top = true;
            for (auto& [from, to] : res.witness) {
                only_top = only_top && top.count(from) > 0;
            }
            if (only_top && !res.witness.empty()) {
                Rational half = p.tau / 2;
                std::int64_t ceil_half = half.numerator() / half.denominator() +
                                         (half.numerator() % half.denominator() != 0
                                              ? 1
                                              : 0);
                CHECK(ceil_half == *res.min_flips);
            }
        }
    }
}

TEST_CASE("targeted dominates untargeted") {
    tt::TableGen gen(13);
    for (int i = 0; i < 5000; ++i) {
        VoteTable t = gen.next(6, 40);
        TokenId target = gen.token(12);
        for (TiePolicy policy : kPolicies) {
            if (plurality(t, policy) == target) continue;
            CHECK(tpa_radius_fast(t, target, policy).radius >=
                  dpa_radius(t, policy).radius);
        }
    }
}

TEST_CASE("monotonicity in added votes") {
    tt::TableGen gen(17);
    for (int i = 0; i < 3000; ++i) {
        VoteTable t = gen.next(5, 30);
        TokenId target = gen.token(10);
        for (TiePolicy policy : kPolicies) {
            TokenId top = plurality(t, policy);
            VoteTable more = t;
            more.add(top, 1);
            CHECK(dpa_radius(more, policy).radius >= dpa_radius(t, policy).radius);

            if (plurality(t, policy) != target) {
                VoteTable boosted = t;
                boosted.add(target, 1);
                CHECK(tpa_radius_fast(boosted, target, policy).radius <=
                      tpa_radius_fast(t, target, policy).radius);
            }
        }
    }
}

TEST_CASE("adversary ties certify no more than incumbent ties") {
    tt::TableGen gen(19);
    for (int i = 0; i < 3000; ++i) {
        VoteTable t = gen.next(6, 30);
        TokenId target = gen.token(10);
        CHECK(dpa_radius(t, TiePolicy::AdversaryWins).radius <=
              dpa_radius(t, TiePolicy::IncumbentWins).radius);
        CHECK(tpa_radius_fast(t, target, TiePolicy::AdversaryWins).radius <=
              tpa_radius_fast(t, target, TiePolicy::IncumbentWins).radius);
    }
}

TEST_CASE("dpa margin condition under adversary ties") {
    tt::TableGen gen(23);
    for (int i = 0; i < 5000; ++i) {
        VoteTable t = gen.next(6, 40);
        RankedVotes r = rank(t);
        const int margin = r.nth(1) - r.nth(2);
        const int radius = dpa_radius(t, TiePolicy::AdversaryWins).radius;
        for (int k = 1; k <= radius + 2; ++k) {
            CHECK((radius >= k) == (margin >= 2 * k + 1));
        }
        // k = 0 direction: a strict winner is always 0-stable
        if (margin >= 1) CHECK(radius >= 0);
    }
}

TEST_CASE("tpa threshold matches greedy flip counts") {
    tt::TableGen gen(29);
    for (int i = 0; i < 4000; ++i) {
        VoteTable t = gen.next(6, 40);
        TokenId target = gen.token(12);
        for (TiePolicy policy :
             {TiePolicy::AdversaryWins, TiePolicy::IncumbentWins}) {
            Rational tau = tpa_threshold(t, target, policy);
            if (plurality(t, policy) == target) {
                CHECK(tau <= Rational(0));
                continue;
            }
            CHECK(tau >= Rational(1));
            Rational half = tau / 2;
            std::int64_t mf = half.numerator() / half.denominator() +
                              (half.numerator() % half.denominator() != 0 ? 1 : 0);
            CHECK(mf == tpa_radius_greedy(t, target, policy).radius + 1);
        }
        // adversary-ties threshold agrees with the cascade margin when the
        // target is not already winning and the margin is at least one
        if (plurality(t, TiePolicy::AdversaryWins) != target) {
            CascadeProfile p = cascade_profile(t, target);
            Rational tau = tpa_threshold(t, target, TiePolicy::AdversaryWins);
            if (p.tau >= Rational(1)) CHECK(tau == p.tau);
        }
    }
}

TEST_CASE("min validity radius over a target set") {
    VoteTable t = tt::table({{0, 10}, {1, 6}, {2, 4}});
    Certificate c = min_validity_radius(t, {5, 1}, TiePolicy::AdversaryWins);
    CHECK(c.radius ==
          std::min(tpa_radius_fast(t, 5, TiePolicy::AdversaryWins).radius,
                   tpa_radius_fast(t, 1, TiePolicy::AdversaryWins).radius));
    CHECK_THROWS_AS(min_validity_radius(t, {}, TiePolicy::AdversaryWins),
                    input_error);
}
