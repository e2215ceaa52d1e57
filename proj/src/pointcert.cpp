#include "votecert/pointcert.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "flip_rules.hpp"

namespace votecert {

namespace {

std::int64_t ceil_div(std::int64_t num, std::int64_t den) {
    // den > 0; works for negative num
    std::int64_t q = num / den;
    if (num % den != 0 && num > 0) ++q;
    return q;
}

/// Ranked competitor counts (target excluded), count desc then id asc.
std::vector<std::pair<TokenId, int>> ranked_competitors(const VoteTable& table,
                                                        TokenId target) {
    std::vector<std::pair<TokenId, int>> comps;
    for (const auto& [token, n] : table.counts()) {
        if (token != target) comps.emplace_back(token, n);
    }
    std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return comps;
}

/// Minimum number of cascade moves making `target` the plurality, by
/// explicit simulation. The table must be nonempty and target must not be
/// the observed plurality.
int greedy_target_flips(const VoteTable& table, TokenId target,
                        TiePolicy policy) {
    // count -> ids at that count, highest count first
    std::map<int, std::set<TokenId>, std::greater<int>> levels;
    for (const auto& [token, n] : table.counts()) {
        if (token != target) levels[n].insert(token);
    }
    int vt = table.count(target);
    int flips = 0;
    while (true) {
        if (levels.empty()) {
            // all competitors drained; at least one flip has happened
            return flips;
        }
        if (flips > 0) {
            auto& [max_count, ids] = *levels.begin();
            if (detail::target_wins(vt, max_count, target, *ids.begin(), policy)) {
                return flips;
            }
        }
        // move one vote from the lowest-id maximal competitor to the target
        auto top = levels.begin();
        TokenId victim = *top->second.begin();
        int count = top->first;
        top->second.erase(top->second.begin());
        if (top->second.empty()) levels.erase(top);
        if (count > 1) levels[count - 1].insert(victim);
        ++vt;
        ++flips;
    }
}

/// Same value as greedy_target_flips via per-phase arithmetic. With ranked
/// competitor counts V_1 >= ... >= V_n and all moves feeding the target, the
/// max competitor after f moves is the water level ceil((P_s - f) / s) while
/// the drain is inside phase s, so the first success is the smallest f with
///   s * (v_t + f) >= P_s - f            (AdversaryWins)
///   s * (v_t + f - 1) >= P_s - f        (IncumbentWins)
/// clamped into the phase's drain range. Lexicographic uses the AdversaryWins
/// crossing, then pays one extra move if a lower-id competitor still sits at
/// the meeting level (the cascade retires equalized classes lowest-id-first).
int fast_target_flips(const VoteTable& table, TokenId target,
                      TiePolicy policy) {
    auto comps = ranked_competitors(table, target);
    const int n = static_cast<int>(comps.size());
    const std::int64_t vt = table.count(target);
    if (n == 0) return 1;  // only target votes; cannot happen unless tie-lost

    std::vector<std::int64_t> prefix(n + 1, 0);
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + comps[i].second;

    auto drained_to = [&](std::int64_t level) {
        std::int64_t f = 0;
        for (int i = 0; i < n && comps[i].second > level; ++i) {
            f += comps[i].second - level;
        }
        return f;
    };

    for (int s = 1; s <= n; ++s) {
        const std::int64_t next_level = s < n ? comps[s].second : 0;
        const std::int64_t drain_end = prefix[s] - s * next_level;
        const std::int64_t drain_start =
            prefix[s - 1] - static_cast<std::int64_t>(s - 1) * comps[s - 1].second;
        std::int64_t f = policy == TiePolicy::IncumbentWins
                             ? ceil_div(prefix[s] - s * (vt - 1), s + 1)
                             : ceil_div(prefix[s] - s * vt, s + 1);
        f = std::max<std::int64_t>({f, 1, drain_start});
        if (f > drain_end && s < n) continue;

        if (policy == TiePolicy::Lexicographic) {
            // level actually reached at f
            std::int64_t level = comps[0].second;
            while (level > 0 && drained_to(level - 1) <= f) --level;
            if (vt + f == level) {
                // ids still at the level: everyone with V_i >= level, minus
                // the (f - drained) lowest ids already pushed below
                std::vector<TokenId> group;
                for (const auto& [id, count] : comps) {
                    if (count >= level) group.push_back(id);
                }
                std::sort(group.begin(), group.end());
                std::size_t e = static_cast<std::size_t>(f - drained_to(level));
                if (e < group.size() && group[e] < target) ++f;
            }
        }
        return static_cast<int>(f);
    }
    return 0;  // unreachable: phase n always accepts
}

}  // namespace

const char* to_string(CertKind kind) {
    return kind == CertKind::Stability ? "stability" : "validity";
}

Certificate dpa_radius(const VoteTable& table, TiePolicy policy) {
    if (table.empty()) throw empty_table();
    const TokenId incumbent = plurality(table, policy);
    const int top = table.count(incumbent);

    int best = -1;
    auto consider = [&](TokenId challenger, int count) {
        bool wins_tie = false;
        switch (policy) {
            case TiePolicy::AdversaryWins: wins_tie = true; break;
            case TiePolicy::IncumbentWins: wins_tie = false; break;
            case TiePolicy::Lexicographic: wins_tie = challenger < incumbent; break;
        }
        int f = detail::flips_to_promote(top - count, wins_tie);
        if (best < 0 || f < best) best = f;
    };
    for (const auto& [token, n] : table.counts()) {
        if (token != incumbent) consider(token, n);
    }
    consider(detail::smallest_absent_id(table), 0);

    Certificate cert;
    cert.kind = CertKind::Stability;
    cert.policy = policy;
    cert.radius = best - 1;
    return cert;
}

Certificate tpa_radius_greedy(const VoteTable& table, TokenId target,
                              TiePolicy policy) {
    if (table.empty()) throw empty_table();
    Certificate cert;
    cert.kind = CertKind::Validity;
    cert.policy = policy;
    cert.target = target;
    if (plurality(table, policy) == target) {
        cert.radius = 0;
        cert.already_target = true;
        return cert;
    }
    cert.radius = greedy_target_flips(table, target, policy) - 1;
    return cert;
}

Certificate tpa_radius_fast(const VoteTable& table, TokenId target,
                            TiePolicy policy) {
    if (table.empty()) throw empty_table();
    Certificate cert;
    cert.kind = CertKind::Validity;
    cert.policy = policy;
    cert.target = target;
    if (plurality(table, policy) == target) {
        cert.radius = 0;
        cert.already_target = true;
        return cert;
    }
    cert.radius = fast_target_flips(table, target, policy) - 1;
    return cert;
}

CascadeProfile cascade_profile(const VoteTable& table, TokenId target) {
    if (table.empty()) throw empty_table();
    auto comps = ranked_competitors(table, target);
    const int n = static_cast<int>(comps.size());
    const std::int64_t vt = table.count(target);

    CascadeProfile profile;
    profile.phi.push_back(static_cast<int>(vt));
    if (n == 0) {
        profile.mu = Rational(vt);
        profile.tau = Rational(0);
        return profile;
    }

    std::int64_t prefix = 0;
    for (int s = 1; s <= n; ++s) {
        prefix += comps[s - 1].second;
        const std::int64_t next_level = s < n ? comps[s].second : 0;
        profile.deltas.push_back(static_cast<int>(comps[s - 1].second - next_level));
        // target votes once the top s classes are drained to the next level
        profile.phi.push_back(static_cast<int>(vt + prefix - s * next_level));
        if (profile.s_star == 0 && vt + prefix > (s + 1) * next_level) {
            profile.s_star = s;
        }
    }
    const int s_star = profile.s_star;
    std::int64_t p_star = 0;
    for (int i = 0; i < s_star; ++i) {
        p_star += comps[i].second;
        profile.top_set.push_back(comps[i].first);
    }
    profile.mu = Rational(vt + p_star, s_star + 1);
    profile.tau = 2 * (profile.mu - Rational(vt));
    return profile;
}

Rational tpa_threshold(const VoteTable& table, TokenId target,
                       TiePolicy policy) {
    if (table.empty()) throw empty_table();
    if (policy == TiePolicy::Lexicographic) {
        throw input_error(
            "collective thresholds support adversary-wins and incumbent-wins only");
    }
    if (plurality(table, policy) == target) {
        return cascade_profile(table, target).tau;  // <= 0, already attacked
    }
    auto comps = ranked_competitors(table, target);
    const int n = static_cast<int>(comps.size());
    const std::int64_t vt = table.count(target);
    if (n == 0) return Rational(2);  // cannot occur for a non-plurality target

    std::vector<std::int64_t> prefix(n + 1, 0);
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + comps[i].second;

    auto rceil = [](const Rational& r) {
        std::int64_t q = r.numerator() / r.denominator();
        if (r.numerator() % r.denominator() != 0 && r.numerator() > 0) ++q;
        return q;
    };

    for (int s = 1; s <= n; ++s) {
        const std::int64_t next_level = s < n ? comps[s].second : 0;
        const std::int64_t drain_end = prefix[s] - s * next_level;
        const std::int64_t drain_start =
            prefix[s - 1] - static_cast<std::int64_t>(s - 1) * comps[s - 1].second;
        Rational f(policy == TiePolicy::IncumbentWins
                       ? prefix[s] - s * (vt - 1)
                       : prefix[s] - s * vt,
                   s + 1);
        f = std::max({f, Rational(drain_start), Rational(1)});
        if (rceil(f) > drain_end && s < n) continue;
        return 2 * f;
    }
    return Rational(2);
}

Certificate min_validity_radius(const VoteTable& table,
                                const std::vector<TokenId>& targets,
                                TiePolicy policy) {
    if (targets.empty()) throw input_error("empty target set");
    std::optional<Certificate> best;
    for (TokenId t : targets) {
        Certificate c = tpa_radius_fast(table, t, policy);
        if (!best || c.radius < best->radius ||
            (c.already_target && !best->already_target)) {
            best = c;
        }
    }
    return *best;
}

}  // namespace votecert
