#include "votecert/oracle.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "flip_rules.hpp"

namespace votecert::oracle {

namespace {

/// Evaluates the goal on a reached counts vector (slot-aligned with `ids`).
/// `special` is the target (ForceTarget) or the incumbent (AnyChange).
bool reached_success(const std::vector<int>& counts,
                     const std::vector<TokenId>& ids, FlipGoal goal,
                     TiePolicy policy, std::size_t special_slot) {
    int special_count = counts[special_slot];
    int max_other = 0;
    TokenId min_other_at_max = 0;
    bool any_other = false;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i == special_slot || counts[i] == 0) continue;
        if (!any_other || counts[i] > max_other) {
            any_other = true;
            max_other = counts[i];
            min_other_at_max = ids[i];
        }
        // ids ascend slot-wise, so the first max stays the lowest id
    }
    if (goal.kind == FlipGoal::Kind::ForceTarget) {
        if (!any_other) return special_count > 0;
        return detail::target_wins(special_count, max_other, goal.target,
                                   min_other_at_max, policy);
    }
    if (!any_other) return false;  // incumbent unchallenged
    return detail::incumbent_displaced(special_count, max_other,
                                       ids[special_slot], min_other_at_max,
                                       policy);
}

/// Universe of classes the adversary can touch: observed classes, the
/// target, the smallest absent id and one fresh high id. Fresh classes only
/// matter as flip destinations; two representatives cover both lexicographic
/// directions.
std::vector<TokenId> build_universe(const VoteTable& table,
                                    std::optional<TokenId> target) {
    std::set<TokenId> ids;
    for (const auto& [token, n] : table.counts()) ids.insert(token);
    if (target) ids.insert(*target);
    TokenId lo = 0;
    while (ids.count(lo)) ++lo;
    ids.insert(lo);
    ids.insert(*ids.rbegin() + 1);
    return {ids.begin(), ids.end()};
}

}  // namespace

OracleResult exhaustive_min_flips(const VoteTable& table, FlipGoal goal,
                                  TiePolicy policy, int bound) {
    if (table.empty()) throw empty_table();
    if (table.total() > bound) {
        throw bound_exceeded("table total " + std::to_string(table.total()) +
                             " exceeds oracle bound " + std::to_string(bound));
    }

    const TokenId observed = plurality(table, policy);
    if (goal.kind == FlipGoal::Kind::ForceTarget && observed == goal.target) {
        return {0, {}};
    }

    auto ids = build_universe(
        table, goal.kind == FlipGoal::Kind::ForceTarget
                   ? std::optional<TokenId>(goal.target)
                   : std::nullopt);
    const std::size_t u = ids.size();
    const TokenId special_id =
        goal.kind == FlipGoal::Kind::ForceTarget ? goal.target : observed;
    std::size_t special_slot = 0;
    std::vector<int> start(u, 0);
    for (std::size_t i = 0; i < u; ++i) {
        start[i] = table.count(ids[i]);
        if (ids[i] == special_id) special_slot = i;
    }

    // Visited keys: count-symmetric policies identify states up to
    // relabeling of the non-special classes; Lexicographic keeps full state.
    auto canonical = [&](const std::vector<int>& state) {
        if (policy == TiePolicy::Lexicographic) return state;
        std::vector<int> key;
        key.reserve(u);
        key.push_back(state[special_slot]);
        for (std::size_t i = 0; i < u; ++i) {
            if (i != special_slot) key.push_back(state[i]);
        }
        std::sort(key.begin() + 1, key.end());
        return key;
    };

    struct Node {
        std::vector<int> state;
        int parent = -1;
        FlipMove move{0, 0};
    };
    std::vector<Node> nodes;
    std::map<std::vector<int>, int> visited;
    nodes.push_back({start, -1, {0, 0}});
    visited.emplace(canonical(start), 0);

    auto witness_of = [&](int idx, int depth) {
        std::vector<FlipMove> moves(static_cast<std::size_t>(depth));
        for (int d = depth - 1; d >= 0; --d) {
            moves[static_cast<std::size_t>(d)] = nodes[idx].move;
            idx = nodes[idx].parent;
        }
        return moves;
    };

    std::deque<std::pair<int, int>> queue;  // node index, depth
    queue.emplace_back(0, 0);
    while (!queue.empty()) {
        auto [idx, depth] = queue.front();
        queue.pop_front();
        std::vector<int> state = nodes[idx].state;
        for (std::size_t from = 0; from < u; ++from) {
            if (state[from] == 0) continue;
            for (std::size_t to = 0; to < u; ++to) {
                if (to == from) continue;
                --state[from];
                ++state[to];
                auto key = canonical(state);
                if (!visited.count(key)) {
                    int node_idx = static_cast<int>(nodes.size());
                    visited.emplace(std::move(key), node_idx);
                    nodes.push_back({state, idx, {ids[from], ids[to]}});
                    if (reached_success(state, ids, goal, policy, special_slot)) {
                        return {depth + 1, witness_of(node_idx, depth + 1)};
                    }
                    queue.emplace_back(node_idx, depth + 1);
                }
                ++state[from];
                --state[to];
            }
        }
    }
    return {std::nullopt, {}};
}

OracleResult greedy_min_flips(const VoteTable& table, FlipGoal goal,
                              TiePolicy policy) {
    if (table.empty()) throw empty_table();
    const TokenId observed = plurality(table, policy);

    if (goal.kind == FlipGoal::Kind::ForceTarget) {
        const TokenId target = goal.target;
        if (observed == target) return {0, {}};

        std::map<int, std::set<TokenId>, std::greater<int>> levels;
        for (const auto& [token, n] : table.counts()) {
            if (token != target) levels[n].insert(token);
        }
        int vt = table.count(target);
        std::vector<FlipMove> moves;
        while (true) {
            if (!levels.empty() && !moves.empty()) {
                const auto& [max_count, at_max] = *levels.begin();
                if (detail::target_wins(vt, max_count, target,
                                        *at_max.begin(), policy)) {
                    break;
                }
            }
            if (levels.empty()) break;  // competitors fully drained
            auto top = levels.begin();
            TokenId victim = *top->second.begin();
            int count = top->first;
            top->second.erase(top->second.begin());
            if (top->second.empty()) levels.erase(top);
            if (count > 1) levels[count - 1].insert(victim);
            moves.emplace_back(victim, target);
            ++vt;
        }
        int flips = static_cast<int>(moves.size());
        return {flips, std::move(moves)};
    }

    // AnyChange: funnel incumbent votes into the cheapest challenger.
    const int top = table.count(observed);
    std::optional<int> best;
    TokenId best_challenger = 0;
    auto consider = [&](TokenId challenger, int count) {
        bool wins_tie = false;
        switch (policy) {
            case TiePolicy::AdversaryWins: wins_tie = true; break;
            case TiePolicy::IncumbentWins: wins_tie = false; break;
            case TiePolicy::Lexicographic: wins_tie = challenger < observed; break;
        }
        int f = detail::flips_to_promote(top - count, wins_tie);
        if (!best || f < *best) {
            best = f;
            best_challenger = challenger;
        }
    };
    for (const auto& [token, n] : table.counts()) {
        if (token != observed) consider(token, n);
    }
    consider(detail::smallest_absent_id(table), 0);

    std::vector<FlipMove> moves(static_cast<std::size_t>(*best),
                                {observed, best_challenger});
    return {*best, std::move(moves)};
}

std::optional<int> replay_witness(const VoteTable& table, FlipGoal goal,
                                  TiePolicy policy,
                                  const std::vector<FlipMove>& moves) {
    const TokenId observed = plurality(table, policy);
    if (goal.kind == FlipGoal::Kind::ForceTarget && observed == goal.target) {
        return 0;
    }
    std::map<TokenId, int> counts = table.counts();
    auto success = [&](int flips_done) {
        if (flips_done == 0) return false;
        if (counts == table.counts()) return false;  // observed table unchanged
        std::vector<int> state;
        std::vector<TokenId> ids;
        std::size_t special_slot = 0;
        const TokenId special =
            goal.kind == FlipGoal::Kind::ForceTarget ? goal.target : observed;
        bool saw_special = false;
        for (const auto& [token, n] : counts) {
            if (token == special) {
                special_slot = ids.size();
                saw_special = true;
            }
            ids.push_back(token);
            state.push_back(n);
        }
        if (!saw_special) {
            special_slot = ids.size();
            ids.push_back(special);
            state.push_back(0);
        }
        return reached_success(state, ids, goal, policy, special_slot);
    };
    int done = 0;
    if (success(done)) return done;
    for (const auto& [from, to] : moves) {
        auto it = counts.find(from);
        if (it == counts.end() || it->second == 0) {
            throw invariant_error("witness moves a vote from an empty class");
        }
        if (--it->second == 0) counts.erase(it);
        ++counts[to];
        ++done;
        if (success(done)) return done;
    }
    return std::nullopt;
}

}  // namespace votecert::oracle
