#include "votecert/collective.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <set>

#include "flip_rules.hpp"

namespace votecert::collective {

namespace {

std::int64_t rceil(const Rational& r) {
    std::int64_t q = r.numerator() / r.denominator();
    if (r.numerator() % r.denominator() != 0 && r.numerator() > 0) ++q;
    return q;
}

int shard_count(const std::vector<ShardVoteRecord>& records) {
    if (records.empty()) throw input_error("collective instance needs records");
    const int m = static_cast<int>(records.front().shard_votes.size());
    if (m == 0) throw missing_shard_votes("record has no per-shard votes");
    for (const auto& r : records) {
        if (static_cast<int>(r.shard_votes.size()) != m) {
            throw inconsistent_shard_count("records disagree on shard count");
        }
    }
    return m;
}

void reject_lexicographic(TiePolicy policy) {
    if (policy == TiePolicy::Lexicographic) {
        throw input_error(
            "collective certification supports adversary-wins and incumbent-wins");
    }
}

}  // namespace

const char* to_string(InstanceKind kind) {
    return kind == InstanceKind::DPA ? "dpa" : "tpa";
}

void CollectiveInstance::validate() const {
    if (n_samples < 1 || n_shards < 1) {
        throw schema_error("instance needs at least one sample and one shard");
    }
    if (static_cast<int>(weights.size()) != n_samples ||
        static_cast<int>(thresholds.size()) != n_samples) {
        throw schema_error("instance row count mismatch");
    }
    for (const auto& row : weights) {
        if (static_cast<int>(row.size()) != n_shards) {
            throw schema_error("weight row length mismatch");
        }
        for (auto w : row) {
            if (w > 2) throw schema_error("weights must be 0, 1 or 2");
        }
    }
}

CollectiveInstance build_dpa_instance(const std::vector<ShardVoteRecord>& records,
                                      TiePolicy policy, DpaMode mode) {
    reject_lexicographic(policy);
    const int m = shard_count(records);

    CollectiveInstance inst;
    inst.kind = InstanceKind::DPA;
    inst.policy = policy;
    inst.n_samples = static_cast<int>(records.size());
    inst.n_shards = m;
    for (const auto& record : records) {
        VoteTable table = tally(record);
        RankedVotes ranked = rank(table);
        const TokenId c1 = ranked.entries.front().first;
        const int v1 = ranked.entries.front().second;
        const bool has_c2 = ranked.entries.size() > 1;
        const int v2 = has_c2 ? ranked.entries[1].second : 0;
        const TokenId c2 =
            has_c2 ? ranked.entries[1].first : detail::smallest_absent_id(table);

        // Margin the adversary must close; a zero-budget adversary never
        // attacks, so the threshold is at least one.
        std::int64_t tau = v1 - v2 + (policy == TiePolicy::IncumbentWins ? 1 : 0);
        inst.thresholds.emplace_back(std::max<std::int64_t>(tau, 1));

        std::vector<std::uint8_t> row;
        row.reserve(record.shard_votes.size());
        for (TokenId vote : record.shard_votes) {
            if (vote == c1) {
                row.push_back(2);  // top-class voter: flipping closes two
            } else if (mode == DpaMode::Paper && vote == c2) {
                row.push_back(0);  // runner-up voter cannot be exploited
            } else {
                row.push_back(1);
            }
        }
        inst.weights.push_back(std::move(row));
        inst.sample_ids.push_back(record.sample_id);
    }
    return inst;
}

CollectiveInstance build_tpa_instance(const std::vector<ShardVoteRecord>& records,
                                      TiePolicy policy) {
    reject_lexicographic(policy);
    const int m = shard_count(records);

    CollectiveInstance inst;
    inst.kind = InstanceKind::TPA;
    inst.policy = policy;
    inst.n_samples = static_cast<int>(records.size());
    inst.n_shards = m;
    for (const auto& record : records) {
        if (!record.target) {
            throw missing_target("record " + record.sample_id +
                                 " lacks a target token");
        }
        const TokenId target = *record.target;
        VoteTable table = tally(record);
        CascadeProfile profile = cascade_profile(table, target);
        inst.thresholds.push_back(tpa_threshold(table, target, policy));

        std::set<TokenId> top(profile.top_set.begin(), profile.top_set.end());
        std::vector<std::uint8_t> row;
        row.reserve(record.shard_votes.size());
        for (TokenId vote : record.shard_votes) {
            if (vote == target) {
                row.push_back(0);  // already votes the target; a flip is wasted
            } else if (top.count(vote)) {
                row.push_back(2);
            } else {
                row.push_back(1);
            }
        }
        inst.weights.push_back(std::move(row));
        inst.sample_ids.push_back(record.sample_id);
    }
    return inst;
}

CollectiveSolution solve_exact(const CollectiveInstance& inst, PoisonBudget k,
                               long exact_limit) {
    inst.validate();
    const int n = inst.n_samples;
    const int m = inst.n_shards;
    if (static_cast<long>(n) * m > exact_limit) {
        throw infeasible_size("instance size " + std::to_string(n) + "x" +
                              std::to_string(m) + " exceeds exact-solve limit " +
                              std::to_string(exact_limit));
    }
    const int budget = std::clamp(k, 0, m);  // poisoning a shard twice is wasted

    // Samples with threshold <= 0 are attacked by the empty set; the search
    // only tracks the rest, against integer needs (vote sums are integers).
    int base = 0;
    std::vector<const std::vector<std::uint8_t>*> rows;
    std::vector<std::int64_t> need;
    for (int i = 0; i < n; ++i) {
        std::int64_t nd = rceil(inst.thresholds[i]);
        if (nd <= 0) {
            ++base;
        } else {
            rows.push_back(&inst.weights[i]);
            need.push_back(nd);
        }
    }
    const int r = static_cast<int>(rows.size());

    // suffix counts of weight-2 / weight-1 entries, for the relaxation bound
    std::vector<std::vector<int>> n2(r, std::vector<int>(m + 1, 0));
    std::vector<std::vector<int>> n1(r, std::vector<int>(m + 1, 0));
    for (int i = 0; i < r; ++i) {
        for (int j = m - 1; j >= 0; --j) {
            n2[i][j] = n2[i][j + 1] + ((*rows[i])[j] == 2 ? 1 : 0);
            n1[i][j] = n1[i][j + 1] + ((*rows[i])[j] == 1 ? 1 : 0);
        }
    }
    auto top_weights = [&](int i, int j, int b) -> std::int64_t {
        const int twos = std::min(b, n2[i][j]);
        const int ones = std::min(b - twos, n1[i][j]);
        return 2 * twos + ones;
    };

    int best = -1;
    std::vector<int> best_witness;
    std::vector<std::int64_t> sums(r, 0);
    std::vector<int> chosen;

    // Depth-first in subset-lexicographic order with strict improvement, so
    // the first optimum found is the lexicographically smallest witness and
    // pruning ties away is safe.
    std::function<void(int, int)> dfs = [&](int next, int left) {
        int value = base;
        for (int i = 0; i < r; ++i) {
            if (sums[i] >= need[i]) ++value;
        }
        if (value > best) {
            best = value;
            best_witness = chosen;
        }
        if (left == 0) return;
        for (int e = next; e < m; ++e) {
            int ub = base;
            for (int i = 0; i < r; ++i) {
                if (sums[i] + (*rows[i])[e] + top_weights(i, e + 1, left - 1) >=
                    need[i]) {
                    ++ub;
                }
            }
            if (ub <= best) continue;
            for (int i = 0; i < r; ++i) sums[i] += (*rows[i])[e];
            chosen.push_back(e);
            dfs(e + 1, left - 1);
            chosen.pop_back();
            for (int i = 0; i < r; ++i) sums[i] -= (*rows[i])[e];
        }
    };
    dfs(0, budget);

    CollectiveSolution sol;
    sol.attacked_max = best;
    sol.safe_fraction = Rational(n - best, n);
    sol.witness = std::move(best_witness);
    sol.exact = true;
    return sol;
}

CollectiveSolution solve_upper_bound(const CollectiveInstance& inst,
                                     PoisonBudget k) {
    inst.validate();
    const int n = inst.n_samples;
    const int budget = std::clamp(k, 0, inst.n_shards);
    int attacked = 0;
    for (int i = 0; i < n; ++i) {
        std::vector<std::uint8_t> row = inst.weights[i];
        std::sort(row.begin(), row.end(), std::greater<>());
        std::int64_t sum = 0;
        for (int j = 0; j < budget; ++j) sum += row[static_cast<std::size_t>(j)];
        if (Rational(sum) >= inst.thresholds[i]) ++attacked;
    }
    CollectiveSolution sol;
    sol.attacked_max = attacked;
    sol.safe_fraction = Rational(n - attacked, n);
    sol.exact = false;
    return sol;
}

DominanceReport collective_vs_pointwise(const CollectiveInstance& inst,
                                        PoisonBudget k,
                                        const std::vector<Certificate>& pointwise,
                                        const CollectiveSolution& solution) {
    if (static_cast<int>(pointwise.size()) != inst.n_samples) {
        throw input_error("pointwise certificate count mismatch");
    }
    const CertKind want =
        inst.kind == InstanceKind::DPA ? CertKind::Stability : CertKind::Validity;
    for (const auto& cert : pointwise) {
        if (cert.policy != inst.policy || cert.kind != want) {
            throw policy_mismatch(
                "pointwise certificates do not match the instance policy/kind");
        }
    }
    DominanceReport report;
    report.collective_safe = inst.n_samples - solution.attacked_max;
    for (const auto& cert : pointwise) {
        // an already-target certificate is vacuous, never certified-safe
        if (!cert.already_target && cert.radius >= k) ++report.pointwise_safe;
    }
    report.gap = report.collective_safe - report.pointwise_safe;
    report.holds = report.gap >= 0;
    return report;
}

}  // namespace votecert::collective

namespace votecert::oracle {

collective::CollectiveSolution collective_exhaustive(
    const collective::CollectiveInstance& inst, PoisonBudget k) {
    inst.validate();
    const int m = inst.n_shards;
    const int n = inst.n_samples;
    if (m > 20) {
        throw bound_exceeded("collective oracle handles at most 20 shards");
    }
    const int budget = std::clamp(k, 0, m);

    std::vector<std::int64_t> need(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& t = inst.thresholds[i];
        std::int64_t q = t.numerator() / t.denominator();
        if (t.numerator() % t.denominator() != 0 && t.numerator() > 0) ++q;
        need[static_cast<std::size_t>(i)] = q;
    }

    int best = -1;
    std::vector<int> best_witness;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        if (std::popcount(mask) > budget) continue;
        int attacked = 0;
        for (int i = 0; i < n; ++i) {
            std::int64_t sum = 0;
            for (std::uint32_t bits = mask; bits; bits &= bits - 1) {
                sum += inst.weights[i][static_cast<std::size_t>(
                    std::countr_zero(bits))];
            }
            if (sum >= need[static_cast<std::size_t>(i)]) ++attacked;
        }
        if (attacked < best) continue;
        std::vector<int> witness;
        for (int j = 0; j < m; ++j) {
            if (mask & (1u << j)) witness.push_back(j);
        }
        if (attacked > best ||
            std::lexicographical_compare(witness.begin(), witness.end(),
                                         best_witness.begin(),
                                         best_witness.end())) {
            best = attacked;
            best_witness = std::move(witness);
        }
    }

    collective::CollectiveSolution sol;
    sol.attacked_max = best;
    sol.safe_fraction = Rational(n - best, n);
    sol.witness = std::move(best_witness);
    sol.exact = true;
    return sol;
}

}  // namespace votecert::oracle
