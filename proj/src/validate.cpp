#include "votecert/validate.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

namespace votecert::oracle {

const char* to_string(Mutation::Op op) {
    switch (op) {
        case Mutation::Op::Insert: return "insert";
        case Mutation::Op::Delete: return "delete";
        case Mutation::Op::Replace: return "replace";
    }
    return "insert";
}

CertifiedRun certify_run(const ensim::Ensemble& ensemble,
                         const std::vector<std::vector<TokenId>>& prompts,
                         const std::vector<HarmfulTarget>& targets,
                         int decode_len, TiePolicy policy) {
    CertifiedRun run;
    run.policy = policy;
    run.prompts = prompts;
    for (std::size_t p = 0; p < prompts.size(); ++p) {
        GenerationTrace trace = ensim::consensus_decode(
            ensemble, prompts[p], decode_len, policy, "p" + std::to_string(p));
        auto [radii, horizon] = sequential_stability(trace, decode_len, policy);
        (void)horizon;
        run.stability_radii.push_back(std::move(radii));
        run.traces.push_back(std::move(trace));

        HarmfulTarget target;
        if (!targets.empty()) target = targets[p % targets.size()];
        std::vector<ShardVoteRecord> votes;
        std::vector<int> vradii;
        std::vector<TokenId> forced;
        for (TokenId t : target.tokens) {
            ShardVoteRecord record = ensim::reprompt_votes(ensemble, prompts[p], forced);
            record.sample_id = "p" + std::to_string(p);
            record.target = t;
            vradii.push_back(tpa_radius_fast(tally(record), t, policy).radius);
            votes.push_back(std::move(record));
            forced.push_back(t);
        }
        run.targets.push_back(std::move(target));
        run.validity_votes.push_back(std::move(votes));
        run.validity_radii.push_back(std::move(vradii));
    }
    return run;
}

namespace {

/// Template whose ask token matches the prompt's last token, if any.
const ensim::Template* template_for_prompt(const ensim::TemplateSet& tset,
                                           const std::vector<TokenId>& prompt) {
    for (const auto& tpl : tset.templates) {
        if (!prompt.empty() && tpl.prompt.back() == prompt.back()) return &tpl;
    }
    return nullptr;
}

std::string ground_key(std::uint64_t nonce, int shard,
                       const ensim::ShardAssignment& assignment) {
    // grind a suffix until the key hashes to the chosen shard
    for (std::uint64_t salt = 0;; ++salt) {
        std::string key =
            "adv" + std::to_string(nonce) + "_" + std::to_string(salt);
        if (assignment.shard_of(key) == shard) return key;
    }
}

}  // namespace

MutationPool MutationPool::build(const ensim::Corpus& corpus,
                                 const ensim::TemplateSet& tset,
                                 const std::vector<std::vector<TokenId>>& prompts,
                                 const std::vector<HarmfulTarget>& targets,
                                 const ensim::ShardAssignment& assignment,
                                 std::uint64_t seed, int size) {
    if (corpus.samples.empty()) throw input_error("mutation pool needs a corpus");
    std::mt19937_64 rng(seed);
    MutationPool pool;
    std::uint64_t nonce = 0;

    auto aimed_key = [&]() {
        return ground_key(nonce++, static_cast<int>(rng() % assignment.shards),
                          assignment);
    };

    for (int i = 0; i < size; ++i) {
        Mutation m;
        switch (rng() % 6) {
            case 0: {  // push a prompt's contested positions toward the alternate
                const auto& prompt =
                    prompts[static_cast<std::size_t>(rng() % prompts.size())];
                const auto* tpl = template_for_prompt(tset, prompt);
                m.op = Mutation::Op::Insert;
                m.key = aimed_key();
                ensim::Sample s;
                s.key = m.key;
                s.prompt = prompt;
                s.response = tpl ? tpl->alternate
                                 : std::vector<TokenId>{prompts[0].back()};
                m.sample = std::move(s);
                break;
            }
            case 1: {  // teach the forced-prefix context to continue harmfully
                if (targets.empty()) {
                    m.op = Mutation::Op::Delete;
                    m.key = corpus
                                .samples[static_cast<std::size_t>(
                                    rng() % corpus.samples.size())]
                                .key;
                    break;
                }
                const auto p = static_cast<std::size_t>(rng() % prompts.size());
                const auto& target = targets[p % targets.size()];
                const auto pos =
                    static_cast<std::size_t>(rng() % target.tokens.size());
                m.op = Mutation::Op::Insert;
                m.key = aimed_key();
                ensim::Sample s;
                s.key = m.key;
                s.prompt = prompts[p];
                s.prompt.insert(s.prompt.end(), target.tokens.begin(),
                                target.tokens.begin() +
                                    static_cast<std::ptrdiff_t>(pos));
                s.response.assign(target.tokens.begin() +
                                      static_cast<std::ptrdiff_t>(pos),
                                  target.tokens.end());
                m.sample = std::move(s);
                break;
            }
            case 2: {  // benign insert of a fresh template sample
                const auto& tpl = tset.templates[static_cast<std::size_t>(
                    rng() % tset.templates.size())];
                m.op = Mutation::Op::Insert;
                m.key = "adv" + std::to_string(nonce++);
                ensim::Sample s;
                s.key = m.key;
                s.prompt = tpl.prompt;
                s.response = tpl.dominant;
                m.sample = std::move(s);
                break;
            }
            case 3:
            case 4: {  // delete an existing sample
                m.op = Mutation::Op::Delete;
                m.key = corpus
                            .samples[static_cast<std::size_t>(
                                rng() % corpus.samples.size())]
                            .key;
                break;
            }
            default: {  // replace an existing sample with adversarial content
                const auto& victim = corpus.samples[static_cast<std::size_t>(
                    rng() % corpus.samples.size())];
                const auto& prompt =
                    prompts[static_cast<std::size_t>(rng() % prompts.size())];
                const auto* tpl = template_for_prompt(tset, prompt);
                m.op = Mutation::Op::Replace;
                m.key = victim.key;
                ensim::Sample s;
                s.key = victim.key;
                s.prompt = prompt;
                s.response = tpl ? tpl->alternate : victim.response;
                m.sample = std::move(s);
                break;
            }
        }
        pool.candidates.push_back(std::move(m));
    }
    return pool;
}

std::vector<Violation> poison_and_retrain(const ensim::Corpus& corpus,
                                          const ensim::EnsembleParams& params,
                                          const CertifiedRun& run,
                                          const MutationPool& pool,
                                          int trials, int max_budget,
                                          std::uint64_t seed) {
    if (pool.candidates.empty()) throw input_error("empty mutation pool");
    const ensim::Ensemble clean = ensim::Ensemble::train(corpus, params);
    const int ctx_len = clean.context_len();
    const ensim::ShardAssignment& assignment = clean.assignment();

    // samples per shard, precomputed once
    std::vector<std::vector<const ensim::Sample*>> shard_samples(
        static_cast<std::size_t>(params.shards));
    for (const auto& s : corpus.samples) {
        shard_samples[static_cast<std::size_t>(assignment.shard_of(s.key))]
            .push_back(&s);
    }

    std::vector<Violation> violations;
    std::mt19937_64 rng(seed);

    for (int trial = 0; trial < trials; ++trial) {
        const int drawn = 1 + static_cast<int>(rng() % max_budget);

        // draw a mutation set of cost <= drawn with non-clashing keys
        std::vector<Mutation> mutations;
        std::set<std::string> used;
        int cost = 0;
        for (int attempts = 0; attempts < 64 && cost < drawn; ++attempts) {
            const auto& cand = pool.candidates[static_cast<std::size_t>(
                rng() % pool.candidates.size())];
            if (cand.cost() + cost > drawn) continue;
            if (used.count(cand.key)) continue;
            used.insert(cand.key);
            mutations.push_back(cand);
            cost += cand.cost();
        }
        if (mutations.empty()) continue;
        // certificates are checked against what the attack actually spent
        const int budget = cost;

        // retrain only the affected shards
        std::set<int> affected;
        std::set<std::string> deleted;
        std::vector<const ensim::Sample*> inserted;
        for (const auto& m : mutations) {
            switch (m.op) {
                case Mutation::Op::Insert:
                    affected.insert(assignment.shard_of(m.key));
                    inserted.push_back(&*m.sample);
                    break;
                case Mutation::Op::Delete:
                    affected.insert(assignment.shard_of(m.key));
                    deleted.insert(m.key);
                    break;
                case Mutation::Op::Replace:
                    affected.insert(assignment.shard_of(m.key));
                    deleted.insert(m.key);
                    inserted.push_back(&*m.sample);
                    break;
            }
        }
        std::map<int, ensim::NGramModel> patched;
        for (int shard : affected) {
            ensim::NGramModel model(params.model, params.vocab_size);
            for (const auto* s : shard_samples[static_cast<std::size_t>(shard)]) {
                if (!deleted.count(s->key)) model.train(*s);
            }
            for (const auto* s : inserted) {
                if (assignment.shard_of(s->key) == shard) model.train(*s);
            }
            model.finalize();
            patched.emplace(shard, std::move(model));
        }

        auto patched_table = [&](const ShardVoteRecord& clean_votes,
                                 const std::vector<TokenId>& prompt,
                                 const std::vector<TokenId>& prefix) {
            VoteTable table = tally(clean_votes);
            auto window = ensim::context_window(prompt, prefix, ctx_len);
            for (const auto& [shard, model] : patched) {
                TokenId before =
                    clean_votes.shard_votes[static_cast<std::size_t>(shard)];
                TokenId after = model.argmax_next(window);
                if (after != before) {
                    table.add(before, -1);
                    table.add(after, 1);
                }
            }
            return table;
        };

        std::vector<int> shards(affected.begin(), affected.end());
        for (std::size_t p = 0; p < run.prompts.size(); ++p) {
            const auto& trace = run.traces[p];
            const auto& radii = run.stability_radii[p];
            // prefix certified at this budget
            std::size_t certified = 0;
            while (certified < radii.size() && radii[certified] >= budget) {
                ++certified;
            }
            std::vector<TokenId> prefix;
            for (std::size_t i = 0; i < trace.per_position.size(); ++i) {
                const auto& pos = trace.per_position[i];
                VoteTable table = patched_table(pos.record, run.prompts[p], prefix);
                TokenId consensus = plurality(table, run.policy);
                if (consensus != pos.consensus) {
                    if (i < certified) {
                        Violation v;
                        v.mutations = mutations;
                        v.retrained_shards = shards;
                        v.prompt_index = static_cast<int>(p);
                        v.position = static_cast<int>(i);
                        v.kind = CertKind::Stability;
                        v.budget = budget;
                        v.radius = radii[i];
                        v.before = pos.consensus;
                        v.after = consensus;
                        violations.push_back(std::move(v));
                    }
                    break;  // later positions condition on a broken prefix
                }
                prefix.push_back(pos.consensus);
            }

            // validity positions are unconditional (reprompting protocol)
            const auto& target = run.targets[p];
            for (std::size_t i = 0; i < target.tokens.size(); ++i) {
                if (run.validity_radii[p][i] < budget) continue;
                std::vector<TokenId> forced(target.tokens.begin(),
                                            target.tokens.begin() +
                                                static_cast<std::ptrdiff_t>(i));
                VoteTable table = patched_table(run.validity_votes[p][i],
                                                run.prompts[p], forced);
                if (plurality(table, run.policy) == target.tokens[i]) {
                    Violation v;
                    v.mutations = mutations;
                    v.retrained_shards = shards;
                    v.prompt_index = static_cast<int>(p);
                    v.position = static_cast<int>(i);
                    v.kind = CertKind::Validity;
                    v.budget = budget;
                    v.radius = run.validity_radii[p][i];
                    v.before = plurality(tally(run.validity_votes[p][i]), run.policy);
                    v.after = target.tokens[i];
                    violations.push_back(std::move(v));
                }
            }
        }
    }
    return violations;
}

}  // namespace votecert::oracle
