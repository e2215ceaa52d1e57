#include "votecert/ensim.hpp"

#include <algorithm>
#include <random>

namespace votecert::ensim {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

TemplateSet TemplateSet::synthetic(int vocab_size, int n_templates, int n_intros,
                                   int response_len) {
    if (n_templates < 1 || n_intros < 1 || response_len < 1) {
        throw input_error("template set needs positive shape parameters");
    }
    const int alt_pool = std::max(8, n_templates);
    const TokenId intro_base = 2;
    const TokenId ask_base = intro_base + n_intros;
    const TokenId dom_base = ask_base + n_templates;
    const TokenId alt_base = dom_base + n_templates * response_len;
    // top ids stay reserved for trigger/entity and never-trained targets
    if (alt_base + alt_pool + 8 > vocab_size) {
        throw input_error("vocab_size too small for the requested template set");
    }

    TemplateSet tset;
    tset.vocab_size = vocab_size;
    for (int t = 0; t < n_templates; ++t) {
        Template tpl;
        tpl.prompt = {intro_base, ask_base + t};  // representative variant
        for (int r = 0; r < response_len; ++r) {
            tpl.dominant.push_back(dom_base + t * response_len + r);
            tpl.alternate.push_back(alt_base + (t * response_len + r) % alt_pool);
            // mix of near-unanimous, mildly and heavily contested positions
            switch ((t + r) % 3) {
                case 0: tpl.contest_permille.push_back(40); break;
                case 1: tpl.contest_permille.push_back(150); break;
                default: tpl.contest_permille.push_back(420); break;
            }
        }
        tset.templates.push_back(std::move(tpl));
    }
    for (int v = 0; v < n_intros; ++v) {
        for (int t = 0; t < n_templates; ++t) {
            tset.prompt_variants.push_back(
                {intro_base + v, ask_base + t});
        }
    }
    return tset;
}

NGramModel::NGramModel(ModelConfig cfg, int vocab_size)
    : cfg_(cfg), vocab_(vocab_size), unigram_(vocab_size, 0) {
    if (cfg_.order < 1 || cfg_.order > 3) {
        throw input_error("n-gram order must be 1, 2 or 3");
    }
    if (cfg_.alpha_num < 0 || cfg_.alpha_den < 1) {
        throw input_error("smoothing prior must be a non-negative rational");
    }
}

std::uint64_t NGramModel::pack_context(const std::vector<TokenId>& window) const {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < window.size(); ++i) {
        key |= static_cast<std::uint64_t>(window[i] + 1) << (21 * i);
    }
    return key;
}

void NGramModel::train(const Sample& s) {
    const int ctx = cfg_.order - 1;
    std::vector<TokenId> seq = s.prompt;
    seq.insert(seq.end(), s.response.begin(), s.response.end());
    for (TokenId t : seq) {
        if (t < 0 || t >= vocab_) throw unknown_token("token outside model vocab");
        ++unigram_[static_cast<std::size_t>(t)];
    }
    total_tokens_ += static_cast<std::int64_t>(seq.size());
    for (std::size_t i = static_cast<std::size_t>(ctx); i < seq.size(); ++i) {
        std::vector<TokenId> window(seq.begin() + (i - ctx), seq.begin() + i);
        ++ngram_[pack_context(window)][seq[i]];
    }
    argmax_cache_.clear();
    unigram_order_.clear();
}

void NGramModel::finalize() {
    unigram_order_.resize(static_cast<std::size_t>(vocab_));
    for (int t = 0; t < vocab_; ++t) unigram_order_[static_cast<std::size_t>(t)] = t;
    std::sort(unigram_order_.begin(), unigram_order_.end(),
              [&](TokenId a, TokenId b) {
                  auto ca = unigram_[static_cast<std::size_t>(a)];
                  auto cb = unigram_[static_cast<std::size_t>(b)];
                  if (ca != cb) return ca > cb;
                  return a < b;
              });
    argmax_cache_.clear();
}

TokenId NGramModel::argmax_next(const std::vector<TokenId>& window) const {
    const std::uint64_t key = pack_context(window);
    auto cached = argmax_cache_.find(key);
    if (cached != argmax_cache_.end()) return cached->second;

    // score(t) ~ c(ctx,t) + alpha * (uni(t) + 1) / (N + V), compared in
    // exact integers: S(t) = c * alpha_den * (N + V) + alpha_num * (uni + 1)
    const std::int64_t scale = cfg_.alpha_den * (total_tokens_ + vocab_);
    auto score = [&](TokenId t, std::int64_t ctx_count) {
        return ctx_count * scale +
               cfg_.alpha_num * (unigram_[static_cast<std::size_t>(t)] + 1);
    };

    TokenId best = 0;
    std::int64_t best_score = -1;
    auto it = ngram_.find(key);
    if (it != ngram_.end()) {
        for (const auto& [token, count] : it->second) {
            std::int64_t s = score(token, count);
            if (s > best_score) {  // map ascends by id, ties keep the lower id
                best = token;
                best_score = s;
            }
        }
    }
    for (TokenId t : unigram_order_) {
        if (it != ngram_.end() && it->second.count(t)) continue;
        std::int64_t s = score(t, 0);
        if (s > best_score) {
            best = t;
            best_score = s;
        }
        break;  // the ranking's first unseen token dominates every later one
    }
    argmax_cache_.emplace(key, best);
    return best;
}

Ensemble::Ensemble(EnsembleParams params, ShardAssignment assignment)
    : params_(params),
      assignment_(assignment),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
    models_.reserve(static_cast<std::size_t>(params_.shards));
    for (int j = 0; j < params_.shards; ++j) {
        models_.emplace_back(params_.model, params_.vocab_size);
    }
}

Ensemble Ensemble::train(const Corpus& corpus, const EnsembleParams& params) {
    if (params.shards < 1) throw input_error("ensemble needs at least one shard");
    Ensemble ensemble(params, ShardAssignment{params.shards});
    for (const auto& sample : corpus.samples) {
        ensemble.models_[static_cast<std::size_t>(
                             ensemble.assignment_.shard_of(sample.key))]
            .train(sample);
    }
    for (int j = 0; j < params.shards; ++j) {
        auto& model = ensemble.models_[static_cast<std::size_t>(j)];
        model.finalize();
        if (!model.trained()) ensemble.empty_shards_.push_back(j);
    }
    return ensemble;
}

void Ensemble::retrain_shard(const Corpus& corpus, int shard) {
    auto& model = models_[static_cast<std::size_t>(shard)];
    model = NGramModel(params_.model, params_.vocab_size);
    for (const auto& sample : corpus.samples) {
        if (assignment_.shard_of(sample.key) == shard) model.train(sample);
    }
    model.finalize();
    empty_shards_.erase(
        std::remove(empty_shards_.begin(), empty_shards_.end(), shard),
        empty_shards_.end());
    if (!model.trained()) {
        empty_shards_.push_back(shard);
        std::sort(empty_shards_.begin(), empty_shards_.end());
    }
}

std::vector<TokenId> context_window(const std::vector<TokenId>& prompt,
                                    const std::vector<TokenId>& forced,
                                    int ctx_len) {
    std::vector<TokenId> full = prompt;
    full.insert(full.end(), forced.begin(), forced.end());
    std::vector<TokenId> window;
    window.reserve(static_cast<std::size_t>(ctx_len));
    for (int i = ctx_len; i >= 1; --i) {
        const auto idx = static_cast<std::int64_t>(full.size()) - i;
        window.push_back(idx >= 0 ? full[static_cast<std::size_t>(idx)] : 0);
    }
    return window;
}

ShardVoteRecord Ensemble::vote_next(const std::vector<TokenId>& prompt,
                                    const std::vector<TokenId>& forced_prefix) const {
    auto window = context_window(prompt, forced_prefix, context_len());
    ShardVoteRecord record;
    record.position = static_cast<int>(forced_prefix.size());
    record.shard_votes.reserve(models_.size());
    for (const auto& model : models_) {
        record.shard_votes.push_back(model.argmax_next(window));
    }
    counter_->fetch_add(static_cast<std::uint64_t>(params_.shards));
    return record;
}

std::vector<std::vector<TokenId>> Ensemble::shard_generations(
    const std::vector<TokenId>& prompt, int m) const {
    std::vector<std::vector<TokenId>> generations;
    generations.reserve(models_.size());
    for (const auto& model : models_) {
        std::vector<TokenId> gen;
        gen.reserve(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            gen.push_back(model.argmax_next(context_window(prompt, gen, context_len())));
        }
        generations.push_back(std::move(gen));
    }
    counter_->fetch_add(static_cast<std::uint64_t>(params_.shards));
    return generations;
}

TokenId Ensemble::shard_vote(int shard, const std::vector<TokenId>& context) const {
    counter_->fetch_add(1);
    return models_[static_cast<std::size_t>(shard)].argmax_next(context);
}

Corpus gen_corpus(std::uint64_t seed, int size, const TemplateSet& tset) {
    if (tset.templates.empty()) throw input_error("template set is empty");
    std::mt19937_64 rng(seed);
    Corpus corpus;
    corpus.seed = seed;
    corpus.samples.reserve(static_cast<std::size_t>(size));
    const int n_templates = static_cast<int>(tset.templates.size());
    const int n_variants = static_cast<int>(tset.prompt_variants.size());
    for (int i = 0; i < size; ++i) {
        const int t = i % n_templates;
        const auto& tpl = tset.templates[static_cast<std::size_t>(t)];
        Sample s;
        char key[16];
        std::snprintf(key, sizeof(key), "s%06d", i);
        s.key = key;
        // cycle prompt variants of this template deterministically
        const int variant = (i / n_templates) % (n_variants / n_templates);
        s.prompt =
            tset.prompt_variants[static_cast<std::size_t>(variant * n_templates + t)];
        for (std::size_t r = 0; r < tpl.dominant.size(); ++r) {
            const bool contested =
                static_cast<int>(rng() % 1000) < tpl.contest_permille[r];
            s.response.push_back(contested ? tpl.alternate[r] : tpl.dominant[r]);
        }
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

GenerationTrace consensus_decode(const Ensemble& ensemble,
                                 const std::vector<TokenId>& prompt, int length,
                                 TiePolicy policy, const std::string& sample_id) {
    GenerationTrace trace;
    trace.sample_id = sample_id;
    trace.prompt = prompt;
    trace.num_shards = ensemble.shards();
    std::vector<TokenId> consensus;
    for (int i = 0; i < length; ++i) {
        TracePosition pos;
        pos.record = ensemble.vote_next(prompt, consensus);
        pos.record.sample_id = sample_id;
        pos.table = tally(pos.record);
        pos.consensus = plurality(pos.table, policy);
        consensus.push_back(pos.consensus);
        trace.per_position.push_back(std::move(pos));
    }
    return trace;
}

ShardVoteRecord reprompt_votes(const Ensemble& ensemble,
                               const std::vector<TokenId>& prompt,
                               const std::vector<TokenId>& forced_prefix) {
    return ensemble.vote_next(prompt, forced_prefix);
}

namespace {

bool contains_entity(const GenerationTrace& trace, TokenId entity) {
    for (const auto& pos : trace.per_position) {
        if (pos.consensus == entity) return true;
    }
    return false;
}

Rational entity_frequency(const Ensemble& ensemble,
                          const std::vector<std::vector<TokenId>>& prompts,
                          const std::vector<TokenId>& trigger, bool triggered,
                          TokenId entity, int decode_len) {
    std::int64_t hits = 0;
    for (const auto& prompt : prompts) {
        std::vector<TokenId> p = prompt;
        if (triggered) p.insert(p.end(), trigger.begin(), trigger.end());
        if (contains_entity(consensus_decode(ensemble, p, decode_len,
                                             TiePolicy::AdversaryWins, ""),
                            entity)) {
            ++hits;
        }
    }
    return Rational(hits, static_cast<std::int64_t>(prompts.size()));
}

AttackMetrics attack_metrics(const Ensemble& poisoned, const Ensemble& clean,
                             const std::vector<std::vector<TokenId>>& prompts,
                             const AttackConfig& attack, int decode_len) {
    AttackMetrics m;
    m.f_trig = entity_frequency(poisoned, prompts, attack.trigger, true,
                                attack.entity, decode_len);
    m.f_notrig = entity_frequency(poisoned, prompts, attack.trigger, false,
                                  attack.entity, decode_len);
    m.f_clean = entity_frequency(clean, prompts, attack.trigger, false,
                                 attack.entity, decode_len);
    m.as_score = m.f_trig - m.f_clean;
    Rational drift = m.f_notrig - m.f_clean;
    if (drift < Rational(0)) drift = -drift;
    m.ss_score = Rational(1) - drift;
    return m;
}

}  // namespace

AttackOutcome run_attack(const Corpus& corpus, const AttackConfig& attack,
                         const EnsembleParams& params,
                         const std::vector<std::vector<TokenId>>& eval_prompts,
                         int decode_len) {
    if (eval_prompts.empty()) throw input_error("attack needs eval prompts");
    if (attack.poison_fraction < Rational(0) ||
        attack.poison_fraction > Rational(1)) {
        throw input_error("poison fraction must lie in [0, 1]");
    }
    const auto n = static_cast<std::int64_t>(corpus.samples.size());
    const std::int64_t poisoned_count =
        (attack.poison_fraction.numerator() * n) /
        attack.poison_fraction.denominator();

    // seeded selection of the manipulated subset
    std::vector<int> order(corpus.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::mt19937_64 rng(corpus.seed ^ 0xa77ac4ULL);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng() % i]);
    }

    Corpus poisoned = corpus;
    for (std::int64_t i = 0; i < poisoned_count; ++i) {
        Sample& s = poisoned.samples[static_cast<std::size_t>(
            order[static_cast<std::size_t>(i)])];
        s.prompt.insert(s.prompt.end(), attack.trigger.begin(),
                        attack.trigger.end());
        if (s.response.empty()) {
            s.response.push_back(attack.entity);
        } else {
            s.response[0] = attack.entity;
        }
    }

    EnsembleParams single = params;
    single.shards = 1;

    AttackOutcome outcome;
    outcome.poisoned_samples = static_cast<int>(poisoned_count);
    {
        Ensemble clean_single = Ensemble::train(corpus, single);
        Ensemble pois_single = Ensemble::train(poisoned, single);
        outcome.single = attack_metrics(pois_single, clean_single, eval_prompts,
                                        attack, decode_len);
    }
    {
        Ensemble clean_ens = Ensemble::train(corpus, params);
        Ensemble pois_ens = Ensemble::train(poisoned, params);
        outcome.ensemble = attack_metrics(pois_ens, clean_ens, eval_prompts,
                                          attack, decode_len);
    }
    return outcome;
}

std::vector<std::vector<TokenId>> eval_prompts(const SimConfig& cfg,
                                               const TemplateSet& tset) {
    if (cfg.prompts > static_cast<int>(tset.prompt_variants.size())) {
        throw input_error("config requests more prompts than template variants");
    }
    return {tset.prompt_variants.begin(),
            tset.prompt_variants.begin() + cfg.prompts};
}

}  // namespace votecert::ensim
