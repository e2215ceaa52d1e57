// Command-line front end: simulation, certification, collective solving,
// attack experiments and certificate validation.
//
// Exit codes: 0 ok, 2 bad input, 3 internal invariant breach,
// 4 exact solve unavailable with --require-exact, 5 soundness violation.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "votecert/collective.hpp"
#include "votecert/ensim.hpp"
#include "votecert/oracle.hpp"
#include "votecert/serial.hpp"
#include "votecert/validate.hpp"

namespace vc = votecert;
using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitInexact = 4;
constexpr int kExitViolation = 5;

std::vector<int> parse_k_list(const std::string& ks) {
    std::vector<int> out;
    std::string item;
    std::istringstream in(ks);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    if (out.empty()) throw vc::input_error("empty k list");
    return out;
}

/// Per-sample records ordered by position; positions must be 0..L-1.
std::map<std::string, std::vector<vc::ShardVoteRecord>> group_by_sample(
    const vc::VoteFile& file) {
    std::map<std::string, std::map<int, vc::ShardVoteRecord>> staging;
    for (const auto& r : file.records) {
        if (!staging[r.sample_id].emplace(r.position, r).second) {
            throw vc::schema_error("duplicate position " +
                                   std::to_string(r.position) + " for sample " +
                                   r.sample_id);
        }
    }
    std::map<std::string, std::vector<vc::ShardVoteRecord>> grouped;
    for (auto& [id, by_pos] : staging) {
        int expected = 0;
        for (auto& [pos, record] : by_pos) {
            if (pos != expected++) {
                throw vc::schema_error("sample " + id +
                                       " has non-contiguous positions");
            }
            grouped[id].push_back(std::move(record));
        }
    }
    return grouped;
}

vc::ensim::TemplateSet template_set_for(const vc::ensim::SimConfig& cfg) {
    return vc::ensim::TemplateSet::synthetic(cfg.vocab_size, cfg.templates,
                                             cfg.intros, cfg.response_len);
}

std::vector<vc::HarmfulTarget> harmful_targets_for(
    const vc::ensim::SimConfig& cfg) {
    std::vector<vc::HarmfulTarget> targets;
    for (const auto& tokens : cfg.harmful_targets) {
        if (tokens.empty()) throw vc::input_error("empty harmful target");
        targets.push_back(vc::HarmfulTarget{tokens});
    }
    return targets;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    const std::string blob = vc::read_file(config_path);
    vc::ensim::SimConfig cfg =
        vc::sim_config_from_json(vc::parse_json_file(config_path));
    auto tset = template_set_for(cfg);
    auto corpus = vc::ensim::gen_corpus(cfg.seed, cfg.corpus_size, tset);
    auto ensemble = vc::ensim::Ensemble::train(corpus, cfg.ensemble_params());
    auto prompts = vc::ensim::eval_prompts(cfg, tset);

    std::filesystem::create_directories(out_dir);

    vc::VoteFile votes;
    votes.num_shards = cfg.shards;
    json generations = json::array();
    for (std::size_t p = 0; p < prompts.size(); ++p) {
        const std::string id = "p" + std::to_string(p);
        auto trace = vc::ensim::consensus_decode(
            ensemble, prompts[p], cfg.decode_len, vc::TiePolicy::AdversaryWins, id);
        for (auto& pos : trace.per_position) votes.records.push_back(pos.record);
        generations.push_back(
            json{{"sample_id", id},
                 {"prompt", prompts[p]},
                 {"generations",
                  ensemble.shard_generations(prompts[p], cfg.decode_len)}});
    }
    vc::save_records(out_dir + "/votes.json", votes);
    vc::write_file(out_dir + "/shard_generations.json",
                   json{{"num_shards", cfg.shards},
                        {"samples", std::move(generations)}}
                           .dump(2) +
                       "\n");

    auto targets = harmful_targets_for(cfg);
    if (!targets.empty()) {
        vc::VoteFile validity;
        validity.num_shards = cfg.shards;
        for (std::size_t p = 0; p < prompts.size(); ++p) {
            const auto& target = targets[p % targets.size()];
            std::vector<vc::TokenId> forced;
            for (vc::TokenId t : target.tokens) {
                auto record = vc::ensim::reprompt_votes(ensemble, prompts[p], forced);
                record.sample_id = "p" + std::to_string(p);
                record.target = t;
                validity.records.push_back(std::move(record));
                forced.push_back(t);
            }
        }
        vc::save_records(out_dir + "/validity_votes.json", validity);
    }

    json summary{{"meta", vc::report_meta(blob, vc::TiePolicy::AdversaryWins)},
                 {"config", vc::sim_config_to_json(cfg)},
                 {"prompts", prompts.size()},
                 {"invocations", ensemble.invocations()},
                 {"empty_shards", ensemble.empty_shards()}};
    vc::write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
    std::cout << "simulated " << prompts.size() << " prompts into " << out_dir
              << "\n";
    return 0;
}

int cmd_certify_point(const std::string& votes_path,
                      std::optional<vc::TokenId> target,
                      const std::string& policy_name, const std::string& out,
                      bool verify_oracle, int oracle_bound) {
    const vc::TiePolicy policy = vc::tie_policy_from_string(policy_name);
    vc::VoteFile file = vc::load_records(votes_path);

    json certs = json::array();
    for (const auto& record : file.records) {
        vc::VoteTable table = vc::tally(record);
        vc::Certificate stab = vc::dpa_radius(table, policy);
        stab.sample_id = record.sample_id;
        stab.position = record.position;
        certs.push_back(vc::certificate_to_json(stab));

        std::optional<vc::TokenId> t = target ? target : record.target;
        if (t) {
            vc::Certificate valid = vc::tpa_radius_fast(table, *t, policy);
            vc::Certificate greedy = vc::tpa_radius_greedy(table, *t, policy);
            if (valid.radius != greedy.radius) {
                throw vc::invariant_error("fast/greedy radius mismatch on sample " +
                                          record.sample_id);
            }
            valid.sample_id = record.sample_id;
            valid.position = record.position;
            certs.push_back(vc::certificate_to_json(valid));
        } else if (target.has_value()) {
            throw vc::input_error("--target given but records carry no target");
        }

        if (verify_oracle && table.total() <= oracle_bound) {
            auto any = vc::oracle::exhaustive_min_flips(
                table, vc::oracle::FlipGoal::any_change(), policy, oracle_bound);
            if (!any.min_flips || *any.min_flips - 1 != stab.radius) {
                throw vc::invariant_error("dpa radius disagrees with the oracle");
            }
            if (t) {
                auto forced = vc::oracle::exhaustive_min_flips(
                    table, vc::oracle::FlipGoal::force_target(*t), policy,
                    oracle_bound);
                int expect = forced.min_flips ? *forced.min_flips - 1 : -1;
                if (std::max(expect, 0) !=
                    vc::tpa_radius_fast(table, *t, policy).radius) {
                    throw vc::invariant_error("tpa radius disagrees with the oracle");
                }
            }
        }
    }

    std::string blob = votes_path + "|" + policy_name + "|" +
                       (target ? std::to_string(*target) : "-");
    json report{{"meta", vc::report_meta(blob, policy)},
                {"certificates", std::move(certs)}};
    vc::write_file(out, report.dump(2) + "\n");
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_certify_sequence(const std::string& votes_path,
                         const std::string& validity_path, int horizon,
                         const std::string& k_list,
                         const std::string& policy_name, int phrase_m,
                         const std::string& generations_path,
                         const std::string& out_prefix) {
    const vc::TiePolicy policy = vc::tie_policy_from_string(policy_name);
    const std::vector<int> ks = parse_k_list(k_list);

    std::map<std::string, vc::SampleRadii> samples;

    if (phrase_m > 1) {
        if (generations_path.empty()) {
            throw vc::input_error("--phrase-m needs --generations");
        }
        json j = vc::parse_json_file(generations_path);
        for (const auto& entry : j.at("samples")) {
            const auto id = entry.at("sample_id").get<std::string>();
            auto gens =
                entry.at("generations").get<std::vector<std::vector<vc::TokenId>>>();
            const int length = gens.empty() ? 0 : static_cast<int>(gens[0].size());
            vc::SampleRadii& s = samples[id];
            s.sample_id = id;
            for (int j0 = 0; j0 + phrase_m <= length; j0 += phrase_m) {
                std::vector<std::vector<vc::TokenId>> window;
                for (const auto& g : gens) {
                    window.emplace_back(g.begin() + j0, g.begin() + j0 + phrase_m);
                }
                vc::PhraseLexicon lex(phrase_m);
                vc::VoteTable table =
                    vc::phrase_votes(window, vc::PhraseConfig{phrase_m}, lex);
                s.stability_radii.push_back(vc::dpa_radius(table, policy).radius);
            }
        }
    } else if (!votes_path.empty()) {
        vc::VoteFile file = vc::load_records(votes_path);
        for (auto& [id, records] : group_by_sample(file)) {
            vc::SampleRadii& s = samples[id];
            s.sample_id = id;
            for (const auto& r : records) {
                s.stability_radii.push_back(
                    vc::dpa_radius(vc::tally(r), policy).radius);
            }
            if (horizon > 0 &&
                static_cast<int>(s.stability_radii.size()) < horizon) {
                throw vc::horizon_exceeds_trace("sample " + id +
                                                " shorter than requested horizon");
            }
            if (horizon > 0) s.stability_radii.resize(horizon);
        }
    }

    if (!validity_path.empty()) {
        vc::VoteFile file = vc::load_records(validity_path);
        for (auto& [id, records] : group_by_sample(file)) {
            vc::SampleRadii& s = samples[id];
            s.sample_id = id;
            for (const auto& r : records) {
                if (!r.target) {
                    throw vc::missing_target("validity record without target");
                }
                s.validity_radii.push_back(
                    vc::tpa_radius_fast(vc::tally(r), *r.target, policy).radius);
            }
        }
    }

    std::vector<vc::SampleRadii> rows;
    rows.reserve(samples.size());
    for (auto& [id, s] : samples) rows.push_back(std::move(s));
    vc::HorizonReport report = vc::metrics(rows, ks);

    std::string blob = votes_path + "|" + validity_path + "|" + k_list + "|" +
                       policy_name + "|" + std::to_string(phrase_m);
    json out{{"meta", vc::report_meta(blob, policy)},
             {"report", vc::horizon_report_to_json(report)}};
    vc::write_file(out_prefix + ".json", out.dump(2) + "\n");
    vc::write_file(out_prefix + ".csv", vc::horizon_report_csv(report));
    vc::write_file(out_prefix + "_samples.csv", vc::per_sample_radii_csv(report));
    std::cout << "wrote " << out_prefix << ".{json,csv}\n";
    return 0;
}

int cmd_certify_collective(const std::string& votes_path,
                           const std::string& instance_path, int k,
                           const std::string& kind_name,
                           const std::string& mode_name,
                           const std::string& policy_name, long exact_limit,
                           bool require_exact, const std::string& emit_instance,
                           const std::string& out) {
    const vc::TiePolicy policy = vc::tie_policy_from_string(policy_name);

    vc::collective::CollectiveInstance inst;
    std::vector<vc::Certificate> pointwise;
    if (!instance_path.empty()) {
        inst = vc::instance_from_json(vc::parse_json_file(instance_path));
    } else {
        vc::VoteFile file = vc::load_records(votes_path);
        std::vector<vc::ShardVoteRecord> records;
        for (auto& [id, recs] : group_by_sample(file)) {
            records.push_back(recs.front());  // one position per sample
        }
        if (kind_name == "dpa") {
            auto mode = mode_name == "paper" ? vc::collective::DpaMode::Paper
                                             : vc::collective::DpaMode::AnyTarget;
            inst = vc::collective::build_dpa_instance(records, policy, mode);
            for (const auto& r : records) {
                auto cert = vc::dpa_radius(vc::tally(r), policy);
                cert.sample_id = r.sample_id;
                pointwise.push_back(std::move(cert));
            }
        } else if (kind_name == "tpa") {
            inst = vc::collective::build_tpa_instance(records, policy);
            for (const auto& r : records) {
                auto cert = vc::tpa_radius_fast(vc::tally(r), *r.target, policy);
                cert.sample_id = r.sample_id;
                pointwise.push_back(std::move(cert));
            }
        } else {
            throw vc::input_error("--kind must be dpa or tpa");
        }
    }
    if (!emit_instance.empty()) {
        vc::write_file(emit_instance, vc::instance_to_json(inst, k).dump(2) + "\n");
    }

    vc::collective::CollectiveSolution sol;
    bool exact_ran = false;
    if (static_cast<long>(inst.n_samples) * inst.n_shards <= exact_limit) {
        sol = vc::collective::solve_exact(inst, k, exact_limit);
        exact_ran = true;
    } else {
        if (require_exact) {
            std::cerr << "instance exceeds --exact-limit; only the upper bound "
                         "is available\n";
            return kExitInexact;
        }
        sol = vc::collective::solve_upper_bound(inst, k);
    }

    std::string blob = votes_path + instance_path + "|" + std::to_string(k) +
                       "|" + kind_name + "|" + mode_name + "|" + policy_name;
    json report{{"meta", vc::report_meta(blob, policy)},
                {"K", k},
                {"kind", vc::collective::to_string(inst.kind)},
                {"solution", vc::solution_to_json(sol)}};
    if (!pointwise.empty() && exact_ran) {
        auto dom = vc::collective::collective_vs_pointwise(inst, k, pointwise, sol);
        report["dominance"] = json{{"collective_safe", dom.collective_safe},
                                   {"pointwise_safe", dom.pointwise_safe},
                                   {"gap", dom.gap},
                                   {"holds", dom.holds}};
        if (!dom.holds) {
            vc::write_file(out, report.dump(2) + "\n");
            throw vc::invariant_error(
                "collective certificate weaker than pointwise certificates");
        }
    }
    vc::write_file(out, report.dump(2) + "\n");
    std::cout << "attacked_max " << sol.attacked_max << ", safe fraction "
              << vc::rational_decimal(sol.safe_fraction) << "\n";
    return 0;
}

int cmd_attack(const std::string& config_path, int seeds,
               const std::string& out) {
    const std::string blob = vc::read_file(config_path) + "|" +
                             std::to_string(seeds);
    vc::ensim::SimConfig cfg =
        vc::sim_config_from_json(vc::parse_json_file(config_path));
    if (!cfg.attack) throw vc::input_error("config has no attack section");
    auto tset = template_set_for(cfg);
    auto prompts = vc::ensim::eval_prompts(cfg, tset);

    json runs = json::array();
    vc::Rational as_single{0}, as_ensemble{0}, ss_single{0}, ss_ensemble{0};
    for (int s = 0; s < seeds; ++s) {
        auto corpus =
            vc::ensim::gen_corpus(cfg.seed + static_cast<std::uint64_t>(s),
                                  cfg.corpus_size, tset);
        auto outcome = vc::ensim::run_attack(corpus, *cfg.attack,
                                             cfg.ensemble_params(), prompts,
                                             cfg.decode_len);
        as_single += outcome.single.as_score;
        as_ensemble += outcome.ensemble.as_score;
        ss_single += outcome.single.ss_score;
        ss_ensemble += outcome.ensemble.ss_score;
        runs.push_back(json{{"seed", cfg.seed + static_cast<std::uint64_t>(s)},
                            {"outcome", vc::attack_outcome_to_json(outcome)}});
    }
    json report{
        {"meta", vc::report_meta(blob, vc::TiePolicy::AdversaryWins)},
        {"seeds", seeds},
        {"runs", std::move(runs)},
        {"mean",
         json{{"as_single", vc::rational_to_json(as_single / seeds)},
              {"as_ensemble", vc::rational_to_json(as_ensemble / seeds)},
              {"ss_single", vc::rational_to_json(ss_single / seeds)},
              {"ss_ensemble", vc::rational_to_json(ss_ensemble / seeds)}}}};
    vc::write_file(out, report.dump(2) + "\n");
    std::cout << "mean AS single " << vc::rational_decimal(as_single / seeds)
              << " vs ensemble " << vc::rational_decimal(as_ensemble / seeds)
              << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path, int trials, int seeds,
                 int max_budget, const std::string& out) {
    const std::string blob = vc::read_file(config_path) + "|" +
                             std::to_string(trials) + "|" +
                             std::to_string(seeds) + "|" +
                             std::to_string(max_budget);
    vc::ensim::SimConfig cfg =
        vc::sim_config_from_json(vc::parse_json_file(config_path));
    auto tset = template_set_for(cfg);
    auto targets = harmful_targets_for(cfg);

    std::vector<vc::oracle::Violation> violations;
    for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
        auto corpus = vc::ensim::gen_corpus(seed, cfg.corpus_size, tset);
        auto ensemble = vc::ensim::Ensemble::train(corpus, cfg.ensemble_params());
        auto prompts = vc::ensim::eval_prompts(cfg, tset);
        auto run = vc::oracle::certify_run(ensemble, prompts, targets,
                                           cfg.decode_len,
                                           vc::TiePolicy::AdversaryWins);
        auto pool = vc::oracle::MutationPool::build(
            corpus, tset, prompts, targets, ensemble.assignment(), seed ^ 0x9e3779b9ULL,
            256);
        auto found = vc::oracle::poison_and_retrain(
            corpus, cfg.ensemble_params(), run, pool, trials, max_budget,
            seed ^ 0x61c88647ULL);
        violations.insert(violations.end(), found.begin(), found.end());
    }

    json report{{"meta", vc::report_meta(blob, vc::TiePolicy::AdversaryWins)},
                {"trials_per_seed", trials},
                {"seeds", seeds},
                {"violations", vc::violations_to_json(violations)}};
    vc::write_file(out, report.dump(2) + "\n");
    if (!violations.empty()) {
        std::cerr << violations.size() << " certificate violations found\n";
        return kExitViolation;
    }
    std::cout << "no violations across " << seeds << " seeds x " << trials
              << " trials\n";
    return 0;
}

int cmd_tally(const std::string& votes_path, const std::string& sample,
              int position, const std::string& out) {
    vc::VoteFile file = vc::load_records(votes_path);
    for (const auto& r : file.records) {
        if (r.sample_id == sample && r.position == position) {
            std::string csv = vc::vote_table_csv(vc::tally(r));
            if (out.empty()) {
                std::cout << csv;
            } else {
                vc::write_file(out, csv);
            }
            return 0;
        }
    }
    throw vc::input_error("no record for sample " + sample + " position " +
                          std::to_string(position));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"poisoning-robustness certification for vote-aggregated "
                 "generation ensembles"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", out = "report.json";
    std::string votes_path, validity_path, instance_path, generations_path;
    std::string policy = "adversary-wins", kind = "dpa", mode = "any-target";
    std::string k_list = "1,3,5,7,9", sample_id, emit_instance, out_prefix = "report";
    int horizon = 0, phrase_m = 1, budget = 0, seeds = 5, trials = 1000;
    int max_budget = 9, position = 0, oracle_bound = 12;
    long exact_limit = 4096;
    bool verify_oracle = false, require_exact = false;
    std::optional<vc::TokenId> target;
    vc::TokenId target_value = -1;

    auto* sim = app.add_subcommand("simulate", "generate a toy ensemble run");
    sim->add_option("--config", config_path)->required();
    sim->add_option("--out-dir", out_dir);

    auto* point = app.add_subcommand("certify-point", "per-position certificates");
    point->add_option("--votes", votes_path)->required();
    point->add_option("--target", target_value);
    point->add_option("--policy", policy);
    point->add_option("--out", out);
    point->add_flag("--verify-oracle", verify_oracle);
    point->add_option("--oracle-bound", oracle_bound);

    auto* seq = app.add_subcommand("certify-sequence", "horizon metrics");
    seq->add_option("--votes", votes_path);
    seq->add_option("--validity-votes", validity_path);
    seq->add_option("--L", horizon);
    seq->add_option("--k", k_list);
    seq->add_option("--policy", policy);
    seq->add_option("--phrase-m", phrase_m);
    seq->add_option("--generations", generations_path);
    seq->add_option("--out-prefix", out_prefix);

    auto* coll = app.add_subcommand("certify-collective", "shared-budget bound");
    coll->add_option("--votes", votes_path);
    coll->add_option("--instance", instance_path);
    coll->add_option("--K", budget)->required();
    coll->add_option("--kind", kind);
    coll->add_option("--mode", mode);
    coll->add_option("--policy", policy);
    coll->add_option("--exact-limit", exact_limit);
    coll->add_flag("--require-exact", require_exact);
    coll->add_option("--emit-instance", emit_instance);
    coll->add_option("--out", out);

    auto* atk = app.add_subcommand("attack", "content-injection experiment");
    atk->add_option("--config", config_path)->required();
    atk->add_option("--seeds", seeds);
    atk->add_option("--out", out);

    auto* val = app.add_subcommand("validate", "poison-and-retrain soundness");
    val->add_option("--config", config_path)->required();
    val->add_option("--trials", trials);
    val->add_option("--seeds", seeds);
    val->add_option("--max-budget", max_budget);
    val->add_option("--out", out);

    auto* tal = app.add_subcommand("tally", "export one vote table as CSV");
    tal->add_option("--votes", votes_path)->required();
    tal->add_option("--sample", sample_id)->required();
    tal->add_option("--position", position);
    tal->add_option("--out", out)->default_val("");

    CLI11_PARSE(app, argc, argv);
    if (point->count("--target")) target = target_value;

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_dir);
        if (point->parsed()) {
            return cmd_certify_point(votes_path, target, policy, out,
                                     verify_oracle, oracle_bound);
        }
        if (seq->parsed()) {
            return cmd_certify_sequence(votes_path, validity_path, horizon,
                                        k_list, policy, phrase_m,
                                        generations_path, out_prefix);
        }
        if (coll->parsed()) {
            return cmd_certify_collective(votes_path, instance_path, budget, kind,
                                          mode, policy, exact_limit, require_exact,
                                          emit_instance, out);
        }
        if (atk->parsed()) return cmd_attack(config_path, seeds, out);
        if (val->parsed()) {
            return cmd_validate(config_path, trials, seeds, max_budget, out);
        }
        if (tal->parsed()) return cmd_tally(votes_path, sample_id, position, out);
    } catch (const vc::invariant_error& e) {
        std::cerr << "invariant breach: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const vc::infeasible_size& e) {
        std::cerr << e.what() << "\n";
        return kExitInexact;
    } catch (const vc::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return 0;
}
