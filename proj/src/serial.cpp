#include "votecert/serial.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace votecert {

namespace {

using nlohmann::json;

std::string fnv_hex(const std::string& blob) {
    std::uint64_t h = ensim::fnv1a64(blob);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

json rationals_to_json(const std::vector<Rational>& values) {
    json out = json::array();
    for (const auto& r : values) out.push_back(rational_to_json(r));
    return out;
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot write " + path);
    out << contents;
}

nlohmann::json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw schema_error(path + ": " + e.what());
    }
}

std::string rational_decimal(const Rational& r, int places) {
    std::int64_t num = r.numerator();
    std::int64_t den = r.denominator();
    const bool negative = num < 0;
    if (negative) num = -num;
    std::int64_t whole = num / den;
    std::int64_t rem = num % den;
    std::string out = (negative && (whole != 0 || rem != 0)) ? "-" : "";
    out += std::to_string(whole);
    if (places > 0) {
        out += '.';
        for (int i = 0; i < places; ++i) {
            rem *= 10;
            out += static_cast<char>('0' + rem / den);
            rem %= den;
        }
    }
    return out;
}

nlohmann::json rational_to_json(const Rational& r) {
    return json{{"num", r.numerator()},
                {"den", r.denominator()},
                {"value", rational_decimal(r)}};
}

Rational rational_from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_number_float()) {
        // exact up to 1e-6; config convenience only, certificates stay rational
        auto scaled = static_cast<std::int64_t>(llround(j.get<double>() * 1e6));
        return Rational(scaled, 1000000);
    }
    if (j.is_object() && j.contains("num") && j.contains("den")) {
        return Rational(j["num"].get<std::int64_t>(), j["den"].get<std::int64_t>());
    }
    throw schema_error("expected a number or {num, den} rational");
}

nlohmann::json report_meta(const std::string& config_blob, TiePolicy policy) {
    return json{{"version", kToolkitVersion},
                {"config_hash", fnv_hex(config_blob)},
                {"policy", to_string(policy)}};
}

VoteFile load_records(const std::string& path) {
    json j = parse_json_file(path);
    VoteFile file;
    try {
        if (!j.is_object() || !j.contains("num_shards") || !j.contains("records")) {
            throw schema_error(path + ": missing num_shards or records");
        }
        file.schema_version = j.value("schema_version", 1);
        file.num_shards = j["num_shards"].get<int>();
        if (file.num_shards < 1) throw schema_error("num_shards must be >= 1");
        if (j.contains("lexicon") && !j["lexicon"].is_null()) {
            file.lexicon = Lexicon(j["lexicon"].get<std::vector<std::string>>());
        }
        for (const auto& rec : j["records"]) {
            ShardVoteRecord record;
            record.sample_id = rec.at("sample_id").get<std::string>();
            record.position = rec.at("position").get<int>();
            record.shard_votes = rec.at("shard_votes").get<std::vector<TokenId>>();
            if (rec.contains("target") && !rec["target"].is_null()) {
                record.target = rec["target"].get<TokenId>();
            }
            if (record.position < 0) throw schema_error("negative position");
            if (static_cast<int>(record.shard_votes.size()) != file.num_shards) {
                throw inconsistent_shard_count(
                    "record " + record.sample_id + " has " +
                    std::to_string(record.shard_votes.size()) + " votes, expected " +
                    std::to_string(file.num_shards));
            }
            auto check_token = [&](TokenId t) {
                if (t < 0 || (file.lexicon &&
                              static_cast<std::size_t>(t) >= file.lexicon->size())) {
                    throw unknown_token("token id " + std::to_string(t) +
                                        " outside the lexicon");
                }
            };
            for (TokenId t : record.shard_votes) check_token(t);
            if (record.target) check_token(*record.target);
            file.records.push_back(std::move(record));
        }
    } catch (const json::exception& e) {
        throw schema_error(path + ": " + e.what());
    }
    return file;
}

void save_records(const std::string& path, const VoteFile& file) {
    json records = json::array();
    for (const auto& r : file.records) {
        json rec{{"sample_id", r.sample_id},
                 {"position", r.position},
                 {"shard_votes", r.shard_votes}};
        if (r.target) rec["target"] = *r.target;
        records.push_back(std::move(rec));
    }
    json j{{"schema_version", file.schema_version},
           {"num_shards", file.num_shards},
           {"records", std::move(records)}};
    if (file.lexicon) j["lexicon"] = file.lexicon->tokens();
    write_file(path, j.dump(2) + "\n");
}

nlohmann::json certificate_to_json(const Certificate& cert) {
    json j{{"sample_id", cert.sample_id},
           {"position", cert.position},
           {"kind", to_string(cert.kind)},
           {"radius", cert.radius},
           {"policy", to_string(cert.policy)}};
    if (cert.target) j["target"] = *cert.target;
    json flags = json::array();
    if (cert.already_target) flags.push_back("already_target");
    j["flags"] = std::move(flags);
    return j;
}

nlohmann::json horizon_report_to_json(const HorizonReport& report) {
    json j{{"ks", report.ks}};
    if (!report.fts.empty()) {
        j["fts"] = rationals_to_json(report.fts);
        j["sh"] = rationals_to_json(report.sh);
    }
    if (!report.ftv.empty()) {
        j["ftv"] = rationals_to_json(report.ftv);
        j["vh"] = rationals_to_json(report.vh);
    }
    json samples = json::array();
    for (const auto& s : report.samples) {
        json row{{"sample_id", s.sample_id}};
        if (!s.stability_radii.empty()) row["stability_radii"] = s.stability_radii;
        if (!s.validity_radii.empty()) row["validity_radii"] = s.validity_radii;
        if (s.response_radius) row["response_radius"] = *s.response_radius;
        if (s.validity_response_radius) {
            row["validity_response_radius"] = *s.validity_response_radius;
        }
        samples.push_back(std::move(row));
    }
    j["samples"] = std::move(samples);
    return j;
}

std::string horizon_report_csv(const HorizonReport& report) {
    std::ostringstream out;
    out << "k,fts,ftv,sh,vh\n";
    for (std::size_t i = 0; i < report.ks.size(); ++i) {
        out << report.ks[i] << ",";
        out << (i < report.fts.size() ? rational_decimal(report.fts[i]) : "") << ",";
        out << (i < report.ftv.size() ? rational_decimal(report.ftv[i]) : "") << ",";
        out << (i < report.sh.size() ? rational_decimal(report.sh[i]) : "") << ",";
        out << (i < report.vh.size() ? rational_decimal(report.vh[i]) : "") << "\n";
    }
    return out.str();
}

std::string per_sample_radii_csv(const HorizonReport& report) {
    std::ostringstream out;
    out << "sample_id,position,kind,radius\n";
    for (const auto& s : report.samples) {
        for (std::size_t i = 0; i < s.stability_radii.size(); ++i) {
            out << s.sample_id << "," << i << ",stability," << s.stability_radii[i]
                << "\n";
        }
        for (std::size_t i = 0; i < s.validity_radii.size(); ++i) {
            out << s.sample_id << "," << i << ",validity," << s.validity_radii[i]
                << "\n";
        }
    }
    return out.str();
}

nlohmann::json instance_to_json(const collective::CollectiveInstance& inst,
                                std::optional<PoisonBudget> k) {
    json thresholds = json::array();
    for (const auto& t : inst.thresholds) {
        if (t.denominator() == 1) {
            thresholds.push_back(t.numerator());
        } else {
            thresholds.push_back(json{{"num", t.numerator()},
                                      {"den", t.denominator()}});
        }
    }
    json j{{"kind", collective::to_string(inst.kind)},
           {"policy", to_string(inst.policy)},
           {"thresholds", std::move(thresholds)},
           {"weights", inst.weights}};
    if (!inst.sample_ids.empty()) j["sample_ids"] = inst.sample_ids;
    if (k) j["K"] = *k;
    return j;
}

collective::CollectiveInstance instance_from_json(const nlohmann::json& j) {
    collective::CollectiveInstance inst;
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "dpa") {
            inst.kind = collective::InstanceKind::DPA;
        } else if (kind == "tpa") {
            inst.kind = collective::InstanceKind::TPA;
        } else {
            throw schema_error("instance kind must be dpa or tpa");
        }
        inst.policy = tie_policy_from_string(j.value("policy", "adversary-wins"));
        for (const auto& t : j.at("thresholds")) {
            inst.thresholds.push_back(rational_from_json(t));
        }
        inst.weights =
            j.at("weights").get<std::vector<std::vector<std::uint8_t>>>();
        if (j.contains("sample_ids")) {
            inst.sample_ids = j["sample_ids"].get<std::vector<std::string>>();
        }
        inst.n_samples = static_cast<int>(inst.weights.size());
        inst.n_shards =
            inst.weights.empty() ? 0 : static_cast<int>(inst.weights[0].size());
    } catch (const json::exception& e) {
        throw schema_error(std::string("instance: ") + e.what());
    }
    inst.validate();
    return inst;
}

nlohmann::json solution_to_json(const collective::CollectiveSolution& sol) {
    return json{{"attacked_max", sol.attacked_max},
                {"safe_fraction", rational_to_json(sol.safe_fraction)},
                {"witness", sol.witness},
                {"exact", sol.exact}};
}

nlohmann::json violations_to_json(const std::vector<oracle::Violation>& violations) {
    json out = json::array();
    for (const auto& v : violations) {
        json mutations = json::array();
        for (const auto& m : v.mutations) {
            json mj{{"op", oracle::to_string(m.op)}, {"key", m.key}};
            if (m.sample) {
                mj["prompt"] = m.sample->prompt;
                mj["response"] = m.sample->response;
            }
            mutations.push_back(std::move(mj));
        }
        out.push_back(json{{"mutations", std::move(mutations)},
                           {"retrained_shards", v.retrained_shards},
                           {"prompt_index", v.prompt_index},
                           {"position", v.position},
                           {"kind", to_string(v.kind)},
                           {"budget", v.budget},
                           {"radius", v.radius},
                           {"before", v.before},
                           {"after", v.after}});
    }
    return out;
}

nlohmann::json attack_outcome_to_json(const ensim::AttackOutcome& outcome) {
    auto metrics = [](const ensim::AttackMetrics& m) {
        return json{{"as", rational_to_json(m.as_score)},
                    {"ss", rational_to_json(m.ss_score)},
                    {"f_trig", rational_to_json(m.f_trig)},
                    {"f_notrig", rational_to_json(m.f_notrig)},
                    {"f_clean", rational_to_json(m.f_clean)}};
    };
    return json{{"poisoned_samples", outcome.poisoned_samples},
                {"single", metrics(outcome.single)},
                {"ensemble", metrics(outcome.ensemble)}};
}

ensim::SimConfig sim_config_from_json(const nlohmann::json& j) {
    ensim::SimConfig cfg;
    try {
        const std::set<std::string> known{
            "seed",       "shards",       "vocab_size", "ngram_order",
            "alpha",      "corpus_size",  "templates",  "intros",
            "response_len", "prompts",    "decode_len", "attack",
            "harmful_targets"};
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (!known.count(key)) {
                throw schema_error("unknown config field: " + key);
            }
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.shards = j.value("shards", cfg.shards);
        cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
        cfg.ngram_order = j.value("ngram_order", cfg.ngram_order);
        if (j.contains("alpha")) {
            Rational a = rational_from_json(j["alpha"]);
            cfg.alpha_num = a.numerator();
            cfg.alpha_den = a.denominator();
        }
        cfg.corpus_size = j.value("corpus_size", cfg.corpus_size);
        cfg.templates = j.value("templates", cfg.templates);
        cfg.intros = j.value("intros", cfg.intros);
        cfg.response_len = j.value("response_len", cfg.response_len);
        cfg.prompts = j.value("prompts", cfg.prompts);
        cfg.decode_len = j.value("decode_len", cfg.decode_len);
        if (j.contains("attack") && !j["attack"].is_null()) {
            ensim::AttackConfig attack;
            const auto& a = j["attack"];
            attack.trigger = a.at("trigger").get<std::vector<TokenId>>();
            attack.entity = a.at("entity").get<TokenId>();
            attack.poison_fraction = rational_from_json(a.at("poison_fraction"));
            cfg.attack = std::move(attack);
        }
        if (j.contains("harmful_targets")) {
            cfg.harmful_targets =
                j["harmful_targets"].get<std::vector<std::vector<TokenId>>>();
        }
    } catch (const json::exception& e) {
        throw schema_error(std::string("sim config: ") + e.what());
    }
    return cfg;
}

nlohmann::json sim_config_to_json(const ensim::SimConfig& cfg) {
    json j{{"seed", cfg.seed},           {"shards", cfg.shards},
           {"vocab_size", cfg.vocab_size}, {"ngram_order", cfg.ngram_order},
           {"alpha", json{{"num", cfg.alpha_num}, {"den", cfg.alpha_den}}},
           {"corpus_size", cfg.corpus_size}, {"templates", cfg.templates},
           {"intros", cfg.intros},        {"response_len", cfg.response_len},
           {"prompts", cfg.prompts},      {"decode_len", cfg.decode_len}};
    if (cfg.attack) {
        j["attack"] = json{
            {"trigger", cfg.attack->trigger},
            {"entity", cfg.attack->entity},
            {"poison_fraction",
             json{{"num", cfg.attack->poison_fraction.numerator()},
                  {"den", cfg.attack->poison_fraction.denominator()}}}};
    }
    if (!cfg.harmful_targets.empty()) j["harmful_targets"] = cfg.harmful_targets;
    return j;
}

}  // namespace votecert
