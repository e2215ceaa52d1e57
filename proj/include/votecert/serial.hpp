#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "votecert/collective.hpp"
#include "votecert/ensim.hpp"
#include "votecert/pointcert.hpp"
#include "votecert/seqcert.hpp"
#include "votecert/validate.hpp"
#include "votecert/votetab.hpp"

namespace votecert {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Exact rationals serialize as {"num":..,"den":..} plus a convenience
/// decimal string with six places computed by integer long division, so
/// reports stay byte-reproducible.
nlohmann::json rational_to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j);
std::string rational_decimal(const Rational& r, int places = 6);

/// {"version":..,"config_hash":..,"policy":..} embedded in every report.
nlohmann::json report_meta(const std::string& config_blob, TiePolicy policy);

nlohmann::json certificate_to_json(const Certificate& cert);

nlohmann::json horizon_report_to_json(const HorizonReport& report);
std::string horizon_report_csv(const HorizonReport& report);      // row per k
std::string per_sample_radii_csv(const HorizonReport& report);    // sample_id,position,kind,radius

nlohmann::json instance_to_json(const collective::CollectiveInstance& inst,
                                std::optional<PoisonBudget> k = std::nullopt);
collective::CollectiveInstance instance_from_json(const nlohmann::json& j);

nlohmann::json solution_to_json(const collective::CollectiveSolution& sol);

nlohmann::json violations_to_json(const std::vector<oracle::Violation>& violations);

nlohmann::json attack_outcome_to_json(const ensim::AttackOutcome& outcome);

ensim::SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const ensim::SimConfig& cfg);

/// Reads a whole file; throws input_error if unreadable.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);
nlohmann::json parse_json_file(const std::string& path);

}  // namespace votecert
