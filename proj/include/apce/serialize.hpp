#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "apce/gibbs.hpp"
#include "apce/outcome_models.hpp"
#include "apce/strata.hpp"

#define APCE_VERSION "0.1.0"

namespace apce {

nlohmann::json probit_fit_to_json(const ProbitFit& fit, const std::vector<std::string>& names);
ProbitFit probit_fit_from_json(const nlohmann::json& j);

nlohmann::json ordinal_fit_to_json(const OrdinalFit& fit, const std::vector<std::string>& names);
OrdinalFit ordinal_fit_from_json(const nlohmann::json& j);

nlohmann::json draws_to_json(const PosteriorDraws& draws);
PosteriorDraws draws_from_json(const nlohmann::json& j);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

void write_apce_csv(const std::string& path, const std::vector<ApceEstimate>& rows);

// FNV-1a over the canonical (sorted-key) dump
std::string config_hash(const nlohmann::json& config);

void write_manifest(const std::string& path, const std::string& command,
                    const nlohmann::json& config, std::uint64_t seed);

}  // namespace apce
