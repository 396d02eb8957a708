#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairsin/metrics.hpp"

namespace fairsin {

// report.json: {config_hash, variant, encoder, units, seeds, per_seed, mean, std, wall_seconds}.
// Metric values are percentages.
nlohmann::json make_report(const std::string& config_hash, const std::string& variant,
                           const std::string& encoder, const MetricsReport& metrics,
                           double wall_seconds);
// Throws ValidationError naming the first violated rule.
void validate_report(const nlohmann::json& report);

}  // namespace fairsin
