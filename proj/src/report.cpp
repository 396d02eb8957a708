#include "fairsin/report.hpp"

#include <algorithm>
#include <cmath>

#include "fairsin/error.hpp"

namespace fairsin {

namespace {

constexpr const char* kMetrics[] = {"acc", "f1", "dp", "eo"};

nlohmann::json summary_json(const MetricSummary& s) {
  return {{"acc", 100.0 * s.acc}, {"f1", 100.0 * s.f1}, {"dp", 100.0 * s.dp}, {"eo", 100.0 * s.eo}};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("report.json: " + what);
}

double percent_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  require(obj.contains(key) && obj[key].is_number(), where + "." + key + " must be a number");
  const double v = obj[key].get<double>();
  require(v >= 0.0 && v <= 100.0, where + "." + key + " must lie in [0, 100]");
  return v;
}

}  // namespace

nlohmann::json make_report(const std::string& config_hash, const std::string& variant,
                           const std::string& encoder, const MetricsReport& m, double wall_seconds) {
  nlohmann::json per_seed = nlohmann::json::array();
  nlohmann::json seeds = nlohmann::json::array();
  for (const RunMetrics& r : m.per_seed) {
    seeds.push_back(r.seed);
    per_seed.push_back({{"seed", r.seed},
                        {"acc", 100.0 * r.acc},
                        {"f1", 100.0 * r.f1},
                        {"dp", 100.0 * r.dp},
                        {"eo", 100.0 * r.eo}});
  }
  return {{"config_hash", config_hash},
          {"variant", variant},
          {"encoder", encoder},
          {"units", "percent"},
          {"seeds", seeds},
          {"per_seed", per_seed},
          {"mean", summary_json(m.mean)},
          {"std", summary_json(m.std)},
          {"wall_seconds", wall_seconds}};
}

void validate_report(const nlohmann::json& r) {
  require(r.is_object(), "top level must be an object");
  for (const char* key : {"config_hash", "variant", "encoder"})
    require(r.contains(key) && r[key].is_string() && !r[key].get<std::string>().empty(),
            std::string(key) + " must be a non-empty string");
  require(r.contains("seeds") && r["seeds"].is_array() && !r["seeds"].empty(), "seeds must be a non-empty array");
  require(r.contains("per_seed") && r["per_seed"].is_array(), "per_seed must be an array");
  require(r["per_seed"].size() == r["seeds"].size(), "per_seed and seeds differ in length");
  for (std::size_t i = 0; i < r["per_seed"].size(); ++i) {
    const auto& row = r["per_seed"][i];
    const std::string where = "per_seed[" + std::to_string(i) + "]";
    require(row.is_object(), where + " must be an object");
    require(row.contains("seed") && row["seed"].is_number_unsigned(), where + ".seed must be an unsigned integer");
    require(row["seed"] == r["seeds"][i], where + ".seed differs from seeds[" + std::to_string(i) + "]");
    for (const char* k : kMetrics) percent_field(row, k, where);
  }
  for (const char* block : {"mean", "std"}) {
    require(r.contains(block) && r[block].is_object(), std::string(block) + " must be an object");
    for (const char* k : kMetrics) percent_field(r[block], k, block);
  }
  for (const char* k : kMetrics) {
    double lo = 100.0, hi = 0.0;
    for (const auto& row : r["per_seed"]) {
      lo = std::min(lo, row[k].get<double>());
      hi = std::max(hi, row[k].get<double>());
    }
    const double mean = r["mean"][k].get<double>();
    require(mean >= lo - 1e-9 && mean <= hi + 1e-9, std::string("mean.") + k + " lies outside the per-seed range");
  }
  require(r.contains("wall_seconds") && r["wall_seconds"].is_number() && r["wall_seconds"].get<double>() >= 0.0,
          "wall_seconds must be a non-negative number");
}

}  // namespace fairsin
