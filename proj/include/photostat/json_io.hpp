#pragma once

// JSON schemas for every type that crosses the CLI boundary. Field names
// are fixed: {"truncation","probs"} for distributions, {"counts"} for
// histograms, {"efficiency","dark_mean"} for detectors, and
// {"role","truncation","efficiency","dark_mean","entries"} for matrices.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "photostat/distribution.hpp"
#include "photostat/forward.hpp"
#include "photostat/inversion.hpp"
#include "photostat/maxent.hpp"

namespace photostat {

struct schema_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  return nlohmann::json::parse(in);  // parse_error propagates
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw io_error("failed writing '" + path + "'");
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const char* context) {
  if (!j.is_object())
    throw schema_error(std::string(context) + ": expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end())
    throw schema_error(std::string(context) + ": missing field '" + key + "'");
  return *it;
}

inline double number_field(const nlohmann::json& j, const char* key, const char* context) {
  const auto& v = require_field(j, key, context);
  if (!v.is_number())
    throw schema_error(std::string(context) + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline std::int64_t integer_field(const nlohmann::json& j, const char* key,
                                  const char* context) {
  const auto& v = require_field(j, key, context);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw schema_error(std::string(context) + ": field '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

}  // namespace detail

inline nlohmann::json to_json(const PhotonNumberDistribution& dist) {
  return nlohmann::json{{"truncation", dist.truncation()}, {"probs", dist.probs}};
}

inline PhotonNumberDistribution distribution_from_json(const nlohmann::json& j) {
  const auto truncation = detail::integer_field(j, "truncation", "distribution");
  const auto& probs = detail::require_field(j, "probs", "distribution");
  if (!probs.is_array())
    throw schema_error("distribution: field 'probs' must be an array");
  if (truncation < 0)
    throw schema_error("distribution: truncation must be >= 0");
  if (probs.size() != static_cast<std::size_t>(truncation) + 1)
    throw schema_error("distribution: probs length must equal truncation + 1");
  PhotonNumberDistribution dist;
  dist.probs.reserve(probs.size());
  for (const auto& p : probs) {
    if (!p.is_number())
      throw schema_error("distribution: probs entries must be numbers");
    dist.probs.push_back(p.get<double>());
  }
  return dist;
}

inline nlohmann::json to_json(const CountHistogram& hist) {
  return nlohmann::json{{"counts", hist.counts}};
}

inline CountHistogram histogram_from_json(const nlohmann::json& j) {
  const auto& counts = detail::require_field(j, "counts", "histogram");
  if (!counts.is_array())
    throw schema_error("histogram: field 'counts' must be an array");
  CountHistogram hist;
  hist.counts.reserve(counts.size());
  for (const auto& c : counts) {
    if (!c.is_number_integer() && !c.is_number_unsigned())
      throw schema_error("histogram: counts entries must be integers");
    if (c.is_number_integer() && c.get<std::int64_t>() < 0)
      throw schema_error("histogram: counts entries must be >= 0");
    hist.counts.push_back(c.get<std::uint64_t>());
  }
  if (hist.total() < 1)
    throw std::invalid_argument("histogram total must be >= 1");
  return hist;
}

inline nlohmann::json to_json(const DetectorModel& det) {
  return nlohmann::json{{"efficiency", det.efficiency}, {"dark_mean", det.dark_mean}};
}

inline DetectorModel detector_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw schema_error("detector: expected a JSON object");
  DetectorModel det;
  det.efficiency = detail::number_field(j, "efficiency", "detector");
  det.dark_mean = 0.0;
  if (j.contains("dark_mean")) det.dark_mean = detail::number_field(j, "dark_mean", "detector");
  for (const auto& item : j.items())
    if (item.key() != "efficiency" && item.key() != "dark_mean")
      throw schema_error("detector: unknown field '" + item.key() + "'");
  validate(det);  // range violations raise std::invalid_argument
  return det;
}

inline nlohmann::json to_json(const TransferMatrix& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.size()));
  for (int r = 0; r < m.size(); ++r) {
    auto& row = rows[static_cast<std::size_t>(r)];
    row.resize(static_cast<std::size_t>(m.size()));
    for (int c = 0; c < m.size(); ++c)
      row[static_cast<std::size_t>(c)] = static_cast<double>(m(r, c));
  }
  return nlohmann::json{{"role", to_string(m.role)},
                        {"truncation", m.truncation},
                        {"efficiency", m.detector.efficiency},
                        {"dark_mean", m.detector.dark_mean},
                        {"entries", rows}};
}

inline nlohmann::json to_json(const InversionDiagnostics& diag) {
  return nlohmann::json{{"min_entry", diag.min_entry},
                        {"condition_estimate", diag.condition_estimate},
                        {"physical", diag.physical},
                        {"tail_sensitivity", diag.tail_sensitivity}};
}

inline nlohmann::json to_json(const ReconstructionResult& result) {
  return nlohmann::json{{"distribution", to_json(result.distribution)},
                        {"chi2", result.chi2},
                        {"chi2_threshold", result.chi2_threshold},
                        {"entropy", result.entropy},
                        {"iterations", result.iterations},
                        {"converged", result.converged},
                        {"seed", result.seed}};
}

/// Config files mirror MaxEntConfig field names; every field is optional
/// and unknown fields are rejected.
inline MaxEntConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw schema_error("config: expected a JSON object");
  MaxEntConfig config;
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    if (key == "truncation")
      config.truncation = static_cast<int>(detail::integer_field(j, "truncation", "config"));
    else if (key == "population_size")
      config.population_size =
          static_cast<int>(detail::integer_field(j, "population_size", "config"));
    else if (key == "generations")
      config.generations = static_cast<int>(detail::integer_field(j, "generations", "config"));
    else if (key == "mutation_scale")
      config.mutation_scale = detail::number_field(j, "mutation_scale", "config");
    else if (key == "crossover_rate")
      config.crossover_rate = detail::number_field(j, "crossover_rate", "config");
    else if (key == "chi2_percentile")
      config.chi2_percentile = detail::number_field(j, "chi2_percentile", "config");
    else if (key == "seed")
      config.seed = static_cast<std::uint64_t>(detail::integer_field(j, "seed", "config"));
    else
      throw schema_error("config: unknown field '" + key + "'");
  }
  return config;
}

inline nlohmann::json to_json(const MaxEntConfig& config) {
  return nlohmann::json{{"truncation", config.truncation},
                        {"population_size", config.population_size},
                        {"generations", config.generations},
                        {"mutation_scale", config.mutation_scale},
                        {"crossover_rate", config.crossover_rate},
                        {"chi2_percentile", config.chi2_percentile},
                        {"seed", config.seed}};
}

/// Source specs accept either a plain distribution object or a generator:
/// {"type":"coherent","mean":..,"truncation":..}, {"type":"fock","m":..,
/// "truncation":..}, or {"type":"explicit","truncation":..,"probs":[..]}.
inline PhotonNumberDistribution source_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw schema_error("source: expected a JSON object");
  if (!j.contains("type")) {
    if (j.contains("probs")) return distribution_from_json(j);
    throw schema_error("source: need either a 'type' or a 'probs' field");
  }
  const auto& type = j.at("type");
  if (!type.is_string()) throw schema_error("source: field 'type' must be a string");
  const std::string name = type.get<std::string>();
  if (name == "coherent") {
    const double mean = detail::number_field(j, "mean", "coherent source");
    const auto truncation =
        static_cast<int>(detail::integer_field(j, "truncation", "coherent source"));
    return coherent_source(mean, truncation);
  }
  if (name == "fock") {
    const auto m = static_cast<int>(detail::integer_field(j, "m", "fock source"));
    const auto truncation =
        static_cast<int>(detail::integer_field(j, "truncation", "fock source"));
    return fock_source(m, truncation);
  }
  if (name == "explicit") return distribution_from_json(j);
  throw schema_error("source: unknown type '" + name + "'");
}

}  // namespace photostat
