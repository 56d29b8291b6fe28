// config_io.hpp: JSON ingestion and serialization of configs and candidates
#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "tfperf/archsearch.hpp"
#include "tfperf/hwmodel.hpp"
#include "tfperf/workload.hpp"

namespace tfperf {

using Json = nlohmann::ordered_json;

/// Keys: name, layers, d, heads, d_ffn, mode, act_bytes, weight_bytes,
/// accum_bytes, seq_len. Missing keys keep their defaults; unknown keys and
/// wrong types throw ConfigError.
ModelConfig model_from_json(const Json& j);
Json to_json(const ModelConfig& c);

/// Keys: name, pe_width, scratchpad_kb, accumulator_kb, dram_bytes_per_cycle,
/// sfu_cycles_per_vector, matvec ("one-column" | "idealized"),
/// energy {mac, spad, acc, dram}.
AcceleratorConfig accel_from_json(const Json& j);
Json to_json(const AcceleratorConfig& a);

/// Keys: layer_counts, heads, model_dims, ffn_dims (integer arrays).
SearchSpace space_from_json(const Json& j);
Json to_json(const SearchSpace& s);

/// Keys: layers, d, heads (per layer), d_ffn (per layer); optional scores.
Candidate candidate_from_json(const Json& j);
Json to_json(const Candidate& c);

/// Throws IoError if the file cannot be read, ConfigError if it is not JSON.
Json read_json_file(const std::string& path);
/// Throws IoError on failure.
void write_json_file(const std::string& path, const Json& j);

/// A preset name, or a path to a JSON file.
ModelConfig resolve_model(const std::string& spec);
AcceleratorConfig resolve_accel(const std::string& spec);

}  // namespace tfperf
