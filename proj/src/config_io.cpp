#include "tfperf/config_io.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "tfperf/error.hpp"

namespace tfperf {

namespace {

void reject_unknown(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
    const std::set<std::string_view> ok(allowed);
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + std::string(what));
}

template <class T>
void read(const Json& j, const char* key, T& out, std::string_view what) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + std::string(what));
    }
}

std::string_view matvec_name(MatvecMode m) { return m == MatvecMode::OneColumn ? "one-column" : "idealized"; }

}  // namespace

ModelConfig model_from_json(const Json& j) {
    constexpr std::string_view what = "model config";
    reject_unknown(j, {"name", "layers", "d", "heads", "d_ffn", "mode", "act_bytes", "weight_bytes", "accum_bytes",
                       "seq_len"},
                   what);
    ModelConfig c;
    read(j, "name", c.name, what);
    read(j, "layers", c.layers, what);
    read(j, "d", c.d, what);
    read(j, "heads", c.heads, what);
    read(j, "d_ffn", c.d_ffn, what);
    read(j, "seq_len", c.seq_len, what);
    read(j, "act_bytes", c.act_bytes, what);
    read(j, "weight_bytes", c.weight_bytes, what);
    read(j, "accum_bytes", c.accum_bytes, what);
    std::string mode(to_string(c.mode));
    read(j, "mode", mode, what);
    c.mode = mode_from_string(mode);
    c.validate();
    return c;
}

Json to_json(const ModelConfig& c) {
    return Json{{"name", c.name},       {"layers", c.layers},         {"d", c.d},
                {"heads", c.heads},     {"d_ffn", c.d_ffn},           {"mode", std::string(to_string(c.mode))},
                {"act_bytes", c.act_bytes}, {"weight_bytes", c.weight_bytes}, {"accum_bytes", c.accum_bytes},
                {"seq_len", c.seq_len}};
}

AcceleratorConfig accel_from_json(const Json& j) {
    constexpr std::string_view what = "accelerator config";
    reject_unknown(j, {"name", "pe_width", "scratchpad_kb", "accumulator_kb", "dram_bytes_per_cycle",
                       "sfu_cycles_per_vector", "matvec", "energy"},
                   what);
    AcceleratorConfig a;
    read(j, "name", a.name, what);
    read(j, "pe_width", a.pe_width, what);
    double spad_kb = static_cast<double>(a.scratchpad_bytes) / 1024;
    double acc_kb = static_cast<double>(a.accumulator_bytes) / 1024;
    read(j, "scratchpad_kb", spad_kb, what);
    read(j, "accumulator_kb", acc_kb, what);
    a.scratchpad_bytes = static_cast<std::int64_t>(spad_kb * 1024);
    a.accumulator_bytes = static_cast<std::int64_t>(acc_kb * 1024);
    read(j, "dram_bytes_per_cycle", a.dram_bw, what);
    read(j, "sfu_cycles_per_vector", a.sfu_cycles_per_vector, what);
    if (j.contains("matvec")) {
        std::string m;
        read(j, "matvec", m, what);
        if (m == "one-column") a.matvec = MatvecMode::OneColumn;
        else if (m == "idealized") a.matvec = MatvecMode::Idealized;
        else throw ConfigError("matvec must be 'one-column' or 'idealized'");
    }
    if (j.contains("energy")) {
        const Json& e = j.at("energy");
        reject_unknown(e, {"mac", "spad", "acc", "dram"}, "energy table");
        read(e, "mac", a.energy.mac, "energy table");
        read(e, "spad", a.energy.scratchpad, "energy table");
        read(e, "acc", a.energy.accumulator, "energy table");
        read(e, "dram", a.energy.dram, "energy table");
    }
    a.validate();
    return a;
}

Json to_json(const AcceleratorConfig& a) {
    return Json{{"name", a.name},
                {"pe_width", a.pe_width},
                {"scratchpad_kb", static_cast<double>(a.scratchpad_bytes) / 1024},
                {"accumulator_kb", static_cast<double>(a.accumulator_bytes) / 1024},
                {"dram_bytes_per_cycle", a.dram_bw},
                {"sfu_cycles_per_vector", a.sfu_cycles_per_vector},
                {"matvec", std::string(matvec_name(a.matvec))},
                {"energy",
                 {{"mac", a.energy.mac},
                  {"spad", a.energy.scratchpad},
                  {"acc", a.energy.accumulator},
                  {"dram", a.energy.dram}}}};
}

SearchSpace space_from_json(const Json& j) {
    constexpr std::string_view what = "search space";
    reject_unknown(j, {"layer_counts", "heads", "model_dims", "ffn_dims"}, what);
    SearchSpace s;
    read(j, "layer_counts", s.layer_counts, what);
    read(j, "heads", s.heads, what);
    read(j, "model_dims", s.model_dims, what);
    read(j, "ffn_dims", s.ffn_dims, what);
    s.validate();
    return s;
}

Json to_json(const SearchSpace& s) {
    return Json{{"layer_counts", s.layer_counts},
                {"heads", s.heads},
                {"model_dims", s.model_dims},
                {"ffn_dims", s.ffn_dims}};
}

Candidate candidate_from_json(const Json& j) {
    constexpr std::string_view what = "candidate";
    reject_unknown(j, {"layers", "d", "heads", "d_ffn", "quality", "latency", "energy", "edp"}, what);
    Candidate c;
    read(j, "layers", c.layers, what);
    read(j, "d", c.d, what);
    read(j, "heads", c.heads, what);
    read(j, "d_ffn", c.d_ffn, what);
    if (j.contains("edp")) {
        read(j, "quality", c.quality, what);
        read(j, "latency", c.latency, what);
        read(j, "energy", c.energy, what);
        read(j, "edp", c.edp, what);
        c.evaluated = true;
    }
    c.validate();
    return c;
}

Json to_json(const Candidate& c) {
    Json j{{"layers", c.layers}, {"d", c.d}, {"heads", c.heads}, {"d_ffn", c.d_ffn}};
    if (c.evaluated) {
        j["quality"] = c.quality;
        j["latency"] = c.latency;
        j["energy"] = c.energy;
        j["edp"] = c.edp;
    }
    return j;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
}

ModelConfig resolve_model(const std::string& spec) {
    for (const auto& n : model_preset_names())
        if (n == spec) return model_preset(spec);
    if (std::filesystem::exists(spec)) return model_from_json(read_json_file(spec));
    throw ConfigError("unknown model '" + spec + "' (not a preset or an existing file)");
}

AcceleratorConfig resolve_accel(const std::string& spec) {
    for (const auto& n : accel_preset_names())
        if (n == spec) return accel_preset(spec);
    if (std::filesystem::exists(spec)) return accel_from_json(read_json_file(spec));
    throw ConfigError("unknown accelerator '" + spec + "' (not a preset or an existing file)");
}

}  // namespace tfperf
