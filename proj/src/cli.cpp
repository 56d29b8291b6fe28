#include "tfperf/cli.hpp"

#include <algorithm>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tfperf/archsearch.hpp"
#include "tfperf/config_io.hpp"
#include "tfperf/error.hpp"
#include "tfperf/fusion.hpp"
#include "tfperf/hwmodel.hpp"
#include "tfperf/mapspace.hpp"
#include "tfperf/report.hpp"
#include "tfperf/workload.hpp"

namespace tfperf {

namespace {

struct Common {
    std::string model = "bert-base";
    std::string accel = "gemmini-tuned";
    std::int64_t seqlen = 512;
    std::string format = "csv";
    std::string out = "-";
    std::uint64_t seed = 1;
    std::string tiles;  ///< empty: command default
};

std::string join(const std::vector<std::int64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
}

bool to_stdout(const std::string& path) { return path.empty() || path == "-"; }

ModelConfig load_model(const Common& c) {
    ModelConfig m = resolve_model(c.model);
    if (m.mode != Mode::Cnn) m.seq_len = c.seqlen;
    m.validate();
    return m;
}

Report analyze(const Common& c, bool per_op, bool fused) {
    const ModelConfig m = load_model(c);
    WorkloadProfile p = profile(model_ops(m, OutputPrecision::Ideal));
    if (fused) {
        if (m.mode != Mode::Cnn) throw ConfigError("--fused applies to cnn models only");
        p = fold_cnn_fusion(p);
    }
    Report r;
    if (per_op) {
        r.columns = {"operator", "class", "category", "repeat", "flops", "mops", "intensity"};
        for (const auto& o : p.per_op)
            r.add({o.op.name, std::string(to_string(o.op.cls)), std::string(category_of(o.op)), o.op.repeat,
                   o.flops, o.mops, o.intensity});
        return r;
    }
    r.columns = {"category", "flops", "flops_pct", "mops", "mops_pct", "intensity"};
    for (const auto& row : p.per_category)
        r.add({row.category, row.flops, row.flops_pct, row.mops, row.mops_pct, row.intensity});
    r.add({std::string("Total"), p.totals.flops, 100.0, p.totals.mops, 100.0, p.totals.intensity});
    return r;
}

Report latency(const Common& c) {
    const ModelConfig m = load_model(c);
    const AcceleratorConfig a = resolve_accel(c.accel);
    const auto b = latency_breakdown(m, a, tile_policy_from_string(c.tiles));
    Report r;
    r.columns = {"category", "cycles", "share"};
    for (const auto& s : b.per_category) r.add({s.category, s.cycles, s.share});
    r.add({std::string("Total"), b.total, 1.0});
    return r;
}

Report nonideal(const Common& c) {
    const ModelConfig m = load_model(c);
    const AcceleratorConfig a = resolve_accel(c.accel);
    const auto costs = model_costs(m, a, tile_policy_from_string(c.tiles));
    Report r;
    r.columns = {"operator", "category", "flops", "dram_bytes", "ideal_intensity", "nonideal_intensity"};
    double f = 0, dram = 0;
    for (const auto& oc : costs) {
        const double fl = flops(oc.op);
        f += fl;
        dram += oc.cost.traffic.dram;
        r.add({oc.op.name, std::string(category_of(oc.op)), fl, oc.cost.traffic.dram, oc.ideal_intensity,
               oc.nonideal_intensity});
    }
    const auto ideal = profile(model_ops(m, OutputPrecision::Ideal)).totals;
    r.add({std::string("Total"), std::string("Total"), f, dram, ideal.intensity, dram > 0 ? f / dram : 0.0});
    return r;
}

MemorySplit parse_split(const std::string& s) {
    const auto colon = s.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument(s);
        std::size_t p1 = 0, p2 = 0;
        const double sp = std::stod(s.substr(0, colon), &p1);
        const double ac = std::stod(s.substr(colon + 1), &p2);
        if (p1 != colon || p2 != s.size() - colon - 1) throw std::invalid_argument(s);
        return {static_cast<std::int64_t>(sp * 1024), static_cast<std::int64_t>(ac * 1024)};
    } catch (const std::logic_error&) {
        throw ConfigError("split '" + s + "' must look like SPAD_KB:ACC_KB");
    }
}

Report memsweep(const Common& c, double total_kb, const std::vector<std::string>& split_args) {
    const ModelConfig m = load_model(c);
    const AcceleratorConfig a = resolve_accel(c.accel);
    std::vector<MemorySplit> splits;
    for (const auto& s : split_args) splits.push_back(parse_split(s));
    const auto sw = memory_split_sweep(m, a, static_cast<std::int64_t>(total_kb * 1024), splits,
                                       tile_policy_from_string(c.tiles));
    Report r;
    r.columns = {"scratchpad_kb", "accumulator_kb", "feasible", "matmul_latency", "best", "reason"};
    for (std::size_t i = 0; i < sw.results.size(); ++i) {
        const auto& s = sw.results[i];
        r.add({static_cast<double>(s.split.scratchpad_bytes) / 1024, static_cast<double>(s.split.accumulator_bytes) / 1024,
               std::int64_t{s.feasible}, s.matmul_latency, std::int64_t{i == sw.best}, s.reason});
    }
    return r;
}

Json stats_json(const MapspaceStats& st, const std::string& op, std::uint64_t seed) {
    return Json{{"op", op},
                {"samples", st.n_samples},
                {"seed", seed},
                {"min_edp", st.min_edp},
                {"spread", st.spread()},
                {"p10", st.p10},
                {"frac_within_1_5", st.frac_within(1.5)},
                {"frac_within_2", st.frac_within(2.0)},
                {"frac_within_3", st.frac_within(3.0)},
                {"frac_within_10", st.frac_within(10.0)}};
}

Report mapsearch(const Common& c, const std::string& op, std::size_t samples, std::string stats_path,
                 bool& wrote_stats) {
    if (samples < 1) throw ConfigError("--samples must be >= 1");
    const AcceleratorConfig a = resolve_accel(c.accel);
    if (c.seqlen < 1) throw ConfigError("--seqlen must be >= 1");
    const LoopNest nest = named_nest(op, c.seqlen);
    const auto recs = sample_mappings(nest, a, samples, c.seed);
    const MapspaceStats st = stats_from(recs);
    Report r;
    r.columns = {"sample_idx", "latency", "energy", "edp", "relative_edp"};
    r.rows.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i)
        r.rows.push_back({static_cast<std::int64_t>(recs[i].index), recs[i].cost.latency, recs[i].cost.energy,
                          recs[i].cost.edp, st.relative_edps[i]});
    if (stats_path.empty() && !to_stdout(c.out)) stats_path = c.out + ".stats.json";
    if (!stats_path.empty()) {
        write_json_file(stats_path, stats_json(st, op, c.seed));
        wrote_stats = true;
    }
    return r;
}

Report fusion(const Common& c, std::vector<std::string> pairs, std::vector<double> acc_kb,
              std::vector<std::int64_t> seqlens) {
    const ModelConfig m = resolve_model(c.model);
    const AcceleratorConfig a = resolve_accel(c.accel);
    if (pairs.empty()) pairs = pair_names();
    if (acc_kb.empty()) acc_kb = {128, 256};
    if (seqlens.empty()) seqlens = {512, 4096};
    std::vector<std::int64_t> acc;
    for (double k : acc_kb) {
        if (!(k > 0)) throw ConfigError("--acc-kb must be > 0");
        acc.push_back(static_cast<std::int64_t>(k * 1024));
    }
    for (auto l : seqlens) {
        ModelConfig probe = m;
        probe.seq_len = l;
        probe.validate();
    }
    Report r;
    r.columns = {"pair",         "accumulator_kb",   "seq_len",         "feasible",      "fused_latency",
                 "nonfused_latency", "producer_penalty", "hidden_cycles", "verdict",       "reason"};
    for (const auto& p : pairs)
        for (const auto& cell : fusion_sweep(p, m, a, acc, seqlens)) {
            const auto& f = cell.report;
            r.add({p, static_cast<double>(cell.accumulator_bytes) / 1024, cell.seq_len, std::int64_t{f.feasible},
                   f.fused_latency, f.nonfused_latency, f.producer_penalty, f.hidden_cycles,
                   std::string(to_string(f.verdict)), f.reason});
        }
    return r;
}

Report search(const Common& c, const std::string& space_path, std::size_t pop, std::size_t rounds,
              double mutation, std::string trace_path) {
    const SearchSpace space = space_path.empty() ? SearchSpace{} : space_from_json(read_json_file(space_path));
    const AcceleratorConfig a = resolve_accel(c.accel);
    if (pop < 2) throw ConfigError("--pop must be >= 2");
    if (!(mutation >= 0 && mutation <= 1)) throw ConfigError("--mutation must be in [0, 1]");
    if (c.seqlen < 1) throw ConfigError("--seqlen must be >= 1");
    EvolveOptions opt;
    opt.population = pop;
    opt.rounds = rounds;
    opt.mutation = mutation;
    opt.seed = c.seed;
    opt.seq_len = c.seqlen;
    CostCache cache(a);
    const EvolveResult res = evolve(space, cache, opt);

    if (trace_path.empty() && !to_stdout(c.out)) trace_path = c.out + ".trace.csv";
    if (!trace_path.empty()) {
        Report t;
        t.generated_by = "search trace";
        t.columns = {"round", "best_edp", "front_size"};
        for (const auto& row : res.trace)
            t.add({static_cast<std::int64_t>(row.round), row.best_edp, static_cast<std::int64_t>(row.front_size)});
        emit(t, Format::Csv, trace_path);
    }

    Report r;
    r.columns = {"layers", "d", "heads", "d_ffn", "quality", "latency", "energy", "edp"};
    for (const auto& cand : res.front)
        r.add({cand.layers, cand.d, join(cand.heads), join(cand.d_ffn), cand.quality, cand.latency, cand.energy,
               cand.edp});
    return r;
}

void add_common(CLI::App* sub, Common& c, bool model, bool accel, bool seqlen, bool seed, bool tiles) {
    if (model) sub->add_option("--model", c.model, "preset name or JSON file")->capture_default_str();
    if (accel) sub->add_option("--accel", c.accel, "preset name or JSON file")->capture_default_str();
    if (seqlen) sub->add_option("--seqlen", c.seqlen, "sequence length")->capture_default_str();
    sub->add_option("--format", c.format, "csv or json")->capture_default_str();
    sub->add_option("--out", c.out, "output path, '-' for stdout")->capture_default_str();
    if (seed) sub->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
    if (tiles) sub->add_option("--tiles", c.tiles, "square, greedy or best");
}

void print_error(const std::string& what) {
    std::istringstream is(what);
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) std::cerr << "tfperf: error: " << line << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"tfperf: workload, accelerator and architecture analysis for Transformer inference"};
    app.name("tfperf");
    app.require_subcommand(1, 1);

    Common c;
    bool per_op = false, fused = false;
    double total_kb = 320;
    std::vector<std::string> splits{"64:256", "128:192", "192:128", "256:64"};
    std::string op = "bert.qk", stats_path;
    std::size_t samples = 100000;
    std::vector<std::string> pairs;
    std::vector<double> acc_kb;
    std::vector<std::int64_t> fusion_seqlens;
    std::string space_path, trace_path;
    std::size_t pop = 40, rounds = 40;
    double mutation = 0.2;

    auto* an = app.add_subcommand("analyze", "FLOPs, MOPs and arithmetic intensity per category");
    add_common(an, c, true, false, true, false, false);
    an->add_flag("--per-op", per_op, "one row per operator");
    an->add_flag("--fused", fused, "fold BatchNorm and ReLU into convolutions");

    auto* la = app.add_subcommand("latency", "latency breakdown on the accelerator");
    add_common(la, c, true, true, true, false, true);

    auto* ni = app.add_subcommand("nonideal", "arithmetic intensity under real DRAM traffic");
    add_common(ni, c, true, true, true, false, true);

    auto* ms = app.add_subcommand("memsweep", "scratchpad / accumulator split sweep");
    add_common(ms, c, true, true, true, false, true);
    ms->add_option("--total-kb", total_kb, "total SRAM in kB")->capture_default_str();
    ms->add_option("--split", splits, "SPAD_KB:ACC_KB, repeatable");

    auto* mp = app.add_subcommand("mapsearch", "random mapspace sampling");
    add_common(mp, c, false, true, true, true, false);
    mp->add_option("--op", op, "named nest, mm:M,K,N or conv:k,in,out,h,w,stride")->capture_default_str();
    mp->add_option("--samples", samples, "number of samples")->capture_default_str();
    mp->add_option("--stats", stats_path, "stats JSON path (default <out>.stats.json)");

    auto* fu = app.add_subcommand("fusion", "matmul + Softmax/LayerNorm fusion grid");
    add_common(fu, c, true, true, false, false, false);
    fu->add_option("--pair", pairs, "qk-softmax, wout-ln or ffn2-ln, repeatable");
    fu->add_option("--acc-kb", acc_kb, "accumulator size in kB, repeatable");
    fu->add_option("--seqlen", fusion_seqlens, "sequence length, repeatable");

    auto* se = app.add_subcommand("search", "evolutionary architecture search");
    add_common(se, c, false, true, true, true, false);
    se->add_option("--space", space_path, "search space JSON (default: built-in)");
    se->add_option("--pop", pop, "population size")->capture_default_str();
    se->add_option("--rounds", rounds, "rounds")->capture_default_str();
    se->add_option("--mutation", mutation, "per-gene mutation probability")->capture_default_str();
    se->add_option("--trace", trace_path, "trace CSV path (default <out>.trace.csv)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error(e.what());
        return kExitConfig;
    }
    if (c.tiles.empty()) c.tiles = ms->parsed() ? "best" : "square";

    std::string echo = "tfperf";
    for (const auto& a : args) echo += " " + a;

    try {
        const Format fmt = format_from_string(c.format);
        Report r;
        bool ignored = false;
        if (an->parsed()) r = analyze(c, per_op, fused);
        else if (la->parsed()) r = latency(c);
        else if (ni->parsed()) r = nonideal(c);
        else if (ms->parsed()) r = memsweep(c, total_kb, splits);
        else if (mp->parsed()) r = mapsearch(c, op, samples, stats_path, ignored);
        else if (fu->parsed()) r = fusion(c, pairs, acc_kb, fusion_seqlens);
        else r = search(c, space_path, pop, rounds, mutation, trace_path);
        r.generated_by = echo;
        emit(r, fmt, c.out);
    } catch (const IoError& e) {
        print_error(e.what());
        return kExitIo;
    } catch (const ConfigError& e) {
        print_error(e.what());
        return kExitConfig;
    } catch (const InfeasibleError& e) {
        print_error(e.what());
        return kExitConfig;
    }
    return kExitOk;
}

}  // namespace tfperf
