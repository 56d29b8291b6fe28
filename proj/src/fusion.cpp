#include "tfperf/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "tfperf/error.hpp"

namespace tfperf {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }
std::int64_t round_up(std::int64_t a, std::int64_t b) { return ceil_div(a, b) * b; }

std::int64_t output_elements(const OperatorSpec& producer) {
    const auto& m = std::get<Matmul>(producer.kind);
    return m.m * m.n * producer.repeat;
}

std::int64_t consumer_elements(const OperatorSpec& consumer) {
    return std::get<Elementwise>(consumer.kind).elements * consumer.repeat;
}

// Sub-W sizes plus the usual W-multiple candidates, capped.
std::vector<std::int64_t> fine_candidates(std::int64_t extent, std::int64_t W, std::int64_t cap) {
    std::set<std::int64_t> c{1, 2, 4, 8};
    for (auto t : tile_candidates(extent, W)) c.insert(t);
    c.insert(cap);
    std::vector<std::int64_t> out;
    for (auto t : c)
        if (t >= 1 && t <= cap) out.push_back(t);
    return out;
}

// SFU work plus the 1-byte result store; the 4-byte inputs never leave chip.
CostReport fused_consumer_cost(const OperatorSpec& consumer, const AcceleratorConfig& accel) {
    const auto& e = std::get<Elementwise>(consumer.kind);
    const double rep = static_cast<double>(consumer.repeat);
    const double vectors = static_cast<double>(ceil_div(e.elements, accel.pe_width));
    const double compute = e.passes * vectors * accel.sfu_cycles_per_vector;
    const double out = static_cast<double>(e.outputs()) * consumer.out_precision;
    CostReport r;
    r.compute_cycles = rep * compute;
    r.memory_cycles = rep * out / accel.dram_bw;
    r.latency = rep * std::max(compute, out / accel.dram_bw);
    r.traffic.dram = rep * out;
    r.traffic.accumulator = rep * static_cast<double>(e.elements) * AcceleratorConfig::kPartialBytes * e.passes;
    r.traffic.scratchpad = rep * out;
    r.energy = energy_of(flops(consumer), r.traffic, accel.energy);
    r.edp = r.latency * r.energy;
    return r;
}

}  // namespace

void FusionPair::validate() const {
    producer.validate();
    consumer.validate();
    if (!std::holds_alternative<Matmul>(producer.kind))
        throw ConfigError("fusion pair '" + name + "': producer must be a matmul");
    const auto fn = consumer.nonlinear_fn();
    if (fn != NonlinearFn::Softmax && fn != NonlinearFn::LayerNorm)
        throw ConfigError("fusion pair '" + name + "': consumer must be Softmax or LayerNorm");
    if (consumer_elements(consumer) != output_elements(producer))
        throw ConfigError("fusion pair '" + name + "': consumer elements do not match producer output");
}

FusionPair fusion_pair(std::string_view kind, const ModelConfig& cfg) {
    if (cfg.mode != Mode::Encoder) throw ConfigError("fusion pairs are defined for encoder models");
    ModelConfig one = cfg;
    one.layers = 1;
    const auto ops = encoder_ops(one, OutputPrecision::WidePreNonlinear);
    FusionPair p;
    p.name = std::string(kind);
    if (kind == "qk-softmax") {
        p.producer = ops[1], p.consumer = ops[2], p.reduction = ReductionDim::N;
    } else if (kind == "wout-ln") {
        p.producer = ops[4], p.consumer = ops[6], p.reduction = ReductionDim::M;
    } else if (kind == "ffn2-ln") {
        p.producer = ops[9], p.consumer = ops[11], p.reduction = ReductionDim::M;
    } else {
        throw ConfigError("unknown fusion pair '" + std::string(kind) + "' (expected qk-softmax|wout-ln|ffn2-ln)");
    }
    p.validate();
    return p;
}

std::vector<std::string> pair_names() { return {"qk-softmax", "wout-ln", "ffn2-ln"}; }

bool FusionConstraints::admits(const TilingPlan& plan) const {
    const auto red = reduction == ReductionDim::M ? plan.tile_m : plan.tile_n;
    const auto co = reduction == ReductionDim::M ? plan.tile_n : plan.tile_m;
    return red == reduction_tile && co >= 1 && co <= max_co_tile;
}

bool FusionConstraints::admits(const Mapping& m, const LoopNest& nest) const {
    if (nest.kind != LoopNest::Kind::Matmul) return false;
    const std::size_t d = reduction == ReductionDim::M ? 0 : 2;
    return m.spatial[d] * m.local.factors[d] >= nest.dims[d].extent;
}

FusionConstraints fused_constraints(const FusionPair& pair, const AcceleratorConfig& accel) {
    pair.validate();
    accel.validate();
    const GemmShape g = gemm_shape(pair.producer);
    const std::int64_t W = accel.pe_width;
    FusionConstraints c;
    c.reduction = pair.reduction;
    const std::int64_t red = pair.reduction == ReductionDim::M ? g.m : g.n;
    const std::int64_t co = pair.reduction == ReductionDim::M ? g.n : g.m;
    c.reduction_tile = round_up(red, W);
    // Two output blocks live in the accumulator: one being normalized by the
    // SFU while the array accumulates the next.
    c.max_co_tile = std::min(round_up(co, W),
                             accel.accumulator_bytes / (2 * c.reduction_tile * AcceleratorConfig::kPartialBytes));
    const std::int64_t tm = pair.reduction == ReductionDim::M ? c.reduction_tile : 1;
    const std::int64_t tn = pair.reduction == ReductionDim::M ? 1 : c.reduction_tile;
    if (c.max_co_tile < 1 || !tile_fits(g, tm, 1, tn, accel))
        throw InfeasibleError("fusion '" + pair.name + "' infeasible: a full row of " +
                              std::to_string(c.reduction_tile) + " partial sums does not fit");
    return c;
}

std::string_view to_string(Verdict v) { return v == Verdict::FusionWins ? "FusionWins" : "FusionLoses"; }

FusionReport eval_pair(const FusionPair& pair, const AcceleratorConfig& accel) {
    accel.validate();
    FusionReport r;

    r.producer_plan = best_tiles(pair.producer, accel, true);
    const CostReport prod = op_cost(pair.producer, r.producer_plan, accel);
    r.producer_latency = prod.latency;

    if (consumer_elements(pair.consumer) == 0) {
        pair.producer.validate();
        r.nonfused_latency = r.fused_latency = r.fused_producer_latency = prod.latency;
        r.nonfused_dram = r.fused_dram = r.roundtrip_dram = prod.traffic.dram;
        r.fused_plan = r.producer_plan;
        r.verdict = Verdict::FusionLoses;
        return r;
    }
    pair.validate();

    const CostReport cons = op_cost(pair.consumer, TilingPlan{}, accel);
    r.consumer_latency = cons.latency;
    r.nonfused_latency = prod.latency + cons.latency;
    r.nonfused_dram = prod.traffic.dram + cons.traffic.dram;

    FusionConstraints c;
    try {
        c = fused_constraints(pair, accel);
    } catch (const InfeasibleError& e) {
        r.feasible = false;
        r.reason = e.what();
        r.verdict = Verdict::FusionLoses;
        return r;
    }

    GemmShape g = gemm_shape(pair.producer);
    g.out_bytes = 0;
    const std::int64_t W = accel.pe_width;
    const bool red_m = pair.reduction == ReductionDim::M;
    const auto co_cands = fine_candidates(red_m ? g.n : g.m, W, c.max_co_tile);
    const auto k_cands = fine_candidates(g.k, W, round_up(g.k, W));

    bool found = false;
    CostReport best;
    auto best_key = std::make_tuple(HUGE_VAL, HUGE_VAL, std::int64_t{0}, std::int64_t{0});
    for (auto co : co_cands) {
        for (auto tk : k_cands) {
            const std::int64_t tm = red_m ? c.reduction_tile : co;
            const std::int64_t tn = red_m ? co : c.reduction_tile;
            if (!tile_fits(g, tm, tk, tn, accel)) continue;
            const CostReport cr = tiled_gemm_cost(g, tm, tk, tn, accel);
            const auto key = std::make_tuple(cr.latency, energy_of(0, cr.traffic, accel.energy), co, tk);
            if (key < best_key) {
                best_key = key;
                best = cr;
                r.fused_plan = TilingPlan{tm, tk, tn, true};
                found = true;
            }
        }
    }
    if (!found) {
        r.feasible = false;
        r.reason = "fusion '" + pair.name + "' infeasible: no constrained tile fits the scratchpad";
        r.verdict = Verdict::FusionLoses;
        return r;
    }

    const CostReport fc = fused_consumer_cost(pair.consumer, accel);
    const double blocks = static_cast<double>(ceil_div(red_m ? g.n : g.m, red_m ? r.fused_plan.tile_n : r.fused_plan.tile_m) *
                                              pair.producer.repeat);
    const double P = best.latency, S = fc.latency;
    const double p = P / blocks, s = S / blocks;
    r.fused_producer_latency = P;
    r.fused_consumer_latency = S;
    r.fused_latency = std::max(P + s, p + S);
    r.hidden_cycles = P + S - r.fused_latency;
    r.producer_penalty = r.producer_latency > 0 ? P / r.producer_latency : 1.0;
    r.fused_dram = best.traffic.dram + fc.traffic.dram;
    const auto& fp = r.fused_plan;
    r.roundtrip_dram = tiled_gemm_cost(gemm_shape(pair.producer), fp.tile_m, fp.tile_k, fp.tile_n, accel).traffic.dram +
                       cons.traffic.dram;
    r.verdict = r.fused_latency < r.nonfused_latency ? Verdict::FusionWins : Verdict::FusionLoses;
    return r;
}

std::vector<FusionCell> fusion_sweep(std::string_view pair_kind, const ModelConfig& cfg,
                                     const AcceleratorConfig& accel, const std::vector<std::int64_t>& accum_sizes,
                                     const std::vector<std::int64_t>& seq_lens) {
    if (accum_sizes.empty() || seq_lens.empty()) throw ConfigError("fusion sweep needs nonempty grids");
    std::vector<FusionCell> cells;
    for (auto l : seq_lens) {
        ModelConfig c = cfg;
        c.seq_len = l;
        const FusionPair pair = fusion_pair(pair_kind, c);
        for (auto acc : accum_sizes) {
            AcceleratorConfig a = accel;
            a.accumulator_bytes = acc;
            FusionCell cell{acc, l, {}};
            try {
                cell.report = eval_pair(pair, a);
            } catch (const InfeasibleError& e) {
                cell.report.feasible = false;
                cell.report.reason = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace tfperf
