#include "tfperf/hwmodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "tfperf/error.hpp"

namespace tfperf {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }
std::int64_t round_up(std::int64_t a, std::int64_t b) { return ceil_div(a, b) * b; }

// One equivalence class of tile positions along a dimension.
struct DimClass {
    std::int64_t count;
    std::int64_t size;
    bool first;
    bool last;
};

std::vector<DimClass> dim_classes(std::int64_t extent, std::int64_t tile) {
    const std::int64_t n = ceil_div(extent, tile);
    const std::int64_t tail = extent - (n - 1) * tile;
    if (n == 1) return {{1, extent, true, true}};
    std::vector<DimClass> out{{1, tile, true, false}};
    if (n > 2) out.push_back({n - 2, tile, false, false});
    out.push_back({1, tail, false, true});
    return out;
}

}  // namespace

CostReport tiled_gemm_cost(const GemmShape& g, std::int64_t tm, std::int64_t tk, std::int64_t tn,
                           const AcceleratorConfig& accel) {
    const std::int64_t W = accel.pe_width;
    const std::int64_t nn = ceil_div(g.n, tn);
    const std::int64_t nk = ceil_div(g.k, tk);
    const auto cm = dim_classes(g.m, tm);
    const auto cn = dim_classes(g.n, tn);
    const auto ck = dim_classes(g.k, tk);

    CostReport r;
    for (const auto& i : cm) {
        for (const auto& j : cn) {
            for (const auto& p : ck) {
                const double count = static_cast<double>(i.count * j.count * p.count);
                const double a_tile = static_cast<double>(i.size * p.size * g.a_bytes);
                const double b_tile = static_cast<double>(p.size * j.size * g.b_bytes) * g.b_scale;
                const double c_tile = static_cast<double>(i.size * j.size);

                double dram = 0;
                if (nk > 1 || j.first) dram += a_tile;
                if (nk > 1 || nn > 1 || i.first) dram += b_tile;
                if (p.last) dram += c_tile * g.out_bytes;

                const double compute =
                    static_cast<double>(p.size * ceil_div(i.size, W) * ceil_div(j.size, W) + W);
                const double memory = dram / accel.dram_bw;

                r.latency += count * std::max(compute, memory);
                r.compute_cycles += count * compute;
                r.memory_cycles += count * memory;
                r.traffic.dram += count * dram;
                r.traffic.scratchpad += count * (dram - (p.last ? c_tile * g.out_bytes : 0) + a_tile + b_tile);
                r.traffic.accumulator +=
                    count * c_tile * AcceleratorConfig::kPartialBytes * (p.last ? 2.0 : 1.0);
            }
        }
    }
    const double rep = static_cast<double>(g.repeat);
    r.latency *= rep;
    r.compute_cycles *= rep;
    r.memory_cycles *= rep;
    r.traffic.dram *= rep;
    r.traffic.scratchpad *= rep;
    r.traffic.accumulator *= rep;
    return r;
}

namespace {

void finish(CostReport& r, double f, const EnergyTable& e) {
    r.energy = energy_of(f, r.traffic, e);
    r.edp = r.latency * r.energy;
    r.compute_bound = r.compute_cycles >= r.memory_cycles;
}

double matvec_compute(double macs, const AcceleratorConfig& accel) {
    const double W = static_cast<double>(accel.pe_width);
    return accel.matvec == MatvecMode::OneColumn ? macs / W : macs / (W * W);
}

CostReport matvec_cost(const OperatorSpec& op, const MatvecSeries& m, const AcceleratorConfig& accel) {
    CostReport r;
    const double rows = static_cast<double>(m.rows), cols = static_cast<double>(m.cols);
    const double iters = static_cast<double>(m.iterations) * static_cast<double>(op.repeat);
    const double weights = rows * cols * op.in_prec(0);
    const double dram = weights + cols * op.in_prec(1) + rows * op.out_precision;
    const double compute = matvec_compute(rows * cols, accel);
    const double memory = dram / accel.dram_bw;
    r.latency = iters * std::max(compute, memory);
    r.compute_cycles = iters * compute;
    r.memory_cycles = iters * memory;
    r.traffic.dram = iters * dram;
    r.traffic.scratchpad = iters * (2 * (weights + cols * op.in_prec(1)));
    r.traffic.accumulator = iters * rows * AcceleratorConfig::kPartialBytes * 2;
    return r;
}

CostReport kvcache_cost(const OperatorSpec& op, const KvCacheSeries& k, const AcceleratorConfig& accel) {
    CostReport r;
    const double dh = static_cast<double>(k.head_dim);
    const double p0 = op.in_prec(0), p1 = op.in_prec(1), o = op.out_precision;
    for (std::int64_t step = 1; step <= k.steps; ++step) {
        const double i = static_cast<double>(step);
        double in = 0, out = 0;
        if (k.role == KvCacheSeries::Role::QueryKey) {
            in = dh * p0 + i * dh * p1;
            out = i * o;
        } else {
            in = i * p0 + i * dh * p1;
            out = dh * o;
        }
        const double compute = matvec_compute(i * dh, accel);
        const double memory = (in + out) / accel.dram_bw;
        r.latency += std::max(compute, memory);
        r.compute_cycles += compute;
        r.memory_cycles += memory;
        r.traffic.dram += in + out;
        r.traffic.scratchpad += 2 * in;
        r.traffic.accumulator += (k.role == KvCacheSeries::Role::QueryKey ? i : dh) *
                                 AcceleratorConfig::kPartialBytes * 2;
    }
    const double rep = static_cast<double>(op.repeat);
    r.latency *= rep;
    r.compute_cycles *= rep;
    r.memory_cycles *= rep;
    r.traffic.dram *= rep;
    r.traffic.scratchpad *= rep;
    r.traffic.accumulator *= rep;
    return r;
}

CostReport elementwise_cost(const OperatorSpec& op, const Elementwise& e, const AcceleratorConfig& accel) {
    CostReport r;
    const double rep = static_cast<double>(op.repeat);
    double in = 0;
    for (int i = 0; i < e.inputs; ++i)
        in += static_cast<double>(e.elements) * op.in_prec(static_cast<std::size_t>(i));
    const double out = static_cast<double>(e.outputs()) * op.out_precision;
    const double vectors = static_cast<double>(ceil_div(e.elements, accel.pe_width));
    const double compute = e.passes * vectors * accel.sfu_cycles_per_vector;
    // Without fusion nothing stays resident between passes: every SFU pass
    // streams its inputs from DRAM again.
    const double dram = e.passes * in + out;
    const double memory = dram / accel.dram_bw;
    r.latency = rep * std::max(compute, memory);
    r.compute_cycles = rep * compute;
    r.memory_cycles = rep * memory;
    r.traffic.dram = rep * dram;
    r.traffic.scratchpad = rep * (dram + e.passes * in + out);
    return r;
}

}  // namespace

std::vector<std::int64_t> tile_candidates(std::int64_t extent, std::int64_t W) {
    const std::int64_t padded = round_up(extent, W);
    std::set<std::int64_t> c;
    for (std::int64_t t = W; t < padded; t *= 2) c.insert(t);
    c.insert(padded);
    for (std::int64_t s = 2; s <= 8; ++s) c.insert(round_up(ceil_div(padded, s), W));
    return {c.begin(), c.end()};
}

namespace {

std::int64_t clamp_tile(std::int64_t t, std::int64_t extent, std::int64_t W) {
    return std::min(t, round_up(extent, W));
}

}  // namespace

// -----------------------------------------------------------------------------
// Config
// -----------------------------------------------------------------------------

void AcceleratorConfig::validate() const {
    std::vector<std::string> errs;
    if (pe_width < 1) errs.push_back("pe_width must be >= 1");
    if (scratchpad_bytes <= 0) errs.push_back("scratchpad must be > 0");
    if (accumulator_bytes <= 0) errs.push_back("accumulator must be > 0");
    if (!(dram_bw > 0)) errs.push_back("dram bandwidth must be > 0");
    if (!(sfu_cycles_per_vector > 0)) errs.push_back("sfu cycles per vector must be > 0");
    if (!(energy.scratchpad > 0)) errs.push_back("scratchpad energy must be > 0");
    if (!(energy.dram > energy.scratchpad)) errs.push_back("dram energy must exceed scratchpad energy");
    if (energy.mac < 0 || energy.accumulator < 0) errs.push_back("energies must be >= 0");
    if (errs.empty()) return;
    std::string msg = "invalid accelerator config '" + name + "': ";
    for (std::size_t i = 0; i < errs.size(); ++i) msg += (i ? "; " : "") + errs[i];
    throw ConfigError(msg);
}

AcceleratorConfig accel_preset(std::string_view name) {
    AcceleratorConfig a;
    a.name = std::string(name);
    if (name == "gemmini-baseline") {
        a.scratchpad_bytes = 256 * 1024;
        a.accumulator_bytes = 64 * 1024;
    } else if (name == "gemmini-tuned") {
        a.scratchpad_bytes = 64 * 1024;
        a.accumulator_bytes = 256 * 1024;
    } else {
        throw ConfigError("unknown accelerator preset '" + std::string(name) + "'");
    }
    return a;
}

std::vector<std::string> accel_preset_names() { return {"gemmini-baseline", "gemmini-tuned"}; }

// -----------------------------------------------------------------------------
// Tiling
// -----------------------------------------------------------------------------

GemmShape gemm_shape(const OperatorSpec& op) {
    GemmShape g;
    g.a_bytes = op.in_prec(0);
    g.b_bytes = op.in_prec(1);
    g.out_bytes = op.out_precision;
    g.repeat = op.repeat;
    if (const auto* m = std::get_if<Matmul>(&op.kind)) {
        g.m = m->m, g.k = m->k, g.n = m->n;
        return g;
    }
    if (const auto* c = std::get_if<Conv>(&op.kind)) {
        g.m = c->out_ch;
        g.k = c->in_ch * c->kernel * c->kernel;
        g.n = c->out_h * c->out_w;
        const double distinct = static_cast<double>(c->in_ch * c->in_h() * c->in_w());
        g.b_scale = std::min(1.0, distinct / (static_cast<double>(g.k) * static_cast<double>(g.n)));
        return g;
    }
    throw ConfigError("operator '" + op.name + "' has no matmul form");
}

bool tile_fits(const GemmShape& g, std::int64_t tm, std::int64_t tk, std::int64_t tn,
               const AcceleratorConfig& accel) {
    const std::int64_t spad = tm * tk * g.a_bytes + tk * tn * g.b_bytes;
    const std::int64_t acc = tm * tn * AcceleratorConfig::kPartialBytes;
    return 2 * spad <= accel.scratchpad_bytes && acc <= accel.accumulator_bytes;
}

TilingPlan square_tiles(const OperatorSpec& op, const AcceleratorConfig& accel, bool wide_output) {
    accel.validate();
    const GemmShape g = gemm_shape(op);
    const std::int64_t W = accel.pe_width;
    if (!tile_fits(g, W, W, W, accel))
        throw InfeasibleError("accelerator '" + accel.name + "' cannot hold a single " + std::to_string(W) +
                              "x" + std::to_string(W) + " tile");
    std::int64_t t = W;
    while (tile_fits(g, t + W, t + W, t + W, accel)) t += W;
    return {clamp_tile(t, g.m, W), clamp_tile(t, g.k, W), clamp_tile(t, g.n, W), wide_output};
}

TilingPlan greedy_tiles(const OperatorSpec& op, const AcceleratorConfig& accel, bool wide_output) {
    accel.validate();
    const GemmShape g = gemm_shape(op);
    const std::int64_t W = accel.pe_width;
    if (!tile_fits(g, W, W, W, accel))
        throw InfeasibleError("accelerator '" + accel.name + "' cannot hold a single " + std::to_string(W) +
                              "x" + std::to_string(W) + " tile");
    std::array<std::int64_t, 3> t{W, W, W};  // k, m, n
    const std::array<std::int64_t, 3> cap{round_up(g.k, W), round_up(g.m, W), round_up(g.n, W)};
    for (bool grew = true; grew;) {
        grew = false;
        for (int d = 0; d < 3; ++d) {
            if (t[d] >= cap[d]) continue;
            auto next = t;
            next[d] += W;
            if (tile_fits(g, next[1], next[0], next[2], accel)) {
                t = next;
                grew = true;
            }
        }
    }
    return {clamp_tile(t[1], g.m, W), clamp_tile(t[0], g.k, W), clamp_tile(t[2], g.n, W), wide_output};
}

TilingPlan best_tiles(const OperatorSpec& op, const AcceleratorConfig& accel, bool wide_output) {
    accel.validate();
    const GemmShape g = gemm_shape(op);
    const std::int64_t W = accel.pe_width;
    if (!tile_fits(g, W, W, W, accel))
        throw InfeasibleError("accelerator '" + accel.name + "' cannot hold a single " + std::to_string(W) +
                              "x" + std::to_string(W) + " tile");
    const auto cm = tile_candidates(g.m, W);
    const auto ck = tile_candidates(g.k, W);
    const auto cn = tile_candidates(g.n, W);
    TilingPlan best{W, W, W, wide_output};
    auto best_key = std::make_tuple(HUGE_VAL, HUGE_VAL);
    for (auto tm : cm) {
        for (auto tk : ck) {
            for (auto tn : cn) {
                if (!tile_fits(g, tm, tk, tn, accel)) continue;
                const CostReport r = tiled_gemm_cost(g, tm, tk, tn, accel);
                const auto key = std::make_tuple(r.latency, energy_of(0, r.traffic, accel.energy));
                if (key < best_key) {
                    best_key = key;
                    best = {tm, tk, tn, wide_output};
                }
            }
        }
    }
    return best;
}

std::string_view to_string(TilePolicy p) {
    switch (p) {
        case TilePolicy::Square: return "square";
        case TilePolicy::Greedy: return "greedy";
        case TilePolicy::Best: return "best";
    }
    return "?";
}

TilePolicy tile_policy_from_string(std::string_view s) {
    if (s == "square") return TilePolicy::Square;
    if (s == "greedy") return TilePolicy::Greedy;
    if (s == "best") return TilePolicy::Best;
    throw ConfigError("unknown tile policy '" + std::string(s) + "' (expected square|greedy|best)");
}

TilingPlan plan_for(const OperatorSpec& op, const AcceleratorConfig& accel, TilePolicy policy) {
    const bool wide = op.out_precision >= AcceleratorConfig::kPartialBytes;
    if (!op.is_matmul_like()) return TilingPlan{1, 1, 1, wide};
    switch (policy) {
        case TilePolicy::Square: return square_tiles(op, accel, wide);
        case TilePolicy::Greedy: return greedy_tiles(op, accel, wide);
        case TilePolicy::Best: return best_tiles(op, accel, wide);
    }
    return square_tiles(op, accel, wide);
}

// -----------------------------------------------------------------------------
// Cost
// -----------------------------------------------------------------------------

double energy_of(double f, const Traffic& t, const EnergyTable& e) {
    return f / 2.0 * e.mac + t.dram * e.dram + t.scratchpad * e.scratchpad + t.accumulator * e.accumulator;
}

CostReport op_cost(const OperatorSpec& op, const TilingPlan& plan, const AcceleratorConfig& accel) {
    op.validate();
    CostReport r;
    if (op.is_matmul_like()) {
        const GemmShape g = gemm_shape(op);
        if (plan.tile_m < 1 || plan.tile_k < 1 || plan.tile_n < 1)
            throw ConfigError("tiling plan for '" + op.name + "' has a zero tile");
        if (!tile_fits(g, plan.tile_m, plan.tile_k, plan.tile_n, accel))
            throw InfeasibleError("tiling plan for '" + op.name + "' exceeds accelerator capacity");
        r = tiled_gemm_cost(g, plan.tile_m, plan.tile_k, plan.tile_n, accel);
    } else if (const auto* m = std::get_if<MatvecSeries>(&op.kind)) {
        r = matvec_cost(op, *m, accel);
    } else if (const auto* k = std::get_if<KvCacheSeries>(&op.kind)) {
        r = kvcache_cost(op, *k, accel);
    } else {
        r = elementwise_cost(op, std::get<Elementwise>(op.kind), accel);
    }
    finish(r, flops(op), accel.energy);
    return r;
}

double op_latency(const OperatorSpec& op, const TilingPlan& plan, const AcceleratorConfig& accel) {
    return op_cost(op, plan, accel).latency;
}

double op_energy(const OperatorSpec& op, const TilingPlan& plan, const AcceleratorConfig& accel) {
    return op_cost(op, plan, accel).energy;
}

double nonideal_intensity(const OperatorSpec& op, const TilingPlan& plan, const AcceleratorConfig& accel) {
    const double dram = op_cost(op, plan, accel).traffic.dram;
    return dram > 0 ? flops(op) / dram : 0.0;
}

// -----------------------------------------------------------------------------
// Model-level analyses
// -----------------------------------------------------------------------------

std::vector<OpCost> model_costs(const ModelConfig& cfg, const AcceleratorConfig& accel, TilePolicy policy) {
    accel.validate();
    const auto ops = model_ops(cfg, OutputPrecision::WidePreNonlinear);
    std::map<std::string, std::pair<TilingPlan, CostReport>> memo;
    std::vector<OpCost> out;
    out.reserve(ops.size());
    for (const auto& op : ops) {
        const std::string key = shape_key(op);
        auto it = memo.find(key);
        if (it == memo.end()) {
            const TilingPlan plan = plan_for(op, accel, policy);
            it = memo.emplace(key, std::make_pair(plan, op_cost(op, plan, accel))).first;
        }
        const auto& [plan, cost] = it->second;
        const double f = flops(op);
        const double m = mops(op);
        out.push_back(OpCost{op, plan, cost, m > 0 ? f / m : 0.0,
                             cost.traffic.dram > 0 ? f / cost.traffic.dram : 0.0});
    }
    return out;
}

const LatencyShare* LatencyBreakdown::category(std::string_view name) const {
    for (const auto& c : per_category)
        if (c.category == name) return &c;
    return nullptr;
}

LatencyBreakdown latency_breakdown(const std::vector<OpCost>& costs) {
    static constexpr std::array<std::string_view, 7> kOrder = {
        kCatMhaProj, kCatActToAct, kCatFfnProj, kCatConv, kCatBatchNorm, kCatRelu, kCatOther};
    std::map<std::string_view, double> sums;
    LatencyBreakdown b;
    for (const auto& c : costs) {
        sums[category_of(c.op)] += c.cost.latency;
        b.energy += c.cost.energy;
    }
    for (auto cat : kOrder) {
        auto it = sums.find(cat);
        if (it == sums.end()) continue;
        b.per_category.push_back({std::string(cat), it->second, 0.0});
        b.total += it->second;
    }
    for (auto& s : b.per_category) s.share = b.total > 0 ? s.cycles / b.total : 0.0;
    return b;
}

LatencyBreakdown latency_breakdown(const ModelConfig& cfg, const AcceleratorConfig& accel, TilePolicy policy) {
    return latency_breakdown(model_costs(cfg, accel, policy));
}

SplitSweep memory_split_sweep(const ModelConfig& cfg, const AcceleratorConfig& base, std::int64_t total_sram,
                              const std::vector<MemorySplit>& splits, TilePolicy policy) {
    if (splits.empty()) throw ConfigError("memory split sweep needs at least one split");
    for (const auto& s : splits)
        if (s.scratchpad_bytes + s.accumulator_bytes != total_sram)
            throw ConfigError("split (" + std::to_string(s.scratchpad_bytes) + ", " +
                              std::to_string(s.accumulator_bytes) + ") does not sum to " +
                              std::to_string(total_sram) + " bytes");
    const auto ops = model_ops(cfg, OutputPrecision::WidePreNonlinear);

    SplitSweep sweep;
    for (const auto& s : splits) {
        SplitResult res;
        res.split = s;
        AcceleratorConfig a = base;
        a.scratchpad_bytes = s.scratchpad_bytes;
        a.accumulator_bytes = s.accumulator_bytes;
        try {
            a.validate();
            std::map<std::string, double> memo;
            for (const auto& op : ops) {
                if (!op.is_matmul_like()) continue;
                const std::string key = shape_key(op);
                auto it = memo.find(key);
                if (it == memo.end()) it = memo.emplace(key, op_latency(op, plan_for(op, a, policy), a)).first;
                res.matmul_latency += it->second;
            }
        } catch (const InfeasibleError& e) {
            res.feasible = false;
            res.reason = e.what();
        } catch (const ConfigError& e) {
            res.feasible = false;
            res.reason = e.what();
        }
        sweep.results.push_back(std::move(res));
    }
    sweep.best = sweep.results.size();
    for (std::size_t i = 0; i < sweep.results.size(); ++i) {
        const auto& r = sweep.results[i];
        if (!r.feasible) continue;
        if (sweep.best == sweep.results.size() || r.matmul_latency < sweep.results[sweep.best].matmul_latency)
            sweep.best = i;
    }
    return sweep;
}

}  // namespace tfperf
