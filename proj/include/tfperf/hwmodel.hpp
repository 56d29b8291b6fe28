// hwmodel.hpp: analytical latency / energy model of a W×W spatial accelerator
// =============================================================================
//
// Hierarchy: DRAM -> scratchpad (inputs + weights, double buffered) -> PE
// array -> accumulator (4-byte partial sums). Nonlinear vector work runs on an
// SFU that reads and writes the scratchpad.
//
// Matmuls are tiled output-stationary: loop order m, n, k with k innermost.
// Every tile's latency is max(compute, memory) under double buffering and the
// operator latency is the sum over tiles.
//
// Units: cycles, bytes, and energy in multiples of one MAC.
//
// =============================================================================
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tfperf/workload.hpp"

namespace tfperf {

struct EnergyTable {
    double mac = 1.0;
    double scratchpad = 6.0;    ///< per byte
    double accumulator = 12.0;  ///< per byte
    double dram = 200.0;        ///< per byte
};

enum class MatvecMode {
    OneColumn,  ///< a matrix-vector product occupies a single PE column
    Idealized,  ///< full W×W throughput
};

struct AcceleratorConfig {
    std::string name = "custom";
    std::int64_t pe_width = 16;
    std::int64_t scratchpad_bytes = 64 * 1024;
    std::int64_t accumulator_bytes = 256 * 1024;
    double dram_bw = 2.0;  ///< bytes per cycle
    double sfu_cycles_per_vector = 1.0;
    EnergyTable energy;
    MatvecMode matvec = MatvecMode::OneColumn;

    /// Bytes per partial sum held in the accumulator.
    static constexpr int kPartialBytes = 4;

    /// Throws ConfigError listing every violated invariant.
    void validate() const;
};

/// "gemmini-baseline" (256 kB scratchpad, 64 kB accumulator) and
/// "gemmini-tuned" (64 kB, 256 kB). Throws ConfigError otherwise.
AcceleratorConfig accel_preset(std::string_view name);
std::vector<std::string> accel_preset_names();

// -----------------------------------------------------------------------------
// Tiling
// -----------------------------------------------------------------------------

/// Implicit matmul view of a Matmul or Conv operator.
struct GemmShape {
    std::int64_t m = 1;
    std::int64_t k = 1;
    std::int64_t n = 1;
    int a_bytes = 1;
    int b_bytes = 1;
    int out_bytes = 1;
    /// Distinct B bytes / (K·N·b_bytes). Below 1 for strided or k>1 convs,
    /// whose im2col matrix repeats input pixels.
    double b_scale = 1.0;
    std::int64_t repeat = 1;
};

/// Throws ConfigError if op is not Matmul or Conv.
GemmShape gemm_shape(const OperatorSpec& op);

struct TilingPlan {
    std::int64_t tile_m = 1;
    std::int64_t tile_k = 1;
    std::int64_t tile_n = 1;
    bool wide_output = false;
};

/// tile_m·tile_k + tile_k·tile_n ≤ scratchpad/2 and
/// tile_m·tile_n·4 ≤ accumulator (byte counts at the operand precisions).
bool tile_fits(const GemmShape& g, std::int64_t tm, std::int64_t tk, std::int64_t tn,
               const AcceleratorConfig& accel);

/// Largest square tile (multiple of W) that fits; each side is then clamped
/// to the padded extent of its dimension. Throws InfeasibleError if even a
/// W×W×W tile does not fit.
TilingPlan square_tiles(const OperatorSpec& op, const AcceleratorConfig& accel, bool wide_output);

/// Grows K, then M, then N by W in round-robin while the tile fits.
TilingPlan greedy_tiles(const OperatorSpec& op, const AcceleratorConfig& accel, bool wide_output);

/// Minimum-latency tile over a candidate grid (powers of two times W, plus the
/// padded extent and its even splits). Ties go to lower energy, then to the
/// lexicographically smallest (m, k, n).
TilingPlan best_tiles(const OperatorSpec& op, const AcceleratorConfig& accel, bool wide_output);

/// Power-of-two multiples of W below the padded extent, the padded extent
/// itself and its splits into 2..8 parts (rounded up to W).
std::vector<std::int64_t> tile_candidates(std::int64_t extent, std::int64_t W);

enum class TilePolicy { Square, Greedy, Best };

std::string_view to_string(TilePolicy p);
TilePolicy tile_policy_from_string(std::string_view s);

/// Dispatches on policy. Non-matmul operators get an unused default plan.
TilingPlan plan_for(const OperatorSpec& op, const AcceleratorConfig& accel, TilePolicy policy);

// -----------------------------------------------------------------------------
// Cost
// -----------------------------------------------------------------------------

struct Traffic {
    double dram = 0;
    double scratchpad = 0;
    double accumulator = 0;
};

struct CostReport {
    double latency = 0;         ///< cycles
    double energy = 0;          ///< MAC units
    double edp = 0;             ///< latency × energy
    double compute_cycles = 0;  ///< Σ per-tile compute
    double memory_cycles = 0;   ///< Σ per-tile memory
    Traffic traffic;
    bool compute_bound = true;  ///< compute_cycles ≥ memory_cycles
};

/// Tiled output-stationary cost of a GEMM without energy. Tile sizes need
/// not be multiples of W; out_bytes = 0 models an output kept on chip.
CostReport tiled_gemm_cost(const GemmShape& g, std::int64_t tm, std::int64_t tk, std::int64_t tn,
                           const AcceleratorConfig& accel);

/// Latency, traffic and energy for one operator (all repeats).
CostReport op_cost(const OperatorSpec& op, const TilingPlan& plan, const AcceleratorConfig& accel);

/// Same as op_cost(...).latency; kept for symmetry with op_energy.
double op_latency(const OperatorSpec& op, const TilingPlan& plan, const AcceleratorConfig& accel);
double op_energy(const OperatorSpec& op, const TilingPlan& plan, const AcceleratorConfig& accel);

/// flops / DRAM traffic; 0 when there is no traffic.
double nonideal_intensity(const OperatorSpec& op, const TilingPlan& plan,
                          const AcceleratorConfig& accel);

/// Energy from a FLOP count and a traffic breakdown.
double energy_of(double flops, const Traffic& t, const EnergyTable& e);

// -----------------------------------------------------------------------------
// Model-level analyses
// -----------------------------------------------------------------------------

struct OpCost {
    OperatorSpec op;
    TilingPlan plan;
    CostReport cost;
    double ideal_intensity = 0;
    double nonideal_intensity = 0;
};

/// Every operator of model_ops(cfg, WidePreNonlinear), unfused.
std::vector<OpCost> model_costs(const ModelConfig& cfg, const AcceleratorConfig& accel,
                                TilePolicy policy = TilePolicy::Square);

struct LatencyShare {
    std::string category;
    double cycles = 0;
    double share = 0;  ///< fraction of total
};

struct LatencyBreakdown {
    std::vector<LatencyShare> per_category;  ///< canonical order, present categories only
    double total = 0;
    double energy = 0;

    const LatencyShare* category(std::string_view name) const;
};

LatencyBreakdown latency_breakdown(const ModelConfig& cfg, const AcceleratorConfig& accel,
                                   TilePolicy policy = TilePolicy::Square);
LatencyBreakdown latency_breakdown(const std::vector<OpCost>& costs);

struct MemorySplit {
    std::int64_t scratchpad_bytes = 0;
    std::int64_t accumulator_bytes = 0;
};

struct SplitResult {
    MemorySplit split;
    bool feasible = true;
    std::string reason;        ///< set when infeasible
    double matmul_latency = 0;  ///< cycles over Matmul / Conv operators
};

struct SplitSweep {
    std::vector<SplitResult> results;
    std::size_t best = 0;  ///< index of the feasible argmin; results.size() if none
};

/// Each split must sum to total_sram (ConfigError otherwise). Infeasible
/// splits are flagged and skipped for the argmin.
SplitSweep memory_split_sweep(const ModelConfig& cfg, const AcceleratorConfig& base,
                              std::int64_t total_sram, const std::vector<MemorySplit>& splits,
                              TilePolicy policy = TilePolicy::Best);

}  // namespace tfperf
