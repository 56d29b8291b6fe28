// fusion.hpp: matmul + Softmax / LayerNorm fusion under output residency
// =============================================================================
//
// A fused consumer needs complete vectors along its reduction dimension, so
// the producer's tile along that dimension must span the whole (padded)
// extent and those rows must stay in the accumulator. The 4-byte partial sums
// then never leave the chip: the SFU normalizes each finished output block
// while the array works on the next one.
//
// Pipeline with G equal output blocks, producer time p and consumer time s
// per block:
//
//     fused = max(G·p + s, p + G·s)
//
// The non-fused baseline is the best unconstrained producer tiling, storing
// 4-byte outputs, followed by a standalone consumer that streams them back.
//
// =============================================================================
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tfperf/hwmodel.hpp"
#include "tfperf/mapspace.hpp"
#include "tfperf/workload.hpp"

namespace tfperf {

enum class ReductionDim { M, N };

struct FusionPair {
    std::string name;
    OperatorSpec producer;  ///< Matmul
    OperatorSpec consumer;  ///< Elementwise Softmax or LayerNorm
    ReductionDim reduction = ReductionDim::N;

    /// Throws ConfigError if the invariants do not hold.
    void validate() const;
};

/// "qk-softmax", "wout-ln", "ffn2-ln" built from layer 0 of the encoder for
/// cfg (wide pre-nonlinear outputs).
FusionPair fusion_pair(std::string_view kind, const ModelConfig& cfg);
std::vector<std::string> pair_names();

struct FusionConstraints {
    ReductionDim reduction = ReductionDim::N;
    std::int64_t reduction_tile = 1;  ///< padded full extent
    std::int64_t max_co_tile = 1;     ///< largest co-tile the accumulator holds

    bool admits(const TilingPlan& plan) const;
    /// Local tile of the reduction dim spans the padded extent.
    bool admits(const Mapping& m, const LoopNest& nest) const;
};

/// Throws InfeasibleError when a single full-length row does not fit.
FusionConstraints fused_constraints(const FusionPair& pair, const AcceleratorConfig& accel);

enum class Verdict { FusionWins, FusionLoses };

std::string_view to_string(Verdict v);

struct FusionReport {
    double fused_latency = 0;
    double nonfused_latency = 0;
    double producer_latency = 0;      ///< best unconstrained producer, 4-byte store
    double fused_producer_latency = 0;
    double consumer_latency = 0;      ///< standalone consumer
    double fused_consumer_latency = 0;
    double producer_penalty = 1;      ///< fused producer / unconstrained producer
    double hidden_cycles = 0;
    double fused_dram = 0;
    double nonfused_dram = 0;
    double roundtrip_dram = 0;        ///< fused tiling, but outputs stored and re-read by the consumer
    TilingPlan producer_plan;
    TilingPlan fused_plan;
    Verdict verdict = Verdict::FusionLoses;
    bool feasible = true;
    std::string reason;
};

/// Costs both schedules. An infeasible fusion yields feasible = false,
/// verdict FusionLoses and the reason; the non-fused fields stay valid.
FusionReport eval_pair(const FusionPair& pair, const AcceleratorConfig& accel);

struct FusionCell {
    std::int64_t accumulator_bytes = 0;
    std::int64_t seq_len = 0;
    FusionReport report;
};

/// Cross product of accumulator sizes and sequence lengths; the pair is
/// rebuilt per sequence length from cfg. Infeasible cells are marked.
std::vector<FusionCell> fusion_sweep(std::string_view pair_kind, const ModelConfig& cfg,
                                     const AcceleratorConfig& accel,
                                     const std::vector<std::int64_t>& accum_sizes,
                                     const std::vector<std::int64_t>& seq_lens);

}  // namespace tfperf
