// mapspace.hpp: loop-nest mappings: representation, sampling, cost, statistics
// =============================================================================
//
// A mapping splits each loop of a nest into three factors
//
//     extent ≤ spatial · local · dram  (= extent padded to the spatial factor)
//
// and orders the loops at each of the two temporal levels. The spatial factor
// unrolls one dimension across PE rows and one across PE columns:
//
//     matmul  M -> rows, N -> cols
//     conv    in_ch -> rows, out_ch -> cols
//
// DRAM traffic per tensor is its size times the trip counts of irrelevant
// loops that sit outside the innermost relevant loop (loops with a trip count
// of 1 are ignored). The local level is costed the same way against the
// scratchpad and accumulator.
//
// =============================================================================
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tfperf/hwmodel.hpp"
#include "tfperf/workload.hpp"

namespace tfperf {

struct LoopDim {
    std::string name;
    std::int64_t extent = 1;
};

struct LoopNest {
    enum class Kind { Matmul, Conv };

    Kind kind = Kind::Matmul;
    /// Matmul: M, K, N. Conv: out_ch, in_ch, kernel_h, kernel_w, out_h, out_w.
    std::vector<LoopDim> dims;
    std::int64_t stride = 1;  ///< conv only
    int a_bytes = 1;          ///< matmul A / conv weights
    int b_bytes = 1;          ///< matmul B / conv input
    int out_bytes = 1;

    /// Throws ConfigError on bad extents or duplicate names.
    void validate() const;

    std::size_t rank() const { return dims.size(); }
    /// Index of the dims unrolled across PE rows / columns.
    std::size_t row_dim() const;
    std::size_t col_dim() const;
    std::int64_t macs() const;
};

LoopNest matmul_nest(std::int64_t m, std::int64_t k, std::int64_t n, int a_bytes = 1, int b_bytes = 1,
                     int out_bytes = 1);
LoopNest conv_nest(const Conv& c, int w_bytes = 1, int in_bytes = 1, int out_bytes = 1);
/// Matmul or Conv operator (repeat ignored). Throws ConfigError otherwise.
LoopNest nest_from_op(const OperatorSpec& op);

struct LevelMapping {
    std::vector<std::int64_t> factors;  ///< one per dim
    std::vector<std::size_t> order;     ///< outermost first; a permutation of dim indices

    bool operator==(const LevelMapping&) const = default;
};

struct Mapping {
    std::vector<std::int64_t> spatial;  ///< one per dim; 1 except the row/col dims
    LevelMapping dram;
    LevelMapping local;

    /// Canonical encoding used for lexicographic tie-breaks.
    std::vector<std::int64_t> encode() const;
    bool operator==(const Mapping&) const = default;
};

/// Every violated constraint, empty if the mapping is valid.
std::vector<std::string> validate(const Mapping& m, const LoopNest& nest, const AcceleratorConfig& accel);

/// Rejection sampling; deterministic per seed. Throws InfeasibleError when no
/// mapping can fit the accelerator.
Mapping random_mapping(const LoopNest& nest, const AcceleratorConfig& accel, std::uint64_t seed);
Mapping random_mapping(const LoopNest& nest, const AcceleratorConfig& accel, std::mt19937_64& rng);

/// Throws ConfigError listing the violations of an invalid mapping.
CostReport evaluate(const Mapping& m, const LoopNest& nest, const AcceleratorConfig& accel);

struct BestMapping {
    Mapping mapping;
    CostReport cost;
    std::uint64_t examined = 0;  ///< valid mappings evaluated
};

/// Number of (spatial, local, dram, permutation) combinations, valid or not.
double mapspace_size(const LoopNest& nest, const AcceleratorConfig& accel);

/// Enumerates the whole mapspace; ties broken by Mapping::encode(). Throws
/// ConfigError when the mapspace exceeds `guard` combinations.
BestMapping exhaustive_best(const LoopNest& nest, const AcceleratorConfig& accel, double guard = 1e7);

struct MapspaceStats {
    std::size_t n_samples = 0;
    double min_edp = 0;
    std::vector<double> edps;           ///< in sample order
    std::vector<double> relative_edps;  ///< edp / min_edp, in sample order
    std::vector<double> cdf;            ///< relative_edps sorted ascending
    double p10 = 1;

    /// Fraction of samples with relative EDP strictly below k.
    double frac_within(double k) const;
    /// max relative EDP.
    double spread() const;
};

struct SampleRecord {
    std::size_t index = 0;
    CostReport cost;
};

/// Sample i uses its own generator seeded from (seed, i), so results do not
/// depend on evaluation order or thread count.
std::vector<SampleRecord> sample_mappings(const LoopNest& nest, const AcceleratorConfig& accel,
                                          std::size_t n, std::uint64_t seed);
MapspaceStats stats_from(const std::vector<SampleRecord>& samples);
MapspaceStats sample_stats(const LoopNest& nest, const AcceleratorConfig& accel, std::size_t n,
                           std::uint64_t seed);

struct MatchedDims {
    std::int64_t d_mha = 0;
    std::int64_t d_ffn_hidden = 0;
};

/// Transformer widths whose projection MACs match the conv: d²·l and
/// ratio·d'²·l, both rounded to the nearest integer.
MatchedDims matched_mac_dims(const OperatorSpec& conv, std::int64_t seq_len, double ffn_ratio = 4.0);

/// Named nests: bert.qk, bert.sv, bert.proj, bert.ffn1, bert.ffn2,
/// resnet.conv1, resnet.conv3x3_512, resnet.conv1x1_2048, matched.mha,
/// matched.ffn; or explicit "mm:M,K,N" / "conv:k,in,out,h,w,stride".
LoopNest named_nest(std::string_view name, std::int64_t seq_len = 512);
std::vector<std::string> nest_names();

/// splitmix64 of (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace tfperf
