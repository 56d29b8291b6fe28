// archsearch.hpp: evolutionary hardware-aware Transformer architecture search
// =============================================================================
//
// Candidates are heterogeneous encoders (per-layer heads and FFN widths).
// Each is scored by a quality proxy (higher is better) and by EDP under the
// hardware model (lower is better); only the Pareto front survives a round
// and mutants of it refill the population.
//
// =============================================================================
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "tfperf/hwmodel.hpp"
#include "tfperf/workload.hpp"

namespace tfperf {

struct SearchSpace {
    std::vector<std::int64_t> layer_counts{3, 4, 5, 6};
    std::vector<std::int64_t> heads{4, 6, 8, 10, 12};
    std::vector<std::int64_t> model_dims{384, 480, 576, 672, 768};
    std::vector<std::int64_t> ffn_dims;  ///< 768..3072 step 128 by default

    SearchSpace();

    /// Throws ConfigError on empty or non-positive sets.
    void validate() const;
};

struct Candidate {
    std::int64_t layers = 1;
    std::int64_t d = 1;
    std::vector<std::int64_t> heads;  ///< per layer
    std::vector<std::int64_t> d_ffn;  ///< per layer
    double quality = 0;
    double latency = 0;
    double energy = 0;
    double edp = 0;
    bool evaluated = false;

    /// Throws ConfigError if list lengths differ from layers.
    void validate() const;
    bool in_space(const SearchSpace& s) const;
    std::vector<std::int64_t> encode() const;
    std::string to_string() const;
};

/// Largest architecture of the space: max of every set, uniform layers.
Candidate baseline_candidate(const SearchSpace& s);

Candidate sample_candidate(const SearchSpace& s, std::uint64_t seed);
Candidate sample_candidate(const SearchSpace& s, std::mt19937_64& rng);

/// Each gene (N, d, every h_i, every d_FFN_i) is resampled from its set with
/// probability p. A changed N truncates the per-layer lists or extends them
/// with freshly sampled layers. Evaluation fields are cleared.
Candidate mutate(const Candidate& c, const SearchSpace& s, double p, std::uint64_t seed);
Candidate mutate(const Candidate& c, const SearchSpace& s, double p, std::mt19937_64& rng);

/// Parameter count: per layer 4·(d² + d) attention, 2·d·d_FFN + d_FFN + d
/// feed-forward, 4·d for the two LayerNorms.
double quality_proxy(const Candidate& c);

using QualityFn = std::function<double(const Candidate&)>;

/// Encoder operators for the candidate at 8-bit precision with wide
/// pre-nonlinear outputs.
std::vector<OperatorSpec> candidate_ops(const Candidate& c, std::int64_t seq_len);

/// Thread-safe memo of per-operator costs keyed by canonical shape.
class CostCache {
public:
    CostCache(AcceleratorConfig accel, TilePolicy policy = TilePolicy::Square);

    CostReport get(const OperatorSpec& op);
    std::size_t size() const;
    std::uint64_t hits() const;
    std::uint64_t misses() const;
    const AcceleratorConfig& accel() const { return accel_; }
    TilePolicy policy() const { return policy_; }

private:
    AcceleratorConfig accel_;
    TilePolicy policy_;
    mutable std::mutex mu_;
    std::map<std::string, CostReport> table_;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
};

/// Direct (uncached) cost of one operator under the cache's policy.
CostReport direct_cost(const OperatorSpec& op, const AcceleratorConfig& accel, TilePolicy policy);

struct CandidateCost {
    double latency = 0;
    double energy = 0;
    double edp = 0;  ///< latency × energy, summed over operators first
};

CandidateCost candidate_cost(const Candidate& c, CostCache& cache, std::int64_t seq_len = 512);
double candidate_edp(const Candidate& c, CostCache& cache, std::int64_t seq_len = 512);

/// Non-dominated set over (maximize quality, minimize edp), sorted by edp
/// ascending. Exact duplicates keep the smallest encoding.
std::vector<Candidate> pareto(const std::vector<Candidate>& points);

/// true if a dominates b.
bool dominates(const Candidate& a, const Candidate& b);

struct EvolveOptions {
    std::size_t population = 40;
    std::size_t rounds = 40;
    double mutation = 0.2;
    std::uint64_t seed = 1;
    std::int64_t seq_len = 512;
    QualityFn quality = quality_proxy;
};

struct TraceRow {
    std::size_t round = 0;
    double best_edp = 0;
    std::size_t front_size = 0;
};

struct EvolveResult {
    std::vector<Candidate> front;
    std::vector<TraceRow> trace;
    std::vector<Candidate> initial_population;  ///< evaluated
    std::vector<std::string> discarded;          ///< reasons for dropped candidates
};

EvolveResult evolve(const SearchSpace& s, CostCache& cache, const EvolveOptions& opt);

/// Re-scores candidates with best_tiles (the high-fidelity pass).
std::vector<CandidateCost> rescore(const std::vector<Candidate>& cs, const AcceleratorConfig& accel,
                                   std::int64_t seq_len = 512);

}  // namespace tfperf
