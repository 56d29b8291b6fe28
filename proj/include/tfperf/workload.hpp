// workload.hpp: operator graphs and ideal FLOPs / MOPs / arithmetic intensity
// =============================================================================
//
// Builds per-layer operator lists for Transformer encoders, KV-cached
// Transformer decoders and ResNet-50, and profiles them under the ideal
// memory model: every distinct tensor crosses the DRAM boundary exactly once
// at its declared precision.
//
// Matmul orientation follows the usual accelerator convention: an M×K
// operand A times a K×N operand B gives an M×N output. Projections put the
// weight matrix in A (M = output features) and the token activations in B
// (N = sequence length).
//
// =============================================================================
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tfperf {

enum class Mode { Encoder, Decoder, Cnn };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct ModelConfig {
    std::string name = "custom";
    std::int64_t layers = 12;
    std::int64_t d = 768;
    std::int64_t heads = 12;
    std::int64_t d_ffn = 3072;
    std::int64_t seq_len = 128;
    Mode mode = Mode::Encoder;
    int act_bytes = 1;
    int weight_bytes = 1;
    int accum_bytes = 4;  ///< partial sums / outputs that feed Softmax or LayerNorm

    std::int64_t head_dim() const { return d / heads; }

    /// Throws ConfigError listing every violated invariant.
    void validate() const;
};

/// "bert-base", "bert-large", "gpt2", "resnet50". Throws ConfigError otherwise.
ModelConfig model_preset(std::string_view name);
std::vector<std::string> model_preset_names();

enum class OperatorClass {
    MhaProjection,
    ActToAct,
    FfnProjection,
    Nonlinear,
    Convolution,
    Pooling,
    ResidualAdd,
    Classifier,
};

std::string_view to_string(OperatorClass c);

enum class NonlinearFn { None, Softmax, LayerNorm, Gelu, BatchNorm, Relu };

std::string_view to_string(NonlinearFn f);

// -----------------------------------------------------------------------------
// Operator kinds
// -----------------------------------------------------------------------------

struct Matmul {
    std::int64_t m = 1;
    std::int64_t k = 1;
    std::int64_t n = 1;
    /// Projections add a bias per output, so they cost 2·M·K·N FLOPs.
    /// Act-to-act products do not: M·N·(2K − 1).
    bool bias = true;
};

/// One matrix-vector product per generated token; weights are re-read every
/// iteration because nothing is reused across tokens.
struct MatvecSeries {
    std::int64_t rows = 1;
    std::int64_t cols = 1;
    std::int64_t iterations = 1;
};

/// Per-head attention against a growing KV cache: step i (1-based) touches i
/// cached vectors of length head_dim.
struct KvCacheSeries {
    enum class Role { QueryKey, ScoreValue };
    std::int64_t head_dim = 1;
    std::int64_t steps = 1;
    Role role = Role::QueryKey;
};

struct Conv {
    std::int64_t kernel = 1;
    std::int64_t in_ch = 1;
    std::int64_t out_ch = 1;
    std::int64_t out_h = 1;
    std::int64_t out_w = 1;
    std::int64_t stride = 1;

    std::int64_t in_h() const { return out_h * stride; }
    std::int64_t in_w() const { return out_w * stride; }
    std::int64_t macs() const { return kernel * kernel * in_ch * out_ch * out_h * out_w; }
};

struct Elementwise {
    std::int64_t elements = 1;
    double flops_per_element = 1.0;
    int passes = 1;  ///< SFU sweeps over the vector (Softmax, LayerNorm: 3)
    int inputs = 1;  ///< distinct input tensors (residual add: 2)
    NonlinearFn fn = NonlinearFn::None;
    std::int64_t out_elements = 0;  ///< 0 means same as elements (pooling shrinks)

    std::int64_t outputs() const { return out_elements > 0 ? out_elements : elements; }
};

using OperatorKind = std::variant<Matmul, MatvecSeries, KvCacheSeries, Conv, Elementwise>;

struct OperatorSpec {
    std::string name;
    OperatorClass cls = OperatorClass::Nonlinear;
    OperatorKind kind = Elementwise{};
    std::int64_t repeat = 1;
    /// Bytes per element of each input tensor. Matmul-like kinds: {A, B}.
    /// Elementwise: one entry per input; the last entry repeats if short.
    std::vector<int> in_precisions = {1, 1};
    int out_precision = 1;

    /// Throws ConfigError if a shape field or repeat is < 1.
    void validate() const;

    int in_prec(std::size_t i) const;
    bool is_matmul_like() const;
    NonlinearFn nonlinear_fn() const;
};

// -----------------------------------------------------------------------------
// Graph builders
// -----------------------------------------------------------------------------

/// Ideal profiles keep activation precision everywhere; the hardware model
/// asks for wide (accum_bytes) outputs on operators feeding Softmax/LayerNorm.
enum class OutputPrecision { Ideal, WidePreNonlinear };

/// Per-layer overrides used by the architecture search.
struct LayerShape {
    std::int64_t heads = 12;
    std::int64_t d_ffn = 3072;
};

/// Twelve records per layer:
///   W_QKV (repeat 3), Q×K (repeat h), Softmax, S×V (repeat h), W_out,
///   residual, LayerNorm, W_1, GELU, W_2, residual, LayerNorm.
std::vector<OperatorSpec> encoder_ops(const ModelConfig& cfg,
                                      OutputPrecision prec = OutputPrecision::Ideal);

/// Encoder with heterogeneous layers. Head dim is floor(d / heads).
std::vector<OperatorSpec> encoder_ops(std::int64_t d, const std::vector<LayerShape>& layers,
                                      std::int64_t seq_len, int act_bytes, int weight_bytes,
                                      int accum_bytes,
                                      OutputPrecision prec = OutputPrecision::Ideal);

/// Same twelve-record layer structure with matrix-vector projections and a
/// KV cache; generation runs steps 1..l with no prompt.
std::vector<OperatorSpec> decoder_ops(const ModelConfig& cfg,
                                      OutputPrecision prec = OutputPrecision::Ideal);

std::vector<OperatorSpec> resnet50_ops(int act_bytes = 1, int weight_bytes = 1);

/// Dispatches on cfg.mode.
std::vector<OperatorSpec> model_ops(const ModelConfig& cfg,
                                    OutputPrecision prec = OutputPrecision::Ideal);

// -----------------------------------------------------------------------------
// Counting
// -----------------------------------------------------------------------------

/// Canonical encoding of everything cost-relevant (kind, dims, repeat,
/// precisions); the name and class are excluded.
std::string shape_key(const OperatorSpec& op);

double flops(const OperatorSpec& op);
double mops(const OperatorSpec& op);
double flops(const std::vector<OperatorSpec>& ops);
double mops(const std::vector<OperatorSpec>& ops);

/// flops / mops. Throws std::domain_error when mops == 0.
double intensity(double flops, double mops);

// -----------------------------------------------------------------------------
// Profiles
// -----------------------------------------------------------------------------

inline constexpr std::string_view kCatMhaProj = "MHA (projections)";
inline constexpr std::string_view kCatActToAct = "MHA (act-to-act matmuls)";
inline constexpr std::string_view kCatFfnProj = "FFN (projections)";
inline constexpr std::string_view kCatConv = "Convolution";
inline constexpr std::string_view kCatBatchNorm = "BatchNorm";
inline constexpr std::string_view kCatRelu = "ReLU";
inline constexpr std::string_view kCatOther = "Other";

/// Aggregation category. Transformer graphs only produce the three matmul
/// categories plus "Other"; CNN graphs add Convolution / BatchNorm / ReLU.
std::string_view category_of(const OperatorSpec& op);

struct OpRow {
    OperatorSpec op;
    double flops = 0;
    double mops = 0;
    double intensity = 0;  ///< 0 when mops == 0
};

struct CategoryRow {
    std::string category;
    double flops = 0;
    double flops_pct = 0;
    double mops = 0;
    double mops_pct = 0;
    double intensity = 0;  ///< 0 when mops == 0
};

struct Totals {
    double flops = 0;
    double mops = 0;
    double intensity = 0;
};

struct WorkloadProfile {
    std::vector<OpRow> per_op;
    std::vector<CategoryRow> per_category;  ///< canonical order, present categories only
    Totals totals;

    /// nullptr if the category has no operators.
    const CategoryRow* category(std::string_view name) const;
};

/// Throws ConfigError on an empty list.
WorkloadProfile profile(const std::vector<OperatorSpec>& ops);

/// Folds BatchNorm into the preceding convolution (drops its FLOPs and MOPs)
/// and fuses ReLU (drops its MOPs, keeps its FLOPs).
WorkloadProfile fold_cnn_fusion(const WorkloadProfile& p);

}  // namespace tfperf
