#include "tfperf/workload.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <type_traits>

#include "tfperf/error.hpp"

namespace tfperf {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool valid_precision(int b) { return b == 1 || b == 2 || b == 4; }

// Nonlinear FLOP convention (per element):
//   Softmax   5  max, subtract, exp, sum, divide
//   LayerNorm 7  mean, variance(2), subtract, divide, scale+shift(2)
//   GELU      8
//   residual  1
constexpr double kSoftmaxFlops = 5.0;
constexpr double kLayerNormFlops = 7.0;
constexpr double kGeluFlops = 8.0;
constexpr double kResidualFlops = 1.0;

constexpr int kSoftmaxPasses = 3;
constexpr int kLayerNormPasses = 3;

struct LayerPrecisions {
    int act;
    int weight;
    int wide;  ///< output precision of operators that feed Softmax / LayerNorm
};

OperatorSpec make_matmul(std::string name, OperatorClass cls, std::int64_t m, std::int64_t k,
                         std::int64_t n, bool bias, std::int64_t repeat, int a_prec, int b_prec,
                         int out_prec) {
    OperatorSpec op;
    op.name = std::move(name);
    op.cls = cls;
    op.kind = Matmul{m, k, n, bias};
    op.repeat = repeat;
    op.in_precisions = {a_prec, b_prec};
    op.out_precision = out_prec;
    return op;
}

OperatorSpec make_elementwise(std::string name, OperatorClass cls, NonlinearFn fn,
                              std::int64_t elements, double fpe, int passes,
                              std::vector<int> in_precs, int out_prec) {
    OperatorSpec op;
    op.name = std::move(name);
    op.cls = cls;
    op.kind = Elementwise{elements, fpe, passes, static_cast<int>(in_precs.size()), fn, 0};
    op.repeat = 1;
    op.in_precisions = std::move(in_precs);
    op.out_precision = out_prec;
    return op;
}

OperatorSpec make_matvec(std::string name, OperatorClass cls, std::int64_t rows, std::int64_t cols,
                         std::int64_t iterations, std::int64_t repeat, int w_prec, int a_prec,
                         int out_prec) {
    OperatorSpec op;
    op.name = std::move(name);
    op.cls = cls;
    op.kind = MatvecSeries{rows, cols, iterations};
    op.repeat = repeat;
    op.in_precisions = {w_prec, a_prec};
    op.out_precision = out_prec;
    return op;
}

std::string layer_prefix(std::size_t i) { return "L" + std::to_string(i) + "."; }

void append_encoder_layer(std::vector<OperatorSpec>& out, std::size_t idx, std::int64_t d,
                          const LayerShape& ls, std::int64_t l, const LayerPrecisions& p) {
    const std::int64_t h = ls.heads;
    const std::int64_t dh = d / h;
    const std::string pre = layer_prefix(idx);
    const int a = p.act;
    const int w = p.weight;

    out.push_back(make_matmul(pre + "W_QKV", OperatorClass::MhaProjection, d, d, l, true, 3, w, a, a));
    out.push_back(make_matmul(pre + "QxK", OperatorClass::ActToAct, l, dh, l, false, h, a, a, p.wide));
    out.push_back(make_elementwise(pre + "Softmax", OperatorClass::Nonlinear, NonlinearFn::Softmax,
                                   h * l * l, kSoftmaxFlops, kSoftmaxPasses, {p.wide}, a));
    out.push_back(make_matmul(pre + "SxV", OperatorClass::ActToAct, dh, l, l, false, h, a, a, a));
    out.push_back(make_matmul(pre + "W_out", OperatorClass::MhaProjection, d, d, l, true, 1, w, a, p.wide));
    out.push_back(make_elementwise(pre + "Residual1", OperatorClass::ResidualAdd, NonlinearFn::None,
                                   d * l, kResidualFlops, 1, {p.wide, a}, p.wide));
    out.push_back(make_elementwise(pre + "LayerNorm1", OperatorClass::Nonlinear, NonlinearFn::LayerNorm,
                                   d * l, kLayerNormFlops, kLayerNormPasses, {p.wide}, a));
    out.push_back(make_matmul(pre + "W_1", OperatorClass::FfnProjection, ls.d_ffn, d, l, true, 1, w, a, a));
    out.push_back(make_elementwise(pre + "GELU", OperatorClass::Nonlinear, NonlinearFn::Gelu,
                                   ls.d_ffn * l, kGeluFlops, 1, {a}, a));
    out.push_back(make_matmul(pre + "W_2", OperatorClass::FfnProjection, d, ls.d_ffn, l, true, 1, w, a, p.wide));
    out.push_back(make_elementwise(pre + "Residual2", OperatorClass::ResidualAdd, NonlinearFn::None,
                                   d * l, kResidualFlops, 1, {p.wide, a}, p.wide));
    out.push_back(make_elementwise(pre + "LayerNorm2", OperatorClass::Nonlinear, NonlinearFn::LayerNorm,
                                   d * l, kLayerNormFlops, kLayerNormPasses, {p.wide}, a));
}

void append_decoder_layer(std::vector<OperatorSpec>& out, std::size_t idx, const ModelConfig& cfg,
                          const LayerPrecisions& p) {
    const std::int64_t d = cfg.d;
    const std::int64_t h = cfg.heads;
    const std::int64_t dh = cfg.head_dim();
    const std::int64_t l = cfg.seq_len;
    const std::int64_t cached = l * (l + 1) / 2;
    const std::string pre = layer_prefix(idx);
    const int a = p.act;
    const int w = p.weight;

    auto kv = [&](std::string name, KvCacheSeries::Role role, int out_prec) {
        OperatorSpec op;
        op.name = std::move(name);
        op.cls = OperatorClass::ActToAct;
        op.kind = KvCacheSeries{dh, l, role};
        op.repeat = h;
        op.in_precisions = {a, a};
        op.out_precision = out_prec;
        return op;
    };

    out.push_back(make_matvec(pre + "W_QKV", OperatorClass::MhaProjection, d, d, l, 3, w, a, a));
    out.push_back(kv(pre + "QxK", KvCacheSeries::Role::QueryKey, p.wide));
    out.push_back(make_elementwise(pre + "Softmax", OperatorClass::Nonlinear, NonlinearFn::Softmax,
                                   h * cached, kSoftmaxFlops, kSoftmaxPasses, {p.wide}, a));
    out.push_back(kv(pre + "SxV", KvCacheSeries::Role::ScoreValue, a));
    out.push_back(make_matvec(pre + "W_out", OperatorClass::MhaProjection, d, d, l, 1, w, a, p.wide));
    out.push_back(make_elementwise(pre + "Residual1", OperatorClass::ResidualAdd, NonlinearFn::None,
                                   d * l, kResidualFlops, 1, {p.wide, a}, p.wide));
    out.push_back(make_elementwise(pre + "LayerNorm1", OperatorClass::Nonlinear, NonlinearFn::LayerNorm,
                                   d * l, kLayerNormFlops, kLayerNormPasses, {p.wide}, a));
    out.push_back(make_matvec(pre + "W_1", OperatorClass::FfnProjection, cfg.d_ffn, d, l, 1, w, a, a));
    out.push_back(make_elementwise(pre + "GELU", OperatorClass::Nonlinear, NonlinearFn::Gelu,
                                   cfg.d_ffn * l, kGeluFlops, 1, {a}, a));
    out.push_back(make_matvec(pre + "W_2", OperatorClass::FfnProjection, d, cfg.d_ffn, l, 1, w, a, p.wide));
    out.push_back(make_elementwise(pre + "Residual2", OperatorClass::ResidualAdd, NonlinearFn::None,
                                   d * l, kResidualFlops, 1, {p.wide, a}, p.wide));
    out.push_back(make_elementwise(pre + "LayerNorm2", OperatorClass::Nonlinear, NonlinearFn::LayerNorm,
                                   d * l, kLayerNormFlops, kLayerNormPasses, {p.wide}, a));
}

LayerPrecisions precisions_for(int act, int weight, int accum, OutputPrecision prec) {
    return {act, weight, prec == OutputPrecision::WidePreNonlinear ? accum : act};
}

}  // namespace

// -----------------------------------------------------------------------------
// Names
// -----------------------------------------------------------------------------

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::Encoder: return "encoder";
        case Mode::Decoder: return "decoder";
        case Mode::Cnn: return "cnn";
    }
    return "?";
}

Mode mode_from_string(std::string_view s) {
    if (s == "encoder" || s == "Encoder") return Mode::Encoder;
    if (s == "decoder" || s == "Decoder") return Mode::Decoder;
    if (s == "cnn" || s == "Cnn") return Mode::Cnn;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected encoder|decoder|cnn)");
}

std::string_view to_string(OperatorClass c) {
    switch (c) {
        case OperatorClass::MhaProjection: return "MhaProjection";
        case OperatorClass::ActToAct: return "ActToAct";
        case OperatorClass::FfnProjection: return "FfnProjection";
        case OperatorClass::Nonlinear: return "Nonlinear";
        case OperatorClass::Convolution: return "Convolution";
        case OperatorClass::Pooling: return "Pooling";
        case OperatorClass::ResidualAdd: return "ResidualAdd";
        case OperatorClass::Classifier: return "Classifier";
    }
    return "?";
}

std::string_view to_string(NonlinearFn f) {
    switch (f) {
        case NonlinearFn::None: return "none";
        case NonlinearFn::Softmax: return "softmax";
        case NonlinearFn::LayerNorm: return "layernorm";
        case NonlinearFn::Gelu: return "gelu";
        case NonlinearFn::BatchNorm: return "batchnorm";
        case NonlinearFn::Relu: return "relu";
    }
    return "?";
}

// -----------------------------------------------------------------------------
// ModelConfig
// -----------------------------------------------------------------------------

void ModelConfig::validate() const {
    std::vector<std::string> errs;
    if (mode != Mode::Cnn) {
        if (layers < 1) errs.push_back("layers must be >= 1");
        if (d < 1) errs.push_back("d must be >= 1");
        if (heads < 1) errs.push_back("heads must be >= 1");
        if (d_ffn < 1) errs.push_back("d_ffn must be >= 1");
        if (seq_len < 1) errs.push_back("seq_len must be >= 1");
        if (d >= 1 && heads >= 1 && d % heads != 0) errs.push_back("d must be divisible by heads");
    }
    if (!valid_precision(act_bytes)) errs.push_back("act_bytes must be 1, 2 or 4");
    if (!valid_precision(weight_bytes)) errs.push_back("weight_bytes must be 1, 2 or 4");
    if (!valid_precision(accum_bytes)) errs.push_back("accum_bytes must be 1, 2 or 4");
    if (errs.empty()) return;
    std::string msg = "invalid model config '" + name + "': ";
    for (std::size_t i = 0; i < errs.size(); ++i) msg += (i ? "; " : "") + errs[i];
    throw ConfigError(msg);
}

ModelConfig model_preset(std::string_view name) {
    ModelConfig c;
    c.name = std::string(name);
    if (name == "bert-base") {
        c.layers = 12, c.d = 768, c.heads = 12, c.d_ffn = 3072, c.mode = Mode::Encoder;
    } else if (name == "bert-large") {
        c.layers = 24, c.d = 1024, c.heads = 16, c.d_ffn = 4096, c.mode = Mode::Encoder;
    } else if (name == "gpt2") {
        c.layers = 12, c.d = 768, c.heads = 12, c.d_ffn = 3072, c.mode = Mode::Decoder;
    } else if (name == "resnet50") {
        c.layers = 50, c.d = 1, c.heads = 1, c.d_ffn = 1, c.seq_len = 1, c.mode = Mode::Cnn;
    } else {
        throw ConfigError("unknown model preset '" + std::string(name) + "'");
    }
    return c;
}

std::vector<std::string> model_preset_names() { return {"bert-base", "bert-large", "gpt2", "resnet50"}; }

// -----------------------------------------------------------------------------
// OperatorSpec
// -----------------------------------------------------------------------------

void OperatorSpec::validate() const {
    auto need = [&](std::int64_t v, const char* field) {
        if (v < 1) throw ConfigError("operator '" + name + "': " + field + " must be >= 1");
    };
    need(repeat, "repeat");
    std::visit(Overloaded{
                   [&](const Matmul& m) { need(m.m, "M"), need(m.k, "K"), need(m.n, "N"); },
                   [&](const MatvecSeries& m) {
                       need(m.rows, "rows"), need(m.cols, "cols");
                       if (m.iterations < 0) throw ConfigError("operator '" + name + "': negative iterations");
                   },
                   [&](const KvCacheSeries& k) {
                       need(k.head_dim, "head_dim");
                       if (k.steps < 0) throw ConfigError("operator '" + name + "': negative steps");
                   },
                   [&](const Conv& c) {
                       need(c.kernel, "kernel"), need(c.in_ch, "in_ch"), need(c.out_ch, "out_ch");
                       need(c.out_h, "out_h"), need(c.out_w, "out_w"), need(c.stride, "stride");
                   },
                   [&](const Elementwise& e) {
                       if (e.elements < 0) throw ConfigError("operator '" + name + "': negative elements");
                       need(e.passes, "passes"), need(e.inputs, "inputs");
                   },
               },
               kind);
    if (in_precisions.empty()) throw ConfigError("operator '" + name + "': no input precisions");
    for (int p : in_precisions)
        if (!valid_precision(p)) throw ConfigError("operator '" + name + "': bad input precision");
    if (!valid_precision(out_precision)) throw ConfigError("operator '" + name + "': bad output precision");
}

int OperatorSpec::in_prec(std::size_t i) const {
    if (in_precisions.empty()) return 1;
    return in_precisions[std::min(i, in_precisions.size() - 1)];
}

bool OperatorSpec::is_matmul_like() const {
    return std::holds_alternative<Matmul>(kind) || std::holds_alternative<Conv>(kind);
}

NonlinearFn OperatorSpec::nonlinear_fn() const {
    if (const auto* e = std::get_if<Elementwise>(&kind)) return e->fn;
    return NonlinearFn::None;
}

// -----------------------------------------------------------------------------
// Builders
// -----------------------------------------------------------------------------

std::vector<OperatorSpec> encoder_ops(const ModelConfig& cfg, OutputPrecision prec) {
    cfg.validate();
    if (cfg.mode != Mode::Encoder) throw ConfigError("encoder_ops requires an encoder config");
    std::vector<LayerShape> layers(static_cast<std::size_t>(cfg.layers), LayerShape{cfg.heads, cfg.d_ffn});
    return encoder_ops(cfg.d, layers, cfg.seq_len, cfg.act_bytes, cfg.weight_bytes, cfg.accum_bytes, prec);
}

std::vector<OperatorSpec> encoder_ops(std::int64_t d, const std::vector<LayerShape>& layers,
                                      std::int64_t seq_len, int act_bytes, int weight_bytes,
                                      int accum_bytes, OutputPrecision prec) {
    if (layers.empty()) throw ConfigError("encoder needs at least one layer");
    if (d < 1 || seq_len < 1) throw ConfigError("encoder needs d >= 1 and seq_len >= 1");
    for (const auto& ls : layers) {
        if (ls.heads < 1 || ls.d_ffn < 1) throw ConfigError("layer heads and d_ffn must be >= 1");
        if (d / ls.heads < 1) throw ConfigError("head dimension d / heads must be >= 1");
    }
    const auto p = precisions_for(act_bytes, weight_bytes, accum_bytes, prec);
    std::vector<OperatorSpec> out;
    out.reserve(layers.size() * 12);
    for (std::size_t i = 0; i < layers.size(); ++i) append_encoder_layer(out, i, d, layers[i], seq_len, p);
    return out;
}

std::vector<OperatorSpec> decoder_ops(const ModelConfig& cfg, OutputPrecision prec) {
    cfg.validate();
    if (cfg.mode != Mode::Decoder) throw ConfigError("decoder_ops requires a decoder config");
    const auto p = precisions_for(cfg.act_bytes, cfg.weight_bytes, cfg.accum_bytes, prec);
    std::vector<OperatorSpec> out;
    out.reserve(static_cast<std::size_t>(cfg.layers) * 12);
    for (std::int64_t i = 0; i < cfg.layers; ++i) append_decoder_layer(out, static_cast<std::size_t>(i), cfg, p);
    return out;
}

std::vector<OperatorSpec> model_ops(const ModelConfig& cfg, OutputPrecision prec) {
    switch (cfg.mode) {
        case Mode::Encoder: return encoder_ops(cfg, prec);
        case Mode::Decoder: return decoder_ops(cfg, prec);
        case Mode::Cnn:
            cfg.validate();
            return resnet50_ops(cfg.act_bytes, cfg.weight_bytes);
    }
    throw ConfigError("unknown mode");
}

// -----------------------------------------------------------------------------
// Counting
// -----------------------------------------------------------------------------

std::string shape_key(const OperatorSpec& op) {
    std::string key = std::visit(
        Overloaded{
            [](const Matmul& m) {
                return "mm:" + std::to_string(m.m) + "x" + std::to_string(m.k) + "x" + std::to_string(m.n) +
                       (m.bias ? "b" : "");
            },
            [](const MatvecSeries& m) {
                return "mv:" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + "@" +
                       std::to_string(m.iterations);
            },
            [](const KvCacheSeries& k) {
                return std::string(k.role == KvCacheSeries::Role::QueryKey ? "kq:" : "kv:") +
                       std::to_string(k.head_dim) + "@" + std::to_string(k.steps);
            },
            [](const Conv& c) {
                return "cv:" + std::to_string(c.kernel) + "," + std::to_string(c.in_ch) + "," +
                       std::to_string(c.out_ch) + "," + std::to_string(c.out_h) + "," +
                       std::to_string(c.out_w) + "," + std::to_string(c.stride);
            },
            [](const Elementwise& e) {
                char fpe[32];
                std::snprintf(fpe, sizeof fpe, "%.17g", e.flops_per_element);
                return "ew:" + std::to_string(e.elements) + "," + fpe + "," + std::to_string(e.passes) + "," +
                       std::to_string(e.inputs) + "," + std::to_string(e.outputs()) + "," +
                       std::string(to_string(e.fn));
            },
        },
        op.kind);
    key += "|r" + std::to_string(op.repeat) + "|p";
    for (int p : op.in_precisions) key += std::to_string(p);
    key += ">" + std::to_string(op.out_precision);
    return key;
}

double flops(const OperatorSpec& op) {
    const double r = static_cast<double>(op.repeat);
    return std::visit(
        Overloaded{
            [&](const Matmul& m) {
                const double mn = static_cast<double>(m.m) * static_cast<double>(m.n);
                const double per_out = m.bias ? 2.0 * static_cast<double>(m.k) : 2.0 * static_cast<double>(m.k) - 1.0;
                return mn * per_out * r;
            },
            [&](const MatvecSeries& m) {
                return 2.0 * static_cast<double>(m.rows) * static_cast<double>(m.cols) *
                       static_cast<double>(m.iterations) * r;
            },
            [&](const KvCacheSeries& k) {
                const double cached = static_cast<double>(k.steps) * static_cast<double>(k.steps + 1) / 2.0;
                return 2.0 * static_cast<double>(k.head_dim) * cached * r;
            },
            [&](const Conv& c) { return 2.0 * static_cast<double>(c.macs()) * r; },
            [&](const Elementwise& e) { return static_cast<double>(e.elements) * e.flops_per_element * r; },
        },
        op.kind);
}

double mops(const OperatorSpec& op) {
    const double r = static_cast<double>(op.repeat);
    const double o = op.out_precision;
    const double p0 = op.in_prec(0);
    const double p1 = op.in_prec(1);
    return std::visit(
        Overloaded{
            [&](const Matmul& m) {
                const double M = static_cast<double>(m.m), K = static_cast<double>(m.k), N = static_cast<double>(m.n);
                return (M * K * p0 + K * N * p1 + M * N * o) * r;
            },
            [&](const MatvecSeries& m) {
                const double rows = static_cast<double>(m.rows), cols = static_cast<double>(m.cols);
                return static_cast<double>(m.iterations) * (rows * cols * p0 + cols * p1 + rows * o) * r;
            },
            [&](const KvCacheSeries& k) {
                const double l = static_cast<double>(k.steps);
                const double dh = static_cast<double>(k.head_dim);
                const double cached = l * (l + 1.0) / 2.0;
                if (k.role == KvCacheSeries::Role::QueryKey)
                    return (l * dh * p0 + cached * dh * p1 + cached * o) * r;  // q, K cache, scores
                return (cached * p0 + cached * dh * p1 + l * dh * o) * r;      // probs, V cache, out
            },
            [&](const Conv& c) {
                const double w = static_cast<double>(c.kernel * c.kernel * c.in_ch * c.out_ch);
                const double in = static_cast<double>(c.in_ch * c.in_h() * c.in_w());
                const double out = static_cast<double>(c.out_ch * c.out_h * c.out_w);
                return (w * p0 + in * p1 + out * o) * r;
            },
            [&](const Elementwise& e) {
                double bytes = 0;
                for (int i = 0; i < e.inputs; ++i)
                    bytes += static_cast<double>(e.elements) * op.in_prec(static_cast<std::size_t>(i));
                bytes += static_cast<double>(e.outputs()) * o;
                return bytes * r;
            },
        },
        op.kind);
}

double flops(const std::vector<OperatorSpec>& ops) {
    double s = 0;
    for (const auto& op : ops) s += flops(op);
    return s;
}

double mops(const std::vector<OperatorSpec>& ops) {
    double s = 0;
    for (const auto& op : ops) s += mops(op);
    return s;
}

double intensity(double f, double m) {
    if (m == 0) throw std::domain_error("arithmetic intensity undefined: zero memory operations");
    return f / m;
}

// -----------------------------------------------------------------------------
// Profiles
// -----------------------------------------------------------------------------

std::string_view category_of(const OperatorSpec& op) {
    switch (op.cls) {
        case OperatorClass::MhaProjection: return kCatMhaProj;
        case OperatorClass::ActToAct: return kCatActToAct;
        case OperatorClass::FfnProjection: return kCatFfnProj;
        case OperatorClass::Convolution: return kCatConv;
        case OperatorClass::Nonlinear:
            if (op.nonlinear_fn() == NonlinearFn::BatchNorm) return kCatBatchNorm;
            if (op.nonlinear_fn() == NonlinearFn::Relu) return kCatRelu;
            return kCatOther;
        case OperatorClass::Pooling:
        case OperatorClass::ResidualAdd:
        case OperatorClass::Classifier: return kCatOther;
    }
    return kCatOther;
}

const CategoryRow* WorkloadProfile::category(std::string_view name) const {
    for (const auto& c : per_category)
        if (c.category == name) return &c;
    return nullptr;
}

namespace {

double safe_ratio(double f, double m) { return m > 0 ? f / m : 0.0; }

WorkloadProfile aggregate(std::vector<OpRow> rows) {
    static constexpr std::array<std::string_view, 7> kOrder = {
        kCatMhaProj, kCatActToAct, kCatFfnProj, kCatConv, kCatBatchNorm, kCatRelu, kCatOther};

    WorkloadProfile p;
    std::map<std::string_view, std::pair<double, double>> sums;
    for (const auto& r : rows) {
        auto& s = sums[category_of(r.op)];
        s.first += r.flops;
        s.second += r.mops;
        p.totals.flops += r.flops;
        p.totals.mops += r.mops;
    }
    p.totals.intensity = safe_ratio(p.totals.flops, p.totals.mops);
    for (auto cat : kOrder) {
        auto it = sums.find(cat);
        if (it == sums.end()) continue;
        CategoryRow c;
        c.category = std::string(cat);
        c.flops = it->second.first;
        c.mops = it->second.second;
        c.flops_pct = p.totals.flops > 0 ? 100.0 * c.flops / p.totals.flops : 0.0;
        c.mops_pct = p.totals.mops > 0 ? 100.0 * c.mops / p.totals.mops : 0.0;
        c.intensity = safe_ratio(c.flops, c.mops);
        p.per_category.push_back(std::move(c));
    }
    p.per_op = std::move(rows);
    return p;
}

}  // namespace

WorkloadProfile profile(const std::vector<OperatorSpec>& ops) {
    if (ops.empty()) throw ConfigError("cannot profile an empty operator list");
    std::vector<OpRow> rows;
    rows.reserve(ops.size());
    for (const auto& op : ops) {
        op.validate();
        const double f = flops(op);
        const double m = mops(op);
        rows.push_back(OpRow{op, f, m, safe_ratio(f, m)});
    }
    return aggregate(std::move(rows));
}

WorkloadProfile fold_cnn_fusion(const WorkloadProfile& p) {
    std::vector<OpRow> rows;
    rows.reserve(p.per_op.size());
    for (const auto& r : p.per_op) {
        const auto fn = r.op.nonlinear_fn();
        if (fn == NonlinearFn::BatchNorm) continue;
        OpRow copy = r;
        if (fn == NonlinearFn::Relu) {
            copy.mops = 0;
            copy.intensity = 0;
        }
        rows.push_back(std::move(copy));
    }
    return aggregate(std::move(rows));
}

}  // namespace tfperf
