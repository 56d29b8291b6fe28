#include "tfperf/workload.hpp"

namespace tfperf {

namespace {

constexpr double kBatchNormFlops = 2.0;  // folded scale + shift
constexpr double kReluFlops = 1.0;
constexpr double kSoftmaxFlops = 5.0;

struct ConvRow {
    const char* name;
    std::int64_t kernel, in_ch, out_ch, res, repeat;
};

// Bottleneck rows aggregated over block repetitions. The first 1×1 of stages
// 3-5 is listed separately because it reads the previous stage's wider map.
constexpr ConvRow kRows[] = {
    {"conv2.1x1a", 1, 256, 64, 56, 3},
    {"conv2.3x3", 3, 64, 64, 56, 3},
    {"conv2.1x1b", 1, 64, 256, 56, 3},
    {"conv3.entry", 1, 256, 128, 56, 1},
    {"conv3.1x1a", 1, 512, 128, 28, 3},
    {"conv3.3x3", 3, 128, 128, 28, 4},
    {"conv3.1x1b", 1, 128, 512, 28, 4},
    {"conv4.entry", 1, 512, 256, 28, 1},
    {"conv4.1x1a", 1, 1024, 256, 14, 5},
    {"conv4.3x3", 3, 256, 256, 14, 6},
    {"conv4.1x1b", 1, 256, 1024, 14, 6},
    {"conv5.entry", 1, 1024, 512, 14, 1},
    {"conv5.1x1a", 1, 2048, 512, 7, 2},
    {"conv5.3x3", 3, 512, 512, 7, 3},
    {"conv5.1x1b", 1, 512, 2048, 7, 3},
};

struct ResidualRow {
    const char* name;
    std::int64_t ch, res, blocks;
};

constexpr ResidualRow kResiduals[] = {
    {"conv2.add", 256, 56, 3},
    {"conv3.add", 512, 28, 4},
    {"conv4.add", 1024, 14, 6},
    {"conv5.add", 2048, 7, 3},
};

OperatorSpec elementwise(std::string name, OperatorClass cls, NonlinearFn fn, std::int64_t elements,
                         double fpe, int inputs, int prec, std::int64_t out_elements = 0, int passes = 1) {
    OperatorSpec op;
    op.name = std::move(name);
    op.cls = cls;
    op.kind = Elementwise{elements, fpe, passes, inputs, fn, out_elements};
    op.in_precisions = {prec};
    op.out_precision = prec;
    return op;
}

void append_conv(std::vector<OperatorSpec>& out, const std::string& name, const Conv& c,
                 std::int64_t repeat, int act, int weight) {
    OperatorSpec op;
    op.name = name;
    op.cls = OperatorClass::Convolution;
    op.kind = c;
    op.repeat = repeat;
    op.in_precisions = {weight, act};
    op.out_precision = act;
    out.push_back(op);

    const std::int64_t elems = c.out_ch * c.out_h * c.out_w * repeat;
    out.push_back(elementwise(name + ".bn", OperatorClass::Nonlinear, NonlinearFn::BatchNorm, elems,
                              kBatchNormFlops, 1, act));
    out.push_back(elementwise(name + ".relu", OperatorClass::Nonlinear, NonlinearFn::Relu, elems,
                              kReluFlops, 1, act));
}

}  // namespace

std::vector<OperatorSpec> resnet50_ops(int act_bytes, int weight_bytes) {
    std::vector<OperatorSpec> out;

    // The stem is accounted at the pooled 56×56 resolution over a 224×224 input.
    append_conv(out, "conv1", Conv{7, 3, 64, 56, 56, 4}, 1, act_bytes, weight_bytes);

    for (const auto& r : kRows)
        append_conv(out, r.name, Conv{r.kernel, r.in_ch, r.out_ch, r.res, r.res, 1}, r.repeat,
                    act_bytes, weight_bytes);

    for (const auto& r : kResiduals)
        out.push_back(elementwise(r.name, OperatorClass::ResidualAdd, NonlinearFn::None,
                                  r.ch * r.res * r.res * r.blocks, 1.0, 2, act_bytes));

    out.push_back(elementwise("avgpool", OperatorClass::Pooling, NonlinearFn::None, 2048 * 7 * 7, 1.0, 1,
                              act_bytes, 2048));

    OperatorSpec fc;
    fc.name = "fc";
    fc.cls = OperatorClass::Classifier;
    fc.kind = Matmul{1000, 2048, 1, true};
    fc.in_precisions = {weight_bytes, act_bytes};
    fc.out_precision = act_bytes;
    out.push_back(fc);

    out.push_back(elementwise("softmax", OperatorClass::Nonlinear, NonlinearFn::Softmax, 1000,
                              kSoftmaxFlops, 1, act_bytes, 0, 3));
    return out;
}

}  // namespace tfperf
