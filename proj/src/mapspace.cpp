#include "tfperf/mapspace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include "tfperf/error.hpp"
#include "tfperf/parallel.hpp"

namespace tfperf {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }
std::int64_t round_up(std::int64_t a, std::int64_t b) { return ceil_div(a, b) * b; }

std::vector<std::int64_t> divisors(std::int64_t n) {
    std::vector<std::int64_t> lo, hi;
    for (std::int64_t i = 1; i * i <= n; ++i) {
        if (n % i) continue;
        lo.push_back(i);
        if (i != n / i) hi.push_back(n / i);
    }
    lo.insert(lo.end(), hi.rbegin(), hi.rend());
    return lo;
}

// Tensor roles within a nest.
enum Tensor { kA = 0, kB = 1, kC = 2 };

// Matmul: A(M,K) B(K,N) C(M,N). Conv: A = weights(oc,ic,kh,kw),
// B = input(ic,kh,kw,oh,ow), C = output(oc,oh,ow).
bool relevant(const LoopNest& nest, Tensor t, std::size_t d) {
    if (nest.kind == LoopNest::Kind::Matmul) {
        static constexpr bool kRel[3][3] = {{1, 1, 0}, {0, 1, 1}, {1, 0, 1}};
        return kRel[t][d];
    }
    static constexpr bool kRel[3][6] = {{1, 1, 1, 1, 0, 0}, {0, 1, 1, 1, 1, 1}, {1, 0, 0, 0, 1, 1}};
    return kRel[t][d];
}

// Elements of tensor t for per-dim tile sizes (fractional sizes allowed).
double tensor_elems(const LoopNest& nest, Tensor t, const std::vector<double>& tile) {
    if (nest.kind == LoopNest::Kind::Conv && t == kB) {
        const double s = static_cast<double>(nest.stride);
        return tile[1] * ((tile[4] - 1) * s + tile[2]) * ((tile[5] - 1) * s + tile[3]);
    }
    double e = 1;
    for (std::size_t d = 0; d < nest.rank(); ++d)
        if (relevant(nest, t, d)) e *= tile[d];
    return e;
}

// Trip-count product of irrelevant loops outside the innermost relevant loop.
double reuse_multiplier(const LoopNest& nest, Tensor t, const std::vector<std::int64_t>& trips,
                        const std::vector<std::size_t>& order) {
    std::ptrdiff_t innermost = -1;
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        if (trips[order[pos]] > 1 && relevant(nest, t, order[pos])) innermost = static_cast<std::ptrdiff_t>(pos);
    double mult = 1;
    for (std::ptrdiff_t pos = 0; pos < innermost; ++pos) {
        const std::size_t d = order[static_cast<std::size_t>(pos)];
        if (trips[d] > 1 && !relevant(nest, t, d)) mult *= static_cast<double>(trips[d]);
    }
    return mult;
}

double relevant_trips(const LoopNest& nest, Tensor t, const std::vector<std::int64_t>& trips) {
    double p = 1;
    for (std::size_t d = 0; d < nest.rank(); ++d)
        if (relevant(nest, t, d)) p *= static_cast<double>(trips[d]);
    return p;
}

int tensor_bytes(const LoopNest& nest, Tensor t) {
    return t == kA ? nest.a_bytes : t == kB ? nest.b_bytes : nest.out_bytes;
}

std::vector<std::int64_t> local_tile(const Mapping& m) {
    std::vector<std::int64_t> tile(m.spatial.size());
    for (std::size_t d = 0; d < tile.size(); ++d) tile[d] = m.spatial[d] * m.local.factors[d];
    return tile;
}

bool footprint_fits(const LoopNest& nest, const std::vector<std::int64_t>& tile, const AcceleratorConfig& accel,
                    std::vector<std::string>* why) {
    std::vector<double> t(tile.begin(), tile.end());
    const double spad = tensor_elems(nest, kA, t) * nest.a_bytes + tensor_elems(nest, kB, t) * nest.b_bytes;
    const double acc = tensor_elems(nest, kC, t) * AcceleratorConfig::kPartialBytes;
    bool ok = true;
    if (2 * spad > static_cast<double>(accel.scratchpad_bytes)) {
        ok = false;
        if (why)
            why->push_back("scratchpad capacity exceeded: " + std::to_string(static_cast<std::int64_t>(2 * spad)) +
                           " > " + std::to_string(accel.scratchpad_bytes) + " bytes (double buffered)");
    }
    if (acc > static_cast<double>(accel.accumulator_bytes)) {
        ok = false;
        if (why)
            why->push_back("accumulator capacity exceeded: " + std::to_string(static_cast<std::int64_t>(acc)) +
                           " > " + std::to_string(accel.accumulator_bytes) + " bytes");
    }
    return ok;
}

bool is_permutation_of(const std::vector<std::size_t>& order, std::size_t rank) {
    if (order.size() != rank) return false;
    std::vector<bool> seen(rank, false);
    for (auto d : order) {
        if (d >= rank || seen[d]) return false;
        seen[d] = true;
    }
    return true;
}

std::int64_t spatial_limit(const LoopNest& nest, const AcceleratorConfig& accel, std::size_t d) {
    if (d != nest.row_dim() && d != nest.col_dim()) return 1;
    return std::min(accel.pe_width, nest.dims[d].extent);
}

CostReport evaluate_unchecked(const Mapping& m, const LoopNest& nest, const AcceleratorConfig& accel) {
    const std::size_t rank = nest.rank();
    const auto& T = m.dram.factors;
    const auto& t = m.local.factors;

    CostReport r;
    double dram_tiles = 1, steps = 1;
    for (std::size_t d = 0; d < rank; ++d) {
        dram_tiles *= static_cast<double>(T[d]);
        steps *= static_cast<double>(T[d] * t[d]);
    }

    std::vector<double> avg_tile(rank), spatial(rank);
    for (std::size_t d = 0; d < rank; ++d) {
        avg_tile[d] = static_cast<double>(nest.dims[d].extent) / static_cast<double>(T[d]);
        spatial[d] = static_cast<double>(m.spatial[d]);
    }

    for (Tensor x : {kA, kB, kC}) {
        const double dram = tensor_elems(nest, x, avg_tile) * relevant_trips(nest, x, T) *
                            reuse_multiplier(nest, x, T, m.dram.order) * tensor_bytes(nest, x);
        const double local = dram_tiles * tensor_elems(nest, x, spatial) * relevant_trips(nest, x, t) *
                             reuse_multiplier(nest, x, t, m.local.order);
        r.traffic.dram += dram;
        if (x == kC) {
            r.traffic.accumulator += 2.0 * local * AcceleratorConfig::kPartialBytes;
        } else {
            r.traffic.scratchpad += dram + local * tensor_bytes(nest, x);
        }
    }

    r.compute_cycles = steps + dram_tiles * static_cast<double>(accel.pe_width);
    r.memory_cycles = r.traffic.dram / accel.dram_bw;
    r.latency = std::max(r.compute_cycles, r.memory_cycles);
    r.compute_bound = r.compute_cycles >= r.memory_cycles;
    r.energy = energy_of(2.0 * static_cast<double>(nest.macs()), r.traffic, accel.energy);
    r.edp = r.latency * r.energy;
    return r;
}

}  // namespace

// -----------------------------------------------------------------------------
// Nests
// -----------------------------------------------------------------------------

void LoopNest::validate() const {
    const std::size_t want = kind == Kind::Matmul ? 3 : 6;
    if (dims.size() != want)
        throw ConfigError("loop nest needs " + std::to_string(want) + " dims, got " + std::to_string(dims.size()));
    std::set<std::string> names;
    for (const auto& d : dims) {
        if (d.extent < 1) throw ConfigError("loop '" + d.name + "' extent must be >= 1");
        if (!names.insert(d.name).second) throw ConfigError("duplicate loop name '" + d.name + "'");
    }
    if (stride < 1) throw ConfigError("stride must be >= 1");
}

std::size_t LoopNest::row_dim() const { return kind == Kind::Matmul ? 0 : 1; }
std::size_t LoopNest::col_dim() const { return kind == Kind::Matmul ? 2 : 0; }

std::int64_t LoopNest::macs() const {
    std::int64_t p = 1;
    for (const auto& d : dims) p *= d.extent;
    return p;
}

LoopNest matmul_nest(std::int64_t m, std::int64_t k, std::int64_t n, int a_bytes, int b_bytes, int out_bytes) {
    LoopNest nest;
    nest.kind = LoopNest::Kind::Matmul;
    nest.dims = {{"M", m}, {"K", k}, {"N", n}};
    nest.a_bytes = a_bytes, nest.b_bytes = b_bytes, nest.out_bytes = out_bytes;
    nest.validate();
    return nest;
}

LoopNest conv_nest(const Conv& c, int w_bytes, int in_bytes, int out_bytes) {
    LoopNest nest;
    nest.kind = LoopNest::Kind::Conv;
    nest.dims = {{"out_ch", c.out_ch}, {"in_ch", c.in_ch}, {"kernel_h", c.kernel},
                 {"kernel_w", c.kernel}, {"out_h", c.out_h}, {"out_w", c.out_w}};
    nest.stride = c.stride;
    nest.a_bytes = w_bytes, nest.b_bytes = in_bytes, nest.out_bytes = out_bytes;
    nest.validate();
    return nest;
}

LoopNest nest_from_op(const OperatorSpec& op) {
    if (const auto* m = std::get_if<Matmul>(&op.kind))
        return matmul_nest(m->m, m->k, m->n, op.in_prec(0), op.in_prec(1), op.out_precision);
    if (const auto* c = std::get_if<Conv>(&op.kind)) return conv_nest(*c, op.in_prec(0), op.in_prec(1), op.out_precision);
    throw ConfigError("operator '" + op.name + "' is not a matmul or convolution");
}

// -----------------------------------------------------------------------------
// Mapping
// -----------------------------------------------------------------------------

std::vector<std::int64_t> Mapping::encode() const {
    std::vector<std::int64_t> e;
    e.insert(e.end(), spatial.begin(), spatial.end());
    e.insert(e.end(), local.factors.begin(), local.factors.end());
    e.insert(e.end(), dram.factors.begin(), dram.factors.end());
    for (auto d : dram.order) e.push_back(static_cast<std::int64_t>(d));
    for (auto d : local.order) e.push_back(static_cast<std::int64_t>(d));
    return e;
}

std::vector<std::string> validate(const Mapping& m, const LoopNest& nest, const AcceleratorConfig& accel) {
    std::vector<std::string> v;
    const std::size_t rank = nest.rank();
    if (m.spatial.size() != rank || m.local.factors.size() != rank || m.dram.factors.size() != rank) {
        v.push_back("factor lists must have one entry per dim");
        return v;
    }
    bool factors_ok = true;
    for (std::size_t d = 0; d < rank; ++d) {
        const auto& name = nest.dims[d].name;
        const std::int64_t s = m.spatial[d], t = m.local.factors[d], T = m.dram.factors[d];
        if (s < 1 || t < 1 || T < 1) {
            v.push_back("non-positive factor on dim " + name);
            factors_ok = false;
            continue;
        }
        if (s > accel.pe_width) v.push_back("spatial factor " + std::to_string(s) + " on " + name + " exceeds W");
        if (s > 1 && d != nest.row_dim() && d != nest.col_dim())
            v.push_back("dim " + name + " is not spatially mapped but has spatial factor " + std::to_string(s));
        const std::int64_t prod = s * t * T;
        const std::int64_t extent = nest.dims[d].extent;
        if (prod < extent) v.push_back("under-covered dim " + name);
        else if (prod >= 2 * round_up(extent, s)) v.push_back("over-padded dim " + name);
    }
    if (!is_permutation_of(m.dram.order, rank)) v.push_back("dram loop order is not a permutation");
    if (!is_permutation_of(m.local.order, rank)) v.push_back("local loop order is not a permutation");
    if (factors_ok) footprint_fits(nest, local_tile(m), accel, &v);
    return v;
}

Mapping random_mapping(const LoopNest& nest, const AcceleratorConfig& accel, std::mt19937_64& rng) {
    nest.validate();
    accel.validate();
    const std::size_t rank = nest.rank();
    if (!footprint_fits(nest, std::vector<std::int64_t>(rank, 1), accel, nullptr))
        throw InfeasibleError("no mapping fits the accelerator: a single element per tensor exceeds capacity");

    std::vector<std::size_t> identity(rank);
    std::iota(identity.begin(), identity.end(), std::size_t{0});

    constexpr int kMaxAttempts = 1'000'000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Mapping m;
        m.spatial.resize(rank);
        m.local.factors.resize(rank);
        m.dram.factors.resize(rank);
        for (std::size_t d = 0; d < rank; ++d) {
            const std::int64_t extent = nest.dims[d].extent;
            std::uniform_int_distribution<std::int64_t> sdist(1, spatial_limit(nest, accel, d));
            const std::int64_t s = sdist(rng);
            const std::int64_t q = round_up(extent, s) / s;
            const auto divs = divisors(q);
            std::uniform_int_distribution<std::size_t> tdist(0, divs.size() - 1);
            const std::int64_t t = divs[tdist(rng)];
            m.spatial[d] = s;
            m.local.factors[d] = t;
            m.dram.factors[d] = q / t;
        }
        m.dram.order = identity;
        m.local.order = identity;
        std::shuffle(m.dram.order.begin(), m.dram.order.end(), rng);
        std::shuffle(m.local.order.begin(), m.local.order.end(), rng);
        if (footprint_fits(nest, local_tile(m), accel, nullptr)) return m;
    }
    throw InfeasibleError("no valid mapping found after " + std::to_string(kMaxAttempts) + " attempts");
}

Mapping random_mapping(const LoopNest& nest, const AcceleratorConfig& accel, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_mapping(nest, accel, rng);
}

CostReport evaluate(const Mapping& m, const LoopNest& nest, const AcceleratorConfig& accel) {
    nest.validate();
    const auto v = validate(m, nest, accel);
    if (!v.empty()) {
        std::string msg = "invalid mapping: ";
        for (std::size_t i = 0; i < v.size(); ++i) msg += (i ? "; " : "") + v[i];
        throw ConfigError(msg);
    }
    return evaluate_unchecked(m, nest, accel);
}

// -----------------------------------------------------------------------------
// Exhaustive search
// -----------------------------------------------------------------------------

namespace {

struct DimOption {
    std::int64_t s, t, T;
};

std::vector<std::vector<DimOption>> dim_options(const LoopNest& nest, const AcceleratorConfig& accel) {
    std::vector<std::vector<DimOption>> out(nest.rank());
    for (std::size_t d = 0; d < nest.rank(); ++d) {
        const std::int64_t extent = nest.dims[d].extent;
        for (std::int64_t s = 1; s <= spatial_limit(nest, accel, d); ++s) {
            const std::int64_t q = round_up(extent, s) / s;
            for (auto t : divisors(q)) out[d].push_back({s, t, q / t});
        }
    }
    return out;
}

std::vector<std::vector<std::size_t>> all_permutations(std::size_t rank) {
    std::vector<std::size_t> p(rank);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::vector<std::vector<std::size_t>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

}  // namespace

double mapspace_size(const LoopNest& nest, const AcceleratorConfig& accel) {
    nest.validate();
    double size = 1;
    for (const auto& opts : dim_options(nest, accel)) size *= static_cast<double>(opts.size());
    double perms = std::tgamma(static_cast<double>(nest.rank()) + 1.0);
    return size * perms * perms;
}

BestMapping exhaustive_best(const LoopNest& nest, const AcceleratorConfig& accel, double guard) {
    accel.validate();
    const double size = mapspace_size(nest, accel);
    if (size > guard) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3g", size);
        throw ConfigError(std::string("mapspace too large for exhaustive search: ") + buf + " combinations");
    }
    const std::size_t rank = nest.rank();
    const auto opts = dim_options(nest, accel);
    const auto perms = all_permutations(rank);

    BestMapping best;
    bool found = false;
    std::vector<std::size_t> idx(rank, 0);
    Mapping m;
    m.spatial.resize(rank);
    m.local.factors.resize(rank);
    m.dram.factors.resize(rank);
    for (;;) {
        for (std::size_t d = 0; d < rank; ++d) {
            const auto& o = opts[d][idx[d]];
            m.spatial[d] = o.s, m.local.factors[d] = o.t, m.dram.factors[d] = o.T;
        }
        if (footprint_fits(nest, local_tile(m), accel, nullptr)) {
            for (const auto& pd : perms) {
                for (const auto& pl : perms) {
                    m.dram.order = pd;
                    m.local.order = pl;
                    const CostReport c = evaluate_unchecked(m, nest, accel);
                    ++best.examined;
                    if (!found || c.edp < best.cost.edp ||
                        (c.edp == best.cost.edp && m.encode() < best.mapping.encode())) {
                        best.mapping = m;
                        best.cost = c;
                        found = true;
                    }
                }
            }
        }
        std::size_t d = 0;
        while (d < rank && ++idx[d] == opts[d].size()) idx[d++] = 0;
        if (d == rank) break;
    }
    if (!found) throw InfeasibleError("no valid mapping fits the accelerator");
    return best;
}

// -----------------------------------------------------------------------------
// Statistics
// -----------------------------------------------------------------------------

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double MapspaceStats::frac_within(double k) const {
    if (cdf.empty()) return 0.0;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), k);
    return static_cast<double>(it - cdf.begin()) / static_cast<double>(cdf.size());
}

double MapspaceStats::spread() const { return cdf.empty() ? 1.0 : cdf.back(); }

std::vector<SampleRecord> sample_mappings(const LoopNest& nest, const AcceleratorConfig& accel, std::size_t n,
                                          std::uint64_t seed) {
    nest.validate();
    accel.validate();
    std::vector<SampleRecord> out(n);
    parallel_for(n, [&](std::size_t i) {
        std::mt19937_64 rng(mix_seed(seed, i));
        const Mapping m = random_mapping(nest, accel, rng);
        out[i] = SampleRecord{i, evaluate_unchecked(m, nest, accel)};
    });
    return out;
}

MapspaceStats stats_from(const std::vector<SampleRecord>& samples) {
    if (samples.empty()) throw ConfigError("mapspace statistics need at least one sample");
    MapspaceStats s;
    s.n_samples = samples.size();
    s.edps.reserve(samples.size());
    for (const auto& r : samples) s.edps.push_back(r.cost.edp);
    s.min_edp = *std::min_element(s.edps.begin(), s.edps.end());
    s.relative_edps.reserve(samples.size());
    for (double e : s.edps) s.relative_edps.push_back(e / s.min_edp);
    s.cdf = s.relative_edps;
    std::sort(s.cdf.begin(), s.cdf.end());
    s.p10 = s.cdf[static_cast<std::size_t>(0.1 * static_cast<double>(s.cdf.size() - 1))];
    return s;
}

MapspaceStats sample_stats(const LoopNest& nest, const AcceleratorConfig& accel, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("sample count must be >= 1");
    return stats_from(sample_mappings(nest, accel, n, seed));
}

// -----------------------------------------------------------------------------
// Matched dims and named nests
// -----------------------------------------------------------------------------

MatchedDims matched_mac_dims(const OperatorSpec& conv, std::int64_t seq_len, double ffn_ratio) {
    const auto* c = std::get_if<Conv>(&conv.kind);
    if (!c) throw ConfigError("matched_mac_dims needs a convolution");
    if (seq_len < 1 || !(ffn_ratio > 0)) throw ConfigError("matched_mac_dims needs seq_len >= 1 and ratio > 0");
    const double macs = static_cast<double>(c->macs());
    const double l = static_cast<double>(seq_len);
    return {static_cast<std::int64_t>(std::llround(std::sqrt(macs / l))),
            static_cast<std::int64_t>(std::llround(std::sqrt(macs / (ffn_ratio * l))))};
}

namespace {

std::vector<std::int64_t> parse_ints(std::string_view s, std::string_view what) {
    std::vector<std::int64_t> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        const auto tok = s.substr(0, comma);
        std::int64_t v = 0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size())
            throw ConfigError("bad integer '" + std::string(tok) + "' in " + std::string(what));
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

const Conv kResnetConv1{7, 3, 64, 56, 56, 4};

}  // namespace

LoopNest named_nest(std::string_view name, std::int64_t l) {
    if (l < 1) throw ConfigError("sequence length must be >= 1");
    if (name == "bert.qk") return matmul_nest(l, 64, l);
    if (name == "bert.sv") return matmul_nest(64, l, l);
    if (name == "bert.proj") return matmul_nest(768, 768, l);
    if (name == "bert.ffn1") return matmul_nest(3072, 768, l);
    if (name == "bert.ffn2") return matmul_nest(768, 3072, l);
    if (name == "resnet.conv1") return conv_nest(kResnetConv1);
    if (name == "resnet.conv3x3_512") return conv_nest(Conv{3, 512, 512, 7, 7, 1});
    if (name == "resnet.conv1x1_2048") return conv_nest(Conv{1, 2048, 512, 7, 7, 1});
    if (name == "matched.mha" || name == "matched.ffn") {
        OperatorSpec op;
        op.kind = kResnetConv1;
        const auto md = matched_mac_dims(op, l);
        if (name == "matched.mha") return matmul_nest(md.d_mha, md.d_mha, l);
        return matmul_nest(4 * md.d_ffn_hidden, md.d_ffn_hidden, l);
    }
    if (name.substr(0, 3) == "mm:") {
        const auto v = parse_ints(name.substr(3), "matmul dims");
        if (v.size() != 3) throw ConfigError("explicit matmul nest needs mm:M,K,N");
        return matmul_nest(v[0], v[1], v[2]);
    }
    if (name.substr(0, 5) == "conv:") {
        const auto v = parse_ints(name.substr(5), "conv dims");
        if (v.size() != 6) throw ConfigError("explicit conv nest needs conv:kernel,in,out,h,w,stride");
        return conv_nest(Conv{v[0], v[1], v[2], v[3], v[4], v[5]});
    }
    throw ConfigError("unknown loop nest '" + std::string(name) + "'");
}

std::vector<std::string> nest_names() {
    return {"bert.qk",      "bert.sv",           "bert.proj",           "bert.ffn1",   "bert.ffn2",
            "resnet.conv1", "resnet.conv3x3_512", "resnet.conv1x1_2048", "matched.mha", "matched.ffn"};
}

}  // namespace tfperf
