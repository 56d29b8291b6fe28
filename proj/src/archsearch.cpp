#include "tfperf/archsearch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tfperf/error.hpp"
#include "tfperf/parallel.hpp"

namespace tfperf {

namespace {

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, v.size() - 1);
    return v[dist(rng)];
}

bool contains(const std::vector<std::int64_t>& v, std::int64_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

void clear_eval(Candidate& c) {
    c.quality = c.latency = c.energy = c.edp = 0;
    c.evaluated = false;
}

}  // namespace

// -----------------------------------------------------------------------------
// Space and candidates
// -----------------------------------------------------------------------------

SearchSpace::SearchSpace() {
    for (std::int64_t f = 768; f <= 3072; f += 128) ffn_dims.push_back(f);
}

void SearchSpace::validate() const {
    auto check = [](const std::vector<std::int64_t>& v, const char* what) {
        if (v.empty()) throw ConfigError(std::string("search space: ") + what + " is empty");
        for (auto x : v)
            if (x < 1) throw ConfigError(std::string("search space: ") + what + " values must be >= 1");
    };
    check(layer_counts, "layer_counts");
    check(heads, "heads");
    check(model_dims, "model_dims");
    check(ffn_dims, "ffn_dims");
    for (auto d : model_dims)
        for (auto h : heads)
            if (d / h < 1) throw ConfigError("search space: head count exceeds model dim");
}

void Candidate::validate() const {
    if (layers < 1 || d < 1) throw ConfigError("candidate needs layers >= 1 and d >= 1");
    if (heads.size() != static_cast<std::size_t>(layers) || d_ffn.size() != static_cast<std::size_t>(layers))
        throw ConfigError("candidate per-layer lists must have length " + std::to_string(layers));
    for (std::size_t i = 0; i < heads.size(); ++i)
        if (heads[i] < 1 || d_ffn[i] < 1 || d / heads[i] < 1)
            throw ConfigError("candidate layer " + std::to_string(i) + " has invalid heads or d_ffn");
}

bool Candidate::in_space(const SearchSpace& s) const {
    if (!contains(s.layer_counts, layers) || !contains(s.model_dims, d)) return false;
    if (heads.size() != static_cast<std::size_t>(layers) || d_ffn.size() != static_cast<std::size_t>(layers))
        return false;
    for (std::size_t i = 0; i < heads.size(); ++i)
        if (!contains(s.heads, heads[i]) || !contains(s.ffn_dims, d_ffn[i])) return false;
    return true;
}

std::vector<std::int64_t> Candidate::encode() const {
    std::vector<std::int64_t> e{layers, d};
    e.insert(e.end(), heads.begin(), heads.end());
    e.insert(e.end(), d_ffn.begin(), d_ffn.end());
    return e;
}

std::string Candidate::to_string() const {
    std::ostringstream os;
    os << "N=" << layers << " d=" << d << " h=[";
    for (std::size_t i = 0; i < heads.size(); ++i) os << (i ? "," : "") << heads[i];
    os << "] d_ffn=[";
    for (std::size_t i = 0; i < d_ffn.size(); ++i) os << (i ? "," : "") << d_ffn[i];
    os << "]";
    return os.str();
}

Candidate baseline_candidate(const SearchSpace& s) {
    s.validate();
    Candidate c;
    c.layers = *std::max_element(s.layer_counts.begin(), s.layer_counts.end());
    c.d = *std::max_element(s.model_dims.begin(), s.model_dims.end());
    c.heads.assign(static_cast<std::size_t>(c.layers), *std::max_element(s.heads.begin(), s.heads.end()));
    c.d_ffn.assign(static_cast<std::size_t>(c.layers), *std::max_element(s.ffn_dims.begin(), s.ffn_dims.end()));
    return c;
}

Candidate sample_candidate(const SearchSpace& s, std::mt19937_64& rng) {
    s.validate();
    Candidate c;
    c.layers = pick(s.layer_counts, rng);
    c.d = pick(s.model_dims, rng);
    for (std::int64_t i = 0; i < c.layers; ++i) {
        c.heads.push_back(pick(s.heads, rng));
        c.d_ffn.push_back(pick(s.ffn_dims, rng));
    }
    return c;
}

Candidate sample_candidate(const SearchSpace& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_candidate(s, rng);
}

Candidate mutate(const Candidate& c, const SearchSpace& s, double p, std::mt19937_64& rng) {
    if (!(p >= 0 && p <= 1)) throw ConfigError("mutation probability must be in [0, 1]");
    s.validate();
    c.validate();
    std::bernoulli_distribution flip(p);
    Candidate m = c;
    clear_eval(m);

    if (flip(rng)) m.layers = pick(s.layer_counts, rng);
    if (flip(rng)) m.d = pick(s.model_dims, rng);
    const std::size_t kept = std::min(c.heads.size(), static_cast<std::size_t>(m.layers));
    m.heads.resize(kept);
    m.d_ffn.resize(kept);
    for (std::size_t i = 0; i < kept; ++i) {
        if (flip(rng)) m.heads[i] = pick(s.heads, rng);
        if (flip(rng)) m.d_ffn[i] = pick(s.ffn_dims, rng);
    }
    while (m.heads.size() < static_cast<std::size_t>(m.layers)) {
        m.heads.push_back(pick(s.heads, rng));
        m.d_ffn.push_back(pick(s.ffn_dims, rng));
    }
    return m;
}

Candidate mutate(const Candidate& c, const SearchSpace& s, double p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return mutate(c, s, p, rng);
}

double quality_proxy(const Candidate& c) {
    c.validate();
    const double d = static_cast<double>(c.d);
    double params = 0;
    for (auto f : c.d_ffn) {
        const double ff = static_cast<double>(f);
        params += 4 * (d * d + d) + 2 * d * ff + ff + d + 4 * d;
    }
    return params;
}

std::vector<OperatorSpec> candidate_ops(const Candidate& c, std::int64_t seq_len) {
    c.validate();
    std::vector<LayerShape> layers;
    for (std::size_t i = 0; i < c.heads.size(); ++i) layers.push_back({c.heads[i], c.d_ffn[i]});
    return encoder_ops(c.d, layers, seq_len, 1, 1, 4, OutputPrecision::WidePreNonlinear);
}

// -----------------------------------------------------------------------------
// Cost
// -----------------------------------------------------------------------------

CostReport direct_cost(const OperatorSpec& op, const AcceleratorConfig& accel, TilePolicy policy) {
    return op_cost(op, plan_for(op, accel, policy), accel);
}

CostCache::CostCache(AcceleratorConfig accel, TilePolicy policy) : accel_(std::move(accel)), policy_(policy) {
    accel_.validate();
}

CostReport CostCache::get(const OperatorSpec& op) {
    const std::string key = shape_key(op);
    {
        std::lock_guard lock(mu_);
        if (auto it = table_.find(key); it != table_.end()) {
            ++hits_;
            return it->second;
        }
    }
    const CostReport r = direct_cost(op, accel_, policy_);
    std::lock_guard lock(mu_);
    ++misses_;
    return table_.emplace(key, r).first->second;
}

std::size_t CostCache::size() const {
    std::lock_guard lock(mu_);
    return table_.size();
}

std::uint64_t CostCache::hits() const {
    std::lock_guard lock(mu_);
    return hits_;
}

std::uint64_t CostCache::misses() const {
    std::lock_guard lock(mu_);
    return misses_;
}

CandidateCost candidate_cost(const Candidate& c, CostCache& cache, std::int64_t seq_len) {
    CandidateCost cc;
    for (const auto& op : candidate_ops(c, seq_len)) {
        const CostReport r = cache.get(op);
        cc.latency += r.latency;
        cc.energy += r.energy;
    }
    cc.edp = cc.latency * cc.energy;
    return cc;
}

double candidate_edp(const Candidate& c, CostCache& cache, std::int64_t seq_len) {
    return candidate_cost(c, cache, seq_len).edp;
}

std::vector<CandidateCost> rescore(const std::vector<Candidate>& cs, const AcceleratorConfig& accel,
                                   std::int64_t seq_len) {
    CostCache fine(accel, TilePolicy::Best);
    std::vector<CandidateCost> out(cs.size());
    parallel_for(cs.size(), [&](std::size_t i) { out[i] = candidate_cost(cs[i], fine, seq_len); });
    return out;
}

// -----------------------------------------------------------------------------
// Pareto
// -----------------------------------------------------------------------------

bool dominates(const Candidate& a, const Candidate& b) {
    return a.quality >= b.quality && a.edp <= b.edp && (a.quality > b.quality || a.edp < b.edp);
}

std::vector<Candidate> pareto(const std::vector<Candidate>& points) {
    std::vector<Candidate> sorted = points;
    // edp ascending, quality descending, encoding ascending: a sweep keeps a
    // point only if its quality beats everything cheaper.
    std::sort(sorted.begin(), sorted.end(), [](const Candidate& a, const Candidate& b) {
        if (a.edp != b.edp) return a.edp < b.edp;
        if (a.quality != b.quality) return a.quality > b.quality;
        return a.encode() < b.encode();
    });
    std::vector<Candidate> front;
    for (const auto& c : sorted) {
        if (!front.empty() && c.quality <= front.back().quality) continue;
        front.push_back(c);
    }
    return front;
}

// -----------------------------------------------------------------------------
// Evolution
// -----------------------------------------------------------------------------

namespace {

// Evaluates in place; returns the survivors, in input order.
std::vector<Candidate> evaluate_all(std::vector<Candidate> pop, CostCache& cache, const EvolveOptions& opt,
                                    std::vector<std::string>& discarded) {
    std::vector<std::string> errors(pop.size());
    parallel_for(pop.size(), [&](std::size_t i) {
        auto& c = pop[i];
        if (c.evaluated) return;
        try {
            const CandidateCost cc = candidate_cost(c, cache, opt.seq_len);
            c.latency = cc.latency;
            c.energy = cc.energy;
            c.edp = cc.edp;
            c.quality = opt.quality(c);
            if (!std::isfinite(c.edp) || !std::isfinite(c.quality))
                throw InfeasibleError("non-finite score");
            c.evaluated = true;
        } catch (const std::exception& e) {
            errors[i] = c.to_string() + ": " + e.what();
        }
    });
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (errors[i].empty()) out.push_back(std::move(pop[i]));
        else discarded.push_back(std::move(errors[i]));
    }
    return out;
}

}  // namespace

EvolveResult evolve(const SearchSpace& s, CostCache& cache, const EvolveOptions& opt) {
    s.validate();
    if (opt.population < 2) throw ConfigError("population must be >= 2");
    if (opt.rounds < 1) throw ConfigError("rounds must be >= 1");
    if (!(opt.mutation >= 0 && opt.mutation <= 1)) throw ConfigError("mutation probability must be in [0, 1]");
    if (opt.seq_len < 1) throw ConfigError("sequence length must be >= 1");
    if (!opt.quality) throw ConfigError("quality function is empty");

    EvolveResult res;
    std::mt19937_64 rng(opt.seed);
    std::vector<Candidate> pop;
    for (std::size_t i = 0; i < opt.population; ++i) pop.push_back(sample_candidate(s, rng));

    for (std::size_t round = 0; round < opt.rounds; ++round) {
        pop = evaluate_all(std::move(pop), cache, opt, res.discarded);
        if (round == 0) res.initial_population = pop;
        res.front = pareto(pop);
        res.trace.push_back({round, res.front.empty() ? 0.0 : res.front.front().edp, res.front.size()});
        if (round + 1 == opt.rounds) break;
        if (res.front.empty()) throw InfeasibleError("every candidate failed evaluation");

        pop = res.front;
        for (std::size_t i = 0; pop.size() < opt.population; ++i)
            pop.push_back(mutate(res.front[i % res.front.size()], s, opt.mutation, rng));
    }
    return res;
}

}  // namespace tfperf
