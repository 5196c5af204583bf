#include "exlab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>

#include "exlab/kernels.hpp"

namespace exlab {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter c, Key k) noexcept {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint32_t a, std::uint32_t b,
                           std::uint32_t c) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0, a, b, c} {}

double RandomStream::uniform() noexcept {
    if (used_ == 4) {
        buffer_ = Philox4x32::block(counter_, key_);
        ++counter_[0];
        used_ = 0;
    }
    return (static_cast<double>(buffer_[used_++]) + 0.5) * 0x1p-32;
}

void RandomStream::fill_uniform(double* out, std::size_t count) noexcept {
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = uniform();
    }
}

SymbolSampler::SymbolSampler(const Distribution& law) {
    const std::size_t a = law.size();
    thresholds_.resize(a - 1);
    double cum = 0.0;
    for (std::size_t x = 0; x + 1 < a; ++x) {
        cum += law[x];
        double rest = 0.0;
        for (std::size_t y = x + 1; y < a; ++y) rest += law[y];
        thresholds_[x] = rest > 0.0 ? cum : kInf;
    }
}

int SymbolSampler::draw(RandomStream& rng) const noexcept {
    const double u = rng.uniform();
    int s = 0;
    for (double t : thresholds_) {
        s += u >= t ? 1 : 0;
    }
    return s;
}

std::vector<std::int64_t> SymbolSampler::counts(RandomStream& rng, std::int64_t length) const {
    constexpr std::size_t kBatch = 1024;
    const std::size_t c = thresholds_.size();
    std::vector<std::int64_t> tails(c, 0);
    double u[kBatch];
    const auto& kern = kernels::active();
    for (std::int64_t done = 0; done < length;) {
        const auto m = static_cast<std::size_t>(std::min<std::int64_t>(kBatch, length - done));
        rng.fill_uniform(u, m);
        kern.count_tails(u, m, thresholds_.data(), c, tails.data());
        done += static_cast<std::int64_t>(m);
    }
    std::vector<std::int64_t> out(c + 1);
    out[0] = length - tails[0];
    for (std::size_t x = 1; x < c; ++x) {
        out[x] = tails[x - 1] - tails[x];
    }
    out[c] = tails[c - 1];
    return out;
}

void SimPlan::validate() const {
    if (trials < 1) {
        throw std::invalid_argument("trials must be at least 1");
    }
    if (n_grid.empty()) {
        throw std::invalid_argument("n_grid must not be empty");
    }
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] <= 0 || (i > 0 && n_grid[i] <= n_grid[i - 1])) {
            throw std::invalid_argument("n_grid must be positive and strictly increasing");
        }
        if (n_grid[i] > 0x7fffffff) {
            throw std::invalid_argument("n_grid entries must fit in 31 bits");
        }
    }
    if (trials > 0xffffffffLL) {
        throw std::invalid_argument("trials must fit in 32 bits");
    }
    const std::size_t m = instance.hypotheses();
    switch (kind) {
        case TestKind::TwoPhase:
        case TestKind::KnownLaw:
            if (lambdas.size() != m) {
                throw std::invalid_argument("one threshold per hypothesis is required");
            }
            for (double v : lambdas) {
                if (!(v >= 0.0)) throw std::invalid_argument("thresholds must be non-negative");
            }
            break;
        case TestKind::ThresholdBinary:
            if (m != 2) {
                throw std::invalid_argument("the threshold test is binary");
            }
            if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda >= 0.0)) {
                throw std::invalid_argument("thresholds must be non-negative");
            }
            break;
    }
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("EXLAB_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v <= 4096) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

Interval wilson_interval(std::int64_t events, std::int64_t trials, double z) {
    if (trials <= 0 || events < 0 || events > trials) {
        throw std::invalid_argument("invalid event count");
    }
    const double nt = static_cast<double>(trials);
    const double p = static_cast<double>(events) / nt;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nt;
    const double center = (p + z2 / (2.0 * nt)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

struct Lengths {
    std::int64_t training = 0;
    std::int64_t head = 0;
    std::int64_t full = 0;
};

Lengths lengths_for(const SimPlan& plan, std::int64_t n) {
    const double nd = static_cast<double>(n);
    Lengths len;
    len.head = n;
    len.full = ceil_length(plan.instance.k() * nd);
    len.training = plan.kind == TestKind::KnownLaw ? 0 : ceil_length(nd * plan.instance.alpha());
    return len;
}

// Decision on types, shared by the simulator and the enumerator.
class Decider {
public:
    Decider(const SimPlan& plan, std::int64_t n) : plan_(plan) {
        const auto& inst = plan.instance;
        two_.n = n;
        two_.k = inst.k();
        two_.alpha = inst.alpha();
        two_.lambdas = plan.lambdas;
        thr_ = ThresholdBinaryConfig{n, inst.k(), inst.alpha(), plan.lambda1, plan.lambda2, plan.lambda};
    }

    TestOutcome operator()(std::span<const EmpiricalType> training, const EmpiricalType& head,
                           const EmpiricalType& full) const {
        switch (plan_.kind) {
            case TestKind::TwoPhase:
                return two_phase_decide(training, head, full, two_);
            case TestKind::ThresholdBinary:
                return threshold_two_phase_binary_decide(training, head, full, thr_);
            case TestKind::KnownLaw:
                return two_phase_ht_decide(plan_.instance.distributions(), head, full,
                                           plan_.instance.k(), plan_.lambdas);
        }
        return {};
    }

private:
    const SimPlan& plan_;
    TwoPhaseConfig two_;
    ThresholdBinaryConfig thr_;
};

struct Tally {
    std::int64_t errors = 0;
    std::int64_t excess = 0;
    std::int64_t tau_sum = 0;

    Tally& operator+=(const Tally& o) {
        errors += o.errors;
        excess += o.excess;
        tau_sum += o.tau_sum;
        return *this;
    }
};

std::vector<std::int64_t> add_counts(const std::vector<std::int64_t>& a,
                                     const std::vector<std::int64_t>& b) {
    std::vector<std::int64_t> out(a.size());
    for (std::size_t x = 0; x < a.size(); ++x) out[x] = a[x] + b[x];
    return out;
}

// Runs body(chunk) for chunk in [0, chunks) on `threads` workers with a static
// round-robin assignment.
void parallel_chunks(std::size_t chunks, unsigned threads,
                     const std::function<void(std::size_t)>& body) {
    const unsigned w = std::min<std::size_t>(threads, chunks) == 0
                           ? 1u
                           : static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    if (w <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(w);
    for (unsigned t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t c = t; c < chunks; c += w) body(c);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

constexpr std::int64_t kChunk = 256;

}  // namespace

std::vector<SimResult> run_sim(const SimPlan& plan) {
    plan.validate();
    const auto& inst = plan.instance;
    const std::size_t m = inst.hypotheses();
    std::vector<SymbolSampler> samplers;
    for (const auto& p : inst.distributions()) samplers.emplace_back(p);
    const unsigned threads = resolve_threads(plan.threads);

    std::vector<SimResult> results;
    for (std::int64_t n : plan.n_grid) {
        const Lengths len = lengths_for(plan, n);
        const Decider decide(plan, n);
        SimResult r;
        r.n = n;
        r.trials = plan.trials;
        const std::size_t chunks = static_cast<std::size_t>((plan.trials + kChunk - 1) / kChunk);
        double tau_total = 0.0;
        std::int64_t excess_total = 0;
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<Tally> partial(chunks);
            parallel_chunks(chunks, threads, [&](std::size_t c) {
                const std::int64_t lo = static_cast<std::int64_t>(c) * kChunk;
                const std::int64_t hi = std::min(plan.trials, lo + kChunk);
                Tally t;
                std::vector<EmpiricalType> training;
                for (std::int64_t trial = lo; trial < hi; ++trial) {
                    RandomStream rng(plan.seed, static_cast<std::uint32_t>(j),
                                     static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(trial));
                    training.clear();
                    for (std::size_t i = 0; i < m && len.training > 0; ++i) {
                        training.emplace_back(samplers[i].counts(rng, len.training));
                    }
                    const EmpiricalType head(samplers[j].counts(rng, len.head));
                    const auto rest = samplers[j].counts(rng, len.full - len.head);
                    const EmpiricalType full(add_counts(
                        std::vector<std::int64_t>(head.counts().begin(), head.counts().end()), rest));
                    const TestOutcome out = decide(training, head, full);
                    t.errors += out.decision == TestDecision::hypothesis(j) ? 0 : 1;
                    t.excess += out.phase == 2 ? 1 : 0;
                    t.tau_sum += out.tau;
                }
                partial[c] = t;
            });
            Tally total;
            for (const auto& t : partial) total += t;
            const double nt = static_cast<double>(plan.trials);
            r.error_count.push_back(total.errors);
            r.per_hypothesis_error.push_back(static_cast<double>(total.errors) / nt);
            const Interval ci = wilson_interval(total.errors, plan.trials);
            r.wilson_halfwidth.push_back(0.5 * (ci.hi - ci.lo));
            r.reported_error.push_back(total.errors > 0
                                           ? r.per_hypothesis_error.back()
                                           : wilson_interval(0, plan.trials, kZ95OneSided).hi);
            r.excess_count.push_back(total.excess);
            r.per_hypothesis_excess.push_back(static_cast<double>(total.excess) / nt);
            r.per_hypothesis_tau.push_back(static_cast<double>(total.tau_sum) / nt);
            tau_total += static_cast<double>(total.tau_sum);
            excess_total += total.excess;
        }
        const double all = static_cast<double>(plan.trials) * static_cast<double>(m);
        r.mean_tau = tau_total / all;
        r.excess_rate = static_cast<double>(excess_total) / all;
        results.push_back(std::move(r));
    }
    return results;
}

namespace {

double count_types(std::int64_t length, std::size_t alphabet) {
    if (length <= 0) return 1.0;
    // C(length + a - 1, a - 1)
    double c = 1.0;
    for (std::size_t r = 1; r < alphabet; ++r) {
        c *= static_cast<double>(length + static_cast<std::int64_t>(r)) / static_cast<double>(r);
    }
    return std::round(c);
}

void all_types(std::int64_t length, std::size_t alphabet, std::vector<std::vector<std::int64_t>>& out) {
    std::vector<std::int64_t> cur(alphabet, 0);
    std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t x, std::int64_t left) {
        if (x + 1 == alphabet) {
            cur[x] = left;
            out.push_back(cur);
            return;
        }
        for (std::int64_t c = left; c >= 0; --c) {
            cur[x] = c;
            rec(x + 1, left - c);
        }
    };
    rec(0, length);
}

// Multinomial probability of a type class under `law`.
long double type_prob(const std::vector<std::int64_t>& counts, const Distribution& law) {
    long double lg = 0.0L;
    std::int64_t total = 0;
    for (std::size_t x = 0; x < counts.size(); ++x) {
        if (counts[x] == 0) continue;
        if (law[x] <= 0.0) return 0.0L;
        lg += static_cast<long double>(counts[x]) * std::log(static_cast<long double>(law[x])) -
              std::lgamma(static_cast<long double>(counts[x]) + 1.0L);
        total += counts[x];
    }
    lg += std::lgamma(static_cast<long double>(total) + 1.0L);
    return std::exp(lg);
}

}  // namespace

double enumeration_size(const SimPlan& plan, std::int64_t n) {
    const Lengths len = lengths_for(plan, n);
    const std::size_t a = plan.instance.alphabet_size();
    double size = count_types(len.head, a) * count_types(len.full - len.head, a);
    if (len.training > 0) {
        size *= std::pow(count_types(len.training, a), static_cast<double>(plan.instance.hypotheses()));
    }
    return size;
}

ExactResult exact_enumerate(const SimPlan& plan, std::int64_t n) {
    if (n <= 0) {
        throw std::invalid_argument("n must be positive");
    }
    const double size = enumeration_size(plan, n);
    if (size > kEnumerationLimit) {
        throw SizeGuardError("exact enumeration would visit " + std::to_string(size) +
                             " joint types, above the limit of 1e7");
    }
    const auto& inst = plan.instance;
    const std::size_t m = inst.hypotheses();
    const std::size_t a = inst.alphabet_size();
    const Lengths len = lengths_for(plan, n);
    const Decider decide(plan, n);

    std::vector<std::vector<std::int64_t>> train_counts, head_counts, rest_counts;
    if (len.training > 0) all_types(len.training, a, train_counts);
    all_types(len.head, a, head_counts);
    all_types(len.full - len.head, a, rest_counts);

    std::vector<EmpiricalType> train_types;
    for (const auto& c : train_counts) train_types.emplace_back(c);
    std::vector<EmpiricalType> head_types;
    for (const auto& c : head_counts) head_types.emplace_back(c);

    // prob[i][t]: probability of training type t under P_i, and likewise for
    // the head and continuation of the test sequence.
    auto table = [&](const std::vector<std::vector<std::int64_t>>& types) {
        std::vector<std::vector<long double>> p(m);
        for (std::size_t i = 0; i < m; ++i) {
            for (const auto& c : types) p[i].push_back(type_prob(c, inst[i]));
        }
        return p;
    };
    const auto p_train = table(train_counts);
    const auto p_head = table(head_counts);
    const auto p_rest = table(rest_counts);

    ExactResult res;
    res.n = n;
    res.per_hypothesis_error.assign(m, 0.0L);
    res.excess_prob.assign(m, 0.0L);

    const std::size_t n_train = len.training > 0 ? train_types.size() : 1;
    const std::size_t tuples = len.training > 0
                                   ? static_cast<std::size_t>(std::pow(n_train, static_cast<double>(m)))
                                   : 1;
    std::vector<std::size_t> idx(m, 0);
    std::vector<EmpiricalType> training;
    for (std::size_t tuple = 0; tuple < tuples; ++tuple) {
        std::size_t rem = tuple;
        for (std::size_t i = 0; i < m; ++i) {
            idx[i] = rem % n_train;
            rem /= n_train;
        }
        training.clear();
        if (len.training > 0) {
            for (std::size_t i = 0; i < m; ++i) training.push_back(train_types[idx[i]]);
        }
        for (std::size_t j = 0; j < m; ++j) {
            long double pt = 1.0L;
            if (len.training > 0) {
                for (std::size_t i = 0; i < m; ++i) pt *= p_train[i][idx[i]];
            }
            if (pt == 0.0L) continue;
            for (std::size_t h = 0; h < head_types.size(); ++h) {
                const long double ph = pt * p_head[j][h];
                if (ph == 0.0L) continue;
                // Phase 1 does not look at the continuation; probe with any.
                const EmpiricalType probe(add_counts(head_counts[h], rest_counts.front()));
                const TestOutcome first = decide(training, head_types[h], probe);
                if (first.phase != 2) {
                    if (first.decision != TestDecision::hypothesis(j)) res.per_hypothesis_error[j] += ph;
                    continue;
                }
                res.excess_prob[j] += ph;
                for (std::size_t r = 0; r < rest_counts.size(); ++r) {
                    const long double pr = ph * p_rest[j][r];
                    if (pr == 0.0L) continue;
                    const EmpiricalType full(add_counts(head_counts[h], rest_counts[r]));
                    const TestOutcome out = decide(training, head_types[h], full);
                    if (out.decision != TestDecision::hypothesis(j)) res.per_hypothesis_error[j] += pr;
                }
            }
        }
    }
    return res;
}

DecayFit fit_decay(const std::vector<std::int64_t>& n, const std::vector<double>& p) {
    if (n.size() != p.size()) {
        throw std::invalid_argument("n and p must have equal length");
    }
    DecayFit fit;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (p[i] > 0.0) {
            fit.used.push_back(n[i]);
            xs.push_back(static_cast<double>(n[i]));
            ys.push_back(-std::log(p[i]));
        } else {
            fit.excluded.push_back(n[i]);
        }
    }
    if (xs.size() < 2) {
        throw std::invalid_argument("slope fit needs at least two points with non-zero counts");
    }
    const double k = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

namespace {

std::vector<DecayFit> fit_each(const std::vector<SimResult>& results,
                               std::vector<double> SimResult::*field) {
    if (results.empty()) {
        throw std::invalid_argument("slope fit needs at least two points with non-zero counts");
    }
    std::vector<std::int64_t> ns;
    for (const auto& r : results) ns.push_back(r.n);
    std::vector<DecayFit> out;
    for (std::size_t j = 0; j < (results.front().*field).size(); ++j) {
        std::vector<double> p;
        for (const auto& r : results) p.push_back((r.*field)[j]);
        out.push_back(fit_decay(ns, p));
    }
    return out;
}

}  // namespace

std::vector<DecayFit> slope_fit(const std::vector<SimResult>& results) {
    return fit_each(results, &SimResult::per_hypothesis_error);
}

std::vector<DecayFit> excess_slope_fit(const std::vector<SimResult>& results) {
    return fit_each(results, &SimResult::per_hypothesis_excess);
}

SequentialSimResult run_sequential_sim(const ProblemInstance& inst, double beta,
                                       std::int64_t trials, std::uint64_t seed, std::uint32_t tag,
                                       unsigned threads, std::int64_t max_steps) {
    if (trials < 1 || trials > 0xffffffffLL) {
        throw std::invalid_argument("trials must lie in [1, 2^32)");
    }
    const SequentialConfig cfg{beta, inst.alpha(), max_steps};
    cfg.validate();
    if (tag >= 0x80000000u) {
        throw std::invalid_argument("tag must fit in 31 bits");
    }
    const std::size_t m = inst.hypotheses();
    const std::size_t a = inst.alphabet_size();
    std::vector<SymbolSampler> samplers;
    for (const auto& p : inst.distributions()) samplers.emplace_back(p);
    const unsigned workers = resolve_threads(threads);

    SequentialSimResult res;
    res.beta = beta;
    res.trials = trials;
    const std::size_t chunks = static_cast<std::size_t>((trials + kChunk - 1) / kChunk);
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<Tally> partial(chunks);
        std::vector<std::int64_t> trunc(chunks, 0);
        parallel_chunks(chunks, workers, [&](std::size_t c) {
            const std::int64_t lo = static_cast<std::int64_t>(c) * kChunk;
            const std::int64_t hi = std::min(trials, lo + kChunk);
            Tally t;
            std::vector<std::vector<int>> blocks(m);
            for (std::int64_t trial = lo; trial < hi; ++trial) {
                RandomStream rng(seed, static_cast<std::uint32_t>(j), 0x80000000u | tag,
                                 static_cast<std::uint32_t>(trial));
                SequentialTest test(m, a, cfg);
                while (true) {
                    const auto need = static_cast<std::size_t>(test.training_needed());
                    for (std::size_t i = 0; i < m; ++i) {
                        blocks[i].resize(need);
                        for (auto& s : blocks[i]) s = samplers[i].draw(rng);
                    }
                    if (test.step(blocks, samplers[j].draw(rng))) break;
                }
                const auto& out = test.outcome();
                t.errors += out.decision == TestDecision::hypothesis(j) ? 0 : 1;
                t.tau_sum += out.tau;
                trunc[c] += out.decision == TestDecision::truncated() ? 1 : 0;
            }
            partial[c] = t;
        });
        Tally total;
        for (const auto& t : partial) total += t;
        for (auto v : trunc) res.truncated += v;
        const double nt = static_cast<double>(trials);
        res.per_hypothesis_error.push_back(static_cast<double>(total.errors) / nt);
        res.mean_tau.push_back(static_cast<double>(total.tau_sum) / nt);
    }
    return res;
}

}  // namespace exlab
