#include "carate/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace carate {
namespace {

constexpr std::size_t kBatches = 32;
enum : std::uint64_t { kVstarStream = 0xb5, kVsatStream = 0xba };

void check_draws(std::size_t draws) {
    if (draws < kMinOracleDraws)
        throw ConfigError("oracle needs at least " + std::to_string(kMinOracleDraws) + " draws");
}

std::size_t batch_begin(std::size_t draws, std::size_t b) { return draws * b / kBatches; }

// Runs fn(b) for b in [0, kBatches) on up to `jobs` threads. Every batch writes
// its own slot, so the reduction order is fixed by batch index.
template <class Fn>
void for_each_batch(unsigned jobs, Fn&& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, kBatches));
    if (jobs == 1) {
        for (std::size_t b = 0; b < kBatches; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::size_t b; (b = next.fetch_add(1)) < kBatches;) fn(b);
        });
    for (auto& th : pool) th.join();
}

struct StratumMoments {
    double count = 0.0;
    double sum[2] = {0.0, 0.0};
    double sum_sq[2] = {0.0, 0.0};

    void add(const StratumMoments& o) {
        count += o.count;
        for (int a = 0; a < 2; ++a) {
            sum[a] += o.sum[a];
            sum_sq[a] += o.sum_sq[a];
        }
    }
};

double assemble_vsat(const std::vector<StratumMoments>& m, const TargetProportions& pi,
                     double beta0) {
    double total = 0.0;
    for (const auto& s : m) total += s.count;
    double v = 0.0;
    for (std::size_t s = 0; s < m.size(); ++s) {
        const auto& st = m[s];
        if (st.count == 0.0) throw DataError("vsat_oracle: stratum " + std::to_string(s + 1) +
                                             " received no draws (insufficient support)");
        double mean[2], var[2];
        for (int a = 0; a < 2; ++a) {
            mean[a] = st.sum[a] / st.count;
            var[a] = std::max(0.0, st.sum_sq[a] / st.count - mean[a] * mean[a]);
        }
        const double p = pi(static_cast<int>(s + 1));
        const double gap = mean[1] - mean[0] - beta0;
        v += st.count / total * (var[1] / p + var[0] / (1.0 - p) + gap * gap);
    }
    return v;
}

}  // namespace

OracleEstimate speb_oracle(const PopulationSpec& spec, const StrataSpec& strata,
                           const TargetProportions& pi, std::size_t draws, std::uint64_t seed,
                           unsigned jobs) {
    check_draws(draws);
    std::vector<double> sums(kBatches, 0.0), sums_sq(kBatches, 0.0);
    for_each_batch(jobs, [&](std::size_t b) {
        Engine eng = make_engine(derive_seed(seed, {kVstarStream, b}));
        std::vector<double> z(spec.dim);
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t d = batch_begin(draws, b); d < batch_begin(draws, b + 1); ++d) {
            spec.covariate_sampler(eng, z);
            const double p = pi(strata.classify(z));
            const double sd1 = spec.scale(1, z), sd0 = spec.scale(0, z);
            const double gap = spec.mean(1, z) - spec.mean(0, z) - spec.true_ate;
            const double v = sd1 * sd1 / p + sd0 * sd0 / (1.0 - p) + gap * gap;
            s1 += v;
            s2 += v * v;
        }
        sums[b] = s1;
        sums_sq[b] = s2;
    });
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t b = 0; b < kBatches; ++b) {
        s1 += sums[b];
        s2 += sums_sq[b];
    }
    const double n = static_cast<double>(draws);
    const double mean = s1 / n;
    const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n), draws};
}

OracleEstimate vsat_oracle(const PopulationSpec& spec, const StrataSpec& strata,
                           const TargetProportions& pi, std::size_t draws, std::uint64_t seed,
                           unsigned jobs) {
    check_draws(draws);
    const auto S = static_cast<std::size_t>(strata.num_strata);
    std::vector<std::vector<StratumMoments>> batches(kBatches, std::vector<StratumMoments>(S));
    for_each_batch(jobs, [&](std::size_t b) {
        Engine eng = make_engine(derive_seed(seed, {kVsatStream, b}));
        std::vector<double> z(spec.dim);
        auto& acc = batches[b];
        for (std::size_t d = batch_begin(draws, b); d < batch_begin(draws, b + 1); ++d) {
            spec.covariate_sampler(eng, z);
            const int s = strata.classify(z);
            const double eps = spec.noise_sampler(eng);
            auto& st = acc[static_cast<std::size_t>(s - 1)];
            st.count += 1.0;
            for (int a = 0; a < 2; ++a) {
                const double y = spec.mean(a, z) + spec.scale(a, z) * eps;
                st.sum[a] += y;
                st.sum_sq[a] += y * y;
            }
        }
    });
    std::vector<StratumMoments> pooled(S);
    for (const auto& b : batches)
        for (std::size_t s = 0; s < S; ++s) pooled[s].add(b[s]);
    const double value = assemble_vsat(pooled, pi, spec.true_ate);

    // Batch means: v_sat evaluated per batch; batches lacking a stratum are skipped.
    std::vector<double> per_batch;
    for (const auto& b : batches) {
        if (std::any_of(b.begin(), b.end(), [](const StratumMoments& m) { return m.count < 2.0; }))
            continue;
        per_batch.push_back(assemble_vsat(b, pi, spec.true_ate));
    }
    double se = 0.0;
    if (per_batch.size() >= 2) {
        double mean = 0.0;
        for (double v : per_batch) mean += v;
        mean /= static_cast<double>(per_batch.size());
        double ss = 0.0;
        for (double v : per_batch) ss += (v - mean) * (v - mean);
        const double k = static_cast<double>(per_batch.size());
        se = std::sqrt(ss / (k - 1.0) / k);
    }
    return {value, se, draws};
}

BoundReport bound_report(const PopulationSpec& spec, const StrataSpec& strata,
                         const TargetProportions& pi, std::size_t draws, std::uint64_t seed,
                         unsigned jobs) {
    const auto vs = speb_oracle(spec, strata, pi, draws, seed, jobs);
    const auto vt = vsat_oracle(spec, strata, pi, draws, seed, jobs);
    return {vs.value, vt.value, draws, vs.mc_se, vt.mc_se};
}

}  // namespace carate
