#include "studies.hpp"

#include <algorithm>

#include "cascade/parallel.hpp"
#include "cascade/rng.hpp"

namespace cascade::cli {

CascadeParams two_stage_example() { return CascadeParams(10, {1.0, 1.0}, {1.0, 1.0}, 0.1); }

CascadeParams one_stage_example() { return CascadeParams(10, {2.0}, {0.2}, 0.1); }

TauSample synthetic_taus(const ConversionHazard& hazard, const SyntheticDesign& design, std::uint64_t seed) {
    const auto run = simulate_ips(hazard, design.n, design.T, stream_seed(seed, 0));
    return sample_taus(run, design.K, stream_seed(seed, 1), design.mode);
}

std::vector<MleReplicate> mle_replicates(const ConversionHazard& hazard, int J, const SyntheticDesign& design,
                                         std::vector<double> lower, std::vector<double> upper,
                                         std::size_t starts, std::size_t reps, std::uint64_t seed,
                                         unsigned threads) {
    std::vector<MleReplicate> out(reps);
    parallel_for(reps, threads, [&](std::size_t k) {
        const auto s = stream_seed(seed, k);
        const auto problem = michaelis_menten_problem(synthetic_taus(hazard, design, s), J, lower, upper);
        MleOptions opt;
        opt.starts = starts;
        const auto fit = fit_mle(problem, opt, stream_seed(s, 2));
        out[k] = {fit.theta, fit.loglik};
    });
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) throw ValidationError("median of an empty sample");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2) return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

}  // namespace cascade::cli
