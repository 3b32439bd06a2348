#pragma once

// Replicated pipelines behind the repro commands and the acceptance checks.

#include <cstdint>
#include <vector>

#include "cascade/infer.hpp"
#include "cascade/ips.hpp"
#include "cascade/model.hpp"

namespace cascade::cli {

/// Two-stage cascade used for the trajectory figure.
CascadeParams two_stage_example();
/// One-stage cascade used for the estimation figures (kappa_M = 0.15).
CascadeParams one_stage_example();

struct SyntheticDesign {
    std::int64_t n = 100000;
    double T = 2.0;
    std::size_t K = 1000;
    SampleMode mode = SampleMode::uniform;
};

/// Simulate the particle system and keep K of its conversion times.
/// The run uses stream_seed(seed, 0), the subsample stream_seed(seed, 1).
TauSample synthetic_taus(const ConversionHazard& hazard, const SyntheticDesign& design, std::uint64_t seed);

struct MleReplicate {
    std::vector<double> theta;  // (kappa_M, kappa_P)
    double loglik = 0.0;
};

/// Replicate k draws data with stream_seed(seed, k) and fits (kappa_M, kappa_P)
/// within [lower, upper]; replicates run in parallel.
std::vector<MleReplicate> mle_replicates(const ConversionHazard& hazard, int J, const SyntheticDesign& design,
                                         std::vector<double> lower, std::vector<double> upper,
                                         std::size_t starts, std::size_t reps, std::uint64_t seed,
                                         unsigned threads);

double median(std::vector<double> v);

}  // namespace cascade::cli
