#pragma once

// Interacting particle system of product-formation times.
//
// n substrate particles each convert with hazard g(Qbar(t)), where Qbar is
// the fraction still unconverted. While m particles remain, the next
// conversion therefore comes at total rate m g(m/n) = n h(m/n), and by
// exchangeability the converting particle is uniform among the survivors.
// The conversion-time sequence is thus a pure-death chain, and particle
// identities are an independent uniform random permutation of the order of
// conversion.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "cascade/qssa.hpp"
#include "cascade/rng.hpp"

namespace cascade {

struct ParticleRun {
    std::int64_t n = 0;
    double T = 0.0;
    std::vector<double> conversion_times;  // increasing, all <= T
    /// Particle that converted at each time; filled only by the per-particle simulator.
    std::vector<std::int64_t> who;

    /// Qbar(t) = (n - #{conversions <= t}) / n.
    double mean_process(double t) const;
};

/// Aggregated death-chain simulation on [0, T].
ParticleRun simulate_ips(const ConversionHazard& hazard, std::int64_t n, double T, std::uint64_t seed);

/// Direct simulation with one clock per particle (O(n^2)); used to check the aggregation.
ParticleRun simulate_ips_per_particle(const ConversionHazard& hazard, std::int64_t n, double T,
                                      std::uint64_t seed);

struct TauSample {
    std::vector<double> times;  // sorted, in (0, T]
    double T = 0.0;

    std::size_t K() const { return times.size(); }
};

/// Throws ValidationError unless times are sorted, in (0, T] and T > 0.
void validate_tau_sample(const TauSample& sample);

enum class SampleMode { uniform, first };
SampleMode parse_sample_mode(std::string_view text);

/// K conversion times from the run: a simple random sample (uniform) or the
/// first K, returned sorted. Throws if fewer than K conversions are available.
TauSample sample_taus(const ParticleRun& run, std::size_t K, std::uint64_t seed,
                      SampleMode mode = SampleMode::uniform);

/// i.i.d. draws from the limiting law mu([0, t]) = 1 - Z_S(t) by inverse CDF.
/// Draws beyond the path horizon are +infinity (censored).
std::vector<double> simulate_tagged(const ReducedPath& path, std::size_t count, std::uint64_t seed);

/// Censored draws removed, the rest sorted, as a TauSample with horizon T.
TauSample tau_sample_from_draws(std::vector<double> draws, double T);

struct ChaosReport {
    std::int64_t n = 0;
    std::size_t replicates = 0;
    double T = 0.0;
    /// sup_t |S(t) - Z_S(t)| with S the survival of a single particle,
    /// estimated exchangeably as the replicate mean of Qbar.
    double survival_sup_dist = 0.0;
    double stderr_survival = 0.0;  // largest pointwise standard error of S
    /// corr(tau_1 ^ T, tau_2 ^ T), pooled over n/2 disjoint particle pairs per run.
    double pair_corr = 0.0;
    double stderr_pair_corr = 0.0;
    /// The same two statistics from particles 1 and 2 only (one value per run).
    double survival_sup_dist_particle1 = 0.0;
    double pair_corr_particles12 = 0.0;
    double stderr_pair_corr_particles12 = 0.0;
};

/// Requires n >= 2 and replicates >= 100. Run k uses stream_seed(base_seed, k).
ChaosReport chaos_diagnostics(const ConversionHazard& hazard, std::int64_t n, std::size_t replicates, double T,
                              std::uint64_t base_seed, unsigned threads);

/// Uniform integer in [0, bound).
std::uint64_t uniform_index(Engine& eng, std::uint64_t bound);

}  // namespace cascade
