#include "cascade/ips.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cascade/parallel.hpp"

namespace cascade {

namespace {

void check_run_args(std::int64_t n, double T) {
    if (n < 1) throw ValidationError("particle count n must be >= 1");
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("horizon T must be finite and > 0");
}

struct PairMoments {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    double count = 0;

    void add(double x, double y) {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        count += 1;
    }
    void merge(const PairMoments& o) {
        sx += o.sx;
        sy += o.sy;
        sxx += o.sxx;
        syy += o.syy;
        sxy += o.sxy;
        count += o.count;
    }
    double corr() const {
        const double vx = sxx - sx * sx / count;
        const double vy = syy - sy * sy / count;
        if (!(vx > 0.0) || !(vy > 0.0)) return 0.0;
        return (sxy - sx * sy / count) / std::sqrt(vx * vy);
    }
};

}  // namespace

std::uint64_t uniform_index(Engine& eng, std::uint64_t bound) {
    if (bound == 0) throw ValidationError("empty range");
    // Rejection on the top of the 64-bit range removes modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;) {
        const std::uint64_t v = eng();
        if (v < limit) return v % bound;
    }
}

double ParticleRun::mean_process(double t) const {
    const auto converted = std::upper_bound(conversion_times.begin(), conversion_times.end(), t) -
                           conversion_times.begin();
    return static_cast<double>(n - converted) / static_cast<double>(n);
}

ParticleRun simulate_ips(const ConversionHazard& hazard, std::int64_t n, double T, std::uint64_t seed) {
    check_run_args(n, T);
    auto eng = make_engine(seed);
    ParticleRun run;
    run.n = n;
    run.T = T;
    const double dn = static_cast<double>(n);
    double t = 0.0;
    for (std::int64_t m = n; m > 0; --m) {
        const double rate = dn * hazard.h(static_cast<double>(m) / dn);
        t += exponential(eng, rate);
        if (!(t <= T)) break;
        run.conversion_times.push_back(t);
    }
    return run;
}

ParticleRun simulate_ips_per_particle(const ConversionHazard& hazard, std::int64_t n, double T,
                                      std::uint64_t seed) {
    check_run_args(n, T);
    auto eng = make_engine(seed);
    ParticleRun run;
    run.n = n;
    run.T = T;
    const double dn = static_cast<double>(n);
    std::vector<std::int64_t> alive(static_cast<std::size_t>(n));
    std::iota(alive.begin(), alive.end(), 0);
    double t = 0.0;
    while (!alive.empty()) {
        // Every survivor runs its own exponential clock at the common hazard;
        // after each conversion the hazard changes and the clocks restart.
        const double g = hazard.g(static_cast<double>(alive.size()) / dn);
        double best = std::numeric_limits<double>::infinity();
        std::size_t who = 0;
        for (std::size_t j = 0; j < alive.size(); ++j) {
            const double w = exponential(eng, g);
            if (w < best) {
                best = w;
                who = j;
            }
        }
        t += best;
        if (!(t <= T)) break;
        run.conversion_times.push_back(t);
        run.who.push_back(alive[who]);
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(who));
    }
    return run;
}

void validate_tau_sample(const TauSample& sample) {
    if (!(sample.T > 0.0) || !std::isfinite(sample.T)) throw ValidationError("observation horizon T must be > 0");
    for (std::size_t i = 0; i < sample.times.size(); ++i) {
        const double t = sample.times[i];
        if (!(t > 0.0) || t > sample.T) throw ValidationError("product-formation times must lie in (0, T]");
        if (i > 0 && t < sample.times[i - 1]) throw ValidationError("product-formation times must be sorted");
    }
}

SampleMode parse_sample_mode(std::string_view text) {
    if (text == "uniform") return SampleMode::uniform;
    if (text == "first") return SampleMode::first;
    throw ValidationError("sample mode must be 'uniform' or 'first'");
}

TauSample sample_taus(const ParticleRun& run, std::size_t K, std::uint64_t seed, SampleMode mode) {
    const std::size_t available = run.conversion_times.size();
    if (K > available)
        throw ValidationError("requested K = " + std::to_string(K) + " product-formation times but the run has only " +
                              std::to_string(available) + " conversions in (0, T]");
    TauSample s;
    s.T = run.T;
    if (mode == SampleMode::first) {
        s.times.assign(run.conversion_times.begin(), run.conversion_times.begin() + static_cast<std::ptrdiff_t>(K));
        return s;
    }
    // Partial Fisher-Yates over indices.
    auto eng = make_engine(seed);
    std::vector<std::size_t> idx(available);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < K; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(eng, available - i));
        std::swap(idx[i], idx[j]);
    }
    s.times.reserve(K);
    for (std::size_t i = 0; i < K; ++i) s.times.push_back(run.conversion_times[idx[i]]);
    std::sort(s.times.begin(), s.times.end());
    return s;
}

std::vector<double> simulate_tagged(const ReducedPath& path, std::size_t count, std::uint64_t seed) {
    if (std::abs(path.z_s0() - 1.0) > 1e-12)
        throw ValidationError("tagged-particle law needs a reduced path started at Z_S(0) = 1");
    auto eng = make_engine(seed);
    std::vector<double> out(count);
    for (auto& tau : out) {
        const double u = uniform01(eng);
        const auto t = path.time_at_level(1.0 - u);
        tau = t ? *t : std::numeric_limits<double>::infinity();
    }
    return out;
}

TauSample tau_sample_from_draws(std::vector<double> draws, double T) {
    TauSample s;
    s.T = T;
    for (double t : draws)
        if (t > 0.0 && t <= T) s.times.push_back(t);
    std::sort(s.times.begin(), s.times.end());
    return s;
}

ChaosReport chaos_diagnostics(const ConversionHazard& hazard, std::int64_t n, std::size_t replicates, double T,
                              std::uint64_t base_seed, unsigned threads) {
    if (n < 2) throw ValidationError("chaos diagnostics need n >= 2 (a pair of distinct particles)");
    if (replicates < 100) throw ValidationError("chaos diagnostics need at least 100 replicates");
    check_run_args(n, T);
    const auto path = solve_reduced_ode(hazard, 1.0, 0.0, T);

    constexpr std::size_t grid_points = 401;
    std::vector<std::vector<double>> times(replicates);
    std::vector<PairMoments> pooled(replicates);
    std::vector<double> tau1(replicates), tau2(replicates);
    std::vector<std::vector<double>> qbar(replicates, std::vector<double>(grid_points));

    parallel_for(replicates, threads, [&](std::size_t k) {
        const auto run = simulate_ips(hazard, n, T, stream_seed(base_seed, k));
        auto eng = make_engine(stream_seed(mix64(base_seed), k));
        // rank[j]: position of particle j in the order of conversion.
        std::vector<std::int64_t> rank(static_cast<std::size_t>(n));
        std::iota(rank.begin(), rank.end(), std::int64_t{0});
        for (std::size_t i = rank.size() - 1; i > 0; --i)
            std::swap(rank[i], rank[static_cast<std::size_t>(uniform_index(eng, i + 1))]);
        const auto converted = static_cast<std::int64_t>(run.conversion_times.size());
        auto tau_capped = [&](std::size_t j) {
            const auto r = rank[j];
            return r < converted ? run.conversion_times[static_cast<std::size_t>(r)] : T;
        };
        for (std::size_t j = 0; j + 1 < rank.size(); j += 2) pooled[k].add(tau_capped(j), tau_capped(j + 1));
        tau1[k] = tau_capped(0);
        tau2[k] = tau_capped(1);
        for (std::size_t g = 0; g < grid_points; ++g)
            qbar[k][g] = run.mean_process(T * static_cast<double>(g) / static_cast<double>(grid_points - 1));
        times[k] = run.conversion_times;
    });

    ChaosReport rep;
    rep.n = n;
    rep.replicates = replicates;
    rep.T = T;
    const double dr = static_cast<double>(replicates);

    // Exchangeable survival: S(t) = 1 - #{all conversions <= t} / (n * reps).
    std::vector<double> all;
    for (const auto& v : times) all.insert(all.end(), v.begin(), v.end());
    std::sort(all.begin(), all.end());
    const double total = static_cast<double>(n) * dr;
    double sup = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const double z = path.z_s(all[i]);
        sup = std::max(sup, std::abs(1.0 - static_cast<double>(i) / total - z));
        sup = std::max(sup, std::abs(1.0 - static_cast<double>(i + 1) / total - z));
    }
    sup = std::max(sup, std::abs(1.0 - static_cast<double>(all.size()) / total - path.z_s(T)));
    rep.survival_sup_dist = sup;
    for (std::size_t g = 0; g < grid_points; ++g) {
        double m = 0.0, m2 = 0.0;
        for (std::size_t k = 0; k < replicates; ++k) {
            m += qbar[k][g];
            m2 += qbar[k][g] * qbar[k][g];
        }
        m /= dr;
        const double var = std::max(0.0, (m2 / dr - m * m) * dr / (dr - 1.0));
        rep.stderr_survival = std::max(rep.stderr_survival, std::sqrt(var / dr));
    }

    PairMoments all_pairs;
    std::vector<double> per_run(replicates);
    for (std::size_t k = 0; k < replicates; ++k) {
        all_pairs.merge(pooled[k]);
        per_run[k] = pooled[k].corr();
    }
    rep.pair_corr = all_pairs.corr();
    {
        const double mean = std::accumulate(per_run.begin(), per_run.end(), 0.0) / dr;
        double ss = 0.0;
        for (double c : per_run) ss += (c - mean) * (c - mean);
        rep.stderr_pair_corr = std::sqrt(ss / (dr - 1.0) / dr);
    }

    // Particle 1 alone: empirical survival of tau_1 across runs.
    std::vector<double> sorted1 = tau1;
    std::sort(sorted1.begin(), sorted1.end());
    double sup1 = 0.0;
    for (std::size_t i = 0; i < sorted1.size(); ++i) {
        if (sorted1[i] >= T) break;  // capped values are censored
        const double z = path.z_s(sorted1[i]);
        sup1 = std::max(sup1, std::abs(1.0 - static_cast<double>(i) / dr - z));
        sup1 = std::max(sup1, std::abs(1.0 - static_cast<double>(i + 1) / dr - z));
    }
    const auto done1 = static_cast<double>(std::lower_bound(sorted1.begin(), sorted1.end(), T) - sorted1.begin());
    sup1 = std::max(sup1, std::abs(1.0 - done1 / dr - path.z_s(T)));
    rep.survival_sup_dist_particle1 = sup1;

    PairMoments p12;
    for (std::size_t k = 0; k < replicates; ++k) p12.add(tau1[k], tau2[k]);
    rep.pair_corr_particles12 = p12.corr();
    rep.stderr_pair_corr_particles12 = (1.0 - rep.pair_corr_particles12 * rep.pair_corr_particles12) / std::sqrt(dr - 1.0);
    return rep;
}

}  // namespace cascade
