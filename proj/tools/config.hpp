#pragma once

// Run configuration: one JSON document, with command-line flags taking precedence.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cascade/infer.hpp"
#include "cascade/ips.hpp"
#include "cascade/model.hpp"
#include "cascade/qssa.hpp"
#include "json.hpp"

namespace cascade::cli {

using nlohmann::json;

/// Rates as written in the config: either the full cascade
/// {"J", "forward", "backward", "product"} or the reduced pair {"J", "kappa_M", "kappa_P"}.
struct RateSpec {
    int J = 1;
    std::optional<CascadeParams> cascade;
    double kappa_M = 0.0;
    double kappa_P = 0.0;

    bool is_reduced() const { return !cascade.has_value(); }
    /// Full cascade; a reduced spec maps to kappa_1 = 1, kappa_-1 = kappa_M - kappa_P.
    CascadeParams params() const;
    ConversionHazard hazard() const;
    json to_json() const;
};

RateSpec parse_rates(const json& node);

struct RunConfig {
    std::optional<RateSpec> rates;
    std::optional<std::int64_t> n;
    std::optional<double> T;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::size_t> reps;
    std::optional<double> z_s0;
    std::optional<double> z_p0;
    std::optional<double> zs;
    std::optional<std::size_t> grid_points;
    std::vector<double> grid;  // explicit grid, overrides grid_points
    std::optional<std::size_t> K;
    std::optional<SampleMode> sample_mode;
    std::optional<std::string> fit;
    std::vector<double> lower;
    std::vector<double> upper;
    std::optional<std::string> prior_kind;
    std::vector<double> prior_lo;
    std::vector<double> prior_hi;
    std::optional<std::size_t> starts;
    std::optional<std::size_t> burn_in;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> steps;
    std::optional<std::string> data;
    std::optional<std::string> column;
    std::optional<std::size_t> kde_points;
    bool occupation = false;

    const RateSpec& require_rates() const;
    std::uint64_t seed_or_default() const { return seed.value_or(1); }
    unsigned thread_count() const { return threads.value_or(1); }
    /// Explicit grid, or grid_points (default `points`) equally spaced on [0, T].
    std::vector<double> time_grid(double T, std::size_t points = 101) const;

    /// Canonical form of every field that was set; hashed into the provenance line.
    json to_json() const;
};

RunConfig parse_config(const json& doc);
RunConfig load_config(const std::string& path);

/// Which coordinates to fit. "kappa_M,kappa_P" (or a subset) selects the reduced
/// parameterization; "raw:i,j,..." selects 0-based entries of
/// (kappa_1, kappa_-1, ..., kappa_r, kappa_-r, kappa_P).
struct FitSpec {
    Parameterization parameterization = Parameterization::michaelis_menten;
    std::vector<std::size_t> free;
};

FitSpec parse_fit_spec(std::string_view text);

/// Inference problem for `data` under the config's rates, fit spec and bounds.
/// Default bounds are [1e-3, 10] per fitted coordinate.
InferenceProblem build_problem(const RunConfig& cfg, TauSample data);

/// Prior from the config; defaults to independent uniforms on the bounds.
PriorSpec build_prior(const RunConfig& cfg, const InferenceProblem& problem);

}  // namespace cascade::cli
