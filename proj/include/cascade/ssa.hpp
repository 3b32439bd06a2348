#pragma once

// Exact simulation of the full cascade X^(n) by the Gillespie direct method:
// exponential waiting time at the total propensity, then a categorical draw
// of the reaction. This realises the same law as the Poisson-random-measure
// representation of the jump process.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cascade/lattice.hpp"
#include "cascade/model.hpp"
#include "cascade/qssa.hpp"
#include "cascade/rng.hpp"

namespace cascade {

/// Single-path stepper. Holds the current state and clock; each call to
/// step() fires one reaction if it happens before the horizon.
class SsaStepper {
public:
    SsaStepper(const CascadeParams& params, const ScalingRegime& regime, FullState x0);

    enum class Outcome { fired, horizon, absorbed };

    /// Advance to the next event if it occurs at or before T. On `horizon`
    /// and `absorbed` the state is unchanged and time() is left at the last event.
    Outcome step(Engine& eng, double T);

    double time() const { return t_; }
    const FullState& state() const { return x_; }
    /// Reaction fired by the last successful step().
    Reaction last_reaction() const { return Reaction::from_index(last_, r_); }
    std::size_t last_index() const { return last_; }

private:
    double refresh();

    int r_;
    int J_;
    double n_;
    FullState x_;
    double t_ = 0.0;
    std::size_t last_ = 0;
    std::vector<double> rates_;  // kappa in reaction-index order, fast ones already times n
    std::vector<double> props_;
};

/// A fully logged path. states[0] is the initial state; states[k + 1] follows event k.
struct Trajectory {
    CascadeParams params;
    ScalingRegime regime;
    double T;
    std::vector<double> event_times;
    std::vector<FullState> states;
    bool absorbed = false;
};

Trajectory simulate_full(const CascadeParams& params, const ScalingRegime& regime, const FullState& x0,
                         double T, std::uint64_t seed);

/// Piecewise-constant scaled path; value on [times[k], times[k+1]) is states[k].
struct ScaledPath {
    int r = 1;
    int J = 1;
    double T = 0.0;
    std::vector<double> times;
    std::vector<ScaledState> states;
};

ScaledPath scale_trajectory(const Trajectory& traj);

/// Residence time of z_C in each cell of B^r_{J,+} over [0, t], indexed like `lattice`.
struct OccupationMeasure {
    Lattice lattice;
    std::vector<double> weights;
    double t;
};

OccupationMeasure occupation_measure(const ScaledPath& path, double t);

/// Cadlag sampling: the value at g is the post-jump state of the last event <= g.
std::vector<ScaledState> sample_on_grid(const ScaledPath& path, std::span<const double> grid);

/// Simulate without keeping the event log, recording only the grid values.
std::vector<ScaledState> simulate_on_grid(const CascadeParams& params, const ScalingRegime& regime,
                                          const FullState& x0, double T, std::span<const double> grid,
                                          std::uint64_t seed);

/// Grid samples of many replicates. Replicate k uses stream_seed(base_seed, k).
class GridBatch {
public:
    GridBatch(int r, std::vector<double> grid, std::size_t reps);

    int r() const { return r_; }
    const std::vector<double>& grid() const { return grid_; }
    std::size_t reps() const { return reps_; }

    double z_c(std::size_t rep, std::size_t g, int i) const { return at(rep, g)[static_cast<std::size_t>(i - 1)]; }
    double z_s(std::size_t rep, std::size_t g) const { return at(rep, g)[static_cast<std::size_t>(r_)]; }
    double z_p(std::size_t rep, std::size_t g) const { return at(rep, g)[static_cast<std::size_t>(r_ + 1)]; }
    void set(std::size_t rep, std::size_t g, const ScaledState& z);

private:
    const double* at(std::size_t rep, std::size_t g) const {
        return values_.data() + (rep * grid_.size() + g) * width();
    }
    std::size_t width() const { return static_cast<std::size_t>(r_ + 2); }

    int r_;
    std::vector<double> grid_;
    std::size_t reps_;
    std::vector<double> values_;
};

GridBatch simulate_grid_batch(const CascadeParams& params, const ScalingRegime& regime, const FullState& x0,
                              double T, std::vector<double> grid, std::size_t reps, std::uint64_t base_seed,
                              unsigned threads);

/// sup_{t <= T} |Z^(n)(t) - Z(t)| per component, for one SSA path against a reduced path.
struct SupError {
    double z_s = 0.0;
    double z_p = 0.0;
};

SupError sup_error(const CascadeParams& params, const ScalingRegime& regime, const FullState& x0, double T,
                   const ReducedPath& reduced, std::uint64_t seed);

std::vector<SupError> sup_error_batch(const CascadeParams& params, const ScalingRegime& regime,
                                      const FullState& x0, double T, const ReducedPath& reduced,
                                      std::size_t reps, std::uint64_t base_seed, unsigned threads);

/// Initial state with x_S = round(z_S0 * n), x_P = round(z_P0 * n) and empty complexes.
FullState initial_state(int r, const ScalingRegime& regime, double z_S0, double z_P0 = 0.0);

}  // namespace cascade
