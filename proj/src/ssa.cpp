#include "cascade/ssa.hpp"

#include <algorithm>
#include <cmath>

#include "cascade/parallel.hpp"

namespace cascade {

SsaStepper::SsaStepper(const CascadeParams& params, const ScalingRegime& regime, FullState x0)
    : r_(params.r()), J_(params.J()), n_(static_cast<double>(regime.n)), x_(std::move(x0)) {
    validate_state(params, x_);
    const std::size_t m = Reaction::count(r_);
    rates_.resize(m);
    props_.resize(m);
    for (int i = 1; i <= r_; ++i) {
        rates_[static_cast<std::size_t>(2 * (i - 1))] = params.forward(i) * (i == 1 ? 1.0 : n_);
        rates_[static_cast<std::size_t>(2 * (i - 1) + 1)] = params.backward(i) * n_;
    }
    rates_[m - 1] = params.product() * n_;
}

double SsaStepper::refresh() {
    const auto& c = x_.x_C;
    std::int64_t bound = 0;
    for (auto v : c) bound += v;
    props_[0] = rates_[0] * static_cast<double>(x_.x_S) * static_cast<double>(J_ - bound);
    props_[1] = rates_[1] * static_cast<double>(c[0]);
    for (int i = 2; i <= r_; ++i) {
        const auto k = static_cast<std::size_t>(2 * (i - 1));
        props_[k] = rates_[k] * static_cast<double>(c[static_cast<std::size_t>(i - 2)]);
        props_[k + 1] = rates_[k + 1] * static_cast<double>(c[static_cast<std::size_t>(i - 1)]);
    }
    props_.back() = rates_.back() * static_cast<double>(c.back());
    double total = 0.0;
    for (double a : props_) total += a;
    return total;
}

SsaStepper::Outcome SsaStepper::step(Engine& eng, double T) {
    const double total = refresh();
    if (!(total > 0.0)) return Outcome::absorbed;
    const double t_next = t_ + exponential(eng, total);
    if (t_next > T) return Outcome::horizon;

    const double target = uniform01(eng) * total;
    double acc = 0.0;
    std::size_t k = props_.size();
    for (std::size_t j = 0; j < props_.size(); ++j) {
        if (props_[j] <= 0.0) continue;
        acc += props_[j];
        k = j;
        if (target < acc) break;
    }

    auto& c = x_.x_C;
    const std::size_t last = props_.size() - 1;
    if (k == last) {
        --c.back();
        ++x_.x_P;
    } else {
        const auto stage = static_cast<std::size_t>(k / 2);  // 0-based complex index
        const bool fwd = k % 2 == 0;
        if (stage == 0) {
            if (fwd) {
                --x_.x_S;
                ++c[0];
            } else {
                ++x_.x_S;
                --c[0];
            }
        } else if (fwd) {
            --c[stage - 1];
            ++c[stage];
        } else {
            ++c[stage - 1];
            --c[stage];
        }
    }
    last_ = k;
    t_ = t_next;
    return Outcome::fired;
}

Trajectory simulate_full(const CascadeParams& params, const ScalingRegime& regime, const FullState& x0,
                         double T, std::uint64_t seed) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("horizon T must be finite and > 0");
    Trajectory traj{params, regime, T, {}, {x0}, false};
    SsaStepper stepper(params, regime, x0);
    auto eng = make_engine(seed);
    for (;;) {
        const auto out = stepper.step(eng, T);
        if (out == SsaStepper::Outcome::absorbed) {
            traj.absorbed = true;
            break;
        }
        if (out == SsaStepper::Outcome::horizon) break;
        traj.event_times.push_back(stepper.time());
        traj.states.push_back(stepper.state());
    }
    return traj;
}

ScaledPath scale_trajectory(const Trajectory& traj) {
    ScaledPath path;
    path.r = traj.params.r();
    path.J = traj.params.J();
    path.T = traj.T;
    path.times.reserve(traj.states.size());
    path.states.reserve(traj.states.size());
    path.times.push_back(0.0);
    path.times.insert(path.times.end(), traj.event_times.begin(), traj.event_times.end());
    for (const auto& x : traj.states) path.states.push_back(scale_state(x, traj.regime));
    return path;
}

OccupationMeasure occupation_measure(const ScaledPath& path, double t) {
    if (!(t >= 0.0) || t > path.T) throw ValidationError("occupation horizon exceeds the path horizon");
    OccupationMeasure occ{Lattice(path.r, path.J), {}, t};
    occ.weights.assign(occ.lattice.size(), 0.0);
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        const double begin = path.times[k];
        if (begin >= t) break;
        const double end = k + 1 < path.times.size() ? std::min(path.times[k + 1], t) : t;
        occ.weights[occ.lattice.index_of(path.states[k].z_C)] += end - begin;
    }
    return occ;
}

namespace {

void check_grid(std::span<const double> grid, double T) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0 && !(grid[i] >= grid[i - 1])) throw ValidationError("sampling grid must be sorted");
        if (!(grid[i] >= 0.0) || grid[i] > T) throw ValidationError("sampling grid must lie in [0, T]");
    }
}

}  // namespace

std::vector<ScaledState> sample_on_grid(const ScaledPath& path, std::span<const double> grid) {
    check_grid(grid, path.T);
    std::vector<ScaledState> out;
    out.reserve(grid.size());
    std::size_t k = 0;
    for (double g : grid) {
        while (k + 1 < path.times.size() && path.times[k + 1] <= g) ++k;
        out.push_back(path.states[k]);
    }
    return out;
}

std::vector<ScaledState> simulate_on_grid(const CascadeParams& params, const ScalingRegime& regime,
                                          const FullState& x0, double T, std::span<const double> grid,
                                          std::uint64_t seed) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("horizon T must be finite and > 0");
    check_grid(grid, T);
    SsaStepper stepper(params, regime, x0);
    auto eng = make_engine(seed);
    std::vector<ScaledState> out;
    out.reserve(grid.size());
    std::size_t g = 0;
    FullState before = stepper.state();
    while (g < grid.size()) {
        before = stepper.state();
        if (stepper.step(eng, T) != SsaStepper::Outcome::fired) {
            for (; g < grid.size(); ++g) out.push_back(scale_state(stepper.state(), regime));
            break;
        }
        while (g < grid.size() && grid[g] < stepper.time()) {
            out.push_back(scale_state(before, regime));
            ++g;
        }
    }
    return out;
}

GridBatch::GridBatch(int r, std::vector<double> grid, std::size_t reps)
    : r_(r), grid_(std::move(grid)), reps_(reps), values_(reps * grid_.size() * width(), 0.0) {}

void GridBatch::set(std::size_t rep, std::size_t g, const ScaledState& z) {
    double* v = values_.data() + (rep * grid_.size() + g) * width();
    for (int i = 0; i < r_; ++i) v[i] = z.z_C[static_cast<std::size_t>(i)];
    v[r_] = z.z_S;
    v[r_ + 1] = z.z_P;
}

GridBatch simulate_grid_batch(const CascadeParams& params, const ScalingRegime& regime, const FullState& x0,
                              double T, std::vector<double> grid, std::size_t reps, std::uint64_t base_seed,
                              unsigned threads) {
    check_grid(grid, T);
    GridBatch batch(params.r(), std::move(grid), reps);
    parallel_for(reps, threads, [&](std::size_t k) {
        const auto samples = simulate_on_grid(params, regime, x0, T, batch.grid(), stream_seed(base_seed, k));
        for (std::size_t g = 0; g < samples.size(); ++g) batch.set(k, g, samples[g]);
    });
    return batch;
}

SupError sup_error(const CascadeParams& params, const ScalingRegime& regime, const FullState& x0, double T,
                   const ReducedPath& reduced, std::uint64_t seed) {
    if (T > reduced.T() * (1.0 + 1e-12)) throw ValidationError("reduced path is shorter than the SSA horizon");
    const double n = static_cast<double>(regime.n);
    SsaStepper stepper(params, regime, x0);
    auto eng = make_engine(seed);
    SupError err;
    auto compare = [&](double t, std::int64_t x_S, std::int64_t x_P) {
        err.z_s = std::max(err.z_s, std::abs(static_cast<double>(x_S) / n - reduced.z_s(t)));
        err.z_p = std::max(err.z_p, std::abs(static_cast<double>(x_P) / n - reduced.z_p(t)));
    };
    compare(0.0, x0.x_S, x0.x_P);
    // Z^(n) is constant between its own jumps and Z is monotone, so the sup is
    // attained at jump times (from either side) or at T.
    for (;;) {
        const std::int64_t s = stepper.state().x_S, p = stepper.state().x_P;
        if (stepper.step(eng, T) != SsaStepper::Outcome::fired) break;
        const auto& x = stepper.state();
        if (x.x_S != s || x.x_P != p) {
            compare(stepper.time(), s, p);
            compare(stepper.time(), x.x_S, x.x_P);
        }
    }
    compare(T, stepper.state().x_S, stepper.state().x_P);
    return err;
}

std::vector<SupError> sup_error_batch(const CascadeParams& params, const ScalingRegime& regime,
                                      const FullState& x0, double T, const ReducedPath& reduced,
                                      std::size_t reps, std::uint64_t base_seed, unsigned threads) {
    std::vector<SupError> out(reps);
    parallel_for(reps, threads, [&](std::size_t k) {
        out[k] = sup_error(params, regime, x0, T, reduced, stream_seed(base_seed, k));
    });
    return out;
}

FullState initial_state(int r, const ScalingRegime& regime, double z_S0, double z_P0) {
    if (r < 1) throw ValidationError("cascade depth r must be >= 1");
    if (!(z_S0 >= 0.0) || !(z_P0 >= 0.0)) throw ValidationError("initial (z_S, z_P) must be >= 0");
    FullState x;
    x.x_C.assign(static_cast<std::size_t>(r), 0);
    const double n = static_cast<double>(regime.n);
    x.x_S = std::llround(z_S0 * n);
    x.x_P = std::llround(z_P0 * n);
    return x;
}

}  // namespace cascade
