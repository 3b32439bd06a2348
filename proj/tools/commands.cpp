#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "cascade/fclt.hpp"
#include "cascade/infer.hpp"
#include "cascade/io.hpp"
#include "cascade/ips.hpp"
#include "cascade/kernels.hpp"
#include "cascade/poisson.hpp"
#include "cascade/qssa.hpp"
#include "cascade/ssa.hpp"
#include "config.hpp"
#include "studies.hpp"

#ifndef CASCADE_VERSION
#define CASCADE_VERSION "dev"
#endif

namespace cascade::cli {

namespace {

// Files under the output directory, or the fallback stream for everything.
class Sink {
public:
    Sink(std::optional<std::string> dir, std::ostream& fallback) : dir_(std::move(dir)), fallback_(fallback) {
        if (dir_) {
            std::error_code ec;
            std::filesystem::create_directories(*dir_, ec);
            if (ec) throw ValidationError("cannot create output directory '" + *dir_ + "': " + ec.message());
        }
    }

    std::ostream& open(const std::string& name) {
        if (!dir_) return fallback_;
        const auto path = std::filesystem::path(*dir_) / name;
        auto f = std::make_unique<std::ofstream>(path);
        if (!*f) throw ValidationError("cannot write '" + path.string() + "'");
        files_.push_back(std::move(f));
        return *files_.back();
    }

    void close() {
        for (auto& f : files_) {
            f->flush();
            if (!*f) throw ValidationError("write to an output file failed");
        }
        files_.clear();
        fallback_.flush();
    }

private:
    std::optional<std::string> dir_;
    std::ostream& fallback_;
    std::vector<std::unique_ptr<std::ofstream>> files_;
};

struct Context {
    std::string command;
    RunConfig cfg;
    Provenance prov;
    Sink& sink;
};

json provenance_json(const Provenance& p) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(p.config_hash));
    return {{"tool", "cascade"}, {"version", p.version}, {"config", hex}, {"seed", p.seed}};
}

void write_json(std::ostream& os, const json& j) { os << j.dump(2) << "\n"; }

std::vector<std::string> trajectory_header(int r) {
    std::vector<std::string> h{"t", "rep"};
    for (int i = 1; i <= r; ++i) h.push_back("z_c_" + std::to_string(i));
    h.push_back("z_s");
    h.push_back("z_p");
    return h;
}

void write_trajectories(std::ostream& os, const Provenance& prov, const GridBatch& batch, std::int64_t n) {
    CsvWriter w(os, prov, trajectory_header(batch.r()));
    w.comment("n=" + std::to_string(n));
    for (std::size_t k = 0; k < batch.reps(); ++k)
        for (std::size_t g = 0; g < batch.grid().size(); ++g) {
            w.cell(batch.grid()[g]).cell(static_cast<std::int64_t>(k));
            for (int i = 1; i <= batch.r(); ++i) w.cell(batch.z_c(k, g, i));
            w.cell(batch.z_s(k, g)).cell(batch.z_p(k, g));
            w.end_row();
        }
    w.finish();
}

void write_reduced(std::ostream& os, const Provenance& prov, const ReducedPath& path, const std::vector<double>& grid) {
    CsvWriter w(os, prov, {"t", "z_s", "z_p"});
    for (double t : grid) {
        w.cell(t).cell(path.z_s(t)).cell(path.z_p(t));
        w.end_row();
    }
    w.finish();
}

void write_times(std::ostream& os, const Provenance& prov, const std::vector<double>& times, double T) {
    CsvWriter w(os, prov, {"idx", "t"});
    w.comment("T=" + format_double(T));
    for (std::size_t i = 0; i < times.size(); ++i) {
        w.cell(static_cast<std::int64_t>(i + 1)).cell(times[i]);
        w.end_row();
    }
    w.finish();
}

void write_kde(std::ostream& os, const Provenance& prov, const KdeSummary& s) {
    CsvWriter w(os, prov, {"x", "density"});
    w.comment("bandwidth=" + format_double(s.bandwidth));
    w.comment("mode=" + format_double(s.mode));
    w.comment("modes=" + std::to_string(s.modes));
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        w.cell(s.grid[i]).cell(s.density[i]);
        w.end_row();
    }
    w.finish();
}

json kde_json(const KdeSummary& s) {
    return {{"bandwidth", s.bandwidth}, {"mode", s.mode}, {"modes", s.modes}};
}

std::string sigma_text(const Mat2& s) {
    return format_double(s.a11) + "," + format_double(s.a12) + "," + format_double(s.a22);
}

std::int64_t positive_n(const RunConfig& cfg, std::int64_t dflt) {
    const auto n = cfg.n.value_or(dflt);
    if (n < 1) throw ValidationError("config field 'n': must be >= 1");
    return n;
}

double horizon(const RunConfig& cfg, double dflt) {
    const double T = cfg.T.value_or(dflt);
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("config field 'T': must be finite and > 0");
    return T;
}

void cmd_simulate_ssa(Context& c) {
    const auto params = c.cfg.require_rates().params();
    const ScalingRegime reg(positive_n(c.cfg, 1000));
    const double T = horizon(c.cfg, 1.0);
    const auto x0 = initial_state(params.r(), reg, c.cfg.z_s0.value_or(1.0), c.cfg.z_p0.value_or(0.0));
    const auto batch = simulate_grid_batch(params, reg, x0, T, c.cfg.time_grid(T), c.cfg.reps.value_or(1),
                                           c.prov.seed, c.cfg.thread_count());
    write_trajectories(c.sink.open("trajectories.csv"), c.prov, batch, reg.n);
    if (c.cfg.occupation) {
        const auto traj = simulate_full(params, reg, x0, T, stream_seed(c.prov.seed, 0));
        const auto occ = occupation_measure(scale_trajectory(traj), T);
        CsvWriter w(c.sink.open("occupation.csv"), c.prov, {"cell", "weight"});
        w.comment("t=" + format_double(T));
        for (std::size_t s = 0; s < occ.lattice.size(); ++s) {
            w.cell(Lattice::label(occ.lattice.state(s))).cell(occ.weights[s]);
            w.end_row();
        }
        w.finish();
    }
}

void cmd_reduce(Context& c) {
    const auto hazard = c.cfg.require_rates().hazard();
    const double T = horizon(c.cfg, 1.0);
    const auto path = solve_reduced_ode(hazard, c.cfg.z_s0.value_or(1.0), c.cfg.z_p0.value_or(0.0), T);
    write_reduced(c.sink.open("reduced.csv"), c.prov, path, c.cfg.time_grid(T));
}

void cmd_stationary(Context& c) {
    const auto params = c.cfg.require_rates().params();
    const double zs = c.cfg.zs.value_or(1.0);
    const auto w = stationary_weights(params, zs);
    double bound = 0.0;
    for (double p : w.p) bound += p;
    CsvWriter csv(c.sink.open("stationary.csv"), c.prov, {"i", "a_i", "p_i"});
    csv.comment("z_S=" + format_double(zs));
    csv.comment("p_0=" + format_double(1.0 - bound));
    for (std::size_t i = 0; i < w.p.size(); ++i) {
        csv.cell(static_cast<std::int64_t>(i + 1)).cell(w.a[i]).cell(w.p[i]);
        csv.end_row();
    }
    csv.finish();
}

void cmd_poisson(Context& c) {
    const auto params = c.cfg.require_rates().params();
    const double zs = c.cfg.zs.value_or(1.0);
    const auto sol = solve_poisson(params, zs);
    CsvWriter csv(c.sink.open("poisson.csv"), c.prov, {"i", "b1_i", "b2_i"});
    csv.comment("z_S=" + format_double(zs));
    csv.comment("residual_max=" + format_double(sol.residual_max));
    csv.comment("residual_tolerance=" + format_double(sol.residual_tolerance));
    for (std::size_t i = 0; i < sol.b1.size(); ++i) {
        csv.cell(static_cast<std::int64_t>(i + 1)).cell(sol.b1[i]).cell(sol.b2[i]);
        csv.end_row();
    }
    csv.finish();
}

void cmd_fclt_model(Context& c) {
    const auto params = c.cfg.require_rates().params();
    const double T = horizon(c.cfg, 1.0);
    const auto path = solve_reduced_ode(params, c.cfg.z_s0.value_or(1.0), c.cfg.z_p0.value_or(0.0), T);
    const auto model = FluctuationModel::from_cascade(params, path);
    const auto grid = c.cfg.time_grid(T);
    {
        CsvWriter w(c.sink.open("fclt_model.csv"), c.prov, {"t", "a11", "a21", "d11", "d12", "d22"});
        for (double t : grid) {
            const auto a = model.drift(t);
            const auto d = model.diffusion(t);
            w.cell(t).cell(a.a11).cell(a.a21).cell(d.a11).cell(d.a12).cell(d.a22);
            w.end_row();
        }
        w.finish();
    }
    const auto cov = solve_covariance(model, {}, T);
    {
        CsvWriter w(c.sink.open("covariance.csv"), c.prov, {"t", "s11", "s12", "s22"});
        for (double t : grid) {
            const auto s = cov(t);
            w.cell(t).cell(s.a11).cell(s.a12).cell(s.a22);
            w.end_row();
        }
        w.finish();
    }
    if (c.cfg.reps && *c.cfg.reps > 0) {
        const auto sample = simulate_fluctuation_batch(model, 0.0, 0.0, T, c.cfg.steps.value_or(0), *c.cfg.reps,
                                                       c.prov.seed, c.cfg.thread_count());
        CsvWriter w(c.sink.open("fclt_sde.csv"), c.prov, {"rep", "u_s", "u_p"});
        w.comment("t=" + format_double(T));
        w.comment("sigma_ode=" + sigma_text(cov(T)));
        w.comment("simd=" + std::string(kernels::isa_name(kernels::active_isa())));
        for (std::size_t k = 0; k < sample.size(); ++k) {
            w.cell(static_cast<std::int64_t>(k)).cell(sample.u_s[k]).cell(sample.u_p[k]);
            w.end_row();
        }
        w.finish();
    }
}

void cmd_fclt_empirical(Context& c) {
    const auto params = c.cfg.require_rates().params();
    const ScalingRegime reg(positive_n(c.cfg, 1000));
    const double T = horizon(c.cfg, 1.0);
    const auto x0 = initial_state(params.r(), reg, c.cfg.z_s0.value_or(1.0), c.cfg.z_p0.value_or(0.0));
    const auto z0 = scale_state(x0, reg);
    const auto path = solve_reduced_ode(params, z0.z_S, z0.z_P, T);
    const auto batch = simulate_grid_batch(params, reg, x0, T, {0.0, T}, c.cfg.reps.value_or(100), c.prov.seed,
                                           c.cfg.thread_count());
    const auto sample = empirical_fluctuation(batch, reg, path);
    const auto mo = sample_moments(sample);
    const auto sigma = solve_covariance(FluctuationModel::from_cascade(params, path), {}, T)(T);
    CsvWriter w(c.sink.open("fclt_empirical.csv"), c.prov, {"rep", "u_s", "u_p"});
    w.comment("n=" + std::to_string(reg.n));
    w.comment("t=" + format_double(T));
    w.comment("sigma_ode=" + sigma_text(sigma));
    w.comment("sigma_empirical=" + sigma_text(mo.cov));
    for (std::size_t k = 0; k < sample.size(); ++k) {
        w.cell(static_cast<std::int64_t>(k)).cell(sample.u_s[k]).cell(sample.u_p[k]);
        w.end_row();
    }
    w.finish();
}

void cmd_ips(Context& c) {
    const auto hazard = c.cfg.require_rates().hazard();
    const auto n = positive_n(c.cfg, 1000);
    const double T = horizon(c.cfg, 1.0);
    const auto run = simulate_ips(hazard, n, T, c.prov.seed);
    write_times(c.sink.open("conversions.csv"), c.prov, run.conversion_times, T);
    if (c.cfg.reps && *c.cfg.reps > 0) {
        const auto rep = chaos_diagnostics(hazard, n, *c.cfg.reps, T, c.prov.seed, c.cfg.thread_count());
        write_json(c.sink.open("chaos.json"),
                   {{"provenance", provenance_json(c.prov)},
                    {"n", rep.n},
                    {"replicates", rep.replicates},
                    {"T", rep.T},
                    {"survival_sup_dist", rep.survival_sup_dist},
                    {"stderr_survival", rep.stderr_survival},
                    {"pair_corr", rep.pair_corr},
                    {"stderr_pair_corr", rep.stderr_pair_corr},
                    {"survival_sup_dist_particle1", rep.survival_sup_dist_particle1},
                    {"pair_corr_particles12", rep.pair_corr_particles12},
                    {"stderr_pair_corr_particles12", rep.stderr_pair_corr_particles12}});
    }
}

SyntheticDesign design_from(const RunConfig& cfg, std::int64_t n, double T) {
    SyntheticDesign d;
    d.n = positive_n(cfg, n);
    d.T = horizon(cfg, T);
    d.K = cfg.K.value_or(1000);
    d.mode = cfg.sample_mode.value_or(SampleMode::uniform);
    return d;
}

void cmd_sample_taus(Context& c) {
    const auto hazard = c.cfg.require_rates().hazard();
    const auto design = design_from(c.cfg, 100000, 2.0);
    const auto data = synthetic_taus(hazard, design, c.prov.seed);
    write_times(c.sink.open("taus.csv"), c.prov, data.times, data.T);
}

TauSample input_data(const RunConfig& cfg) {
    if (!cfg.data) throw ValidationError("config field 'data' (or --data) naming a TauSample CSV is required");
    return read_tau_sample_file(*cfg.data);
}

json mle_json(const InferenceProblem& problem, const MleResult& fit, const Provenance& prov) {
    json starts = json::array();
    for (const auto& s : fit.starts)
        starts.push_back({{"start", s.start}, {"x", s.x}, {"loglik", s.loglik}, {"iterations", s.iterations},
                          {"converged", s.converged}});
    return {{"provenance", provenance_json(prov)},
            {"names", problem.names()},
            {"theta", fit.theta},
            {"loglik", fit.loglik},
            {"K", problem.data.K()},
            {"T", problem.data.T},
            {"starts", starts}};
}

void cmd_fit_mle(Context& c) {
    const auto problem = build_problem(c.cfg, input_data(c.cfg));
    MleOptions opt;
    opt.starts = c.cfg.starts.value_or(8);
    opt.threads = c.cfg.thread_count();
    const auto fit = fit_mle(problem, opt, c.prov.seed);
    write_json(c.sink.open("mle.json"), mle_json(problem, fit, c.prov));
}

ChainOptions chain_options(const RunConfig& cfg) {
    ChainOptions opt;
    opt.burn_in = cfg.burn_in.value_or(opt.burn_in);
    opt.samples = cfg.samples.value_or(opt.samples);
    return opt;
}

// Chain CSV plus per-parameter KDE files and a JSON summary.
void write_posterior(Context& c, const Posterior& post, const std::string& prefix, const ChainOptions& opt,
                     const std::vector<double>& truth) {
    std::vector<std::string> header{"iter", "logpost"};
    for (std::size_t j = 0; j < post.names.size(); ++j) header.push_back("param_" + std::to_string(j + 1));
    {
        CsvWriter w(c.sink.open(prefix + "chain.csv"), c.prov, header);
        std::string names;
        for (const auto& nm : post.names) names += (names.empty() ? "" : ",") + nm;
        w.comment("params=" + names);
        for (std::size_t k = 0; k < post.chain.size(); ++k) {
            w.cell(static_cast<std::int64_t>(opt.burn_in + k + 1)).cell(post.log_posterior[k]);
            for (double v : post.chain[k]) w.cell(v);
            w.end_row();
        }
        w.finish();
    }
    json params = json::array();
    for (std::size_t j = 0; j < post.names.size(); ++j) {
        const auto m = post.marginal(j);
        json entry{{"name", post.names[j]}, {"median", median(m)}};
        double mean = 0.0;
        for (double v : m) mean += v / static_cast<double>(m.size());
        entry["mean"] = mean;
        if (!truth.empty()) entry["truth"] = truth[j];
        try {
            const auto s = kde_summary(m);
            entry["kde"] = kde_json(s);
            write_kde(c.sink.open(prefix + "kde_" + post.names[j] + ".csv"), c.prov, s);
        } catch (const ValidationError&) {
            entry["kde"] = nullptr;  // constant marginal
        }
        params.push_back(entry);
    }
    write_json(c.sink.open(prefix + "posterior.json"),
               {{"provenance", provenance_json(c.prov)},
                {"prior", post.prior},
                {"burn_in", opt.burn_in},
                {"samples", opt.samples},
                {"acceptance_rate", post.acceptance_rate},
                {"burn_in_acceptance", post.burn_in_acceptance},
                {"proposal_scale", post.proposal_scale},
                {"parameters", params}});
}

void cmd_fit_bayes(Context& c) {
    const auto problem = build_problem(c.cfg, input_data(c.cfg));
    const auto prior = build_prior(c.cfg, problem);
    const auto opt = chain_options(c.cfg);
    const auto post = fit_bayes(problem, prior, opt, c.prov.seed, c.cfg.thread_count());
    write_posterior(c, post, "", opt, {});
}

std::vector<double> read_column(const std::string& path, const std::optional<std::string>& column) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file '" + path + "'");
    std::vector<double> values;
    std::optional<std::size_t> col;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
        if (!col) {
            if (!column) {
                col = 0;
            } else {
                const auto it = std::find(fields.begin(), fields.end(), *column);
                if (it == fields.end()) throw ValidationError("input '" + path + "' has no column '" + *column + "'");
                col = static_cast<std::size_t>(it - fields.begin());
            }
            continue;
        }
        if (*col >= fields.size())
            throw ValidationError("input '" + path + "' line " + std::to_string(lineno) + " has too few fields");
        values.push_back(parse_double(fields[*col]));
    }
    return values;
}

void cmd_kde(Context& c) {
    if (!c.cfg.data) throw ValidationError("config field 'data' (or --in) naming a CSV of values is required");
    const auto values = read_column(*c.cfg.data, c.cfg.column);
    write_kde(c.sink.open("kde.csv"), c.prov, kde_summary(values, c.cfg.kde_points.value_or(512)));
}

void cmd_repro_fig1(Context& c) {
    const auto params = c.cfg.rates ? c.cfg.rates->params() : two_stage_example();
    const double T = horizon(c.cfg, 5.0);
    const auto grid = c.cfg.time_grid(T, 201);
    const std::size_t reps = c.cfg.reps.value_or(10);
    const auto path = solve_reduced_ode(params, 1.0, 0.0, T);
    write_reduced(c.sink.open("fig1_ode.csv"), c.prov, path, grid);
    json summary{{"provenance", provenance_json(c.prov)}, {"T", T}, {"replicates", reps}};
    for (std::int64_t n : {100, 1000}) {
        const ScalingRegime reg(n);
        const auto x0 = initial_state(params.r(), reg, 1.0);
        const auto seed = stream_seed(c.prov.seed, static_cast<std::uint64_t>(n));
        const auto batch = simulate_grid_batch(params, reg, x0, T, grid, reps, seed, c.cfg.thread_count());
        write_trajectories(c.sink.open("fig1_n" + std::to_string(n) + ".csv"), c.prov, batch, n);
        const auto errs = sup_error_batch(params, reg, x0, T, path, reps, seed, c.cfg.thread_count());
        double es = 0.0, ep = 0.0;
        for (const auto& e : errs) {
            es += e.z_s / static_cast<double>(errs.size());
            ep += e.z_p / static_cast<double>(errs.size());
        }
        summary["sup_error"][std::to_string(n)] = {{"z_s", es}, {"z_p", ep}};
    }
    write_json(c.sink.open("fig1_summary.json"), summary);
}

void cmd_repro_fig2(Context& c) {
    const auto params = c.cfg.rates ? c.cfg.rates->params() : one_stage_example();
    if (params.r() != 1) throw ValidationError("repro-fig2 needs a one-stage cascade");
    const auto design = design_from(c.cfg, 100000, 2.0);
    const std::size_t reps = c.cfg.reps.value_or(200);
    const std::vector<double> lower = c.cfg.lower.empty() ? std::vector<double>{1e-3, 1e-3} : c.cfg.lower;
    const std::vector<double> upper = c.cfg.upper.empty() ? std::vector<double>{10.0, 10.0} : c.cfg.upper;
    const auto fits = mle_replicates(ConversionHazard::cascade(params), params.J(), design, lower, upper,
                                     c.cfg.starts.value_or(8), reps, c.prov.seed, c.cfg.thread_count());
    {
        CsvWriter w(c.sink.open("fig2_mle.csv"), c.prov, {"rep", "kappa_M", "kappa_P", "loglik"});
        for (std::size_t k = 0; k < fits.size(); ++k) {
            w.cell(static_cast<std::int64_t>(k)).cell(fits[k].theta[0]).cell(fits[k].theta[1]).cell(fits[k].loglik);
            w.end_row();
        }
        w.finish();
    }
    const std::vector<double> truth{params.michaelis_constant(), params.product()};
    const char* names[] = {"kappa_M", "kappa_P"};
    json entries = json::array();
    for (std::size_t j = 0; j < 2; ++j) {
        std::vector<double> est;
        for (const auto& f : fits) est.push_back(f.theta[j]);
        json e{{"name", names[j]}, {"truth", truth[j]}, {"median", median(est)}};
        if (est.size() >= 2) {
            const auto s = kde_summary(est);
            write_kde(c.sink.open(std::string("fig2_kde_") + names[j] + ".csv"), c.prov, s);
            e["kde"] = kde_json(s);
        }
        entries.push_back(e);
    }
    write_json(c.sink.open("fig2_summary.json"),
               {{"provenance", provenance_json(c.prov)},
                {"n", design.n},
                {"T", design.T},
                {"K", design.K},
                {"replicates", reps},
                {"parameters", entries}});
}

void cmd_repro_fig3(Context& c) {
    const auto params = c.cfg.rates ? c.cfg.rates->params() : one_stage_example();
    if (params.r() != 1) throw ValidationError("repro-fig3 needs a one-stage cascade");
    const auto design = design_from(c.cfg, 100000, 3.0);
    const auto data = synthetic_taus(ConversionHazard::cascade(params), design, stream_seed(c.prov.seed, 0));
    auto cfg = c.cfg;
    if (!cfg.rates) {
        RateSpec spec;
        spec.J = params.J();
        spec.cascade = params;
        cfg.rates = spec;
    }
    cfg.fit = "kappa_M,kappa_P";
    if (cfg.prior_lo.empty()) cfg.prior_lo = {0.0, 0.0};
    if (cfg.prior_hi.empty()) cfg.prior_hi = {0.5, 1.0};
    const auto problem = build_problem(cfg, data);
    const auto prior = build_prior(cfg, problem);
    const auto opt = chain_options(cfg);
    const auto post = fit_bayes(problem, prior, opt, stream_seed(c.prov.seed, 1), c.cfg.thread_count());
    write_times(c.sink.open("fig3_taus.csv"), c.prov, data.times, data.T);
    write_posterior(c, post, "fig3_", opt, {params.michaelis_constant(), params.product()});
}

struct Flags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    std::optional<std::int64_t> n;
    std::optional<double> T;
    std::optional<std::size_t> K;
    std::optional<std::size_t> reps;
    std::optional<std::string> sample_mode;
    std::optional<std::string> fit;
    std::optional<double> zs;
    std::optional<double> zs0;
    std::optional<std::string> data;
    std::optional<std::string> column;
    std::optional<std::size_t> points;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> starts;
    std::optional<std::size_t> burn_in;
    std::optional<std::size_t> samples;
    std::optional<std::string> prior;
    bool occupation = false;
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--seed", f.seed, "base random seed");
    sub->add_option("--threads", f.threads, "worker threads for replicate batches");
    sub->add_option("--out", f.out, "output directory (default: stdout)");
    sub->add_option("--n", f.n, "system size / particle count");
    sub->add_option("--T", f.T, "time horizon");
    sub->add_option("--K", f.K, "number of observed product-formation times");
    sub->add_option("--reps", f.reps, "replicates");
    sub->add_option("--sample-mode", f.sample_mode, "uniform|first");
    sub->add_option("--fit", f.fit, "kappa_M,kappa_P or raw:i,j,...");
    sub->add_option("--zs", f.zs, "frozen substrate level");
    sub->add_option("--zs0", f.zs0, "initial substrate level");
    sub->add_option("--data,--in", f.data, "input CSV");
    sub->add_option("--column", f.column, "input column for kde");
    sub->add_option("--points", f.points, "time-grid points");
    sub->add_option("--steps", f.steps, "Euler-Maruyama steps");
    sub->add_option("--starts", f.starts, "optimizer starts");
    sub->add_option("--burn-in", f.burn_in, "burn-in iterations");
    sub->add_option("--samples", f.samples, "kept chain samples");
    sub->add_option("--prior", f.prior, "uniform|ordered");
    sub->add_flag("--occupation", f.occupation, "also write the occupation measure of replicate 0");
}

RunConfig merge(const Flags& f) {
    RunConfig c = f.config ? load_config(*f.config) : RunConfig{};
    if (f.seed) c.seed = f.seed;
    if (f.threads) c.threads = f.threads;
    if (f.n) c.n = f.n;
    if (f.T) c.T = f.T;
    if (f.K) c.K = f.K;
    if (f.reps) c.reps = f.reps;
    if (f.sample_mode) c.sample_mode = parse_sample_mode(*f.sample_mode);
    if (f.fit) c.fit = f.fit;
    if (f.zs) c.zs = f.zs;
    if (f.zs0) c.z_s0 = f.zs0;
    if (f.data) c.data = f.data;
    if (f.column) c.column = f.column;
    if (f.points) c.grid_points = f.points;
    if (f.steps) c.steps = f.steps;
    if (f.starts) c.starts = f.starts;
    if (f.burn_in) c.burn_in = f.burn_in;
    if (f.samples) c.samples = f.samples;
    if (f.prior) c.prior_kind = f.prior;
    if (f.occupation) c.occupation = true;
    return c;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const std::map<std::string, std::pair<std::string, std::function<void(Context&)>>> commands{
        {"simulate-ssa", {"exact simulation of the full cascade on a time grid", cmd_simulate_ssa}},
        {"reduce", {"solve the reduced substrate/product ODE", cmd_reduce}},
        {"stationary", {"stationary law of the frozen complex block", cmd_stationary}},
        {"poisson", {"linear corrector coefficients b1, b2", cmd_poisson}},
        {"fclt-model", {"drift, diffusion and covariance of the fluctuation limit", cmd_fclt_model}},
        {"fclt-empirical", {"scaled SSA fluctuations at T", cmd_fclt_empirical}},
        {"ips", {"interacting particle system conversion times", cmd_ips}},
        {"sample-taus", {"synthetic product-formation times", cmd_sample_taus}},
        {"fit-mle", {"maximum-likelihood fit to product-formation times", cmd_fit_mle}},
        {"fit-bayes", {"posterior sample by random-walk Metropolis", cmd_fit_bayes}},
        {"kde", {"Gaussian kernel density of a CSV column", cmd_kde}},
        {"repro-fig1", {"SSA trajectories against the reduced ODE, n = 100 and 1000", cmd_repro_fig1}},
        {"repro-fig2", {"replicated maximum-likelihood estimates and their densities", cmd_repro_fig2}},
        {"repro-fig3", {"posterior densities from one synthetic dataset", cmd_repro_fig3}},
    };

    CLI::App app{"Simulation and inference for multistage enzyme cascades", "cascade"};
    app.set_version_flag("--version", CASCADE_VERSION);
    app.require_subcommand(1);
    Flags flags;
    for (const auto& [name, entry] : commands) add_flags(app.add_subcommand(name, entry.first), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const auto& name = sub->get_name();
        auto cfg = merge(flags);
        const Provenance prov{CASCADE_VERSION, fnv1a64(name + "\n" + cfg.to_json().dump()), cfg.seed_or_default()};
        Sink sink(flags.out, out);
        Context ctx{name, std::move(cfg), prov, sink};
        commands.at(name).second(ctx);
        sink.close();
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace cascade::cli
