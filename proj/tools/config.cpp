#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace cascade::cli {

namespace {

template <class T>
T field(const json& node, const std::string& name, const char* expected) {
    try {
        return node.get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config field '" + name + "': expected " + expected);
    }
}

double number(const json& node, const std::string& name) {
    if (!node.is_number()) throw ValidationError("config field '" + name + "': expected a number");
    return node.get<double>();
}

std::uint64_t count(const json& node, const std::string& name) {
    if (!node.is_number_integer() || node.get<std::int64_t>() < 0)
        throw ValidationError("config field '" + name + "': expected a nonnegative integer");
    return node.get<std::uint64_t>();
}

std::vector<double> numbers(const json& node, const std::string& name) {
    if (!node.is_array()) throw ValidationError("config field '" + name + "': expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], name + "[" + std::to_string(i) + "]"));
    return out;
}

void reject_unknown(const json& node, const std::string& where, const std::set<std::string>& allowed) {
    for (auto it = node.begin(); it != node.end(); ++it)
        if (!allowed.count(it.key()))
            throw ValidationError("unknown config field '" + (where.empty() ? "" : where + ".") + it.key() + "'");
}

}  // namespace

CascadeParams RateSpec::params() const {
    if (cascade) return *cascade;
    return CascadeParams::michaelis_menten(J, kappa_M, kappa_P);
}

ConversionHazard RateSpec::hazard() const {
    if (cascade) return ConversionHazard::cascade(*cascade);
    return ConversionHazard::michaelis_menten(J, kappa_M, kappa_P);
}

json RateSpec::to_json() const {
    json j;
    j["J"] = J;
    if (cascade) {
        std::vector<double> f, b;
        for (int i = 1; i <= cascade->r(); ++i) {
            f.push_back(cascade->forward(i));
            b.push_back(cascade->backward(i));
        }
        j["forward"] = f;
        j["backward"] = b;
        j["product"] = cascade->product();
    } else {
        j["kappa_M"] = kappa_M;
        j["kappa_P"] = kappa_P;
    }
    return j;
}

RateSpec parse_rates(const json& node) {
    if (!node.is_object()) throw ValidationError("config field 'params': expected an object");
    reject_unknown(node, "params", {"J", "forward", "backward", "product", "kappa_M", "kappa_P"});
    if (!node.contains("J")) throw ValidationError("config field 'params.J' is required");
    RateSpec spec;
    const auto J = count(node["J"], "params.J");
    if (J < 1 || J > 1000000) throw ValidationError("config field 'params.J': must be in [1, 1e6]");
    spec.J = static_cast<int>(J);
    const bool reduced = node.contains("kappa_M") || node.contains("kappa_P");
    const bool full = node.contains("forward") || node.contains("backward") || node.contains("product");
    if (reduced == full)
        throw ValidationError(
            "config field 'params': give either forward/backward/product or kappa_M/kappa_P");
    if (full) {
        for (const char* k : {"forward", "backward", "product"})
            if (!node.contains(k)) throw ValidationError(std::string("config field 'params.") + k + "' is required");
        spec.cascade.emplace(spec.J, numbers(node["forward"], "params.forward"),
                             numbers(node["backward"], "params.backward"), number(node["product"], "params.product"));
    } else {
        for (const char* k : {"kappa_M", "kappa_P"})
            if (!node.contains(k)) throw ValidationError(std::string("config field 'params.") + k + "' is required");
        spec.kappa_M = number(node["kappa_M"], "params.kappa_M");
        spec.kappa_P = number(node["kappa_P"], "params.kappa_P");
        if (!(spec.kappa_M > 0.0) || !(spec.kappa_P > 0.0))
            throw ValidationError("config field 'params': kappa_M and kappa_P must be > 0");
    }
    return spec;
}

const RateSpec& RunConfig::require_rates() const {
    if (!rates) throw ValidationError("config field 'params' is required for this command");
    return *rates;
}

std::vector<double> RunConfig::time_grid(double horizon, std::size_t points) const {
    if (!grid.empty()) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!(grid[i] >= 0.0 && grid[i] <= horizon))
                throw ValidationError("config field 'grid': points must lie in [0, T]");
            if (i > 0 && grid[i] < grid[i - 1]) throw ValidationError("config field 'grid': points must be sorted");
        }
        return grid;
    }
    const std::size_t m = grid_points.value_or(points);
    if (m < 2) throw ValidationError("config field 'grid_points': need at least 2 points");
    std::vector<double> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = horizon * static_cast<double>(i) / static_cast<double>(m - 1);
    g.back() = horizon;
    return g;
}

json RunConfig::to_json() const {
    json j = json::object();
    if (rates) j["params"] = rates->to_json();
    if (n) j["n"] = *n;
    if (T) j["T"] = *T;
    if (seed) j["seed"] = *seed;
    if (reps) j["reps"] = *reps;
    if (z_s0) j["z_s0"] = *z_s0;
    if (z_p0) j["z_p0"] = *z_p0;
    if (zs) j["zs"] = *zs;
    if (grid_points) j["grid_points"] = *grid_points;
    if (!grid.empty()) j["grid"] = grid;
    if (K) j["K"] = *K;
    if (sample_mode) j["sample_mode"] = *sample_mode == SampleMode::first ? "first" : "uniform";
    if (fit) j["fit"] = *fit;
    if (!lower.empty()) j["bounds"]["lower"] = lower;
    if (!upper.empty()) j["bounds"]["upper"] = upper;
    if (prior_kind) j["prior"]["kind"] = *prior_kind;
    if (!prior_lo.empty()) j["prior"]["lo"] = prior_lo;
    if (!prior_hi.empty()) j["prior"]["hi"] = prior_hi;
    if (starts) j["starts"] = *starts;
    if (burn_in) j["burn_in"] = *burn_in;
    if (samples) j["samples"] = *samples;
    if (steps) j["steps"] = *steps;
    if (data) j["data"] = *data;
    if (column) j["column"] = *column;
    if (kde_points) j["kde_points"] = *kde_points;
    if (occupation) j["occupation"] = true;
    // threads is deliberately absent: results do not depend on it
    return j;
}

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ValidationError("config document must be a JSON object");
    reject_unknown(doc, "",
                   {"params", "n", "T", "seed", "threads", "reps", "z_s0", "z_p0", "zs", "grid_points", "grid", "K",
                    "sample_mode", "fit", "bounds", "prior", "starts", "burn_in", "samples", "steps", "data",
                    "column", "kde_points", "occupation"});
    RunConfig c;
    if (doc.contains("params")) c.rates = parse_rates(doc["params"]);
    if (doc.contains("n")) c.n = static_cast<std::int64_t>(count(doc["n"], "n"));
    if (doc.contains("T")) c.T = number(doc["T"], "T");
    if (doc.contains("seed")) c.seed = count(doc["seed"], "seed");
    if (doc.contains("threads")) c.threads = static_cast<unsigned>(count(doc["threads"], "threads"));
    if (doc.contains("reps")) c.reps = count(doc["reps"], "reps");
    if (doc.contains("z_s0")) c.z_s0 = number(doc["z_s0"], "z_s0");
    if (doc.contains("z_p0")) c.z_p0 = number(doc["z_p0"], "z_p0");
    if (doc.contains("zs")) c.zs = number(doc["zs"], "zs");
    if (doc.contains("grid_points")) c.grid_points = count(doc["grid_points"], "grid_points");
    if (doc.contains("grid")) c.grid = numbers(doc["grid"], "grid");
    if (doc.contains("K")) c.K = count(doc["K"], "K");
    if (doc.contains("sample_mode"))
        c.sample_mode = parse_sample_mode(field<std::string>(doc["sample_mode"], "sample_mode", "a string"));
    if (doc.contains("fit")) c.fit = field<std::string>(doc["fit"], "fit", "a string");
    if (doc.contains("bounds")) {
        const auto& b = doc["bounds"];
        if (!b.is_object()) throw ValidationError("config field 'bounds': expected an object");
        reject_unknown(b, "bounds", {"lower", "upper"});
        if (b.contains("lower")) c.lower = numbers(b["lower"], "bounds.lower");
        if (b.contains("upper")) c.upper = numbers(b["upper"], "bounds.upper");
    }
    if (doc.contains("prior")) {
        const auto& p = doc["prior"];
        if (!p.is_object()) throw ValidationError("config field 'prior': expected an object");
        reject_unknown(p, "prior", {"kind", "lo", "hi"});
        if (p.contains("kind")) c.prior_kind = field<std::string>(p["kind"], "prior.kind", "a string");
        if (p.contains("lo")) c.prior_lo = numbers(p["lo"], "prior.lo");
        if (p.contains("hi")) c.prior_hi = numbers(p["hi"], "prior.hi");
    }
    if (doc.contains("starts")) c.starts = count(doc["starts"], "starts");
    if (doc.contains("burn_in")) c.burn_in = count(doc["burn_in"], "burn_in");
    if (doc.contains("samples")) c.samples = count(doc["samples"], "samples");
    if (doc.contains("steps")) c.steps = count(doc["steps"], "steps");
    if (doc.contains("data")) c.data = field<std::string>(doc["data"], "data", "a string");
    if (doc.contains("column")) c.column = field<std::string>(doc["column"], "column", "a string");
    if (doc.contains("kde_points")) c.kde_points = count(doc["kde_points"], "kde_points");
    if (doc.contains("occupation")) c.occupation = field<bool>(doc["occupation"], "occupation", "a boolean");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

FitSpec parse_fit_spec(std::string_view text) {
    FitSpec spec;
    auto split = [](std::string_view s) {
        std::vector<std::string> parts;
        while (true) {
            const auto comma = s.find(',');
            parts.emplace_back(s.substr(0, comma));
            if (comma == std::string_view::npos) break;
            s.remove_prefix(comma + 1);
        }
        return parts;
    };
    if (text.rfind("raw:", 0) == 0) {
        spec.parameterization = Parameterization::raw;
        for (const auto& p : split(text.substr(4))) {
            std::size_t pos = 0;
            unsigned long v = 0;
            try {
                v = std::stoul(p, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (p.empty() || pos != p.size()) throw ValidationError("fit spec: '" + p + "' is not an index");
            spec.free.push_back(v);
        }
    } else {
        for (const auto& p : split(text)) {
            if (p == "kappa_M") spec.free.push_back(0);
            else if (p == "kappa_P") spec.free.push_back(1);
            else throw ValidationError("fit spec: unknown parameter '" + p + "' (use kappa_M,kappa_P or raw:i,j,...)");
        }
    }
    auto sorted = spec.free;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty() || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("fit spec must name each parameter at most once");
    return spec;
}

InferenceProblem build_problem(const RunConfig& cfg, TauSample data) {
    const auto& rates = cfg.require_rates();
    const auto spec = parse_fit_spec(cfg.fit.value_or("kappa_M,kappa_P"));
    InferenceProblem p;
    p.data = std::move(data);
    p.J = rates.J;
    p.parameterization = spec.parameterization;
    p.free = spec.free;
    if (spec.parameterization == Parameterization::michaelis_menten) {
        if (!rates.is_reduced() && rates.cascade->r() != 1)
            throw ValidationError("fitting kappa_M, kappa_P needs a one-stage cascade (r = 1)");
        p.r = 1;
        p.base = rates.is_reduced() ? std::vector<double>{rates.kappa_M, rates.kappa_P}
                                    : std::vector<double>{rates.cascade->michaelis_constant(), rates.cascade->product()};
    } else {
        const auto params = rates.params();
        p.r = params.r();
        p.base = params.theta();
    }
    const std::size_t d = p.free.size();
    p.lower = cfg.lower.empty() ? std::vector<double>(d, 1e-3) : cfg.lower;
    p.upper = cfg.upper.empty() ? std::vector<double>(d, 10.0) : cfg.upper;
    p.validate();
    return p;
}

PriorSpec build_prior(const RunConfig& cfg, const InferenceProblem& problem) {
    PriorSpec prior;
    const std::string kind = cfg.prior_kind.value_or("uniform");
    if (kind == "uniform") prior.kind = PriorSpec::Kind::independent_uniform;
    else if (kind == "ordered") prior.kind = PriorSpec::Kind::ordered_mm;
    else throw ValidationError("config field 'prior.kind': expected 'uniform' or 'ordered'");
    if (prior.kind == PriorSpec::Kind::ordered_mm &&
        (problem.parameterization != Parameterization::michaelis_menten || problem.free != std::vector<std::size_t>{0, 1}))
        throw ValidationError("the ordered prior applies to fitting kappa_M,kappa_P");
    prior.lo = cfg.prior_lo.empty() ? problem.lower : cfg.prior_lo;
    prior.hi = cfg.prior_hi.empty() ? problem.upper : cfg.prior_hi;
    if (prior.lo.size() != problem.dim() || prior.hi.size() != problem.dim())
        throw ValidationError("config field 'prior': lo and hi need one entry per fitted parameter");
    for (std::size_t j = 0; j < prior.lo.size(); ++j)
        if (!(prior.hi[j] > prior.lo[j])) throw ValidationError("config field 'prior': need lo < hi");
    return prior;
}

}  // namespace cascade::cli
