#include "cascade/model.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cascade {

namespace {

void require_positive(double value, const std::string& name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "rate " << name << " must be finite and > 0 (got " << value << ")";
        throw ValidationError(msg.str());
    }
}

// Mass-action factor of reaction k; `substrate` is x_S or z_S.
double mass_action_factor(int J, Reaction k, std::span<const std::int64_t> complexes,
                          double substrate) {
    const int r = static_cast<int>(complexes.size());
    if (k.is_product()) return static_cast<double>(complexes[static_cast<std::size_t>(r - 1)]);
    const auto i = static_cast<std::size_t>(k.stage());
    if (k.is_forward()) {
        if (i == 1) {
            const auto bound = std::accumulate(complexes.begin(), complexes.end(), std::int64_t{0});
            return substrate * static_cast<double>(J - bound);
        }
        return static_cast<double>(complexes[i - 2]);
    }
    return static_cast<double>(complexes[i - 1]);
}

double rate_of(const CascadeParams& p, Reaction k) {
    if (k.is_product()) return p.product();
    return k.is_forward() ? p.forward(k.stage()) : p.backward(k.stage());
}

}  // namespace

CascadeParams::CascadeParams(int J, std::vector<double> kappa_fwd, std::vector<double> kappa_bwd,
                             double kappa_P)
    : J_(J), fwd_(std::move(kappa_fwd)), bwd_(std::move(kappa_bwd)), kP_(kappa_P) {
    if (fwd_.empty()) throw ValidationError("cascade depth r must be >= 1");
    if (fwd_.size() != bwd_.size())
        throw ValidationError("kappa_fwd and kappa_bwd must both have length r");
    if (J_ < 1) throw ValidationError("conservation constant J must be >= 1");
    for (std::size_t i = 0; i < fwd_.size(); ++i) {
        require_positive(fwd_[i], "kappa_" + std::to_string(i + 1));
        require_positive(bwd_[i], "kappa_-" + std::to_string(i + 1));
    }
    require_positive(kP_, "kappa_P");
}

CascadeParams CascadeParams::michaelis_menten(int J, double kappa_M, double kappa_P) {
    if (!(kappa_M > kappa_P))
        throw ValidationError("one-stage cascade with kappa_1 = 1 needs kappa_M > kappa_P");
    return CascadeParams(J, {1.0}, {kappa_M - kappa_P}, kappa_P);
}

CascadeParams CascadeParams::from_theta(int J, std::span<const double> theta) {
    if (theta.size() < 3 || theta.size() % 2 == 0)
        throw ValidationError("parameter vector must have length 2r + 1");
    const std::size_t r = (theta.size() - 1) / 2;
    std::vector<double> fwd(r), bwd(r);
    for (std::size_t i = 0; i < r; ++i) {
        fwd[i] = theta[2 * i];
        bwd[i] = theta[2 * i + 1];
    }
    return CascadeParams(J, std::move(fwd), std::move(bwd), theta.back());
}

std::vector<double> CascadeParams::theta() const {
    std::vector<double> out;
    out.reserve(2 * fwd_.size() + 1);
    for (std::size_t i = 0; i < fwd_.size(); ++i) {
        out.push_back(fwd_[i]);
        out.push_back(bwd_[i]);
    }
    out.push_back(kP_);
    return out;
}

double CascadeParams::michaelis_constant() const {
    return (bwd_.front() + kP_) / fwd_.front();
}

ScalingRegime::ScalingRegime(std::int64_t size) : n(size) {
    if (n < 1) throw ValidationError("system size n must be >= 1");
}

Reaction Reaction::forward(int stage) {
    if (stage < 1) throw ValidationError("reaction stage must be >= 1");
    return Reaction(stage);
}

Reaction Reaction::backward(int stage) {
    if (stage < 1) throw ValidationError("reaction stage must be >= 1");
    return Reaction(-stage);
}

Reaction Reaction::product() { return Reaction(0); }

Reaction Reaction::parse(std::string_view text) {
    if (text == "P" || text == "p") return product();
    int value = 0;
    const char* begin = text.data();
    if (!text.empty() && text.front() == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0)
        throw ValidationError("unknown reaction id '" + std::string(text) + "'");
    return Reaction(value);
}

Reaction Reaction::from_index(std::size_t index, int r) {
    const auto last = static_cast<std::size_t>(2 * r);
    if (index > last) throw ValidationError("reaction index out of range");
    if (index == last) return product();
    const int stage = static_cast<int>(index / 2) + 1;
    return index % 2 == 0 ? Reaction(stage) : Reaction(-stage);
}

std::size_t Reaction::index(int r) const {
    if (is_product()) return static_cast<std::size_t>(2 * r);
    const auto base = static_cast<std::size_t>(2 * (stage() - 1));
    return is_forward() ? base : base + 1;
}

std::string Reaction::name() const {
    return is_product() ? std::string("P") : std::to_string(signed_id_);
}

void Reaction::check(int r) const {
    if (!is_product() && stage() > r)
        throw ValidationError("unknown reaction id " + name() + " for r = " + std::to_string(r));
}

std::int64_t FullState::complex_total() const {
    return std::accumulate(x_C.begin(), x_C.end(), std::int64_t{0});
}

void validate_state(const CascadeParams& params, const FullState& x) {
    if (static_cast<int>(x.x_C.size()) != params.r())
        throw ValidationError("state has wrong number of complex species");
    for (auto c : x.x_C)
        if (c < 0) throw ValidationError("negative complex count");
    if (x.x_S < 0 || x.x_P < 0) throw ValidationError("negative substrate or product count");
    if (x.complex_total() > params.J())
        throw ValidationError("state violates sum(x_C) <= J");
}

void validate_state(const CascadeParams& params, const ScaledState& z) {
    if (static_cast<int>(z.z_C.size()) != params.r())
        throw ValidationError("state has wrong number of complex species");
    long total = 0;
    for (int c : z.z_C) {
        if (c < 0) throw ValidationError("negative complex count");
        total += c;
    }
    if (total > params.J()) throw ValidationError("state violates sum(z_C) <= J");
    if (!(z.z_S >= 0.0) || !(z.z_P >= 0.0)) throw ValidationError("negative z_S or z_P");
}

double propensity_full(const CascadeParams& params, const ScalingRegime& regime, Reaction k,
                       const FullState& x) {
    k.check(params.r());
    validate_state(params, x);
    const bool slow = k.is_forward() && k.stage() == 1;
    const double scale = slow ? 1.0 : static_cast<double>(regime.n);
    return scale * rate_of(params, k) *
           mass_action_factor(params.J(), k, x.x_C, static_cast<double>(x.x_S));
}

double scaled_propensity(const CascadeParams& params, Reaction k, const ScaledState& z) {
    k.check(params.r());
    validate_state(params, z);
    std::vector<std::int64_t> complexes(z.z_C.begin(), z.z_C.end());
    return rate_of(params, k) * mass_action_factor(params.J(), k, complexes, z.z_S);
}

std::vector<int> stoichiometry(Reaction k, int r) {
    k.check(r);
    std::vector<int> v(static_cast<std::size_t>(r + 2), 0);
    const auto S = static_cast<std::size_t>(r);
    const auto P = S + 1;
    if (k.is_product()) {
        v[S - 1] = -1;
        v[P] = 1;
        return v;
    }
    const auto i = static_cast<std::size_t>(k.stage());
    const int sign = k.is_forward() ? 1 : -1;
    v[i - 1] += sign;
    if (i == 1)
        v[S] -= sign;
    else
        v[i - 2] -= sign;
    return v;
}

void apply_reaction(Reaction k, FullState& x) {
    const int r = static_cast<int>(x.x_C.size());
    const auto v = stoichiometry(k, r);
    for (int i = 0; i < r; ++i) x.x_C[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)];
    x.x_S += v[static_cast<std::size_t>(r)];
    x.x_P += v[static_cast<std::size_t>(r + 1)];
    for (auto c : x.x_C)
        if (c < 0) throw ValidationError("reaction " + k.name() + " drove a count negative");
    if (x.x_S < 0) throw ValidationError("reaction " + k.name() + " drove x_S negative");
}

ScaledState scale_state(const FullState& x, const ScalingRegime& regime) {
    ScaledState z;
    z.z_C.assign(x.x_C.begin(), x.x_C.end());
    const double n = static_cast<double>(regime.n);
    z.z_S = static_cast<double>(x.x_S) / n;
    z.z_P = static_cast<double>(x.x_P) / n;
    return z;
}

}  // namespace cascade
