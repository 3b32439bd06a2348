#pragma once

// Multistage Michaelis-Menten cascade
//
//   S + E <-> C_1 <-> C_2 <-> ... <-> C_r -> P + E
//
// Parameter and state types, mass-action propensities and the two
// conservation laws. Reaction rates follow the sQSSA scaling: binding
// (reaction 1) is slow, every other reaction is fast (rate multiplied by n).

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

/// Bad input: parameters, states, configs or preconditions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (singular solve, solver breakdown, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rate constants of an r-stage cascade with J enzyme molecules.
///
/// Rates are in scaled-time units. Every rate must be strictly positive: the
/// stationary-law recursion divides by them.
class CascadeParams {
public:
    CascadeParams(int J, std::vector<double> kappa_fwd, std::vector<double> kappa_bwd,
                  double kappa_P);

    /// One-stage cascade with the given Michaelis-Menten constant.
    /// kappa_1 is set to 1, so kappa_{-1} = kappa_M - kappa_P (needs kappa_M > kappa_P).
    static CascadeParams michaelis_menten(int J, double kappa_M, double kappa_P);

    /// Parameter vector (kappa_1, kappa_-1, ..., kappa_r, kappa_-r, kappa_P).
    static CascadeParams from_theta(int J, std::span<const double> theta);
    std::vector<double> theta() const;

    int r() const { return static_cast<int>(fwd_.size()); }
    int J() const { return J_; }
    /// kappa_i, 1-based stage index.
    double forward(int i) const { return fwd_.at(static_cast<std::size_t>(i - 1)); }
    /// kappa_{-i}, 1-based stage index.
    double backward(int i) const { return bwd_.at(static_cast<std::size_t>(i - 1)); }
    double product() const { return kP_; }
    const std::vector<double>& kappa_fwd() const { return fwd_; }
    const std::vector<double>& kappa_bwd() const { return bwd_; }

    /// (kappa_-1 + kappa_P) / kappa_1; only meaningful for r = 1.
    double michaelis_constant() const;

    bool operator==(const CascadeParams&) const = default;

private:
    int J_;
    std::vector<double> fwd_;
    std::vector<double> bwd_;
    double kP_;
};

/// sQSSA scaling regime. Only the system size varies:
/// alpha_S = alpha_P = 1, alpha_E = alpha_C = 0, beta_1 = 0, every other beta = 1, gamma = 0.
struct ScalingRegime {
    std::int64_t n = 1;

    explicit ScalingRegime(std::int64_t size);
};

/// Reaction identifier: +i (C_{i-1} -> C_i, with C_0 = S + E), -i (reverse), or P.
class Reaction {
public:
    static Reaction forward(int stage);
    static Reaction backward(int stage);
    static Reaction product();
    /// "1", "-2", "P".
    static Reaction parse(std::string_view text);
    /// Inverse of index(): order 1, -1, 2, -2, ..., r, -r, P.
    static Reaction from_index(std::size_t index, int r);
    static std::size_t count(int r) { return static_cast<std::size_t>(2 * r + 1); }

    bool is_product() const { return signed_id_ == 0; }
    bool is_forward() const { return signed_id_ > 0; }
    bool is_backward() const { return signed_id_ < 0; }
    int stage() const { return signed_id_ < 0 ? -signed_id_ : signed_id_; }
    int signed_id() const { return signed_id_; }

    std::size_t index(int r) const;
    std::string name() const;

    /// Throws if the id does not exist in an r-stage cascade.
    void check(int r) const;

    bool operator==(const Reaction&) const = default;

private:
    explicit Reaction(int id) : signed_id_(id) {}
    int signed_id_;  // 0 encodes P
};

/// Unscaled copy numbers. x_E = J - sum(x_C) is implied.
struct FullState {
    std::vector<std::int64_t> x_C;
    std::int64_t x_S = 0;
    std::int64_t x_P = 0;

    std::int64_t complex_total() const;
    std::int64_t enzyme_free(int J) const { return J - complex_total(); }
    /// x_S + x_P + sum(x_C): the second conservation law.
    std::int64_t substrate_mass() const { return x_S + x_P + complex_total(); }

    bool operator==(const FullState&) const = default;
};

/// Scaled state: z_C = x_C, z_S = x_S / n, z_P = x_P / n.
struct ScaledState {
    std::vector<int> z_C;
    double z_S = 0.0;
    double z_P = 0.0;
};

void validate_state(const CascadeParams& params, const FullState& x);
void validate_state(const CascadeParams& params, const ScaledState& z);

/// lambda_k^(n)(x) = n^{beta_k} kappa_k * (mass-action factor).
double propensity_full(const CascadeParams& params, const ScalingRegime& regime, Reaction k,
                       const FullState& x);

/// lambda_k(z_C, z_S); independent of z_P.
double scaled_propensity(const CascadeParams& params, Reaction k, const ScaledState& z);

/// Change of (x_C_1..x_C_r, x_S, x_P) when reaction k fires.
std::vector<int> stoichiometry(Reaction k, int r);

/// Apply one firing of k in place. Throws if a count would become negative.
void apply_reaction(Reaction k, FullState& x);

ScaledState scale_state(const FullState& x, const ScalingRegime& regime);

}  // namespace cascade
