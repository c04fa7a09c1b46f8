#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "uvm/bsb.hpp"
#include "uvm/errors.hpp"
#include "uvm/market.hpp"
#include "uvm/rng.hpp"

namespace uvm {

struct ConstantVol {
    double sigma;
};

/// Fresh uniform draw in [sigma_lo, sigma_hi] on every step.
struct RandomBandVol {};

/// Nature's adversarial choice read off a solved surface: the generator's
/// optimal edge for that surface's side at the current (t, S).
struct BangBangVol {
    std::shared_ptr<const PriceSurface> surface;
};

struct TwoRegimeVol {
    double sigma_a;
    double sigma_b;
    double switch_time;
};

using VolPolicy = std::variant<ConstantVol, RandomBandVol, BangBangVol, TwoRegimeVol>;

struct RiskNeutralZero {};
struct ConstantDrift {
    double mu;
};
/// mu = mu_lo + gamma / 2 * (sigma^2 - sigma_lo^2).
struct CoupledDrift {
    double gamma;
};

using DriftPolicy = std::variant<RiskNeutralZero, ConstantDrift, CoupledDrift>;

struct SimulatedPath {
    std::uint64_t seed = 0;
    std::uint64_t path_id = 0;
    std::vector<double> times;   // n_steps + 1
    std::vector<double> S;       // n_steps + 1
    std::vector<double> sigma;   // per step
    std::vector<double> d_qv;    // sigma^2 dt per step
    std::vector<double> beta_increments; // (mu - r) dt per step
    std::vector<double> rates;   // average short rate per step

    std::size_t n_steps() const noexcept { return d_qv.size(); }
};

namespace detail {

inline void check_sigma(const VolatilityBand& band, double s, const char* what)
{
    if (!band.contains(s))
        throw DomainError(std::string(what) + " volatility " + std::to_string(s) + " outside band [" +
                          std::to_string(band.sigma_lo) + ", " + std::to_string(band.sigma_hi) + "]");
}

inline double coupled_mu(const MeanBand& mb, double gamma, double var, double var_lo)
{
    return mb.mu_lo + 0.5 * gamma * (var - var_lo);
}

} // namespace detail

/// Rejects policies whose realized controls could leave the bands.
inline void validate_policies(const MarketSpec& spec, const VolPolicy& vol, const DriftPolicy& drift)
{
    const VolatilityBand& band = spec.band;
    if (const auto* c = std::get_if<ConstantVol>(&vol))
        detail::check_sigma(band, c->sigma, "constant");
    if (const auto* b = std::get_if<BangBangVol>(&vol)) {
        if (!b->surface)
            throw DomainError("bang_bang policy needs a surface");
    }
    if (const auto* r = std::get_if<TwoRegimeVol>(&vol)) {
        detail::check_sigma(band, r->sigma_a, "two_regime");
        detail::check_sigma(band, r->sigma_b, "two_regime");
        if (!(r->switch_time >= 0.0))
            throw DomainError("two_regime switch_time must be >= 0");
    }
    if (const auto* c = std::get_if<ConstantDrift>(&drift)) {
        if (spec.mean_band && !(c->mu >= spec.mean_band->mu_lo && c->mu <= spec.mean_band->mu_hi))
            throw DomainError("constant drift outside the mean band");
        if (!std::isfinite(c->mu))
            throw DomainError("constant drift must be finite");
    }
    if (const auto* c = std::get_if<CoupledDrift>(&drift)) {
        if (!spec.mean_band)
            throw DomainError("coupled drift requires a mean band");
        if (!(c->gamma >= 0.0))
            throw DomainError("coupled drift gamma must be >= 0");
        const double top = detail::coupled_mu(*spec.mean_band, c->gamma, band.var_hi(), band.var_lo());
        if (top > spec.mean_band->mu_hi)
            throw DomainError("coupled drift at sigma_hi exceeds mu_hi");
    }
}

/// Volatility chosen by the policy on the step starting at (t, S).
inline double policy_sigma(const VolPolicy& vol, const VolatilityBand& band, const CounterRng& rng,
                           std::uint64_t path, std::uint64_t step, double t, double S)
{
    return std::visit(
        [&](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, ConstantVol>) {
                return p.sigma;
            } else if constexpr (std::is_same_v<P, RandomBandVol>) {
                const double u = rng.uniform(path, step, 7);
                return std::clamp(band.sigma_lo + u * (band.sigma_hi - band.sigma_lo), band.sigma_lo,
                                  band.sigma_hi);
            } else if constexpr (std::is_same_v<P, BangBangVol>) {
                const PriceSurface& s = *p.surface;
                const double Sc = std::clamp(S, s.s_min(), s.s_max());
                const double g = greeks_at(s, std::min(t, s.times.back()), Sc).gamma;
                const bool hi = s.side == Side::Upper ? g >= 0.0 : g < 0.0;
                return hi ? band.sigma_hi : band.sigma_lo;
            } else {
                return t < p.switch_time ? p.sigma_a : p.sigma_b;
            }
        },
        vol);
}

/// One path; identical inputs give bit-identical output regardless of call order.
inline SimulatedPath simulate_path(const MarketSpec& spec, const VolPolicy& vol, const DriftPolicy& drift,
                                   std::size_t n_steps, std::uint64_t seed, std::uint64_t path_id)
{
    if (n_steps < 1)
        throw DomainError("n_steps must be >= 1");
    validate_policies(spec, vol, drift);
    const CounterRng rng(seed);
    const double T = spec.maturity;

    SimulatedPath p;
    p.seed = seed;
    p.path_id = path_id;
    p.times.resize(n_steps + 1);
    p.S.resize(n_steps + 1);
    p.sigma.resize(n_steps);
    p.d_qv.resize(n_steps);
    p.beta_increments.resize(n_steps);
    p.rates.resize(n_steps);
    for (std::size_t k = 0; k <= n_steps; ++k)
        p.times[k] = T * static_cast<double>(k) / static_cast<double>(n_steps);
    p.times.back() = T;

    double lnS = std::log(spec.spot);
    p.S[0] = spec.spot;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t0 = p.times[k];
        const double dt = p.times[k + 1] - t0;
        const double r = spec.rates.average_rate(t0, p.times[k + 1]);
        const double sigma = policy_sigma(vol, spec.band, rng, path_id, k, t0, p.S[k]);
        const double var = sigma * sigma;
        double b = 0.0;
        if (const auto* c = std::get_if<ConstantDrift>(&drift))
            b = c->mu - r;
        else if (const auto* c = std::get_if<CoupledDrift>(&drift))
            b = detail::coupled_mu(*spec.mean_band, c->gamma, var, spec.band.var_lo()) - r;

        lnS += (r + b - 0.5 * var) * dt + sigma * std::sqrt(dt) * rng.normal(path_id, k);
        p.S[k + 1] = std::exp(lnS);
        p.sigma[k] = sigma;
        p.d_qv[k] = var * dt;
        p.beta_increments[k] = b * dt;
        p.rates[k] = r;
    }
    return p;
}

inline std::vector<SimulatedPath> simulate_paths(const MarketSpec& spec, const VolPolicy& vol,
                                                 const DriftPolicy& drift, std::size_t n_paths,
                                                 std::size_t n_steps, std::uint64_t seed)
{
    if (n_paths < 1)
        throw DomainError("n_paths must be >= 1");
    std::vector<SimulatedPath> out;
    out.reserve(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i)
        out.push_back(simulate_path(spec, vol, drift, n_steps, seed, i));
    return out;
}

/// Running sum of d_qv, starting at 0.
inline std::vector<double> quadratic_variation(const SimulatedPath& path)
{
    std::vector<double> qv(path.d_qv.size() + 1, 0.0);
    for (std::size_t k = 0; k < path.d_qv.size(); ++k)
        qv[k + 1] = qv[k] + path.d_qv[k];
    return qv;
}

} // namespace uvm
