#pragma once

#include <cmath>

#include "uvm/errors.hpp"

namespace uvm {

enum class OptionKind { Call, Put };

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x)
{
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Black-Scholes price of a European call or put with a flat rate.
inline double black_scholes_closed_form(double spot, double strike, double rate, double sigma,
                                        double T, OptionKind kind)
{
    if (!(spot > 0.0) || !(strike > 0.0) || !(sigma > 0.0) || !(T > 0.0))
        throw DomainError("Black-Scholes requires positive spot, strike, sigma and maturity");
    const double sd = sigma * std::sqrt(T);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * sigma * sigma) * T) / sd;
    const double d2 = d1 - sd;
    const double df = std::exp(-rate * T);
    if (kind == OptionKind::Call)
        return spot * normal_cdf(d1) - strike * df * normal_cdf(d2);
    return strike * df * normal_cdf(-d2) - spot * normal_cdf(-d1);
}

inline double black_scholes_delta(double spot, double strike, double rate, double sigma, double T,
                                  OptionKind kind)
{
    if (!(spot > 0.0) || !(strike > 0.0) || !(sigma > 0.0) || !(T > 0.0))
        throw DomainError("Black-Scholes requires positive spot, strike, sigma and maturity");
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * sigma * sigma) * T) / (sigma * std::sqrt(T));
    return kind == OptionKind::Call ? normal_cdf(d1) : normal_cdf(d1) - 1.0;
}

inline double black_scholes_gamma(double spot, double strike, double rate, double sigma, double T)
{
    if (!(spot > 0.0) || !(strike > 0.0) || !(sigma > 0.0) || !(T > 0.0))
        throw DomainError("Black-Scholes requires positive spot, strike, sigma and maturity");
    const double sd = sigma * std::sqrt(T);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * sigma * sigma) * T) / sd;
    return normal_pdf(d1) / (spot * sd);
}

} // namespace uvm
