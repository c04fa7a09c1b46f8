#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "uvm/bsb.hpp"
#include "uvm/errors.hpp"
#include "uvm/grid.hpp"
#include "uvm/market.hpp"
#include "uvm/payoff.hpp"

namespace uvm {

/// Same grid at half the resolution in both directions.
inline GridSpec coarsened(const GridSpec& g)
{
    GridSpec c = g;
    c.n_space = std::max<std::size_t>(16, g.n_space / 2);
    c.n_time = std::max<std::size_t>(8, g.n_time / 2);
    return c;
}

/// |P(grid) - P(coarse grid)|, a first-order estimate of the error of P(grid).
inline double grid_error_estimate(const std::function<double(const GridSpec&)>& price, const GridSpec& grid)
{
    return std::abs(price(grid) - price(coarsened(grid)));
}

struct RichardsonEstimate {
    std::array<double, 3> values; // base, x2, x4 refinement
    double order;                 // observed convergence order
    double extrapolated;
    double error;                 // |values[0] - extrapolated|
};

/// Observed-order Richardson extrapolation over two refinements of `grid`.
/// Falls back to order 1 when the observed ratio is not a contraction.
inline RichardsonEstimate richardson_estimate(const std::function<double(const GridSpec&)>& price,
                                              const GridSpec& grid)
{
    RichardsonEstimate r{};
    r.values = {price(grid), price(grid.refined(2)), price(grid.refined(4))};
    const double d1 = r.values[0] - r.values[1];
    const double d2 = r.values[1] - r.values[2];
    double ratio = d2 != 0.0 ? d1 / d2 : 0.0;
    r.order = ratio > 1.0 ? std::log2(ratio) : 1.0;
    const double f = std::pow(2.0, r.order);
    r.extrapolated = r.values[2] - d2 / (f - 1.0);
    r.error = std::abs(r.values[0] - r.extrapolated);
    return r;
}

struct SpreadReport {
    double upper_price;
    double lower_price;
    double spread;
    double L_estimate;
    double bound;
    double grid_tolerance = std::numeric_limits<double>::quiet_NaN();
    std::string method_note;
};

struct SpreadOptions {
    /// Also solve on the half-resolution grid to estimate the discretization error.
    bool estimate_tolerance = false;
};

namespace detail {

inline SpreadReport spread_on_grid(const Payoff& payoff, const MarketSpec& spec, const GridSpec& grid)
{
    const PriceSurface up = solve_bsb(payoff, spec, grid, Side::Upper);
    const PriceSurface lo = solve_bsb(payoff, spec, grid, Side::Lower);

    // Gamma exposure source, read node-wise from both surfaces. The solve discounts the
    // source itself, so f carries no discount factor.
    const Matrix& gu = up.gamma;
    const Matrix& gl = lo.gamma;
    const std::vector<double>& times = up.times;
    const std::vector<double>& spots = up.spots;
    SourceFn f = [&](double t, double S) {
        const Bracket bt = bracket(times, t);
        const std::size_t n = bt.w < 0.5 ? bt.lo : bt.lo + 1;
        const Bracket bx = bracket(spots, S);
        const std::size_t i = bx.w < 0.5 ? bx.lo : bx.lo + 1;
        return S * S * std::max(std::abs(gu(n, i)), std::abs(gl(n, i)));
    };
    const PriceSurface aux = solve_bsb(parse_payoff("0"), spec, grid, Side::Upper, f);

    SpreadReport r{};
    r.upper_price = price_at_spot(up);
    r.lower_price = price_at_spot(lo);
    r.spread = r.upper_price - r.lower_price;
    r.L_estimate = price_at_spot(aux);
    r.bound = (spec.band.var_hi() - spec.band.var_lo()) * r.L_estimate;
    r.method_note = "L from an upper-side Barenblatt solve with zero terminal value and source "
                    "S^2 max(|Gamma_upper|, |Gamma_lower|)";
    return r;
}

} // namespace detail

/// Ask-bid spread with its gamma-exposure bound (sigma_hi^2 - sigma_lo^2) * L.
inline SpreadReport spread(const Payoff& payoff, const MarketSpec& spec, const GridSpec& grid = {},
                           SpreadOptions options = {})
{
    SpreadReport r = detail::spread_on_grid(payoff, spec, grid);
    if (options.estimate_tolerance) {
        const SpreadReport c = detail::spread_on_grid(payoff, spec, coarsened(grid));
        r.grid_tolerance = std::abs(r.spread - c.spread) + std::abs(r.bound - c.bound);
    }
    return r;
}

struct ParityReport {
    double max_residual;
    Side side;
    double strike;
};

/// max |c + K D(t, T) - p - S| over all time levels and the central half of the space nodes.
inline ParityReport parity_check(const MarketSpec& spec, double strike, const GridSpec& grid = {},
                                 Side side = Side::Upper)
{
    if (!(strike > 0.0))
        throw DomainError("parity_check: strike must be positive");
    const std::string k = format_number(strike);
    const PriceSurface c = solve_bsb(parse_payoff("max(S - " + k + ", 0)"), spec, grid, side);
    const PriceSurface p = solve_bsb(parse_payoff("max(" + k + " - S, 0)"), spec, grid, side);
    const std::size_t nx = c.n_space();
    const std::size_t i0 = nx / 4;
    const std::size_t i1 = nx - nx / 4;
    const double T = c.times.back();
    double worst = 0.0;
    for (std::size_t n = 0; n < c.n_times(); ++n) {
        const double kd = strike * discount_factor(spec.rates, c.times[n], T);
        for (std::size_t i = i0; i < i1; ++i)
            worst = std::max(worst, std::abs(c.values(n, i) + kd - p.values(n, i) - c.spots[i]));
    }
    return {worst, side, strike};
}

/// Integral of D(0, s) phi(s) over [0, T], split at the rate curve's breakpoints.
inline double discounted_integral(const std::function<double(double)>& phi, const RateCurve& rates, double T)
{
    std::vector<double> cuts{0.0};
    for (const auto& s : rates.segments())
        if (s.t_start > 0.0 && s.t_start < T)
            cuts.push_back(s.t_start);
    cuts.push_back(T);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto g = [&](double s) { return discount_factor(rates, 0.0, s) * phi(s); };
        acc += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, cuts[i], cuts[i + 1], 15, 1e-14);
    }
    return acc;
}

/// Time-0 value of the sublinear BSDE with generator r_t Y + phi_t. Deterministic phi
/// passes through the conditional expectation as a constant, so the value is the
/// Barenblatt price plus the discounted integral of phi.
inline double gbsde_linear_price(const Payoff& payoff, const std::function<double(double)>& phi,
                                 const MarketSpec& spec, const GridSpec& grid = {}, Side side = Side::Upper)
{
    const double base = price_at_spot(solve_bsb(payoff, spec, grid, side));
    return base + discounted_integral(phi, spec.rates, spec.maturity);
}

/// Same quantity with phi fed to the solver as a source term; converges to
/// gbsde_linear_price at the grid's rate.
inline double gbsde_linear_price_pde(const Payoff& payoff, const std::function<double(double)>& phi,
                                     const MarketSpec& spec, const GridSpec& grid = {}, Side side = Side::Upper)
{
    return price_at_spot(solve_bsb(payoff, spec, grid, side, [&](double t, double) { return phi(t); }));
}

struct CooperationReport {
    double lhs;
    double rhs;
    double tolerance;
    bool holds;
};

/// Upper price of the combined claim against the sum of the separate upper prices.
inline CooperationReport cooperation_check(const Payoff& p1, const Payoff& p2, const MarketSpec& spec,
                                           const GridSpec& grid = {})
{
    const Payoff both = p1 + p2;
    auto price = [&](const Payoff& p, const GridSpec& g) {
        return price_at_spot(solve_bsb(p, spec, g, Side::Upper));
    };
    const double lhs = price(both, grid);
    const double a = price(p1, grid);
    const double b = price(p2, grid);
    const double rhs = a + b;

    const GridSpec c = coarsened(grid);
    const double lhs_c = price(both, c);
    const double rhs_c = price(p1, c) + price(p2, c);
    const double tol = std::abs(lhs - lhs_c) + std::abs(rhs - rhs_c);
    return {lhs, rhs, tol, lhs <= rhs + tol};
}

} // namespace uvm
