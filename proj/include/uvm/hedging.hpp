#pragma once

// Discrete delta hedging managed at a Barenblatt surface.
//
// The hedger holds s * V in a replicating book (s = +1 short the claim and
// managing at the upper price, s = -1 long and managing at the lower one),
// rebalances to s * Delta at every path step and withdraws the model P&L
//
//     short: 1/2 S^2 Gamma (sigma*^2 dt - d<B>),  sigma* = argsup of sigma^2 Gamma
//     long:  1/2 S^2 Gamma (d<B> - sigma_*^2 dt), sigma_* = arginf
//
// into the K account. Book plus K is the value of the hedge before
// withdrawals; at maturity it is compared against s * payoff.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "uvm/bsb.hpp"
#include "uvm/errors.hpp"
#include "uvm/market.hpp"
#include "uvm/paths.hpp"
#include "uvm/payoff.hpp"

namespace uvm {

enum class HedgeSide { ShortUpper, LongLower };

inline const char* to_string(HedgeSide s) { return s == HedgeSide::ShortUpper ? "short_upper" : "long_lower"; }

/// Per-step model P&L of the delta-hedged position; nonnegative whenever d_qv is in band.
inline double pnl_increment(double gamma, double S, double dt, double d_qv, const VolatilityBand& band,
                            HedgeSide side)
{
    if (!(dt > 0.0))
        throw DomainError("pnl_increment: dt must be positive");
    const double lo = band.var_lo() * dt;
    const double hi = band.var_hi() * dt;
    const double slack = 1e-12 * hi;
    if (!(d_qv >= lo - slack && d_qv <= hi + slack))
        throw DomainError("pnl_increment: realized variance " + std::to_string(d_qv / dt) + " outside band [" +
                          std::to_string(band.var_lo()) + ", " + std::to_string(band.var_hi()) + "]");
    // Clamping keeps each factor's sign exact after rounding.
    const double q = std::clamp(d_qv, lo, hi);
    const double half_s2g = 0.5 * S * S * gamma;
    if (side == HedgeSide::ShortUpper)
        return half_s2g * ((gamma >= 0.0 ? hi : lo) - q);
    return half_s2g * (q - (gamma >= 0.0 ? lo : hi));
}

struct HedgeOptions {
    /// Clamp prices that leave the surface domain instead of failing.
    bool allow_clamp = false;
    /// Exact terminal payoff; defaults to the surface's terminal slice.
    std::optional<Payoff> payoff;
};

struct HedgeLedger {
    HedgeSide side = HedgeSide::ShortUpper;
    std::uint64_t path_id = 0;
    std::vector<double> times;
    std::vector<double> spots;
    std::vector<double> deltas;          // hedge ratio of the claim held from each step (last entry 0)
    std::vector<double> values;          // managing price V(t_k, S_k)
    std::vector<double> book_value;      // replicating book after withdrawals
    std::vector<double> portfolio_value; // book + K, the hedge before withdrawals
    std::vector<double> pnl_increments;  // model P&L per step
    std::vector<double> realized_pnl;    // hedge gain minus the change in managing price
    std::vector<double> K_cumulative;    // n_steps + 1, starts at 0
    double terminal_payoff = 0.0;
    double terminal_shortfall = 0.0;     // s * payoff - portfolio_value(T)
    double eps_disc = 0.0;               // largest observed violation
    bool clamped = false;

    std::size_t n_steps() const noexcept { return pnl_increments.size(); }
};

inline HedgeLedger run_delta_hedge(const PriceSurface& surface, const SimulatedPath& path, const MarketSpec& spec,
                                   HedgeSide side, const HedgeOptions& options = {})
{
    const Side want = side == HedgeSide::ShortUpper ? Side::Upper : Side::Lower;
    if (surface.side != want)
        throw DomainError(std::string("run_delta_hedge: ") + to_string(side) + " needs a " + to_string(want) +
                          " surface");
    if (path.S.size() != path.times.size() || path.n_steps() + 1 != path.times.size())
        throw DomainError("run_delta_hedge: malformed path");
    if (path.times.back() > surface.times.back() * (1.0 + 1e-12))
        throw DomainError("run_delta_hedge: path extends past the surface maturity");

    const double s = side == HedgeSide::ShortUpper ? 1.0 : -1.0;
    const std::size_t n = path.n_steps();

    HedgeLedger L;
    L.side = side;
    L.path_id = path.path_id;
    L.times = path.times;
    L.spots = path.S;
    L.deltas.assign(n + 1, 0.0);
    L.values.assign(n + 1, 0.0);
    L.book_value.assign(n + 1, 0.0);
    L.portfolio_value.assign(n + 1, 0.0);
    L.pnl_increments.assign(n, 0.0);
    L.realized_pnl.assign(n, 0.0);
    L.K_cumulative.assign(n + 1, 0.0);

    auto lookup = [&](double t, double S) {
        double q = S;
        if (S < surface.s_min() || S > surface.s_max()) {
            if (!options.allow_clamp)
                throw DomainError("run_delta_hedge: path " + std::to_string(path.path_id) + " left the grid at S = " +
                                  std::to_string(S) + "; enable clamping to continue");
            q = std::clamp(S, surface.s_min(), surface.s_max());
            L.clamped = true;
        }
        return greeks_at(surface, std::min(t, surface.times.back()), q);
    };

    Greeks g = lookup(path.times[0], path.S[0]);
    L.values[0] = g.value;
    L.book_value[0] = s * g.value;
    L.portfolio_value[0] = s * g.value;

    double violation = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t0 = path.times[k];
        const double t1 = path.times[k + 1];
        const double dt = t1 - t0;
        const double growth = 1.0 / discount_factor(spec.rates, t0, t1);
        const double S0 = path.S[k];
        const double S1 = path.S[k + 1];

        L.deltas[k] = g.delta;
        const double pnl = pnl_increment(g.gamma, S0, dt, path.d_qv[k], surface.band, side);
        L.pnl_increments[k] = pnl;
        L.K_cumulative[k + 1] = L.K_cumulative[k] + pnl;
        violation = std::max(violation, -pnl);

        const double hold = s * g.delta;
        const double X = L.book_value[k];
        L.book_value[k + 1] = X + hold * (S1 - S0) + (X - hold * S0) * (growth - 1.0) - pnl;

        const Greeks next = lookup(t1, S1);
        const double gain = g.delta * (S1 - S0) + (g.value - g.delta * S0) * (growth - 1.0);
        L.realized_pnl[k] = s * (gain - (next.value - g.value));
        L.values[k + 1] = next.value;
        L.portfolio_value[k + 1] = L.book_value[k + 1] + L.K_cumulative[k + 1];
        g = next;
    }

    const double S_T = path.S.back();
    L.terminal_payoff = options.payoff ? eval_payoff(*options.payoff, S_T) : L.values.back();
    L.terminal_shortfall = s * L.terminal_payoff - L.portfolio_value.back();
    violation = std::max(violation, L.terminal_shortfall);
    L.eps_disc = violation;
    return L;
}

} // namespace uvm
