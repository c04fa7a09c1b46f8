#pragma once

// Discretely monitored claims priced by a backward chain of Barenblatt
// solves. Between fixing dates the summary statistic of the fixings seen so
// far is frozen and each statistic slice is an independent 1-D solve; at a
// fixing date t_k the slice for statistic a inherits the value of slice
// update(a, S, k) from the later segment.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "uvm/bsb.hpp"
#include "uvm/errors.hpp"
#include "uvm/grid.hpp"
#include "uvm/market.hpp"
#include "uvm/payoff.hpp"

namespace uvm {

/// Statistic after the k-th fixing (1-based) given the statistic of the first k - 1.
inline double update_statistic(StatKind kind, double a, double S, std::size_t k)
{
    if (k <= 1)
        return S;
    switch (kind) {
    case StatKind::RunningAvg:
        return (static_cast<double>(k - 1) * a + S) / static_cast<double>(k);
    case StatKind::RunningMax: return std::max(a, S);
    case StatKind::RunningMin: return std::min(a, S);
    }
    return S;
}

/// Values of one monitoring segment [t_start, t_end] on the (statistic, x) tensor.
struct AugmentedSurface {
    std::optional<StatKind> stat_kind;
    std::size_t segment = 0; // k, covering [t_{k-1}, t_k]
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> stat_nodes; // one placeholder node when the statistic is not yet defined
    std::vector<double> log_prices;
    std::vector<double> spots;
    Matrix start_values; // (stat, x) at t_start+
    Matrix end_values;   // (stat, x) at t_end, after the fixing jump
    Side side = Side::Upper;
};

struct PathDependentResult {
    double price_at_0;
    std::vector<AugmentedSurface> surfaces; // ordered by segment
};

struct PathChainOptions {
    /// Statistic nodes; 0 means n_space / 2.
    std::size_t stat_nodes = 0;
};

namespace detail {

struct ChainPlan {
    std::optional<StatKind> stat;
};

inline ChainPlan plan_chain(const Payoff& payoff, const MonitoringSchedule& schedule)
{
    if (payoff.aggregate_kind_count() > 1)
        throw UnsupportedPayoff("payoff '" + payoff.source_text() +
                                "' mixes several fixing aggregates; only one of AVG, MAXF, MINF is supported");
    if (payoff.n_fixings() > schedule.size())
        throw DomainError("payoff references S[" + std::to_string(payoff.n_fixings()) + "] but the schedule has " +
                          std::to_string(schedule.size()) + " dates");
    // Individual fixings are only reducible when they are the terminal one.
    std::vector<const Node*> stack{&payoff.ast()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->kind == NodeKind::Fixing && static_cast<std::size_t>(n->index) != schedule.size())
            throw UnsupportedPayoff("payoff '" + payoff.source_text() + "' references S[" +
                                    std::to_string(n->index) +
                                    "], which is not reducible to a running statistic");
        for (const auto& a : n->args)
            stack.push_back(a.get());
    }
    return {payoff.statistic()};
}

inline std::vector<std::size_t> segment_steps(const std::vector<double>& dates, double T, std::size_t n_time)
{
    std::vector<std::size_t> steps;
    double prev = 0.0;
    for (double d : dates) {
        const double share = static_cast<double>(n_time) * (d - prev) / T;
        steps.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(share))));
        prev = d;
    }
    return steps;
}

} // namespace detail

/// Robust price of a discretely monitored claim through the backward chain of solves.
inline PathDependentResult solve_path_dependent(const Payoff& payoff, const MonitoringSchedule& schedule,
                                                const MarketSpec& spec, const GridSpec& grid = {},
                                                Side side = Side::Upper, PathChainOptions options = {})
{
    grid.validate();
    if (std::abs(schedule.dates().back() - spec.maturity) > 1e-12 * std::max(1.0, spec.maturity))
        throw DomainError("schedule must end at the market maturity");
    const detail::ChainPlan plan = detail::plan_chain(payoff, schedule);

    const LogGrid lg(spec.spot, detail::half_width(grid, spec), grid.n_space);
    const std::size_t nx = lg.size();
    const std::size_t N = schedule.size();
    const auto& dates = schedule.dates();
    const std::vector<std::size_t> steps = detail::segment_steps(dates, spec.maturity, grid.n_time);

    std::vector<double> stat_nodes{spec.spot};
    if (plan.stat) {
        const std::size_t ns = options.stat_nodes ? options.stat_nodes : std::max<std::size_t>(2, grid.n_space / 2);
        if (ns < 2)
            throw DomainError("path chain needs at least two statistic nodes");
        stat_nodes.resize(ns);
        const double lo = lg.x.front();
        const double hi = lg.x.back();
        for (std::size_t j = 0; j < ns; ++j)
            stat_nodes[j] = std::exp(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(ns - 1));
        stat_nodes.front() = lg.S.front();
        stat_nodes.back() = lg.S.back();
    }

    detail::BarenblattKernel kernel(lg, spec.band, side, grid.scheme, grid.max_policy_iterations,
                                    grid.policy_tolerance);

    PathDependentResult result{};
    result.surfaces.resize(N);

    // Terminal condition of the last segment: the final fixing is S_T itself.
    const bool last_has_stat = plan.stat && N >= 2;
    Matrix terminal(last_has_stat ? stat_nodes.size() : 1, nx);
    for (std::size_t a = 0; a < terminal.rows(); ++a)
        for (std::size_t i = 0; i < nx; ++i) {
            const double S = lg.S[i];
            if (plan.stat) {
                const double stat = update_statistic(*plan.stat, stat_nodes[a], S, N);
                terminal(a, i) = eval_payoff_with_statistic(payoff, S, stat, N);
            } else {
                terminal(a, i) = eval_payoff_with_statistic(payoff, S, S, N);
            }
        }

    std::vector<double> cur(nx), nxt(nx);
    for (std::size_t k = N; k >= 1; --k) {
        const double t_lo = k >= 2 ? dates[k - 2] : 0.0;
        const double t_hi = dates[k - 1];
        const bool has_stat = plan.stat && k >= 2;
        const std::size_t n_slices = terminal.rows();

        AugmentedSurface& surf = result.surfaces[k - 1];
        surf.stat_kind = plan.stat;
        surf.segment = k;
        surf.t_start = t_lo;
        surf.t_end = t_hi;
        surf.stat_nodes = has_stat ? stat_nodes : std::vector<double>{spec.spot};
        surf.log_prices = lg.x;
        surf.spots = lg.S;
        surf.end_values = terminal;
        surf.start_values = Matrix(n_slices, nx);
        surf.side = side;

        const std::size_t m = steps[k - 1];
        for (std::size_t a = 0; a < n_slices; ++a) {
            std::copy(terminal.row(a), terminal.row(a) + nx, nxt.begin());
            for (std::size_t j = m; j-- > 0;) {
                const double t0 = j == 0 ? t_lo : t_lo + (t_hi - t_lo) * static_cast<double>(j) / static_cast<double>(m);
                const double t1 = j + 1 == m ? t_hi
                                             : t_lo + (t_hi - t_lo) * static_cast<double>(j + 1) / static_cast<double>(m);
                kernel.step(nxt, cur, t1 - t0, spec.rates.average_rate(t0, t1));
                std::swap(cur, nxt);
            }
            std::copy(nxt.begin(), nxt.end(), surf.start_values.row(a));
        }

        if (k == 1)
            break;

        // Fixing jump at t_{k-1}: the statistic absorbs S as the (k-1)-th fixing.
        const bool prev_has_stat = plan.stat && k - 1 >= 2;
        Matrix jumped(prev_has_stat ? stat_nodes.size() : 1, nx);
        for (std::size_t a = 0; a < jumped.rows(); ++a)
            for (std::size_t i = 0; i < nx; ++i) {
                if (!has_stat) {
                    jumped(a, i) = surf.start_values(0, i);
                    continue;
                }
                const double prev_stat = prev_has_stat ? stat_nodes[a] : lg.S[i];
                const double stat = update_statistic(*plan.stat, prev_stat, lg.S[i], k - 1);
                const Bracket b = bracket(stat_nodes, stat);
                jumped(a, i) = surf.start_values(b.lo, i) * (1.0 - b.w) + surf.start_values(b.lo + 1, i) * b.w;
            }
        terminal = std::move(jumped);
    }

    const AugmentedSurface& first = result.surfaces.front();
    result.price_at_0 = first.start_values(0, lg.spot_index);
    return result;
}

} // namespace uvm
