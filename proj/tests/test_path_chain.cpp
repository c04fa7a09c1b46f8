#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "uvm/path_chain.hpp"

using namespace uvm;
using Catch::Approx;

namespace {

MarketSpec market(double lo, double hi)
{
    return MarketSpec(100.0, VolatilityBand(lo, hi), RateCurve::flat(0.05), 1.0);
}

struct McEstimate {
    double mean;
    double se;
};

// Single-measure Monte Carlo for a discretely monitored claim, exact lognormal
// steps between fixing dates, antithetic pairs, and the discounted fixing
// average as control variate (its mean is known in closed form).
McEstimate monte_carlo(const Payoff& p, const std::vector<double>& dates, double sigma, std::size_t n_pairs,
                       std::uint64_t seed)
{
    const double r = 0.05, S0 = 100.0, T = dates.back(), df = std::exp(-r * T);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    double cv_mean = 0.0;
    for (double t : dates)
        cv_mean += S0 * std::exp(r * t);
    cv_mean *= df / static_cast<double>(dates.size());

    std::vector<double> ys, xs;
    ys.reserve(n_pairs);
    xs.reserve(n_pairs);
    std::vector<double> fa(dates.size()), fb(dates.size());
    for (std::size_t i = 0; i < n_pairs; ++i) {
        double la = std::log(S0), lb = std::log(S0), prev = 0.0;
        for (std::size_t k = 0; k < dates.size(); ++k) {
            const double dt = dates[k] - prev;
            prev = dates[k];
            const double e = z(rng);
            la += (r - 0.5 * sigma * sigma) * dt + sigma * std::sqrt(dt) * e;
            lb += (r - 0.5 * sigma * sigma) * dt - sigma * std::sqrt(dt) * e;
            fa[k] = std::exp(la);
            fb[k] = std::exp(lb);
        }
        double avg_a = 0.0, avg_b = 0.0;
        for (std::size_t k = 0; k < dates.size(); ++k)
            avg_a += fa[k], avg_b += fb[k];
        avg_a /= static_cast<double>(dates.size());
        avg_b /= static_cast<double>(dates.size());
        ys.push_back(0.5 * df * (eval_payoff(p, fa.back(), fa) + eval_payoff(p, fb.back(), fb)));
        xs.push_back(0.5 * df * (avg_a + avg_b));
    }
    const double n = static_cast<double>(n_pairs);
    double my = 0, mx = 0;
    for (std::size_t i = 0; i < n_pairs; ++i)
        my += ys[i], mx += xs[i];
    my /= n, mx /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        sxy += (ys[i] - my) * (xs[i] - mx);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double beta = sxx > 0 ? sxy / sxx : 0.0;
    double m = 0, ss = 0;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const double a = ys[i] - beta * (xs[i] - cv_mean);
        m += a;
        ss += a * a;
    }
    m /= n;
    return {m, std::sqrt((ss / n - m * m) / n)};
}

} // namespace

TEST_CASE("single fixing reduces to the vanilla solve")
{
    const MarketSpec m = market(0.2, 0.2);
    const double vanilla = price_at_spot(solve_bsb(parse_payoff("max(S - 100, 0)"), m));
    const auto r = solve_path_dependent(parse_payoff("max(AVG - 100, 0)"), MonitoringSchedule({1.0}, 1.0), m);
    CHECK(std::abs(r.price_at_0 - vanilla) <= 1e-9 * vanilla);
    REQUIRE(r.surfaces.size() == 1);
    CHECK(r.surfaces[0].stat_nodes.size() == 1);

    const MarketSpec w = market(0.1, 0.3);
    for (Side side : {Side::Upper, Side::Lower}) {
        const double v = price_at_spot(solve_bsb(parse_payoff("max(S - 100, 0)"), w, {}, side));
        const double c = solve_path_dependent(parse_payoff("max(MAXF - 100, 0)"), MonitoringSchedule({1.0}, 1.0), w,
                                              {}, side)
                             .price_at_0;
        CHECK(std::abs(c - v) <= 1e-9 * v);
    }
}

TEST_CASE("chain ignoring an intermediate fixing matches the vanilla solve")
{
    const MarketSpec m = market(0.1, 0.3);
    const double vanilla = price_at_spot(solve_bsb(parse_payoff("max(S - 100, 0)"), m));
    for (const char* text : {"max(S - 100, 0)", "max(S[2] - 100, 0)"}) {
        const auto r = solve_path_dependent(parse_payoff(text), MonitoringSchedule({0.5, 1.0}, 1.0), m);
        CHECK(std::abs(r.price_at_0 / vanilla - 1.0) <= 1e-6);
    }
}

TEST_CASE("degenerate-band Asian call against Monte Carlo")
{
    const std::vector<double> dates{0.25, 0.5, 0.75, 1.0};
    const Payoff asian = parse_payoff("max(AVG - 100, 0)");
    const McEstimate mc = monte_carlo(asian, dates, 0.2, 100000, 77); // 200k paths
    CHECK(mc.se < 0.001 * mc.mean);
    const double pde = solve_path_dependent(asian, MonitoringSchedule(dates, 1.0), market(0.2, 0.2)).price_at_0;
    CHECK(std::abs(pde / mc.mean - 1.0) < 0.005);
}

TEST_CASE("degenerate-band discrete lookback against Monte Carlo")
{
    const std::vector<double> dates{0.25, 0.5, 0.75, 1.0};
    const Payoff look = parse_payoff("max(MAXF - 100, 0)");
    const McEstimate mc = monte_carlo(look, dates, 0.2, 100000, 78);
    const double pde = solve_path_dependent(look, MonitoringSchedule(dates, 1.0), market(0.2, 0.2)).price_at_0;
    CHECK(std::abs(pde - mc.mean) < std::max(4.0 * mc.se, 0.005 * mc.mean));

    const Payoff put = parse_payoff("max(100 - MINF, 0)");
    const McEstimate mp = monte_carlo(put, dates, 0.2, 100000, 79);
    const double pp = solve_path_dependent(put, MonitoringSchedule(dates, 1.0), market(0.2, 0.2)).price_at_0;
    CHECK(std::abs(pp - mp.mean) < std::max(4.0 * mp.se, 0.005 * mp.mean));
}

TEST_CASE("upper tensor dominates lower tensor")
{
    const MonitoringSchedule sched({0.25, 0.5, 0.75, 1.0}, 1.0);
    const Payoff asian = parse_payoff("max(AVG - 100, 0)");
    const GridSpec g{200, 200};
    const auto up = solve_path_dependent(asian, sched, market(0.1, 0.3), g, Side::Upper);
    const auto lo = solve_path_dependent(asian, sched, market(0.1, 0.3), g, Side::Lower);
    REQUIRE(up.surfaces.size() == lo.surfaces.size());
    for (std::size_t k = 0; k < up.surfaces.size(); ++k) {
        const Matrix& a = up.surfaces[k].start_values;
        const Matrix& b = lo.surfaces[k].start_values;
        for (std::size_t s = 0; s < a.rows(); ++s)
            for (std::size_t i = 0; i < a.cols(); ++i)
                REQUIRE(a(s, i) >= b(s, i) - 1e-10);
    }
    CHECK(up.price_at_0 > lo.price_at_0);
}

TEST_CASE("band enlargement is monotone for the Asian chain")
{
    const MonitoringSchedule sched({0.5, 1.0}, 1.0);
    const Payoff asian = parse_payoff("max(AVG - 100, 0)");
    GridSpec g{200, 100};
    g.log_half_width = 1.8;
    const auto u1 = solve_path_dependent(asian, sched, market(0.15, 0.25), g, Side::Upper);
    const auto u2 = solve_path_dependent(asian, sched, market(0.1, 0.3), g, Side::Upper);
    const auto l1 = solve_path_dependent(asian, sched, market(0.15, 0.25), g, Side::Lower);
    const auto l2 = solve_path_dependent(asian, sched, market(0.1, 0.3), g, Side::Lower);
    for (std::size_t k = 0; k < u1.surfaces.size(); ++k)
        for (std::size_t s = 0; s < u1.surfaces[k].start_values.rows(); ++s)
            for (std::size_t i = 0; i < u1.surfaces[k].start_values.cols(); ++i) {
                REQUIRE(u2.surfaces[k].start_values(s, i) >= u1.surfaces[k].start_values(s, i) - 1e-8);
                REQUIRE(l2.surfaces[k].start_values(s, i) <= l1.surfaces[k].start_values(s, i) + 1e-8);
            }
}

TEST_CASE("stitching condition holds at every monitoring date")
{
    const MonitoringSchedule sched({0.25, 0.5, 0.75, 1.0}, 1.0);
    for (const char* text : {"max(AVG - 100, 0)", "max(MAXF - 105, 0)", "max(95 - MINF, 0) + S / 100"}) {
        const Payoff p = parse_payoff(text);
        const StatKind kind = *p.statistic();
        const auto r = solve_path_dependent(p, sched, market(0.1, 0.3), {100, 80});
        for (std::size_t k = 1; k < r.surfaces.size(); ++k) {
            const AugmentedSurface& before = r.surfaces[k - 1]; // ends at t_k
            const AugmentedSurface& after = r.surfaces[k];      // starts at t_k
            REQUIRE(before.t_end == after.t_start);
            for (std::size_t a = 0; a < before.end_values.rows(); ++a)
                for (std::size_t i = 0; i < before.spots.size(); ++i) {
                    const double S = before.spots[i];
                    const double prev = k >= 2 ? before.stat_nodes[a] : S;
                    const double stat = update_statistic(kind, prev, S, k);
                    const Bracket b = bracket(after.stat_nodes, stat);
                    const double expect = after.start_values(b.lo, i) * (1 - b.w) + after.start_values(b.lo + 1, i) * b.w;
                    REQUIRE(before.end_values(a, i) == Approx(expect).margin(1e-12));
                }
        }
        // Terminal condition of the last segment is the payoff itself.
        const AugmentedSurface& last = r.surfaces.back();
        for (std::size_t a = 0; a < last.end_values.rows(); a += 17)
            for (std::size_t i = 0; i < last.spots.size(); i += 5) {
                const double S = last.spots[i];
                const double stat = update_statistic(kind, last.stat_nodes[a], S, 4);
                REQUIRE(last.end_values(a, i) == eval_payoff_with_statistic(p, S, stat, 4));
            }
    }
}

TEST_CASE("update rules")
{
    CHECK(update_statistic(StatKind::RunningAvg, 100.0, 110.0, 2) == 105.0);
    CHECK(update_statistic(StatKind::RunningAvg, 99.0, 110.0, 1) == 110.0);
    CHECK(update_statistic(StatKind::RunningAvg, 100.0, 80.0, 5) == 96.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1.0, 300.0);
    for (int i = 0; i < 10000; ++i) {
        const double a = u(rng), S = u(rng);
        for (StatKind k : {StatKind::RunningMax, StatKind::RunningMin}) {
            const double once = update_statistic(k, a, S, 3);
            REQUIRE(update_statistic(k, once, S, 3) == once);
        }
    }
}

TEST_CASE("unsupported payoffs are rejected explicitly")
{
    const MonitoringSchedule sched({1.0 / 3, 2.0 / 3, 1.0}, 1.0);
    const MarketSpec m = market(0.2, 0.2);
    CHECK_THROWS_AS(solve_path_dependent(parse_payoff("S[1] * S[3]"), sched, m), UnsupportedPayoff);
    CHECK_THROWS_AS(solve_path_dependent(parse_payoff("AVG + MAXF"), sched, m), UnsupportedPayoff);
    CHECK_THROWS_AS(solve_path_dependent(parse_payoff("S[4]"), sched, m), DomainError);
    CHECK_THROWS_AS(solve_path_dependent(parse_payoff("S"), MonitoringSchedule({0.5}, 0.5), m), DomainError);
}
