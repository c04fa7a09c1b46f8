#pragma once

// Black-Scholes-Barenblatt solver on a uniform log-price grid.
//
// In x = ln S the generator reads
//
//     V_t + sup_{(s, r)} { 1/2 s^2 (V_xx - V_x) + r (V_x - V) } + f = 0
//
// (inf for the lower side). V_xx - V_x = S^2 Gamma, so the optimal control
// sits on the band edges and switches with the sign of Gamma. The implicit
// scheme resolves the control per node with Howard policy iteration; the
// explicit scheme reads it off the previous time level.
//
// Far field: V is kept linear in S across the outermost cell by carrying
// the boundary slope from the previous time level (Gamma = 0 there).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uvm/errors.hpp"
#include "uvm/grid.hpp"
#include "uvm/market.hpp"
#include "uvm/payoff.hpp"

namespace uvm {

/// Source term f(t, S) added to the generator.
using SourceFn = std::function<double(double t, double S)>;

struct PriceSurface {
    std::vector<double> times;
    std::vector<double> log_prices;
    std::vector<double> spots;
    Matrix values;
    Matrix delta;
    Matrix gamma;
    Matrix eta;
    Side side = Side::Upper;
    VolatilityBand band{1.0, 1.0};
    double spot = 0.0;
    std::size_t max_policy_iterations_used = 0;

    std::size_t n_times() const noexcept { return times.size(); }
    std::size_t n_space() const noexcept { return log_prices.size(); }
    double s_min() const noexcept { return spots.front(); }
    double s_max() const noexcept { return spots.back(); }
};

struct Greeks {
    double value;
    double delta;
    double gamma;
    double eta;
};

/// Bilinear interpolation in (t, ln S) of the stored value, delta and gamma fields.
inline Greeks greeks_at(const PriceSurface& surface, double t, double S)
{
    const double t0 = surface.times.front();
    const double t1 = surface.times.back();
    const double slack = 1e-12 * std::max(1.0, std::abs(t1));
    if (!(t >= t0 - slack && t <= t1 + slack))
        throw DomainError("greeks_at: time " + std::to_string(t) + " outside surface");
    if (!(S >= surface.s_min() * (1.0 - 1e-12) && S <= surface.s_max() * (1.0 + 1e-12)))
        throw DomainError("greeks_at: price " + std::to_string(S) + " outside surface domain [" +
                          std::to_string(surface.s_min()) + ", " + std::to_string(surface.s_max()) + "]");
    const Bracket bt = bracket(surface.times, t);
    const Bracket bx = bracket(surface.log_prices, std::log(S));
    auto lerp2 = [&](const Matrix& m) {
        const double a = m(bt.lo, bx.lo) * (1.0 - bx.w) + m(bt.lo, bx.lo + 1) * bx.w;
        const double b = m(bt.lo + 1, bx.lo) * (1.0 - bx.w) + m(bt.lo + 1, bx.lo + 1) * bx.w;
        return a * (1.0 - bt.w) + b * bt.w;
    };
    const double gamma = lerp2(surface.gamma);
    return {lerp2(surface.values), lerp2(surface.delta), gamma, 0.5 * S * S * gamma};
}

/// Robust price at (0, spot).
inline double price_at_spot(const PriceSurface& surface)
{
    return greeks_at(surface, surface.times.front(), surface.spot).value;
}

namespace detail {

/// Central-difference greeks on one time slice; Gamma is zero on the boundary nodes.
inline void slice_greeks(const LogGrid& g, const double* v, double* delta, double* gamma, double* eta)
{
    const std::size_t n = g.size();
    const double dx = g.dx;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double vx = (v[i + 1] - v[i - 1]) / (2.0 * dx);
        const double vxx = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
        const double s = g.S[i];
        delta[i] = vx / s;
        gamma[i] = (vxx - vx) / (s * s);
        eta[i] = 0.5 * (vxx - vx);
    }
    delta[0] = (v[1] - v[0]) / (g.S[1] - g.S[0]);
    delta[n - 1] = (v[n - 1] - v[n - 2]) / (g.S[n - 1] - g.S[n - 2]);
    gamma[0] = gamma[n - 1] = 0.0;
    eta[0] = eta[n - 1] = 0.0;
}

/// One backward time step of the Barenblatt generator on a fixed log grid.
class BarenblattKernel {
public:
    struct Control {
        double var;
        double rate;
    };

    BarenblattKernel(const LogGrid& grid, VolatilityBand band, Side side, Scheme scheme,
                     std::size_t max_iterations, double tolerance,
                     std::optional<RateBand> rate_band = std::nullopt)
        : grid_(&grid), band_(band), side_(side), scheme_(scheme), max_iter_(max_iterations),
          tol_(tolerance), rate_band_(rate_band)
    {
        const std::size_t n = grid.size();
        sub_.resize(n);
        diag_.resize(n);
        sup_.resize(n);
        rhs_.resize(n);
        prev_.resize(n);
        policy_.resize(n);
    }

    /// Advances from V(t + dt) = next to V(t) = out. `rate` is ignored when a
    /// rate band is set. Returns the number of linear solves used.
    std::size_t step(std::span<const double> next, std::span<double> out, double dt, double rate,
                     std::span<const double> source = {})
    {
        set_controls(rate);
        const std::size_t n = grid_->size();

        if (scheme_ == Scheme::Explicit) {
            if (dt > grid_->dx * grid_->dx / band_.var_hi())
                throw SolverError("explicit scheme unstable: dt = " + std::to_string(dt) +
                                  " exceeds dx^2 / sigma_hi^2 = " +
                                  std::to_string(grid_->dx * grid_->dx / band_.var_hi()));
            for (std::size_t i = 1; i + 1 < n; ++i) {
                const std::size_t c = best_control(next, i, preferred_, 0.0);
                out[i] = next[i] + dt * (hamiltonian(next, i, c) + (source.empty() ? 0.0 : source[i]));
            }
            out[0] = out[1] - (next[1] - next[0]);
            out[n - 1] = out[n - 2] + (next[n - 1] - next[n - 2]);
            return 0;
        }

        for (std::size_t i = 1; i + 1 < n; ++i)
            policy_[i] = static_cast<std::uint8_t>(best_control(next, i, preferred_, 0.0));

        double scale = 0.0;
        for (double v : next)
            scale = std::max(scale, std::abs(v));

        std::size_t iter = 0;
        double change = 0.0;
        for (;;) {
            ++iter;
            assemble(next, dt, source);
            solve_tridiagonal(sub_, diag_, sup_, rhs_, scratch_);

            change = 0.0;
            if (iter > 1)
                for (std::size_t i = 0; i < n; ++i)
                    change = std::max(change, std::abs(rhs_[i] - prev_[i]));
            prev_ = rhs_;

            for (double v : rhs_)
                scale = std::max(scale, std::abs(v));
            // Switching needs a Hamiltonian gain above rounding noise; ties keep the current control.
            const double tie = 1e-13 * (scale + 1e-300) * (max_coeff_ + 1.0);
            bool changed = false;
            for (std::size_t i = 1; i + 1 < n; ++i) {
                const std::size_t c = best_control(rhs_, i, policy_[i], tie);
                if (c != policy_[i]) {
                    policy_[i] = static_cast<std::uint8_t>(c);
                    changed = true;
                }
            }
            // Converged once the policy is stable, or when a switch no longer moves the values.
            if (!changed || (iter > 1 && change < tol_ * std::max(1.0, scale)))
                break;
            if (iter >= max_iter_)
                throw SolverError("policy iteration did not converge after " + std::to_string(iter) +
                                  " iterations (last max change " + std::to_string(change) + ")");
        }
        std::copy(rhs_.begin(), rhs_.end(), out.begin());
        return iter;
    }

private:
    struct Coeffs {
        double lower;
        double upper;
        double rate;
    };

    void set_controls(double rate)
    {
        controls_.clear();
        const std::array<double, 2> vars{band_.var_lo(), band_.var_hi()};
        std::array<double, 2> rates{rate, rate};
        if (rate_band_)
            rates = {rate_band_->r_lo, rate_band_->r_hi};
        const std::size_t n_rates = rate_band_ ? 2 : 1;
        for (double var : vars)
            for (std::size_t k = 0; k < n_rates; ++k)
                controls_.push_back({var, rates[k]});
        // Ties resolve to sigma_hi (and r_hi) on the upper side, sigma_lo (r_lo) on the lower.
        preferred_ = side_ == Side::Upper ? controls_.size() - 1 : 0;

        coeffs_.clear();
        max_coeff_ = 0.0;
        const double dx = grid_->dx;
        for (const auto& c : controls_) {
            const double a = 0.5 * c.var;
            const double b = c.rate - a;
            double lo, up;
            if (a / (dx * dx) >= std::abs(b) / (2.0 * dx)) {
                lo = a / (dx * dx) - b / (2.0 * dx);
                up = a / (dx * dx) + b / (2.0 * dx);
            } else if (b > 0.0) {
                lo = a / (dx * dx);
                up = a / (dx * dx) + b / dx;
            } else {
                lo = a / (dx * dx) - b / dx;
                up = a / (dx * dx);
            }
            coeffs_.push_back({lo, up, c.rate});
            max_coeff_ = std::max(max_coeff_, lo + up + c.rate);
        }
    }

    double hamiltonian(std::span<const double> v, std::size_t i, std::size_t c) const
    {
        const Coeffs& k = coeffs_[c];
        return k.lower * (v[i - 1] - v[i]) + k.upper * (v[i + 1] - v[i]) - k.rate * v[i];
    }

    std::size_t best_control(std::span<const double> v, std::size_t i, std::size_t current, double tie) const
    {
        const bool maximise = side_ == Side::Upper;
        std::size_t best = current;
        double best_h = hamiltonian(v, i, current);
        for (std::size_t c = 0; c < coeffs_.size(); ++c) {
            if (c == current)
                continue;
            const double h = hamiltonian(v, i, c);
            if (maximise ? h > best_h + tie : h < best_h - tie) {
                best = c;
                best_h = h;
            }
        }
        return best;
    }

    void assemble(std::span<const double> next, double dt, std::span<const double> source)
    {
        const std::size_t n = grid_->size();
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const Coeffs& k = coeffs_[policy_[i]];
            sub_[i] = -dt * k.lower;
            sup_[i] = -dt * k.upper;
            diag_[i] = 1.0 + dt * (k.lower + k.upper + k.rate);
            rhs_[i] = next[i] + (source.empty() ? 0.0 : dt * source[i]);
        }
        sub_[0] = 0.0;
        diag_[0] = 1.0;
        sup_[0] = -1.0;
        rhs_[0] = next[0] - next[1];
        sub_[n - 1] = -1.0;
        diag_[n - 1] = 1.0;
        sup_[n - 1] = 0.0;
        rhs_[n - 1] = next[n - 1] - next[n - 2];
    }

    const LogGrid* grid_;
    VolatilityBand band_;
    Side side_;
    Scheme scheme_;
    std::size_t max_iter_;
    double tol_;
    std::optional<RateBand> rate_band_;

    std::vector<Control> controls_;
    std::vector<Coeffs> coeffs_;
    std::size_t preferred_ = 0;
    double max_coeff_ = 0.0;

    std::vector<double> sub_, diag_, sup_, rhs_, prev_, scratch_;
    std::vector<std::uint8_t> policy_;
};

inline double half_width(const GridSpec& grid, const MarketSpec& spec)
{
    if (grid.log_half_width)
        return *grid.log_half_width;
    return grid.domain_width * spec.band.sigma_hi * std::sqrt(spec.maturity);
}

inline std::vector<double> uniform_times(double T, std::size_t steps)
{
    std::vector<double> t(steps + 1);
    for (std::size_t n = 0; n <= steps; ++n)
        t[n] = T * static_cast<double>(n) / static_cast<double>(steps);
    t.back() = T;
    return t;
}

inline PriceSurface solve_surface(const Payoff& payoff, const MarketSpec& spec, const GridSpec& grid,
                                  Side side, const SourceFn& source, std::optional<RateBand> rate_band)
{
    grid.validate();
    if (payoff.path_dependent())
        throw DomainError("payoff '" + payoff.source_text() +
                          "' references fixings; use the path-dependent solver");

    const LogGrid lg(spec.spot, half_width(grid, spec), grid.n_space);
    const std::size_t nx = lg.size();
    const std::size_t nt = grid.n_time;

    PriceSurface out;
    out.times = uniform_times(spec.maturity, nt);
    out.log_prices = lg.x;
    out.spots = lg.S;
    out.values = Matrix(nt + 1, nx);
    out.delta = Matrix(nt + 1, nx);
    out.gamma = Matrix(nt + 1, nx);
    out.eta = Matrix(nt + 1, nx);
    out.side = side;
    out.band = spec.band;
    out.spot = spec.spot;

    for (std::size_t i = 0; i < nx; ++i)
        out.values(nt, i) = eval_payoff(payoff, lg.S[i]);

    BarenblattKernel kernel(lg, spec.band, side, grid.scheme, grid.max_policy_iterations,
                            grid.policy_tolerance, rate_band);
    std::vector<double> f;
    if (source)
        f.resize(nx);
    for (std::size_t n = nt; n-- > 0;) {
        const double t_now = out.times[n];
        const double t_next = out.times[n + 1];
        const double dt = t_next - t_now;
        const double rate = spec.rates.average_rate(t_now, t_next);
        if (source) {
            const double t_src = grid.scheme == Scheme::Explicit ? t_next : t_now;
            for (std::size_t i = 0; i < nx; ++i)
                f[i] = source(t_src, lg.S[i]);
        }
        const std::size_t iters = kernel.step(std::span<const double>(out.values.row(n + 1), nx),
                                              std::span<double>(out.values.row(n), nx), dt, rate, f);
        out.max_policy_iterations_used = std::max(out.max_policy_iterations_used, iters);
    }
    for (std::size_t n = 0; n <= nt; ++n)
        slice_greeks(lg, out.values.row(n), out.delta.row(n), out.gamma.row(n), out.eta.row(n));
    return out;
}

} // namespace detail

/// Upper (superhedging) or lower (subhedging) price surface of a state-dependent claim.
inline PriceSurface solve_bsb(const Payoff& payoff, const MarketSpec& spec, const GridSpec& grid = {},
                              Side side = Side::Upper, const SourceFn& source = {})
{
    return detail::solve_surface(payoff, spec, grid, side, source, std::nullopt);
}

/// As solve_bsb, with the short rate also ambiguous inside the curve's rate band.
inline PriceSurface solve_bsb_rate_uncertain(const Payoff& payoff, const MarketSpec& spec,
                                             const GridSpec& grid = {}, Side side = Side::Upper)
{
    if (!spec.rates.rate_band())
        throw DomainError("solve_bsb_rate_uncertain requires a rate band on the rate curve");
    return detail::solve_surface(payoff, spec, grid, side, {}, spec.rates.rate_band());
}

} // namespace uvm
