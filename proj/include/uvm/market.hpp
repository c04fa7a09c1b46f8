#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uvm/errors.hpp"

namespace uvm {

/// Volatility known only to stay inside [sigma_lo, sigma_hi].
struct VolatilityBand {
    double sigma_lo;
    double sigma_hi;

    VolatilityBand(double lo, double hi) : sigma_lo(lo), sigma_hi(hi)
    {
        if (!(lo > 0.0) || !(lo <= hi) || !std::isfinite(hi))
            throw DomainError("volatility band requires 0 < sigma_lo <= sigma_hi, got [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }

    double var_lo() const noexcept { return sigma_lo * sigma_lo; }
    double var_hi() const noexcept { return sigma_hi * sigma_hi; }
    bool degenerate() const noexcept { return sigma_lo == sigma_hi; }
    bool contains(double sigma) const noexcept { return sigma >= sigma_lo && sigma <= sigma_hi; }
};

/// Drift ambiguity [mu_lo, mu_hi]; drives the finite-variation part of the path.
struct MeanBand {
    double mu_lo;
    double mu_hi;

    MeanBand(double lo, double hi) : mu_lo(lo), mu_hi(hi)
    {
        if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw DomainError("mean band requires mu_lo <= mu_hi");
    }

    bool contains(double mu) const noexcept { return mu >= mu_lo && mu <= mu_hi; }
};

struct RateBand {
    double r_lo;
    double r_hi;

    RateBand(double lo, double hi) : r_lo(lo), r_hi(hi)
    {
        if (!(lo >= 0.0) || !(lo <= hi) || !std::isfinite(hi))
            throw DomainError("rate band requires 0 <= r_lo <= r_hi");
    }
};

/// Piecewise-constant, right-continuous short rate.
class RateCurve {
public:
    struct Segment {
        double t_start;
        double rate;
    };

    RateCurve(std::vector<Segment> segments,
              double horizon = std::numeric_limits<double>::infinity(),
              std::optional<RateBand> band = std::nullopt)
        : segments_(std::move(segments)), horizon_(horizon), band_(band)
    {
        if (segments_.empty() || segments_.front().t_start != 0.0)
            throw DomainError("rate curve must start at t = 0");
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            if (!(segments_[i].rate >= 0.0) || !std::isfinite(segments_[i].rate))
                throw DomainError("rate curve rates must be finite and nonnegative");
            if (i > 0 && !(segments_[i].t_start > segments_[i - 1].t_start))
                throw DomainError("rate curve segment starts must be strictly increasing");
        }
        if (!(horizon_ > segments_.back().t_start))
            throw DomainError("rate curve horizon must exceed the last segment start");
    }

    static RateCurve flat(double rate) { return RateCurve({{0.0, rate}}); }

    const std::vector<Segment>& segments() const noexcept { return segments_; }
    double horizon() const noexcept { return horizon_; }
    const std::optional<RateBand>& rate_band() const noexcept { return band_; }

    RateCurve with_band(RateBand band) const { return RateCurve(segments_, horizon_, band); }

    double rate_at(double t) const
    {
        check_time(t);
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double v, const Segment& s) { return v < s.t_start; });
        return std::prev(it)->rate;
    }

    /// Integral of r over [t0, t1], exact for the piecewise-constant curve.
    double integral(double t0, double t1) const
    {
        check_time(t0);
        check_time(t1);
        if (t0 > t1)
            throw DomainError("rate integral requires t0 <= t1");
        double acc = 0.0;
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const double a = segments_[i].t_start;
            const double b = i + 1 < segments_.size() ? segments_[i + 1].t_start
                                                      : std::numeric_limits<double>::infinity();
            const double lo = std::max(a, t0);
            const double hi = std::min(b, t1);
            if (hi > lo)
                acc += segments_[i].rate * (hi - lo);
        }
        return acc;
    }

    double average_rate(double t0, double t1) const
    {
        if (t1 == t0)
            return rate_at(t0);
        // Inside one segment the average is that segment's rate, exactly.
        const double r0 = rate_at(t0);
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t0,
                                   [](double v, const Segment& s) { return v < s.t_start; });
        if (it == segments_.end() || t1 <= it->t_start)
            return r0;
        return integral(t0, t1) / (t1 - t0);
    }

private:
    void check_time(double t) const
    {
        if (!(t >= 0.0) || t > horizon_)
            throw DomainError("time " + std::to_string(t) + " outside rate curve domain [0, " +
                              std::to_string(horizon_) + "]");
    }

    std::vector<Segment> segments_;
    double horizon_;
    std::optional<RateBand> band_;
};

struct MarketSpec {
    double spot;
    VolatilityBand band;
    std::optional<MeanBand> mean_band;
    RateCurve rates;
    double maturity;

    MarketSpec(double spot_, VolatilityBand band_, RateCurve rates_, double maturity_,
               std::optional<MeanBand> mean_band_ = std::nullopt)
        : spot(spot_), band(band_), mean_band(mean_band_), rates(std::move(rates_)), maturity(maturity_)
    {
        if (!(spot > 0.0) || !std::isfinite(spot))
            throw DomainError("spot must be positive");
        if (!(maturity > 0.0) || !std::isfinite(maturity))
            throw DomainError("maturity must be positive");
        if (maturity > rates.horizon())
            throw DomainError("rate curve does not cover [0, maturity]");
    }

    MarketSpec with_band(VolatilityBand b) const
    {
        MarketSpec copy = *this;
        copy.band = b;
        return copy;
    }
};

/// exp(-integral of r over [t0, t1]).
inline double discount_factor(const RateCurve& rates, double t0, double t1)
{
    return std::exp(-rates.integral(t0, t1));
}

/// One-dimensional G generator: 1/2 sup over sigma^2 in the band of sigma^2 * a.
inline double g_function(const VolatilityBand& band, double a) noexcept
{
    return a >= 0.0 ? 0.5 * band.var_hi() * a : 0.5 * band.var_lo() * a;
}

struct DriftInterval {
    double lo;
    double hi;
};

/// Range of the mean continuously compounded return when volatility is ambiguous.
inline DriftInterval log_return_mean_band(double mu, const VolatilityBand& band) noexcept
{
    return {mu - 0.5 * band.var_hi(), mu - 0.5 * band.var_lo()};
}

struct RobustInterval {
    double ln_lo;
    double ln_hi;
    // False outside sigma band within [0.2, 0.4] and T <= 1, where the
    // monotonicity argument behind "at least 95%" is not available.
    bool coverage_asserted;
};

/// 95% interval for ln S_T valid under every admissible volatility, built at sigma_hi.
inline RobustInterval robust_confidence_interval(const MarketSpec& spec)
{
    constexpr double z = 1.96;
    const double T = spec.maturity;
    const double r = spec.rates.average_rate(0.0, T);
    const double s = spec.band.sigma_hi;
    const double centre = std::log(spec.spot) + (r - 0.5 * s * s) * T;
    const double half = z * s * std::sqrt(T);
    const bool asserted = T <= 1.0 && spec.band.sigma_lo >= 0.2 && spec.band.sigma_hi <= 0.4;
    return {centre - half, centre + half, asserted};
}

} // namespace uvm
