#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "uvm/errors.hpp"

namespace uvm {

enum class Scheme { Explicit, ImplicitPolicyIteration };

/// Upper prices come from the sup generator (seller), lower from the inf (buyer).
enum class Side { Upper, Lower };

inline const char* to_string(Side s) { return s == Side::Upper ? "upper" : "lower"; }
inline const char* to_string(Scheme s) { return s == Scheme::Explicit ? "explicit" : "implicit_policy_iteration"; }

struct GridSpec {
    std::size_t n_space = 400;
    std::size_t n_time = 400;
    /// Log-space half-width in multiples of sigma_hi * sqrt(T).
    double domain_width = 6.0;
    Scheme scheme = Scheme::ImplicitPolicyIteration;
    /// Absolute log half-width; overrides domain_width so that solves with
    /// different bands share one grid.
    std::optional<double> log_half_width;
    std::size_t max_policy_iterations = 50;
    double policy_tolerance = 1e-10;

    void validate() const
    {
        if (n_space < 16)
            throw DomainError("grid needs n_space >= 16");
        if (n_time < 8)
            throw DomainError("grid needs n_time >= 8");
        if (!(domain_width > 0.0))
            throw DomainError("domain_width must be positive");
        if (log_half_width && !(*log_half_width > 0.0))
            throw DomainError("log_half_width must be positive");
        if (max_policy_iterations < 1)
            throw DomainError("max_policy_iterations must be >= 1");
        if (!(policy_tolerance > 0.0))
            throw DomainError("policy_tolerance must be positive");
    }

    GridSpec refined(std::size_t factor = 2) const
    {
        GridSpec g = *this;
        g.n_space = n_space * factor;
        g.n_time = n_time * factor;
        return g;
    }
};

/// Dense row-major matrix indexed (time, space).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Uniform log-price grid with ln(spot) on node n / 2. For even n the top
/// edge sits one cell short of ln(spot) + half_width.
struct LogGrid {
    std::vector<double> x;
    std::vector<double> S;
    double dx = 0.0;
    std::size_t spot_index = 0;

    LogGrid() = default;
    LogGrid(double spot, double half_width, std::size_t n)
    {
        spot_index = n / 2;
        dx = half_width / static_cast<double>(spot_index);
        const double centre = std::log(spot);
        x.resize(n);
        S.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = centre + dx * (static_cast<double>(i) - static_cast<double>(spot_index));
            S[i] = std::exp(x[i]);
        }
        x[spot_index] = centre;
        S[spot_index] = spot;
    }

    std::size_t size() const noexcept { return x.size(); }
};

/// Bracketing index and weight for linear interpolation on a sorted axis.
struct Bracket {
    std::size_t lo;
    double w; // weight of lo + 1
};

inline Bracket bracket(const std::vector<double>& axis, double v)
{
    if (axis.size() < 2)
        return {0, 0.0};
    if (v <= axis.front())
        return {0, 0.0};
    if (v >= axis.back())
        return {axis.size() - 2, 1.0};
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    std::size_t hi = static_cast<std::size_t>(it - axis.begin());
    std::size_t lo = hi - 1;
    const double w = (v - axis[lo]) / (axis[hi] - axis[lo]);
    return {lo, w};
}

/// Thomas algorithm; sub[0] and sup[n-1] are ignored. Overwrites rhs with the solution.
inline void solve_tridiagonal(const std::vector<double>& sub, const std::vector<double>& diag,
                              const std::vector<double>& sup, std::vector<double>& rhs,
                              std::vector<double>& scratch)
{
    const std::size_t n = diag.size();
    scratch.resize(n);
    double pivot = diag[0];
    if (pivot == 0.0)
        throw SolverError("singular tridiagonal system");
    scratch[0] = sup[0] / pivot;
    rhs[0] /= pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - sub[i] * scratch[i - 1];
        if (pivot == 0.0)
            throw SolverError("singular tridiagonal system");
        scratch[i] = i + 1 < n ? sup[i] / pivot : 0.0;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] -= scratch[i] * rhs[i + 1];
}

} // namespace uvm
