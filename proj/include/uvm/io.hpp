#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvm/bsb.hpp"
#include "uvm/errors.hpp"
#include "uvm/hedging.hpp"
#include "uvm/path_chain.hpp"
#include "uvm/paths.hpp"

namespace uvm::io {

/// Round-trip decimal form of a double (17 significant digits).
inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open(const std::filesystem::path& p)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    return f;
}

template <class... Ts>
void row(std::ostream& os, const Ts&... cols)
{
    bool first = true;
    ((os << (first ? "" : ",") << cols, first = false), ...);
    os << '\n';
}

} // namespace detail

inline void write_surface_csv(const PriceSurface& s, const std::filesystem::path& p)
{
    auto f = detail::open(p);
    f << "t,x,S,value,delta,gamma,eta\n";
    for (std::size_t n = 0; n < s.n_times(); ++n)
        for (std::size_t i = 0; i < s.n_space(); ++i)
            detail::row(f, num(s.times[n]), num(s.log_prices[i]), num(s.spots[i]), num(s.values(n, i)),
                        num(s.delta(n, i)), num(s.gamma(n, i)), num(s.eta(n, i)));
}

/// Segment tensor at its start (t_start+) and end (t_end, after the fixing jump).
inline void write_tensor_csv(const AugmentedSurface& s, const std::filesystem::path& p)
{
    auto f = detail::open(p);
    f << "t,x,S,stat,value\n";
    auto dump = [&](double t, const Matrix& m) {
        for (std::size_t a = 0; a < m.rows(); ++a)
            for (std::size_t i = 0; i < m.cols(); ++i)
                detail::row(f, num(t), num(s.log_prices[i]), num(s.spots[i]), num(s.stat_nodes[a]), num(m(a, i)));
    };
    dump(s.t_start, s.start_values);
    dump(s.t_end, s.end_values);
}

inline void write_paths_header(std::ostream& os) { os << "path_id,step,t,S,sigma2_dt,beta_dt\n"; }

/// Step k row carries the increments of step k -> k + 1; the final row has zeros.
inline void write_path_rows(std::ostream& os, const SimulatedPath& p)
{
    for (std::size_t k = 0; k < p.times.size(); ++k) {
        const bool last = k == p.n_steps();
        detail::row(os, p.path_id, k, num(p.times[k]), num(p.S[k]), num(last ? 0.0 : p.d_qv[k]),
                    num(last ? 0.0 : p.beta_increments[k]));
    }
}

inline void write_paths_csv(const std::vector<SimulatedPath>& paths, const std::filesystem::path& p)
{
    auto f = detail::open(p);
    write_paths_header(f);
    for (const auto& path : paths)
        write_path_rows(f, path);
}

/// Step k row: state at t_k; pnl is the increment of step k -> k + 1 (0 on the final row).
inline void write_ledger_csv(const HedgeLedger& L, const std::filesystem::path& p)
{
    auto f = detail::open(p);
    f << "step,t,S,delta,value,pnl,K_cum\n";
    for (std::size_t k = 0; k < L.times.size(); ++k)
        detail::row(f, k, num(L.times[k]), num(L.spots[k]), num(L.deltas[k]), num(L.values[k]),
                    num(k < L.n_steps() ? L.pnl_increments[k] : 0.0), num(L.K_cumulative[k]));
}

} // namespace uvm::io
