#pragma once

#include <boost/version.hpp>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvm/bsb.hpp"
#include "uvm/config.hpp"
#include "uvm/errors.hpp"
#include "uvm/hedging.hpp"
#include "uvm/io.hpp"
#include "uvm/market.hpp"
#include "uvm/metrics.hpp"
#include "uvm/path_chain.hpp"
#include "uvm/paths.hpp"

namespace uvm {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitSolver = 2 };

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {

using nlohmann::json;

inline void write_json(const json& j, const std::filesystem::path& p)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    f << j.dump(2) << '\n';
}

inline VolPolicy make_vol_policy(const VolPolicyConfig& v, std::shared_ptr<const PriceSurface> surface)
{
    if (v.kind == "constant")
        return ConstantVol{v.sigma};
    if (v.kind == "two_regime")
        return TwoRegimeVol{v.sigma_a, v.sigma_b, v.switch_time};
    if (v.kind == "bang_bang")
        return BangBangVol{std::move(surface)};
    return RandomBandVol{};
}

inline json vol_policy_json(const VolPolicyConfig& v)
{
    json j{{"kind", v.kind}};
    if (v.kind == "constant")
        j["sigma"] = v.sigma;
    if (v.kind == "two_regime") {
        j["sigma_a"] = v.sigma_a;
        j["sigma_b"] = v.sigma_b;
        j["switch_time"] = v.switch_time;
    }
    return j;
}

inline json drift_policy_json(const DriftPolicy& d)
{
    if (const auto* c = std::get_if<ConstantDrift>(&d))
        return {{"kind", "constant"}, {"mu", c->mu}};
    if (const auto* c = std::get_if<CoupledDrift>(&d))
        return {{"kind", "coupled"}, {"gamma", c->gamma}};
    return {{"kind", "risk_neutral_zero"}};
}

/// Every default the run used, after config values and overrides are applied.
inline json resolved_settings(const RunConfig& c, Command cmd)
{
    const MarketSpec& m = *c.market;
    json market{{"spot", m.spot},
                {"sigma_lo", m.band.sigma_lo},
                {"sigma_hi", m.band.sigma_hi},
                {"maturity", m.maturity}};
    json rates = json::array();
    for (const auto& s : m.rates.segments())
        rates.push_back({{"t_start", s.t_start}, {"rate", s.rate}});
    market["rates"] = rates;
    if (m.rates.rate_band())
        market["rate_band"] = {m.rates.rate_band()->r_lo, m.rates.rate_band()->r_hi};
    if (m.mean_band)
        market["mean_band"] = {m.mean_band->mu_lo, m.mean_band->mu_hi};

    json grid{{"n_space", c.grid.n_space},
              {"n_time", c.grid.n_time},
              {"domain_width", c.grid.domain_width},
              {"scheme", to_string(c.grid.scheme)},
              {"max_policy_iterations", c.grid.max_policy_iterations},
              {"policy_tolerance", c.grid.policy_tolerance},
              {"stat_nodes", c.stat_nodes ? c.stat_nodes : std::max<std::size_t>(2, c.grid.n_space / 2)}};

    json r{{"market", market}, {"grid", grid}};
    if (c.payoff)
        r["payoff"] = c.payoff->print();
    if (c.schedule)
        r["schedule"] = c.schedule->dates();
    switch (cmd) {
    case Command::Price:
        r["price"] = {{"side", to_string(c.price.side)},
                      {"rate_uncertain", c.price.rate_uncertain},
                      {"write_surface", c.price.write_surface}};
        break;
    case Command::PricePathDep: r["price"] = {{"side", to_string(c.price.side)}}; break;
    case Command::Hedge:
        r["hedge"] = {{"side", to_string(c.hedge.side)},
                      {"vol_policy", vol_policy_json(c.hedge.vol_policy)},
                      {"n_paths", c.hedge.n_paths},
                      {"n_steps", c.hedge.n_steps},
                      {"seed", c.hedge.seed},
                      {"allow_clamp", c.hedge.allow_clamp},
                      {"write_ledgers", c.hedge.write_ledgers}};
        break;
    case Command::Spread: r["spread"] = {{"estimate_tolerance", c.spread.estimate_tolerance}}; break;
    case Command::Parity: {
        json sides = json::array();
        for (Side s : c.parity.sides)
            sides.push_back(to_string(s));
        r["parity"] = {{"strike", *c.parity.strike}, {"sides", sides}};
        break;
    }
    case Command::Simulate:
        r["simulate"] = {{"vol_policy", vol_policy_json(c.simulate.vol_policy)},
                         {"drift_policy", drift_policy_json(c.simulate.drift_policy)},
                         {"n_paths", c.simulate.n_paths},
                         {"n_steps", c.simulate.n_steps},
                         {"seed", c.simulate.seed}};
        break;
    case Command::BandStats: r["band_stats"] = {{"mu", *c.band_stats.mu}}; break;
    }
    return r;
}

inline std::vector<std::string> execute(const RunConfig& c, Command cmd, const std::filesystem::path& out)
{
    const MarketSpec& m = *c.market;
    std::vector<std::string> files;
    auto emit = [&](const std::string& name) {
        files.push_back(name);
        return out / name;
    };

    switch (cmd) {
    case Command::Price: {
        const PriceSurface s = c.price.rate_uncertain ? solve_bsb_rate_uncertain(*c.payoff, m, c.grid, c.price.side)
                                                      : solve_bsb(*c.payoff, m, c.grid, c.price.side);
        const Greeks g = greeks_at(s, 0.0, m.spot);
        json j{{"side", to_string(c.price.side)},
               {"payoff", c.payoff->print()},
               {"value", g.value},
               {"delta", g.delta},
               {"gamma", g.gamma},
               {"eta", g.eta},
               {"rate_uncertain", c.price.rate_uncertain},
               {"policy_iterations", s.max_policy_iterations_used}};
        j[to_string(c.price.side)] = g.value;
        write_json(j, emit("price.json"));
        if (c.price.write_surface)
            io::write_surface_csv(s, emit("surface.csv"));
        break;
    }
    case Command::PricePathDep: {
        const PathDependentResult r =
            solve_path_dependent(*c.payoff, *c.schedule, m, c.grid, c.price.side, {c.stat_nodes});
        const auto stat = c.payoff->statistic();
        json j{{"side", to_string(c.price.side)},
               {"payoff", c.payoff->print()},
               {"value", r.price_at_0},
               {"stat_kind", !stat ? "none"
                             : *stat == StatKind::RunningAvg ? "running_avg"
                             : *stat == StatKind::RunningMax ? "running_max"
                                                             : "running_min"},
               {"segments", r.surfaces.size()}};
        j[to_string(c.price.side)] = r.price_at_0;
        write_json(j, emit("price.json"));
        for (const auto& s : r.surfaces)
            io::write_tensor_csv(s, emit("tensor_" + std::to_string(s.segment) + ".csv"));
        break;
    }
    case Command::Hedge: {
        const Side side = c.hedge.side == HedgeSide::ShortUpper ? Side::Upper : Side::Lower;
        auto surface = std::make_shared<const PriceSurface>(solve_bsb(*c.payoff, m, c.grid, side));
        const VolPolicy vol = make_vol_policy(c.hedge.vol_policy, surface);
        HedgeOptions opt;
        opt.allow_clamp = c.hedge.allow_clamp;
        opt.payoff = *c.payoff;
        json paths = json::array();
        double eps = 0.0, min_pnl = 0.0, worst_short = -std::numeric_limits<double>::infinity(), sum_K = 0.0;
        std::size_t clamped = 0;
        for (std::size_t i = 0; i < c.hedge.n_paths; ++i) {
            const SimulatedPath p = simulate_path(m, vol, RiskNeutralZero{}, c.hedge.n_steps, c.hedge.seed, i);
            const HedgeLedger L = run_delta_hedge(*surface, p, m, c.hedge.side, opt);
            if (c.hedge.write_ledgers)
                io::write_ledger_csv(L, emit("ledger_" + std::to_string(i) + ".csv"));
            for (double x : L.pnl_increments)
                min_pnl = std::min(min_pnl, x);
            eps = std::max(eps, L.eps_disc);
            worst_short = std::max(worst_short, L.terminal_shortfall);
            sum_K += L.K_cumulative.back();
            clamped += L.clamped ? 1 : 0;
            paths.push_back({{"path_id", i},
                             {"K_T", L.K_cumulative.back()},
                             {"terminal_payoff", L.terminal_payoff},
                             {"terminal_shortfall", L.terminal_shortfall},
                             {"eps_disc", L.eps_disc},
                             {"clamped", L.clamped}});
        }
        json j{{"side", to_string(c.hedge.side)},
               {"premium", price_at_spot(*surface)},
               {"n_paths", c.hedge.n_paths},
               {"n_steps", c.hedge.n_steps},
               {"eps_disc", eps},
               {"min_pnl_increment", min_pnl},
               {"max_terminal_shortfall", worst_short},
               {"mean_K_T", sum_K / static_cast<double>(c.hedge.n_paths)},
               {"clamped_paths", clamped},
               {"paths", paths}};
        write_json(j, emit("hedge.json"));
        break;
    }
    case Command::Spread: {
        const SpreadReport r = spread(*c.payoff, m, c.grid, {c.spread.estimate_tolerance});
        json j{{"payoff", c.payoff->print()},
               {"upper", r.upper_price},
               {"lower", r.lower_price},
               {"spread", r.spread},
               {"L", r.L_estimate},
               {"bound", r.bound},
               {"method_note", r.method_note}};
        j["grid_tolerance"] = std::isnan(r.grid_tolerance) ? json(nullptr) : json(r.grid_tolerance);
        write_json(j, emit("spread.json"));
        break;
    }
    case Command::Parity: {
        json j{{"strike", *c.parity.strike}};
        double worst = 0.0;
        for (Side s : c.parity.sides) {
            const ParityReport r = parity_check(m, *c.parity.strike, c.grid, s);
            j[std::string("residual_") + to_string(s)] = r.max_residual;
            worst = std::max(worst, r.max_residual);
        }
        j["residual"] = worst;
        write_json(j, emit("parity.json"));
        break;
    }
    case Command::Simulate: {
        std::shared_ptr<const PriceSurface> surface;
        if (c.simulate.vol_policy.kind == "bang_bang")
            surface = std::make_shared<const PriceSurface>(solve_bsb(*c.payoff, m, c.grid, Side::Upper));
        const VolPolicy vol = make_vol_policy(c.simulate.vol_policy, surface);
        std::ofstream f(emit("paths.csv"), std::ios::binary | std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write paths.csv");
        io::write_paths_header(f);
        for (std::size_t i = 0; i < c.simulate.n_paths; ++i)
            io::write_path_rows(f, simulate_path(m, vol, c.simulate.drift_policy, c.simulate.n_steps,
                                                 c.simulate.seed, i));
        break;
    }
    case Command::BandStats: {
        const double mu = *c.band_stats.mu;
        const DriftInterval d = log_return_mean_band(mu, m.band);
        const RobustInterval ci = robust_confidence_interval(m);
        json j{{"mu", mu},
               {"sigma_lo", m.band.sigma_lo},
               {"sigma_hi", m.band.sigma_hi},
               {"mean_band", {d.lo, d.hi}},
               {"robust_interval",
                {{"ln_lo", ci.ln_lo}, {"ln_hi", ci.ln_hi}, {"coverage_asserted", ci.coverage_asserted}}}};
        write_json(j, emit("band_stats.json"));
        break;
    }
    }
    return files;
}

} // namespace detail

/// Runs one command. Validation failures return 1 and write nothing; failures
/// after validation return 2 and still write manifest.json.
inline int run(Command cmd, const std::string& config_path, const std::filesystem::path& out_dir,
               std::optional<std::uint64_t> seed_override, std::ostream& err)
{
    using nlohmann::json;
    const auto t0 = std::chrono::steady_clock::now();

    RunConfig cfg;
    try {
        cfg = parse_config(read_json_file(config_path));
        if (seed_override) {
            cfg.hedge.seed = *seed_override;
            cfg.simulate.seed = *seed_override;
        }
        validate_for(cfg, cmd);
        std::filesystem::create_directories(out_dir);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    std::optional<std::uint64_t> seed;
    if (cmd == Command::Hedge)
        seed = cfg.hedge.seed;
    if (cmd == Command::Simulate)
        seed = cfg.simulate.seed;

    json manifest{{"schema_version", kSchemaVersion},
                  {"command", to_string(cmd)},
                  {"config_path", config_path},
                  {"versions",
                   {{"uvm", kVersion},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                    {"boost", BOOST_LIB_VERSION},
                    {"compiler", __VERSION__}}}};
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.raw.dump())));
    manifest["config_hash"] = std::string("fnv1a64:") + hash;
    manifest["seed"] = seed ? json(*seed) : json(nullptr);
    manifest["resolved"] = detail::resolved_settings(cfg, cmd);

    int code = kExitOk;
    try {
        manifest["outputs"] = detail::execute(cfg, cmd, out_dir);
        manifest["status"] = "ok";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        manifest["status"] = "solver_error";
        manifest["error"] = e.what();
        code = kExitSolver;
    }
    manifest["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        detail::write_json(manifest, out_dir / "manifest.json");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitSolver;
    }
    return code;
}

} // namespace uvm
