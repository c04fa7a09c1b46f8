#pragma once

// JSON run configuration.
//
// {
//   "schema_version": 1,
//   "market":   { "spot", "sigma_lo", "sigma_hi", "maturity",
//                 "rate" | "rates": [{"t_start", "rate"}...],
//                 "rate_band": [lo, hi]?, "mean_band": [lo, hi]? },
//   "payoff":   "max(S - 100, 0)",
//   "schedule": [0.25, 0.5, 0.75, 1.0],
//   "grid":     { "n_space", "n_time", "domain_width", "scheme",
//                 "max_policy_iterations", "policy_tolerance", "stat_nodes" },
//   "price":    { "side", "rate_uncertain", "write_surface" },
//   "hedge":    { "side", "vol_policy", "n_paths", "n_steps", "seed", "allow_clamp", "write_ledgers" },
//   "simulate": { "vol_policy", "drift_policy", "n_paths", "n_steps", "seed" },
//   "spread":   { "estimate_tolerance" },
//   "parity":   { "strike", "side" },
//   "band_stats": { "mu" }
// }
//
// Every object rejects keys it does not know.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvm/grid.hpp"
#include "uvm/hedging.hpp"
#include "uvm/market.hpp"
#include "uvm/paths.hpp"
#include "uvm/payoff.hpp"

namespace uvm {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Command { Price, PricePathDep, Hedge, Spread, Parity, Simulate, BandStats };

inline const char* to_string(Command c)
{
    switch (c) {
    case Command::Price: return "price";
    case Command::PricePathDep: return "price-path-dep";
    case Command::Hedge: return "hedge";
    case Command::Spread: return "spread";
    case Command::Parity: return "parity";
    case Command::Simulate: return "simulate";
    case Command::BandStats: return "band-stats";
    }
    return "?";
}

inline std::optional<Command> parse_command(const std::string& s)
{
    for (Command c : {Command::Price, Command::PricePathDep, Command::Hedge, Command::Spread, Command::Parity,
                      Command::Simulate, Command::BandStats})
        if (s == to_string(c))
            return c;
    return std::nullopt;
}

/// Volatility policy as written in the config; bang_bang is bound to a surface at run time.
struct VolPolicyConfig {
    std::string kind = "random_band";
    double sigma = 0.0;
    double sigma_a = 0.0;
    double sigma_b = 0.0;
    double switch_time = 0.0;
};

struct PriceBlock {
    Side side = Side::Upper;
    bool rate_uncertain = false;
    bool write_surface = true;
};

struct HedgeBlock {
    HedgeSide side = HedgeSide::ShortUpper;
    VolPolicyConfig vol_policy;
    std::size_t n_paths = 50;
    std::size_t n_steps = 252;
    std::uint64_t seed = 1;
    bool allow_clamp = true;
    bool write_ledgers = true;
};

struct SimulateBlock {
    VolPolicyConfig vol_policy;
    DriftPolicy drift_policy = RiskNeutralZero{};
    std::size_t n_paths = 100;
    std::size_t n_steps = 252;
    std::uint64_t seed = 1;
};

struct SpreadBlock {
    bool estimate_tolerance = true;
};

struct ParityBlock {
    std::optional<double> strike;
    std::vector<Side> sides{Side::Upper, Side::Lower};
};

struct BandStatsBlock {
    std::optional<double> mu;
};

struct RunConfig {
    int schema_version = 1;
    nlohmann::json raw;
    std::optional<MarketSpec> market;
    std::optional<Payoff> payoff;
    std::optional<MonitoringSchedule> schedule;
    GridSpec grid;
    std::size_t stat_nodes = 0;
    PriceBlock price;
    HedgeBlock hedge;
    SimulateBlock simulate;
    SpreadBlock spread;
    ParityBlock parity;
    BandStatsBlock band_stats;
};

inline constexpr int kSchemaVersion = 1;

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || it.key() == a;
        if (!ok)
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

inline double number(const json& j, const std::string& where)
{
    if (!j.is_number())
        throw ConfigError(where + " must be a number");
    return j.get<double>();
}

inline std::uint64_t count(const json& j, const std::string& where)
{
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        throw ConfigError(where + " must be a non-negative integer");
    return j.get<std::uint64_t>();
}

inline bool boolean(const json& j, const std::string& where)
{
    if (!j.is_boolean())
        throw ConfigError(where + " must be true or false");
    return j.get<bool>();
}

inline std::string text(const json& j, const std::string& where)
{
    if (!j.is_string())
        throw ConfigError(where + " must be a string");
    return j.get<std::string>();
}

inline std::pair<double, double> pair(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(where + " must be a two-element array");
    return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

inline Side parse_side(const json& j, const std::string& where)
{
    const std::string s = text(j, where);
    if (s == "upper")
        return Side::Upper;
    if (s == "lower")
        return Side::Lower;
    throw ConfigError(where + " must be \"upper\" or \"lower\"");
}

inline MarketSpec parse_market(const json& j)
{
    check_keys(j, {"spot", "sigma_lo", "sigma_hi", "maturity", "rate", "rates", "rate_band", "mean_band"}, "market");
    for (const char* k : {"spot", "sigma_lo", "sigma_hi", "maturity"})
        if (!j.contains(k))
            throw ConfigError(std::string("market.") + k + " is required");
    const double spot = number(j["spot"], "market.spot");
    const double T = number(j["maturity"], "market.maturity");
    VolatilityBand band(number(j["sigma_lo"], "market.sigma_lo"), number(j["sigma_hi"], "market.sigma_hi"));

    if (j.contains("rate") == j.contains("rates"))
        throw ConfigError("market needs exactly one of rate, rates");
    std::vector<RateCurve::Segment> segs;
    if (j.contains("rate")) {
        segs.push_back({0.0, number(j["rate"], "market.rate")});
    } else {
        if (!j["rates"].is_array() || j["rates"].empty())
            throw ConfigError("market.rates must be a non-empty array");
        for (std::size_t i = 0; i < j["rates"].size(); ++i) {
            const json& s = j["rates"][i];
            const std::string w = "market.rates[" + std::to_string(i) + "]";
            check_keys(s, {"t_start", "rate"}, w);
            if (!s.contains("t_start") || !s.contains("rate"))
                throw ConfigError(w + " needs t_start and rate");
            segs.push_back({number(s["t_start"], w + ".t_start"), number(s["rate"], w + ".rate")});
        }
    }
    std::optional<RateBand> rb;
    if (j.contains("rate_band")) {
        auto [lo, hi] = pair(j["rate_band"], "market.rate_band");
        rb = RateBand(lo, hi);
    }
    std::optional<MeanBand> mb;
    if (j.contains("mean_band")) {
        auto [lo, hi] = pair(j["mean_band"], "market.mean_band");
        mb = MeanBand(lo, hi);
    }
    return MarketSpec(spot, band, RateCurve(std::move(segs), std::numeric_limits<double>::infinity(), rb), T, mb);
}

inline void parse_grid(const json& j, RunConfig& c)
{
    check_keys(j, {"n_space", "n_time", "domain_width", "scheme", "max_policy_iterations", "policy_tolerance",
                   "stat_nodes"},
               "grid");
    if (j.contains("n_space"))
        c.grid.n_space = count(j["n_space"], "grid.n_space");
    if (j.contains("n_time"))
        c.grid.n_time = count(j["n_time"], "grid.n_time");
    if (j.contains("domain_width"))
        c.grid.domain_width = number(j["domain_width"], "grid.domain_width");
    if (j.contains("scheme")) {
        const std::string s = text(j["scheme"], "grid.scheme");
        if (s == "explicit")
            c.grid.scheme = Scheme::Explicit;
        else if (s == "implicit_policy_iteration")
            c.grid.scheme = Scheme::ImplicitPolicyIteration;
        else
            throw ConfigError("grid.scheme must be \"explicit\" or \"implicit_policy_iteration\"");
    }
    if (j.contains("max_policy_iterations"))
        c.grid.max_policy_iterations = count(j["max_policy_iterations"], "grid.max_policy_iterations");
    if (j.contains("policy_tolerance"))
        c.grid.policy_tolerance = number(j["policy_tolerance"], "grid.policy_tolerance");
    if (j.contains("stat_nodes"))
        c.stat_nodes = count(j["stat_nodes"], "grid.stat_nodes");
    c.grid.validate();
}

inline VolPolicyConfig parse_vol_policy(const json& j, const std::string& where)
{
    check_keys(j, {"kind", "sigma", "sigma_a", "sigma_b", "switch_time"}, where);
    if (!j.contains("kind"))
        throw ConfigError(where + ".kind is required");
    VolPolicyConfig v;
    v.kind = text(j["kind"], where + ".kind");
    auto need = [&](const char* k) {
        if (!j.contains(k))
            throw ConfigError(where + "." + k + " is required for kind " + v.kind);
        return number(j[k], where + "." + k);
    };
    if (v.kind == "constant") {
        v.sigma = need("sigma");
    } else if (v.kind == "two_regime") {
        v.sigma_a = need("sigma_a");
        v.sigma_b = need("sigma_b");
        v.switch_time = need("switch_time");
    } else if (v.kind != "random_band" && v.kind != "bang_bang") {
        throw ConfigError(where + ".kind must be one of constant, random_band, bang_bang, two_regime");
    }
    return v;
}

inline DriftPolicy parse_drift_policy(const json& j, const std::string& where)
{
    check_keys(j, {"kind", "mu", "gamma"}, where);
    const std::string kind = j.contains("kind") ? text(j["kind"], where + ".kind") : "";
    if (kind == "risk_neutral_zero")
        return RiskNeutralZero{};
    if (kind == "constant") {
        if (!j.contains("mu"))
            throw ConfigError(where + ".mu is required for kind constant");
        return ConstantDrift{number(j["mu"], where + ".mu")};
    }
    if (kind == "coupled") {
        if (!j.contains("gamma"))
            throw ConfigError(where + ".gamma is required for kind coupled");
        return CoupledDrift{number(j["gamma"], where + ".gamma")};
    }
    throw ConfigError(where + ".kind must be one of risk_neutral_zero, constant, coupled");
}

} // namespace detail

/// Parses and validates everything that can be checked without running a solve.
inline RunConfig parse_config(const nlohmann::json& j)
{
    using namespace detail;
    check_keys(j,
               {"schema_version", "market", "payoff", "schedule", "grid", "price", "hedge", "simulate", "spread",
                "parity", "band_stats"},
               "config");
    RunConfig c;
    c.raw = j;
    if (!j.contains("schema_version"))
        throw ConfigError("schema_version is required");
    c.schema_version = static_cast<int>(count(j["schema_version"], "schema_version"));
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");

    try {
        if (!j.contains("market"))
            throw ConfigError("market is required");
        c.market = parse_market(j["market"]);
        if (j.contains("payoff"))
            c.payoff = parse_payoff(text(j["payoff"], "payoff"));
        if (j.contains("schedule")) {
            if (!j["schedule"].is_array() || j["schedule"].empty())
                throw ConfigError("schedule must be a non-empty array of dates");
            std::vector<double> dates;
            for (const auto& d : j["schedule"])
                dates.push_back(number(d, "schedule entry"));
            c.schedule = MonitoringSchedule(std::move(dates), c.market->maturity);
        }
        if (j.contains("grid"))
            parse_grid(j["grid"], c);

        if (j.contains("price")) {
            const json& p = j["price"];
            check_keys(p, {"side", "rate_uncertain", "write_surface"}, "price");
            if (p.contains("side"))
                c.price.side = parse_side(p["side"], "price.side");
            if (p.contains("rate_uncertain"))
                c.price.rate_uncertain = boolean(p["rate_uncertain"], "price.rate_uncertain");
            if (p.contains("write_surface"))
                c.price.write_surface = boolean(p["write_surface"], "price.write_surface");
        }
        if (j.contains("hedge")) {
            const json& h = j["hedge"];
            check_keys(h, {"side", "vol_policy", "n_paths", "n_steps", "seed", "allow_clamp", "write_ledgers"},
                       "hedge");
            if (h.contains("side")) {
                const std::string s = text(h["side"], "hedge.side");
                if (s == "short_upper")
                    c.hedge.side = HedgeSide::ShortUpper;
                else if (s == "long_lower")
                    c.hedge.side = HedgeSide::LongLower;
                else
                    throw ConfigError("hedge.side must be \"short_upper\" or \"long_lower\"");
            }
            if (h.contains("vol_policy"))
                c.hedge.vol_policy = parse_vol_policy(h["vol_policy"], "hedge.vol_policy");
            if (h.contains("n_paths"))
                c.hedge.n_paths = count(h["n_paths"], "hedge.n_paths");
            if (h.contains("n_steps"))
                c.hedge.n_steps = count(h["n_steps"], "hedge.n_steps");
            if (h.contains("seed"))
                c.hedge.seed = count(h["seed"], "hedge.seed");
            if (h.contains("allow_clamp"))
                c.hedge.allow_clamp = boolean(h["allow_clamp"], "hedge.allow_clamp");
            if (h.contains("write_ledgers"))
                c.hedge.write_ledgers = boolean(h["write_ledgers"], "hedge.write_ledgers");
        }
        if (j.contains("simulate")) {
            const json& s = j["simulate"];
            check_keys(s, {"vol_policy", "drift_policy", "n_paths", "n_steps", "seed"}, "simulate");
            if (s.contains("vol_policy"))
                c.simulate.vol_policy = parse_vol_policy(s["vol_policy"], "simulate.vol_policy");
            if (s.contains("drift_policy"))
                c.simulate.drift_policy = parse_drift_policy(s["drift_policy"], "simulate.drift_policy");
            if (s.contains("n_paths"))
                c.simulate.n_paths = count(s["n_paths"], "simulate.n_paths");
            if (s.contains("n_steps"))
                c.simulate.n_steps = count(s["n_steps"], "simulate.n_steps");
            if (s.contains("seed"))
                c.simulate.seed = count(s["seed"], "simulate.seed");
        }
        if (j.contains("spread")) {
            check_keys(j["spread"], {"estimate_tolerance"}, "spread");
            if (j["spread"].contains("estimate_tolerance"))
                c.spread.estimate_tolerance = boolean(j["spread"]["estimate_tolerance"], "spread.estimate_tolerance");
        }
        if (j.contains("parity")) {
            const json& p = j["parity"];
            check_keys(p, {"strike", "side"}, "parity");
            if (p.contains("strike"))
                c.parity.strike = number(p["strike"], "parity.strike");
            if (p.contains("side")) {
                if (p["side"].is_string() && p["side"] == "both")
                    c.parity.sides = {Side::Upper, Side::Lower};
                else
                    c.parity.sides = {parse_side(p["side"], "parity.side")};
            }
        }
        if (j.contains("band_stats")) {
            check_keys(j["band_stats"], {"mu"}, "band_stats");
            if (j["band_stats"].contains("mu"))
                c.band_stats.mu = number(j["band_stats"]["mu"], "band_stats.mu");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        // Domain and parse errors from the library constructors are validation failures here.
        throw ConfigError(e.what());
    }
    return c;
}

/// Checks the blocks a command needs.
inline void validate_for(const RunConfig& c, Command cmd)
{
    auto need_payoff = [&] {
        if (!c.payoff)
            throw ConfigError(std::string("command ") + to_string(cmd) + " needs a payoff");
    };
    auto check_counts = [](std::size_t paths, std::size_t steps, const char* where) {
        if (paths < 1 || steps < 1)
            throw ConfigError(std::string(where) + ": n_paths and n_steps must be >= 1");
    };
    auto check_vol = [&](const VolPolicyConfig& v, const char* where) {
        try {
            if (v.kind == "constant")
                validate_policies(*c.market, ConstantVol{v.sigma}, RiskNeutralZero{});
            else if (v.kind == "two_regime")
                validate_policies(*c.market, TwoRegimeVol{v.sigma_a, v.sigma_b, v.switch_time}, RiskNeutralZero{});
        } catch (const std::exception& e) {
            throw ConfigError(std::string(where) + ": " + e.what());
        }
    };
    switch (cmd) {
    case Command::Price:
        need_payoff();
        if (c.payoff->path_dependent())
            throw ConfigError("payoff references fixings; use price-path-dep");
        if (c.price.rate_uncertain && !c.market->rates.rate_band())
            throw ConfigError("price.rate_uncertain needs market.rate_band");
        break;
    case Command::PricePathDep:
        need_payoff();
        if (!c.schedule)
            throw ConfigError("price-path-dep needs a schedule");
        if (c.payoff->n_fixings() > c.schedule->size())
            throw ConfigError("payoff references more fixings than the schedule has dates");
        break;
    case Command::Hedge:
        need_payoff();
        if (c.payoff->path_dependent())
            throw ConfigError("hedge needs a state-dependent payoff");
        check_counts(c.hedge.n_paths, c.hedge.n_steps, "hedge");
        check_vol(c.hedge.vol_policy, "hedge.vol_policy");
        break;
    case Command::Spread:
        need_payoff();
        if (c.payoff->path_dependent())
            throw ConfigError("spread needs a state-dependent payoff");
        break;
    case Command::Parity:
        if (!c.parity.strike || !(*c.parity.strike > 0.0))
            throw ConfigError("parity.strike must be given and positive");
        break;
    case Command::Simulate:
        check_counts(c.simulate.n_paths, c.simulate.n_steps, "simulate");
        if (c.simulate.vol_policy.kind == "bang_bang" && !c.payoff)
            throw ConfigError("simulate with a bang_bang policy needs a payoff to solve for");
        check_vol(c.simulate.vol_policy, "simulate.vol_policy");
        try {
            validate_policies(*c.market, RandomBandVol{}, c.simulate.drift_policy);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("simulate.drift_policy: ") + e.what());
        }
        break;
    case Command::BandStats:
        if (!c.band_stats.mu)
            throw ConfigError("band-stats needs band_stats.mu");
        break;
    }
}

inline nlohmann::json read_json_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

} // namespace uvm
