#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "uvm/payoff.hpp"

using namespace uvm;
using Catch::Approx;

namespace {

NodePtr num(double v) { return make_number(v); }
NodePtr spot() { return make_leaf(NodeKind::Spot); }

// Random tree over the whole grammar; literals are non-negative because the
// parser reads a leading minus as negation.
NodePtr random_tree(std::mt19937_64& rng, int depth)
{
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 5 : 16);
    std::uniform_real_distribution<double> val(0.0, 200.0);
    const int k = pick(rng);
    switch (k) {
    case 0: {
        // Mix integers, short decimals and full-precision doubles.
        const int style = std::uniform_int_distribution<int>(0, 2)(rng);
        const double v = val(rng);
        return num(style == 0 ? std::floor(v) : style == 1 ? std::round(v * 100) / 100 : v);
    }
    case 1: return spot();
    case 2: return make_leaf(NodeKind::Fixing, std::uniform_int_distribution<int>(1, 3)(rng));
    case 3: return make_leaf(NodeKind::Avg);
    case 4: return make_leaf(NodeKind::MaxFix);
    case 5: return make_leaf(NodeKind::MinFix);
    case 6: return make_node(NodeKind::Neg, {random_tree(rng, depth - 1)});
    case 7: return make_node(NodeKind::Abs, {random_tree(rng, depth - 1)});
    case 8: return make_node(NodeKind::Exp, {make_node(NodeKind::Div, {random_tree(rng, depth - 1), num(1000)})});
    case 9: return make_node(NodeKind::Log, {random_tree(rng, depth - 1)});
    case 10: return make_node(NodeKind::Add, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)});
    case 11: return make_node(NodeKind::Sub, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)});
    case 12: return make_node(NodeKind::Mul, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)});
    case 13: return make_node(NodeKind::Div, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)});
    case 14: return make_node(NodeKind::Pow, {random_tree(rng, depth - 1), num(std::uniform_int_distribution<int>(0, 3)(rng))});
    case 15:
    case 16: {
        std::vector<NodePtr> args;
        const int n = std::uniform_int_distribution<int>(2, 4)(rng);
        for (int i = 0; i < n; ++i)
            args.push_back(random_tree(rng, depth - 1));
        return make_node(k == 15 ? NodeKind::Max : NodeKind::Min, std::move(args));
    }
    }
    return spot();
}

// Value, or NaN when evaluation reports a domain error.
double try_eval(const Payoff& p, double s, const std::vector<double>& fix)
{
    try {
        return eval_payoff(p, s, fix);
    } catch (const EvalError&) {
        return std::nan("");
    }
}

} // namespace

TEST_CASE("grammar examples parse to the documented trees")
{
    const Payoff call = parse_payoff("max(S - 100, 0)");
    CHECK(call.n_fixings() == 0);
    CHECK_FALSE(call.path_dependent());
    CHECK(structurally_equal(call.ast(), *make_node(NodeKind::Max, {make_node(NodeKind::Sub, {spot(), num(100)}), num(0)})));
    CHECK(call.print() == "max((S - 100), 0)");

    const Payoff asian = parse_payoff("max(AVG - 95, 0)");
    CHECK(asian.uses_aggregates());
    CHECK(asian.path_dependent());
    CHECK(asian.statistic() == StatKind::RunningAvg);
    CHECK(structurally_equal(asian.ast(),
                             *make_node(NodeKind::Max, {make_node(NodeKind::Sub, {make_leaf(NodeKind::Avg), num(95)}), num(0)})));

    const Payoff fly = parse_payoff("max(S-90,0) - 2*max(S-100,0) + max(S-110,0)");
    auto leg = [](double k) { return make_node(NodeKind::Max, {make_node(NodeKind::Sub, {spot(), num(k)}), num(0)}); };
    const NodePtr expected = make_node(
        NodeKind::Add,
        {make_node(NodeKind::Sub, {leg(90), make_node(NodeKind::Mul, {num(2), leg(100)})}), leg(110)});
    CHECK(structurally_equal(fly.ast(), *expected));
    CHECK(fly.print() == "((max((S - 90), 0) - (2 * max((S - 100), 0))) + max((S - 110), 0))");
}

TEST_CASE("evaluation examples")
{
    CHECK(eval_payoff(parse_payoff("max(S - 100, 0)"), 110.0) == 10.0);
    const std::vector<double> fix{90.0, 100.0, 110.0};
    CHECK(eval_payoff(parse_payoff("max(AVG - 95, 0)"), 110.0, fix) == Approx(5.0).epsilon(1e-15));
    const Payoff fly = parse_payoff("max(S-90,0) - 2*max(S-100,0) + max(S-110,0)");
    CHECK(eval_payoff(fly, 100.0) == 10.0);
    // Hand expansion of the butterfly on either side of the body.
    CHECK(eval_payoff(fly, 95.0) == 5.0);
    CHECK(eval_payoff(fly, 105.0) == 5.0);
    CHECK(eval_payoff(fly, 120.0) == 0.0);
    CHECK(eval_payoff(fly, 80.0) == 0.0);
    CHECK(eval_payoff(parse_payoff("MAXF - MINF + S[2]"), 1.0, fix) == 120.0);
}

TEST_CASE("precedence and associativity")
{
    CHECK(eval_payoff(parse_payoff("-2^2"), 1.0) == -4.0);
    CHECK(eval_payoff(parse_payoff("2^3^2"), 1.0) == 512.0);
    CHECK(eval_payoff(parse_payoff("2^-1"), 1.0) == 0.5);
    CHECK(eval_payoff(parse_payoff("1 + 2 * 3"), 1.0) == 7.0);
    CHECK(eval_payoff(parse_payoff("(1 + 2) * 3"), 1.0) == 9.0);
    CHECK(eval_payoff(parse_payoff("8 / 4 / 2"), 1.0) == 1.0);
    CHECK(eval_payoff(parse_payoff("10 - 4 - 3"), 1.0) == 3.0);
    CHECK(eval_payoff(parse_payoff("-S * 2"), 3.0) == -6.0);
    CHECK(eval_payoff(parse_payoff("MAX(S, 1, 7)"), 3.0) == 7.0);
    CHECK(eval_payoff(parse_payoff("Min(S, 1, 7)"), 3.0) == 1.0);
    CHECK(eval_payoff(parse_payoff("1.5e2"), 1.0) == 150.0);
}

TEST_CASE("parse errors carry positions")
{
    CHECK_THROWS_AS(parse_payoff(""), ParseError);
    CHECK_THROWS_AS(parse_payoff("   "), ParseError);
    try {
        parse_payoff("max(S - 100, 0");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 14);
    }
    try {
        parse_payoff("foo(S)");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 0);
        CHECK(std::string(e.what()).find("unknown identifier") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_payoff("S[0]"), ParseError);
    CHECK_THROWS_AS(parse_payoff("S[-2]"), ParseError);
    CHECK_THROWS_AS(parse_payoff("S +"), ParseError);
    CHECK_THROWS_AS(parse_payoff("S 1"), ParseError);
    CHECK_THROWS_AS(parse_payoff("max(S)"), ParseError);
    CHECK_THROWS_AS(parse_payoff("log(S, 2)"), ParseError);
    CHECK_THROWS_AS(parse_payoff("s"), ParseError);
}

TEST_CASE("evaluation errors identify the node")
{
    try {
        eval_payoff(parse_payoff("log(S - 100)"), 90.0);
        FAIL("expected an evaluation error");
    } catch (const EvalError& e) {
        CHECK(std::string(e.what()).find("log((S - 100))") != std::string::npos);
    }
    CHECK_THROWS_AS(eval_payoff(parse_payoff("1 / (S - 100)"), 100.0), EvalError);
    CHECK_THROWS_AS(eval_payoff(parse_payoff("S[3]"), 100.0, std::vector<double>{1.0, 2.0}), EvalError);
    CHECK_THROWS_AS(eval_payoff(parse_payoff("AVG"), 100.0), EvalError);
}

TEST_CASE("fixing count is the largest index")
{
    CHECK(parse_payoff("S[2] + S[5] - S").n_fixings() == 5);
    CHECK(parse_payoff("MAXF").n_fixings() == 0);
    CHECK(parse_payoff("MAXF + AVG").aggregate_kind_count() == 2);
    CHECK_FALSE(parse_payoff("MAXF + AVG").statistic().has_value());
}

TEST_CASE("random round trip parse(print(ast))")
{
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> price(1.0, 250.0);
    int evaluated = 0;
    for (int c = 0; c < 1000; ++c) {
        const Payoff original(random_tree(rng, 4));
        const std::string text = original.print();
        const Payoff again = parse_payoff(text);
        INFO(text);
        REQUIRE(structurally_equal(original.ast(), again.ast()));
        REQUIRE(again.print() == text);
        for (int k = 0; k < 5; ++k) {
            const std::vector<double> fix{price(rng), price(rng), price(rng)};
            const double s = price(rng);
            const double a = try_eval(original, s, fix);
            const double b = try_eval(again, s, fix);
            CHECK(((std::isnan(a) && std::isnan(b)) || a == b));
            evaluated += std::isnan(a) ? 0 : 1;
        }
    }
    CHECK(evaluated > 2500);
}

TEST_CASE("call payoff is 1-Lipschitz")
{
    const Payoff call = parse_payoff("max(S - 100, 0)");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 300.0);
    for (int i = 0; i < 10000; ++i) {
        const double a = u(rng), b = u(rng);
        CHECK(std::abs(eval_payoff(call, a) - eval_payoff(call, b)) <= std::abs(a - b) + 1e-12);
    }
}

TEST_CASE("payoff sum builds an Add node")
{
    const Payoff s = parse_payoff("max(S - 100, 0)") + parse_payoff("max(100 - S, 0)");
    CHECK(s.ast().kind == NodeKind::Add);
    CHECK(eval_payoff(s, 90.0) == 10.0);
    CHECK(eval_payoff(s, 130.0) == 30.0);
}

TEST_CASE("monitoring schedule validation")
{
    CHECK_NOTHROW(MonitoringSchedule({0.25, 0.5, 1.0}, 1.0));
    CHECK_THROWS_AS(MonitoringSchedule({}, 1.0), DomainError);
    CHECK_THROWS_AS(MonitoringSchedule({0.5, 0.5, 1.0}, 1.0), DomainError);
    CHECK_THROWS_AS(MonitoringSchedule({0.0, 1.0}, 1.0), DomainError);
    CHECK_THROWS_AS(MonitoringSchedule({0.5, 0.9}, 1.0), DomainError);
}
