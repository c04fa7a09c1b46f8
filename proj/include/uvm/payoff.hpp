#pragma once

// Payoff expressions over the terminal price S, discrete fixings S[i] and
// the fixing aggregates AVG, MAXF, MINF.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'S' | 'S' '[' int ']' | 'AVG' | 'MAXF' | 'MINF'
//            | func '(' expr (',' expr)* ')' | '(' expr ')'
//   func    := abs | exp | log | max | min        (case-insensitive)

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "uvm/errors.hpp"

namespace uvm {

enum class NodeKind {
    Number,
    Spot,
    Fixing,
    Avg,
    MaxFix,
    MinFix,
    Neg,
    Abs,
    Exp,
    Log,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Max,
    Min,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0; // Number
    int index = 0;      // Fixing, 1-based
    std::vector<NodePtr> args;
};

inline NodePtr make_number(double v) { return std::make_shared<const Node>(Node{NodeKind::Number, v, 0, {}}); }
inline NodePtr make_leaf(NodeKind k, int index = 0) { return std::make_shared<const Node>(Node{k, 0.0, index, {}}); }
inline NodePtr make_node(NodeKind k, std::vector<NodePtr> args)
{
    return std::make_shared<const Node>(Node{k, 0.0, 0, std::move(args)});
}

inline std::string format_number(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Canonical form: fully parenthesised, lowercase function names.
inline std::string print_node(const Node& n)
{
    auto binary = [&](const char* op) {
        return "(" + print_node(*n.args[0]) + " " + op + " " + print_node(*n.args[1]) + ")";
    };
    auto call = [&](const char* name) {
        std::string out = std::string(name) + "(";
        for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i)
                out += ", ";
            out += print_node(*n.args[i]);
        }
        return out + ")";
    };
    switch (n.kind) {
    case NodeKind::Number: return format_number(n.value);
    case NodeKind::Spot: return "S";
    case NodeKind::Fixing: return "S[" + std::to_string(n.index) + "]";
    case NodeKind::Avg: return "AVG";
    case NodeKind::MaxFix: return "MAXF";
    case NodeKind::MinFix: return "MINF";
    case NodeKind::Neg: return "(-" + print_node(*n.args[0]) + ")";
    case NodeKind::Abs: return call("abs");
    case NodeKind::Exp: return call("exp");
    case NodeKind::Log: return call("log");
    case NodeKind::Add: return binary("+");
    case NodeKind::Sub: return binary("-");
    case NodeKind::Mul: return binary("*");
    case NodeKind::Div: return binary("/");
    case NodeKind::Pow: return binary("^");
    case NodeKind::Max: return call("max");
    case NodeKind::Min: return call("min");
    }
    return {};
}

inline bool structurally_equal(const Node& a, const Node& b)
{
    if (a.kind != b.kind || a.args.size() != b.args.size())
        return false;
    if (a.kind == NodeKind::Number && a.value != b.value)
        return false;
    if (a.kind == NodeKind::Fixing && a.index != b.index)
        return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!structurally_equal(*a.args[i], *b.args[i]))
            return false;
    return true;
}

/// Which fixing aggregate a payoff uses, for the path-dependent chain.
enum class StatKind { RunningAvg, RunningMax, RunningMin };

namespace detail {

class PayoffParser {
public:
    explicit PayoffParser(std::string_view text) : text_(text) {}

    NodePtr parse()
    {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("empty payoff expression", pos_);
        NodePtr root = expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        return root;
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            if (pos_ >= text_.size())
                throw ParseError(std::string("expected '") + c + "' but reached end of input", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    NodePtr expr()
    {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make_node(NodeKind::Add, {lhs, term()});
            else if (accept('-'))
                lhs = make_node(NodeKind::Sub, {lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make_node(NodeKind::Mul, {lhs, unary()});
            else if (accept('/'))
                lhs = make_node(NodeKind::Div, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary()
    {
        if (accept('-'))
            return make_node(NodeKind::Neg, {unary()});
        return power();
    }

    NodePtr power()
    {
        NodePtr base = primary();
        if (accept('^'))
            return make_node(NodeKind::Pow, {base, unary()});
        return base;
    }

    NodePtr primary()
    {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of input", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = expr();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    NodePtr number()
    {
        const std::size_t start = pos_;
        std::size_t end = pos_;
        auto digits = [&] {
            while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end])))
                ++end;
        };
        digits();
        if (end < text_.size() && text_[end] == '.') {
            ++end;
            digits();
        }
        if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
            std::size_t look = end + 1;
            if (look < text_.size() && (text_[look] == '+' || text_[look] == '-'))
                ++look;
            if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
                end = look;
                digits();
            }
        }
        double v = 0.0;
        auto res = std::from_chars(text_.data() + start, text_.data() + end, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + end || !std::isfinite(v))
            throw ParseError("malformed number", start);
        pos_ = end;
        return make_number(v);
    }

    NodePtr identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));

        if (name == "S") {
            if (accept('['))
                return fixing(start);
            return make_leaf(NodeKind::Spot);
        }
        if (name == "AVG")
            return make_leaf(NodeKind::Avg);
        if (name == "MAXF")
            return make_leaf(NodeKind::MaxFix);
        if (name == "MINF")
            return make_leaf(NodeKind::MinFix);

        std::string lower = name;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        NodeKind kind;
        bool nary = false;
        if (lower == "abs")
            kind = NodeKind::Abs;
        else if (lower == "exp")
            kind = NodeKind::Exp;
        else if (lower == "log")
            kind = NodeKind::Log;
        else if (lower == "max")
            kind = NodeKind::Max, nary = true;
        else if (lower == "min")
            kind = NodeKind::Min, nary = true;
        else
            throw ParseError("unknown identifier '" + name + "'", start);

        expect('(');
        std::vector<NodePtr> args{expr()};
        while (accept(','))
            args.push_back(expr());
        expect(')');
        if (!nary && args.size() != 1)
            throw ParseError(lower + " takes exactly one argument", start);
        if (nary && args.size() < 2)
            throw ParseError(lower + " takes at least two arguments", start);
        return make_node(kind, std::move(args));
    }

    NodePtr fixing(std::size_t start)
    {
        skip_ws();
        const std::size_t at = pos_;
        bool negative = false;
        if (pos_ < text_.size() && text_[pos_] == '-') {
            negative = true;
            ++pos_;
        }
        long idx = 0;
        auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), idx);
        if (res.ec != std::errc())
            throw ParseError("expected fixing index", at);
        pos_ = static_cast<std::size_t>(res.ptr - text_.data());
        if (negative || idx < 1)
            throw ParseError("fixing index must be >= 1 in S[" + std::string(negative ? "-" : "") +
                                 std::to_string(idx) + "]",
                             start);
        if (idx > 1'000'000)
            throw ParseError("fixing index too large", at);
        expect(']');
        return make_leaf(NodeKind::Fixing, static_cast<int>(idx));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

struct ValueSource {
    double terminal;
    std::span<const double> fixings;
    // When set, aggregates and the final fixing resolve from the summary
    // statistic instead of the fixing vector.
    std::optional<double> statistic;
    std::size_t total_fixings = 0;
};

inline double eval_node(const Node& n, const ValueSource& src)
{
    auto fail = [&](const std::string& why) -> double {
        throw EvalError(why + " in node " + print_node(n));
    };
    auto need_fixings = [&]() {
        if (src.fixings.empty())
            fail("aggregate requires fixings");
    };
    double out = 0.0;
    switch (n.kind) {
    case NodeKind::Number: return n.value;
    case NodeKind::Spot: return src.terminal;
    case NodeKind::Fixing:
        if (src.statistic) {
            if (static_cast<std::size_t>(n.index) == src.total_fixings)
                return src.terminal;
            fail("individual fixing not available from summary statistic");
        }
        if (static_cast<std::size_t>(n.index) > src.fixings.size())
            fail("fixing index exceeds supplied fixings");
        return src.fixings[static_cast<std::size_t>(n.index) - 1];
    case NodeKind::Avg:
        if (src.statistic)
            return *src.statistic;
        need_fixings();
        return std::accumulate(src.fixings.begin(), src.fixings.end(), 0.0) /
               static_cast<double>(src.fixings.size());
    case NodeKind::MaxFix:
        if (src.statistic)
            return *src.statistic;
        need_fixings();
        return *std::max_element(src.fixings.begin(), src.fixings.end());
    case NodeKind::MinFix:
        if (src.statistic)
            return *src.statistic;
        need_fixings();
        return *std::min_element(src.fixings.begin(), src.fixings.end());
    case NodeKind::Neg: return -eval_node(*n.args[0], src);
    case NodeKind::Abs: return std::abs(eval_node(*n.args[0], src));
    case NodeKind::Exp: out = std::exp(eval_node(*n.args[0], src)); break;
    case NodeKind::Log: {
        const double a = eval_node(*n.args[0], src);
        if (!(a > 0.0))
            fail("log of non-positive value");
        return std::log(a);
    }
    case NodeKind::Add: out = eval_node(*n.args[0], src) + eval_node(*n.args[1], src); break;
    case NodeKind::Sub: out = eval_node(*n.args[0], src) - eval_node(*n.args[1], src); break;
    case NodeKind::Mul: out = eval_node(*n.args[0], src) * eval_node(*n.args[1], src); break;
    case NodeKind::Div: {
        const double num = eval_node(*n.args[0], src);
        const double den = eval_node(*n.args[1], src);
        if (den == 0.0)
            fail("division by zero");
        out = num / den;
        break;
    }
    case NodeKind::Pow: out = std::pow(eval_node(*n.args[0], src), eval_node(*n.args[1], src)); break;
    case NodeKind::Max:
    case NodeKind::Min: {
        out = eval_node(*n.args[0], src);
        for (std::size_t i = 1; i < n.args.size(); ++i) {
            const double v = eval_node(*n.args[i], src);
            out = n.kind == NodeKind::Max ? std::max(out, v) : std::min(out, v);
        }
        return out;
    }
    }
    if (!std::isfinite(out))
        fail("non-finite result");
    return out;
}

inline void scan(const Node& n, int& max_index, bool& aggregates, std::vector<NodeKind>& stats)
{
    switch (n.kind) {
    case NodeKind::Fixing: max_index = std::max(max_index, n.index); break;
    case NodeKind::Avg:
    case NodeKind::MaxFix:
    case NodeKind::MinFix:
        aggregates = true;
        if (std::find(stats.begin(), stats.end(), n.kind) == stats.end())
            stats.push_back(n.kind);
        break;
    default: break;
    }
    for (const auto& a : n.args)
        scan(*a, max_index, aggregates, stats);
}

} // namespace detail

/// Parsed, immutable payoff expression.
class Payoff {
public:
    explicit Payoff(NodePtr root, std::string source = {}) : root_(std::move(root)), source_(std::move(source))
    {
        detail::scan(*root_, n_fixings_, uses_aggregates_, aggregate_kinds_);
        if (source_.empty())
            source_ = print_node(*root_);
    }

    const Node& ast() const noexcept { return *root_; }
    NodePtr root() const noexcept { return root_; }
    std::size_t n_fixings() const noexcept { return static_cast<std::size_t>(n_fixings_); }
    bool uses_aggregates() const noexcept { return uses_aggregates_; }
    bool path_dependent() const noexcept { return n_fixings_ > 0 || uses_aggregates_; }
    const std::string& source_text() const noexcept { return source_; }
    std::string print() const { return print_node(*root_); }

    /// Single aggregate kind used, if exactly one.
    std::optional<StatKind> statistic() const
    {
        if (aggregate_kinds_.size() != 1)
            return std::nullopt;
        switch (aggregate_kinds_.front()) {
        case NodeKind::Avg: return StatKind::RunningAvg;
        case NodeKind::MaxFix: return StatKind::RunningMax;
        default: return StatKind::RunningMin;
        }
    }
    std::size_t aggregate_kind_count() const noexcept { return aggregate_kinds_.size(); }

    /// Sum of two claims as one expression tree.
    friend Payoff operator+(const Payoff& a, const Payoff& b)
    {
        return Payoff(make_node(NodeKind::Add, {a.root_, b.root_}));
    }

private:
    NodePtr root_;
    std::string source_;
    int n_fixings_ = 0;
    bool uses_aggregates_ = false;
    std::vector<NodeKind> aggregate_kinds_;
};

inline Payoff parse_payoff(std::string_view text)
{
    return Payoff(detail::PayoffParser(text).parse(), std::string(text));
}

/// Evaluates with the full fixing vector; AVG/MAXF/MINF aggregate over it.
inline double eval_payoff(const Payoff& p, double terminal, std::span<const double> fixings = {})
{
    if (fixings.size() < p.n_fixings())
        throw EvalError("payoff references S[" + std::to_string(p.n_fixings()) + "] but only " +
                        std::to_string(fixings.size()) + " fixings supplied");
    return detail::eval_node(p.ast(), {terminal, fixings, std::nullopt, fixings.size()});
}

/// Evaluates with aggregates resolved from a summary statistic; only the
/// final fixing (index total_fixings) may be referenced individually.
inline double eval_payoff_with_statistic(const Payoff& p, double terminal, double statistic,
                                         std::size_t total_fixings)
{
    return detail::eval_node(p.ast(), {terminal, {}, statistic, total_fixings});
}

/// Fixing dates 0 < t_1 < ... < t_N = T.
class MonitoringSchedule {
public:
    MonitoringSchedule(std::vector<double> dates, double maturity) : dates_(std::move(dates))
    {
        if (dates_.empty())
            throw DomainError("monitoring schedule must contain at least one date");
        for (std::size_t i = 0; i < dates_.size(); ++i) {
            if (!(dates_[i] > (i == 0 ? 0.0 : dates_[i - 1])))
                throw DomainError("monitoring dates must be strictly increasing and positive");
        }
        if (std::abs(dates_.back() - maturity) > 1e-12 * std::max(1.0, maturity))
            throw DomainError("last monitoring date must equal maturity");
        dates_.back() = maturity;
    }

    const std::vector<double>& dates() const noexcept { return dates_; }
    std::size_t size() const noexcept { return dates_.size(); }

private:
    std::vector<double> dates_;
};

} // namespace uvm
