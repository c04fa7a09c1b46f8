#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uvm {

/// Invalid inputs: bad bands, times outside a curve, malformed grids.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Numerical failure inside a solver (stability, non-convergence).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position))
        , position_(position)
    {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Payoff evaluation failure; the message names the offending node.
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Payoff shape that the path-dependent chain cannot reduce to one statistic.
class UnsupportedPayoff : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace uvm
