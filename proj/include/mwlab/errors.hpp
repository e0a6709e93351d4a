#pragma once

#include <stdexcept>
#include <string>

namespace mwlab {

// Invalid experiment setup: bad dimensions, unachievable rates, malformed
// config files. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Mathematical precondition violated (rate vector outside the region an
// analytic formula covers, degenerate denominators).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Violated sequencing contract at run time, e.g. out-of-order step records.
class SequenceError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace mwlab
