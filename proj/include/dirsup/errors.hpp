#pragma once

#include <stdexcept>
#include <string>

namespace dirsup {

// Every failure raised by the library derives from std::runtime_error or
// std::invalid_argument so callers can catch broadly or by kind.

struct invalid_argument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A prime factor (or requested range) lies beyond the sieved table.
struct table_too_small : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An enumeration would exceed its configured output cap.
struct resource_limit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An Euler factor (1 - lambda/p)^{-1} with lambda >= p.
struct divergent_factor : std::domain_error {
    using std::domain_error::domain_error;
};

// custom_table weight queried outside its declared support.
struct undefined_weight : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// A structural condition required by a bound does not hold.
struct condition_violated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dirsup
