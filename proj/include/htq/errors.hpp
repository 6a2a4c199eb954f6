#pragma once

#include <stdexcept>
#include <string>

namespace htq {

// Bad user input: malformed config, infeasible parameters, dimension mismatch.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Instance exceeds the enumeration scale this toolkit supports.
struct unsupported_scale_error : std::runtime_error {
    explicit unsupported_scale_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A pathwise invariant failed during simulation. Always a bug, never data.
struct invariant_violation : std::runtime_error {
    long long slot;
    invariant_violation(long long slot_, const std::string& msg)
        : std::runtime_error("slot " + std::to_string(slot_) + ": " + msg), slot(slot_) {}
};

}  // namespace htq
